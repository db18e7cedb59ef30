//! Simplicial homology of the surface mesh over a prime field, and the
//! Morse-counting comparison it feeds.
//!
//! Betti numbers come from exact ranks of the two boundary matrices,
//! `b₀ = V − rank ∂₁`, `b₁ = (E − rank ∂₁) − rank ∂₂`, `b₂ = F − rank ∂₂`,
//! computed by sparse column reduction over GF(p) — integer arithmetic
//! throughout, no floating point. The Poincaré polynomial collects them as
//! coefficients; its value at 1 is the multiplicity target for the solution
//! count. `morse_relation_check` then compares a multiset of Morse indices
//! from a solve against `t·P_t(M)`: the surplus `Z(t)` must have
//! nonnegative coefficients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::SurfaceMesh;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("field characteristic {0} is not prime")]
    NonPrimeCharacteristic(u64),
    #[error("Morse index 0 in the band: every low-energy critical point must have index ≥ 1")]
    MorseIndexZero,
}

/// `P_t(M) = Σ dim H_k(M) t^k` over the chosen field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoincarePolynomial {
    /// `coeffs[k] = dim H_k`.
    pub coeffs: Vec<usize>,
    pub field_char: u64,
}

impl PoincarePolynomial {
    /// `P₁(M)`: the sum of the Betti numbers.
    pub fn p1(&self) -> usize {
        self.coeffs.iter().sum()
    }

    pub fn euler(&self) -> i64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat: a^(p-2) mod p
    let mut base = a % p;
    let mut e = p - 2;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

/// Sparse columns over GF(p), each sorted by row with nonzero entries only.
struct GfColumns {
    p: u64,
    cols: Vec<Vec<(usize, u64)>>,
}

impl GfColumns {
    /// `a − f·b` over GF(p), merging sorted columns and dropping zeros.
    fn sub_scaled(&self, a: &[(usize, u64)], b: &[(usize, u64)], f: u64) -> Vec<(usize, u64)> {
        let p = self.p;
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&(ra, va)), Some(&(rb, vb))) => {
                    if ra < rb {
                        i += 1;
                        (ra, va)
                    } else if rb < ra {
                        j += 1;
                        (rb, (p - f * vb % p) % p)
                    } else {
                        i += 1;
                        j += 1;
                        (ra, (va + p - f * vb % p) % p)
                    }
                }
                (Some(&(ra, va)), None) => {
                    i += 1;
                    (ra, va)
                }
                (None, Some(&(rb, vb))) => {
                    j += 1;
                    (rb, (p - f * vb % p) % p)
                }
                (None, None) => unreachable!(),
            };
            if next.1 % p != 0 {
                out.push((next.0, next.1 % p));
            }
        }
        out
    }

    /// Rank by column reduction on the lowest nonzero row of each column.
    fn rank(mut self, nrows: usize) -> usize {
        let mut pivot_col: Vec<Option<usize>> = vec![None; nrows];
        let ncols = self.cols.len();
        for j in 0..ncols {
            loop {
                let Some(&(low, coeff)) = self.cols[j].last() else {
                    break;
                };
                match pivot_col[low] {
                    None => {
                        pivot_col[low] = Some(j);
                        break;
                    }
                    Some(k) => {
                        let lead_k = self.cols[k].last().expect("pivot column nonzero").1;
                        let f = coeff * inv_mod(lead_k, self.p) % self.p;
                        self.cols[j] = self.sub_scaled(&self.cols[j], &self.cols[k].clone(), f);
                    }
                }
            }
        }
        pivot_col.iter().filter(|c| c.is_some()).count()
    }
}

/// Column of `∂₁` for an edge `(u, v)` with `u < v`: `v − u`.
fn boundary_1(mesh: &SurfaceMesh, p: u64) -> GfColumns {
    let cols = mesh
        .edges()
        .iter()
        .map(|&[u, v]| {
            let (lo, hi) = (u.min(v), u.max(v));
            vec![(lo, p - 1), (hi, 1)]
        })
        .collect();
    GfColumns { p, cols }
}

/// Column of `∂₂` for a face `(a, b, c)`: its three directed edges against
/// the stored (min, max) edge orientation.
fn boundary_2(mesh: &SurfaceMesh, p: u64) -> GfColumns {
    use std::collections::HashMap;
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, &[u, v]) in mesh.edges().iter().enumerate() {
        edge_index.insert((u.min(v), u.max(v)), e);
    }
    let cols = mesh
        .faces()
        .iter()
        .map(|&[a, b, c]| {
            let mut col: Vec<(usize, u64)> = [(a, b), (b, c), (c, a)]
                .iter()
                .map(|&(x, y)| {
                    let e = edge_index[&(x.min(y), x.max(y))];
                    let sign = if x < y { 1 } else { p - 1 };
                    (e, sign)
                })
                .collect();
            col.sort_by_key(|&(e, _)| e);
            col
        })
        .collect();
    GfColumns { p, cols }
}

/// Betti numbers over GF(char) from exact boundary-matrix ranks.
pub fn betti(mesh: &SurfaceMesh, field_char: u64) -> Result<PoincarePolynomial, TopologyError> {
    if !is_prime(field_char) {
        return Err(TopologyError::NonPrimeCharacteristic(field_char));
    }
    let v = mesh.n_vertices();
    let e = mesh.n_edges();
    let f = mesh.n_faces();
    let rank_d1 = boundary_1(mesh, field_char).rank(v);
    let rank_d2 = boundary_2(mesh, field_char).rank(e);
    let b0 = v - rank_d1;
    let b1 = e - rank_d1 - rank_d2;
    let b2 = f - rank_d2;
    Ok(PoincarePolynomial {
        coeffs: vec![b0, b1, b2],
        field_char,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MorseCheck {
    /// `Z(t) = Σ t^{μ−1} − P_t(M)`, signed.
    pub z_coeffs: Vec<i64>,
    /// All coefficients nonnegative, as the Morse relations demand.
    pub pass: bool,
}

/// Compares the Morse indices of the critical points found in the
/// low-energy band against the Poincaré polynomial. The band contributes
/// `t·P_t(M) + t²·Q(t)`, so after dividing by `t` every solution of index μ
/// adds `t^{μ−1}` and the surplus over `P_t(M)` must be nonnegative,
/// coefficient by coefficient. Index 0 cannot be divided down and signals a
/// solution that does not belong to the band.
pub fn morse_relation_check(
    indices: &[usize],
    poly: &PoincarePolynomial,
) -> Result<MorseCheck, TopologyError> {
    if indices.contains(&0) {
        return Err(TopologyError::MorseIndexZero);
    }
    let top = indices
        .iter()
        .map(|&m| m - 1)
        .max()
        .unwrap_or(0)
        .max(poly.coeffs.len().saturating_sub(1));
    let mut z = vec![0i64; top + 1];
    for &m in indices {
        z[m - 1] += 1;
    }
    for (k, &c) in poly.coeffs.iter().enumerate() {
        z[k] -= c as i64;
    }
    let pass = z.iter().all(|&c| c >= 0);
    Ok(MorseCheck { z_coeffs: z, pass })
}
