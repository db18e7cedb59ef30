//! Per-triangle metric fields `g = g₀ + h` on an embedded surface.
//!
//! Each triangle carries an orthonormal chart from the embedding (so the
//! induced metric is the identity there) and a constant 2×2 SPD matrix
//! sampled at the barycenter. Perturbations `h` are smooth ambient
//! symmetric 2-tensor fields — low-order coordinate monomials times
//! constant symmetric matrices — pulled back to the triangle charts.
//!
//! The norm `‖h‖_k` is the maximum over triangles of the summed absolute
//! chart components and their derivatives up to order `k`. Because the
//! charts are affine, the component functions extend to the whole chart
//! plane; the derivatives come from a quadratic least-squares fit of that
//! extension sampled at the two-ring neighbour barycenters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mesh::SurfaceMesh;
use crate::linalg::solve_dense_small;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric is not positive definite on face {face} (min eigenvalue {min_eig:.3e})")]
    NotSpd { face: usize, min_eig: f64 },
    #[error("perturbation is defined in ambient dimension {tensor} but the mesh lives in {mesh}")]
    AmbientMismatch { tensor: usize, mesh: usize },
    #[error("derivative order {0} unsupported (k must be 0, 1 or 2)")]
    UnsupportedOrder(u32),
    #[error("least-squares stencil for face {0} is rank-deficient")]
    DegenerateStencil(usize),
}

/// One term of a perturbation: `coeff · x^powers · (E_{row,col} + E_{col,row})/…`
/// — a coordinate monomial times a constant symmetric ambient matrix with a
/// single independent entry at `(row, col)`, `row ≤ col`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationMode {
    pub powers: Vec<u32>,
    pub row: usize,
    pub col: usize,
    pub coeff: f64,
}

/// Smooth symmetric 2-tensor field on the embedding, used as the metric
/// perturbation `h`. Serializable so runs can be reproduced exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTensor {
    pub ambient_dim: usize,
    /// differentiability order tracked by `rho` (defaults to 2)
    pub k: u32,
    /// target norm bound: `tensor_norm(·, mesh, k) ≤ rho` on the sampling mesh
    pub rho: f64,
    pub seed: u64,
    pub modes: Vec<PerturbationMode>,
}

impl PerturbationTensor {
    pub fn zero(ambient_dim: usize) -> Self {
        PerturbationTensor {
            ambient_dim,
            k: 2,
            rho: 0.0,
            seed: 0,
            modes: Vec::new(),
        }
    }

    pub fn from_modes(ambient_dim: usize, k: u32, rho: f64, modes: Vec<PerturbationMode>) -> Self {
        for m in &modes {
            assert!(m.row <= m.col && m.col < ambient_dim, "mode indices out of range");
            assert_eq!(m.powers.len(), ambient_dim, "mode powers must match ambient dim");
        }
        PerturbationTensor {
            ambient_dim,
            k,
            rho,
            seed: 0,
            modes,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Ambient symmetric matrix `H(x)`, written into `out` (row-major N×N).
    pub fn eval_ambient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.ambient_dim;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n * n);
        out.fill(0.0);
        for m in &self.modes {
            let mut mono = m.coeff;
            for (d, &pw) in m.powers.iter().enumerate() {
                for _ in 0..pw {
                    mono *= x[d];
                }
            }
            out[m.row * n + m.col] += mono;
            if m.row != m.col {
                out[m.col * n + m.row] += mono;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.modes {
            m.coeff *= s;
        }
    }
}

/// Per-triangle metric data: chart coordinates of the triangle corners,
/// the 2×2 metric in that chart, and the orthonormal frame spanning the
/// triangle plane in ambient coordinates.
#[derive(Debug, Clone)]
pub struct MetricField {
    ambient_dim: usize,
    /// chart coordinates of the three corners, per face
    charts: Vec<[[f64; 2]; 3]>,
    /// (g11, g12, g22) per face
    g: Vec<[f64; 3]>,
    sqrt_det: Vec<f64>,
    /// chart areas (Euclidean area of the chart triangle), per face
    chart_area: Vec<f64>,
    /// orthonormal frame per face: 2·N floats, e1 then e2
    frames: Vec<f64>,
    perturbed: bool,
    equivalence: (f64, f64),
}

impl MetricField {
    /// Metric induced by the embedding: identity in every triangle chart.
    pub fn induced(mesh: &SurfaceMesh) -> Self {
        Self::assemble(mesh, None).expect("induced metric is always SPD")
    }

    /// Metric `g₀ + h`; fails if any triangle matrix loses positivity.
    pub fn perturbed(mesh: &SurfaceMesh, h: &PerturbationTensor) -> Result<Self, MetricError> {
        if h.ambient_dim != mesh.ambient_dim() {
            return Err(MetricError::AmbientMismatch {
                tensor: h.ambient_dim,
                mesh: mesh.ambient_dim(),
            });
        }
        if h.is_zero() {
            let mut field = Self::assemble(mesh, None).expect("induced metric is always SPD");
            field.perturbed = true;
            return Ok(field);
        }
        Self::assemble(mesh, Some(h))
    }

    fn assemble(mesh: &SurfaceMesh, h: Option<&PerturbationTensor>) -> Result<Self, MetricError> {
        let nd = mesh.ambient_dim();
        let nf = mesh.n_faces();
        let mut charts = Vec::with_capacity(nf);
        let mut g = Vec::with_capacity(nf);
        let mut sqrt_det = Vec::with_capacity(nf);
        let mut chart_area = Vec::with_capacity(nf);
        let mut frames = vec![0.0; 2 * nd * nf];
        let mut hmat = vec![0.0; nd * nd];
        let mut c_min = f64::INFINITY;
        let mut c_max = 0.0f64;

        for f in 0..nf {
            let [a, b, c] = mesh.faces()[f];
            let (pa, pb, pc) = (mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
            let mut e1 = vec![0.0; nd];
            let mut raw2 = vec![0.0; nd];
            for d in 0..nd {
                e1[d] = pb[d] - pa[d];
                raw2[d] = pc[d] - pa[d];
            }
            let len1 = norm(&e1);
            for v in &mut e1 {
                *v /= len1;
            }
            let proj = dot(&raw2, &e1);
            let mut e2: Vec<f64> = (0..nd).map(|d| raw2[d] - proj * e1[d]).collect();
            let len2 = norm(&e2);
            for v in &mut e2 {
                *v /= len2;
            }
            charts.push([[0.0, 0.0], [len1, 0.0], [proj, len2]]);
            chart_area.push(0.5 * len1 * len2);
            frames[f * 2 * nd..f * 2 * nd + nd].copy_from_slice(&e1);
            frames[f * 2 * nd + nd..(f + 1) * 2 * nd].copy_from_slice(&e2);

            let gf = match h {
                None => [1.0, 0.0, 1.0],
                Some(h) => {
                    let bary = mesh.face_barycenter(f);
                    h.eval_ambient(&bary, &mut hmat);
                    let h11 = quad_form_amb(&hmat, &e1, &e1, nd);
                    let h12 = quad_form_amb(&hmat, &e1, &e2, nd);
                    let h22 = quad_form_amb(&hmat, &e2, &e2, nd);
                    [1.0 + h11, h12, 1.0 + h22]
                }
            };
            let tr = gf[0] + gf[2];
            let det = gf[0] * gf[2] - gf[1] * gf[1];
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let (lo, hi) = (tr / 2.0 - disc, tr / 2.0 + disc);
            if lo <= 1e-10 {
                return Err(MetricError::NotSpd { face: f, min_eig: lo });
            }
            c_min = c_min.min(lo);
            c_max = c_max.max(hi);
            g.push(gf);
            sqrt_det.push(det.sqrt());
        }

        Ok(MetricField {
            ambient_dim: nd,
            charts,
            g,
            sqrt_det,
            chart_area,
            frames,
            perturbed: h.is_some(),
            equivalence: (c_min, c_max),
        })
    }

    pub fn is_perturbed(&self) -> bool {
        self.perturbed
    }

    /// `(c, C)` with `c|ξ|² ≤ g(ξ,ξ) ≤ C|ξ|²` over all triangle charts.
    pub fn equivalence_constants(&self) -> (f64, f64) {
        self.equivalence
    }

    /// Chart coordinates of the three corners of face `f`.
    pub fn chart(&self, f: usize) -> &[[f64; 2]; 3] {
        &self.charts[f]
    }

    /// `(g11, g12, g22)` of face `f` in its chart.
    pub fn face_metric(&self, f: usize) -> [f64; 3] {
        self.g[f]
    }

    /// Orthonormal frame `(e1, e2)` of face `f` in ambient coordinates.
    pub fn frame(&self, f: usize) -> (&[f64], &[f64]) {
        let nd = self.ambient_dim;
        let base = f * 2 * nd;
        (&self.frames[base..base + nd], &self.frames[base + nd..base + 2 * nd])
    }

    /// Metric area of face `f`: `√det g · chart area`.
    pub fn face_area(&self, f: usize) -> f64 {
        self.sqrt_det[f] * self.chart_area[f]
    }

    /// Metric length of the chart segment between corners `i` and `j` of
    /// face `f`.
    pub fn edge_length(&self, f: usize, i: usize, j: usize) -> f64 {
        let ch = &self.charts[f];
        let dx = ch[j][0] - ch[i][0];
        let dy = ch[j][1] - ch[i][1];
        let [g11, g12, g22] = self.g[f];
        (g11 * dx * dx + 2.0 * g12 * dx * dy + g22 * dy * dy).sqrt()
    }

    /// Integral of a per-vertex function: linear elements with the metric
    /// area factor, exact for piecewise-linear integrands.
    pub fn integrate(&self, mesh: &SurfaceMesh, values: &[f64]) -> f64 {
        assert_eq!(values.len(), mesh.n_vertices());
        let mut acc = 0.0;
        for (f, face) in mesh.faces().iter().enumerate() {
            let s = values[face[0]] + values[face[1]] + values[face[2]];
            acc += self.face_area(f) * s / 3.0;
        }
        acc
    }

    /// Total metric area of the surface.
    pub fn total_volume(&self, mesh: &SurfaceMesh) -> f64 {
        (0..mesh.n_faces()).map(|f| self.face_area(f)).sum()
    }

    /// Pulls the perturbation back to the chart of face `f` at its
    /// barycenter: returns `(h11, h12, h22)`.
    fn pullback(&self, mesh: &SurfaceMesh, h: &PerturbationTensor, f: usize, hmat: &mut [f64]) -> [f64; 3] {
        let nd = self.ambient_dim;
        let bary = mesh.face_barycenter(f);
        h.eval_ambient(&bary, hmat);
        let (e1, e2) = self.frame(f);
        [
            quad_form_amb(hmat, e1, e1, nd),
            quad_form_amb(hmat, e1, e2, nd),
            quad_form_amb(hmat, e2, e2, nd),
        ]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn quad_form_amb(m: &[f64], u: &[f64], v: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += u[i] * m[i * n + j] * v[j];
        }
    }
    acc
}

/// Faces within two adjacency rings of `f` (sharing a vertex with `f`, or
/// with such a face), including `f` itself.
fn two_ring(mesh: &SurfaceMesh, f: usize) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    seen.insert(f);
    let mut ring1 = Vec::new();
    for &v in &mesh.faces()[f] {
        for &g in mesh.vertex_faces(v) {
            if seen.insert(g) {
                ring1.push(g);
            }
        }
    }
    let mut out: Vec<usize> = seen.iter().copied().collect();
    for g in ring1 {
        for &v in &mesh.faces()[g] {
            for &k in mesh.vertex_faces(v) {
                if seen.insert(k) {
                    out.push(k);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Discrete `‖h‖_k`: per face, the sum of `|∂^β h_ij|` over chart components
/// `i ≤ j` and multi-indices `|β| ≤ k`, maximized over faces. Each chart is
/// the affine triangle plane, so its component field extends to the whole
/// plane; derivatives come from a quadratic least-squares fit of that field
/// sampled at the projected two-ring barycenters.
pub fn tensor_norm(h: &PerturbationTensor, mesh: &SurfaceMesh, k: u32) -> Result<f64, MetricError> {
    if k > 2 {
        return Err(MetricError::UnsupportedOrder(k));
    }
    if h.ambient_dim != mesh.ambient_dim() {
        return Err(MetricError::AmbientMismatch {
            tensor: h.ambient_dim,
            mesh: mesh.ambient_dim(),
        });
    }
    if h.is_zero() {
        return Ok(0.0);
    }
    let nd = mesh.ambient_dim();
    let field = MetricField::induced(mesh);
    let mut hmat = vec![0.0; nd * nd];
    let mut pos = vec![0.0; nd];

    // local components per face (the order-0 term)
    let comps: Vec<[f64; 3]> = (0..mesh.n_faces())
        .map(|f| field.pullback(mesh, h, f, &mut hmat))
        .collect();
    let barys: Vec<Vec<f64>> = (0..mesh.n_faces()).map(|f| mesh.face_barycenter(f)).collect();

    let mut worst = 0.0f64;
    for f in 0..mesh.n_faces() {
        let mut total: f64 = comps[f].iter().map(|c| c.abs()).sum();
        if k > 0 {
            let ring = two_ring(mesh, f);
            if ring.len() < 6 {
                return Err(MetricError::DegenerateStencil(f));
            }
            let frame_f = field.frame(f);
            // fit h_ij(y) ≈ c0 + c1 y1 + c2 y2 + c3 y1² + c4 y1 y2 + c5 y2²
            // over ring samples; solve the shared normal matrix once and
            // back-substitute each component
            let mut ata = [0.0f64; 36];
            let mut atb = [[0.0f64; 6]; 3];
            for &gf in &ring {
                let y1 = sub_dot(&barys[gf], &barys[f], frame_f.0);
                let y2 = sub_dot(&barys[gf], &barys[f], frame_f.1);
                let row = [1.0, y1, y2, y1 * y1, y1 * y2, y2 * y2];
                // sample the ambient tensor at the in-plane position of the
                // stencil point, in the reference frame
                for d in 0..nd {
                    pos[d] = barys[f][d] + y1 * frame_f.0[d] + y2 * frame_f.1[d];
                }
                h.eval_ambient(&pos, &mut hmat);
                let t11 = quad_form_amb(&hmat, frame_f.0, frame_f.0, nd);
                let t12 = quad_form_amb(&hmat, frame_f.0, frame_f.1, nd);
                let t22 = quad_form_amb(&hmat, frame_f.1, frame_f.1, nd);
                for a in 0..6 {
                    for b in 0..6 {
                        ata[a * 6 + b] += row[a] * row[b];
                    }
                    atb[0][a] += row[a] * t11;
                    atb[1][a] += row[a] * t12;
                    atb[2][a] += row[a] * t22;
                }
            }
            // tiny ridge keeps the normal matrix solvable on highly
            // symmetric stencils (samples on a common conic)
            let ridge = 1e-10 * (0..6).map(|a| ata[a * 6 + a]).fold(0.0f64, f64::max);
            for a in 0..6 {
                ata[a * 6 + a] += ridge;
            }
            for comp in 0..3 {
                let coef = solve_dense_small(ata.to_vec(), atb[comp].to_vec())
                    .ok_or(MetricError::DegenerateStencil(f))?;
                total += coef[1].abs() + coef[2].abs();
                if k == 2 {
                    total += (2.0 * coef[3]).abs() + coef[4].abs() + (2.0 * coef[5]).abs();
                }
            }
        }
        worst = worst.max(total);
    }
    Ok(worst)
}

fn sub_dot(a: &[f64], b: &[f64], dir: &[f64]) -> f64 {
    a.iter().zip(b).zip(dir).map(|((x, y), d)| (x - y) * d).sum()
}

/// Draws a random smooth perturbation with `tensor_norm(h, mesh, 2) = rho`
/// exactly (up to rounding, never above), deterministic per seed: standard
/// normal coefficients on every monomial mode of total degree ≤ 2, rescaled
/// post hoc. Fails only if positivity of `g₀ + h` is lost, which cannot
/// happen for `rho < 1` since `‖h‖₀ ≤ ‖h‖₂`.
pub fn sample_perturbation(mesh: &SurfaceMesh, rho: f64, seed: u64) -> Result<PerturbationTensor, MetricError> {
    assert!(rho >= 0.0, "rho must be nonnegative");
    let nd = mesh.ambient_dim();
    if rho == 0.0 {
        return Ok(PerturbationTensor::zero(nd));
    }

    let mut monomials: Vec<Vec<u32>> = vec![vec![0; nd]];
    for d in 0..nd {
        let mut p = vec![0; nd];
        p[d] = 1;
        monomials.push(p);
    }
    for d in 0..nd {
        for e in d..nd {
            let mut p = vec![0; nd];
            p[d] += 1;
            p[e] += 1;
            monomials.push(p);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for powers in &monomials {
        for row in 0..nd {
            for col in row..nd {
                let coeff: f64 = StandardNormal.sample(&mut rng);
                modes.push(PerturbationMode {
                    powers: powers.clone(),
                    row,
                    col,
                    coeff,
                });
            }
        }
    }

    let mut tensor = PerturbationTensor {
        ambient_dim: nd,
        k: 2,
        rho,
        seed,
        modes,
    };
    let raw = tensor_norm(&tensor, mesh, 2)?;
    assert!(raw > 0.0, "random draw produced a zero tensor");
    tensor.scale(rho / raw);
    // absolute-homogeneity is exact in real arithmetic; guard the ≤ rho
    // invariant against the last rounding bit
    let check = tensor_norm(&tensor, mesh, 2)?;
    if check > rho {
        tensor.scale(rho / check);
    }

    // SPD sanity: construct the perturbed metric once
    MetricField::perturbed(mesh, &tensor)?;
    Ok(tensor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::mesh::{flat_torus, icosphere, octahedron};
    use approx::assert_relative_eq;

    #[test]
    fn induced_identity_and_areas() {
        let mesh = octahedron();
        let g = MetricField::induced(&mesh);
        for f in 0..mesh.n_faces() {
            assert_eq!(g.face_metric(f), [1.0, 0.0, 1.0]);
            assert_relative_eq!(g.face_area(f), mesh.face_area(f), max_relative = 1e-14);
        }
        assert_eq!(g.equivalence_constants(), (1.0, 1.0));
    }

    #[test]
    fn flat_torus_volume_is_one() {
        let mesh = flat_torus(8);
        let g = MetricField::induced(&mesh);
        assert_relative_eq!(g.total_volume(&mesh), 1.0, epsilon = 1e-12);
        let ones = vec![1.0; mesh.n_vertices()];
        assert_relative_eq!(g.integrate(&mesh, &ones), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_volume_approaches_4pi() {
        let mesh = icosphere(4);
        let g = MetricField::induced(&mesh);
        let vol = g.total_volume(&mesh);
        let exact = 4.0 * std::f64::consts::PI;
        assert!((vol - exact).abs() / exact < 0.005, "vol {vol} vs {exact}");
    }

    #[test]
    fn quadrature_is_linear() {
        let mesh = icosphere(2);
        let g = MetricField::induced(&mesh);
        let n = mesh.n_vertices();
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        let combo: Vec<f64> = (0..n).map(|i| 2.5 * u[i] - 1.25 * v[i]).collect();
        let lhs = g.integrate(&mesh, &combo);
        let rhs = 2.5 * g.integrate(&mesh, &u) - 1.25 * g.integrate(&mesh, &v);
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn zero_perturbation_gives_zero_norm_and_identity_metric() {
        let mesh = icosphere(1);
        let h = PerturbationTensor::zero(3);
        assert_eq!(tensor_norm(&h, &mesh, 2).unwrap(), 0.0);
        let g = MetricField::perturbed(&mesh, &h).unwrap();
        assert!(g.is_perturbed());
        for f in 0..mesh.n_faces() {
            assert_eq!(g.face_metric(f), [1.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn sampled_perturbation_hits_target_norm_and_stays_spd() {
        let mesh = icosphere(2);
        let h = sample_perturbation(&mesh, 0.05, 7).unwrap();
        let norm = tensor_norm(&h, &mesh, 2).unwrap();
        assert!(norm > 0.045 && norm <= 0.05, "norm {norm}");
        let g = MetricField::perturbed(&mesh, &h).unwrap();
        let (c, cc) = g.equivalence_constants();
        assert!(c > 0.9 && cc < 1.1, "equivalence ({c}, {cc})");
    }

    #[test]
    fn sampling_is_deterministic() {
        let mesh = flat_torus(6);
        let a = sample_perturbation(&mesh, 0.03, 42).unwrap();
        let b = sample_perturbation(&mesh, 0.03, 42).unwrap();
        assert_eq!(a.modes.len(), b.modes.len());
        for (ma, mb) in a.modes.iter().zip(&b.modes) {
            assert_eq!(ma.coeff.to_bits(), mb.coeff.to_bits());
        }
        let c = sample_perturbation(&mesh, 0.03, 43).unwrap();
        assert!(a.modes.iter().zip(&c.modes).any(|(x, y)| x.coeff != y.coeff));
    }

    #[test]
    fn tensor_norm_is_absolutely_homogeneous() {
        let mesh = icosphere(2);
        let h = sample_perturbation(&mesh, 0.05, 3).unwrap();
        let mut scaled = h.clone();
        scaled.scale(2.5);
        let a = tensor_norm(&h, &mesh, 2).unwrap();
        let b = tensor_norm(&scaled, &mesh, 2).unwrap();
        assert_relative_eq!(b, 2.5 * a, max_relative = 1e-12);

        let mut negated = h.clone();
        negated.scale(-1.0);
        assert_relative_eq!(tensor_norm(&negated, &mesh, 2).unwrap(), a, max_relative = 1e-12);
    }

    #[test]
    fn tensor_norm_satisfies_triangle_inequality() {
        let mesh = icosphere(2);
        for seeds in [[1u64, 2], [5, 9], [11, 17]] {
            let a = sample_perturbation(&mesh, 0.05, seeds[0]).unwrap();
            let b = sample_perturbation(&mesh, 0.08, seeds[1]).unwrap();
            let mut sum = a.clone();
            sum.modes.extend(b.modes.iter().cloned());
            let na = tensor_norm(&a, &mesh, 2).unwrap();
            let nb = tensor_norm(&b, &mesh, 2).unwrap();
            let ns = tensor_norm(&sum, &mesh, 2).unwrap();
            assert!(ns <= na + nb + 1e-10, "{ns} vs {na} + {nb}");
        }
    }

    #[test]
    fn order_three_is_rejected() {
        let mesh = octahedron();
        let h = sample_perturbation(&mesh, 0.01, 1).unwrap();
        assert!(matches!(tensor_norm(&h, &mesh, 3), Err(MetricError::UnsupportedOrder(3))));
    }

    #[test]
    fn tensor_norm_grows_with_order() {
        let mesh = icosphere(2);
        let h = sample_perturbation(&mesh, 0.05, 13).unwrap();
        let n0 = tensor_norm(&h, &mesh, 0).unwrap();
        let n1 = tensor_norm(&h, &mesh, 1).unwrap();
        let n2 = tensor_norm(&h, &mesh, 2).unwrap();
        assert!(n0 > 0.0);
        assert!(n1 >= n0, "k=1 norm {n1} below k=0 norm {n0}");
        assert!(n2 >= n1, "k=2 norm {n2} below k=1 norm {n1}");
        assert_relative_eq!(n2, 0.05, max_relative = 1e-10);
    }

    #[test]
    fn ambient_mismatch_is_reported() {
        let mesh = flat_torus(4); // ambient R^4
        assert!(matches!(
            MetricField::perturbed(&mesh, &sample_ambient3()),
            Err(MetricError::AmbientMismatch { .. })
        ));
        assert!(matches!(
            tensor_norm(&sample_ambient3(), &mesh, 1),
            Err(MetricError::AmbientMismatch { .. })
        ));
    }

    fn sample_ambient3() -> PerturbationTensor {
        PerturbationTensor::from_modes(
            3,
            2,
            0.1,
            vec![PerturbationMode {
                powers: vec![1, 0, 0],
                row: 0,
                col: 0,
                coeff: 0.1,
            }],
        )
    }
}
