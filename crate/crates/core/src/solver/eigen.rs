//! Morse data for a critical point: how many directions of `J″(u)` point
//! down, and how close the spectrum comes to zero.
//!
//! Both questions live in the `|||·|||_ε` geometry, so they concern the
//! pencil `H x = λ B x` with `H = J″(u)` and `B` the norm Gram matrix. The
//! index is the number of eigenvalues below `−tol_eig`; the margin is the
//! smallest `|λ|`. Small problems are reduced densely through a Cholesky
//! factor of `B`. Large ones run shift-inverted Lanczos from below the
//! spectrum: with `σ = −1.1·|λ|_max` the operator `(H − σB)⁻¹B` is positive
//! with modest condition number, its extremal eigenvalues are exactly the
//! bottom of the pencil, and the sweep walks the spectrum upward until it
//! safely crosses `+tol_eig`. Repeated sweeps, each deflated against
//! everything already found and started from a fresh vector, pick up
//! multiple copies of clustered eigenvalues; the search is complete when a
//! fresh sweep crosses the threshold without discovering anything new
//! below it.

use serde::Serialize;

use super::SolverError;
use crate::functional::{EnergySetting, ScalarField};
use crate::linalg::{self, Csr};

#[derive(Debug, Clone, Serialize)]
pub struct MorseData {
    /// Eigenvalues below `−tol_eig`.
    pub index: usize,
    /// Distance from the spectrum to zero.
    pub min_abs_eig: f64,
    pub tol_eig: f64,
    /// `min_abs_eig < tol_eig`: the Hessian cannot certify nondegeneracy.
    pub degenerate: bool,
    /// Power-method estimate of the largest pencil eigenvalue magnitude.
    pub lambda_scale: f64,
    /// The bottom of the spectrum, ascending, through the first eigenvalue
    /// past `+tol_eig` (truncated).
    pub bottom: Vec<f64>,
}

/// Below this size the pencil is solved densely.
const DENSE_CUTOFF: usize = 200;
/// Lanczos steps per sweep.
const MAX_M: usize = 150;
/// Deflated restarts before giving up.
const MAX_ROUNDS: usize = 8;
/// How much of the bottom spectrum a record keeps.
const BOTTOM_KEPT: usize = 16;

pub fn morse_index(
    setting: &EnergySetting,
    u: &ScalarField,
    tol_override: Option<f64>,
) -> Result<MorseData, SolverError> {
    let n = setting.n_vertices();
    let h = setting.hessian_matrix(u)?;
    let b = setting.norm_gram();
    let lambda_scale = pencil_scale(&h, &b, n);
    let tol_eig = tol_override.unwrap_or(1e-6 * lambda_scale);
    if n <= DENSE_CUTOFF {
        Ok(dense_morse(&h, &b, n, tol_eig, lambda_scale))
    } else {
        lanczos_morse(&h, &b, n, tol_eig, lambda_scale)
    }
}

/// Same pencil, forced through the dense factorization path regardless of
/// size. O(n³) — meant for cross-checking the iterative path on coarse
/// meshes, not for production solves.
pub fn morse_index_dense(
    setting: &EnergySetting,
    u: &ScalarField,
    tol_override: Option<f64>,
) -> Result<MorseData, SolverError> {
    let n = setting.n_vertices();
    let h = setting.hessian_matrix(u)?;
    let b = setting.norm_gram();
    let lambda_scale = pencil_scale(&h, &b, n);
    let tol_eig = tol_override.unwrap_or(1e-6 * lambda_scale);
    Ok(dense_morse(&h, &b, n, tol_eig, lambda_scale))
}

/// `max |λ|` of the pencil by power iteration on `B⁻¹H`.
fn pencil_scale(h: &Csr, b: &Csr, n: usize) -> f64 {
    let ib = super::jacobi_inverse(b);
    linalg::power_method(
        |v, out| {
            let mut t = vec![0.0; n];
            h.matvec(v, &mut t);
            out.iter_mut().for_each(|x| *x = 0.0);
            linalg::pcg(|x, o| b.matvec(x, o), &t, out, &ib, 1e-8, 400);
        },
        n,
        40,
    )
    .max(f64::MIN_POSITIVE)
}

fn summarize(mut vals: Vec<f64>, tol_eig: f64, lambda_scale: f64) -> MorseData {
    vals.sort_by(f64::total_cmp);
    let index = vals.iter().filter(|&&l| l < -tol_eig).count();
    let min_abs_eig = vals.iter().fold(f64::INFINITY, |a, &l| a.min(l.abs()));
    let degenerate = min_abs_eig < tol_eig;
    vals.truncate(BOTTOM_KEPT);
    MorseData {
        index,
        min_abs_eig,
        tol_eig,
        degenerate,
        lambda_scale,
        bottom: vals,
    }
}

// ---------------------------------------------------------------------------
// dense path

fn densify(m: &Csr, n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        e[j] = 1.0;
        m.matvec(&e, &mut col);
        for i in 0..n {
            out[i * n + j] = col[i];
        }
        e[j] = 0.0;
    }
    out
}

fn cholesky_lower(a: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                assert!(s > 0.0, "norm Gram lost positive definiteness");
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    l
}

fn forward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// All pencil eigenvalues of `(H, B)` via `C = L⁻¹ H L⁻ᵀ` with `B = LLᵀ`.
fn dense_morse(h: &Csr, b: &Csr, n: usize, tol_eig: f64, lambda_scale: f64) -> MorseData {
    let hd = densify(h, n);
    let bd = densify(b, n);
    let l = cholesky_lower(&bd, n);
    // Y = L⁻¹H column by column, then C rows are L⁻¹ applied to Y rows
    let mut y = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = hd[i * n + j];
        }
        forward_sub(&l, n, &mut col);
        for i in 0..n {
            y[i * n + j] = col[i];
        }
    }
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        col.copy_from_slice(&y[i * n..(i + 1) * n]);
        forward_sub(&l, n, &mut col);
        c[i * n..(i + 1) * n].copy_from_slice(&col);
    }
    let (vals, _) = linalg::jacobi_eigen_small(&c, n);
    summarize(vals, tol_eig, lambda_scale)
}

// ---------------------------------------------------------------------------
// shift-invert Lanczos path

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut x = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(seed);
            x ^= x >> 30;
            x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
            x ^= x >> 27;
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

fn b_norm(b: &Csr, v: &[f64]) -> f64 {
    b.quad_form(v).max(0.0).sqrt()
}

/// One classical Gram-Schmidt pass in the B-inner product against both
/// vector sets (which are jointly B-orthonormal).
fn b_orth_pass(b: &Csr, r: &mut [f64], found: &[Vec<f64>], basis: &[Vec<f64>]) {
    if found.is_empty() && basis.is_empty() {
        return;
    }
    let mut w = vec![0.0; r.len()];
    b.matvec(r, &mut w);
    for z in found.iter().chain(basis.iter()) {
        let c = linalg::dot(&w, z);
        for i in 0..r.len() {
            r[i] -= c * z[i];
        }
    }
}

/// The classified bottom slice of one Lanczos sweep.
struct SweepHarvest {
    /// λ ascending with the tridiagonal eigenvector coefficients.
    pairs: Vec<(f64, Vec<f64>)>,
    /// The slice reached past `+tol_eig`.
    crossed: bool,
}

/// Walks the Ritz values from the most negative pencil eigenvalue upward and
/// keeps the prefix that is converged tightly enough to classify against
/// `±tol_eig`, stopping once it crosses `+tol_eig`.
fn analyze(alphas: &[f64], betas: &[f64], beta_last: f64, sigma: f64, tol_eig: f64) -> SweepHarvest {
    let m = alphas.len();
    let (thetas, svecs) = linalg::sym_tridiag_eigen(alphas, betas);
    let mut pairs = Vec::new();
    let mut crossed = false;
    for k in (0..m).rev() {
        let theta = thetas[k];
        if theta <= 0.0 {
            break;
        }
        let lam = sigma + 1.0 / theta;
        let resid = (beta_last * svecs[(m - 1) * m + k]).abs();
        // first-order error of λ under the 1/(λ−σ) transform
        let err = resid / (theta * theta);
        if err >= (0.1 * tol_eig).max(0.02 * lam.abs()) {
            break;
        }
        pairs.push((lam, (0..m).map(|i| svecs[i * m + k]).collect()));
        if lam > tol_eig {
            crossed = true;
            break;
        }
    }
    SweepHarvest { pairs, crossed }
}

fn lanczos_morse(
    h: &Csr,
    b: &Csr,
    n: usize,
    tol_eig: f64,
    lambda_scale: f64,
) -> Result<MorseData, SolverError> {
    let sigma = -1.1 * lambda_scale;
    let a = h.linear_combination(1.0, b, -sigma);
    let a_inv = super::jacobi_inverse(&a);
    let apply_t = |v: &[f64], out: &mut Vec<f64>| {
        let mut w = vec![0.0; n];
        b.matvec(v, &mut w);
        out.iter_mut().for_each(|x| *x = 0.0);
        linalg::pcg(|x, o| a.matvec(x, o), &w, out, &a_inv, 1e-11, 1500);
    };

    let mut found_vals: Vec<f64> = Vec::new();
    let mut found_vecs: Vec<Vec<f64>> = Vec::new();
    let mut complete = false;

    for round in 0..MAX_ROUNDS {
        let mut v0 = pseudo_random(n, 0x5EED ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        b_orth_pass(b, &mut v0, &found_vecs, &[]);
        b_orth_pass(b, &mut v0, &found_vecs, &[]);
        let nb = b_norm(b, &v0);
        if nb < 1e-12 {
            break; // nothing left outside the found subspace
        }
        v0.iter_mut().for_each(|x| *x /= nb);

        let mut basis: Vec<Vec<f64>> = vec![v0];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut harvest: Option<SweepHarvest> = None;
        let cap = MAX_M.min(n.saturating_sub(found_vecs.len()));

        let mut r = vec![0.0; n];
        for j in 0..cap {
            apply_t(&basis[j], &mut r);
            let alpha = b.bilinear(&r, &basis[j]);
            alphas.push(alpha);
            for i in 0..n {
                r[i] -= alpha * basis[j][i];
            }
            if j > 0 {
                let prev = betas[j - 1];
                for i in 0..n {
                    r[i] -= prev * basis[j - 1][i];
                }
            }
            b_orth_pass(b, &mut r, &found_vecs, &basis);
            b_orth_pass(b, &mut r, &found_vecs, &basis);
            let beta = b_norm(b, &r);

            let m = alphas.len();
            let breakdown = beta < 1e-9;
            if breakdown || m == cap || (m >= 12 && m % 6 == 0) {
                let res = analyze(&alphas, &betas, beta, sigma, tol_eig);
                let done = res.crossed;
                harvest = Some(res);
                if done || breakdown {
                    break;
                }
            }
            if breakdown {
                break;
            }
            betas.push(beta);
            basis.push(r.iter().map(|&x| x / beta).collect());
        }

        let Some(res) = harvest else { continue };
        let mut new_below = false;
        for (lam, coeff) in res.pairs {
            let mut y = vec![0.0; n];
            for (c, v) in coeff.iter().zip(&basis) {
                linalg::axpy(*c, v, &mut y);
            }
            b_orth_pass(b, &mut y, &found_vecs, &[]);
            let nrm = b_norm(b, &y);
            if nrm < 0.3 {
                continue; // already represented in the found set
            }
            y.iter_mut().for_each(|x| *x /= nrm);
            found_vecs.push(y);
            found_vals.push(lam);
            if lam <= tol_eig {
                new_below = true;
            }
        }
        let _ = round;
        if res.crossed && !new_below {
            complete = true;
            break;
        }
    }

    if !complete {
        return Err(SolverError::EigenNonConvergence);
    }
    Ok(summarize(found_vals, tol_eig, lambda_scale))
}
