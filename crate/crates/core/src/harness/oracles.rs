//! Slow, structurally independent reference computations.
//!
//! The radial ground state here is solved as a two-point boundary value
//! problem by finite-difference collocation and damped Newton iteration —
//! no shooting, no adaptive stepping, no Hermite quadrature — so agreement
//! with the fast path is meaningful evidence rather than a self-check.

use crate::linalg::tridiag_solve;
use crate::profile::{ProblemParams, ProfileError, R_MAX};

/// Ground state sampled on the oracle's uniform grid.
#[derive(Debug, Clone)]
pub struct CollocationSolution {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl CollocationSolution {
    /// Linear interpolation on the uniform grid (second-order accurate,
    /// matching the discretization order).
    pub fn eval(&self, r: f64) -> f64 {
        let h = self.radii[1];
        if r >= *self.radii.last().unwrap() {
            return 0.0;
        }
        let j = ((r / h).floor() as usize).min(self.values.len() - 2);
        let t = (r - self.radii[j]) / h;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }
}

/// Discrete residual of the radial equation on the uniform grid; the centre
/// node uses the symmetry condition `U'(0) = 0` via a ghost value, giving
/// `n U''(0) = U(0) - U(0)^{p-1}` at `r = 0`.
fn residual(params: &ProblemParams, h: f64, u: &[f64], out: &mut [f64]) {
    let n = params.n as f64;
    let p = params.p;
    let m = u.len();
    let h2 = h * h;
    out[0] = n * 2.0 * (u[1] - u[0]) / h2 - u[0] + u[0].signum() * u[0].abs().powf(p - 1.0);
    for i in 1..m - 1 {
        let r = i as f64 * h;
        let upp = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
        let up = (u[i + 1] - u[i - 1]) / (2.0 * h);
        out[i] = upp + (n - 1.0) / r * up - u[i] + u[i].signum() * u[i].abs().powf(p - 1.0);
    }
    // u[m-1] is pinned to zero; carry a trivial equation for it
    out[m - 1] = u[m - 1];
}

/// Solves the radial BVP on `nodes + 1` uniform points over `[0, R_MAX]`
/// by globalized Newton (Armijo backtracking on the least-squares merit)
/// with tridiagonal solves. `amp_hint` sets the initial bump amplitude;
/// several analytic bump shapes are tried in turn.
pub fn collocation_ground_state(
    params: &ProblemParams,
    nodes: usize,
    amp_hint: f64,
) -> Result<CollocationSolution, ProfileError> {
    params.validate()?;
    assert!(nodes >= 100, "oracle grid too coarse");
    let h = R_MAX / nodes as f64;
    let radii: Vec<f64> = (0..=nodes).map(|i| i as f64 * h).collect();

    let shapes: [fn(f64) -> f64; 3] = [
        |r| 1.0 / r.cosh(),
        |r| (-r * r / 4.0).exp(),
        |r| (-r).exp(),
    ];
    let mut last_err = None;
    for shape in shapes {
        let mut u: Vec<f64> = radii.iter().map(|&r| amp_hint * shape(r)).collect();
        *u.last_mut().unwrap() = 0.0;
        match newton_bvp(params, h, &mut u) {
            Ok(()) => {
                let peak = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                if peak < 1.0 {
                    last_err = Some(ProfileError::NonConvergence(
                        "collocation collapsed to the trivial solution".into(),
                    ));
                    continue;
                }
                return Ok(CollocationSolution { radii, values: u });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

fn newton_bvp(params: &ProblemParams, h: f64, u: &mut [f64]) -> Result<(), ProfileError> {
    let m = u.len();
    let n = params.n as f64;
    let p = params.p;
    let h2 = h * h;
    // converged when the sup-norm residual is far below the O(h²)
    // discretization error but safely above the ~1e-10 rounding floor of
    // the second differences
    let tol = 1e-8;

    let mut res = vec![0.0; m];
    // row-indexed tridiagonal bands: lower[i], diag[i], upper[i] live in row i
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut trial = vec![0.0; m];

    residual(params, h, u, &mut res);
    let mut merit: f64 = 0.5 * res.iter().map(|&v| v * v).sum::<f64>();

    for _ in 0..100 {
        let sup = res.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if sup < tol {
            return Ok(());
        }

        diag[0] = -2.0 * n / h2 - 1.0 + (p - 1.0) * u[0].abs().powf(p - 2.0);
        upper[0] = 2.0 * n / h2;
        for i in 1..m - 1 {
            let r = i as f64 * h;
            lower[i] = 1.0 / h2 - (n - 1.0) / (2.0 * h * r);
            diag[i] = -2.0 / h2 - 1.0 + (p - 1.0) * u[i].abs().powf(p - 2.0);
            upper[i] = 1.0 / h2 + (n - 1.0) / (2.0 * h * r);
        }
        lower[m - 1] = 0.0;
        diag[m - 1] = 1.0;

        let rhs: Vec<f64> = res.iter().map(|&v| -v).collect();
        let delta = tridiag_solve(&lower, &diag, &upper, &rhs).ok_or_else(|| {
            ProfileError::NonConvergence("singular collocation Jacobian".into())
        })?;

        // Armijo backtracking: the Newton direction descends the merit
        let mut lambda = 1.0f64;
        let mut accepted = false;
        while lambda >= 1e-8 {
            for i in 0..m {
                trial[i] = u[i] + lambda * delta[i];
            }
            residual(params, h, &trial, &mut res);
            let trial_merit = 0.5 * res.iter().map(|&v| v * v).sum::<f64>();
            if trial_merit <= (1.0 - 1e-4 * lambda) * merit {
                u.copy_from_slice(&trial);
                merit = trial_merit;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(ProfileError::NonConvergence(format!(
                "collocation line search failed at merit {merit:.3e}"
            )));
        }
    }
    Err(ProfileError::NonConvergence(format!(
        "collocation Newton stalled at merit {merit:.3e}"
    )))
}

/// Centre value `U(0)` with one step of Richardson extrapolation over grids
/// of `nodes` and `2 * nodes` intervals; the discretization is second order,
/// so the extrapolated value has error `O(h⁴)`.
pub fn collocation_u0_extrapolated(
    params: &ProblemParams,
    nodes: usize,
    amp_hint: f64,
) -> Result<f64, ProfileError> {
    let coarse = collocation_ground_state(params, nodes, amp_hint)?;
    let fine = collocation_ground_state(params, 2 * nodes, amp_hint)?;
    Ok((4.0 * fine.values[0] - coarse.values[0]) / 3.0)
}
