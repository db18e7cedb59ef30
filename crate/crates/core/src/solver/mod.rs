//! Deflated Newton search for low-energy critical points.
//!
//! A solve starts from a Nehari-projected spike ansatz and runs damped
//! Newton on the deflated gradient `G(u) = Π_j (1 + 1/‖u−u_j‖²_{L²}) ∇J(u)`,
//! where the `u_j` are solutions already found. Because the deflation factor
//! is scalar, the deflated Newton direction is the plain Newton direction
//! rescaled — one symmetric solve per iteration, no extra systems. The first
//! few iterates are re-projected onto the Nehari manifold to keep the search
//! inside the low-energy slice, and a converged solution is polished by one
//! final projection.
//!
//! Each accepted solution is packaged with its Morse data, barycenter,
//! positivity and concentration diagnostics into a [`SolutionRecord`];
//! [`multiplicity_run`] chains deflated solves over a farthest-point family
//! of seed centers and [`genericity_probe`] repeats that over sampled
//! `(ε, h)` pairs to measure how often the found critical points are
//! nondegenerate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ansatz::{
    barycenter, in_tubular_neighborhood, lp_mass_within, phi, reach_proxy, AnsatzError, Barycenter,
};
use crate::functional::{
    eps_hat, pow_p, EnergySetting, FunctionalError, ScalarField, CONSTANT_SEPARATION,
};
use crate::linalg::{self, Csr};
use crate::manifold::{
    distance_field, farthest_point_sample, injectivity_estimate, sample_perturbation, MetricError,
    MetricField, SurfaceMesh,
};
use crate::profile::RadialProfile;

mod eigen;
pub use eigen::{morse_index, morse_index_dense, MorseData};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("newton hit the iteration cap {max_iters} with residual {residual:.3e}")]
    MaxIterations { max_iters: usize, residual: f64 },
    #[error("line search stalled at iteration {iter} (residual {residual:.3e})")]
    LineSearchStall { iter: usize, residual: f64 },
    #[error("iterate collapsed onto deflated solution {index} (L² distance {distance:.3e})")]
    CollapseToDeflated { index: usize, distance: f64 },
    #[error("converged to the constant {value:.6} after {iters} iterations")]
    CollapseToConstant { value: f64, iters: usize },
    #[error("eigenvalue sweep did not settle the spectrum around zero")]
    EigenNonConvergence,
    #[error("delta {delta} outside (0, {limit}) (a quarter of the limit energy)")]
    InvalidDelta { delta: f64, limit: f64 },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Energy share that must sit inside the concentration ball (1 − η with
/// η = 0.2) for a record to count as a single spike.
pub const CONCENTRATION_ETA: f64 = 0.2;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Convergence threshold on `‖∇J(u)‖₂ / (1 + ‖u‖₂)`.
    pub tol: f64,
    /// How many leading iterates get re-projected onto the Nehari manifold.
    pub projection_iters: usize,
    /// L² separation below which two fields count as the same solution.
    pub distinct_threshold: f64,
    /// Inner-solve tolerance as a multiple of the current residual. The
    /// default 1.0 is enough away from degeneracy; near a symmetry orbit the
    /// almost-singular Hessian amplifies inner error into drift along the
    /// orbit, and a factor well below 1 is needed for Newton to keep making
    /// progress.
    pub inner_rel: f64,
    /// Tikhonov shift, in units of the norm Gram matrix, added to the
    /// Hessian for the step computation only. Zero (the default) is plain
    /// Newton. Next to a continuous-symmetry orbit the Hessian is nearly
    /// singular and the iterative inner solve hits its iteration cap,
    /// turning truncation error into drift; a shift well above the
    /// near-kernel scale and well below the rest of the spectrum keeps the
    /// inner problem cheap without moving the solution — convergence is
    /// still judged on the true gradient.
    pub damping: f64,
}

impl NewtonOptions {
    pub fn standard(distinct_threshold: f64) -> Self {
        NewtonOptions {
            max_iters: 100,
            tol: 1e-9,
            projection_iters: 3,
            distinct_threshold,
            inner_rel: 1.0,
            damping: 0.0,
        }
    }
}

/// Two solutions are distinct when their L² distance exceeds one percent of
/// the scaled ground-state mass `‖U(·/ε)‖_{L²} = (εⁿ·‖U‖²_{L²})^{1/2}`.
pub fn distinct_threshold(profile: &RadialProfile, eps: f64) -> f64 {
    1e-2 * (eps.powi(profile.params.n as i32) * profile.l2sq).sqrt()
}

/// Everything a solve needs besides the seed: discretization, geometry for
/// the barycenter/concentration diagnostics, and the limit profile.
pub struct SolveContext<'a> {
    pub mesh: &'a SurfaceMesh,
    pub metric: &'a MetricField,
    pub setting: &'a EnergySetting,
    pub profile: &'a RadialProfile,
    /// Tube radius for the barycenter containment check.
    pub reach: f64,
}

impl<'a> SolveContext<'a> {
    pub fn new(
        mesh: &'a SurfaceMesh,
        metric: &'a MetricField,
        setting: &'a EnergySetting,
        profile: &'a RadialProfile,
    ) -> Self {
        SolveContext {
            mesh,
            metric,
            setting,
            profile,
            reach: reach_proxy(mesh),
        }
    }
}

/// A converged critical point with its certificates.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecord {
    #[serde(skip_serializing)]
    pub field: ScalarField,
    pub seed_center: usize,
    pub newton_iters: usize,
    pub energy: f64,
    /// `‖∇J‖₂ / (1 + ‖u‖₂)` after the final projection.
    pub grad_norm: f64,
    /// `|J′(u)[u]| / |||u|||²`.
    pub nehari_residual: f64,
    pub norm_eps_sq: f64,
    pub min_value: f64,
    /// Strictly positive after one smoothing solve through `ε²S + M`.
    pub strong_positive: bool,
    pub morse_index: usize,
    pub min_abs_eig: f64,
    pub tol_eig: f64,
    pub degenerate: bool,
    pub barycenter: Barycenter,
    /// Barycenter within the tube radius of the surface.
    pub in_tube: bool,
    pub peak_vertex: usize,
    /// Share of `|u⁺|ᵖ` inside the geodesic ball of half the local
    /// injectivity radius around the peak.
    pub concentration_fraction: f64,
    pub concentrated: bool,
}

fn euclid_residual(grad: &ScalarField, u: &ScalarField) -> f64 {
    linalg::norm2(grad.values()) / (1.0 + linalg::norm2(u.values()))
}

pub(crate) fn jacobi_inverse(m: &Csr) -> Vec<f64> {
    let d = m.diagonal();
    let floor = d.iter().fold(0.0f64, |a, &x| a.max(x.abs())) * 1e-14 + f64::MIN_POSITIVE;
    d.iter().map(|&x| 1.0 / x.abs().max(floor)).collect()
}

/// Squared L² (mass-weighted) distances to each deflated solution.
fn deflation_dists_sq(mass: &Csr, u: &[f64], deflation: &[ScalarField]) -> Vec<f64> {
    deflation
        .iter()
        .map(|uj| {
            let diff: Vec<f64> = u.iter().zip(uj.values()).map(|(&a, &b)| a - b).collect();
            mass.quad_form(&diff)
        })
        .collect()
}

fn deflation_factor(dists_sq: &[f64]) -> f64 {
    dists_sq.iter().map(|&d| 1.0 + 1.0 / d).product()
}

/// `∇ log D(u) = Σ_j −2·M(u−u_j) / (d_j² + d_j)`, the only extra piece the
/// deflated Newton step needs.
fn deflation_log_grad(mass: &Csr, u: &[f64], deflation: &[ScalarField], dists_sq: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut mdiff = vec![0.0; n];
    for (uj, &dsq) in deflation.iter().zip(dists_sq) {
        for i in 0..n {
            diff[i] = u[i] - uj.values()[i];
        }
        mass.matvec(&diff, &mut mdiff);
        let c = -2.0 / (dsq * dsq + dsq);
        for i in 0..n {
            g[i] += c * mdiff[i];
        }
    }
    g
}

/// Damped Newton on the deflated gradient, from `seed`, avoiding the fields
/// in `deflation`. Returns the fully validated record or the reason the
/// search failed (collapse onto a known solution, collapse to a constant,
/// stall, or running out of iterations).
pub fn newton_solve(
    ctx: &SolveContext,
    seed: &ScalarField,
    deflation: &[ScalarField],
    seed_center: usize,
    opts: &NewtonOptions,
) -> Result<SolutionRecord, SolverError> {
    let setting = ctx.setting;
    let mass = setting.mass();
    let n = setting.n_vertices();
    let mut u = seed.clone();
    let collapse_dist_sq = (0.5 * opts.distinct_threshold).powi(2);

    let mut converged_at = None;
    let mut last_res = f64::INFINITY;
    let mut stalls = 0usize;

    for iter in 0..opts.max_iters {
        let grad = setting.gradient(&u)?;
        let res = euclid_residual(&grad, &u);
        last_res = res;

        let dists_sq = deflation_dists_sq(mass, u.values(), deflation);
        if let Some((j, &dsq)) = dists_sq
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            if dsq < collapse_dist_sq {
                return Err(SolverError::CollapseToDeflated {
                    index: j,
                    distance: dsq.sqrt(),
                });
            }
        }

        if res < opts.tol {
            // converged up to the projection: polish onto the Nehari
            // manifold and accept only if that did not disturb the residual
            let t = match setting.nehari_t(&u) {
                Ok(t) => t,
                Err(FunctionalError::ZeroPositivePart) => {
                    return Err(SolverError::CollapseToConstant { value: 0.0, iters: iter })
                }
                Err(e) => return Err(e.into()),
            };
            u = u.scaled(t);
            let polished = setting.gradient(&u)?;
            let res2 = euclid_residual(&polished, &u);
            last_res = res2;
            if res2 < opts.tol {
                converged_at = Some(iter);
                break;
            }
            continue;
        }

        let mut h = setting.hessian_matrix(&u)?;
        if opts.damping > 0.0 {
            h = h.linear_combination(1.0, &setting.norm_gram(), opts.damping);
        }
        let inv_diag = jacobi_inverse(&h);
        let mut y = vec![0.0; n];
        let inner_tol = (res * opts.inner_rel).min(1e-2).max(1e-13);
        linalg::minres(
            |v, out| h.matvec(v, out),
            grad.values(),
            &mut y,
            &inv_diag,
            inner_tol,
            1500,
        );

        // scalar deflation turns the Newton step into τ·y with
        // τ = 1/(1 + ∇log D · y)
        let tau = {
            let g = deflation_log_grad(mass, u.values(), deflation, &dists_sq);
            let denom = 1.0 + linalg::dot(&g, &y);
            if denom.abs() < 1e-9 {
                1e9f64.copysign(denom)
            } else {
                1.0 / denom
            }
        }
        .clamp(-1e3, 1e3);

        let d0 = deflation_factor(&dists_sq);
        let merit0 = (d0 * linalg::norm2(grad.values())).powi(2);
        let mut lambda = 1.0f64;
        let mut accepted = false;
        while lambda >= 1e-7 {
            let trial = ScalarField::new(
                u.values()
                    .iter()
                    .zip(&y)
                    .map(|(&ui, &yi)| ui - lambda * tau * yi)
                    .collect(),
            );
            let tgrad = setting.gradient(&trial)?;
            let td = deflation_factor(&deflation_dists_sq(mass, trial.values(), deflation));
            let merit = (td * linalg::norm2(tgrad.values())).powi(2);
            if merit.is_finite() && merit <= (1.0 - 1e-4 * lambda) * merit0 {
                u = trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if accepted {
            stalls = 0;
        } else {
            stalls += 1;
            if stalls >= 2 {
                return Err(SolverError::LineSearchStall { iter, residual: res });
            }
            // nudge by the smallest step; the next iteration gets one retry
            let step = 1e-7 * tau;
            let nudged: Vec<f64> = u
                .values()
                .iter()
                .zip(&y)
                .map(|(&ui, &yi)| ui - step * yi)
                .collect();
            u = ScalarField::new(nudged);
        }

        if iter < opts.projection_iters {
            match setting.nehari_t(&u) {
                Ok(t) => u = u.scaled(t),
                Err(FunctionalError::ZeroPositivePart) => {
                    return Err(SolverError::CollapseToConstant {
                        value: 0.0,
                        iters: iter + 1,
                    })
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    let Some(newton_iters) = converged_at else {
        return Err(SolverError::MaxIterations {
            max_iters: opts.max_iters,
            residual: last_res,
        });
    };

    build_record(ctx, u, seed_center, newton_iters)
}

fn build_record(
    ctx: &SolveContext,
    u: ScalarField,
    seed_center: usize,
    newton_iters: usize,
) -> Result<SolutionRecord, SolverError> {
    let setting = ctx.setting;
    let w = setting.lumped_mass();

    // a critical point that is (any) constant is not a spike
    let mean = u.values().iter().zip(w).map(|(&v, &wi)| v * wi).sum::<f64>() / setting.volume();
    let centered: Vec<f64> = u.values().iter().map(|&v| v - mean).collect();
    if setting.mass().quad_form(&centered).sqrt() < CONSTANT_SEPARATION {
        return Err(SolverError::CollapseToConstant {
            value: mean,
            iters: newton_iters,
        });
    }

    let energy = setting.energy(&u)?;
    let grad = setting.gradient(&u)?;
    let grad_norm = euclid_residual(&grad, &u);
    let nehari_residual = setting.nehari_residual(&u)?;
    let norm_eps_sq = setting.norm_eps_sq(&u)?;
    let min_value = u.min();

    // one smoothing solve: (ε²S + M)v = w·(u⁺)^{p−1}; at a true solution
    // v = u, so a strictly positive v certifies positivity of the spike
    let strong_positive = {
        let p = setting.params().p;
        let scale = setting.eps().powi(-(setting.params().n as i32));
        let gram = setting.norm_gram();
        let rhs: Vec<f64> = u
            .values()
            .iter()
            .zip(w)
            .map(|(&v, &wi)| scale * wi * pow_p(v.max(0.0), p - 1.0))
            .collect();
        let inv_diag = jacobi_inverse(&gram);
        let mut v = vec![0.0; u.len()];
        linalg::pcg(|x, out| gram.matvec(x, out), &rhs, &mut v, &inv_diag, 1e-10, 2000);
        v.iter().all(|&x| x > 0.0)
    };

    let morse = morse_index(setting, &u, None)?;

    let bc = barycenter(setting, ctx.mesh, &u)?;
    let in_tube = in_tubular_neighborhood(&bc, ctx.reach);

    let peak_vertex = u
        .values()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let dists = distance_field(ctx.mesh, ctx.metric, peak_vertex);
    let conc_radius = 0.5 * injectivity_estimate(ctx.mesh, ctx.metric, peak_vertex);
    let inside = lp_mass_within(setting, &u, &dists, conc_radius);
    let total = setting.lp_eps_pow_p(&u)?;
    let p = setting.params().p;
    let concentrated = (0.5 - 1.0 / p) * inside > (1.0 - CONCENTRATION_ETA) * ctx.profile.m_infty;

    Ok(SolutionRecord {
        field: u,
        seed_center,
        newton_iters,
        energy,
        grad_norm,
        nehari_residual,
        norm_eps_sq,
        min_value,
        strong_positive,
        morse_index: morse.index,
        min_abs_eig: morse.min_abs_eig,
        tol_eig: morse.tol_eig,
        degenerate: morse.degenerate,
        barycenter: bc,
        in_tube,
        peak_vertex,
        concentration_fraction: inside / total,
        concentrated,
    })
}

/// A seed that produced no record, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedSeed {
    pub seed: SeedSpec,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub eps: f64,
    pub delta: f64,
    /// `P₁(M)`: the multiplicity the topology predicts below `2m_∞ − δ`.
    pub p1_target: usize,
    pub distinct_count: usize,
    /// ε is not below the threshold that pushes the constant branch out of
    /// the low-energy window, so the multiplicity prediction carries no
    /// weight for this run.
    pub outside_regime: bool,
    pub eps_hat: f64,
    pub records: Vec<SolutionRecord>,
    pub skipped: Vec<SkippedSeed>,
}

/// Where a seed ansatz is planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeedSpec {
    /// Spike ansatz centered at a vertex.
    Vertex(usize),
    /// Equal-weight average of the corner ansatz of a face — a mid-cell
    /// configuration. Discretization pins spike centers to the mesh, and
    /// vertex seeds only reach the pinned minima; the saddle stratum sits
    /// near cell interiors and needs its own seeds for the critical-point
    /// census to close under the Morse count.
    Face(usize),
}

/// Seed family: `4·P₁(M)` farthest-point vertices for coverage, plus the
/// strata coverage seeds miss — up to three minimum-degree vertices (the
/// pinning maxima on meshes with irregular vertices) and the faces around
/// the first coverage vertex (mid-cell saddles).
pub fn default_seed_family(
    mesh: &SurfaceMesh,
    metric: &MetricField,
    p1_target: usize,
) -> Vec<SeedSpec> {
    let mut family: Vec<SeedSpec> = farthest_point_sample(mesh, metric, (4 * p1_target).max(1), 0)
        .into_iter()
        .map(SeedSpec::Vertex)
        .collect();
    let degrees: Vec<usize> = (0..mesh.n_vertices())
        .map(|v| mesh.vertex_neighbors(v).len())
        .collect();
    let (min_deg, max_deg) = degrees
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if min_deg < max_deg {
        let picks = (0..mesh.n_vertices()).filter(|&v| degrees[v] == min_deg).take(3);
        for v in picks {
            if !family.contains(&SeedSpec::Vertex(v)) {
                family.push(SeedSpec::Vertex(v));
            }
        }
    }
    if let Some(&SeedSpec::Vertex(v0)) = family.first() {
        for &f in mesh.vertex_faces(v0).iter().take(3) {
            family.push(SeedSpec::Face(f));
        }
    }
    family
}

fn face_seed(
    setting: &EnergySetting,
    profile: &RadialProfile,
    mesh: &SurfaceMesh,
    metric: &MetricField,
    face: usize,
    radius_factor: f64,
) -> Result<(ScalarField, usize), AnsatzError> {
    let corners = mesh.faces()[face];
    let mut acc = vec![0.0; mesh.n_vertices()];
    for &v in &corners {
        let radius = radius_factor * injectivity_estimate(mesh, metric, v);
        let a = phi(setting, profile, mesh, metric, v, radius)?;
        for (s, &x) in acc.iter_mut().zip(a.values()) {
            *s += x / 3.0;
        }
    }
    Ok((ScalarField::new(acc), corners[0]))
}

/// Knobs of the deflated search that configs may override.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Seed cutoff radius as a fraction of the local injectivity estimate.
    pub radius_factor: f64,
    pub newton: NewtonOptions,
}

impl SearchOptions {
    pub fn standard(profile: &RadialProfile, eps: f64) -> Self {
        SearchOptions {
            radius_factor: 0.8,
            newton: NewtonOptions::standard(distinct_threshold(profile, eps)),
        }
    }
}

/// Deflated solves from every seed, deduplicated, restricted to the energy
/// window `J < 2m_∞ − δ`.
pub fn multiplicity_run(
    mesh: &SurfaceMesh,
    metric: &MetricField,
    profile: &RadialProfile,
    eps: f64,
    delta: f64,
    seeds: &[SeedSpec],
    p1_target: usize,
    search: &SearchOptions,
) -> Result<SolveReport, SolverError> {
    let limit = profile.m_infty / 4.0;
    if !(delta > 0.0 && delta < limit) {
        return Err(SolverError::InvalidDelta { delta, limit });
    }
    let setting = EnergySetting::assemble(mesh, metric, eps, profile.params)?;
    let ctx = SolveContext::new(mesh, metric, &setting, profile);
    let thr = search.newton.distinct_threshold;
    let opts = search.newton;
    let window = 2.0 * profile.m_infty - delta;
    let ehat = eps_hat(&profile.params, setting.volume(), profile.m_infty);
    // J(1) ≤ 2m_∞ from ε = 2^{1/n}·ε̂ on: the constant is back inside the
    // window there and the counting argument stops applying
    let outside_regime = eps >= ehat * 2f64.powf(1.0 / profile.params.n as f64);

    let mut records: Vec<SolutionRecord> = Vec::new();
    let mut skipped: Vec<SkippedSeed> = Vec::new();
    for &spec in seeds {
        let built = match spec {
            SeedSpec::Vertex(q) => {
                let radius = search.radius_factor * injectivity_estimate(mesh, metric, q);
                phi(&setting, profile, mesh, metric, q, radius).map(|s| (s, q))
            }
            SeedSpec::Face(f) => face_seed(&setting, profile, mesh, metric, f, search.radius_factor),
        };
        let (seed, rep) = match built {
            Ok(pair) => pair,
            Err(e) => {
                skipped.push(SkippedSeed {
                    seed: spec,
                    reason: format!("seed construction failed: {e}"),
                });
                continue;
            }
        };
        let deflated: Vec<ScalarField> = records.iter().map(|r| r.field.clone()).collect();
        match newton_solve(&ctx, &seed, &deflated, rep, &opts) {
            Ok(rec) => {
                if rec.energy > window {
                    skipped.push(SkippedSeed {
                        seed: spec,
                        reason: format!("energy {:.6} above the window {:.6}", rec.energy, window),
                    });
                    continue;
                }
                let duplicate = records.iter().position(|r| {
                    let d: Vec<f64> = rec
                        .field
                        .values()
                        .iter()
                        .zip(r.field.values())
                        .map(|(&a, &b)| a - b)
                        .collect();
                    setting.mass().quad_form(&d).sqrt() < thr
                });
                if let Some(j) = duplicate {
                    skipped.push(SkippedSeed {
                        seed: spec,
                        reason: format!("duplicate of solution {j}"),
                    });
                } else {
                    records.push(rec);
                }
            }
            Err(e @ (SolverError::Functional(_) | SolverError::Metric(_))) => return Err(e),
            Err(e) => skipped.push(SkippedSeed {
                seed: spec,
                reason: e.to_string(),
            }),
        }
    }

    Ok(SolveReport {
        eps,
        delta,
        p1_target,
        distinct_count: records.len(),
        outside_regime,
        eps_hat: ehat,
        records,
        skipped,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSample {
    pub eps: f64,
    pub h_seed: u64,
    pub rho: f64,
    pub record_count: usize,
    pub distinct_count: usize,
    /// `min_abs_eig / tol_eig` per record; above 1 means nondegenerate.
    pub margin_ratios: Vec<f64>,
    pub min_margin_ratio: f64,
    pub all_nondegenerate: bool,
}

#[derive(Debug, Serialize)]
pub struct ProbeSummary {
    pub rho: f64,
    pub num_samples: usize,
    pub base_seed: u64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub samples: Vec<ProbeSample>,
    pub fraction_nondegenerate: f64,
}

/// Samples `(ε, h)` pairs — ε log-uniform in `eps_range`, `h` a random
/// perturbation of size `rho` — and runs the full multiplicity search on
/// each, recording the spectral margins. One ChaCha stream per sample keeps
/// the result reproducible and independent of thread scheduling.
pub fn genericity_probe(
    mesh: &SurfaceMesh,
    profile: &RadialProfile,
    eps_range: (f64, f64),
    rho: f64,
    num_samples: usize,
    seed: u64,
    p1_target: usize,
) -> Result<ProbeSummary, SolverError> {
    let (lo, hi) = eps_range;
    assert!(
        lo > 0.0 && hi >= lo && hi.is_finite(),
        "eps_range must satisfy 0 < lo <= hi"
    );
    let samples: Result<Vec<ProbeSample>, SolverError> = (0..num_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let t: f64 = rng.gen();
            let eps = lo * (hi / lo).powf(t);
            let h_seed: u64 = rng.gen();
            let h = sample_perturbation(mesh, rho, h_seed)?;
            let metric = MetricField::perturbed(mesh, &h)?;
            let family = default_seed_family(mesh, &metric, p1_target);
            let report = multiplicity_run(
                mesh,
                &metric,
                profile,
                eps,
                0.1 * profile.m_infty,
                &family,
                p1_target,
                &SearchOptions::standard(profile, eps),
            )?;
            let margin_ratios: Vec<f64> = report
                .records
                .iter()
                .map(|r| r.min_abs_eig / r.tol_eig)
                .collect();
            let min_margin_ratio = margin_ratios.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let all_nondegenerate =
                !report.records.is_empty() && report.records.iter().all(|r| !r.degenerate);
            Ok(ProbeSample {
                eps,
                h_seed,
                rho,
                record_count: report.records.len(),
                distinct_count: report.distinct_count,
                margin_ratios,
                min_margin_ratio,
                all_nondegenerate,
            })
        })
        .collect();
    let samples = samples?;
    let fraction_nondegenerate = samples.iter().filter(|s| s.all_nondegenerate).count() as f64
        / num_samples.max(1) as f64;
    Ok(ProbeSummary {
        rho,
        num_samples,
        base_seed: seed,
        eps_lo: lo,
        eps_hi: hi,
        samples,
        fraction_nondegenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::mesh::flat_torus;
    use crate::profile::{shoot_ground_state, ProblemParams};

    fn torus_setup(m: usize, eps: f64) -> (SurfaceMesh, MetricField, RadialProfile, EnergySetting) {
        let mesh = flat_torus(m);
        let metric = MetricField::induced(&mesh);
        let params = ProblemParams::new(2, 4.0).unwrap();
        let profile = shoot_ground_state(&params, 1e-6).unwrap();
        let setting = EnergySetting::assemble(&mesh, &metric, eps, params).unwrap();
        (mesh, metric, profile, setting)
    }

    #[test]
    fn constant_seed_is_recognized_and_rejected() {
        let (mesh, metric, profile, setting) = torus_setup(16, 0.3);
        let ctx = SolveContext::new(&mesh, &metric, &setting, &profile);
        let seed = ScalarField::constant(setting.n_vertices(), 1.0);
        let opts = NewtonOptions::standard(distinct_threshold(&profile, 0.3));
        match newton_solve(&ctx, &seed, &[], 0, &opts) {
            Err(SolverError::CollapseToConstant { value, iters }) => {
                assert!((value - 1.0).abs() < 1e-9, "collapsed constant {value}");
                assert!(iters <= 2, "took {iters} iterations");
            }
            other => panic!("expected constant collapse, got {other:?}"),
        }
    }

    #[test]
    fn spike_seed_converges_to_validated_spike() {
        let eps = 0.12;
        let (mesh, metric, profile, setting) = torus_setup(32, eps);
        let ctx = SolveContext::new(&mesh, &metric, &setting, &profile);
        let radius = 0.8 * injectivity_estimate(&mesh, &metric, 0);
        let seed = phi(&setting, &profile, &mesh, &metric, 0, radius).unwrap();
        let opts = NewtonOptions::standard(distinct_threshold(&profile, eps));
        let rec = newton_solve(&ctx, &seed, &[], 0, &opts).unwrap();

        assert!(rec.grad_norm < opts.tol, "residual {}", rec.grad_norm);
        assert!(rec.nehari_residual < 1e-8, "nehari {}", rec.nehari_residual);
        assert!(
            (rec.energy - profile.m_infty).abs() < 0.2 * profile.m_infty,
            "energy {} vs limit {}",
            rec.energy,
            profile.m_infty
        );
        assert!(rec.min_value > -1e-8, "min {}", rec.min_value);
        assert!(rec.strong_positive);
        assert_eq!(rec.morse_index, 1, "spike should be a mountain pass");
        assert!(rec.concentrated, "fraction {}", rec.concentration_fraction);
        assert!(rec.in_tube);
        // the peak should not have drifted away from the seed center
        assert!(rec.concentration_fraction > 0.9);
    }

    #[test]
    fn deflation_never_returns_the_same_solution() {
        let eps = 0.12;
        let (mesh, metric, profile, setting) = torus_setup(32, eps);
        let ctx = SolveContext::new(&mesh, &metric, &setting, &profile);
        let radius = 0.8 * injectivity_estimate(&mesh, &metric, 0);
        let seed = phi(&setting, &profile, &mesh, &metric, 0, radius).unwrap();
        let thr = distinct_threshold(&profile, eps);
        let opts = NewtonOptions::standard(thr);
        let first = newton_solve(&ctx, &seed, &[], 0, &opts).unwrap();

        let deflated = [first.field.clone()];
        match newton_solve(&ctx, &seed, &deflated, 0, &opts) {
            Ok(second) => {
                let d: Vec<f64> = second
                    .field
                    .values()
                    .iter()
                    .zip(first.field.values())
                    .map(|(&a, &b)| a - b)
                    .collect();
                let dist = setting.mass().quad_form(&d).sqrt();
                assert!(dist > thr, "re-solve landed {dist:.3e} from the deflated one");
            }
            Err(
                SolverError::CollapseToDeflated { .. }
                | SolverError::LineSearchStall { .. }
                | SolverError::MaxIterations { .. }
                | SolverError::CollapseToConstant { .. },
            ) => {}
            Err(e) => panic!("unexpected failure: {e}"),
        }
    }

    #[test]
    fn multiplicity_run_finds_distinct_spikes() {
        let eps = 0.12;
        let mesh = flat_torus(24);
        let metric = MetricField::induced(&mesh);
        let params = ProblemParams::new(2, 4.0).unwrap();
        let profile = shoot_ground_state(&params, 1e-6).unwrap();
        let family = default_seed_family(&mesh, &metric, 1);
        assert!(
            family.iter().any(|s| matches!(s, SeedSpec::Face(_))),
            "family should carry mid-cell seeds: {family:?}"
        );
        let report = multiplicity_run(
            &mesh,
            &metric,
            &profile,
            eps,
            0.1 * profile.m_infty,
            &family,
            1,
            &SearchOptions::standard(&profile, eps),
        )
        .unwrap();
        assert!(!report.outside_regime, "eps_hat {}", report.eps_hat);
        assert!(
            report.distinct_count >= 2,
            "found {} distinct (skipped: {:?})",
            report.distinct_count,
            report.skipped
        );
        for rec in &report.records {
            assert!(rec.energy < 2.0 * profile.m_infty);
            assert!(rec.nehari_residual < 1e-8);
            assert!(rec.min_value > -1e-8);
        }
    }

    #[test]
    fn delta_outside_the_window_is_rejected() {
        let mesh = flat_torus(8);
        let metric = MetricField::induced(&mesh);
        let params = ProblemParams::new(2, 4.0).unwrap();
        let profile = shoot_ground_state(&params, 1e-6).unwrap();
        let bad = profile.m_infty; // well past m_∞/4
        let search = SearchOptions::standard(&profile, 0.2);
        match multiplicity_run(&mesh, &metric, &profile, 0.2, bad, &[SeedSpec::Vertex(0)], 1, &search) {
            Err(SolverError::InvalidDelta { .. }) => {}
            other => panic!("expected InvalidDelta, got {other:?}"),
        }
    }

    #[test]
    fn probe_is_deterministic_per_seed() {
        let mesh = flat_torus(12);
        let params = ProblemParams::new(2, 4.0).unwrap();
        let profile = shoot_ground_state(&params, 1e-6).unwrap();
        let run = || {
            let s = genericity_probe(&mesh, &profile, (0.25, 0.35), 0.02, 2, 42, 1).unwrap();
            serde_json::to_string(&s).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b, "same seed must reproduce the same summary bytes");
        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed["num_samples"], 2);
    }
}
