//! The acceptance gate: nine end-to-end checks with pinned tolerances,
//! exercising the whole pipeline from the one-dimensional shooting solver
//! to the genericity probe. Each check reports pass/fail with a line of
//! detail per assertion, so a red run says exactly which number moved.
//!
//! The checks are ordered so that expensive state is built once and
//! reused: the large refined sphere serves both the ansatz-gap check and
//! the degenerate control, and the multiplicity runs feed the Morse-count
//! comparison.

use std::time::Instant;

use serde::Serialize;

use crate::ansatz::{barycenter, build_ansatz, phi};
use crate::functional::{eps_hat, EnergySetting, ScalarField};
use crate::harness::oracles::collocation_u0_extrapolated;
use crate::manifold::{
    farthest_point_sample, flat_torus, icosphere, injectivity_estimate, octahedron,
    projective_plane, sample_perturbation, MetricField, SurfaceMesh,
};
use crate::profile::{pohozaev_check, shoot_ground_state, ProblemParams, RadialProfile};
use crate::solver::{
    default_seed_family, distinct_threshold, genericity_probe, morse_index, morse_index_dense,
    multiplicity_run, newton_solve, NewtonOptions, SearchOptions, SolveContext, SolveReport,
};
use crate::topology::{betti, morse_relation_check, PoincarePolynomial};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        format!(
            "criterion {} ({}): {} [{:.1} s, budget {:.0} s]",
            self.id,
            self.title,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds,
            self.budget_seconds
        )
    }
}

/// One multiplicity run kept for the Morse-count comparison.
struct MultiplicityRun {
    label: String,
    poly: PoincarePolynomial,
    report: SolveReport,
}

/// State built by early criteria and reused by later ones.
struct Shared {
    profile24: Option<RadialProfile>,
    /// The large refined sphere with its induced metric; built for the
    /// ansatz-gap check, reused as the degenerate control.
    sphere: Option<(SurfaceMesh, MetricField)>,
    runs: Vec<MultiplicityRun>,
}

struct Check {
    pass: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            pass: true,
            details: Vec::new(),
        }
    }

    /// Records one assertion: the detail line plus whether it held.
    fn assert(&mut self, ok: bool, detail: String) {
        self.pass &= ok;
        self.details
            .push(format!("{} {detail}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, detail: String) {
        self.details.push(format!("     {detail}"));
    }
}

type CheckResult = Result<Check, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn fmt_seq(values: &[f64]) -> String {
    let body: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", body.join(", "))
}

fn profile24(shared: &mut Shared) -> Result<RadialProfile, String> {
    if shared.profile24.is_none() {
        let params = ProblemParams::new(2, 4.0).map_err(err)?;
        shared.profile24 = Some(shoot_ground_state(&params, 1e-6).map_err(err)?);
    }
    Ok(shared.profile24.clone().unwrap())
}

// -- criterion 1 -----------------------------------------------------------

fn shooting_anchors(shared: &mut Shared) -> CheckResult {
    let mut c = Check::new();
    for p in [3.0, 4.0, 6.0] {
        let params = ProblemParams::new(1, p).map_err(err)?;
        let prof = shoot_ground_state(&params, 1e-6).map_err(err)?;
        let closed_form = (p / 2.0).powf(1.0 / (p - 2.0));
        let gap = (prof.u0 - closed_form).abs();
        c.assert(
            gap <= 1e-6,
            format!("1d p={p}: |u0 - (p/2)^(1/(p-2))| = {gap:.2e} <= 1e-6"),
        );
        if p == 4.0 {
            let nehari = prof.nehari_residual();
            let poh = pohozaev_check(&prof);
            c.assert(nehari < 1e-5, format!("1d p=4 Nehari residual {nehari:.2e} < 1e-5"));
            c.assert(poh < 1e-5, format!("1d p=4 Pohozaev residual {poh:.2e} < 1e-5"));
        }
    }
    let prof = profile24(shared)?;
    let oracle = collocation_u0_extrapolated(&prof.params, 8000, 2.2).map_err(err)?;
    let rel = (prof.u0 - oracle).abs() / oracle;
    c.assert(
        rel <= 1e-6,
        format!("2d p=4: |u0 - collocation| / u0 = {rel:.2e} <= 1e-6"),
    );
    let nehari = prof.nehari_residual();
    let poh = pohozaev_check(&prof);
    c.assert(nehari < 1e-5, format!("2d p=4 Nehari residual {nehari:.2e} < 1e-5"));
    c.assert(poh < 1e-5, format!("2d p=4 Pohozaev residual {poh:.2e} < 1e-5"));
    Ok(c)
}

// -- criterion 2 -----------------------------------------------------------

fn analytic_anchors(shared: &mut Shared) -> CheckResult {
    let mut c = Check::new();
    let params1 = ProblemParams::new(1, 4.0).map_err(err)?;
    let prof1 = shoot_ground_state(&params1, 1e-6).map_err(err)?;
    let gap = (prof1.m_infty - 4.0 / 3.0).abs();
    c.assert(gap <= 1e-6, format!("1d p=4 energy: |m - 4/3| = {gap:.2e} <= 1e-6"));

    let prof = profile24(shared)?;
    let mesh = flat_torus(24);
    let metric = MetricField::induced(&mesh);
    let setting = EnergySetting::assemble(&mesh, &metric, 1.0, prof.params).map_err(err)?;
    let one = ScalarField::constant(setting.n_vertices(), 1.0);
    let j1 = setting.energy(&one).map_err(err)?;
    c.assert(
        (j1 - 0.25).abs() <= 1e-10,
        format!("unit torus, eps=1: |J(1) - 1/4| = {:.2e} <= 1e-10", (j1 - 0.25).abs()),
    );

    let vol = setting.volume();
    let ehat = eps_hat(&prof.params, vol, prof.m_infty);
    let two_m = 2.0 * prof.m_infty;
    let j_at = |eps: f64| -> Result<f64, String> {
        let s = EnergySetting::assemble(&mesh, &metric, eps, prof.params).map_err(err)?;
        s.energy(&ScalarField::constant(s.n_vertices(), 1.0)).map_err(err)
    };
    let j_below = j_at(0.9 * ehat)?;
    let j_above = j_at(1.1 * ehat)?;
    c.assert(
        j_below > two_m,
        format!("J(1) at 0.9*threshold = {j_below:.4} > 2m = {two_m:.4}"),
    );
    c.assert(
        !(j_above < two_m),
        format!("J(1) at 1.1*threshold = {j_above:.4} not below 2m = {two_m:.4}"),
    );
    Ok(c)
}

// -- criterion 3 -----------------------------------------------------------

fn calculus_consistency(shared: &mut Shared) -> CheckResult {
    let mut c = Check::new();
    let prof = profile24(shared)?;
    let mesh = icosphere(4);
    c.note(format!("mesh: refined sphere, {} vertices", mesh.n_vertices()));
    let metric = MetricField::induced(&mesh);
    let setting = EnergySetting::assemble(&mesh, &metric, 0.5, prof.params).map_err(err)?;
    let n = setting.n_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    // positive base field, away from the u = 0 kink of (u⁺)ᵖ
    let u = ScalarField::new((0..n).map(|_| 0.8 + 0.6 * rng.gen::<f64>()).collect());
    let grad = setting.gradient(&u).map_err(err)?;
    let step = 1e-5;
    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    for _ in 0..20 {
        let dir: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let shift = |s: f64| {
            ScalarField::new(u.values().iter().zip(&dir).map(|(a, d)| a + s * d).collect())
        };
        let (up, dn) = (shift(step), shift(-step));
        let fd = (setting.energy(&up).map_err(err)? - setting.energy(&dn).map_err(err)?)
            / (2.0 * step);
        let exact: f64 = grad.values().iter().zip(&dir).map(|(g, d)| g * d).sum();
        worst_grad = worst_grad.max((fd - exact).abs() / exact.abs().max(1e-12));

        let hv = setting
            .hessian_apply(&u, &ScalarField::new(dir.clone()))
            .map_err(err)?;
        let gp = setting.gradient(&up).map_err(err)?;
        let gn = setting.gradient(&dn).map_err(err)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let fd_i = (gp.values()[i] - gn.values()[i]) / (2.0 * step);
            num += (fd_i - hv.values()[i]).powi(2);
            den += hv.values()[i].powi(2);
        }
        worst_hess = worst_hess.max((num / den).sqrt());
    }
    c.assert(
        worst_grad < 1e-5,
        format!("gradient vs central differences, 20 directions: worst rel {worst_grad:.2e} < 1e-5"),
    );
    c.assert(
        worst_hess < 1e-4,
        format!("Hessian-apply vs gradient differences: worst rel {worst_hess:.2e} < 1e-4"),
    );
    Ok(c)
}

// -- criterion 4 -----------------------------------------------------------

const SPHERE_REFINE: u32 = 8;

fn sphere(shared: &mut Shared) -> &(SurfaceMesh, MetricField) {
    if shared.sphere.is_none() {
        let mesh = icosphere(SPHERE_REFINE);
        let metric = MetricField::induced(&mesh);
        shared.sphere = Some((mesh, metric));
    }
    shared.sphere.as_ref().unwrap()
}

fn ansatz_gaps_shrink(shared: &mut Shared) -> CheckResult {
    let prof = profile24(shared)?;
    let mut c = Check::new();
    let (mesh, metric) = sphere(shared);
    c.note(format!("mesh: refined sphere, {} vertices", mesh.n_vertices()));
    let centers = farthest_point_sample(mesh, metric, 3, 0);
    c.note(format!("well-separated centers: {centers:?}"));
    let radius = 1.8;
    let eps_list = [0.4, 0.2, 0.1, 0.05];
    for &q in &centers {
        let mut energy_gaps = Vec::new();
        let mut t_gaps = Vec::new();
        for &eps in &eps_list {
            let setting = EnergySetting::assemble(mesh, metric, eps, prof.params).map_err(err)?;
            let a = build_ansatz(&setting, &prof, mesh, metric, q, radius).map_err(err)?;
            energy_gaps.push((a.energy_after_projection - prof.m_infty).abs());
            t_gaps.push((a.nehari_t - 1.0).abs());
        }
        let strictly_down = |g: &[f64]| g.windows(2).all(|w| w[1] < w[0]);
        c.assert(
            strictly_down(&energy_gaps),
            format!(
                "center {q}: |J(ansatz) - m| strictly decreasing over eps {eps_list:?}: {}",
                fmt_seq(&energy_gaps)
            ),
        );
        c.assert(
            strictly_down(&t_gaps),
            format!("center {q}: |t(w) - 1| strictly decreasing: {}", fmt_seq(&t_gaps)),
        );
    }
    Ok(c)
}

// -- criterion 5 -----------------------------------------------------------

fn barycenter_gap_halves(shared: &mut Shared) -> CheckResult {
    let prof = profile24(shared)?;
    let mut c = Check::new();
    let cases: [(&str, SurfaceMesh, usize); 2] = {
        let s = icosphere(6);
        let q = s.n_vertices() / 2;
        let t = flat_torus(64);
        [("sphere", s, q), ("torus", t, 0)]
    };
    for (label, mesh, q) in &cases {
        let metric = MetricField::induced(mesh);
        let qx = mesh.vertex(*q).to_vec();
        let mut gaps = Vec::new();
        for &eps in &[0.2, 0.1, 0.05] {
            let setting = EnergySetting::assemble(mesh, &metric, eps, prof.params).map_err(err)?;
            let r = 0.8 * injectivity_estimate(mesh, &metric, *q);
            let u = phi(&setting, &prof, mesh, &metric, *q, r).map_err(err)?;
            let b = barycenter(&setting, mesh, &u).map_err(err)?;
            let gap: f64 = b
                .point
                .iter()
                .zip(&qx)
                .map(|(a, x)| (a - x) * (a - x))
                .sum::<f64>()
                .sqrt();
            gaps.push(gap);
        }
        for w in gaps.windows(2) {
            let ratio = w[1] / w[0];
            c.assert(
                ratio <= 0.625,
                format!("{label}: halving eps scales the barycenter gap by {ratio:.3} <= 0.625"),
            );
        }
        c.note(format!(
            "{label} gaps over eps [0.2, 0.1, 0.05]: {}",
            fmt_seq(&gaps)
        ));
    }
    Ok(c)
}

// -- criterion 6 -----------------------------------------------------------

const MULT_EPS: f64 = 0.08;
const PERTURB_RHO: f64 = 0.02;
const PERTURB_SEEDS: [u64; 3] = [11, 12, 13];

fn multiplicity_counts(shared: &mut Shared) -> CheckResult {
    let prof = profile24(shared)?;
    let mut c = Check::new();
    let delta = 0.1 * prof.m_infty;
    let cases: [(&str, SurfaceMesh, usize); 2] =
        [("sphere", icosphere(5), 2), ("torus", flat_torus(48), 4)];
    for (label, mesh, expected_p1) in cases {
        let poly = betti(&mesh, 2).map_err(err)?;
        let p1 = poly.p1();
        c.assert(
            p1 == expected_p1,
            format!("{label}: total Betti number {p1} == {expected_p1}"),
        );
        let mut metrics: Vec<(String, MetricField)> =
            vec![("h = 0".into(), MetricField::induced(&mesh))];
        for s in PERTURB_SEEDS {
            let h = sample_perturbation(&mesh, PERTURB_RHO, s).map_err(err)?;
            metrics.push((
                format!("h seed {s}"),
                MetricField::perturbed(&mesh, &h).map_err(err)?,
            ));
        }
        for (tag, metric) in metrics {
            let family = default_seed_family(&mesh, &metric, p1);
            let report = multiplicity_run(
                &mesh,
                &metric,
                &prof,
                MULT_EPS,
                delta,
                &family,
                p1,
                &SearchOptions::standard(&prof, MULT_EPS),
            )
            .map_err(err)?;
            c.assert(
                !report.outside_regime,
                format!("{label} {tag}: eps {MULT_EPS} inside the constant-exclusion regime"),
            );
            c.assert(
                report.distinct_count >= p1,
                format!(
                    "{label} {tag}: {} distinct solutions below 2m - delta >= {p1}",
                    report.distinct_count
                ),
            );
            let worst_nehari = report
                .records
                .iter()
                .map(|r| r.nehari_residual)
                .fold(0.0f64, f64::max);
            let all_positive = report
                .records
                .iter()
                .all(|r| r.strong_positive && r.min_value > -1e-8);
            c.assert(
                worst_nehari <= 1e-6,
                format!("{label} {tag}: worst Nehari residual {worst_nehari:.2e} <= 1e-6"),
            );
            c.assert(
                all_positive,
                format!("{label} {tag}: every record positive after smoothing"),
            );
            shared.runs.push(MultiplicityRun {
                label: format!("{label} {tag}"),
                poly: poly.clone(),
                report,
            });
        }
    }
    Ok(c)
}

// -- criterion 7 -----------------------------------------------------------

fn morse_census(shared: &mut Shared) -> CheckResult {
    let prof = profile24(shared)?;
    let mut c = Check::new();
    if shared.runs.is_empty() {
        return Err("no multiplicity runs recorded; the count check must run first".into());
    }
    let mut qualifying = 0usize;
    for run in &shared.runs {
        let records = &run.report.records;
        let all_nondeg = !records.is_empty() && records.iter().all(|r| !r.degenerate);
        if !all_nondeg {
            c.note(format!("{}: skipped (degenerate record present)", run.label));
            continue;
        }
        qualifying += 1;
        let indices: Vec<usize> = records.iter().map(|r| r.morse_index).collect();
        let check = morse_relation_check(&indices, &run.poly).map_err(err)?;
        c.assert(
            check.pass,
            format!(
                "{}: index surplus over Betti numbers {:?} all nonnegative",
                run.label, check.z_coeffs
            ),
        );
        let minimizer = records
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
            .unwrap();
        c.assert(
            minimizer.morse_index == 1,
            format!(
                "{}: lowest-energy record has Morse index {} == 1",
                run.label, minimizer.morse_index
            ),
        );
    }
    c.assert(
        qualifying > 0,
        format!("{qualifying} of {} runs fully nondegenerate", shared.runs.len()),
    );

    // Cross-check the iterative eigensolver against a dense eigendecomposition
    // on a mesh small enough to factor completely.
    let mesh = flat_torus(16);
    c.note(format!("dense cross-check mesh: torus, {} vertices", mesh.n_vertices()));
    let metric = MetricField::induced(&mesh);
    let setting = EnergySetting::assemble(&mesh, &metric, MULT_EPS, prof.params).map_err(err)?;
    let ctx = SolveContext::new(&mesh, &metric, &setting, &prof);
    let opts = NewtonOptions::standard(distinct_threshold(&prof, MULT_EPS));
    let r = (0.8 * injectivity_estimate(&mesh, &metric, 0)).min(0.4);
    let a = build_ansatz(&setting, &prof, &mesh, &metric, 0, r).map_err(err)?;
    let rec = newton_solve(&ctx, &a.projected(), &[], 0, &opts).map_err(err)?;
    let iterative = morse_index(&setting, &rec.field, None).map_err(err)?;
    let dense = morse_index_dense(&setting, &rec.field, None).map_err(err)?;
    c.assert(
        iterative.index == 1 && dense.index == 1,
        format!(
            "coarse-mesh minimizer: iterative index {} and dense index {} both 1",
            iterative.index, dense.index
        ),
    );
    Ok(c)
}

// -- criterion 8 -----------------------------------------------------------

fn homology_anchors(_shared: &mut Shared) -> CheckResult {
    let mut c = Check::new();
    let cases: [(&str, SurfaceMesh, Vec<usize>); 3] = [
        ("octahedron sphere", octahedron(), vec![1, 0, 1]),
        ("torus", flat_torus(8), vec![1, 2, 1]),
        ("projective plane", projective_plane(0), vec![1, 1, 1]),
    ];
    for (label, mesh, expected) in cases {
        let mut m = mesh;
        for level in 0..3 {
            let poly = betti(&m, 2).map_err(err)?;
            c.assert(
                poly.coeffs == expected,
                format!("{label}, refinement {level}: Betti over GF(2) {:?} == {expected:?}", poly.coeffs),
            );
            c.assert(
                poly.euler() == m.euler_characteristic(),
                format!(
                    "{label}, refinement {level}: alternating sum {} == V - E + F = {}",
                    poly.euler(),
                    m.euler_characteristic()
                ),
            );
            if level < 2 {
                m = m.refine_midpoint();
            }
        }
    }
    Ok(c)
}

// -- criterion 9 -----------------------------------------------------------

fn nondegeneracy_probe(shared: &mut Shared) -> CheckResult {
    let prof = profile24(shared)?;
    let mut c = Check::new();
    let mesh = flat_torus(48);
    let summary =
        genericity_probe(&mesh, &prof, (0.06, 0.12), PERTURB_RHO, 10, 4, 4).map_err(err)?;
    c.assert(
        summary.samples.len() == 10,
        format!("{} sampled (eps, h) pairs", summary.samples.len()),
    );
    let worst = summary
        .samples
        .iter()
        .map(|s| s.min_margin_ratio)
        .fold(f64::INFINITY, f64::min);
    c.assert(
        summary.samples.iter().all(|s| s.all_nondegenerate),
        format!(
            "perturbed torus: every record nondegenerate; smallest |eig| / tol = {worst:.1}"
        ),
    );

    // Control: the same spike on the unperturbed round sphere carries the
    // rotational near-kernel, and the probe must flag it. The mesh has to be
    // fine enough that discretization does not break the symmetry above the
    // degeneracy threshold, and Newton needs a tight inner solve to converge
    // next to the near-singular pair.
    let (mesh, metric) = sphere(shared);
    c.note(format!(
        "control mesh: round sphere, {} vertices, no perturbation",
        mesh.n_vertices()
    ));
    let setting = EnergySetting::assemble(mesh, metric, MULT_EPS, prof.params).map_err(err)?;
    let ctx = SolveContext::new(mesh, metric, &setting, &prof);
    let mut opts = NewtonOptions::standard(distinct_threshold(&prof, MULT_EPS));
    opts.tol = 1e-7;
    opts.max_iters = 300;
    opts.inner_rel = 1e-3;
    let v = mesh.n_vertices() / 2;
    let r = (0.8 * injectivity_estimate(mesh, metric, v)).min(0.4);
    let a = build_ansatz(&setting, &prof, mesh, metric, v, r).map_err(err)?;
    let rec = newton_solve(&ctx, &a.projected(), &[], v, &opts).map_err(err)?;
    c.assert(
        rec.degenerate,
        format!(
            "round sphere flagged degenerate: |eig| / tol = {:.3} < 1 (symmetry kernel)",
            rec.min_abs_eig / rec.tol_eig
        ),
    );
    Ok(c)
}

// -- driver ----------------------------------------------------------------

pub fn run_all() -> Vec<CriterionReport> {
    let mut shared = Shared {
        profile24: None,
        sphere: None,
        runs: Vec::new(),
    };
    type Criterion = (usize, &'static str, f64, fn(&mut Shared) -> CheckResult);
    let criteria: [Criterion; 9] = [
        (1, "ground-state shooting vs closed forms and collocation", 5.0, shooting_anchors),
        (2, "analytic energy anchors and constant-branch threshold", 10.0, analytic_anchors),
        (3, "gradient and Hessian vs finite differences", 30.0, calculus_consistency),
        (4, "ansatz energy and scaling gaps shrink with eps", 300.0, ansatz_gaps_shrink),
        (5, "barycenter gap halves when eps halves", 300.0, barycenter_gap_halves),
        (6, "multiplicity counts on sphere and torus", 1200.0, multiplicity_counts),
        (7, "Morse index census against Betti numbers", 600.0, morse_census),
        (8, "homology anchors over GF(2)", 60.0, homology_anchors),
        (9, "nondegeneracy probe vs round-sphere control", 1800.0, nondegeneracy_probe),
    ];
    let mut reports = Vec::new();
    for (id, title, budget_seconds, f) in criteria {
        let t0 = Instant::now();
        let (mut pass, mut details) = match f(&mut shared) {
            Ok(c) => (c.pass, c.details),
            Err(e) => (false, vec![format!("FAIL aborted: {e}")]),
        };
        let seconds = t0.elapsed().as_secs_f64();
        let in_budget = seconds < budget_seconds;
        details.push(format!(
            "{} runtime {seconds:.1} s within budget {budget_seconds:.0} s",
            if in_budget { "ok  " } else { "FAIL" }
        ));
        pass &= in_budget;
        reports.push(CriterionReport {
            id,
            title,
            pass,
            details,
            seconds,
            budget_seconds,
        });
    }
    reports
}
