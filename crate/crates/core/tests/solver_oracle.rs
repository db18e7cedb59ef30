//! Cross-checks the Morse-index machinery against a dense generalized
//! eigensolve (nalgebra) on meshes small enough to afford one. The library
//! solves the pencil `J″(u) x = λ B x` iteratively above 200 vertices and by
//! its own Cholesky+Jacobi reduction below; both paths are compared here to
//! an independent implementation.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use spikes_core::ansatz::phi;
use spikes_core::functional::{EnergySetting, ScalarField};
use spikes_core::linalg::Csr;
use spikes_core::manifold::{flat_torus, injectivity_estimate, MetricField, SurfaceMesh};
use spikes_core::profile::{shoot_ground_state, ProblemParams, RadialProfile};
use spikes_core::solver::{
    distinct_threshold, morse_index, newton_solve, NewtonOptions, SolveContext,
};

fn setup(m: usize, eps: f64) -> (SurfaceMesh, MetricField, RadialProfile, EnergySetting) {
    let mesh = flat_torus(m);
    let metric = MetricField::induced(&mesh);
    let params = ProblemParams::new(2, 4.0).unwrap();
    let profile = shoot_ground_state(&params, 1e-6).unwrap();
    let setting = EnergySetting::assemble(&mesh, &metric, eps, params).unwrap();
    (mesh, metric, profile, setting)
}

fn densify(m: &Csr, n: usize) -> DMatrix<f64> {
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        e[j] = 1.0;
        m.matvec(&e, &mut col);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    out
}

/// All eigenvalues of the pencil `(J″(u), B)` by dense reduction
/// `C = L⁻¹ J″ L⁻ᵀ` with `B = LLᵀ`, sorted ascending.
fn dense_pencil_eigs(setting: &EnergySetting, u: &ScalarField) -> Vec<f64> {
    let n = setting.n_vertices();
    let h = densify(&setting.hessian_matrix(u).unwrap(), n);
    let b = densify(&setting.norm_gram(), n);
    let chol = Cholesky::new(b).expect("norm Gram is SPD");
    let l = chol.l();
    let y = l.solve_lower_triangular(&h).unwrap();
    let c = l.solve_lower_triangular(&y.transpose()).unwrap();
    let sym = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn count_below(vals: &[f64], cut: f64) -> usize {
    vals.iter().filter(|&&v| v < cut).count()
}

#[test]
fn lanczos_matches_dense_on_a_converged_spike() {
    let eps = 0.12;
    let (mesh, metric, profile, setting) = setup(24, eps); // 576 vertices: iterative path
    let ctx = SolveContext::new(&mesh, &metric, &setting, &profile);
    let radius = 0.8 * injectivity_estimate(&mesh, &metric, 0);
    let seed = phi(&setting, &profile, &mesh, &metric, 0, radius).unwrap();
    let opts = NewtonOptions::standard(distinct_threshold(&profile, eps));
    let rec = newton_solve(&ctx, &seed, &[], 0, &opts).unwrap();

    let eigs = dense_pencil_eigs(&setting, &rec.field);
    let dense_index = count_below(&eigs, -rec.tol_eig);
    let dense_min_abs = eigs.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()));

    assert_eq!(rec.morse_index, dense_index, "bottom eigenvalues: {:?}", &eigs[..6]);
    assert_eq!(rec.morse_index, 1, "a spike is a mountain pass");
    assert!(
        (rec.min_abs_eig - dense_min_abs).abs() < rec.tol_eig,
        "margin {} vs dense {}",
        rec.min_abs_eig,
        dense_min_abs
    );
    let dense_degenerate = dense_min_abs < rec.tol_eig;
    assert_eq!(rec.degenerate, dense_degenerate);
}

#[test]
fn internal_dense_path_matches_nalgebra() {
    let eps = 0.25;
    let (mesh, metric, profile, setting) = setup(13, eps); // 169 vertices: dense path
    let radius = 0.8 * injectivity_estimate(&mesh, &metric, 0);
    let u = phi(&setting, &profile, &mesh, &metric, 0, radius).unwrap();

    let data = morse_index(&setting, &u, None).unwrap();
    let eigs = dense_pencil_eigs(&setting, &u);
    let oracle_index = count_below(&eigs, -data.tol_eig);
    let oracle_min_abs = eigs.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()));

    assert_eq!(data.index, oracle_index);
    assert!(
        (data.min_abs_eig - oracle_min_abs).abs() < 1e-8 * data.lambda_scale + 1e-6 * oracle_min_abs,
        "margin {} vs dense {}",
        data.min_abs_eig,
        oracle_min_abs
    );
    // positive rescaling of the Hessian must not change the count
    let scaled_index = count_below(&eigs.iter().map(|&v| 2.0 * v).collect::<Vec<_>>(), -data.tol_eig);
    assert_eq!(oracle_index, scaled_index);
}

#[test]
fn constant_branch_index_grows_and_matches_dense() {
    let mut indices = Vec::new();
    for &eps in &[0.2, 0.15] {
        let (_mesh, _metric, _profile, setting) = setup(16, eps); // 256 vertices: iterative path
        let one = ScalarField::constant(setting.n_vertices(), 1.0);
        let data = morse_index(&setting, &one, None).unwrap();
        let eigs = dense_pencil_eigs(&setting, &one);
        let dense_index = count_below(&eigs, -data.tol_eig);
        assert_eq!(
            data.index, dense_index,
            "eps {eps}: iterative {} vs dense {} (bottom {:?})",
            data.index, dense_index, &eigs[..12.min(eigs.len())]
        );
        indices.push(data.index);
    }
    assert!(indices[0] >= 2, "constant at eps=0.2 should already be unstable");
    assert!(
        indices[1] > indices[0],
        "index should grow as eps shrinks: {indices:?}"
    );
}

#[test]
fn zero_field_pencil_is_the_identity() {
    // at u = 0 the nonlinearity vanishes and J″ equals the norm Gram, so
    // every pencil eigenvalue is exactly 1; exercises the Lanczos breakdown
    let (_mesh, _metric, _profile, setting) = setup(16, 0.2);
    let zero = ScalarField::zeros(setting.n_vertices());
    let data = morse_index(&setting, &zero, None).unwrap();
    assert_eq!(data.index, 0);
    assert!((data.min_abs_eig - 1.0).abs() < 1e-9, "margin {}", data.min_abs_eig);
    assert!(!data.degenerate);
}
