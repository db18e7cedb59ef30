//! Cross-checks of the geodesic solver and the perturbation norm against
//! independent references: closed-form distances on the flat torus and the
//! round sphere, and an exact centered-difference recomputation of chart
//! derivatives (the chart component field of a polynomial ambient tensor is
//! itself polynomial on the chart plane, so centered differences with any
//! step are exact for it up to rounding).

use spikes_core::manifold::{
    distance_field, flat_torus, icosphere, sample_perturbation, tensor_norm, MetricField,
    PerturbationMode, PerturbationTensor, SurfaceMesh,
};

#[test]
fn flat_torus_distances_match_fundamental_domain() {
    let m = 64usize;
    let mesh = flat_torus(m);
    let g = MetricField::induced(&mesh);
    let d = distance_field(&mesh, &g, 0);
    let s = 1.0 / m as f64;
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let di = i.min(m - i) as f64;
            let dj = j.min(m - j) as f64;
            let truth = (di * di + dj * dj).sqrt() * s;
            if truth == 0.0 || truth >= 0.5 {
                continue;
            }
            let got = d[i * m + j];
            worst = worst.max((got - truth).abs() / truth);
            if j == 0 || i == 0 {
                // grid-axis geodesics run along mesh edges and are exact
                assert!((got - truth).abs() < 1e-10, "axis distance ({i},{j})");
            }
        }
    }
    assert!(worst < 0.01, "worst relative error {worst:.3e}");
}

#[test]
fn sphere_distances_match_arc_length() {
    let mesh = icosphere(5);
    assert!(mesh.n_vertices() >= 10_000);
    let g = MetricField::induced(&mesh);
    let d = distance_field(&mesh, &g, 0);
    let src = mesh.vertex(0).to_vec();
    let mut worst = 0.0f64;
    let mut equator_checked = 0usize;
    for v in 1..mesh.n_vertices() {
        let dot: f64 = src.iter().zip(mesh.vertex(v)).map(|(a, b)| a * b).sum();
        let truth = dot.clamp(-1.0, 1.0).acos();
        if truth < 0.2 || truth > 2.9 {
            continue;
        }
        let rel = (d[v] - truth).abs() / truth;
        worst = worst.max(rel);
        if (truth - std::f64::consts::FRAC_PI_2).abs() < 0.05 {
            equator_checked += 1;
            assert!(rel < 0.02, "equator vertex {v}: rel error {rel:.3e}");
        }
    }
    assert!(equator_checked > 100, "too few equator-band vertices");
    assert!(worst < 0.02, "worst relative error {worst:.3e}");
}

/// Exact centered differences of the planar chart-component field; `delta`
/// is arbitrary for polynomial modes, so sharing no machinery or step size
/// with the least-squares estimator inside `tensor_norm`.
fn brute_force_norm(h: &PerturbationTensor, mesh: &SurfaceMesh, k: u32, delta: f64) -> f64 {
    let g = MetricField::induced(mesh);
    let nd = mesh.ambient_dim();
    let mut buf = vec![0.0; nd * nd];
    let mut worst = 0.0f64;
    for f in 0..mesh.n_faces() {
        let x0 = mesh.face_barycenter(f);
        let (e1, e2) = g.frame(f);
        let mut comp = |y1: f64, y2: f64| -> [f64; 3] {
            let x: Vec<f64> = (0..nd).map(|d| x0[d] + y1 * e1[d] + y2 * e2[d]).collect();
            h.eval_ambient(&x, &mut buf);
            let quad = |a: &[f64], b: &[f64], m: &[f64]| -> f64 {
                let mut s = 0.0;
                for i in 0..nd {
                    for j in 0..nd {
                        s += a[i] * m[i * nd + j] * b[j];
                    }
                }
                s
            };
            [quad(e1, e1, &buf), quad(e1, e2, &buf), quad(e2, e2, &buf)]
        };
        let c0 = comp(0.0, 0.0);
        let cp1 = comp(delta, 0.0);
        let cm1 = comp(-delta, 0.0);
        let cp2 = comp(0.0, delta);
        let cm2 = comp(0.0, -delta);
        let cpp = comp(delta, delta);
        let cpm = comp(delta, -delta);
        let cmp_ = comp(-delta, delta);
        let cmm = comp(-delta, -delta);
        let mut total = 0.0;
        for c in 0..3 {
            total += c0[c].abs();
            if k >= 1 {
                total += ((cp1[c] - cm1[c]) / (2.0 * delta)).abs();
                total += ((cp2[c] - cm2[c]) / (2.0 * delta)).abs();
            }
            if k == 2 {
                total += ((cp1[c] - 2.0 * c0[c] + cm1[c]) / (delta * delta)).abs();
                total += ((cpp[c] - cpm[c] - cmp_[c] + cmm[c]) / (4.0 * delta * delta)).abs();
                total += ((cp2[c] - 2.0 * c0[c] + cm2[c]) / (delta * delta)).abs();
            }
        }
        worst = worst.max(total);
    }
    worst
}

#[test]
fn tensor_norm_matches_independent_stencil() {
    // a hand-picked 3-mode field with one cubic monomial, so the quadratic
    // least-squares fit inside tensor_norm is genuinely approximate
    let modes = vec![
        PerturbationMode {
            powers: vec![1, 1, 1],
            row: 0,
            col: 1,
            coeff: 0.013,
        },
        PerturbationMode {
            powers: vec![2, 0, 0],
            row: 1,
            col: 2,
            coeff: -0.009,
        },
        PerturbationMode {
            powers: vec![0, 1, 0],
            row: 0,
            col: 0,
            coeff: 0.007,
        },
    ];
    let h = PerturbationTensor::from_modes(3, 2, 0.05, modes);
    let mesh = icosphere(3);
    for k in 0..=2 {
        let prod = tensor_norm(&h, &mesh, k).unwrap();
        let brute = brute_force_norm(&h, &mesh, k, 0.02);
        let rel = (prod - brute).abs() / brute;
        assert!(rel < 0.05, "k = {k}: {prod:.6e} vs {brute:.6e} (rel {rel:.2e})");
    }
}

#[test]
fn sampled_perturbation_norm_matches_independent_stencil() {
    let mesh = icosphere(3);
    let h = sample_perturbation(&mesh, 0.05, 7).unwrap();
    for k in 0..=2 {
        let prod = tensor_norm(&h, &mesh, k).unwrap();
        let brute = brute_force_norm(&h, &mesh, k, 0.03);
        let rel = (prod - brute).abs() / brute;
        assert!(rel < 0.05, "k = {k}: {prod:.6e} vs {brute:.6e} (rel {rel:.2e})");
    }
}
