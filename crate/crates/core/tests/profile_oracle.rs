//! Cross-validation of the shooting-based ground state against an
//! independent finite-difference collocation solve of the same BVP.

use spikes_core::harness::oracles::{collocation_ground_state, collocation_u0_extrapolated};
use spikes_core::profile::{one_d_soliton, shoot_ground_state, ProblemParams};

#[test]
fn collocation_oracle_reproduces_the_line_soliton() {
    // the oracle itself is validated against the closed form on the line
    let params = ProblemParams::new(1, 4.0).unwrap();
    let u0 = collocation_u0_extrapolated(&params, 8000, 1.4).unwrap();
    assert!(
        (u0 - 2.0f64.sqrt()).abs() < 1e-8,
        "collocation centre value {u0} vs sqrt(2)"
    );

    let sol = collocation_ground_state(&params, 16000, 1.4).unwrap();
    for &x in &[0.5, 1.0, 2.0, 4.0] {
        let expect = one_d_soliton(4.0, x);
        assert!(
            (sol.eval(x) - expect).abs() < 1e-5,
            "x = {x}: {} vs {}",
            sol.eval(x),
            expect
        );
    }
}

#[test]
fn shooting_agrees_with_collocation_in_the_plane() {
    let params = ProblemParams::new(2, 4.0).unwrap();
    let profile = shoot_ground_state(&params, 1e-6).unwrap();

    let u0_oracle = collocation_u0_extrapolated(&params, 8000, 2.2).unwrap();
    let rel = (profile.u0 - u0_oracle).abs() / u0_oracle;
    assert!(
        rel < 1e-6,
        "centre values disagree: shooting {} vs collocation {} (rel {rel:.3e})",
        profile.u0,
        u0_oracle
    );

    // pointwise agreement at the oracle's discretization accuracy
    let sol = collocation_ground_state(&params, 16000, 2.2).unwrap();
    for &r in &[0.5, 1.0, 2.0, 4.0, 6.0] {
        let diff = (profile.eval(r) - sol.eval(r)).abs();
        assert!(diff < 5e-5, "r = {r}: shooting vs collocation differ by {diff:.3e}");
    }
}

#[test]
fn planar_centre_value_matches_literature() {
    // the planar p = 4 ground state peaks at ~2.20620, and its squared mass
    // is the critical mass ~11.70088; both values are well tabulated
    let params = ProblemParams::new(2, 4.0).unwrap();
    let profile = shoot_ground_state(&params, 1e-6).unwrap();
    assert!((profile.u0 - 2.20620).abs() < 5e-5);
    assert!((profile.l2sq - 11.70088).abs() < 5e-4);
}
