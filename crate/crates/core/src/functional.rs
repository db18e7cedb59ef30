//! The singular-perturbation energy on a metric surface: P1 finite elements
//! for the quadratic part, vertex-lumped quadrature for the superlinear
//! term, and the Nehari-manifold projection built on top of both.
//!
//! The lumped nonlinearity is what keeps the discrete calculus closed: the
//! constant field 1 solves the discrete Euler–Lagrange equation *exactly*
//! (its gradient vanishes to rounding, not to quadrature error), and the
//! Nehari projection of any field satisfies the manifold constraint to
//! rounding. All `1/εⁿ` prefactors stay explicit so reported energies keep
//! the paper-style normalization used by the rest of the crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Csr;
use crate::manifold::{MetricField, SurfaceMesh};
use crate::profile::ProblemParams;

/// `xᵖ` with an exact integer-power path: for integral p the result is a
/// plain product chain, which keeps identities like `(2x)ᵖ = 2ᵖ·xᵖ` exact
/// in floating point (dyadic scalings commute with the power bitwise).
#[inline]
pub fn pow_p(x: f64, p: f64) -> f64 {
    let r = p.round();
    if r == p && (0.0..=16.0).contains(&r) {
        x.powi(r as i32)
    } else {
        x.powf(p)
    }
}

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("field has {field} entries but the setting has {setting} vertices")]
    DimensionMismatch { field: usize, setting: usize },
    #[error("mesh energies require n = 2, got n = {0}")]
    UnsupportedDimension(u32),
    #[error("positive part is identically zero; Nehari projection undefined")]
    ZeroPositivePart,
    #[error("ε must be positive and finite, got {0}")]
    InvalidEps(f64),
}

/// One real value per mesh vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite()),
            "scalar field entries must be finite"
        );
        ScalarField { values }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        ScalarField::new(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        ScalarField {
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, s: f64) -> Self {
        ScalarField::new(self.values.iter().map(|v| s * v).collect())
    }

    pub fn positive_part(&self) -> Self {
        ScalarField {
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Assembled discrete energy `J_{ε,g}` with its ε-scaled norms.
pub struct EnergySetting {
    eps: f64,
    params: ProblemParams,
    /// ∫ ∇φᵢ·∇φⱼ dμ_g (metric Dirichlet form)
    stiffness: Csr,
    /// ∫ φᵢφⱼ dμ_g (consistent P1 mass)
    mass: Csr,
    /// row sums of the mass matrix (vertex quadrature weights)
    lumped: Vec<f64>,
    volume: f64,
}

impl EnergySetting {
    pub fn assemble(
        mesh: &SurfaceMesh,
        metric: &MetricField,
        eps: f64,
        params: ProblemParams,
    ) -> Result<Self, FunctionalError> {
        if params.n != 2 {
            return Err(FunctionalError::UnsupportedDimension(params.n));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(FunctionalError::InvalidEps(eps));
        }
        let nv = mesh.n_vertices();
        let mut s_trip = Vec::with_capacity(9 * mesh.n_faces());
        let mut m_trip = Vec::with_capacity(9 * mesh.n_faces());
        for f in 0..mesh.n_faces() {
            let verts = mesh.faces()[f];
            let ch = metric.chart(f);
            let [g11, g12, g22] = metric.face_metric(f);
            let det = g11 * g22 - g12 * g12;
            let inv = [g22 / det, -g12 / det, g11 / det];
            // P1 shape gradients on the chart triangle
            let (p0, p1, p2) = (ch[0], ch[1], ch[2]);
            let twice_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            let grads = [
                [(p1[1] - p2[1]) / twice_area, (p2[0] - p1[0]) / twice_area],
                [(p2[1] - p0[1]) / twice_area, (p0[0] - p2[0]) / twice_area],
                [(p0[1] - p1[1]) / twice_area, (p1[0] - p0[0]) / twice_area],
            ];
            let area_g = metric.face_area(f);
            for i in 0..3 {
                for j in 0..3 {
                    let gi = grads[i];
                    let gj = grads[j];
                    // ∇φᵢᵀ G⁻¹ ∇φⱼ, weighted by the metric area
                    let dirichlet =
                        gi[0] * (inv[0] * gj[0] + inv[1] * gj[1]) + gi[1] * (inv[1] * gj[0] + inv[2] * gj[1]);
                    s_trip.push((verts[i], verts[j], dirichlet * area_g));
                    let m_entry = area_g / if i == j { 6.0 } else { 12.0 };
                    m_trip.push((verts[i], verts[j], m_entry));
                }
            }
        }
        let stiffness = Csr::from_triplets(nv, s_trip);
        let mass = Csr::from_triplets(nv, m_trip);
        let lumped = mass.row_sums();
        let volume = lumped.iter().sum();
        Ok(EnergySetting {
            eps,
            params,
            stiffness,
            mass,
            lumped,
            volume,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn n_vertices(&self) -> usize {
        self.lumped.len()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    pub fn mass(&self) -> &Csr {
        &self.mass
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    fn check(&self, u: &ScalarField) -> Result<(), FunctionalError> {
        if u.len() != self.n_vertices() {
            return Err(FunctionalError::DimensionMismatch {
                field: u.len(),
                setting: self.n_vertices(),
            });
        }
        Ok(())
    }

    fn inv_eps_n(&self) -> f64 {
        self.eps.powi(-(self.params.n as i32))
    }

    /// `J_{ε,g}(u)`.
    pub fn energy(&self, u: &ScalarField) -> Result<f64, FunctionalError> {
        self.check(u)?;
        let x = u.values();
        let p = self.params.p;
        let quad = 0.5 * self.eps * self.eps * self.stiffness.quad_form(x) + 0.5 * self.mass.quad_form(x);
        let nonlin: f64 = x
            .iter()
            .zip(&self.lumped)
            .map(|(&v, &w)| w * pow_p(v.max(0.0), p))
            .sum();
        Ok(self.inv_eps_n() * (quad - nonlin / p))
    }

    /// Euclidean-coefficient representation of `J′(u)`.
    pub fn gradient(&self, u: &ScalarField) -> Result<ScalarField, FunctionalError> {
        self.check(u)?;
        let x = u.values();
        let n = x.len();
        let p = self.params.p;
        let scale = self.inv_eps_n();
        let mut su = vec![0.0; n];
        self.stiffness.matvec(x, &mut su);
        let mut mu = vec![0.0; n];
        self.mass.matvec(x, &mut mu);
        let e2 = self.eps * self.eps;
        let out = (0..n)
            .map(|i| scale * (e2 * su[i] + mu[i] - self.lumped[i] * pow_p(x[i].max(0.0), p - 1.0)))
            .collect();
        Ok(ScalarField::new(out))
    }

    /// Directional derivative of the gradient: `J″(u)[v]` as a field.
    pub fn hessian_apply(&self, u: &ScalarField, v: &ScalarField) -> Result<ScalarField, FunctionalError> {
        self.check(u)?;
        self.check(v)?;
        let n = u.len();
        let p = self.params.p;
        let scale = self.inv_eps_n();
        let mut sv = vec![0.0; n];
        self.stiffness.matvec(v.values(), &mut sv);
        let mut mv = vec![0.0; n];
        self.mass.matvec(v.values(), &mut mv);
        let e2 = self.eps * self.eps;
        let out = (0..n)
            .map(|i| {
                let w = pow_p(u.values()[i].max(0.0), p - 2.0);
                scale * (e2 * sv[i] + mv[i] - (p - 1.0) * self.lumped[i] * w * v.values()[i])
            })
            .collect();
        Ok(ScalarField::new(out))
    }

    /// The Gram matrix of the `|||·|||_ε` inner product,
    /// `(1/εⁿ)(ε²S + M)`, assembled explicitly. Symmetric positive definite.
    pub fn norm_gram(&self) -> Csr {
        let scale = self.inv_eps_n();
        self.stiffness
            .linear_combination(scale * self.eps * self.eps, &self.mass, scale)
    }

    /// `J″(u)` assembled as a sparse matrix: the norm Gram plus the negative
    /// diagonal `-(p-1)/εⁿ · wᵢ (uᵢ⁺)^{p-2}` from the nonlinearity.
    pub fn hessian_matrix(&self, u: &ScalarField) -> Result<Csr, FunctionalError> {
        self.check(u)?;
        let p = self.params.p;
        let scale = self.inv_eps_n();
        let mut h = self.norm_gram();
        let d: Vec<f64> = u
            .values()
            .iter()
            .zip(&self.lumped)
            .map(|(&x, &w)| -(p - 1.0) * scale * w * pow_p(x.max(0.0), p - 2.0))
            .collect();
        h.add_diagonal(&d, 1.0);
        Ok(h)
    }

    /// `|||u|||²_{ε,g} = (1/εⁿ)(ε²·uᵀSu + uᵀMu)`.
    pub fn norm_eps_sq(&self, u: &ScalarField) -> Result<f64, FunctionalError> {
        self.check(u)?;
        let x = u.values();
        Ok(self.inv_eps_n()
            * (self.eps * self.eps * self.stiffness.quad_form(x) + self.mass.quad_form(x)))
    }

    /// `|u⁺|ᵖ_{p,g,ε} = (1/εⁿ)·Σᵢ wᵢ (uᵢ⁺)ᵖ` by the lumped quadrature.
    pub fn lp_eps_pow_p(&self, u: &ScalarField) -> Result<f64, FunctionalError> {
        self.check(u)?;
        let p = self.params.p;
        Ok(self.inv_eps_n()
            * u.values()
                .iter()
                .zip(&self.lumped)
                .map(|(&v, &w)| w * pow_p(v.max(0.0), p))
                .sum::<f64>())
    }

    /// The Nehari scaling factor: `t(u)·u` satisfies `J′(tu)[tu] = 0`.
    pub fn nehari_t(&self, u: &ScalarField) -> Result<f64, FunctionalError> {
        let norm_sq = self.norm_eps_sq(u)?;
        let lp = self.lp_eps_pow_p(u)?;
        if lp <= 0.0 {
            return Err(FunctionalError::ZeroPositivePart);
        }
        Ok((norm_sq / lp).powf(1.0 / (self.params.p - 2.0)))
    }

    /// Relative Nehari defect `|J′(u)[u]| / |||u|||²`.
    pub fn nehari_residual(&self, u: &ScalarField) -> Result<f64, FunctionalError> {
        let norm_sq = self.norm_eps_sq(u)?;
        let lp = self.lp_eps_pow_p(u)?;
        Ok((norm_sq - lp).abs() / norm_sq)
    }

    /// `|||u − 1|||_{ε,g}`, the separation from the constant solution.
    pub fn dist_to_constant(&self, u: &ScalarField) -> Result<f64, FunctionalError> {
        self.check(u)?;
        let diff = ScalarField::new(u.values().iter().map(|v| v - 1.0).collect());
        Ok(self.norm_eps_sq(&diff)?.sqrt())
    }

    /// Membership in the low-energy Nehari slice: on the manifold to within
    /// `NEHARI_TOL`, energy at most `bound`, and separated from the
    /// constant solution.
    pub fn in_low_energy_set(&self, u: &ScalarField, bound: f64) -> Result<bool, FunctionalError> {
        let residual = self.nehari_residual(u)?;
        let energy = self.energy(u)?;
        let sep = self.dist_to_constant(u)?;
        Ok(residual < NEHARI_TOL && energy <= bound && sep > CONSTANT_SEPARATION)
    }
}

/// Relative tolerance for the Nehari constraint `J′(u)[u] = 0`.
pub const NEHARI_TOL: f64 = 1e-10;

/// A field closer than this to the constant 1 does not count as a spike.
pub const CONSTANT_SEPARATION: f64 = 1e-3;

/// The ε below which the constant solution is pushed above twice the limit
/// energy: `J(1) = 4·m_∞` at this threshold, so smaller ε keeps every
/// low-energy candidate away from the constant branch.
pub fn eps_hat(params: &ProblemParams, volume: f64, m_infty: f64) -> f64 {
    let p = params.p;
    ((p - 2.0) * volume / (8.0 * p * m_infty)).powf(1.0 / params.n as f64)
}
