//! The spike ansatz: the scaled limit profile transplanted into a geodesic
//! ball through polar coordinates, cut off at radius `R`, and projected
//! onto the Nehari manifold. Also the barycenter map that reads a spike's
//! location back out of a field, which closes the topological argument
//! downstream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functional::{pow_p, EnergySetting, FunctionalError, ScalarField};
use crate::linalg::{solve_dense_small, jacobi_eigen_small};
use crate::manifold::{exp_map, ExpMapChart, GeodesicError, MetricField, SurfaceMesh};
use crate::profile::RadialProfile;

#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// `w_{q,ε}`: profile value at the geodesic distance, times the cutoff.
#[derive(Debug, Clone)]
pub struct SpikeAnsatz {
    pub center: usize,
    pub eps: f64,
    pub radius: f64,
    pub field: ScalarField,
    /// Nehari factor t(w); close to 1 once ε resolves the spike
    pub nehari_t: f64,
    pub energy_after_projection: f64,
}

impl SpikeAnsatz {
    /// The projected field `Φ(q) = t(w)·w`.
    pub fn projected(&self) -> ScalarField {
        self.field.scaled(self.nehari_t)
    }
}

/// `χ_R`: 1 on `[0, R/2]`, 0 from `R` on, cubic Hermite blend between.
/// C¹, monotone, with max slope exactly 3/R (no C¹ plateau cutoff can get
/// below the mean-value bound 2/R).
pub fn cutoff(t: f64, r: f64) -> f64 {
    if t <= 0.5 * r {
        1.0
    } else if t >= r {
        0.0
    } else {
        let s = (t - 0.5 * r) / (0.5 * r);
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// Builds the ansatz from an already-computed polar chart, so ε-sweeps at a
/// fixed center pay for fast marching once.
pub fn build_from_chart(
    setting: &EnergySetting,
    profile: &RadialProfile,
    chart: &ExpMapChart,
) -> Result<SpikeAnsatz, AnsatzError> {
    let eps = setting.eps();
    let mut values = vec![0.0; setting.n_vertices()];
    for s in &chart.samples {
        values[s.vertex] = profile.eval_scaled(eps, s.distance) * cutoff(s.distance, chart.radius);
    }
    let field = ScalarField::new(values);
    let t = setting.nehari_t(&field)?;
    let energy = setting.energy(&field.scaled(t))?;
    Ok(SpikeAnsatz {
        center: chart.center,
        eps,
        radius: chart.radius,
        field,
        nehari_t: t,
        energy_after_projection: energy,
    })
}

pub fn build_ansatz(
    setting: &EnergySetting,
    profile: &RadialProfile,
    mesh: &SurfaceMesh,
    metric: &MetricField,
    q: usize,
    radius: f64,
) -> Result<SpikeAnsatz, AnsatzError> {
    let chart = exp_map(mesh, metric, q, radius)?;
    build_from_chart(setting, profile, &chart)
}

/// `Φ(q)`: the Nehari projection of the ansatz centered at `q`.
pub fn phi(
    setting: &EnergySetting,
    profile: &RadialProfile,
    mesh: &SurfaceMesh,
    metric: &MetricField,
    q: usize,
    radius: f64,
) -> Result<ScalarField, AnsatzError> {
    Ok(build_ansatz(setting, profile, mesh, metric, q, radius)?.projected())
}

/// Center of mass of `(u⁺)ᵖ` in the embedding coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Barycenter {
    pub point: Vec<f64>,
    pub distance_to_mesh: f64,
}

pub fn barycenter(
    setting: &EnergySetting,
    mesh: &SurfaceMesh,
    u: &ScalarField,
) -> Result<Barycenter, AnsatzError> {
    let p = setting.params().p;
    let nd = mesh.ambient_dim();
    let mut num = vec![0.0; nd];
    let mut den = 0.0;
    for (i, (&v, &w)) in u.values().iter().zip(setting.lumped_mass()).enumerate() {
        let mass = w * pow_p(v.max(0.0), p);
        den += mass;
        for (acc, &x) in num.iter_mut().zip(mesh.vertex(i)) {
            *acc += mass * x;
        }
    }
    if den <= 0.0 {
        return Err(FunctionalError::ZeroPositivePart.into());
    }
    let point: Vec<f64> = num.into_iter().map(|c| c / den).collect();
    let distance_to_mesh = distance_to_surface(mesh, &point);
    Ok(Barycenter {
        point,
        distance_to_mesh,
    })
}

/// Whether the barycenter stays within distance `r` of the surface (the
/// tubular neighborhood the retraction argument needs).
pub fn in_tubular_neighborhood(b: &Barycenter, r: f64) -> bool {
    assert!(r > 0.0, "tube radius must be positive");
    b.distance_to_mesh < r
}

/// Minimal Euclidean distance from an ambient point to the triangulated
/// surface.
pub fn distance_to_surface(mesh: &SurfaceMesh, point: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for f in 0..mesh.n_faces() {
        let [a, b, c] = mesh.faces()[f];
        let d2 = point_triangle_dist_sq(point, mesh.vertex(a), mesh.vertex(b), mesh.vertex(c));
        best = best.min(d2);
    }
    best.sqrt()
}

/// Squared distance from `p` to the triangle `abc`, any ambient dimension
/// (closest-point region classification via dot products only).
fn point_triangle_dist_sq(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let nd = p.len();
    let sub = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(u, v)| u - v).collect() };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(u, v)| u * v).sum() };
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return dot(&ap, &ap);
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return dot(&bp, &bp);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        let diff: Vec<f64> = (0..nd).map(|k| ap[k] - v * ab[k]).collect();
        return dot(&diff, &diff);
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return dot(&cp, &cp);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        let diff: Vec<f64> = (0..nd).map(|k| ap[k] - w * ac[k]).collect();
        return dot(&diff, &diff);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let diff: Vec<f64> = (0..nd).map(|k| bp[k] - w * (c[k] - b[k])).collect();
        return dot(&diff, &diff);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let diff: Vec<f64> = (0..nd).map(|k| ap[k] - v * ab[k] - w * ac[k]).collect();
    dot(&diff, &diff)
}

/// Fraction of the ε-scaled `(u⁺)ᵖ` mass inside distance `radius` of the
/// point the distance field was run from — the concentration diagnostic.
pub fn lp_mass_within(
    setting: &EnergySetting,
    u: &ScalarField,
    distances: &[f64],
    radius: f64,
) -> f64 {
    let p = setting.params().p;
    let scale = setting.eps().powi(-(setting.params().n as i32));
    scale
        * u.values()
            .iter()
            .zip(setting.lumped_mass())
            .zip(distances)
            .filter(|(_, &d)| d <= radius)
            .map(|((&v, &w), _)| w * pow_p(v.max(0.0), p))
            .sum::<f64>()
}

/// Curvature-based stand-in for the tube radius of the embedded surface:
/// half the smallest principal curvature radius, from per-vertex quadratic
/// fits of the normal displacement over the tangent plane. For the unit
/// sphere this lands near 0.5.
pub fn reach_proxy(mesh: &SurfaceMesh) -> f64 {
    let nd = mesh.ambient_dim();
    let mut max_curv = 0.0f64;
    for v in 0..mesh.n_vertices() {
        let x0 = mesh.vertex(v);
        // two-ring offsets; one ring is too few samples for a stable fit
        let mut nbrs: Vec<usize> = mesh.vertex_neighbors(v).to_vec();
        let mut seen: std::collections::HashSet<usize> = nbrs.iter().copied().collect();
        seen.insert(v);
        for &n1 in mesh.vertex_neighbors(v) {
            for &n2 in mesh.vertex_neighbors(n1) {
                if seen.insert(n2) {
                    nbrs.push(n2);
                }
            }
        }
        let offsets: Vec<Vec<f64>> = nbrs
            .iter()
            .map(|&n| mesh.vertex(n).iter().zip(x0).map(|(a, b)| a - b).collect())
            .collect();
        // tangent plane = top-2 principal directions of the offset cloud
        let mut cov = vec![0.0; nd * nd];
        for off in &offsets {
            for i in 0..nd {
                for j in 0..nd {
                    cov[i * nd + j] += off[i] * off[j];
                }
            }
        }
        let (eigvals, eigvecs) = jacobi_eigen_small(&cov, nd);
        let mut order: Vec<usize> = (0..nd).collect();
        order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]));
        let e1: Vec<f64> = (0..nd).map(|i| eigvecs[i * nd + order[0]]).collect();
        let e2: Vec<f64> = (0..nd).map(|i| eigvecs[i * nd + order[1]]).collect();
        // fit each normal component as ½(a y₁² + 2b y₁y₂ + c y₂²)
        let mut ata = [0.0f64; 9];
        let mut atb = vec![[0.0f64; 3]; nd];
        let dotv = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(u, w)| u * w).sum() };
        for off in &offsets {
            let y1 = dotv(off, &e1);
            let y2 = dotv(off, &e2);
            let row = [0.5 * y1 * y1, y1 * y2, 0.5 * y2 * y2];
            for i in 0..3 {
                for j in 0..3 {
                    ata[i * 3 + j] += row[i] * row[j];
                }
            }
            for d in 0..nd {
                let normal_comp = off[d] - y1 * e1[d] - y2 * e2[d];
                for i in 0..3 {
                    atb[d][i] += row[i] * normal_comp;
                }
            }
        }
        let ridge = 1e-12 * (0..3).map(|i| ata[i * 3 + i]).fold(0.0f64, f64::max);
        for i in 0..3 {
            ata[i * 3 + i] += ridge;
        }
        // curvature of the fitted patch: max over tangent directions of the
        // length of the vector second fundamental form
        let coefs: Vec<[f64; 3]> = (0..nd)
            .map(|d| {
                let sol = solve_dense_small(ata.to_vec(), atb[d].to_vec()).unwrap_or_default();
                [
                    *sol.first().unwrap_or(&0.0),
                    *sol.get(1).unwrap_or(&0.0),
                    *sol.get(2).unwrap_or(&0.0),
                ]
            })
            .collect();
        for step in 0..32 {
            let theta = std::f64::consts::PI * step as f64 / 32.0;
            let (s, c) = theta.sin_cos();
            let mut norm_sq = 0.0;
            for coef in &coefs {
                let ii = coef[0] * c * c + 2.0 * coef[1] * c * s + coef[2] * s * s;
                norm_sq += ii * ii;
            }
            max_curv = max_curv.max(norm_sq.sqrt());
        }
    }
    0.5 / max_curv
}
