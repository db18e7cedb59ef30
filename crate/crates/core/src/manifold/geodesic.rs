//! Geodesic distance and discrete polar (normal-coordinate) charts by fast
//! marching on the metric surface.
//!
//! Updates use the virtual-source construction: each triangle is mapped to
//! the Euclidean plane by the Cholesky factor of its metric, the wavefront
//! source position is reconstructed from the two known corner distances, and
//! the update is accepted only when the geodesic to the third corner passes
//! through the triangle (falling back to edge propagation otherwise). The
//! crossing point also transports a polar angle from the source, which gives
//! the chart directions and a cut-locus detector: wavefront branches meeting
//! with very different angles but similar distances mark the injectivity
//! limit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use super::mesh::SurfaceMesh;
use super::metric::MetricField;

#[derive(Debug, Error)]
pub enum GeodesicError {
    #[error("radius {requested} exceeds the injectivity estimate {estimate:.4} at vertex {center}")]
    RadiusExceedsInjectivity {
        center: usize,
        requested: f64,
        estimate: f64,
    },
}

/// One vertex of a polar chart: geodesic distance from the center and the
/// polar angle of the arriving geodesic (direction in the tangent plane of
/// the center, normalized to a full turn of 2π).
#[derive(Debug, Clone, Copy)]
pub struct PolarSample {
    pub vertex: usize,
    pub distance: f64,
    pub direction: f64,
}

/// Discrete exponential-map chart `B(center, radius)`.
#[derive(Debug, Clone)]
pub struct ExpMapChart {
    pub center: usize,
    pub radius: f64,
    pub samples: Vec<PolarSample>,
    /// smallest distance at which wavefront branches collided
    pub collision_distance: f64,
    /// conservative injectivity radius: 0.8 × collision distance
    pub injectivity_estimate: f64,
}

struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.vertex == other.vertex
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we need the nearest vertex
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Full fast-marching solve from one source.
struct FrontResult {
    distance: Vec<f64>,
    direction: Vec<f64>,
    collision_distance: f64,
}

/// Per-face corner coordinates after the metric Cholesky map, so Euclidean
/// geometry in these coordinates equals the metric geometry of the face.
fn euclidean_corners(metric: &MetricField, f: usize) -> [[f64; 2]; 3] {
    let [g11, g12, g22] = metric.face_metric(f);
    let l11 = g11.sqrt();
    let l21 = g12 / l11;
    let l22 = (g22 - l21 * l21).max(0.0).sqrt();
    let ch = metric.chart(f);
    let mut out = [[0.0; 2]; 3];
    for (i, p) in ch.iter().enumerate() {
        // y = Lᵀ x for lower-triangular L
        out[i] = [l11 * p[0] + l21 * p[1], l22 * p[1]];
    }
    out
}

/// Average metric length of every edge over its two incident faces.
fn edge_lengths(mesh: &SurfaceMesh, metric: &MetricField) -> Vec<f64> {
    let mut lengths = vec![0.0; mesh.n_edges()];
    for (ei, e) in mesh.edges().iter().enumerate() {
        let mut acc = 0.0;
        for &f in &mesh.edge_faces(ei) {
            let face = &mesh.faces()[f];
            let li = face.iter().position(|&v| v == e[0]).unwrap();
            let lj = face.iter().position(|&v| v == e[1]).unwrap();
            acc += metric.edge_length(f, li, lj);
        }
        lengths[ei] = acc / 2.0;
    }
    lengths
}

fn edge_index(mesh: &SurfaceMesh, a: usize, b: usize) -> usize {
    let key = if a < b { [a, b] } else { [b, a] };
    mesh.edges().binary_search(&key).expect("edge must exist")
}

/// Lays out the faces around `center` as a flat star and assigns each
/// neighbouring vertex a polar angle, normalizing the total cone angle
/// to 2π. Returns (neighbor, angle) pairs.
fn star_angles(mesh: &SurfaceMesh, metric: &MetricField, center: usize) -> Vec<(usize, f64)> {
    let star = mesh.vertex_faces(center);
    debug_assert!(!star.is_empty());
    // pair of non-center corners per face, in face order starting at center
    let pair = |f: usize| -> (usize, usize) {
        let face = &mesh.faces()[f];
        let i = face.iter().position(|&v| v == center).unwrap();
        (face[(i + 1) % 3], face[(i + 2) % 3])
    };
    let corner_angle = |f: usize| -> f64 {
        let face = &mesh.faces()[f];
        let i = face.iter().position(|&v| v == center).unwrap();
        let y = euclidean_corners(metric, f);
        let (o, a, b) = (y[i], y[(i + 1) % 3], y[(i + 2) % 3]);
        let u = [a[0] - o[0], a[1] - o[1]];
        let v = [b[0] - o[0], b[1] - o[1]];
        let dot = u[0] * v[0] + u[1] * v[1];
        let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
        (dot / (nu * nv)).clamp(-1.0, 1.0).acos()
    };

    // umbrella walk: traverse faces around the center in cyclic order
    let first = star[0];
    let (a0, b0) = pair(first);
    let mut order = vec![first];
    let mut entry = vec![a0]; // vertex by which each face was entered
    let mut current = first;
    let mut leave = b0;
    while order.len() < star.len() {
        let ei = edge_index(mesh, center, leave);
        let [f1, f2] = mesh.edge_faces(ei);
        let next = if f1 == current { f2 } else { f1 };
        let (na, nb) = pair(next);
        let next_leave = if na == leave { nb } else { na };
        order.push(next);
        entry.push(leave);
        current = next;
        leave = next_leave;
    }

    let total: f64 = order.iter().map(|&f| corner_angle(f)).sum();
    let scale = std::f64::consts::TAU / total;
    let mut out = Vec::with_capacity(order.len());
    let mut cum = 0.0;
    for (k, &f) in order.iter().enumerate() {
        out.push((entry[k], cum * scale));
        cum += corner_angle(f);
    }
    out
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d = std::f64::consts::TAU - d;
    }
    d
}

/// Two-point update of corner `c` of a Euclideanized triangle from corner
/// distances `da`, `db`: reconstructs the virtual source and requires the
/// geodesic to `c` to cross the edge `ab`. Returns the new distance and the
/// crossing parameter λ ∈ [0,1] along `a → b`.
fn virtual_source_update(
    ya: [f64; 2],
    yb: [f64; 2],
    yc: [f64; 2],
    da: f64,
    db: f64,
) -> Option<(f64, f64)> {
    let ex = [yb[0] - ya[0], yb[1] - ya[1]];
    let l = (ex[0] * ex[0] + ex[1] * ex[1]).sqrt();
    if l <= 0.0 {
        return None;
    }
    let exn = [ex[0] / l, ex[1] / l];
    // perpendicular pointing to the side of c
    let mut ey = [-exn[1], exn[0]];
    let ac = [yc[0] - ya[0], yc[1] - ya[1]];
    let cy = ac[0] * ey[0] + ac[1] * ey[1];
    let ey_sign = if cy >= 0.0 { 1.0 } else { -1.0 };
    ey = [ey[0] * ey_sign, ey[1] * ey_sign];
    let c_local = [ac[0] * exn[0] + ac[1] * exn[1], (ac[0] * ey[0] + ac[1] * ey[1]).abs()];

    let xs = (da * da - db * db + l * l) / (2.0 * l);
    let hsq = da * da - xs * xs;
    if hsq < 0.0 {
        return None;
    }
    let h = hsq.sqrt();
    // source on the far side of edge ab from c
    let dx = c_local[0] - xs;
    let dy = c_local[1] + h;
    let d_new = (dx * dx + dy * dy).sqrt();
    if d_new + 1e-12 < da.max(db) {
        return None; // non-causal (obtuse configuration); let fallback handle it
    }
    // crossing of segment source→c with the edge line y = 0
    let denom = h + c_local[1];
    if denom <= 0.0 {
        return None;
    }
    let t = h / denom;
    let px = xs + t * (c_local[0] - xs);
    let lambda = px / l;
    if !(-1e-12..=1.0 + 1e-12).contains(&lambda) {
        return None;
    }
    Some((d_new, lambda.clamp(0.0, 1.0)))
}

fn interpolate_angle(ta: f64, tb: f64, lambda: f64) -> f64 {
    let (sa, ca) = ta.sin_cos();
    let (sb, cb) = tb.sin_cos();
    let s = (1.0 - lambda) * sa + lambda * sb;
    let c = (1.0 - lambda) * ca + lambda * cb;
    s.atan2(c).rem_euclid(std::f64::consts::TAU)
}

fn run_front(mesh: &SurfaceMesh, metric: &MetricField, source: usize) -> FrontResult {
    let nv = mesh.n_vertices();
    let lengths = edge_lengths(mesh, metric);
    let corners: Vec<[[f64; 2]; 3]> = (0..mesh.n_faces()).map(|f| euclidean_corners(metric, f)).collect();

    let mut distance = vec![f64::INFINITY; nv];
    let mut direction = vec![0.0; nv];
    let mut accepted = vec![false; nv];
    // first-ring angles come straight from the source star layout and are
    // exact; no later update may overwrite them
    let mut ring1 = vec![false; nv];
    let mut heap = BinaryHeap::new();
    let mut collision = f64::INFINITY;

    distance[source] = 0.0;
    accepted[source] = true;
    for (nb, angle) in star_angles(mesh, metric, source) {
        let ei = edge_index(mesh, source, nb);
        distance[nb] = lengths[ei];
        direction[nb] = angle;
        ring1[nb] = true;
        heap.push(HeapEntry {
            dist: distance[nb],
            vertex: nb,
        });
    }

    while let Some(HeapEntry { dist, vertex }) = heap.pop() {
        if accepted[vertex] || dist > distance[vertex] {
            continue;
        }
        accepted[vertex] = true;

        // cut-locus detector: accepted neighbours reached from very
        // different source directions at nearly the same distance
        for &w in mesh.vertex_neighbors(vertex) {
            if !accepted[w] || w == source || vertex == source {
                continue;
            }
            let ei = edge_index(mesh, vertex, w);
            if circular_gap(direction[vertex], direction[w]) > std::f64::consts::FRAC_PI_2
                && (distance[vertex] - distance[w]).abs() < 0.7 * lengths[ei]
            {
                // the branches meet somewhere on or beyond this edge; the
                // half-length term undoes the discrete early-trigger bias
                collision = collision.min((distance[vertex] + distance[w] + lengths[ei]) / 2.0);
            }
        }

        // relax the other corners of every face around the new vertex
        for &f in mesh.vertex_faces(vertex) {
            let face = &mesh.faces()[f];
            let y = &corners[f];
            for ci in 0..3 {
                let c = face[ci];
                if accepted[c] {
                    continue;
                }
                let (ai, bi) = ((ci + 1) % 3, (ci + 2) % 3);
                let (a, b) = (face[ai], face[bi]);
                let mut best = distance[c];
                let mut best_dir = direction[c];
                if accepted[a] && accepted[b] {
                    if let Some((d, lambda)) =
                        virtual_source_update(y[ai], y[bi], y[ci], distance[a], distance[b])
                    {
                        if d < best {
                            best = d;
                            best_dir = if a == source {
                                direction[b]
                            } else if b == source {
                                direction[a]
                            } else {
                                interpolate_angle(direction[a], direction[b], lambda)
                            };
                        }
                    }
                }
                for (&p, pi) in [(&a, ai), (&b, bi)] {
                    if !accepted[p] {
                        continue;
                    }
                    let dx = y[ci][0] - y[pi][0];
                    let dy = y[ci][1] - y[pi][1];
                    let d = distance[p] + (dx * dx + dy * dy).sqrt();
                    if d < best {
                        best = d;
                        best_dir = direction[p];
                    }
                }
                if best < distance[c] {
                    distance[c] = best;
                    if !ring1[c] {
                        direction[c] = best_dir;
                    }
                    heap.push(HeapEntry { dist: best, vertex: c });
                }
            }
        }
    }

    FrontResult {
        distance,
        direction,
        collision_distance: collision,
    }
}

/// Geodesic distances from `source` to every vertex.
pub fn distance_field(mesh: &SurfaceMesh, metric: &MetricField, source: usize) -> Vec<f64> {
    run_front(mesh, metric, source).distance
}

/// Conservative injectivity-radius estimate at `center`: 0.8 × the smallest
/// wavefront self-collision distance (cut locus proxy).
pub fn injectivity_estimate(mesh: &SurfaceMesh, metric: &MetricField, center: usize) -> f64 {
    let front = run_front(mesh, metric, center);
    let cap = front
        .distance
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max);
    0.8 * front.collision_distance.min(cap)
}

/// Polar chart of the geodesic ball `B(center, radius)`; fails when the
/// requested radius exceeds the injectivity estimate.
pub fn exp_map(
    mesh: &SurfaceMesh,
    metric: &MetricField,
    center: usize,
    radius: f64,
) -> Result<ExpMapChart, GeodesicError> {
    assert!(radius > 0.0, "radius must be positive");
    let front = run_front(mesh, metric, center);
    let cap = front
        .distance
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max);
    let estimate = 0.8 * front.collision_distance.min(cap);
    if radius > estimate {
        return Err(GeodesicError::RadiusExceedsInjectivity {
            center,
            requested: radius,
            estimate,
        });
    }
    let samples = front
        .distance
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= radius)
        .map(|(v, &d)| PolarSample {
            vertex: v,
            distance: d,
            direction: front.direction[v],
        })
        .collect();
    Ok(ExpMapChart {
        center,
        radius,
        samples,
        collision_distance: front.collision_distance,
        injectivity_estimate: estimate,
    })
}

/// Greedy farthest-point sampling: starting from `start`, repeatedly adds
/// the vertex maximizing the distance to the chosen set. Deterministic.
pub fn farthest_point_sample(
    mesh: &SurfaceMesh,
    metric: &MetricField,
    count: usize,
    start: usize,
) -> Vec<usize> {
    assert!(count >= 1);
    let mut chosen = vec![start];
    let mut min_dist = distance_field(mesh, metric, start);
    while chosen.len() < count {
        let (next, _) = min_dist
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.total_cmp(b))
            .expect("mesh has vertices");
        chosen.push(next);
        let d = distance_field(mesh, metric, next);
        for (m, dn) in min_dist.iter_mut().zip(&d) {
            *m = m.min(*dn);
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::mesh::{flat_torus, icosphere, octahedron};

    #[test]
    fn source_distance_is_zero_and_neighbors_exact() {
        let mesh = octahedron();
        let g = MetricField::induced(&mesh);
        let d = distance_field(&mesh, &g, 4); // a pole
        assert_eq!(d[4], 0.0);
        // the four equator vertices are direct edges of length √2
        for v in 0..4 {
            assert!((d[v] - 2.0f64.sqrt()).abs() < 1e-12, "d[{v}] = {}", d[v]);
        }
    }

    #[test]
    fn octahedron_pole_to_pole_matches_unfolding() {
        // the shortest polyhedral geodesic between opposite poles crosses
        // one equator edge; unfolding two equilateral faces of side √2
        // gives length √6
        let mesh = octahedron();
        let g = MetricField::induced(&mesh);
        let d = distance_field(&mesh, &g, 4);
        assert!((d[5] - 6.0f64.sqrt()).abs() < 1e-12, "d = {}", d[5]);
    }

    #[test]
    fn flat_torus_axis_distances_are_exact() {
        let m = 16;
        let mesh = flat_torus(m);
        let g = MetricField::induced(&mesh);
        let idx = |i: usize, j: usize| (i % m) * m + (j % m);
        let d = distance_field(&mesh, &g, idx(0, 0));
        let s = 1.0 / m as f64;
        for k in 1..=m / 2 {
            let expect = k as f64 * s;
            assert!((d[idx(k, 0)] - expect).abs() < 1e-10, "axis i: k = {k}");
            assert!((d[idx(0, k)] - expect).abs() < 1e-10, "axis j: k = {k}");
        }
    }

    #[test]
    fn flat_torus_diagonal_distances_converge() {
        let m = 16;
        let mesh = flat_torus(m);
        let g = MetricField::induced(&mesh);
        let idx = |i: usize, j: usize| (i % m) * m + (j % m);
        let d = distance_field(&mesh, &g, idx(0, 0));
        let s = 1.0 / m as f64;
        for k in [3usize, 5] {
            let expect = 2.0f64.sqrt() * k as f64 * s;
            let got = d[idx(k, k)];
            assert!(
                (got - expect).abs() / expect < 0.01,
                "k = {k}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn torus_injectivity_estimate_sees_the_wraparound() {
        let mesh = flat_torus(32);
        let g = MetricField::induced(&mesh);
        let est = injectivity_estimate(&mesh, &g, 0);
        // shortest homotopically nontrivial loop has length 1 ⇒ the cut
        // locus is at distance 0.5; the estimate is 0.8 of that, minus
        // discretization slack
        assert!(est > 0.3 && est < 0.45, "estimate {est}");
    }

    #[test]
    fn sphere_injectivity_estimate_sees_the_antipode() {
        let mesh = icosphere(3);
        let g = MetricField::induced(&mesh);
        let est = injectivity_estimate(&mesh, &g, 0);
        // collisions happen near the antipode at distance ≈ π
        assert!(est > 2.0 && est < std::f64::consts::PI, "estimate {est}");
    }

    #[test]
    fn exp_map_rejects_radius_beyond_injectivity() {
        let mesh = icosphere(2);
        let g = MetricField::induced(&mesh);
        let err = exp_map(&mesh, &g, 0, 3.5).unwrap_err();
        let GeodesicError::RadiusExceedsInjectivity { estimate, .. } = err;
        assert!(estimate > 0.0 && estimate < 3.5);
    }

    #[test]
    fn exp_map_covers_exactly_the_ball() {
        let mesh = icosphere(3);
        let g = MetricField::induced(&mesh);
        let chart = exp_map(&mesh, &g, 0, 1.0).unwrap();
        let d = distance_field(&mesh, &g, 0);
        let inside: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| d[v] <= 1.0).collect();
        let sampled: Vec<usize> = chart.samples.iter().map(|s| s.vertex).collect();
        assert_eq!(sampled, inside);
        let center = chart.samples.iter().find(|s| s.vertex == 0).unwrap();
        assert_eq!(center.distance, 0.0);
        for s in &chart.samples {
            assert!(s.direction >= 0.0 && s.direction < std::f64::consts::TAU);
        }
    }

    #[test]
    fn distances_satisfy_triangle_inequality() {
        let mesh = icosphere(2);
        let g = MetricField::induced(&mesh);
        let probes = [0usize, 40, 100];
        let fields: Vec<Vec<f64>> = probes.iter().map(|&v| distance_field(&mesh, &g, v)).collect();
        for (i, &a) in probes.iter().enumerate() {
            for (j, &b) in probes.iter().enumerate() {
                // marching is not exactly symmetric; on this coarse mesh the
                // discrepancy is about 1% of the distance
                assert!((fields[i][b] - fields[j][a]).abs() < 3e-2, "asymmetry {a}-{b}");
                for v in (0..mesh.n_vertices()).step_by(17) {
                    assert!(
                        fields[i][v] <= fields[i][b] + fields[j][v] + 1e-3,
                        "triangle inequality via {b} fails at {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn farthest_point_sampling_spreads_out() {
        let mesh = icosphere(2);
        let g = MetricField::induced(&mesh);
        let pts = farthest_point_sample(&mesh, &g, 4, 0);
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0], 0);
        // second point is near-antipodal on the unit sphere
        let d0 = distance_field(&mesh, &g, 0);
        assert!(d0[pts[1]] > 2.8);
        // determinism
        assert_eq!(pts, farthest_point_sample(&mesh, &g, 4, 0));
    }
}
