//! Triangle meshes of closed surfaces embedded in `R^N`.
//!
//! A [`SurfaceMesh`] is validated on construction: closed (every edge in
//! exactly two triangles), connected, no degenerate triangles. Orientability
//! is detected, not required — the projective plane is a first-class citizen.
//!
//! File format is OFF-style ASCII: a header line `OFF` (ambient dimension 3)
//! or `nOFF <N>`, a counts line `V F E` (E may be 0), `V` coordinate lines,
//! then `F` lines of the form `3 i j k`. Lines starting with `#` are skipped.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh: {}", violations.join("; "))]
    Invalid { violations: Vec<String> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Validated triangulation of a closed surface embedded in `R^N`.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    ambient_dim: usize,
    vertices: Vec<f64>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// the two faces incident to each edge, aligned with `edges`
    edge_faces: Vec<[usize; 2]>,
    /// faces incident to each vertex (unordered)
    vertex_faces: Vec<Vec<usize>>,
    /// neighbouring vertices of each vertex (unordered, deduplicated)
    vertex_neighbors: Vec<Vec<usize>>,
    orientable: bool,
}

impl SurfaceMesh {
    /// Builds and validates a mesh. All violated invariants are reported
    /// together in [`MeshError::Invalid`].
    pub fn build(ambient_dim: usize, vertices: Vec<f64>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut violations = Vec::new();
        if ambient_dim < 3 {
            violations.push(format!("ambient dimension {ambient_dim} < 3"));
        }
        if ambient_dim > 0 && vertices.len() % ambient_dim != 0 {
            violations.push(format!(
                "coordinate array length {} is not a multiple of the ambient dimension {ambient_dim}",
                vertices.len()
            ));
        }
        if !violations.is_empty() {
            return Err(MeshError::Invalid { violations });
        }
        let nv = vertices.len() / ambient_dim;
        if nv < 4 {
            violations.push(format!("only {nv} vertices; a closed surface needs at least 4"));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                violations.push(format!("face {fi} references a vertex out of range"));
            } else if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                violations.push(format!("face {fi} repeats a vertex"));
            }
        }
        if !violations.is_empty() {
            return Err(MeshError::Invalid { violations });
        }

        // degenerate triangles
        for (fi, f) in faces.iter().enumerate() {
            let area = euclidean_area(ambient_dim, &vertices, f);
            if !(area > DEGENERATE_AREA) {
                violations.push(format!("face {fi} is degenerate (area {area:.3e})"));
            }
        }

        // edge incidence
        let mut edge_map: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = if a < b { [a, b] } else { [b, a] };
                edge_map.entry(key).or_default().push(fi);
            }
        }
        let boundary = edge_map.values().filter(|fs| fs.len() == 1).count();
        if boundary > 0 {
            violations.push(format!("non-closed: {boundary} boundary edges"));
        }
        let overshared = edge_map.values().filter(|fs| fs.len() > 2).count();
        if overshared > 0 {
            violations.push(format!("{overshared} edges shared by more than 2 triangles"));
        }

        // isolated vertices
        let mut used = vec![false; nv];
        for f in &faces {
            for &v in f {
                used[v] = true;
            }
        }
        let isolated = used.iter().filter(|&&u| !u).count();
        if isolated > 0 {
            violations.push(format!("{isolated} vertices belong to no triangle"));
        }

        // connectivity over faces
        if !faces.is_empty() && boundary == 0 && overshared == 0 {
            let adjacency = face_adjacency(&faces, &edge_map);
            let mut seen = vec![false; faces.len()];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(f) = queue.pop_front() {
                for &g in &adjacency[f] {
                    if !seen[g] {
                        seen[g] = true;
                        count += 1;
                        queue.push_back(g);
                    }
                }
            }
            if count < faces.len() {
                violations.push(format!(
                    "disconnected: only {count} of {} triangles reachable from triangle 0",
                    faces.len()
                ));
            }
        }

        if !violations.is_empty() {
            return Err(MeshError::Invalid { violations });
        }

        // canonical edge tables
        let mut edges: Vec<[usize; 2]> = edge_map.keys().copied().collect();
        edges.sort_unstable();
        let edge_faces: Vec<[usize; 2]> = edges
            .iter()
            .map(|e| {
                let fs = &edge_map[e];
                [fs[0], fs[1]]
            })
            .collect();

        let mut vertex_faces = vec![Vec::new(); nv];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        let mut vertex_neighbors = vec![Vec::new(); nv];
        for e in &edges {
            vertex_neighbors[e[0]].push(e[1]);
            vertex_neighbors[e[1]].push(e[0]);
        }
        for nb in &mut vertex_neighbors {
            nb.sort_unstable();
        }

        let orientable = check_orientable(&faces, &edges, &edge_faces);

        Ok(SurfaceMesh {
            ambient_dim,
            vertices,
            faces,
            edges,
            edge_faces,
            vertex_faces,
            vertex_neighbors,
            orientable,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len() / self.ambient_dim
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Edges as sorted vertex pairs in lexicographic order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// The two faces incident to edge `e` (index into [`Self::edges`]).
    pub fn edge_faces(&self, e: usize) -> [usize; 2] {
        self.edge_faces[e]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn vertex_neighbors(&self, v: usize) -> &[usize] {
        &self.vertex_neighbors[v]
    }

    pub fn is_orientable(&self) -> bool {
        self.orientable
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    /// Barycenter of face `f` in ambient coordinates.
    pub fn face_barycenter(&self, f: usize) -> Vec<f64> {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (self.vertex(a), self.vertex(b), self.vertex(c));
        (0..self.ambient_dim).map(|d| (pa[d] + pb[d] + pc[d]) / 3.0).collect()
    }

    /// Euclidean (embedding) area of face `f`.
    pub fn face_area(&self, f: usize) -> f64 {
        euclidean_area(self.ambient_dim, &self.vertices, &self.faces[f])
    }

    /// Midpoint subdivision: each triangle becomes four. Vertex positions
    /// are not reprojected onto any underlying smooth surface.
    pub fn refine_midpoint(&self) -> SurfaceMesh {
        let nd = self.ambient_dim;
        let mut vertices = self.vertices.clone();
        let mut midpoint = HashMap::new();
        let mut faces = Vec::with_capacity(self.faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<f64>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoint.entry(key).or_insert_with(|| {
                let idx = vertices.len() / nd;
                for d in 0..nd {
                    let v = (vertices[a * nd + d] + vertices[b * nd + d]) / 2.0;
                    vertices.push(v);
                }
                idx
            })
        };
        for f in &self.faces {
            let [a, b, c] = *f;
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            faces.push([a, ab, ca]);
            faces.push([ab, b, bc]);
            faces.push([ca, bc, c]);
            faces.push([ab, bc, ca]);
        }
        SurfaceMesh::build(nd, vertices, faces).expect("midpoint subdivision preserves validity")
    }

    /// Parses the OFF-style format described in the module docs.
    pub fn from_off_str(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(MeshError::Parse {
            line: 0,
            msg: "empty file".into(),
        })?;
        let mut htok = header.split_whitespace();
        let ambient_dim = match htok.next() {
            Some("OFF") => 3,
            Some("nOFF") => {
                let d: usize = htok
                    .next()
                    .ok_or(MeshError::Parse {
                        line: hline,
                        msg: "nOFF requires a dimension".into(),
                    })?
                    .parse()
                    .map_err(|_| MeshError::Parse {
                        line: hline,
                        msg: "bad nOFF dimension".into(),
                    })?;
                d
            }
            _ => {
                return Err(MeshError::Parse {
                    line: hline,
                    msg: format!("expected OFF or nOFF header, got {header:?}"),
                })
            }
        };

        let (cline, counts) = lines.next().ok_or(MeshError::Parse {
            line: hline,
            msg: "missing counts line".into(),
        })?;
        let counts: Vec<usize> = counts
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| MeshError::Parse {
                line: cline,
                msg: "counts line must be integers V F E".into(),
            })?;
        if counts.len() < 2 {
            return Err(MeshError::Parse {
                line: cline,
                msg: "counts line must be V F E".into(),
            });
        }
        let (nv, nf) = (counts[0], counts[1]);

        let mut vertices = Vec::with_capacity(nv * ambient_dim);
        for _ in 0..nv {
            let (vline, vtxt) = lines.next().ok_or(MeshError::Parse {
                line: cline,
                msg: format!("expected {nv} vertex lines"),
            })?;
            let coords: Vec<f64> = vtxt
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| MeshError::Parse {
                    line: vline,
                    msg: "bad vertex coordinate".into(),
                })?;
            if coords.len() != ambient_dim {
                return Err(MeshError::Parse {
                    line: vline,
                    msg: format!("expected {ambient_dim} coordinates, got {}", coords.len()),
                });
            }
            vertices.extend(coords);
        }

        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (fline, ftxt) = lines.next().ok_or(MeshError::Parse {
                line: cline,
                msg: format!("expected {nf} face lines"),
            })?;
            let idx: Vec<usize> = ftxt
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| MeshError::Parse {
                    line: fline,
                    msg: "bad face index".into(),
                })?;
            if idx.len() != 4 || idx[0] != 3 {
                return Err(MeshError::Parse {
                    line: fline,
                    msg: "face lines must read `3 i j k`".into(),
                });
            }
            faces.push([idx[1], idx[2], idx[3]]);
        }

        SurfaceMesh::build(ambient_dim, vertices, faces)
    }

    /// Serializes in the same OFF-style format, with full-precision floats.
    pub fn to_off_string(&self) -> String {
        let mut out = String::new();
        if self.ambient_dim == 3 {
            out.push_str("OFF\n");
        } else {
            let _ = writeln!(out, "nOFF {}", self.ambient_dim);
        }
        let _ = writeln!(out, "{} {} {}", self.n_vertices(), self.n_faces(), self.n_edges());
        for i in 0..self.n_vertices() {
            let coords: Vec<String> = self.vertex(i).iter().map(|c| format!("{c:.17e}")).collect();
            let _ = writeln!(out, "{}", coords.join(" "));
        }
        for f in &self.faces {
            let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_off_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_off_string())?;
        Ok(())
    }
}

fn euclidean_area(nd: usize, vertices: &[f64], f: &[usize; 3]) -> f64 {
    let (a, b, c) = (f[0] * nd, f[1] * nd, f[2] * nd);
    let mut e1sq = 0.0;
    let mut e2sq = 0.0;
    let mut dot = 0.0;
    for d in 0..nd {
        let u = vertices[b + d] - vertices[a + d];
        let v = vertices[c + d] - vertices[a + d];
        e1sq += u * u;
        e2sq += v * v;
        dot += u * v;
    }
    0.5 * (e1sq * e2sq - dot * dot).max(0.0).sqrt()
}

fn face_adjacency(faces: &[[usize; 3]], edge_map: &HashMap<[usize; 2], Vec<usize>>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); faces.len()];
    for fs in edge_map.values() {
        if fs.len() == 2 {
            adj[fs[0]].push(fs[1]);
            adj[fs[1]].push(fs[0]);
        }
    }
    adj
}

/// Propagates a consistent orientation across face adjacency; returns false
/// when a conflict is found (non-orientable surface).
fn check_orientable(faces: &[[usize; 3]], edges: &[[usize; 2]], edge_faces: &[[usize; 2]]) -> bool {
    // whether face f traverses sorted edge (a,b) as a→b (+1) or b→a (−1)
    let direction = |f: &[usize; 3], a: usize, b: usize| -> i8 {
        for (x, y) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            if (x, y) == (a, b) {
                return 1;
            }
            if (x, y) == (b, a) {
                return -1;
            }
        }
        unreachable!("edge not on face");
    };
    let nf = faces.len();
    let mut sign = vec![0i8; nf];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nf]; // (other face, edge idx)
    for (ei, fpair) in edge_faces.iter().enumerate() {
        adj[fpair[0]].push((fpair[1], ei));
        adj[fpair[1]].push((fpair[0], ei));
    }
    for start in 0..nf {
        if sign[start] != 0 {
            continue;
        }
        sign[start] = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(f) = queue.pop_front() {
            for &(g, ei) in &adj[f] {
                let [a, b] = edges[ei];
                // consistently oriented neighbours traverse a shared edge in
                // opposite directions
                let want = if direction(&faces[f], a, b) == direction(&faces[g], a, b) {
                    -sign[f]
                } else {
                    sign[f]
                };
                if sign[g] == 0 {
                    sign[g] = want;
                    queue.push_back(g);
                } else if sign[g] != want {
                    return false;
                }
            }
        }
    }
    true
}

/// Regular octahedron inscribed in the unit sphere: the smallest closed
/// triangulation used as a test fixture.
pub fn octahedron() -> SurfaceMesh {
    let vertices = vec![
        1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, -1.0, 0.0, //
        0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0,
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    SurfaceMesh::build(3, vertices, faces).expect("octahedron is valid")
}

/// Unit-sphere triangulation: icosahedron subdivided `refine` times with
/// every vertex normalized back to the sphere. Antipodally symmetric at
/// every refinement level.
pub fn icosphere(refine: u32) -> SurfaceMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut vertices = Vec::with_capacity(36);
    for p in raw {
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        vertices.extend([p[0] / norm, p[1] / norm, p[2] / norm]);
    }
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut mesh = SurfaceMesh::build(3, vertices, faces).expect("icosahedron is valid");
    for _ in 0..refine {
        let sub = mesh.refine_midpoint();
        let mut vertices = sub.vertices;
        for p in vertices.chunks_exact_mut(3) {
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            p[0] /= norm;
            p[1] /= norm;
            p[2] /= norm;
        }
        mesh = SurfaceMesh::build(3, vertices, sub.faces).expect("refined icosphere is valid");
    }
    mesh
}

/// Flat torus as an `m × m` grid embedded in `R^4` as a product of two
/// circles. The radius is chosen so the polyhedral surface has total area
/// exactly 1, and every vertex has a full 2π angle — the discrete metric is
/// exactly the unit-area flat torus. Diagonals alternate (union-jack).
pub fn flat_torus(m: usize) -> SurfaceMesh {
    assert!(m >= 3, "flat torus grid needs m >= 3");
    let a = 1.0 / (2.0 * m as f64 * (std::f64::consts::PI / m as f64).sin());
    let mut vertices = Vec::with_capacity(m * m * 4);
    for i in 0..m {
        let ti = std::f64::consts::TAU * i as f64 / m as f64;
        for j in 0..m {
            let tj = std::f64::consts::TAU * j as f64 / m as f64;
            vertices.extend([a * ti.cos(), a * ti.sin(), a * tj.cos(), a * tj.sin()]);
        }
    }
    let idx = |i: usize, j: usize| (i % m) * m + (j % m);
    let mut faces = Vec::with_capacity(2 * m * m);
    for i in 0..m {
        for j in 0..m {
            let (p00, p10) = (idx(i, j), idx(i + 1, j));
            let (p01, p11) = (idx(i, j + 1), idx(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([p00, p10, p11]);
                faces.push([p00, p11, p01]);
            } else {
                faces.push([p00, p10, p01]);
                faces.push([p10, p11, p01]);
            }
        }
    }
    SurfaceMesh::build(4, vertices, faces).expect("flat torus is valid")
}

/// Projective plane: antipodal quotient of the icosphere, embedded in `R^5`
/// by the Veronese-type map
/// `(xy, xz, yz, (x²−y²)/2, (x²+y²−2z²)/(2√3))`,
/// which is antipodally invariant and injective on the quotient.
pub fn projective_plane(refine: u32) -> SurfaceMesh {
    let sphere = icosphere(refine);
    let nv = sphere.n_vertices();

    // pair up antipodal vertices; for each pair keep the representative
    // whose first nonzero coordinate is positive
    let mut rep = vec![usize::MAX; nv];
    let mut quotient_of = vec![usize::MAX; nv];
    let mut reps = Vec::new();
    for v in 0..nv {
        if rep[v] != usize::MAX {
            continue;
        }
        let p = sphere.vertex(v);
        let mut anti = usize::MAX;
        for w in 0..nv {
            let q = sphere.vertex(w);
            if (0..3).all(|d| (p[d] + q[d]).abs() < 1e-9) {
                anti = w;
                break;
            }
        }
        assert!(anti != usize::MAX, "icosphere must be antipodally symmetric");
        let keep = p
            .iter()
            .find(|c| c.abs() > 1e-9)
            .map(|c| *c > 0.0)
            .unwrap_or(true);
        let (keeper, other) = if keep { (v, anti) } else { (anti, v) };
        let qi = reps.len();
        reps.push(keeper);
        rep[v] = keeper;
        rep[anti] = keeper;
        quotient_of[keeper] = qi;
        quotient_of[other] = qi;
    }

    let mut vertices = Vec::with_capacity(reps.len() * 5);
    for &v in &reps {
        let p = sphere.vertex(v);
        let (x, y, z) = (p[0], p[1], p[2]);
        vertices.extend([
            x * y,
            x * z,
            y * z,
            (x * x - y * y) / 2.0,
            (x * x + y * y - 2.0 * z * z) / (2.0 * 3.0f64.sqrt()),
        ]);
    }

    let mut seen = std::collections::HashSet::new();
    let mut faces = Vec::new();
    for f in sphere.faces() {
        let mapped = [quotient_of[f[0]], quotient_of[f[1]], quotient_of[f[2]]];
        let mut key = mapped;
        key.sort_unstable();
        if seen.insert(key) {
            faces.push(mapped);
        }
    }
    SurfaceMesh::build(5, vertices, faces).expect("projective plane quotient is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octahedron_counts_and_flags() {
        let m = octahedron();
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_faces()), (6, 12, 8));
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_orientable());
        for f in 0..m.n_faces() {
            assert!(m.face_area(f) > 0.5);
        }
    }

    #[test]
    fn flat_torus_counts() {
        let m = flat_torus(8);
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_faces()), (64, 192, 128));
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.is_orientable());
    }

    #[test]
    fn flat_torus_has_unit_polyhedral_area() {
        for m in [3usize, 8, 16] {
            let mesh = flat_torus(m);
            let area: f64 = (0..mesh.n_faces()).map(|f| mesh.face_area(f)).sum();
            assert!((area - 1.0).abs() < 1e-12, "m = {m}: area {area}");
        }
    }

    #[test]
    fn projective_plane_counts_and_flags() {
        let m = projective_plane(0);
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_faces()), (6, 15, 10));
        assert_eq!(m.euler_characteristic(), 1);
        assert!(!m.is_orientable());

        let fine = projective_plane(1);
        assert_eq!(fine.euler_characteristic(), 1);
        assert!(!fine.is_orientable());
    }

    #[test]
    fn icosphere_is_unit_and_antipodal() {
        let m = icosphere(2);
        assert_eq!(m.n_vertices(), 162);
        assert_eq!(m.euler_characteristic(), 2);
        for v in 0..m.n_vertices() {
            let p = m.vertex(v);
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
            // antipode is also a vertex
            let found = (0..m.n_vertices())
                .any(|w| (0..3).all(|d| (m.vertex(w)[d] + p[d]).abs() < 1e-9));
            assert!(found, "vertex {v} has no antipode");
        }
    }

    #[test]
    fn refinement_multiplies_faces_by_four() {
        let m = octahedron().refine_midpoint();
        assert_eq!((m.n_vertices(), m.n_faces()), (18, 32));
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn off_round_trip_preserves_structure() {
        for mesh in [octahedron(), flat_torus(4), projective_plane(0)] {
            let text = mesh.to_off_string();
            let back = SurfaceMesh::from_off_str(&text).unwrap();
            assert_eq!(back.ambient_dim(), mesh.ambient_dim());
            assert_eq!(back.faces(), mesh.faces());
            for v in 0..mesh.n_vertices() {
                assert_eq!(back.vertex(v), mesh.vertex(v), "vertex {v} coordinates");
            }
        }
    }

    #[test]
    fn missing_face_reports_boundary_edges() {
        let oct = octahedron();
        let faces: Vec<[usize; 3]> = oct.faces()[1..].to_vec();
        let err = SurfaceMesh::build(3, oct.vertices.clone(), faces).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-closed: 3 boundary edges"), "got: {msg}");
    }

    #[test]
    fn degenerate_and_repeated_faces_are_rejected() {
        let oct = octahedron();
        let mut faces = oct.faces().to_vec();
        faces[0] = [0, 0, 4];
        let err = SurfaceMesh::build(3, oct.vertices.clone(), faces).unwrap_err();
        assert!(err.to_string().contains("repeats a vertex"));

        // collapse a vertex onto another to create a zero-area triangle
        let mut vertices = oct.vertices.clone();
        let (a, b) = (0usize, 2usize); // vertices of face 0
        for d in 0..3 {
            vertices[b * 3 + d] = vertices[a * 3 + d];
        }
        let err = SurfaceMesh::build(3, vertices, oct.faces().to_vec()).unwrap_err();
        assert!(err.to_string().contains("degenerate"), "got: {err}");
    }

    #[test]
    fn disconnected_mesh_is_rejected() {
        let oct = octahedron();
        let mut vertices = oct.vertices.clone();
        for v in 0..6 {
            for d in 0..3 {
                vertices.push(oct.vertices[v * 3 + d] + 10.0);
            }
        }
        let mut faces = oct.faces().to_vec();
        for f in oct.faces() {
            faces.push([f[0] + 6, f[1] + 6, f[2] + 6]);
        }
        let err = SurfaceMesh::build(3, vertices, faces).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "got: {err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            SurfaceMesh::from_off_str("BOF\n4 4 0\n"),
            Err(MeshError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            SurfaceMesh::from_off_str("OFF\nx y\n"),
            Err(MeshError::Parse { line: 2, .. })
        ));
        let truncated = "OFF\n6 8 12\n0 0 1\n";
        assert!(matches!(truncated.parse_off_err(), MeshError::Parse { .. }));
    }

    trait ParseHelper {
        fn parse_off_err(&self) -> MeshError;
    }
    impl ParseHelper for &str {
        fn parse_off_err(&self) -> MeshError {
            SurfaceMesh::from_off_str(self).unwrap_err()
        }
    }
}
