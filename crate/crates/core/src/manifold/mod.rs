//! Triangulated closed surfaces embedded in `R^N`: mesh representation and
//! validation, per-triangle metric fields with smooth perturbations, and
//! geodesic distance machinery (fast marching, polar charts, sampling).

pub mod geodesic;
pub mod mesh;
pub mod metric;

pub use geodesic::{distance_field, exp_map, farthest_point_sample, injectivity_estimate, ExpMapChart, GeodesicError, PolarSample};
pub use mesh::{flat_torus, icosphere, octahedron, projective_plane, MeshError, SurfaceMesh};
pub use metric::{sample_perturbation, tensor_norm, MetricError, MetricField, PerturbationMode, PerturbationTensor};
