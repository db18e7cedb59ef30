//! Spike solutions of `-eps^2 Δ_g u + u = (u_+)^{p-1}` on triangulated closed
//! surfaces, together with the machinery needed to count them against the
//! topology of the surface.
//!
//! The crate is organised around the pipeline of a single experiment:
//!
//! * [`profile`] — the radial ground state of the limit problem on the plane,
//!   computed by shooting and used as the model spike.
//! * [`manifold`] — triangulated closed surfaces embedded in `R^N`, perturbed
//!   metrics on them, and geodesic polar charts by fast marching.
//! * [`functional`] — the rescaled energy, its gradient/Hessian, and the
//!   Nehari projection on a fixed mesh and metric.
//! * [`ansatz`] — truncated spike fields transported to a point of the
//!   surface, their Nehari projections, and barycenters.
//! * [`solver`] — deflated Newton search for critical points, Morse indices
//!   by shift-inverted Lanczos, and multiplicity runs.
//! * [`topology`] — simplicial homology over prime fields and the Morse
//!   counting inequality.
//! * [`harness`] — experiment configuration, orchestration, artifact output,
//!   and the acceptance checks.

pub mod ansatz;
pub mod functional;
pub mod harness;
pub mod linalg;
pub mod manifold;
pub mod profile;
pub mod solver;
pub mod topology;
