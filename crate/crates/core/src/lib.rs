//! Load of cellular base stations serving vehicular users.
//!
//! Base stations form a planar Poisson point process; roads form a Poisson
//! line process and vehicles are 1D Poisson processes on each road (a
//! Poisson line Cox process). The crate computes the probability mass
//! function of the number of vehicles inside the typical Voronoi cell and
//! inside the cell serving a typical vehicle, both from Laplace-transform
//! formulas and by Monte-Carlo simulation, and mixes the serving-cell load
//! law with the SIR coverage probability to obtain rate coverage.

pub mod cli;
pub mod coverage;
pub mod geometry;
pub mod laws;
pub mod load;
pub mod montecarlo;
pub mod numerics;
pub mod processes;
pub mod stats;
pub mod tessellation;

pub use geometry::{ConvexPolygon, Line, Point2};
pub use load::Pmf;
pub use processes::{NetworkParams, RngSeed};
