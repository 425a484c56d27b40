//! Reference-configuration lattice Boltzmann solver for large-deformation
//! elastodynamics of neo-Hookean solids on D2Q9 lattices.
//!
//! Everything numerical is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`.

pub mod boundary;
pub mod config;
pub mod error;
pub mod fields;
pub mod kinetics;
pub mod lattice;
pub mod material;
pub mod oracles;
pub mod output;
mod real;
pub mod scenario;
pub mod tensor;

pub use error::{Error, Result};
pub use real::Real;

pub type Grid = lattice::Grid<f64>;
pub type VelocitySet = lattice::VelocitySet<f64>;
pub type GeometrySpec = lattice::GeometrySpec<f64>;
pub type NeoHooke = material::NeoHooke<f64>;
pub type Parameters = kinetics::Parameters<f64>;
pub type BoundarySpec = boundary::BoundarySpec<f64>;
pub type LoadSchedule = boundary::LoadSchedule<f64>;
pub type Scenario = scenario::Scenario<f64>;
pub type Simulation = scenario::Simulation<f64>;
pub type ProbeSeries = scenario::ProbeSeries<f64>;
pub type RunOutput = scenario::RunOutput<f64>;
pub type EnergySample = scenario::EnergySample<f64>;
pub type Mat2 = tensor::Mat2<f64>;
pub type Sym2 = tensor::Sym2<f64>;
