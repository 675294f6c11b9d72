//! Simulation and analysis toolkit for discrete-time epidemics that spread both
//! through person-to-person contact and through shared resources (water supplies,
//! surfaces, shared equipment) that infected people contaminate.
//!
//! The sampled-time model tracks, for each of `n` population nodes, the fraction
//! `x_i` of that group currently infected, and for each of `m` resource nodes a
//! normalized contamination level `w_j`. Both layers are joined into one
//! equivalent network whose coupling matrix stacks the person-to-person,
//! resource-to-person and person-to-resource rate blocks.
//!
//! Modules:
//! - [`model`]: parameter and state types, assembly of the equivalent network,
//!   well-posedness validation.
//! - [`spectral`]: Perron root computations, reproduction numbers, threshold
//!   quantities.
//! - [`dynamics`]: steppers, simulation with parameter schedules, a continuous
//!   reference integrator.
//! - [`analysis`]: equilibria, stability classification, sensitivities, error
//!   dynamics, two-virus competition.
//! - [`scenario`]: scenario files, trajectory CSV output.
//! - [`generate`]: seeded random scenario generation with threshold targeting.
//! - [`sweep`]: parallel parameter sweeps.

pub mod analysis;
pub mod dynamics;
pub mod generate;
pub mod model;
pub mod scenario;
pub mod spectral;
pub mod sweep;

pub use model::{
    assemble_full, resource_bound, validate, FullSystem, MultiVirusScenario, SpreadingParams,
    State, ValidationReport,
};
