//! Simulation toolkit for collective radiative decay of two-level emitters.
//!
//! Four backends of decreasing cost share one operator description
//! ([`model`]) and one observable calculus ([`observables`]):
//!
//! * [`dicke`]: exact master equation in the symmetric sector (squeezed model only),
//! * [`dense`]: quantum-state-diffusion trajectories on full state vectors,
//! * [`mps`]: the same trajectories as matrix product states with a bond cap,
//! * [`meanfield`]: product-state (bond dimension one) trajectories.
//!
//! [`analytic`] holds the closed-form theory of the squeezed burst and
//! [`runner`] drives trajectory ensembles reproducibly.

pub mod analytic;
pub mod dense;
pub mod dicke;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod mps;
pub mod noise;
pub mod observables;
pub mod runner;

pub use error::{Error, Result};
pub use model::{
    build_squeezed_jump, build_waveguide_operators, convert_parametrization, JumpForm, Model,
    PairCouplingOperator, SiteSumOperator, SqueezedModel, WaveguideModel,
};
pub use noise::{seed_trajectory, NoiseStream};
pub use observables::{EnsembleAccumulator, ObservableSeries, Snapshot};

pub use num_complex::Complex64 as C64;
