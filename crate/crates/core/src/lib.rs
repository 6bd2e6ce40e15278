//! Discretized one-dimensional free-particle simulator for sequential
//! position measurements: double-slit fringes computed in the Schrödinger
//! and Heisenberg pictures, an ancilla-screen realization of the slit
//! projector, and numerical audits of the free-particle commutator and
//! dispersion identities.
//!
//! ```
//! use fringebench_core::measurement::{conditional_fringe, Scenario};
//!
//! let report = conditional_fringe(&Scenario::reference()).unwrap();
//! let spacing = report.spacing.unwrap();
//! assert!((spacing / report.analytic_spacing - 1.0).abs() < 0.02);
//! ```

pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod locality;
pub mod measurement;
pub mod purification;
pub mod sampling;

pub use dynamics::{free_unitary, FreeEvolution};
pub use error::{Error, Result};
pub use lattice::{
    gaussian_packet, make_grid, DensityOperator, Grid, LinearOperator, PhysParams, StateVector, C64,
};
pub use locality::{CommutatorReport, DispersionProduct};
pub use measurement::{
    DetectorPixel, FringeReport, Openings, PacketSpec, RegisterSpec, Scenario, SlitScreen,
};
pub use purification::{JointState, ScreenRegister};
