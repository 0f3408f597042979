//! Classical and quantum scattering maps for Schrödinger operators with compactly
//! supported time-dependent metric and potential perturbations.

pub mod error;
pub mod flow;
pub mod phasespace;
pub mod quadrature;
pub mod quantum;
pub mod shell;
pub mod symbols;
pub mod verify;

pub use error::{Error, Result};
pub use flow::{classical_scatter, integrate, scatter_jacobian, ScatterResult, Trajectory};
pub use phasespace::{CuspBoundaryCoords, CuspData, PhasePoint};
pub use symbols::{MetricBump, PerturbationSpec, PotentialTerm, SupportBox};
