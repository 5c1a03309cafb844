//! Heteroclinic domain walls of a real amplitude system by direct
//! minimization of its energy functional.
//!
//! The solver is generic over the floating point type (see [`Scalar`]);
//! the aliases at the crate root fix it to `f64`, which is what the
//! tolerances used throughout the tests assume.
// `!(x > 0)` is the NaN-rejecting form used by the validators
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod banded;
pub mod energy;
pub mod error;
pub mod minimize;
pub mod model;
pub mod quad;
pub mod reduced;
pub mod scalar;

pub use error::{Error, Result};
pub use model::Equilibrium;
pub use scalar::Scalar;

pub type Params = model::Params<f64>;
pub type Profile = model::Profile<f64>;
pub type EnergyReport = model::EnergyReport<f64>;
pub type DiscreteGradient = energy::DiscreteGradient<f64>;
pub type ResidualReport = energy::ResidualReport<f64>;
pub type SolveOptions = minimize::SolveOptions<f64>;
pub type SolveResult = minimize::SolveResult<f64>;
pub type Init = minimize::Init<f64>;
pub type SpectrumReport = analysis::SpectrumReport<f64>;
pub type SweepRecord = analysis::SweepRecord<f64>;
pub type TailFit = analysis::TailFit<f64>;
pub type ReducedOrbit = reduced::ReducedOrbit<f64>;
