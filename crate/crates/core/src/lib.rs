//! Quantum noise model of dual-comb spectroscopy with two-mode squeezed combs.
//!
//! The model, budget and spectra modules are generic over [`num::Real`]
//! (`f32` or `f64`); the aliases below fix the scalar to `f64`. The
//! Monte-Carlo oracle works in `f64` only.

// `!(x > 0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod error;
pub mod gaussian;
pub mod mc;
pub mod model;
pub mod num;
pub mod spectra;

pub use error::{Error, Result};
pub use mc::{EmpiricalStats, McRun, SynthesisMode};
pub use model::LineValues;

pub type SqueezeGain = gaussian::SqueezeGain<f64>;
pub type GaussianState = gaussian::GaussianState<f64>;
pub type DualCombConfig = model::DualCombConfig<f64>;
pub type LineChannel = model::LineChannel<f64>;
pub type SampleResponse = model::SampleResponse<f64>;
pub type LoPath = model::LoPath<f64>;
pub type Environment = model::Environment<f64>;
pub type Scenario = model::Scenario<f64>;
pub type DetectorModel = budget::DetectorModel<f64>;
pub type NoiseBreakdown = budget::NoiseBreakdown<f64>;
pub type AbsorptionTable = spectra::AbsorptionTable<f64>;

pub type SqueezeGainF32 = gaussian::SqueezeGain<f32>;
pub type DualCombConfigF32 = model::DualCombConfig<f32>;
pub type ScenarioF32 = model::Scenario<f32>;
pub type DetectorModelF32 = budget::DetectorModel<f32>;
