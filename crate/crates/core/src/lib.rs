//! Trending-word detection with a two-state burst automaton, and status
//! gradients describing whether trends start among a community's most
//! active members or at its periphery.
//!
//! The numeric core is generic over [`num::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x > 0)` style checks are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod burst;
pub mod corpus;
pub mod gradient;
pub mod lifecycle;
pub mod num;
pub mod pipeline;
pub mod synth;

pub use num::Real;

pub type AutomatonParams = burst::AutomatonParams<f64>;
pub type BurstInterval = burst::BurstInterval<f64>;
pub type TrendFilterConfig = burst::TrendFilterConfig<f64>;
pub type Calibration = burst::Calibration<f64>;
pub type Ecdf = gradient::Ecdf<f64>;
pub type ActivityIndex = gradient::ActivityIndex<f64>;
pub type RelativeTimeBucket = gradient::RelativeTimeBucket<f64>;
pub type CurvePoint = gradient::CurvePoint<f64>;
pub type StatusGradientCurve = gradient::StatusGradientCurve<f64>;
pub type LifeStageRow = lifecycle::LifeStageRow<f64>;
pub type LifeStageTable = lifecycle::LifeStageTable<f64>;
