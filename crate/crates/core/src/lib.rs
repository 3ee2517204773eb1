//! Model-free output-feedback control of feedback-linearizable plants.
//!
//! The pipeline is: a normal-form plant sampled under zero-order hold, an
//! extended high-gain observer (or a sliding-window least-squares estimator)
//! producing the output, its derivative and the lumped term `a + b u`, and a
//! dynamic controller that learns the linearizing input without a model.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dd_estimator;
pub mod error;
pub mod linalg;
pub mod observer;
pub mod plant;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::{lit, Real};

pub type Mat64 = linalg::Mat<f64>;
pub type PlantState64 = plant::PlantState<f64>;
pub type ReferencePlant64 = plant::ReferencePlant<f64>;
pub type HgoConfig64 = observer::HgoConfig<f64>;
pub type HgoDiscrete64 = observer::HgoDiscrete<f64>;
pub type SampleWindow64 = dd_estimator::SampleWindow<f64>;
pub type ControllerConfig64 = controller::ControllerConfig<f64>;
pub type ControllerState64 = controller::ControllerState<f64>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type Trace64 = sim::Trace<f64>;

pub type HgoDiscrete32 = observer::HgoDiscrete<f32>;
pub type SimConfig32 = sim::SimConfig<f32>;
