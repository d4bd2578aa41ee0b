//! Dense linear algebra, differentiable primitives, Adam, the step learning-rate
//! schedule, the seeded random stream and a finite-difference gradient checker.
//! Everything runs in `f64` and is deterministic.

pub mod gradcheck;
pub mod matrix;
pub mod ops;
pub mod optim;
pub mod rng;

pub use gradcheck::{grad_check, sample_coordinates, GradCheckReport};
pub use matrix::Matrix;
pub use optim::{step_lr, AdamConfig, AdamState};
pub use rng::RngStream;
