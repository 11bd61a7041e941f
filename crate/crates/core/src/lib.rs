//! Differentially private empirical risk minimization.
//!
//! Output-perturbed full gradient descent for smooth convex losses, random-round
//! private SGD for smooth (possibly non-convex) losses, a mini-batch private SGD
//! baseline, and the tooling around them: noise mechanisms and accounting,
//! stability tracing, dataset handling, and an experiment harness.

pub mod bench;
pub mod data;
pub mod error;
pub mod linalg;
pub mod losses;
pub mod mechanisms;
pub mod model_io;
pub mod optimizers;
pub mod rng;
pub mod sensitivity;
pub mod timing;

pub use data::{generate, Dataset, Example, SyntheticKind, SyntheticSpec, Task};
pub use error::{Error, Result};
pub use losses::{Constants, Curvature, LogisticForm, LossKind, LossModel};
pub use mechanisms::{NoiseKind, NoiseSpec, PrivacyBudget};
pub use optimizers::{Algorithm, GdConfig, NoiseRecord, PrivateSolution};
pub use rng::RngStream;
