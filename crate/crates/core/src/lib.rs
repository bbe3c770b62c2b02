//! Byzantine-resilient distributed SGD simulation built around MixTailor, a
//! server that draws its robust aggregation rule uniformly at random from a
//! pool each round.
//!
//! * [`vector`], [`rng`], [`matrix_csv`]: numeric primitives, seeded streams, gradient files.
//! * [`aggregators`]: mean, comed, trimmed mean, generalized Krum, geometric
//!   median, Bulyan, resampling and the randomized pool.
//! * [`attacks`]: tailored reverse-direction attacks and their variants.
//! * [`bounds`]: closed-form bias bounds and Monte Carlo resilience checks.
//! * [`harness`]: datasets, models and the training loop.
//! * [`cli`]: the `mixtailor` command line.

pub mod aggregators;
pub mod attacks;
pub mod bounds;
pub mod cli;
mod descriptor;
pub mod error;
pub mod harness;
pub mod matrix_csv;
pub mod rng;
pub mod vector;

pub use error::{Error, Result};
pub use rng::{SeededRng, Stream};
pub use vector::{GradVec, PNorm, WorkerUpdate};
