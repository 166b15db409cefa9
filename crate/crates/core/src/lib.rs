//! SEIR epidemic model with digital contact tracing.
//!
//! The crate is organized around three layers:
//!
//! * [`dist`] and [`timeline`] — an algebra of random durations (latent
//!   period, contagious window, testing delay) from which the notification
//!   timeline probabilities `p_E`, `p_I`, `p_R` and the removal rates
//!   `theta`, `psi` are derived.
//! * [`seir`], [`stability`] and [`stochastic`] — the 7-compartment
//!   tracked/untracked SEIR dynamics: a deterministic RK4 integrator, the
//!   closed-form controllability condition C1 with its Jacobian/eigenvalue
//!   machinery, and an exact continuous-time Markov-chain simulator used as
//!   an independent oracle.
//! * [`sweep`] — parameter sweeps over (testing delay, app uptake) producing
//!   controllability regions and boundary curves as CSV data.
//!
//! The [`cli`] module implements the `seirct` batch front end.

pub mod cli;
pub mod config;
pub mod dist;
pub mod error;
pub mod seir;
pub mod stability;
pub mod stochastic;
pub mod sweep;
pub mod timeline;

pub use error::{Error, Result};
