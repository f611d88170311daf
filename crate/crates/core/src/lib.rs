//! Secrecy capacity regions of two-receiver MIMO Gaussian broadcast channels
//! carrying one common and two confidential messages.
//!
//! The crate is organised bottom-up:
//!
//! - [`matcore`]: symmetric eigen-services, log-det, Loewner tests.
//! - [`channel`]: channel models, the three rate functionals and their
//!   gradients, the general-to-aligned reduction and the DPC precoder.
//! - [`optimizer`]: weighted secrecy-rate maximization under a common-rate
//!   floor, a brute-force grid oracle for `t <= 2`, and region tracing.
//! - [`certify`]: KKT multiplier recovery, the enhanced-noise construction
//!   and numerical checks of the enhancement and converse identities.
//! - [`cli`]: config loading, command implementations and output formats.

pub mod certify;
pub mod channel;
pub mod cli;
pub mod error;
pub mod matcore;
pub mod optimizer;
pub mod tolerances;

pub use error::{Error, Result};
