//! Adaptive diffusion on infinite regular trees.
//!
//! The crate simulates the virtual-source process, computes the hop-distance
//! law of any spreading protocol, implements source estimators that see one
//! or more snapshots, and checks their success rates against analytic values
//! and an exhaustive enumerator.

pub mod closed_form;
pub mod diffusion;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod oracle;
pub mod protocol;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
