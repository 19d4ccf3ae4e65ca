//! Possession analytics on soccer event streams.
//!
//! Possessions are encoded as order-3 log-signatures of their augmented
//! `(x, y, T)` path, a small feed-forward network predicts the next action
//! type and location, and possessions are valued from those predictions with
//! expected-goals and expected-threat sub-models.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod events;
pub mod predictor;
pub mod sig;
pub mod synth;
pub mod value;

pub use error::{DataError, SigError};
