//! Truncated tensor algebra, path signatures and Lyndon-basis log-signatures.
//!
//! Paths are piecewise linear, so signatures reduce to products of
//! per-segment tensor exponentials. All arithmetic is `f64`.

mod lyndon;
mod path;
mod tensor;

pub use lyndon::{logsig_dim, lyndon_basis, lyndon_words, project_lyndon, witt_count, LogSigVector, Word};
pub use path::{
    augment, augment_with, logsig_of_possession, logsig_of_possession_with, path_logsig, path_signature,
    AugmentationMeta, AugmentedPath, Basepoint, POSSESSION_CHANNELS, POSSESSION_SIG_ORDER,
};
pub use tensor::{segment_signature, TruncatedTensor, GROUP_LIKE_TOL};
