//! Seeded randomness and the statistical primitives the rest of the crate consumes.

mod gradcheck;
mod rng;
mod stats;

pub use gradcheck::finite_diff_gradient;
pub use rng::{derive_stream, stream_label, RngStream};
pub use stats::{autocorrelation, mean, pearson, std_dev, StatsError};
