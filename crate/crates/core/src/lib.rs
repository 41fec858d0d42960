//! Confidence-calibration toolkit: binned and per-instance calibration
//! metrics, calibration-aware training losses with analytic gradients,
//! post-hoc temperature scaling, and a deterministic two-stage multi-agent
//! debate harness with pluggable agent backends.

pub mod agents;
pub mod debate;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod posthoc;
pub mod records;
pub mod rng;
pub mod trainer;

pub use error::{CalibError, Result};
pub use records::PredictionRecord;
