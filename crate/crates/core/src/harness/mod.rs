//! Monte Carlo experiment engine.

pub mod asymptotics;
pub mod metrics;
pub mod pool;
pub mod seed;
pub mod stats;
pub mod sweep;

pub use asymptotics::{run_asymptotics, tdc_certificate, AsymptoticsConfig, AsymptoticsReport, AsymptoticsRow};
pub use metrics::mse;
pub use seed::derive_trial_seed;
pub use stats::{PairedStats, Stats, Summary};
pub use sweep::{mismatch_prior_grid, run_sweep, Method, SweepConfig, SweepReport, SweepRow, VERSION};
