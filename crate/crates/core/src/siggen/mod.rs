//! Signal generation: M-PSK frames, Gaussian and recorded interference, mixtures.

pub mod gaussian;
pub mod mixing;
pub mod psk;
pub mod recording;
pub mod rrc;

pub use gaussian::{gen_dense_gaussian, gen_stationary_gaussian, GaussianSampler};
pub use mixing::{draw_interference, mix, GaussianSource, InterferenceSource, MixSpec, Mixture};
pub use psk::{ber, demod_mpsk, gen_mpsk, psk_covariance, FrameSpec};
pub use recording::{load_recordings, write_recording, RecordingMeta, RecordingPool};
pub use rrc::rrc_taps;
