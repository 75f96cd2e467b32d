//! Data-driven separators: per-type and pooled linear filters, and an
//! EM-learned Gaussian mixture.

pub mod dataset;
pub mod em;
pub mod learned;
pub mod linear;
pub mod moments;

pub use dataset::{LabeledDataset, LabeledPair, UnlabeledDataset};
pub use em::{fit_em, EmOptions};
pub use learned::{apply_learned, Combiner, LearnedKind, LearnedModel, TrainingDiagnostics};
pub use linear::{fit_dts, fit_pooled};
pub use moments::{cross_cov, default_shrinkage, sample_cov};
