//! Training sets of `(y, s)` pairs, with or without type labels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussmix::MixtureModel;
use crate::harness::seed::derive_trial_seed;
use crate::signal::ComplexSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub y: ComplexSignal,
    pub s: ComplexSignal,
    /// 0-based interference type.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pairs: Vec<LabeledPair>,
    dim: usize,
}

fn check_pair_dims(y: &ComplexSignal, s: &ComplexSignal, dim: usize) -> Result<()> {
    for v in [y, s] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    Ok(())
}

impl LabeledDataset {
    pub fn new(pairs: Vec<LabeledPair>) -> Result<Self> {
        let dim = pairs.first().ok_or_else(|| Error::invalid("dataset is empty"))?.y.len();
        for p in &pairs {
            check_pair_dims(&p.y, &p.s, dim)?;
        }
        Ok(Self { pairs, dim })
    }

    /// `per_type` pairs drawn from each type of `model`, grouped by type.
    pub fn sample_per_type(model: &MixtureModel, per_type: usize, seed: u64) -> Result<Self> {
        let mut pairs = Vec::with_capacity(per_type * model.k());
        for k in 0..model.k() {
            for i in 0..per_type {
                let idx = (k * per_type + i) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, "labeled-dataset", idx));
                let (y, s) = model.sample(k, &mut rng)?;
                pairs.push(LabeledPair { y, s, k });
            }
        }
        Self::new(pairs)
    }

    /// `d` pairs with types drawn from the model priors.
    pub fn sample_mixture(model: &MixtureModel, d: usize, seed: u64) -> Result<Self> {
        let pairs = (0..d)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, "mixture-dataset", i as u64));
                model.sample_mixture(&mut rng).map(|(y, s, k)| LabeledPair { y, s, k })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Drops labels.
    pub fn unlabeled(&self) -> UnlabeledDataset {
        UnlabeledDataset {
            pairs: self.pairs.iter().map(|p| (p.y.clone(), p.s.clone())).collect(),
            dim: self.dim,
        }
    }

    /// Applies a type permutation: label `k` becomes `perm[k]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                let k = *perm.get(p.k).ok_or(Error::TypeOutOfRange { index: p.k, k: perm.len() })?;
                Ok(LabeledPair { k, ..p.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataset {
    pairs: Vec<(ComplexSignal, ComplexSignal)>,
    dim: usize,
}

impl UnlabeledDataset {
    pub fn new(pairs: Vec<(ComplexSignal, ComplexSignal)>) -> Result<Self> {
        let dim = pairs.first().ok_or_else(|| Error::invalid("dataset is empty"))?.0.len();
        for (y, s) in &pairs {
            check_pair_dims(y, s, dim)?;
        }
        Ok(Self { pairs, dim })
    }

    pub fn pairs(&self) -> &[(ComplexSignal, ComplexSignal)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}
