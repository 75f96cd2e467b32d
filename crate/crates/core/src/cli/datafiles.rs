//! On-disk datasets: one recording file per signal role plus a JSON index.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::GenConfig;
use crate::error::{Error, Result};
use crate::harness::derive_trial_seed;
use crate::learning::{LabeledDataset, LabeledPair};
use crate::siggen::mixing::mix_rng;
use crate::siggen::{gen_mpsk, load_recordings, write_recording, FrameSpec, InterferenceSource, MixSpec};
use crate::signal::ComplexSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleFiles {
    pub data: String,
    pub meta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetIndex {
    pub version: String,
    pub frame: FrameSpec,
    pub dim: usize,
    pub count: usize,
    pub k: usize,
    pub sinr_db: f64,
    pub snr_db: Option<f64>,
    pub priors: Vec<f64>,
    /// 0-based interference type per example.
    pub labels: Vec<usize>,
    /// Transmitted bits per example as a `0`/`1` string.
    pub bits: Vec<String>,
    pub mixture: RoleFiles,
    pub soi: RoleFiles,
    pub interference: RoleFiles,
}

fn role(name: &str) -> RoleFiles {
    RoleFiles { data: format!("{name}.iq"), meta: format!("{name}.json") }
}

fn concat(signals: &[&ComplexSignal]) -> Result<ComplexSignal> {
    ComplexSignal::new(signals.iter().flat_map(|s| s.as_slice().iter().copied()).collect())
}

/// Generates `cfg.examples` mixtures and writes them under `dir`. Returns the
/// index path.
pub fn write_dataset(cfg: &GenConfig, dir: &Path) -> Result<std::path::PathBuf> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n_sym = cfg.frame.symbols_per_frame;
    let dim = cfg.frame.frame_len(n_sym);
    let sources = cfg
        .interference
        .iter()
        .map(|s| s.build(1.0, dim).and_then(InterferenceSource::gaussian))
        .collect::<Result<Vec<_>>>()?;
    let spec = MixSpec { sir_db: cfg.sinr_db, snr_db: cfg.snr_db, random_phase: true };
    let (mut ys, mut ss, mut bs, mut labels, mut bits) = (vec![], vec![], vec![], vec![], vec![]);
    for i in 0..cfg.examples {
        let seed = derive_trial_seed(cfg.base_seed, "gen", i as u64);
        let (s, b) = gen_mpsk(&cfg.frame, n_sym, derive_trial_seed(seed, "soi", 0))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, "mix", 0));
        let m = mix_rng(&s, &sources, &cfg.priors, &spec, &mut rng)?;
        let interference = ComplexSignal::new(
            m.y.as_slice().iter().zip(s.as_slice()).map(|(y, s)| y - s).collect(),
        )?;
        labels.push(m.k);
        bits.push(b.iter().map(|v| if *v == 1 { '1' } else { '0' }).collect());
        ys.push(m.y);
        ss.push(s);
        bs.push(interference);
    }
    let frames: Vec<[u64; 2]> = (0..cfg.examples).map(|i| [(i * dim) as u64, ((i + 1) * dim) as u64]).collect();
    let index = DatasetIndex {
        version: crate::harness::VERSION.to_string(),
        frame: cfg.frame.clone(),
        dim,
        count: cfg.examples,
        k: cfg.interference.len(),
        sinr_db: cfg.sinr_db,
        snr_db: cfg.snr_db,
        priors: cfg.priors.clone(),
        labels,
        bits,
        mixture: role("mixture"),
        soi: role("soi"),
        interference: role("interference"),
    };
    for (files, sigs, name) in
        [(&index.mixture, &ys, "mixture"), (&index.soi, &ss, "soi"), (&index.interference, &bs, "interference")]
    {
        let refs: Vec<&ComplexSignal> = sigs.iter().collect();
        write_recording(&concat(&refs)?, name, Some(frames.clone()), &dir.join(&files.data), &dir.join(&files.meta))?;
    }
    let path = dir.join("dataset.json");
    fs::write(&path, serde_json::to_string_pretty(&index).expect("index serializes")).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_index(path: &Path) -> Result<DatasetIndex> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: 0,
        message: format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()),
    })
}

/// Loads the labeled `(y, s, k)` pairs referenced by a dataset index.
pub fn read_dataset(index_path: &Path) -> Result<(DatasetIndex, LabeledDataset)> {
    let index = read_index(index_path)?;
    let dir = index_path.parent().unwrap_or(Path::new("."));
    let load = |r: &RoleFiles| load_recordings(&dir.join(&r.data), &dir.join(&r.meta));
    let ys = load(&index.mixture)?.recordings;
    let ss = load(&index.soi)?.recordings;
    if ys.len() != index.count || ss.len() != index.count || index.labels.len() != index.count {
        return Err(Error::Format {
            offset: 0,
            message: format!("dataset index declares {} examples, files hold {} / {}", index.count, ys.len(), ss.len()),
        });
    }
    if let Some(&k) = index.labels.iter().find(|&&k| k >= index.k) {
        return Err(Error::TypeOutOfRange { index: k, k: index.k });
    }
    let pairs = ys
        .into_iter()
        .zip(ss)
        .zip(&index.labels)
        .map(|((y, s), &k)| LabeledPair { y, s, k })
        .collect();
    Ok((index, LabeledDataset::new(pairs)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig { examples: 5, ..GenConfig::default() };
        let path = write_dataset(&cfg, dir.path()).unwrap();
        let (index, data) = read_dataset(&path).unwrap();
        assert_eq!(data.len(), 5);
        assert_eq!(data.dim(), index.dim);
        assert_eq!(index.bits[0].len(), 16);
        for (p, &k) in data.pairs().iter().zip(&index.labels) {
            assert_eq!(p.k, k);
        }
    }
}
