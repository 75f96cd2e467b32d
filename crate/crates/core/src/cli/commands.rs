//! Subcommand handlers. Each writes its outputs plus `manifest.json`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::{Config, LearnKindName};
use super::datafiles::{read_dataset, write_dataset};
use super::emit::{self, Format};
use super::{Cli, Command};
use crate::error::Result;
use crate::gaussmix::CovarianceSpec;
use crate::harness::{run_asymptotics, run_sweep, tdc_certificate, VERSION};
use crate::learning::{fit_dts, fit_em, fit_pooled, LearnedModel};
use crate::siggen::psk_covariance;

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    command: &'a str,
    config: serde_json::Value,
    seed: u64,
    workers: Option<usize>,
    format: &'a str,
    outputs: Vec<String>,
}

fn load(cli: &Cli) -> Result<Config> {
    match &cli.common.config {
        Some(p) => super::parse_config(p),
        None => Ok(Config::default()),
    }
}

fn write_report<T: Serialize>(out: &Path, format: Format, csv: impl FnOnce() -> String, value: &T) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if format == Format::Csv {
        let p = out.join("report.csv");
        emit::write_text(&p, &csv())?;
        written.push(p);
    }
    let p = out.join("report.json");
    emit::write_text(&p, &emit::to_json(value))?;
    written.push(p);
    Ok(written)
}

/// Runs the selected subcommand; returns every file written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = load(cli)?;
    let out = cli.common.out.as_path();
    let fmt = cli.common.format;
    let workers = cli.common.workers;
    let (section, seed, mut written) = match cli.command {
        Command::Gen => {
            let mut g = cfg.gen.unwrap_or_default();
            g.base_seed = cli.common.seed.unwrap_or(g.base_seed);
            g.validate()?;
            let index = write_dataset(&g, out)?;
            let dir = index.parent().unwrap_or(out).to_path_buf();
            let mut files = vec![index];
            for role in ["mixture", "soi", "interference"] {
                files.push(dir.join(format!("{role}.iq")));
                files.push(dir.join(format!("{role}.json")));
            }
            (serde_json::to_value(&g), g.base_seed, files)
        }
        Command::Learn => {
            let mut l = cfg.learn.unwrap_or_default();
            l.em.seed = cli.common.seed.unwrap_or(l.em.seed);
            l.validate()?;
            let (index, data) = read_dataset(&l.dataset)?;
            let mut files = Vec::new();
            for kind in &l.kinds {
                let model: LearnedModel = match kind {
                    LearnKindName::PerTypeLinear => fit_dts(&data, index.k, l.shrinkage)?,
                    LearnKindName::PooledLinear => fit_pooled(&data.unlabeled(), l.shrinkage)?,
                    LearnKindName::EmMixture => {
                        let soi = CovarianceSpec::dense(psk_covariance(&index.frame, index.frame.symbols_per_frame)?)?;
                        fit_em(&data.unlabeled(), &soi, index.k, None, &l.em)?
                    }
                };
                let p = out.join(format!("learned_{}.json", model.kind_name()));
                emit::write_text(&p, &model.to_json_string())?;
                files.push(p);
            }
            (serde_json::to_value(&l), l.em.seed, files)
        }
        Command::Sweep => {
            let mut s = cfg.sweep.unwrap_or_default();
            s.base_seed = cli.common.seed.unwrap_or(s.base_seed);
            s.validate()?;
            let report = run_sweep(&s, workers)?;
            let files = write_report(out, fmt, || emit::sweep_csv(&report), &report)?;
            (serde_json::to_value(&s), s.base_seed, files)
        }
        Command::Asymptotics => {
            let mut a = cfg.asymptotics.unwrap_or_default();
            a.base_seed = cli.common.seed.unwrap_or(a.base_seed);
            a.validate()?;
            let report = run_asymptotics(&a, workers)?;
            let files = write_report(out, fmt, || emit::asymptotics_csv(&report), &report)?;
            (serde_json::to_value(&a), a.base_seed, files)
        }
        Command::Tdc => {
            let mut t = cfg.tdc.unwrap_or_default();
            t.base_seed = cli.common.seed.unwrap_or(t.base_seed);
            t.validate()?;
            let model = t.model.build(t.n)?;
            let cert = crate::harness::pool::with_workers(workers, || tdc_certificate(&model, t.trials, t.base_seed))??;
            let files = write_report(out, fmt, || emit::tdc_csv(&cert), &cert)?;
            (serde_json::to_value(&t), t.base_seed, files)
        }
    };
    let manifest = Manifest {
        version: VERSION,
        command: cli.command.name(),
        config: json!({ cli.command.name(): section.expect("config serializes") }),
        seed,
        workers,
        format: match fmt {
            Format::Csv => "csv",
            Format::Json => "json",
        },
        outputs: written.iter().map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()).collect(),
    };
    let p = out.join("manifest.json");
    emit::write_text(&p, &emit::to_json(&manifest))?;
    written.push(p);
    Ok(written)
}
