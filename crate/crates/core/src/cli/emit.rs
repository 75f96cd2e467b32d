//! Report serialization: CSV with fixed 17-significant-digit numbers and a JSON mirror.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::asymptotics::TdcCertificate;
use crate::harness::{AsymptoticsReport, SweepReport};

pub const SWEEP_HEADER: &str = "method,sinr_db,mse_mean,mse_stderr,ber_mean,ber_stderr,trials,flags";
pub const ASYMPTOTICS_HEADER: &str = "N,trials,map_errors,map_error_rate,map_error_stderr,psi_errors,psi_error_rate,\
psi_error_stderr,mse_mmse,mse_mmse_stderr,mse_dts,mse_dts_stderr,ratio,ratio_stderr,flags";
pub const TDC_HEADER: &str =
    "N,true_k,probe,cross_mean,cross_stderr,matched_mean,matched_stderr,margin_sigmas,certified";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// 17 significant digits in scientific notation; NaN becomes an empty field.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn flags_field(flags: &[String]) -> String {
    let joined = flags.join(";");
    if joined.contains(',') || joined.contains('"') {
        format!("\"{}\"", joined.replace('"', "\"\""))
    } else {
        joined
    }
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &report.rows {
        let priors: Vec<String> = r.test_priors.iter().map(|p| p.to_string()).collect();
        let mut flags = vec![format!("test_priors={}", priors.join("/"))];
        flags.extend(r.flags.iter().cloned());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            fmt_num(r.sinr_db),
            fmt_num(r.mse_mean),
            fmt_num(r.mse_stderr),
            fmt_num(r.ber_mean),
            fmt_num(r.ber_stderr),
            r.trials,
            flags_field(&flags)
        )
        .expect("writing to a String");
    }
    out
}

pub fn asymptotics_csv(report: &AsymptoticsReport) -> String {
    let mut out = String::from(ASYMPTOTICS_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.trials,
            r.map_errors,
            fmt_num(r.map_error_rate),
            fmt_num(r.map_error_stderr),
            r.psi_errors,
            fmt_num(r.psi_error_rate),
            fmt_num(r.psi_error_stderr),
            fmt_num(r.mse_mmse),
            fmt_num(r.mse_mmse_stderr),
            fmt_num(r.mse_dts),
            fmt_num(r.mse_dts_stderr),
            fmt_num(r.ratio),
            fmt_num(r.ratio_stderr),
            flags_field(&r.flags)
        )
        .expect("writing to a String");
    }
    out
}

pub fn tdc_csv(cert: &TdcCertificate) -> String {
    let mut out = String::from(TDC_HEADER);
    out.push('\n');
    for e in &cert.entries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            cert.n,
            e.true_k,
            e.probe,
            fmt_num(e.cross.mean),
            fmt_num(e.cross.stderr),
            fmt_num(e.matched.mean),
            fmt_num(e.matched.stderr),
            fmt_num(e.margin_sigmas),
            cert.certified
        )
        .expect("writing to a String");
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
