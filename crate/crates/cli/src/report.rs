//! Text and CSV emission. Every number is printed with 17 significant digits.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use fplap_core::{BlowupCertificate, EnergyRecord, Field, SobolevEstimate};

/// `x` in scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), num)
}

pub fn write_records(mut w: impl Write, records: &[EnergyRecord]) -> io::Result<()> {
    writeln!(w, "{}", EnergyRecord::CSV_HEADER)?;
    for rec in records {
        let row: Vec<String> = rec.fields().iter().map(|&x| num(x)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `stem-NNNNNN.csv`, zero-padded by step count.
pub fn snapshot_path(stem: &Path, step: usize) -> PathBuf {
    let mut name = stem.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!("-{step:06}.csv"));
    stem.with_file_name(name)
}

pub fn write_snapshot(mut w: impl Write, field: &Field) -> io::Result<()> {
    let grid = field.grid();
    let dim = grid.dim();
    writeln!(w, "{}", if dim == 1 { "x,u" } else { "x,y,u" })?;
    for (k, &u) in field.values().iter().enumerate() {
        let x = grid.coord(k);
        if dim == 1 {
            writeln!(w, "{},{}", num(x[0]), num(u))?;
        } else {
            writeln!(w, "{},{},{}", num(x[0]), num(x[1]), num(u))?;
        }
    }
    Ok(())
}

pub fn certificate_text(cert: &BlowupCertificate, scale: f64, estimate: &SobolevEstimate) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("schema_version", "1".into());
    kv("verdict", cert.verdict.to_string());
    kv("c_star", num(cert.c_star));
    kv("c_star_converged", estimate.converged.to_string());
    kv("alpha_crit", num(cert.alpha_crit));
    kv("e0", num(cert.e0));
    kv("energy0", num(cert.energy0));
    kv("seminorm0", num(cert.seminorm0));
    kv("amplitude_scale", num(scale));
    kv("hypotheses_met", cert.hypotheses_met.to_string());
    kv("failures", if cert.failures.is_empty() { "none".into() } else { cert.failures.join("; ") });
    kv("beta", opt(cert.beta));
    kv("t_star_bound", opt(cert.t_star_bound));
    kv("observed_blowup_time", opt(cert.observed_blowup_time));
    s
}

pub fn cstar_text(estimate: &SobolevEstimate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "c_star={}", num(estimate.value));
    let _ = writeln!(s, "converged={}", estimate.converged);
    let _ = writeln!(s, "best_start={}", estimate.best_start);
    for (k, r) in estimate.per_start.iter().enumerate() {
        let _ = writeln!(s, "start.{k}={} iterations={} converged={}", num(r.value), r.iterations, r.converged);
    }
    s
}
