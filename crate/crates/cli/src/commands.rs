use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fplap_core::params::CriticalExponent;
use fplap_core::{
    certify_blowup, estimate_sobolev_constant, run, validate_params, AutoScale, CertifyOptions, Error, SimConfig,
    SimStatus, Verdict,
};

use crate::config::{ConfigError, RunConfig};
use crate::report;
use crate::verify;

pub mod exit {
    pub const OK: i32 = 0;
    /// I/O failure or a failed verification suite.
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const EMBEDDING: i32 = 3;
    pub const BLOWUP: i32 = 10;
    pub const UNDERFLOW: i32 = 11;
    pub const BOUND_VIOLATED: i32 = 20;
    pub const HYPOTHESES_UNMET: i32 = 21;
    pub const NO_BLOWUP: i32 = 22;
}

#[derive(Debug, Parser)]
#[command(name = "fplap", about = "Fractional p-Laplacian evolution lab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a configured run and write energy records and snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Records CSV path (overrides `output.records`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run randomized inequality suites.
    Verify {
        /// Suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples per suite (defaults differ per suite).
        #[arg(long)]
        samples: Option<usize>,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the discrete best Sobolev constant.
    EstimateCstar {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path (overrides `output.certificate`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the blow-up hypotheses, simulate, and certify the blow-up time.
    BlowupCert {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Certificate path (overrides `output.certificate`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors.
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return exit::CONFIG;
            }
            let _ = write!(out, "{e}");
            return exit::OK;
        }
    };
    match cli.command {
        Command::Simulate { config, seed, out: path } => cmd_simulate(&config, seed, path, out, err),
        Command::Verify { suite, seed, samples, out: path } => cmd_verify(&suite, seed, samples, path, out, err),
        Command::EstimateCstar { config, seed, out: path } => cmd_estimate_cstar(&config, seed, path, out, err),
        Command::BlowupCert { config, seed, out: path } => cmd_blowup_cert(&config, seed, path, out, err),
    }
}

fn config_error(err: &mut dyn Write, path: &Path, e: &ConfigError) -> i32 {
    let _ = writeln!(err, "error: {}: {e}", path.display());
    exit::CONFIG
}

fn load(path: &Path, seed: Option<u64>, err: &mut dyn Write) -> Result<RunConfig, i32> {
    let mut cfg = RunConfig::load(path).map_err(|e| config_error(err, path, &e))?;
    if let Some(seed) = seed {
        cfg.reseed(seed);
    }
    Ok(cfg)
}

fn require_admissible(cfg: &RunConfig, path: &Path, err: &mut dyn Write) -> Result<(), i32> {
    let report = validate_params(&cfg.params, &cfg.grid).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", path.display());
        exit::CONFIG
    })?;
    if !report.growth_ok {
        let _ = writeln!(err, "error: {}: inadmissible parameters: {}", path.display(), report.messages.join("; "));
        return Err(exit::CONFIG);
    }
    Ok(())
}

fn require_embedding(cfg: &RunConfig, err: &mut dyn Write) -> Result<(), i32> {
    let pstar = CriticalExponent::of(cfg.grid.dim(), cfg.params.s, cfg.params.p);
    if !pstar.admits(cfg.params.q) {
        let _ = writeln!(err, "error: q = {} exceeds the critical exponent p* = {}", cfg.params.q, pstar.value());
        return Err(exit::EMBEDDING);
    }
    Ok(())
}

fn io_error(err: &mut dyn Write, what: &Path, e: std::io::Error) -> i32 {
    let _ = writeln!(err, "error: writing {}: {e}", what.display());
    exit::FAILURE
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()
}

pub fn cmd_simulate(path: &Path, seed: Option<u64>, out_path: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut cfg = match load(path, seed, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if out_path.is_some() {
        cfg.outputs.records = out_path;
    }
    if let Err(code) = require_admissible(&cfg, path, err) {
        return code;
    }
    if let Err(e) = cfg.check_outputs() {
        return config_error(err, path, &e);
    }
    let (u0, params) = match cfg.initial_state() {
        Ok(v) => v,
        Err(e) => return config_error(err, path, &e),
    };
    let mut sim = SimConfig::new(params, u0, cfg.time.clone());
    sim.norm_cap_factor = cfg.norm_cap_factor;
    sim.snapshot_stride = cfg.outputs.snapshot_stride;
    let outcome = match run(&sim) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return exit::CONFIG;
        }
    };
    let state = &outcome.final_state;
    if let Some(rec_path) = &cfg.outputs.records {
        if let Err(e) = write_file(rec_path, |w| report::write_records(w, &state.records)) {
            return io_error(err, rec_path, e);
        }
    }
    if let Some(stem) = &cfg.outputs.snapshot_stem {
        for snap in &state.snapshots {
            let p = report::snapshot_path(stem, snap.step);
            if let Err(e) = write_file(&p, |w| report::write_snapshot(w, &snap.field)) {
                return io_error(err, &p, e);
            }
        }
    }
    let (status, code) = match outcome.status {
        SimStatus::Completed => ("completed", exit::OK),
        SimStatus::BlowupDetected => ("blowup-detected", exit::BLOWUP),
        SimStatus::StepUnderflow => ("step-underflow", exit::UNDERFLOW),
    };
    let last = state.records.last().expect("initial record");
    let _ = writeln!(out, "status={status}");
    let _ = writeln!(out, "t_final={}", report::num(state.t));
    let _ = writeln!(out, "steps={}", state.step_count);
    let _ = writeln!(out, "rejected_steps={}", outcome.rejected_steps);
    let _ = writeln!(out, "energy_final={}", report::num(last.energy));
    let _ = writeln!(out, "norm2_final={}", report::num(last.norm2));
    if let Some(iv) = outcome.blowup_time_estimate {
        let _ = writeln!(out, "blowup_time_lower={}", report::num(iv.start));
        let _ = writeln!(out, "blowup_time_upper={}", report::num(iv.end));
    }
    code
}

pub fn cmd_verify(
    suite: &str,
    seed: u64,
    samples: Option<usize>,
    out_path: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(names) = verify::select(suite) else {
        let _ = writeln!(err, "error: unknown suite `{suite}` (expected all, {})", verify::SUITES.join(", "));
        return exit::CONFIG;
    };
    if samples == Some(0) {
        let _ = writeln!(err, "error: --samples must be positive");
        return exit::CONFIG;
    }
    let mut text = String::new();
    let mut all_passed = true;
    for name in names {
        let rep = verify::run_suite(name, samples.unwrap_or_else(|| verify::default_samples(name)), seed);
        all_passed &= rep.passed;
        text.push_str(&format!(
            "suite={} samples={} min_margin={} status={}{}{}\n",
            rep.name,
            rep.samples,
            report::num(rep.min_margin),
            if rep.passed { "pass" } else { "fail" },
            if rep.detail.is_empty() { "" } else { " " },
            rep.detail
        ));
    }
    let _ = out.write_all(text.as_bytes());
    if let Some(p) = out_path {
        if let Err(e) = std::fs::write(&p, &text) {
            return io_error(err, &p, e);
        }
    }
    if all_passed {
        exit::OK
    } else {
        exit::FAILURE
    }
}

pub fn cmd_estimate_cstar(path: &Path, seed: Option<u64>, out_path: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match load(path, seed, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Err(code) = require_embedding(&cfg, err) {
        return code;
    }
    let estimate = match estimate_sobolev_constant(&cfg.grid, &cfg.params, &cfg.sobolev) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return exit::CONFIG;
        }
    };
    let text = report::cstar_text(&estimate);
    let _ = out.write_all(text.as_bytes());
    if let Some(p) = out_path.or(cfg.outputs.certificate) {
        if let Err(e) = std::fs::write(&p, &text) {
            return io_error(err, &p, e);
        }
    }
    exit::OK
}

pub fn cmd_blowup_cert(path: &Path, seed: Option<u64>, out_path: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut cfg = match load(path, seed, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if out_path.is_some() {
        cfg.outputs.certificate = out_path;
    }
    if let Err(code) = require_admissible(&cfg, path, err) {
        return code;
    }
    if let Err(code) = require_embedding(&cfg, err) {
        return code;
    }
    if let Err(e) = cfg.check_outputs() {
        return config_error(err, path, &e);
    }
    let (u0, params) = match cfg.initial_state() {
        Ok(v) => v,
        Err(e) => return config_error(err, path, &e),
    };
    let opts = CertifyOptions {
        sobolev: cfg.sobolev.clone(),
        time: cfg.time.clone(),
        norm_cap_factor: cfg.norm_cap_factor,
        autoscale: cfg.cert.autoscale.then_some(AutoScale { factor: cfg.cert.factor, max_rounds: cfg.cert.max_rounds }),
    };
    let outcome = match certify_blowup(&cfg.grid, &params, &u0, &opts) {
        Ok(o) => o,
        Err(e @ Error::Hypothesis(_)) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return exit::EMBEDDING;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return exit::CONFIG;
        }
    };
    let cert = &outcome.certificate;
    let text = report::certificate_text(cert, outcome.scale, &outcome.estimate);
    let _ = out.write_all(text.as_bytes());
    if let Some(p) = &cfg.outputs.certificate {
        if let Err(e) = std::fs::write(p, &text) {
            return io_error(err, p, e);
        }
    }
    if let (Some(rec_path), Some(sim)) = (&cfg.outputs.records, &outcome.simulation) {
        if let Err(e) = write_file(rec_path, |w| report::write_records(w, &sim.final_state.records)) {
            return io_error(err, rec_path, e);
        }
    }
    for failure in &cert.failures {
        let _ = writeln!(err, "hypothesis failed: {failure}");
    }
    match cert.verdict {
        Verdict::Certified => exit::OK,
        Verdict::BoundViolated => exit::BOUND_VIOLATED,
        Verdict::HypothesesUnmet => exit::HYPOTHESES_UNMET,
        Verdict::NoBlowupObserved => exit::NO_BLOWUP,
    }
}
