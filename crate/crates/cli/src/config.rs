//! Flat `key = value` run configuration with dotted section keys.
//!
//! ```text
//! # comment
//! grid.dim = 1
//! grid.n = 128
//! params.s = 0.5
//! time.T = 1.0
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use fplap_core::{
    validate_params, Field, Forcing, GridSpec, InitialKind, ModelParams, SobolevOptions, TimeOptions,
};

/// A configuration problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self { line: Some(l), message } => write!(f, "line {l}: {message}"),
            Self { line: None, message } => f.write_str(message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "grid.dim",
    "grid.n",
    "grid.box_min",
    "grid.box_max",
    "params.s",
    "params.p",
    "params.q",
    "params.r",
    "params.lambda",
    "params.sigma",
    "initial.kind",
    "initial.amplitude",
    "forcing.kind",
    "forcing.value",
    "time.T",
    "time.tol",
    "time.dt0",
    "time.dt_min",
    "time.dt_max",
    "time.fixed_dt",
    "time.norm_cap",
    "sobolev.starts",
    "sobolev.max_iters",
    "sobolev.tol",
    "cert.autoscale",
    "cert.autoscale_factor",
    "cert.max_rounds",
    "output.records",
    "output.snapshot_stride",
    "output.snapshot_stem",
    "output.certificate",
];

/// Raw entries, remembering the line each key came from.
#[derive(Debug, Clone, Default)]
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::at(line, format!("expected `key = value`, got `{content}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("missing value for `{key}`")));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
                return Err(ConfigError::at(line, format!("duplicate key `{key}` (first set on line {first})")));
            }
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse().map(Some).map_err(|_| ConfigError::at(line, format!("`{key}`: expected {what}, got `{v}`")))
            }
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.parsed(key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(ConfigError::at(self.line(key), format!("`{key}` must be finite")));
            }
        }
        Ok(v)
    }

    fn require_float(&self, key: &str) -> Result<f64, ConfigError> {
        self.float(key)?.ok_or_else(|| ConfigError::global(format!("missing required key `{key}`")))
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|t| t.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .map(Some)
            .ok_or_else(|| ConfigError::at(line, format!("`{key}`: expected comma-separated numbers, got `{v}`")))
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn anchored(&self, key: &str, message: impl Into<String>) -> ConfigError {
        match self.map.get(key) {
            Some((l, _)) => ConfigError::at(*l, message),
            None => ConfigError::global(message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaMode {
    Off,
    /// `σ = φ(u₀) + 1`.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub records: Option<PathBuf>,
    pub snapshot_stride: Option<usize>,
    pub snapshot_stem: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertSettings {
    pub autoscale: bool,
    pub factor: f64,
    pub max_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub sigma_mode: SigmaMode,
    pub initial: InitialKind,
    pub time: TimeOptions,
    pub norm_cap_factor: f64,
    pub sobolev: SobolevOptions,
    pub cert: CertSettings,
    pub outputs: Outputs,
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::global(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses `text`; relative output paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let e = Entries::parse(text)?;
        let seed: u64 = e.parsed("seed", "a non-negative integer")?.unwrap_or(0);

        let dim: usize = e.parsed("grid.dim", "1 or 2")?.unwrap_or(1);
        let n: usize = e.parsed("grid.n", "an integer")?.ok_or_else(|| ConfigError::global("missing required key `grid.n`"))?;
        let lo = e.floats("grid.box_min")?.unwrap_or_else(|| vec![0.0; dim]);
        let hi = e.floats("grid.box_max")?.unwrap_or_else(|| vec![1.0; dim]);
        let grid = GridSpec::new(dim, &lo, &hi, n).map_err(|err| e.anchored("grid.n", err.to_string()))?;

        let mut params = ModelParams::new(
            e.require_float("params.s")?,
            e.require_float("params.p")?,
            e.require_float("params.q")?,
            e.require_float("params.r")?,
        );
        params.lambda = e.float("params.lambda")?.unwrap_or(0.0);
        let sigma_mode = match e.raw("params.sigma") {
            None | Some((_, "off")) => SigmaMode::Off,
            Some((_, "auto")) => SigmaMode::Auto,
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x > 0.0 && x.is_finite() => SigmaMode::Value(x),
                _ => return Err(ConfigError::at(line, format!("`params.sigma`: expected off, auto or a positive number, got `{v}`"))),
            },
        };
        if let SigmaMode::Value(x) = sigma_mode {
            params.sigma = Some(x);
        }
        params.forcing = match e.raw("forcing.kind").map(|(_, v)| v) {
            None | Some("zero") => Forcing::Zero,
            Some("constant") => Forcing::Constant(e.require_float("forcing.value")?),
            Some(other) => return Err(e.anchored("forcing.kind", format!("unknown forcing kind `{other}` (zero, constant)"))),
        };
        validate_params(&params, &grid).map_err(|err| e.anchored("params.q", err.to_string()))?;

        let kind = e.raw("initial.kind").map_or("bump", |(_, v)| v);
        let amplitude = e.float("initial.amplitude")?.unwrap_or(1.0);
        let initial = InitialKind::parse(kind, amplitude, seed).map_err(|err| e.anchored("initial.kind", err.to_string()))?;

        let t_end = e.require_float("time.T")?;
        let mut time = TimeOptions::adaptive(t_end);
        if let Some(v) = e.float("time.tol")? {
            time.tol = v;
        }
        if let Some(v) = e.float("time.dt_min")? {
            time.dt_min = v;
        }
        if let Some(v) = e.float("time.dt_max")? {
            time.dt_max = v;
        }
        if let Some(v) = e.float("time.dt0")? {
            time.dt0 = v;
        }
        time.dt0 = time.dt0.clamp(time.dt_min, time.dt_max);
        if let Some(v) = e.float("time.fixed_dt")? {
            time.fixed_dt = Some(v);
            time.dt0 = v;
        }
        time.validate().map_err(|err| e.anchored("time.T", err.to_string()))?;
        let norm_cap_factor = e.float("time.norm_cap")?.unwrap_or(fplap_core::BlowupPolicy::DEFAULT_FACTOR);
        if !(norm_cap_factor > 1.0) {
            return Err(e.anchored("time.norm_cap", "`time.norm_cap` must exceed 1"));
        }

        let mut sobolev = SobolevOptions { seed, ..Default::default() };
        if let Some(v) = e.parsed("sobolev.starts", "an integer")? {
            sobolev.starts = v;
        }
        if let Some(v) = e.parsed("sobolev.max_iters", "an integer")? {
            sobolev.max_iters = v;
        }
        if let Some(v) = e.float("sobolev.tol")? {
            sobolev.tol = v;
        }
        if sobolev.starts == 0 || sobolev.max_iters == 0 {
            return Err(e.anchored("sobolev.starts", "sobolev starts and iterations must be positive"));
        }

        let cert = CertSettings {
            autoscale: e.parsed("cert.autoscale", "true or false")?.unwrap_or(false),
            factor: e.float("cert.autoscale_factor")?.unwrap_or(1.25),
            max_rounds: e.parsed("cert.max_rounds", "an integer")?.unwrap_or(200),
        };
        if !(cert.factor > 1.0) {
            return Err(e.anchored("cert.autoscale_factor", "`cert.autoscale_factor` must exceed 1"));
        }

        let path = |key: &str| e.raw(key).map(|(_, v)| base.join(v));
        let snapshot_stride: Option<usize> = e.parsed("output.snapshot_stride", "an integer")?;
        if snapshot_stride == Some(0) {
            return Err(e.anchored("output.snapshot_stride", "`output.snapshot_stride` must be positive"));
        }
        let outputs = Outputs {
            records: path("output.records"),
            snapshot_stride,
            snapshot_stem: path("output.snapshot_stem"),
            certificate: path("output.certificate"),
        };
        if outputs.snapshot_stride.is_some() && outputs.snapshot_stem.is_none() {
            return Err(e.anchored("output.snapshot_stride", "snapshots need `output.snapshot_stem`"));
        }

        Ok(Self { grid, params, sigma_mode, initial, time, norm_cap_factor, sobolev, cert, outputs, seed })
    }

    /// Replaces the seed everywhere it is used.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.sobolev.seed = seed;
        if let InitialKind::Random { seed: s, .. } = &mut self.initial {
            *s = seed;
        }
    }

    /// Initial data and the parameters with `σ` resolved against it.
    pub fn initial_state(&self) -> Result<(Field, ModelParams), ConfigError> {
        let u0 = fplap_core::make_initial_data(&self.initial, &self.grid).map_err(|e| ConfigError::global(e.to_string()))?;
        let mut params = self.params.clone();
        if self.sigma_mode == SigmaMode::Auto {
            params.sigma = Some(fplap_core::phi_r(&u0, params.r).map_err(|e| ConfigError::global(e.to_string()))? + 1.0);
        }
        Ok((u0, params))
    }

    /// Fails unless every output path has an existing parent directory.
    pub fn check_outputs(&self) -> Result<(), ConfigError> {
        let o = &self.outputs;
        for p in [&o.records, &o.snapshot_stem, &o.certificate].into_iter().flatten() {
            let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(ConfigError::global(format!("output directory {} does not exist", parent.display())));
            }
        }
        Ok(())
    }
}
