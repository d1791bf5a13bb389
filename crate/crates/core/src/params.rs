//! Model parameters and their admissibility.

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// Source term `f(x, t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Forcing {
    #[default]
    Zero,
    Constant(f64),
    /// `f(x, t) = Σ_k exp(rate_k · t) · profile_k(x)`.
    Modes(Vec<ForcingMode>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingMode {
    pub rate: f64,
    pub profile: Vec<f64>,
}

impl Forcing {
    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Constant(c) => *c == 0.0,
            Forcing::Modes(m) => m.iter().all(|m| m.profile.iter().all(|&v| v == 0.0)),
        }
    }

    /// Adds `f(·, t)` into `out`.
    pub fn accumulate(&self, t: f64, out: &mut [f64]) {
        match self {
            Forcing::Zero => {}
            Forcing::Constant(c) => out.iter_mut().for_each(|v| *v += c),
            Forcing::Modes(modes) => {
                for mode in modes {
                    let w = (mode.rate * t).exp();
                    for (o, g) in out.iter_mut().zip(&mode.profile) {
                        *o += w * g;
                    }
                }
            }
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if let Forcing::Modes(modes) = self {
            if let Some(m) = modes.iter().find(|m| m.profile.len() != len) {
                return Err(Error::LengthMismatch { expected: len, found: m.profile.len() });
            }
        }
        Ok(())
    }
}

/// Exponents and regularization data of the evolution problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// Yosida parameter for the reaction term; 0 means the exact power.
    pub lambda: f64,
    /// Radius parameter of the `L^r` ball `{φ ≤ σ}`; `None` disables truncation.
    pub sigma: Option<f64>,
    pub forcing: Forcing,
}

impl ModelParams {
    pub fn new(s: f64, p: f64, q: f64, r: f64) -> Self {
        Self { s, p, q, r, lambda: 0.0, sigma: None, forcing: Forcing::Zero }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = forcing;
        self
    }

    /// Checks the type-level domain: `s ∈ (0,1)`, `2 ≤ p < q`, `r ≥ 2`, `λ ≥ 0`, `σ > 0`.
    pub fn check_domain(&self) -> Result<()> {
        let all = [self.s, self.p, self.q, self.r, self.lambda];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParamDomain("parameters must be finite".into()));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::ParamDomain(format!("s = {} not in (0, 1)", self.s)));
        }
        if self.p < 2.0 {
            return Err(Error::ParamDomain(format!("p = {} < 2", self.p)));
        }
        if self.q <= self.p {
            return Err(Error::ParamDomain(format!("q = {} must exceed p = {}", self.q, self.p)));
        }
        if self.r < 2.0 {
            return Err(Error::ParamDomain(format!("r = {} < 2", self.r)));
        }
        if self.lambda < 0.0 {
            return Err(Error::ParamDomain(format!("lambda = {} < 0", self.lambda)));
        }
        if let Some(sigma) = self.sigma {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::ParamDomain(format!("sigma = {sigma} must be positive")));
            }
        }
        Ok(())
    }
}

/// Critical Sobolev exponent `p* = Np/(N − sp)`, unbounded when `N ≤ sp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalExponent {
    Finite(f64),
    Unbounded,
}

impl CriticalExponent {
    pub fn of(dim: usize, s: f64, p: f64) -> Self {
        let n = dim as f64;
        if n > s * p {
            CriticalExponent::Finite(n * p / (n - s * p))
        } else {
            CriticalExponent::Unbounded
        }
    }

    pub fn admits(&self, q: f64) -> bool {
        match *self {
            CriticalExponent::Finite(ps) => q <= ps,
            CriticalExponent::Unbounded => q.is_finite(),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            CriticalExponent::Finite(v) => v,
            CriticalExponent::Unbounded => f64::INFINITY,
        }
    }
}

/// `r > N(q − p)/(sp)`.
pub fn growth_condition_by_r(dim: usize, s: f64, p: f64, q: f64, r: f64) -> bool {
    r > dim as f64 * (q - p) / (s * p)
}

/// `q < (N + sr)p/N`, the same condition solved for `q`.
pub fn growth_condition_by_q(dim: usize, s: f64, p: f64, q: f64, r: f64) -> bool {
    let n = dim as f64;
    q < (n + s * r) * p / n
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub growth_ok: bool,
    pub growth_lhs: f64,
    pub growth_rhs: f64,
    /// `(N + sr)p/N`, the bound on `q` in the second form.
    pub q_bound: f64,
    pub q_leq_pstar: bool,
    pub pstar: CriticalExponent,
    pub messages: Vec<String>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.growth_ok
    }
}

pub fn validate_params(params: &ModelParams, grid: &GridSpec) -> Result<AdmissibilityReport> {
    params.check_domain()?;
    let ModelParams { s, p, q, r, .. } = *params;
    let dim = grid.dim();
    let n = dim as f64;
    let growth_rhs = n * (q - p) / (s * p);
    let q_bound = (n + s * r) * p / n;
    let growth_ok = growth_condition_by_r(dim, s, p, q, r);
    let pstar = CriticalExponent::of(dim, s, p);
    let q_leq_pstar = pstar.admits(q);

    let mut messages = Vec::new();
    if !growth_ok {
        messages.push(format!(
            "r = {r} does not exceed N(q-p)/(sp) = {growth_rhs}; equivalently q = {q} >= {q_bound}"
        ));
    }
    if !q_leq_pstar {
        messages.push(format!("q = {q} exceeds the critical exponent p* = {}", pstar.value()));
    }
    if growth_ok != growth_condition_by_q(dim, s, p, q, r) {
        messages.push("the two forms of the admissibility condition disagree at roundoff".into());
    }
    Ok(AdmissibilityReport {
        growth_ok,
        growth_lhs: r,
        growth_rhs,
        q_bound,
        q_leq_pstar,
        pstar,
        messages,
    })
}

/// Evaluates the forcing on a grid at time `t`.
pub fn forcing_field(forcing: &Forcing, grid: &GridSpec, t: f64) -> Result<Field> {
    forcing.check_len(grid.len())?;
    let mut out = vec![0.0; grid.len()];
    forcing.accumulate(t, &mut out);
    Field::new(*grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line() -> GridSpec {
        GridSpec::line(0.0, 1.0, 16).unwrap()
    }

    #[test]
    fn growth_condition_examples() {
        let rep = validate_params(&ModelParams::new(0.5, 2.0, 3.0, 2.0), &line()).unwrap();
        assert!(rep.growth_ok);
        assert_eq!(rep.growth_lhs, 2.0);
        assert_eq!(rep.growth_rhs, 1.0);

        let rep = validate_params(&ModelParams::new(0.5, 2.0, 4.0, 2.0), &line()).unwrap();
        assert!(!rep.growth_ok);
        assert_eq!(rep.growth_rhs, 2.0);
        assert!(!rep.messages.is_empty());
    }

    #[test]
    fn domain_errors() {
        let g = line();
        for bad in [
            ModelParams::new(0.5, 2.0, 2.0, 2.0),
            ModelParams::new(0.0, 2.0, 3.0, 2.0),
            ModelParams::new(1.0, 2.0, 3.0, 2.0),
            ModelParams::new(0.5, 1.5, 3.0, 2.0),
            ModelParams::new(0.5, 2.0, 3.0, 1.0),
            ModelParams::new(0.5, 2.0, 3.0, 2.0).with_lambda(-1.0),
            ModelParams::new(0.5, 2.0, 3.0, 2.0).with_sigma(0.0),
        ] {
            assert!(matches!(validate_params(&bad, &g), Err(Error::ParamDomain(_))), "{bad:?}");
        }
    }

    #[test]
    fn critical_exponent() {
        assert_eq!(CriticalExponent::of(1, 0.5, 2.0), CriticalExponent::Unbounded);
        assert_eq!(CriticalExponent::of(1, 0.9, 3.0), CriticalExponent::Unbounded);
        assert_eq!(CriticalExponent::of(2, 0.5, 2.0), CriticalExponent::Finite(4.0));
        let sq = GridSpec::rect([0.0, 0.0], [1.0, 1.0], 8).unwrap();
        let rep = validate_params(&ModelParams::new(0.5, 2.0, 5.0, 20.0), &sq).unwrap();
        assert!(!rep.q_leq_pstar);
        let rep = validate_params(&ModelParams::new(0.5, 2.0, 50.0, 2.0), &line()).unwrap();
        assert!(rep.q_leq_pstar);
    }

    #[test]
    fn modes_forcing_accumulates() {
        let f = Forcing::Modes(vec![
            ForcingMode { rate: 0.0, profile: vec![1.0, 2.0] },
            ForcingMode { rate: -1.0, profile: vec![1.0, 0.0] },
        ]);
        let mut out = vec![0.0; 2];
        f.accumulate(1.0, &mut out);
        assert!((out[0] - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(out[1], 2.0);
        assert!(f.check_len(3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn growth_condition_forms_agree(
            dim in 1usize..=2,
            s in 0.01f64..0.99,
            p in 2.0f64..8.0,
            dq in 0.01f64..10.0,
            r in 2.0f64..40.0,
        ) {
            let q = p + dq;
            let a = growth_condition_by_r(dim, s, p, q, r);
            let b = growth_condition_by_q(dim, s, p, q, r);
            // Away from the boundary the two forms must coincide.
            let n = dim as f64;
            let gap = (r - n * (q - p) / (s * p)).abs();
            if gap > 1e-9 * r {
                prop_assert_eq!(a, b);
            }
        }
    }
}
