//! Potential-well thresholds, the blow-up time bound and blow-up certificates.
//!
//! With `C*` the best constant of `‖u‖_q ≤ C* |||u|||`, the energy is bounded
//! below along the seminorm by the well `h(x) = x^p/p − (C*^q/q) x^q`, whose
//! peak sits at `α = C*^{−q/(q−p)}` with height `E₀ = (1/p − 1/q) C*^{−qp/(q−p)}`.
//! Data starting above the peak with energy below it blow up in finite time.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{lp_norm, Field};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub alpha_crit: f64,
    pub e0: f64,
}

pub fn blowup_thresholds(p: f64, q: f64, c_star: f64) -> Result<Thresholds> {
    if !(q > p) {
        return Err(Error::ParamDomain(format!("need q > p, got p = {p}, q = {q}")));
    }
    if !(c_star > 0.0 && c_star.is_finite()) {
        return Err(Error::ParamDomain(format!("Sobolev constant {c_star} must be positive")));
    }
    let alpha_crit = c_star.powf(-q / (q - p));
    let e0 = (1.0 / p - 1.0 / q) * c_star.powf(-q * p / (q - p));
    Ok(Thresholds { alpha_crit, e0 })
}

/// `h(x) = x^p/p − (C*^q/q) x^q`.
pub fn well(x: f64, p: f64, q: f64, c_star: f64) -> f64 {
    x.powf(p) / p - c_star.powf(q) / q * x.powf(q)
}

/// Root `β > α` of `h(β) = E(0)`; requires `E(0) < E₀`.
///
/// `h` is strictly decreasing on `(α, ∞)` with `h → −∞`, so the root is unique.
pub fn solve_beta(energy0: f64, params: &ModelParams, c_star: f64) -> Result<f64> {
    let (p, q) = (params.p, params.q);
    let th = blowup_thresholds(p, q, c_star)?;
    if !energy0.is_finite() {
        return Err(Error::Hypothesis(format!("E(0) = {energy0} is not finite")));
    }
    if energy0 >= th.e0 {
        return Err(Error::Hypothesis(format!("E(0) = {energy0} is not below E0 = {}", th.e0)));
    }
    let f = |x: f64| well(x, p, q, c_star) - energy0;
    let lo = th.alpha_crit;
    let mut hi = 2.0 * lo;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Hypothesis("could not bracket the well root".into()));
        }
    }
    let mut lo = lo;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper bound on the blow-up time:
/// `(1/2)^{q−1} ‖u₀‖₂^{q−2} |Ω|^{q/2−1} / ((q/2 − 1)(1 − α^q/β^q)(q − p))`.
pub fn blowup_time_bound_from_norm(norm2: f64, measure: f64, p: f64, q: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(q > 2.0) {
        return Err(Error::ParamDomain(format!("bound needs q > 2, got q = {q}")));
    }
    if !(q > p) {
        return Err(Error::ParamDomain(format!("bound needs q > p, got p = {p}, q = {q}")));
    }
    if !(beta > alpha && alpha > 0.0) {
        return Err(Error::Hypothesis(format!("need beta > alpha > 0, got alpha = {alpha}, beta = {beta}")));
    }
    let num = 0.5f64.powf(q - 1.0) * norm2.powf(q - 2.0) * measure.powf(q / 2.0 - 1.0);
    let den = (q / 2.0 - 1.0) * (1.0 - (alpha / beta).powf(q)) * (q - p);
    Ok(num / den)
}

pub fn blowup_time_bound(u0: &Field, params: &ModelParams, alpha: f64, beta: f64) -> Result<f64> {
    let norm2 = lp_norm(u0, 2.0)?;
    blowup_time_bound_from_norm(norm2, u0.grid().measure(), params.p, params.q, alpha, beta)
}

/// `d = (1 − α^q/β^q)(q − p)`, the growth rate constant of `½‖u‖²`.
pub fn growth_constant(p: f64, q: f64, alpha: f64, beta: f64) -> f64 {
    (1.0 - (alpha / beta).powf(q)) * (q - p)
}

/// `L_{q,Ω} = (1/2)^{q/2} |Ω|^{q/2 − 1}`.
pub fn holder_constant(q: f64, measure: f64) -> f64 {
    0.5f64.powf(q / 2.0) * measure.powf(q / 2.0 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    BoundViolated,
    HypothesesUnmet,
    NoBlowupObserved,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::BoundViolated => "bound-violated",
            Verdict::HypothesesUnmet => "hypotheses-unmet",
            Verdict::NoBlowupObserved => "no-blowup-observed",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds, initial-state data and (once a run is done) the observed outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupCertificate {
    pub c_star: f64,
    pub alpha_crit: f64,
    pub e0: f64,
    /// `E(u₀)`.
    pub energy0: f64,
    /// `|||u₀|||`, the seminorm itself (not its p-th power).
    pub seminorm0: f64,
    pub beta: Option<f64>,
    pub t_star_bound: Option<f64>,
    pub observed_blowup_time: Option<f64>,
    pub hypotheses_met: bool,
    /// Names of failed hypotheses.
    pub failures: Vec<String>,
    pub verdict: Verdict,
}

impl BlowupCertificate {
    /// Evaluates the hypotheses `E(0) < E₀`, `|||u₀||| > α` and, when they hold,
    /// `β` and the time bound. The verdict is provisional until [`Self::conclude`].
    pub fn assess(u0: &Field, params: &ModelParams, energy0: f64, seminorm_p0: f64, c_star: f64) -> Result<Self> {
        let th = blowup_thresholds(params.p, params.q, c_star)?;
        let seminorm0 = seminorm_p0.max(0.0).powf(1.0 / params.p);
        let mut failures = Vec::new();
        if !params.forcing.is_zero() {
            failures.push("forcing must vanish".to_string());
        }
        if !(energy0 < th.e0) {
            failures.push(format!("E(0) = {energy0:.6e} is not below E0 = {:.6e}", th.e0));
        }
        if !(seminorm0 > th.alpha_crit) {
            failures.push(format!("|||u0||| = {seminorm0:.6e} does not exceed alpha = {:.6e}", th.alpha_crit));
        }
        if !(params.q > 2.0) {
            failures.push(format!("bound needs q > 2, got {}", params.q));
        }
        let hypotheses_met = failures.is_empty();
        let (beta, t_star_bound) = if hypotheses_met {
            let beta = solve_beta(energy0, params, c_star)?;
            (Some(beta), Some(blowup_time_bound(u0, params, th.alpha_crit, beta)?))
        } else {
            (None, None)
        };
        Ok(Self {
            c_star,
            alpha_crit: th.alpha_crit,
            e0: th.e0,
            energy0,
            seminorm0,
            beta,
            t_star_bound,
            observed_blowup_time: None,
            hypotheses_met,
            failures,
            verdict: if hypotheses_met { Verdict::NoBlowupObserved } else { Verdict::HypothesesUnmet },
        })
    }

    /// Records the observed blow-up time (if any) and fixes the verdict.
    pub fn conclude(&mut self, observed: Option<f64>) {
        self.observed_blowup_time = observed;
        self.verdict = if !self.hypotheses_met {
            Verdict::HypothesesUnmet
        } else {
            match (observed, self.t_star_bound) {
                (None, _) => Verdict::NoBlowupObserved,
                (Some(t), Some(bound)) if t <= bound => Verdict::Certified,
                _ => Verdict::BoundViolated,
            }
        };
    }
}
