//! End-to-end blow-up certification: estimate `C*`, check the well
//! hypotheses on the initial data (optionally growing its amplitude until
//! they hold), simulate, and compare the observed blow-up time with the bound.

use crate::blowup::{BlowupCertificate, Verdict};
use crate::error::{Error, Result};
use crate::functionals::total_energy;
use crate::grid::{Field, GridSpec};
use crate::integrator::{run_with_context, SimConfig, SimOutcome, SimStatus, TimeOptions};
use crate::operator::{seminorm_p, OperatorContext};
use crate::params::{validate_params, ModelParams};
use crate::sobolev::{estimate_sobolev_constant, SobolevEstimate, SobolevOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct AutoScale {
    pub factor: f64,
    pub max_rounds: usize,
}

impl Default for AutoScale {
    fn default() -> Self {
        Self { factor: 1.25, max_rounds: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub sobolev: SobolevOptions,
    pub time: TimeOptions,
    pub norm_cap_factor: f64,
    pub autoscale: Option<AutoScale>,
}

#[derive(Debug, Clone)]
pub struct CertifyOutcome {
    pub certificate: BlowupCertificate,
    pub estimate: SobolevEstimate,
    /// Factor applied to the supplied initial data.
    pub scale: f64,
    pub initial: Field,
    /// `None` when the hypotheses failed and no run was made.
    pub simulation: Option<SimOutcome>,
}

fn assess(u0: &Field, params: &ModelParams, ctx: &OperatorContext, c_star: f64) -> Result<BlowupCertificate> {
    let energy = total_energy(u0, params, ctx)?;
    let semi = seminorm_p(u0, ctx)?;
    BlowupCertificate::assess(u0, params, energy, semi, c_star)
}

pub fn certify_blowup(grid: &GridSpec, params: &ModelParams, initial: &Field, opts: &CertifyOptions) -> Result<CertifyOutcome> {
    let report = validate_params(params, grid)?;
    if !(params.q > params.p) {
        return Err(Error::Hypothesis(format!("blow-up needs q > p, got p = {}, q = {}", params.p, params.q)));
    }
    if initial.grid() != grid {
        return Err(Error::GridMismatch);
    }
    debug_assert!(report.is_admissible());
    let estimate = estimate_sobolev_constant(grid, params, &opts.sobolev)?;
    let ctx = OperatorContext::new(grid, params)?;

    let mut scale = 1.0;
    let mut u0 = initial.clone();
    let mut cert = assess(&u0, params, &ctx, estimate.value)?;
    if let Some(auto) = &opts.autoscale {
        if !(auto.factor > 1.0) {
            return Err(Error::Config(format!("autoscale factor {} must exceed 1", auto.factor)));
        }
        let mut rounds = 0;
        while !cert.hypotheses_met && !initial.is_zero() && params.forcing.is_zero() && rounds < auto.max_rounds {
            scale *= auto.factor;
            u0 = initial.scaled(scale);
            cert = assess(&u0, params, &ctx, estimate.value)?;
            rounds += 1;
        }
    }
    if !cert.hypotheses_met {
        return Ok(CertifyOutcome { certificate: cert, estimate, scale, initial: u0, simulation: None });
    }

    let mut config = SimConfig::new(params.clone(), u0.clone(), opts.time.clone());
    config.norm_cap_factor = opts.norm_cap_factor;
    let sim = run_with_context(&config, &ctx)?;
    let observed = match sim.status {
        SimStatus::BlowupDetected => sim.blowup_time_estimate.map(|iv| iv.end),
        SimStatus::Completed | SimStatus::StepUnderflow => None,
    };
    cert.conclude(observed);
    debug_assert!(cert.verdict != Verdict::HypothesesUnmet);
    Ok(CertifyOutcome { certificate: cert, estimate, scale, initial: u0, simulation: Some(sim) })
}
