//! Explicit adaptive Heun integration of the semi-discrete evolution
//! `u' = −Au + R(u) + f(t)` with blow-up detection.
//!
//! The stepping machinery is written against the [`System`] trait so the
//! controller and the blow-up logic can be exercised on scalar ODEs.

use crate::convex::{project_lr_ball, yosida_apply, ProxSpec};
use crate::error::{Error, Result};
use crate::functionals::EnergyRecord;
use crate::grid::{lp_norm_slice, Field, GridSpec};
use crate::operator::{signed_power, OperatorContext};
use crate::params::{validate_params, ModelParams};

/// A semi-discrete system `u' = F(t, u)` on a weighted Euclidean space.
pub trait System: Sync {
    /// Quadrature weight of the `L²` inner product (`h^N` for grid fields).
    fn weight(&self) -> f64;

    fn rhs(&self, t: f64, u: &[f64]) -> Vec<f64>;

    /// Whether the growth term dominates the damping term at `u`.
    fn reaction_dominated(&self, _u: &[f64]) -> bool {
        true
    }

    /// Exponent `q` of a `|u|^{q−2}u` growth term, used to estimate the
    /// remaining time to blow-up.
    fn growth_exponent(&self) -> Option<f64> {
        None
    }

    /// Hook applied to every accepted state.
    fn post_step(&self, _u: &mut [f64]) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeOptions {
    pub t_end: f64,
    /// Relative per-step error target.
    pub tol: f64,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Take constant steps of this size and skip error control.
    pub fixed_dt: Option<f64>,
}

impl TimeOptions {
    pub fn adaptive(t_end: f64) -> Self {
        Self { t_end, tol: 1e-6, dt0: 1e-4 * t_end, dt_min: 1e-14 * t_end, dt_max: 0.1 * t_end, fixed_dt: None }
    }

    pub fn fixed(t_end: f64, dt: f64) -> Self {
        Self { fixed_dt: Some(dt), dt0: dt, ..Self::adaptive(t_end) }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t_end > 0.0
            && self.t_end.is_finite()
            && self.tol > 0.0
            && self.dt_min > 0.0
            && self.dt0 >= self.dt_min
            && self.dt_max >= self.dt0
            && self.fixed_dt.is_none_or(|d| d > 0.0 && d.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("inconsistent time options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupPolicy {
    /// Absolute `L²` threshold above which the run is declared blown up.
    pub norm_cap: f64,
}

impl BlowupPolicy {
    pub const DEFAULT_FACTOR: f64 = 1e8;

    /// `factor · ‖u₀‖₂`, or `factor` itself for zero data.
    pub fn relative(norm0: f64, factor: f64) -> Self {
        Self { norm_cap: if norm0 > 0.0 { factor * norm0 } else { factor } }
    }
}

/// `sqrt(Σ v_i² w)`.
fn l2(values: &[f64], weight: f64) -> f64 {
    lp_norm_slice(values, weight, 2.0).expect("exponent 2 is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepError {
    NonFinite,
}

/// One Heun step with the embedded Euler solution as error reference.
/// Returns the Heun candidate and `‖heun − euler‖₂ / max(1, ‖u‖₂)`.
pub fn step_heun<S: System + ?Sized>(sys: &S, t: f64, u: &[f64], dt: f64) -> std::result::Result<(Vec<f64>, f64), StepError> {
    let k1 = sys.rhs(t, u);
    let euler: Vec<f64> = u.iter().zip(&k1).map(|(a, k)| a + dt * k).collect();
    if euler.iter().any(|v| !v.is_finite()) {
        return Err(StepError::NonFinite);
    }
    let k2 = sys.rhs(t + dt, &euler);
    let heun: Vec<f64> = u.iter().zip(k1.iter().zip(&k2)).map(|(a, (x, y))| a + 0.5 * dt * (x + y)).collect();
    if heun.iter().any(|v| !v.is_finite()) {
        return Err(StepError::NonFinite);
    }
    let w = sys.weight();
    let diff: Vec<f64> = heun.iter().zip(&euler).map(|(a, b)| a - b).collect();
    let err = l2(&diff, w) / l2(u, w).max(1.0);
    if !err.is_finite() {
        return Err(StepError::NonFinite);
    }
    Ok((heun, err))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Underflow;

/// Proportional controller `dt · clip(0.9 (tol/err)^{1/2}, 0.2, 5)`, capped at `dt_max`.
pub fn adapt_dt(dt: f64, err: f64, opts: &TimeOptions) -> std::result::Result<f64, Underflow> {
    let factor = if err <= 0.0 { 5.0 } else { (0.9 * (opts.tol / err).sqrt()).clamp(0.2, 5.0) };
    let next = (dt * factor).min(opts.dt_max);
    if next < opts.dt_min {
        Err(Underflow)
    } else {
        Ok(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimStatus {
    Completed,
    BlowupDetected,
    StepUnderflow,
}

/// `[t_last_accepted, t_last_accepted + window]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupInterval {
    pub start: f64,
    pub end: f64,
}

/// Information about each accepted step, handed to observers.
pub struct Accepted<'a> {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub previous: &'a [f64],
    pub u: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawOutcome {
    pub status: SimStatus,
    pub t: f64,
    pub u: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub rejected: usize,
    pub blowup: Option<BlowupInterval>,
}

/// `‖u‖₂ > norm_cap`.
pub fn detect_blowup_values(u: &[f64], weight: f64, policy: &BlowupPolicy) -> bool {
    l2(u, weight) > policy.norm_cap
}

/// Length of the blow-up window after the last accepted state: the larger of
/// the last step and the remaining-time estimate `2G/((q − 2)G')` for
/// `G = ½‖u‖²`, which is exact for `G' ∝ G^{q/2}`.
fn blowup_window<S: System + ?Sized>(sys: &S, t: f64, u: &[f64], last_dt: f64) -> f64 {
    let Some(q) = sys.growth_exponent().filter(|&q| q > 2.0) else {
        return last_dt;
    };
    let w = sys.weight();
    let f = sys.rhs(t, u);
    let g = 0.5 * u.iter().map(|v| v * v).sum::<f64>() * w;
    let dg = u.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() * w;
    if dg > 0.0 && dg.is_finite() {
        last_dt.max(2.0 * g / ((q - 2.0) * dg))
    } else {
        last_dt
    }
}

/// Integrates from `(t0, u0)` until `t_end`, blow-up, or step underflow.
pub fn integrate<S, F>(sys: &S, u0: Vec<f64>, t0: f64, opts: &TimeOptions, policy: &BlowupPolicy, mut observer: F) -> Result<RawOutcome>
where
    S: System + ?Sized,
    F: FnMut(&Accepted<'_>) -> Result<()>,
{
    opts.validate()?;
    if let Some(k) = u0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(k));
    }
    let w = sys.weight();
    let mut t = t0;
    let mut u = u0;
    let mut dt = opts.fixed_dt.unwrap_or(opts.dt0);
    let mut last_dt = dt;
    let mut steps = 0;
    let mut rejected = 0;
    let t_eps = 1e-12 * opts.t_end.abs().max(1.0);

    let underflow = |t: f64, u: Vec<f64>, last_dt: f64, steps: usize, rejected: usize| -> RawOutcome {
        if sys.reaction_dominated(&u) {
            let window = blowup_window(sys, t, &u, last_dt);
            RawOutcome {
                status: SimStatus::BlowupDetected,
                t,
                dt: last_dt,
                blowup: Some(BlowupInterval { start: t, end: t + window }),
                u,
                steps,
                rejected,
            }
        } else {
            RawOutcome { status: SimStatus::StepUnderflow, t, u, dt: last_dt, steps, rejected, blowup: None }
        }
    };

    loop {
        if t >= opts.t_end - t_eps {
            return Ok(RawOutcome { status: SimStatus::Completed, t, u, dt: last_dt, steps, rejected, blowup: None });
        }
        let remaining = opts.t_end - t;
        let trial_dt = dt.min(remaining);
        let (mut candidate, err) = match step_heun(sys, t, &u, trial_dt) {
            Ok(ok) => ok,
            Err(StepError::NonFinite) => {
                rejected += 1;
                dt = 0.5 * trial_dt;
                if dt < opts.dt_min {
                    return Ok(underflow(t, u, last_dt, steps, rejected));
                }
                continue;
            }
        };
        let accept = opts.fixed_dt.is_some() || err <= opts.tol;
        if !accept {
            rejected += 1;
            match adapt_dt(trial_dt, err, opts) {
                Ok(next) => dt = next,
                Err(Underflow) => return Ok(underflow(t, u, last_dt, steps, rejected)),
            }
            continue;
        }
        sys.post_step(&mut candidate);
        steps += 1;
        t += trial_dt;
        last_dt = trial_dt;
        observer(&Accepted { step: steps, t, dt: trial_dt, previous: &u, u: &candidate })?;
        u = candidate;
        if detect_blowup_values(&u, w, policy) {
            let window = blowup_window(sys, t, &u, last_dt);
            return Ok(RawOutcome {
                status: SimStatus::BlowupDetected,
                t,
                u,
                dt: last_dt,
                steps,
                rejected,
                blowup: Some(BlowupInterval { start: t, end: t + window }),
            });
        }
        if opts.fixed_dt.is_none() {
            // Never shrink after an accepted step below what the controller allows.
            dt = match adapt_dt(trial_dt, err, opts) {
                Ok(next) => next.max(if trial_dt < dt { dt } else { 0.0 }),
                Err(Underflow) => return Ok(underflow(t, u, last_dt, steps, rejected)),
            };
        }
    }
}

/// The nonlocal reaction-diffusion system on a grid.
pub struct NonlocalModel<'a> {
    pub ctx: &'a OperatorContext,
    pub params: &'a ModelParams,
    prox: Option<ProxSpec>,
}

impl<'a> NonlocalModel<'a> {
    pub fn new(ctx: &'a OperatorContext, params: &'a ModelParams) -> Result<Self> {
        params.forcing.check_len(ctx.grid().len())?;
        let prox = if params.lambda > 0.0 { Some(ProxSpec::new(params.q, params.lambda)?) } else { None };
        Ok(Self { ctx, params, prox })
    }

    pub fn reaction(&self, u: &[f64]) -> Vec<f64> {
        match &self.prox {
            None => u.iter().map(|&v| signed_power(v, self.params.q)).collect(),
            Some(spec) => {
                let field = Field::new(*self.ctx.grid(), u.to_vec()).expect("finite state");
                yosida_apply(&field, spec).into_values()
            }
        }
    }
}

impl System for NonlocalModel<'_> {
    fn weight(&self) -> f64 {
        self.ctx.grid().cell_volume()
    }

    fn rhs(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let au = self.ctx.apply_values(u);
        let react = self.reaction(u);
        let mut out: Vec<f64> = react.iter().zip(&au).map(|(r, a)| r - a).collect();
        self.params.forcing.accumulate(t, &mut out);
        out
    }

    fn reaction_dominated(&self, u: &[f64]) -> bool {
        if u.iter().any(|v| !v.is_finite()) {
            return true;
        }
        let w = self.weight();
        l2(&self.reaction(u), w) >= l2(&self.ctx.apply_values(u), w)
    }

    fn growth_exponent(&self) -> Option<f64> {
        Some(self.params.q)
    }

    fn post_step(&self, u: &mut [f64]) {
        if let Some(sigma) = self.params.sigma {
            let field = Field::new(*self.ctx.grid(), u.to_vec()).expect("finite state");
            let projected = project_lr_ball(&field, sigma, self.params.r).expect("sigma validated");
            u.copy_from_slice(projected.values());
        }
    }
}

/// `rhs(u, t)` for the grid model as a [`Field`].
pub fn rhs(u: &Field, t: f64, params: &ModelParams, ctx: &OperatorContext) -> Result<Field> {
    if u.grid() != ctx.grid() {
        return Err(Error::GridMismatch);
    }
    let model = NonlocalModel::new(ctx, params)?;
    Field::new(*u.grid(), model.rhs(t, u.values()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub dt: f64,
    pub step_count: usize,
    pub records: Vec<EnergyRecord>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub status: SimStatus,
    pub final_state: SimState,
    pub blowup_time_estimate: Option<BlowupInterval>,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub initial: Field,
    pub time: TimeOptions,
    /// `‖u‖₂` cap as a multiple of `‖u₀‖₂`.
    pub norm_cap_factor: f64,
    /// Keep every `k`-th accepted state (and the initial one).
    pub snapshot_stride: Option<usize>,
}

impl SimConfig {
    pub fn new(params: ModelParams, initial: Field, time: TimeOptions) -> Self {
        Self {
            grid: *initial.grid(),
            params,
            initial,
            time,
            norm_cap_factor: BlowupPolicy::DEFAULT_FACTOR,
            snapshot_stride: None,
        }
    }
}

/// Runs the grid model, recording an [`EnergyRecord`] per accepted step.
pub fn run(config: &SimConfig) -> Result<SimOutcome> {
    validate_params(&config.params, &config.grid)?;
    if config.initial.grid() != &config.grid {
        return Err(Error::GridMismatch);
    }
    let ctx = OperatorContext::new(&config.grid, &config.params)?;
    run_with_context(config, &ctx)
}

/// As [`run`], reusing a precomputed operator context.
pub fn run_with_context(config: &SimConfig, ctx: &OperatorContext) -> Result<SimOutcome> {
    if ctx.grid() != &config.grid || ctx.p() != config.params.p || ctx.s() != config.params.s {
        return Err(Error::GridMismatch);
    }
    let params = &config.params;
    let model = NonlocalModel::new(ctx, params)?;
    let grid = config.grid;
    let w = grid.cell_volume();
    let u0 = config.initial.values().to_vec();
    let policy = BlowupPolicy::relative(l2(&u0, w), config.norm_cap_factor);

    let mut records = vec![EnergyRecord::measure(0.0, 0.0, &config.initial, params, ctx)?];
    let mut snapshots = Vec::new();
    if config.snapshot_stride.is_some() {
        snapshots.push(Snapshot { step: 0, t: 0.0, field: config.initial.clone() });
    }
    let raw = integrate(&model, u0, 0.0, &config.time, &policy, |acc| {
        let field = Field::new(grid, acc.u.to_vec())?;
        let mut rec = EnergyRecord::measure(acc.t, acc.dt, &field, params, ctx)?;
        let prev = records.last().expect("initial record");
        rec.dissipation_lhs = -(rec.energy - prev.energy) / acc.dt;
        let rate: Vec<f64> = acc.u.iter().zip(acc.previous).map(|(a, b)| (a - b) / acc.dt).collect();
        let r2 = l2(&rate, w);
        rec.dissipation_rhs = r2 * r2;
        records.push(rec);
        if let Some(stride) = config.snapshot_stride {
            if stride > 0 && acc.step % stride == 0 {
                snapshots.push(Snapshot { step: acc.step, t: acc.t, field });
            }
        }
        Ok(())
    })?;

    let u = Field::new(grid, raw.u)?;
    Ok(SimOutcome {
        status: raw.status,
        final_state: SimState { t: raw.t, u, dt: raw.dt, step_count: raw.steps, records, snapshots },
        blowup_time_estimate: raw.blowup,
        rejected_steps: raw.rejected,
    })
}

/// Blow-up test on a simulation state.
pub fn detect_blowup(state: &SimState, policy: &BlowupPolicy) -> bool {
    detect_blowup_values(state.u.values(), state.u.grid().cell_volume(), policy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    /// False when the run had forcing, so monotonicity is not expected.
    pub applicable: bool,
    pub steps: usize,
    /// Largest defect `|E_{k+1} − E_k + Δt_k ‖Δu/Δt‖²|` of the discrete
    /// dissipation identity.
    pub max_violation: f64,
    /// Largest energy increase `E_{k+1} − E_k` (0 when E never increases).
    pub max_increase: f64,
    /// Steps whose increase exceeds `c Δt_k (1 + ‖Δu/Δt‖²)`.
    pub failures: usize,
    /// Largest relative mismatch between `−ΔE/Δt` and `‖Δu/Δt‖²`.
    pub max_relative_mismatch: f64,
}

impl DissipationReport {
    pub fn passed(&self) -> bool {
        !self.applicable || self.failures == 0
    }
}

pub fn check_dissipation(records: &[EnergyRecord], forcing_free: bool, c: f64) -> DissipationReport {
    let mut rep = DissipationReport {
        applicable: forcing_free,
        steps: records.len().saturating_sub(1),
        max_violation: 0.0,
        max_increase: 0.0,
        failures: 0,
        max_relative_mismatch: 0.0,
    };
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let de = b.energy - a.energy;
        let defect = de + b.dt * b.dissipation_rhs;
        rep.max_violation = rep.max_violation.max(defect.abs());
        rep.max_increase = rep.max_increase.max(de);
        if de > c * b.dt * (1.0 + b.dissipation_rhs) || defect > c * b.dt * (1.0 + b.dissipation_rhs) {
            rep.failures += 1;
        }
        let scale = b.dissipation_lhs.abs().max(b.dissipation_rhs.abs());
        if scale > 0.0 {
            rep.max_relative_mismatch =
                rep.max_relative_mismatch.max((b.dissipation_lhs - b.dissipation_rhs).abs() / scale);
        }
    }
    rep
}

/// Discrete `L²(time × space)` norm of `∂ₜu + Au − R(u) − f` over a window of
/// consecutive snapshots, using the second-order three-point derivative on a
/// possibly non-uniform time grid at every interior snapshot.
pub fn strong_form_residual(window: &[Snapshot], params: &ModelParams, ctx: &OperatorContext) -> Result<f64> {
    if window.len() < 3 {
        return Err(Error::Config(format!("residual needs at least 3 snapshots, got {}", window.len())));
    }
    let model = NonlocalModel::new(ctx, params)?;
    let w = ctx.grid().cell_volume();
    let mut total = 0.0;
    let mut span = 0.0;
    for k in 1..window.len() - 1 {
        let (a, b, c) = (&window[k - 1], &window[k], &window[k + 1]);
        let h0 = b.t - a.t;
        let h1 = c.t - b.t;
        if !(h0 > 0.0 && h1 > 0.0) {
            return Err(Error::Config("snapshot times must increase".into()));
        }
        let f = model.rhs(b.t, b.field.values());
        let res: Vec<f64> = (0..f.len())
            .map(|i| {
                let (ua, ub, uc) = (a.field.values()[i], b.field.values()[i], c.field.values()[i]);
                let du = -h1 / (h0 * (h0 + h1)) * ua + (h1 - h0) / (h0 * h1) * ub + h0 / (h1 * (h0 + h1)) * uc;
                du - f[i]
            })
            .collect();
        let weight = 0.5 * (h0 + h1);
        let n = l2(&res, w);
        total += n * n * weight;
        span += weight;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite(0));
    }
    Ok((total / span).sqrt())
}

/// Forcing for which `u(t) = e^{−t} b` solves the grid model exactly:
/// `f = −e^{−t} b + e^{−(p−1)t} A(b) − e^{−(q−1)t} |b|^{q−2} b`.
/// Only the unregularized reaction (`λ = 0`) is supported.
pub fn manufactured_forcing(profile: &Field, params: &ModelParams, ctx: &OperatorContext) -> Result<crate::params::Forcing> {
    use crate::params::{Forcing, ForcingMode};
    if profile.grid() != ctx.grid() {
        return Err(Error::GridMismatch);
    }
    if params.lambda != 0.0 || params.sigma.is_some() {
        return Err(Error::Config("manufactured forcing needs lambda = 0 and no sigma".into()));
    }
    let b = profile.values();
    Ok(Forcing::Modes(vec![
        ForcingMode { rate: -1.0, profile: b.iter().map(|v| -v).collect() },
        ForcingMode { rate: -(params.p - 1.0), profile: ctx.apply_values(b) },
        ForcingMode { rate: -(params.q - 1.0), profile: b.iter().map(|&v| -signed_power(v, params.q)).collect() },
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_initial_data, InitialKind};

    struct Scalar<F: Fn(f64, f64) -> f64 + Sync> {
        f: F,
        q: Option<f64>,
    }

    impl<F: Fn(f64, f64) -> f64 + Sync> System for Scalar<F> {
        fn weight(&self) -> f64 {
            1.0
        }
        fn rhs(&self, t: f64, u: &[f64]) -> Vec<f64> {
            u.iter().map(|&v| (self.f)(t, v)).collect()
        }
        fn growth_exponent(&self) -> Option<f64> {
            self.q
        }
    }

    fn no_cap() -> BlowupPolicy {
        BlowupPolicy { norm_cap: f64::INFINITY }
    }

    #[test]
    fn zero_rhs_leaves_state() {
        let sys = Scalar { f: |_, _| 0.0, q: None };
        let (next, err) = step_heun(&sys, 0.0, &[1.5, -2.0], 0.1).unwrap();
        assert_eq!(next, vec![1.5, -2.0]);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn controller_formula() {
        let opts = TimeOptions::adaptive(1.0);
        let dt = 1e-3;
        assert!((adapt_dt(dt, opts.tol, &opts).unwrap() - 0.9 * dt).abs() < 1e-18);
        assert_eq!(adapt_dt(dt, 0.0, &opts).unwrap(), 5.0 * dt);
        assert!((adapt_dt(dt, 100.0 * opts.tol, &opts).unwrap() - 0.2 * dt).abs() < 1e-18);
        assert_eq!(adapt_dt(0.09, 0.0, &opts).unwrap(), opts.dt_max);
        assert_eq!(adapt_dt(2e-14, 1.0, &opts), Err(Underflow));
    }

    #[test]
    fn heun_is_second_order_on_linear_decay() {
        let sys = Scalar { f: |_, v| -v, q: None };
        let mut errs = Vec::new();
        for &dt in &[0.1, 0.05, 0.025] {
            let out = integrate(&sys, vec![1.0], 0.0, &TimeOptions::fixed(1.0, dt), &no_cap(), |_| Ok(())).unwrap();
            assert_eq!(out.status, SimStatus::Completed);
            errs.push((out.u[0] - (-1.0f64).exp()).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9 && order < 2.1, "order {order}");
        }
    }

    #[test]
    fn error_estimate_scales_like_dt_squared() {
        let sys = Scalar { f: |_, v| -v * v * v + v.sin(), q: None };
        let (_, e1) = step_heun(&sys, 0.0, &[0.8], 0.02).unwrap();
        let (_, e2) = step_heun(&sys, 0.0, &[0.8], 0.01).unwrap();
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn scalar_cubic_blowup_time() {
        let sys = Scalar { f: |_, v| v * v * v, q: Some(4.0) };
        let policy = BlowupPolicy::relative(1.0, 1e8);
        let out = integrate(&sys, vec![1.0], 0.0, &TimeOptions::adaptive(2.0), &policy, |_| Ok(())).unwrap();
        assert_eq!(out.status, SimStatus::BlowupDetected);
        let iv = out.blowup.unwrap();
        assert!((iv.end - 0.5).abs() <= 0.05, "{iv:?}");
        assert!(iv.start <= iv.end);

        let raised = BlowupPolicy::relative(1.0, 1e9);
        let out2 = integrate(&sys, vec![1.0], 0.0, &TimeOptions::adaptive(2.0), &raised, |_| Ok(())).unwrap();
        let iv2 = out2.blowup.unwrap();
        assert!((iv2.end - iv.end).abs() < iv.end - iv.start, "{iv:?} vs {iv2:?}");
    }

    #[test]
    fn bounded_scalar_run_never_trips_detection() {
        let sys = Scalar { f: |_, v| -v, q: Some(4.0) };
        let policy = BlowupPolicy::relative(1.0, 1e8);
        let mut max_norm: f64 = 0.0;
        let out = integrate(&sys, vec![1.0], 0.0, &TimeOptions::adaptive(5.0), &policy, |a| {
            max_norm = max_norm.max(a.u[0].abs());
            Ok(())
        })
        .unwrap();
        assert_eq!(out.status, SimStatus::Completed);
        assert!(out.blowup.is_none());
        assert!(max_norm <= 1.0);
    }

    #[test]
    fn underflow_without_growth_is_reported() {
        struct Stiff;
        impl System for Stiff {
            fn weight(&self) -> f64 {
                1.0
            }
            fn rhs(&self, _t: f64, u: &[f64]) -> Vec<f64> {
                u.iter().map(|v| if v.abs() > 0.0 { f64::NAN } else { 0.0 }).collect()
            }
            fn reaction_dominated(&self, _u: &[f64]) -> bool {
                false
            }
        }
        let out = integrate(&Stiff, vec![1.0], 0.0, &TimeOptions::adaptive(1.0), &no_cap(), |_| Ok(())).unwrap();
        assert_eq!(out.status, SimStatus::StepUnderflow);
        assert!(out.blowup.is_none());
    }

    fn grid_setup(n: usize) -> (GridSpec, ModelParams, OperatorContext) {
        let g = GridSpec::line(0.0, 1.0, n).unwrap();
        let p = ModelParams::new(0.5, 2.0, 4.0, 3.0);
        let ctx = OperatorContext::new(&g, &p).unwrap();
        (g, p, ctx)
    }

    #[test]
    fn zero_data_stays_zero() {
        let (g, p, _) = grid_setup(16);
        let cfg = SimConfig::new(p, Field::zeros(g), TimeOptions::adaptive(1.0));
        let out = run(&cfg).unwrap();
        assert_eq!(out.status, SimStatus::Completed);
        assert!(out.final_state.u.is_zero());
        assert!(out.final_state.records.iter().all(|r| r.energy == 0.0));
    }

    #[test]
    fn rhs_of_zero_and_yosida_limit() {
        let (g, p, ctx) = grid_setup(32);
        assert!(rhs(&Field::zeros(g), 0.0, &p, &ctx).unwrap().is_zero());
        let bump = make_initial_data(&InitialKind::Bump { amplitude: 2.0 }, &g).unwrap();
        let exact = rhs(&bump, 0.0, &p, &ctx).unwrap();
        let reg = rhs(&bump, 0.0, &p.clone().with_lambda(1e-8), &ctx).unwrap();
        let diff = exact.combine(1.0, &reg, -1.0).unwrap();
        assert!(crate::grid::lp_norm(&diff, f64::INFINITY).unwrap() <= 1e-4);
    }

    #[test]
    fn sign_symmetry() {
        let (g, p, _) = grid_setup(24);
        let u0 = make_initial_data(&InitialKind::Random { amplitude: 1.0, seed: 3 }, &g).unwrap();
        let a = run(&SimConfig::new(p.clone(), u0.clone(), TimeOptions::adaptive(0.2))).unwrap();
        let b = run(&SimConfig::new(p, u0.scaled(-1.0), TimeOptions::adaptive(0.2))).unwrap();
        assert_eq!(a.final_state.step_count, b.final_state.step_count);
        for (x, y) in a.final_state.u.values().iter().zip(b.final_state.u.values()) {
            assert!((x + y).abs() <= 1e-10 * x.abs().max(1e-12));
        }
    }

    #[test]
    fn sigma_truncation_holds_every_step() {
        let (g, p, ctx) = grid_setup(24);
        let u0 = make_initial_data(&InitialKind::Bump { amplitude: 6.0 }, &g).unwrap();
        let sigma = crate::functionals::phi_r(&u0, p.r).unwrap() + 1.0;
        let params = p.with_sigma(sigma);
        let mut cfg = SimConfig::new(params.clone(), u0, TimeOptions::adaptive(0.3));
        cfg.snapshot_stride = Some(1);
        let out = run_with_context(&cfg, &ctx).unwrap();
        for snap in &out.final_state.snapshots {
            assert!(crate::functionals::phi_r(&snap.field, params.r).unwrap() <= sigma + 1e-12);
        }
    }

    #[test]
    fn dissipation_report_on_zero_run() {
        let (g, p, _) = grid_setup(16);
        let out = run(&SimConfig::new(p, Field::zeros(g), TimeOptions::adaptive(1.0))).unwrap();
        let rep = check_dissipation(&out.final_state.records, true, 1e-3);
        assert_eq!(rep.failures, 0);
        assert_eq!(rep.max_violation, 0.0);
        assert!(!check_dissipation(&out.final_state.records, false, 1e-3).applicable);
    }

    #[test]
    fn residual_needs_three_snapshots() {
        let (g, p, ctx) = grid_setup(16);
        let snap = Snapshot { step: 0, t: 0.0, field: Field::zeros(g) };
        assert!(strong_form_residual(&[snap.clone(), snap], &p, &ctx).is_err());
        let zeros: Vec<Snapshot> =
            (0..4).map(|k| Snapshot { step: k, t: k as f64 * 0.1, field: Field::zeros(g) }).collect();
        assert_eq!(strong_form_residual(&zeros, &p, &ctx).unwrap(), 0.0);
    }

    #[test]
    fn manufactured_solution_is_tracked() {
        let (g, p, ctx) = grid_setup(32);
        let b = make_initial_data(&InitialKind::Bump { amplitude: 1.0 }, &g).unwrap();
        let forcing = manufactured_forcing(&b, &p, &ctx).unwrap();
        let params = p.with_forcing(forcing);
        let exact_rhs = rhs(&b, 0.0, &params, &ctx).unwrap();
        let want = b.scaled(-1.0);
        for (x, y) in exact_rhs.values().iter().zip(want.values()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        let mut errs = Vec::new();
        let mut residuals = Vec::new();
        for &dt in &[4e-3, 2e-3, 1e-3] {
            let mut cfg = SimConfig::new(params.clone(), b.clone(), TimeOptions::fixed(0.2, dt));
            cfg.snapshot_stride = Some(1);
            let out = run_with_context(&cfg, &ctx).unwrap();
            let exact = b.scaled((-out.final_state.t).exp());
            let diff = out.final_state.u.combine(1.0, &exact, -1.0).unwrap();
            errs.push(crate::grid::lp_norm(&diff, f64::INFINITY).unwrap());
            residuals.push(strong_form_residual(&out.final_state.snapshots, &params, &ctx).unwrap());
        }
        for w in errs.windows(2).chain(residuals.windows(2)) {
            assert!((w[0] / w[1]).log2() >= 1.0, "{errs:?} {residuals:?}");
        }
    }
}
