//! Energies and interpolation inequalities.

use crate::error::{Error, Result};
use crate::grid::{lp_norm, power_integral, Field};
use crate::operator::{seminorm_p, OperatorContext};
use crate::params::ModelParams;

/// Per-step diagnostics of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub dt: f64,
    pub norm2: f64,
    pub normr: f64,
    pub normq: f64,
    pub norminf: f64,
    /// `|||u|||^p`.
    pub seminorm_p: f64,
    pub phi: f64,
    pub psi: f64,
    pub energy: f64,
    /// `−(E_{k+1} − E_k)/Δt`.
    pub dissipation_lhs: f64,
    /// `‖(u_{k+1} − u_k)/Δt‖²_{L²}`.
    pub dissipation_rhs: f64,
}

impl EnergyRecord {
    pub const CSV_HEADER: &'static str =
        "t,dt,norm2,normr,normq,norminf,seminorm_p,Phi,psi,E,dissipation_lhs,dissipation_rhs";

    pub fn measure(t: f64, dt: f64, u: &Field, params: &ModelParams, ctx: &OperatorContext) -> Result<Self> {
        let semi = seminorm_p(u, ctx)?;
        let phi = semi / params.p;
        let psi = psi_q(u, params.q)?;
        Ok(Self {
            t,
            dt,
            norm2: lp_norm(u, 2.0)?,
            normr: lp_norm(u, params.r)?,
            normq: lp_norm(u, params.q)?,
            norminf: lp_norm(u, f64::INFINITY)?,
            seminorm_p: semi,
            phi,
            psi,
            energy: phi - psi,
            dissipation_lhs: 0.0,
            dissipation_rhs: 0.0,
        })
    }

    pub fn fields(&self) -> [f64; 12] {
        [
            self.t,
            self.dt,
            self.norm2,
            self.normr,
            self.normq,
            self.norminf,
            self.seminorm_p,
            self.phi,
            self.psi,
            self.energy,
            self.dissipation_lhs,
            self.dissipation_rhs,
        ]
    }
}

/// `Φ(u) = |||u|||^p / p`.
pub fn phi_cap(u: &Field, ctx: &OperatorContext) -> Result<f64> {
    Ok(seminorm_p(u, ctx)? / ctx.p())
}

fn power_functional(u: &Field, m: f64) -> Result<f64> {
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::InvalidExponent(m));
    }
    Ok(power_integral(u.values(), u.grid().cell_volume(), m) / m)
}

/// `ψ(u) = (1/q) ∫ |u|^q`.
pub fn psi_q(u: &Field, q: f64) -> Result<f64> {
    power_functional(u, q)
}

/// `φ(u) = (1/r) ∫ |u|^r`.
pub fn phi_r(u: &Field, r: f64) -> Result<f64> {
    power_functional(u, r)
}

/// `E(u) = Φ(u) − ψ(u)`.
pub fn total_energy(u: &Field, params: &ModelParams, ctx: &OperatorContext) -> Result<f64> {
    Ok(phi_cap(u, ctx)? - psi_q(u, params.q)?)
}

/// Gagliardo-Nirenberg weight `α` solving `1/q = α(N − sp)/(Np) + (1 − α)/r`.
///
/// Returns `0` for `q = r`; `r > q` is the Hölder branch and has no weight.
pub fn gn_exponent(params: &ModelParams, dim: usize) -> Result<f64> {
    let ModelParams { s, p, q, r, .. } = *params;
    if r > q {
        return Err(Error::HolderBranch { q, r });
    }
    if r == q {
        return Ok(0.0);
    }
    let n = dim as f64;
    if !crate::params::growth_condition_by_r(dim, s, p, q, r) {
        return Err(Error::Hypothesis(format!("r = {r} violates r > N(q-p)/(sp)")));
    }
    let inv_pstar = (n - s * p) / (n * p);
    let den = 1.0 - inv_pstar * r;
    if den.abs() <= 1e-14 {
        return Err(Error::Degenerate(format!("r = {r} equals the critical exponent Np/(N-sp)")));
    }
    // αq = (q − r) / (1 − r (N − sp)/(Np))
    let alpha_q = (q - r) / den;
    if !(alpha_q > 0.0 && alpha_q < p) {
        return Err(Error::Degenerate(format!("alpha*q = {alpha_q} outside (0, p)")));
    }
    Ok(alpha_q / q)
}

/// `C |||u|||^α ‖u‖_r^{1−α} − ‖u‖_q`; nonnegative when the interpolation
/// inequality holds with constant `c_gn`.
pub fn check_gn_inequality(u: &Field, params: &ModelParams, ctx: &OperatorContext, c_gn: f64) -> Result<f64> {
    let alpha = gn_exponent(params, u.grid().dim())?;
    let semi = seminorm_p(u, ctx)?;
    let lr = lp_norm(u, params.r)?;
    let lq = lp_norm(u, params.q)?;
    Ok(c_gn * semi.powf(alpha / params.p) * lr.powf(1.0 - alpha) - lq)
}

/// Ratio `‖u‖_q / (|||u|||^α ‖u‖_r^{1−α})`, used to calibrate `c_gn`.
pub fn gn_ratio(u: &Field, params: &ModelParams, ctx: &OperatorContext) -> Result<f64> {
    let alpha = gn_exponent(params, u.grid().dim())?;
    let semi = seminorm_p(u, ctx)?;
    let lr = lp_norm(u, params.r)?;
    let lq = lp_norm(u, params.q)?;
    Ok(lq / (semi.powf(alpha / params.p) * lr.powf(1.0 - alpha)))
}

/// Growth and interpolation exponents of `ψ ≤ F(φ)[Φ + 1]^{1−ε}` with
/// `F(t) = C t^{growth}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationExponents {
    pub growth: f64,
    pub epsilon: f64,
}

pub fn interpolation_exponents(params: &ModelParams, dim: usize) -> Result<InterpolationExponents> {
    let ModelParams { p, q, r, .. } = *params;
    if r >= q {
        return Ok(InterpolationExponents { growth: q / r, epsilon: 1.0 });
    }
    let alpha = gn_exponent(params, dim)?;
    Ok(InterpolationExponents { growth: (1.0 - alpha) * q / r, epsilon: 1.0 - alpha * q / p })
}

/// `c φ(u)^{growth} [Φ(u) + 1]^{1−ε} − ψ(u)`.
pub fn interpolation_margin(u: &Field, params: &ModelParams, ctx: &OperatorContext, c: f64) -> Result<f64> {
    let ex = interpolation_exponents(params, u.grid().dim())?;
    let phi = phi_r(u, params.r)?;
    let cap = phi_cap(u, ctx)?;
    let psi = psi_q(u, params.q)?;
    Ok(c * phi.powf(ex.growth) * (cap + 1.0).powf(1.0 - ex.epsilon) - psi)
}

/// `ψ(u) / (φ(u)^{growth} [Φ(u) + 1]^{1−ε})`, used to calibrate `c`.
pub fn interpolation_ratio(u: &Field, params: &ModelParams, ctx: &OperatorContext) -> Result<f64> {
    let ex = interpolation_exponents(params, u.grid().dim())?;
    let phi = phi_r(u, params.r)?;
    let cap = phi_cap(u, ctx)?;
    let psi = psi_q(u, params.q)?;
    Ok(psi / (phi.powf(ex.growth) * (cap + 1.0).powf(1.0 - ex.epsilon)))
}
