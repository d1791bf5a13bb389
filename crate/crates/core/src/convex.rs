//! Resolvents, Moreau-Yosida and Yosida approximations of the power functional
//! `Θ(u) = ∫ |u|^m / m`, plus checks of the pointwise and energy inequalities
//! they satisfy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{power_integral, Field};
use crate::operator::{dirichlet_form, seminorm_p, signed_power, Kernel, OperatorContext};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxSpec {
    m: f64,
    lambda: f64,
}

impl ProxSpec {
    pub fn new(m: f64, lambda: f64) -> Result<Self> {
        if !(m >= 2.0 && m.is_finite()) {
            return Err(Error::ParamDomain(format!("power m = {m} < 2")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::ParamDomain(format!("lambda = {lambda} must be positive")));
        }
        Ok(Self { m, lambda })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// A signed margin together with the magnitude of the terms it compares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub scale: f64,
}

impl Margin {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.value >= -rel_tol * self.scale
    }

    /// `value / scale`, or 0 when both vanish.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            0.0
        }
    }
}

/// The unique `v` with `v + λ|v|^{m−2}v = u`.
pub fn scalar_resolvent(u: f64, spec: &ProxSpec) -> f64 {
    let (m, lambda) = (spec.m, spec.lambda);
    if u == 0.0 {
        return 0.0;
    }
    if m == 2.0 {
        return u / (1.0 + lambda);
    }
    let residual = |v: f64| v + lambda * signed_power(v, m) - u;
    let tol = 1e-13 * u.abs().max(1.0);
    let (mut lo, mut hi) = if u > 0.0 { (0.0, u) } else { (u, 0.0) };
    // Newton from v = u descends monotonically onto the root for m ≥ 2; the
    // bracket catches anything that strays.
    let mut v = u;
    for _ in 0..100 {
        let r = residual(v);
        if r.abs() <= tol {
            return v;
        }
        if r > 0.0 {
            hi = hi.min(v);
        } else {
            lo = lo.max(v);
        }
        let slope = 1.0 + lambda * (m - 1.0) * v.abs().powf(m - 2.0);
        let next = v - r / slope;
        v = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (rl, rh) = (residual(lo).abs(), residual(hi).abs());
    let best = if rl <= rh { lo } else { hi };
    if residual(v).abs() < residual(best).abs() {
        v
    } else {
        best
    }
}

/// Node-wise resolvent `J_λ u`.
pub fn field_resolvent(u: &Field, spec: &ProxSpec) -> Field {
    u.map(|v| scalar_resolvent(v, spec)).expect("resolvent of finite data is finite")
}

/// `Θ(u) = ∫ |u|^m / m`.
pub fn power_energy(u: &Field, m: f64) -> f64 {
    power_integral(u.values(), u.grid().cell_volume(), m) / m
}

/// `Θ_λ(u) = ‖u − J_λu‖² / (2λ) + Θ(J_λu)`.
pub fn moreau_yosida_value(u: &Field, spec: &ProxSpec) -> f64 {
    let j = field_resolvent(u, spec);
    let dist2 = power_integral(
        &u.values().iter().zip(j.values()).map(|(a, b)| a - b).collect::<Vec<_>>(),
        u.grid().cell_volume(),
        2.0,
    );
    dist2 / (2.0 * spec.lambda) + power_energy(&j, spec.m)
}

/// Yosida approximation `A_λ u = (u − J_λu)/λ`.
pub fn yosida_apply(u: &Field, spec: &ProxSpec) -> Field {
    let j = field_resolvent(u, spec);
    u.combine(1.0 / spec.lambda, &j, -1.0 / spec.lambda).expect("same grid")
}

/// `C_{r,p} = (r − 1)(p/(p + r − 2))^p`.
pub fn stroock_varopoulos_constant(p: f64, r: f64) -> f64 {
    (r - 1.0) * (p / (p + r - 2.0)).powf(p)
}

/// The two terms of `g(z, t)`: `(|z−t|^{p−2}(z−t)(|z|^{r−2}z − |t|^{r−2}t), C_{r,p}|…|^p)`.
/// `|z|^{m−1}z − |t|^{m−1}t` without cancellation when `z ≈ t`: for equal
/// signs `z − t` is exact near the diagonal and the ratio goes through
/// `expm1`/`ln_1p`.
fn power_difference(z: f64, t: f64, m: f64) -> f64 {
    let direct = z.abs().powf(m - 1.0) * z - t.abs().powf(m - 1.0) * t;
    if z == 0.0 || t == 0.0 || z.signum() != t.signum() {
        return direct;
    }
    let (a, b) = (z.abs(), t.abs());
    // Expand around the smaller magnitude so that swapping z and t negates exactly.
    let (hi, lo, sign) = if a >= b { (a, b, 1.0) } else { (b, a, -1.0) };
    sign * z.signum() * lo.powf(m) * (m * ((hi - lo) / lo).ln_1p()).exp_m1()
}

fn g_terms(z: f64, t: f64, p: f64, r: f64) -> (f64, f64) {
    let first = signed_power(z - t, p) * power_difference(z, t, r - 1.0);
    let e = (r - 2.0) / p;
    (first, stroock_varopoulos_constant(p, r) * power_difference(z, t, e + 1.0).abs().powf(p))
}

/// `g(z,t) = |z−t|^{p−2}(z−t)(|z|^{r−2}z − |t|^{r−2}t) − C_{r,p} ||z|^{(r−2)/p}z − |t|^{(r−2)/p}t|^p`.
pub fn g_scalar(z: f64, t: f64, p: f64, r: f64) -> f64 {
    let (a, b) = g_terms(z, t, p, r);
    a - b
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvReport {
    pub evaluations: usize,
    /// Smallest `g / scale` observed (scale = larger term magnitude).
    pub min_relative: f64,
    /// `(z, t, p, r)` at the minimum.
    pub worst: (f64, f64, f64, f64),
    pub max_diagonal_abs: f64,
    pub passed: bool,
}

/// Samples `g` on uniform random points and a deterministic lattice over
/// `[lo, hi]²` for every `(p, r)` pair of `exponents`.
pub fn check_stroock_varopoulos(samples: usize, range: (f64, f64), exponents: &[f64], seed: u64, tol: f64) -> SvReport {
    let (lo, hi) = range;
    let pairs: Vec<(f64, f64)> = exponents.iter().flat_map(|&p| exponents.iter().map(move |&r| (p, r))).collect();
    let lattice = 101usize;
    let per_pair: Vec<(usize, f64, (f64, f64, f64, f64), f64)> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(p, r))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64 + 1) << 32));
            let mut min_rel = f64::INFINITY;
            let mut worst = (0.0, 0.0, p, r);
            let mut diag = 0.0f64;
            let mut count = 0;
            let mut visit = |z: f64, t: f64| {
                let (a, b) = g_terms(z, t, p, r);
                let scale = a.abs().max(b.abs());
                let rel = if scale > 0.0 { (a - b) / scale } else { 0.0 };
                if rel < min_rel {
                    min_rel = rel;
                    worst = (z, t, p, r);
                }
                count += 1;
            };
            for _ in 0..samples {
                let z = rng.gen_range(lo..=hi);
                let t = rng.gen_range(lo..=hi);
                visit(z, t);
            }
            for i in 0..lattice {
                for j in 0..lattice {
                    let z = lo + (hi - lo) * i as f64 / (lattice - 1) as f64;
                    let t = lo + (hi - lo) * j as f64 / (lattice - 1) as f64;
                    visit(z, t);
                }
            }
            for i in 0..lattice {
                let z = lo + (hi - lo) * i as f64 / (lattice - 1) as f64;
                diag = diag.max(g_scalar(z, z, p, r).abs());
            }
            (count, min_rel, worst, diag)
        })
        .collect();

    let mut report = SvReport {
        evaluations: 0,
        min_relative: f64::INFINITY,
        worst: (0.0, 0.0, 0.0, 0.0),
        max_diagonal_abs: 0.0,
        passed: true,
    };
    for (count, min_rel, worst, diag) in per_pair {
        report.evaluations += count;
        if min_rel < report.min_relative {
            report.min_relative = min_rel;
            report.worst = worst;
        }
        report.max_diagonal_abs = report.max_diagonal_abs.max(diag);
    }
    report.passed = report.min_relative >= -tol && report.max_diagonal_abs == 0.0;
    report
}

/// `ℰ(u, |u|^{r−2}u) − C_{r,p} ℰ(v, v)` with `v = |u|^{(r−2)/p}u`; `p` comes from the context.
pub fn check_energy_comparison(u: &Field, kernel: Kernel<'_>, r: f64, ctx: &OperatorContext) -> Result<Margin> {
    let p = ctx.p();
    let w = u.map(|x| signed_power(x, r))?;
    let e = (r - 2.0) / p;
    let v = u.map(|x| x.abs().powf(e) * x)?;
    let lhs = dirichlet_form(u, &w, kernel, ctx)?;
    let rhs = stroock_varopoulos_constant(p, r) * dirichlet_form(&v, &v, kernel, ctx)?;
    Ok(Margin { value: lhs - rhs, scale: lhs.abs().max(rhs.abs()) })
}

/// `|||u|||^p − |||J_λu|||^p`, nonnegative because `J_λ` is a pointwise contraction fixing 0.
pub fn resolvent_seminorm_decrease(u: &Field, spec: &ProxSpec, ctx: &OperatorContext) -> Result<Margin> {
    let before = seminorm_p(u, ctx)?;
    let after = seminorm_p(&field_resolvent(u, spec), ctx)?;
    Ok(Margin { value: before - after, scale: before.max(after) })
}

/// Radial rescaling onto `{φ ≤ σ} = {‖u‖_r^r ≤ rσ}`.
pub fn project_lr_ball(u: &Field, sigma: f64, r: f64) -> Result<Field> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::ParamDomain(format!("sigma = {sigma} must be positive")));
    }
    let integral = power_integral(u.values(), u.grid().cell_volume(), r);
    if integral / r <= sigma {
        return Ok(u.clone());
    }
    let factor = ((r * sigma) / integral).powf(1.0 / r);
    let mut out = u.scaled(factor);
    // Roundoff in the root can leave φ a hair above σ; shrink until it is not.
    while power_integral(out.values(), u.grid().cell_volume(), r) / r > sigma {
        out = out.scaled(1.0 - 4.0 * f64::EPSILON);
    }
    Ok(out)
}
