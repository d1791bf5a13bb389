//! One-dimensional adaptive quadrature and the exterior-tail integrals.

#[cfg(test)]
use std::f64::consts::PI;

use crate::grid::GridSpec;

/// Adaptive Simpson rule with Richardson correction.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_{ℝ \ (a,b)} |x − y|^{−(1+σ)} dy` for `a < x < b`, with `σ = sp`.
pub fn tail_weight_1d(x: f64, a: f64, b: f64, sp: f64) -> f64 {
    ((x - a).powf(-sp) + (b - x).powf(-sp)) / sp
}

/// `∫_{ℝ² \ box} |x − y|^{−(2+σ)} dy` for `x` inside the box.
///
/// In polar coordinates around `x` the radial integral is exact,
/// `∫_{ρ(θ)}^∞ ρ^{−1−σ} dρ = ρ(θ)^{−σ}/σ`, leaving one angular integral per box
/// edge. On the edge at distance `d` with angle `φ` measured from its normal,
/// `ρ = d / cos φ`, so each edge contributes `d^{−σ} ∫ cos^σ φ dφ / σ`.
pub fn tail_weight_2d(x: [f64; 2], min: [f64; 2], max: [f64; 2], sp: f64, rel_tol: f64) -> f64 {
    let right = max[0] - x[0];
    let top = max[1] - x[1];
    let left = x[0] - min[0];
    let bottom = x[1] - min[1];
    // Each edge, with the distances to the two adjacent edges bounding its angular span.
    let edges = [(right, bottom, top), (top, right, left), (left, top, bottom), (bottom, left, right)];
    let integrand = |phi: f64| phi.cos().max(0.0).powf(sp);
    edges
        .iter()
        .map(|&(d, lo_side, hi_side)| {
            let lo = -(lo_side / d).atan();
            let hi = (hi_side / d).atan();
            d.powf(-sp) * adaptive_simpson(&integrand, lo, hi, rel_tol)
        })
        .sum::<f64>()
        / sp
}

/// Exterior-tail weight for every interior node of `grid`.
pub fn tail_weights(grid: &GridSpec, sp: f64) -> Vec<f64> {
    let (lo, hi) = (grid.box_min(), grid.box_max());
    (0..grid.len())
        .map(|k| {
            let x = grid.coord(k);
            match grid.dim() {
                1 => tail_weight_1d(x[0], lo[0], hi[0], sp),
                _ => tail_weight_2d(x, [lo[0], lo[1]], [hi[0], hi[1]], sp, 1e-10),
            }
        })
        .collect()
}

/// Brute-force polar midpoint rule for the 2D tail, used as an independent check.
#[cfg(test)]
pub(crate) fn tail_weight_2d_midpoint(x: [f64; 2], min: [f64; 2], max: [f64; 2], sp: f64, m: usize) -> f64 {
    let dt = 2.0 * PI / m as f64;
    let mut sum = 0.0;
    for k in 0..m {
        let th = (k as f64 + 0.5) * dt;
        let (c, s) = (th.cos(), th.sin());
        let mut rho = f64::INFINITY;
        if c > 0.0 {
            rho = rho.min((max[0] - x[0]) / c);
        } else if c < 0.0 {
            rho = rho.min((min[0] - x[0]) / c);
        }
        if s > 0.0 {
            rho = rho.min((max[1] - x[1]) / s);
        } else if s < 0.0 {
            rho = rho.min((min[1] - x[1]) / s);
        }
        sum += rho.powf(-sp);
    }
    sum * dt / sp
}

/// Angular measure check: ∫ over the full circle of 1 is 2π when every edge
/// contributes its span; exposed for tests only.
#[cfg(test)]
fn angular_span(x: [f64; 2], min: [f64; 2], max: [f64; 2]) -> f64 {
    let d = [max[0] - x[0], max[1] - x[1], x[0] - min[0], x[1] - min[1]];
    (0..4)
        .map(|e| {
            let lo_side = d[(e + 3) % 4];
            let hi_side = d[(e + 1) % 4];
            (lo_side / d[e]).atan() + (hi_side / d[e]).atan()
        })
        .sum()
}
