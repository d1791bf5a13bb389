//! Discrete best constant of the embedding `‖u‖_q ≤ C |||u|||`.
//!
//! The quotient `R(u) = ‖u‖_q / |||u|||` is 0-homogeneous, so the search runs on
//! the sphere `|||u||| = 1`: each iterate takes a preconditioned ascent step on
//! `log R` with Armijo backtracking and is then renormalized. The
//! preconditioner is the matrix of the `p = 2` operator with the same kernel,
//! which turns the `p = 2` iteration into a damped inverse power method.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{lp_norm, make_initial_data, power_integral, Field, GridSpec, InitialKind};
use crate::operator::{signed_power, OperatorContext};
use crate::params::{CriticalExponent, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevOptions {
    pub starts: usize,
    pub max_iters: usize,
    /// Stop once `log R` improves by less than this over a few iterations.
    pub tol: f64,
    pub seed: u64,
    /// Scale applied to every starting field; the result must not depend on it.
    pub initial_scale: f64,
}

impl Default for SobolevOptions {
    fn default() -> Self {
        Self { starts: 8, max_iters: 4000, tol: 1e-12, seed: 0, initial_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartResult {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SobolevEstimate {
    /// Best quotient found, `C*ʰ`.
    pub value: f64,
    pub converged: bool,
    pub best_start: usize,
    pub per_start: Vec<StartResult>,
    pub maximizer: Field,
}

/// `R(u) = ‖u‖_q / |||u|||`.
pub fn rayleigh_quotient(u: &Field, q: f64, ctx: &OperatorContext) -> Result<f64> {
    let semi = crate::operator::seminorm_p(u, ctx)?;
    if semi <= 0.0 {
        return Err(Error::Degenerate("zero field has no Sobolev quotient".into()));
    }
    Ok(lp_norm(u, q)? / semi.powf(1.0 / ctx.p()))
}

struct Ascent<'a> {
    ctx: &'a OperatorContext,
    q: f64,
    cell: f64,
    precond: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Ascent<'_> {
    fn log_quotient(&self, u: &[f64]) -> f64 {
        let qint = power_integral(u, self.cell, self.q);
        let semi = self.ctx.seminorm_values(u);
        qint.ln() / self.q - semi.ln() / self.ctx.p()
    }

    /// L²-gradient of `log R`: `|u|^{q−2}u / ∫|u|^q − Au / |||u|||^p`.
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let qint = power_integral(u, self.cell, self.q);
        let semi = self.ctx.seminorm_values(u);
        let au = self.ctx.apply_values(u);
        u.iter().zip(&au).map(|(&ui, &ai)| signed_power(ui, self.q) / qint - ai / semi).collect()
    }

    fn normalize(&self, u: &mut [f64]) {
        let semi = self.ctx.seminorm_values(u);
        let f = semi.powf(-1.0 / self.ctx.p());
        u.iter_mut().for_each(|v| *v *= f);
    }

    fn run(&self, mut u: Vec<f64>, opts: &SobolevOptions) -> (Vec<f64>, StartResult) {
        self.normalize(&mut u);
        let mut obj = self.log_quotient(&u);
        let mut step: f64 = 1.0;
        let mut quiet = 0;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iters {
            iterations += 1;
            let g = self.gradient(&u);
            let d = self.precond.solve(&DVector::from_vec(g.clone()));
            let slope: f64 = g.iter().zip(d.iter()).map(|(a, b)| a * b).sum::<f64>() * self.cell;
            if !(slope > 0.0) || slope < 1e-28 {
                converged = true;
                break;
            }
            step = (2.0 * step).min(1.0);
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = u.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
                let val = self.log_quotient(&trial);
                if val.is_finite() && val >= obj + 1e-4 * step * slope {
                    accepted = Some((trial, val));
                    break;
                }
                step *= 0.5;
            }
            let Some((mut trial, val)) = accepted else {
                // No ascent along the direction at machine resolution: stationary.
                converged = true;
                break;
            };
            self.normalize(&mut trial);
            let gain = val - obj;
            u = trial;
            obj = val;
            if gain <= opts.tol {
                quiet += 1;
                if quiet >= 5 {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        (u, StartResult { value: obj.exp(), iterations, converged })
    }
}

/// Matrix of the `p = 2`-pattern operator built from the context's kernel.
fn preconditioner(ctx: &OperatorContext) -> DMatrix<f64> {
    let len = ctx.grid().len();
    let c = ctx.c_nps();
    let mut m = DMatrix::zeros(len, len);
    for i in 0..len {
        let mut diag = ctx.tail_weights()[i];
        for j in 0..len {
            if j != i {
                let w = ctx.pair_weight(i, j);
                m[(i, j)] = -c * w;
                diag += w;
            }
        }
        m[(i, i)] = c * diag;
    }
    m
}

fn starting_fields(grid: &GridSpec, opts: &SobolevOptions) -> Result<Vec<Vec<f64>>> {
    let bump = make_initial_data(&InitialKind::Bump { amplitude: 1.0 }, grid)?;
    let mut out = Vec::with_capacity(opts.starts);
    for k in 0..opts.starts {
        let values = if k == 0 {
            bump.values().to_vec()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9).wrapping_add(k as u64));
            bump.values().iter().map(|b| b * rng.gen_range(0.05..1.0)).collect()
        };
        out.push(values.into_iter().map(|v| v * opts.initial_scale).collect());
    }
    Ok(out)
}

/// Multi-start estimate of the discrete best Sobolev constant for `(s, p, q)`.
pub fn estimate_sobolev_constant(grid: &GridSpec, params: &ModelParams, opts: &SobolevOptions) -> Result<SobolevEstimate> {
    if opts.starts == 0 || opts.max_iters == 0 {
        return Err(Error::Config("need at least one start and one iteration".into()));
    }
    if !(opts.initial_scale.is_finite() && opts.initial_scale != 0.0) {
        return Err(Error::Config(format!("initial scale {} must be finite and nonzero", opts.initial_scale)));
    }
    let pstar = CriticalExponent::of(grid.dim(), params.s, params.p);
    if !pstar.admits(params.q) {
        return Err(Error::Hypothesis(format!("q = {} exceeds p* = {}", params.q, pstar.value())));
    }
    let ctx = OperatorContext::new(grid, params)?;
    let precond = preconditioner(&ctx)
        .cholesky()
        .ok_or_else(|| Error::Degenerate("operator matrix is not positive definite".into()))?;
    let ascent = Ascent { ctx: &ctx, q: params.q, cell: grid.cell_volume(), precond };
    let starts = starting_fields(grid, opts)?;
    let results: Vec<(Vec<f64>, StartResult)> = starts.into_par_iter().map(|u| ascent.run(u, opts)).collect();

    let mut best = 0;
    for (k, (_, r)) in results.iter().enumerate() {
        if r.value > results[best].1.value {
            best = k;
        }
    }
    let per_start: Vec<StartResult> = results.iter().map(|(_, r)| r.clone()).collect();
    let (best_field, best_result) = results.into_iter().nth(best).expect("at least one start");
    Ok(SobolevEstimate {
        value: best_result.value,
        converged: best_result.converged,
        best_start: best,
        per_start,
        maximizer: Field::new(*grid, best_field)?,
    })
}
