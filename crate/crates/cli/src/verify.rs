//! Randomized verification suites for the scalar and discrete inequalities.
//!
//! Every suite draws from its own ChaCha8 stream derived from the seed, so a
//! run is reproducible bit for bit.

use fplap_core::convex::{power_energy, stroock_varopoulos_constant};
use fplap_core::operator::duality_identity_gap;
use fplap_core::params::CriticalExponent;
use fplap_core::{
    check_energy_comparison, check_stroock_varopoulos, field_resolvent, gn_exponent, lp_norm, moreau_yosida_value,
    resolvent_seminorm_decrease, Field, GridSpec, Kernel, KernelTable, ModelParams, OperatorContext, ProxSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUITES: &[&str] = &[
    "stroock-varopoulos",
    "energy-comparison",
    "resolvent",
    "moreau-yosida",
    "seminorm-decrease",
    "gn-exponent",
    "duality",
];

/// Outcome of one suite: the smallest relative margin seen (negative means a
/// violation) and whether every sample was within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub samples: usize,
    pub min_margin: f64,
    pub passed: bool,
    pub detail: String,
}

pub fn default_samples(suite: &str) -> usize {
    match suite {
        "stroock-varopoulos" => 100_000,
        "gn-exponent" => 10_000,
        "duality" => 100,
        _ => 1_000,
    }
}

/// Names selected by `suite` (`all` expands to every suite), or `None` if unknown.
pub fn select(suite: &str) -> Option<Vec<&'static str>> {
    if suite == "all" {
        return Some(SUITES.to_vec());
    }
    SUITES.iter().find(|s| **s == suite).map(|s| vec![*s])
}

pub fn run_suite(name: &'static str, samples: usize, seed: u64) -> SuiteReport {
    // Distinct, stable stream per suite.
    let tag = SUITES.iter().position(|s| *s == name).expect("registered suite") as u64 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (tag << 48));
    let mut acc = Acc::new();
    match name {
        "stroock-varopoulos" => {
            let rep = check_stroock_varopoulos(samples, (-10.0, 10.0), &[2.0, 2.5, 3.0, 4.0, 6.0], seed, 1e-12);
            acc.detail = format!(
                "evaluations={} max_diagonal_abs={} worst=({}, {}, {}, {})",
                rep.evaluations,
                crate::report::num(rep.max_diagonal_abs),
                crate::report::num(rep.worst.0),
                crate::report::num(rep.worst.1),
                rep.worst.2,
                rep.worst.3
            );
            acc.min = rep.min_relative;
            acc.ok = rep.passed;
        }
        "energy-comparison" => energy_comparison(&mut rng, samples, &mut acc),
        "resolvent" => resolvent(&mut rng, samples, &mut acc),
        "moreau-yosida" => moreau_yosida(&mut rng, samples, &mut acc),
        "seminorm-decrease" => seminorm_decrease(&mut rng, samples, &mut acc),
        "gn-exponent" => gn(&mut rng, samples, &mut acc),
        "duality" => duality(&mut rng, samples, &mut acc),
        _ => unreachable!("unregistered suite {name}"),
    }
    SuiteReport { name, samples, min_margin: acc.min, passed: acc.ok, detail: acc.detail }
}

struct Acc {
    min: f64,
    ok: bool,
    detail: String,
}

impl Acc {
    fn new() -> Self {
        Self { min: f64::INFINITY, ok: true, detail: String::new() }
    }

    /// Records `value / scale` and fails when it drops below `−tol`.
    fn margin(&mut self, value: f64, scale: f64, tol: f64) {
        let rel = if scale > 0.0 { value / scale } else { value };
        if !rel.is_finite() {
            self.ok = false;
            self.min = f64::NEG_INFINITY;
            return;
        }
        self.min = self.min.min(rel);
        if rel < -tol {
            self.ok = false;
        }
    }

    fn fail(&mut self, why: String) {
        self.ok = false;
        if self.detail.is_empty() {
            self.detail = why;
        }
    }
}

fn line(n: usize) -> GridSpec {
    GridSpec::line(0.0, 1.0, n).expect("valid grid")
}

/// Uniform values in `[−A, A]` with `A = 10^U(−1, 1)`.
fn random_field(rng: &mut ChaCha8Rng, grid: &GridSpec) -> Field {
    let amp = 10f64.powf(rng.gen_range(-1.0..1.0));
    let values = (0..grid.len()).map(|_| amp * rng.gen_range(-1.0..=1.0)).collect();
    Field::new(*grid, values).expect("finite")
}

fn energy_comparison(rng: &mut ChaCha8Rng, samples: usize, acc: &mut Acc) {
    let grid = line(16);
    let pairs: Vec<(f64, f64)> = [2.0, 3.0].iter().flat_map(|&p| [2.0, 3.0, 4.0].map(|r| (p, r))).collect();
    let ctxs: Vec<OperatorContext> =
        [2.0, 3.0].iter().map(|&p| OperatorContext::with_exponents(&grid, 0.5, p).expect("context")).collect();
    for k in 0..samples {
        let (p, r) = pairs[k % pairs.len()];
        let ctx = &ctxs[usize::from(p == 3.0)];
        let u = random_field(rng, &grid);
        let len = grid.len();
        let mut values = vec![0.0; len * len];
        for i in 0..len {
            for j in (i + 1)..len {
                let w = 10f64.powf(rng.gen_range(-2.0..2.0));
                values[i * len + j] = w;
                values[j * len + i] = w;
            }
        }
        let table = KernelTable::new(len, values).expect("positive symmetric");
        match check_energy_comparison(&u, Kernel::Table(&table), r, ctx) {
            Ok(m) => acc.margin(m.value, m.scale, 1e-10),
            Err(e) => acc.fail(e.to_string()),
        }
    }
    acc.detail = format!("C(2,4)={}", crate::report::num(stroock_varopoulos_constant(2.0, 4.0)));
}

fn resolvent(rng: &mut ChaCha8Rng, samples: usize, acc: &mut Acc) {
    let grid = line(16);
    let r = 3.0;
    for _ in 0..samples {
        let m = [2.5, 3.0, 4.0][rng.gen_range(0..3)];
        let lambda = 10f64.powf(rng.gen_range(-2.0..1.0));
        let spec = ProxSpec::new(m, lambda).expect("valid spec");
        let u = random_field(rng, &grid);
        let v = random_field(rng, &grid);
        let (ju, jv) = (field_resolvent(&u, &spec), field_resolvent(&v, &spec));
        let du = u.combine(1.0, &v, -1.0).expect("same grid");
        let dj = ju.combine(1.0, &jv, -1.0).expect("same grid");
        for norm in [1.0, 2.0, r, f64::INFINITY] {
            let (a, b) = (lp_norm(&du, norm).expect("norm"), lp_norm(&dj, norm).expect("norm"));
            acc.margin(a - b, a, 1e-10);
        }
    }
}

fn moreau_yosida(rng: &mut ChaCha8Rng, samples: usize, acc: &mut Acc) {
    let grid = line(16);
    for _ in 0..samples {
        let m = [2.5, 3.0, 4.0][rng.gen_range(0..3)];
        let u = random_field(rng, &grid);
        let full = power_energy(&u, m);
        let mut previous = f64::NEG_INFINITY;
        for lambda in [1e-1, 1e-2, 1e-3] {
            let spec = ProxSpec::new(m, lambda).expect("valid spec");
            let env = moreau_yosida_value(&u, &spec);
            let lower = power_energy(&field_resolvent(&u, &spec), m);
            acc.margin(env - lower, full, 1e-10);
            acc.margin(full - env, full, 1e-10);
            // Smaller λ gives a larger envelope.
            if previous.is_finite() {
                acc.margin(env - previous, full, 1e-10);
            }
            previous = env;
        }
    }
}

fn seminorm_decrease(rng: &mut ChaCha8Rng, samples: usize, acc: &mut Acc) {
    let grid = line(16);
    let combos: Vec<(f64, f64)> = [2.0, 2.5, 3.0].iter().flat_map(|&p| [0.25, 0.5, 0.75].map(|s| (p, s))).collect();
    let ctxs: Vec<OperatorContext> =
        combos.iter().map(|&(p, s)| OperatorContext::with_exponents(&grid, s, p).expect("context")).collect();
    for k in 0..samples {
        let ctx = &ctxs[k % ctxs.len()];
        let m = [2.5, 3.0, 4.0][rng.gen_range(0..3)];
        let lambda = 10f64.powf(rng.gen_range(-2.0..1.0));
        let spec = ProxSpec::new(m, lambda).expect("valid spec");
        let u = random_field(rng, &grid);
        match resolvent_seminorm_decrease(&u, &spec, ctx) {
            Ok(mg) => acc.margin(mg.value, mg.scale, 1e-10),
            Err(e) => acc.fail(e.to_string()),
        }
    }
}

fn gn(rng: &mut ChaCha8Rng, samples: usize, acc: &mut Acc) {
    let closed = gn_exponent(&ModelParams::new(0.5, 2.0, 4.0, 3.0), 1);
    if closed != Ok(0.25) {
        acc.fail(format!("closed-form case gave {closed:?}, expected 0.25"));
    }
    let mut drawn = 0;
    while drawn < samples {
        let dim = rng.gen_range(1..=2usize);
        let s = rng.gen_range(0.05..0.95);
        let p = rng.gen_range(2.0..6.0);
        let n = dim as f64;
        let qmax = match CriticalExponent::of(dim, s, p) {
            CriticalExponent::Finite(v) => v,
            CriticalExponent::Unbounded => 4.0 * p,
        };
        let q = p + rng.gen_range(0.001..0.999) * (qmax - p);
        let rmin = (n * (q - p) / (s * p)).max(2.0);
        if rmin >= q {
            continue;
        }
        let r = rmin + rng.gen_range(0.001..0.999) * (q - rmin);
        if !(r > rmin * (1.0 + 1e-9) && q - r > 1e-9) {
            continue;
        }
        drawn += 1;
        match gn_exponent(&ModelParams::new(s, p, q, r), dim) {
            // Distance of αq to the nearer end of (0, p), relative to p.
            Ok(alpha) => acc.margin((alpha * q).min(p - alpha * q), p, 0.0),
            Err(e) => acc.fail(format!("(N={dim}, s={s}, p={p}, q={q}, r={r}): {e}")),
        }
        if acc.min <= 0.0 {
            acc.ok = false;
        }
    }
}

fn duality(rng: &mut ChaCha8Rng, samples: usize, acc: &mut Acc) {
    let grid = line(64);
    let combos: Vec<(f64, f64)> = [2.0, 2.5, 3.0].iter().flat_map(|&p| [0.25, 0.5, 0.75].map(|s| (p, s))).collect();
    let ctxs: Vec<OperatorContext> =
        combos.iter().map(|&(p, s)| OperatorContext::with_exponents(&grid, s, p).expect("context")).collect();
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let u = random_field(rng, &grid);
        match duality_identity_gap(&u, &ctxs[k % ctxs.len()]) {
            Ok(gap) => {
                worst = worst.max(gap);
                acc.margin(-gap, 1.0, 1e-10);
            }
            Err(e) => acc.fail(e.to_string()),
        }
    }
    acc.detail = format!("max_relative_gap={}", crate::report::num(worst));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection() {
        assert_eq!(select("all").unwrap().len(), SUITES.len());
        assert_eq!(select("duality").unwrap(), vec!["duality"]);
        assert!(select("nope").is_none());
    }

    #[test]
    fn small_runs_pass_and_repeat() {
        for name in SUITES {
            let a = run_suite(name, 20, 3);
            assert!(a.passed, "{a:?}");
            assert_eq!(a, run_suite(name, 20, 3));
        }
    }
}
