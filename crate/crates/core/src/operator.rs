//! Quadrature of the fractional p-Laplacian and its energy forms.
//!
//! Every node interacts with every other node through the weight
//! `h^N / |x_i − x_j|^{N+sp}`; the diagonal is omitted (truncation radius
//! `h/2`) and the zero exterior is accounted for exactly by the per-node tail
//! weight `∫_{ℝᴺ \ Ω} |x_i − y|^{−(N+sp)} dy`. With this split the discrete
//! operator and the discrete seminorm satisfy the duality identity
//! `Σ_i (Au)_i u_i h^N = |||u|||^p` exactly in exact arithmetic.

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::params::ModelParams;
use crate::quadrature::tail_weights;

/// `C_{N,p,s} = s 2^{2s} Γ((ps + p + N − 2)/2) / (π^{N/2} Γ(1 − s))`.
pub fn normalization_constant(dim: usize, p: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::ParamDomain(format!("s = {s} not in (0, 1)")));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::ParamDomain(format!("dimension {dim} not in {{1, 2}}")));
    }
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::ParamDomain(format!("p = {p} < 2")));
    }
    let n = dim as f64;
    let num = s * 4f64.powf(s) * gamma((p * s + p + n - 2.0) / 2.0);
    let den = std::f64::consts::PI.powf(n / 2.0) * gamma(1.0 - s);
    Ok(num / den)
}

/// `|t|^{p−2} t`.
#[inline(always)]
pub fn signed_power(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 1.0).copysign(t)
    }
}

#[inline(always)]
fn abs_power(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else {
        t.abs().powf(p)
    }
}

/// Precomputed geometry for one `(grid, s, p)` triple.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    grid: GridSpec,
    s: f64,
    p: f64,
    c_nps: f64,
    tail: Vec<f64>,
    /// `h^N / |offset|^{N+sp}` indexed by the per-axis absolute index offset;
    /// the kernel only depends on it, so one table serves every pair.
    offsets: Vec<f64>,
}

impl OperatorContext {
    pub fn new(grid: &GridSpec, params: &ModelParams) -> Result<Self> {
        Self::with_exponents(grid, params.s, params.p)
    }

    pub fn with_exponents(grid: &GridSpec, s: f64, p: f64) -> Result<Self> {
        let c_nps = normalization_constant(grid.dim(), p, s)?;
        let sp = s * p;
        let tail = tail_weights(grid, sp);
        let n = grid.n();
        let cell = grid.cell_volume();
        let expo = (grid.dim() as f64 + sp) / 2.0;
        let (hx, hy) = (grid.spacing(0), if grid.dim() == 2 { grid.spacing(1) } else { 0.0 });
        let rows = if grid.dim() == 2 { n } else { 1 };
        let mut offsets = vec![0.0; n * rows];
        for dj in 0..rows {
            for di in 0..n {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (dx, dy) = (di as f64 * hx, dj as f64 * hy);
                offsets[di + n * dj] = cell / (dx * dx + dy * dy).powf(expo);
            }
        }
        debug_assert!(tail.iter().all(|w| w.is_finite() && *w > 0.0));
        Ok(Self { grid: *grid, s, p, c_nps, tail, offsets })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn c_nps(&self) -> f64 {
        self.c_nps
    }

    pub fn tail_weights(&self) -> &[f64] {
        &self.tail
    }

    /// Pair weight `h^N / |x_i − x_j|^{N+sp}` (0 on the diagonal).
    #[inline(always)]
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        let n = self.grid.n();
        if self.grid.dim() == 1 {
            self.offsets[i.abs_diff(j)]
        } else {
            let (ix, iy) = (i % n, i / n);
            let (jx, jy) = (j % n, j / n);
            self.offsets[ix.abs_diff(jx) + n * iy.abs_diff(jy)]
        }
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Row `i` of the operator applied to raw node values.
    #[inline]
    fn apply_row(&self, u: &[f64], i: usize) -> f64 {
        let p = self.p;
        let ui = u[i];
        let mut acc = 0.0;
        if self.grid.dim() == 1 {
            for (j, &uj) in u.iter().enumerate() {
                acc += signed_power(ui - uj, p) * self.offsets[i.abs_diff(j)];
            }
        } else {
            let n = self.grid.n();
            let (ix, iy) = (i % n, i / n);
            for jy in 0..n {
                let row = &self.offsets[n * iy.abs_diff(jy)..];
                let urow = &u[n * jy..n * (jy + 1)];
                for (jx, &uj) in urow.iter().enumerate() {
                    acc += signed_power(ui - uj, p) * row[ix.abs_diff(jx)];
                }
            }
        }
        // The diagonal contributes signed_power(0)·0 = 0.
        self.c_nps * (acc + signed_power(ui, p) * self.tail[i])
    }

    /// Operator on raw node values; parallel over output nodes.
    pub fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.grid.len());
        (0..u.len()).into_par_iter().map(|i| self.apply_row(u, i)).collect()
    }

    /// `|||u|||^p` from raw node values.
    pub fn seminorm_values(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.grid.len());
        let p = self.p;
        let rows: Vec<f64> = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let ui = u[i];
                let mut acc = 0.0;
                for (j, &uj) in u.iter().enumerate() {
                    acc += abs_power(ui - uj, p) * self.pair_weight(i, j);
                }
                0.5 * acc + abs_power(ui, p) * self.tail[i]
            })
            .collect();
        self.c_nps * self.grid.cell_volume() * rows.iter().sum::<f64>()
    }
}

/// Discrete fractional p-Laplacian of `u` with zero exterior.
pub fn apply_flap(u: &Field, ctx: &OperatorContext) -> Result<Field> {
    ctx.check(u)?;
    Field::new(ctx.grid, ctx.apply_values(u.values()))
}

/// Discrete Gagliardo energy `|||u|||^p` (the p-th power of the seminorm).
pub fn seminorm_p(u: &Field, ctx: &OperatorContext) -> Result<f64> {
    ctx.check(u)?;
    Ok(ctx.seminorm_values(u.values()))
}

/// User-supplied symmetric positive kernel `K(i, j)` over node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    len: usize,
    values: Vec<f64>,
}

impl KernelTable {
    /// Row-major `len × len` table; the diagonal is ignored.
    pub fn new(len: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != len * len {
            return Err(Error::InvalidKernel(format!("expected {} entries, got {}", len * len, values.len())));
        }
        for i in 0..len {
            for j in (i + 1)..len {
                let (a, b) = (values[i * len + j], values[j * len + i]);
                if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
                    return Err(Error::InvalidKernel(format!("K({i},{j}) = {a}, K({j},{i}) = {b} not positive")));
                }
                if (a - b).abs() > 1e-12 * a.max(b) {
                    return Err(Error::InvalidKernel(format!("asymmetric at ({i},{j}): {a} vs {b}")));
                }
            }
        }
        Ok(Self { len, values })
    }

    /// Symmetric table from a pair function evaluated for `i < j`.
    pub fn from_fn(len: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; len * len];
        for i in 0..len {
            for j in (i + 1)..len {
                let k = f(i, j);
                values[i * len + j] = k;
                values[j * len + i] = k;
            }
        }
        Self::new(len, values)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len + j]
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Kernel<'a> {
    /// `(C_{N,p,s}/2)|x − y|^{−(N+sp)}`, including the exterior tail.
    Default,
    Table(&'a KernelTable),
}

/// `ℰ(u, v) = ∬ |δu|^{p−2} δu δv K`, with `δw = w(x) − w(y)`.
pub fn dirichlet_form(u: &Field, v: &Field, kernel: Kernel<'_>, ctx: &OperatorContext) -> Result<f64> {
    ctx.check(u)?;
    ctx.check(v)?;
    let (uu, vv) = (u.values(), v.values());
    let p = ctx.p;
    let cell = ctx.grid.cell_volume();
    match kernel {
        Kernel::Default => {
            let rows: Vec<f64> = (0..uu.len())
                .into_par_iter()
                .map(|i| {
                    let mut acc = 0.0;
                    for j in 0..uu.len() {
                        acc += signed_power(uu[i] - uu[j], p) * (vv[i] - vv[j]) * ctx.pair_weight(i, j);
                    }
                    // (C/2)·[acc·h^N + 2 φ(u_i) v_i tail_i] per node, times h^N below.
                    0.5 * acc + signed_power(uu[i], p) * vv[i] * ctx.tail[i]
                })
                .collect();
            Ok(ctx.c_nps * cell * rows.iter().sum::<f64>())
        }
        Kernel::Table(table) => {
            if table.len != uu.len() {
                return Err(Error::InvalidKernel(format!(
                    "table covers {} nodes, field has {}",
                    table.len,
                    uu.len()
                )));
            }
            let rows: Vec<f64> = (0..uu.len())
                .into_par_iter()
                .map(|i| {
                    let mut acc = 0.0;
                    for j in 0..uu.len() {
                        if j != i {
                            acc += signed_power(uu[i] - uu[j], p) * (vv[i] - vv[j]) * table.get(i, j);
                        }
                    }
                    acc
                })
                .collect();
            Ok(cell * cell * rows.iter().sum::<f64>())
        }
    }
}

/// Relative gap `|Σ_i (Au)_i u_i h^N − |||u|||^p| / max(1, |||u|||^p)`.
pub fn duality_identity_gap(u: &Field, ctx: &OperatorContext) -> Result<f64> {
    let au = apply_flap(u, ctx)?;
    let pairing: f64 = au.values().iter().zip(u.values()).map(|(a, b)| a * b).sum::<f64>() * ctx.grid.cell_volume();
    let semi = seminorm_p(u, ctx)?;
    Ok((pairing - semi).abs() / semi.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_initial_data, InitialKind};

    fn ctx_1d(n: usize, s: f64, p: f64) -> OperatorContext {
        OperatorContext::with_exponents(&GridSpec::line(0.0, 1.0, n).unwrap(), s, p).unwrap()
    }

    fn random(grid: &GridSpec, seed: u64) -> Field {
        make_initial_data(&InitialKind::Random { amplitude: 1.0, seed }, grid).unwrap()
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn normalization_constant_values() {
        let c = normalization_constant(1, 2.0, 0.5).unwrap();
        assert!((c - std::f64::consts::FRAC_1_PI).abs() <= 1e-12 * c);
        // mpmath, 40 digits
        let c = normalization_constant(2, 3.0, 0.4).unwrap();
        assert!((c / 0.155781796261242038206315640771874913308 - 1.0).abs() <= 1e-10);
        let c = normalization_constant(1, 3.0, 0.7).unwrap();
        assert!((c / 0.356117432044410654833355715560818233687 - 1.0).abs() <= 1e-10);
        assert!(normalization_constant(1, 2.0, 1e-9).unwrap() < 1e-8);
        assert!(normalization_constant(1, 2.0, 0.0).is_err());
        assert!(normalization_constant(1, 2.0, 1.0).is_err());
    }

    /// Straight double loop over all node pairs, written without the offset table.
    fn brute_force(u: &[f64], grid: &GridSpec, s: f64, p: f64) -> (Vec<f64>, f64) {
        let c = normalization_constant(grid.dim(), p, s).unwrap();
        let h = grid.cell_volume();
        let nd = grid.dim() as f64;
        let tails = tail_weights(grid, s * p);
        let mut out = vec![0.0; u.len()];
        let mut semi = 0.0;
        for i in 0..u.len() {
            let xi = grid.coord(i);
            for j in 0..u.len() {
                if i == j {
                    continue;
                }
                let xj = grid.coord(j);
                let r = ((xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2)).sqrt();
                let k = r.powf(-(nd + s * p));
                let d = u[i] - u[j];
                out[i] += d.abs().powf(p - 2.0) * d * h * k;
                semi += d.abs().powf(p) * h * h * k;
            }
            out[i] += u[i].abs().powf(p - 2.0) * u[i] * tails[i];
            out[i] *= c;
            semi += 2.0 * u[i].abs().powf(p) * h * tails[i];
        }
        (out, 0.5 * c * semi)
    }

    #[test]
    fn matches_brute_force_oracle() {
        for &(s, p) in &[(0.5, 2.0), (0.3, 3.0), (0.8, 2.5)] {
            let ctx = ctx_1d(8, s, p);
            let u = random(ctx.grid(), 11);
            let (oracle, semi) = brute_force(u.values(), ctx.grid(), s, p);
            let au = apply_flap(&u, &ctx).unwrap();
            for (a, b) in au.values().iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
            let sp = seminorm_p(&u, &ctx).unwrap();
            assert!((sp - semi).abs() <= 1e-12 * semi);
        }
        let grid = GridSpec::rect([0.0, 0.0], [1.0, 2.0], 5).unwrap();
        let ctx = OperatorContext::with_exponents(&grid, 0.4, 3.0).unwrap();
        let u = random(&grid, 5);
        let (oracle, semi) = brute_force(u.values(), &grid, 0.4, 3.0);
        let au = apply_flap(&u, &ctx).unwrap();
        for (a, b) in au.values().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        assert!((seminorm_p(&u, &ctx).unwrap() - semi).abs() <= 1e-12 * semi);
    }

    #[test]
    fn zero_field_and_homogeneity() {
        let ctx = ctx_1d(32, 0.6, 3.0);
        let z = Field::zeros(*ctx.grid());
        assert!(apply_flap(&z, &ctx).unwrap().is_zero());
        assert_eq!(seminorm_p(&z, &ctx).unwrap(), 0.0);
        let u = random(ctx.grid(), 2);
        let c: f64 = 2.5;
        let a = apply_flap(&u.scaled(c), &ctx).unwrap();
        let b = apply_flap(&u, &ctx).unwrap();
        let factor = c.abs().powf(1.0) * c; // |c|^{p-2} c with p = 3
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - factor * y).abs() <= 1e-12 * (factor * y).abs().max(1e-300));
        }
        let sa = seminorm_p(&u.scaled(-c), &ctx).unwrap();
        let sb = seminorm_p(&u, &ctx).unwrap();
        assert!((sa - c.powi(3) * sb).abs() <= 1e-12 * sa);
    }

    #[test]
    fn odd_data_gives_odd_output() {
        let ctx = ctx_1d(41, 0.5, 2.5);
        let g = *ctx.grid();
        let u = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x[0]).sin() + (x[0] - 0.5).powi(3)).unwrap();
        let au = apply_flap(&u, &ctx).unwrap();
        for k in 0..g.len() {
            let (a, b) = (au.values()[k], au.values()[g.reflect(k)]);
            assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn reflection_commutes() {
        let grid = GridSpec::rect([0.0, 0.0], [1.0, 1.0], 7).unwrap();
        let ctx = OperatorContext::with_exponents(&grid, 0.7, 2.0).unwrap();
        let u = random(&grid, 9);
        let reflected = Field::new(grid, (0..grid.len()).map(|k| u.values()[grid.reflect(k)]).collect()).unwrap();
        let a = apply_flap(&u, &ctx).unwrap();
        let b = apply_flap(&reflected, &ctx).unwrap();
        for k in 0..grid.len() {
            assert!((a.values()[grid.reflect(k)] - b.values()[k]).abs() <= 1e-12 * a.values()[k].abs().max(1.0));
        }
    }

    #[test]
    fn duality_gap_is_roundoff() {
        let ctx = ctx_1d(64, 0.5, 2.0);
        assert_eq!(duality_identity_gap(&Field::zeros(*ctx.grid()), &ctx).unwrap(), 0.0);
        assert!(duality_identity_gap(&random(ctx.grid(), 1), &ctx).unwrap() <= 1e-10);
        let ctx = ctx_1d(64, 0.7, 3.0);
        let bump = make_initial_data(&InitialKind::Bump { amplitude: 1.0 }, ctx.grid()).unwrap();
        assert!(duality_identity_gap(&bump, &ctx).unwrap() <= 1e-10);
    }

    #[test]
    fn dirichlet_form_properties() {
        let ctx = ctx_1d(16, 0.4, 3.0);
        let g = *ctx.grid();
        let u = random(&g, 3);
        let v1 = random(&g, 4);
        let v2 = random(&g, 5);
        let euu = dirichlet_form(&u, &u, Kernel::Default, &ctx).unwrap();
        let semi = seminorm_p(&u, &ctx).unwrap();
        assert!((euu - semi).abs() <= 1e-12 * semi);
        assert_eq!(dirichlet_form(&u, &Field::zeros(g), Kernel::Default, &ctx).unwrap(), 0.0);
        let (a, b) = (1.7, -0.3);
        let combo = v1.combine(a, &v2, b).unwrap();
        let lhs = dirichlet_form(&u, &combo, Kernel::Default, &ctx).unwrap();
        let rhs = a * dirichlet_form(&u, &v1, Kernel::Default, &ctx).unwrap()
            + b * dirichlet_form(&u, &v2, Kernel::Default, &ctx).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));

        let table = KernelTable::from_fn(g.len(), |i, j| 1.0 + (i + j) as f64).unwrap();
        let t1 = dirichlet_form(&u, &combo, Kernel::Table(&table), &ctx).unwrap();
        let t2 = a * dirichlet_form(&u, &v1, Kernel::Table(&table), &ctx).unwrap()
            + b * dirichlet_form(&u, &v2, Kernel::Table(&table), &ctx).unwrap();
        assert!((t1 - t2).abs() <= 1e-12 * t1.abs().max(1.0));
    }

    #[test]
    fn kernel_tables_are_validated() {
        let mut vals = vec![1.0; 16];
        vals[1] = 2.0;
        assert!(matches!(KernelTable::new(4, vals), Err(Error::InvalidKernel(_))));
        let mut vals = vec![1.0; 16];
        vals[1] = -1.0;
        vals[4] = -1.0;
        assert!(KernelTable::new(4, vals).is_err());
        assert!(KernelTable::new(4, vec![1.0; 15]).is_err());
        assert!(KernelTable::new(4, vec![1.0; 16]).is_ok());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let ctx = ctx_1d(16, 0.5, 2.0);
        let other = Field::zeros(GridSpec::line(0.0, 2.0, 16).unwrap());
        assert_eq!(apply_flap(&other, &ctx), Err(Error::GridMismatch));
        assert!(seminorm_p(&other, &ctx).is_err());
    }
}
