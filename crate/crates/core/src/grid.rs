//! Uniform Cartesian grids on a box and fields living on their interior nodes.
//!
//! Nodes sit at `box_min + (i + 1) * h` for `i = 0..n` along every axis, so the
//! box boundary itself is never stored. A [`Field`] is implicitly zero on the
//! complement of the box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Discretization of the open box `(box_min, box_max)` in dimension 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    box_min: [f64; 2],
    box_max: [f64; 2],
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, box_min: &[f64], box_max: &[f64], n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if box_min.len() != dim || box_max.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "box bounds need {dim} entries, got {} and {}",
                box_min.len(),
                box_max.len()
            )));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("n = {n} < 4")));
        }
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for k in 0..dim {
            let (a, b) = (box_min[k], box_max[k]);
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidGrid(format!("axis {k}: need min < max, got ({a}, {b})")));
            }
            lo[k] = a;
            hi[k] = b;
        }
        Ok(Self { dim, box_min: lo, box_max: hi, n })
    }

    pub fn line(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(1, &[a], &[b], n)
    }

    pub fn rect(min: [f64; 2], max: [f64; 2], n: usize) -> Result<Self> {
        Self::new(2, &min, &max, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_min(&self) -> &[f64] {
        &self.box_min[..self.dim]
    }

    pub fn box_max(&self) -> &[f64] {
        &self.box_max[..self.dim]
    }

    /// Total number of interior nodes, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.box_max[axis] - self.box_min[axis]) / (self.n + 1) as f64
    }

    /// Volume of one grid cell, the `h^N` quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing(k)).product()
    }

    /// Lebesgue measure of the box.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|k| self.box_max[k] - self.box_min[k]).product()
    }

    /// Per-axis node indices of flat node `k` (the second entry is 0 in 1D).
    pub fn multi_index(&self, k: usize) -> [usize; 2] {
        [k % self.n, k / self.n]
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        idx[0] + self.n * idx[1]
    }

    /// Coordinates of flat node `k`; unused axes are 0.
    pub fn coord(&self, k: usize) -> [f64; 2] {
        let idx = self.multi_index(k);
        let mut x = [0.0; 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.box_min[a] + (idx[a] + 1) as f64 * self.spacing(a);
        }
        x
    }

    pub fn center(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        for (a, ca) in c.iter_mut().enumerate().take(self.dim) {
            *ca = 0.5 * (self.box_min[a] + self.box_max[a]);
        }
        c
    }

    /// Node obtained by reflecting `k` through the box center.
    pub fn reflect(&self, k: usize) -> usize {
        let [i, j] = self.multi_index(k);
        let last = self.n - 1;
        if self.dim == 1 {
            last - i
        } else {
            self.flat_index([last - i, last - j])
        }
    }
}

/// Real values on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.coord(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node-wise map. The result is re-validated for finiteness.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.grid, values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Discrete `L^m(Ω)` norm, `(Σ |u_i|^m h^N)^{1/m}`, or the max norm for `m = ∞`.
pub fn lp_norm(u: &Field, m: f64) -> Result<f64> {
    lp_norm_slice(u.values(), u.grid().cell_volume(), m)
}

pub(crate) fn lp_norm_slice(values: &[f64], cell: f64, m: f64) -> Result<f64> {
    if m.is_nan() || m < 1.0 {
        return Err(Error::InvalidExponent(m));
    }
    if m == f64::INFINITY {
        return Ok(values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs())));
    }
    // Scale by the max entry so that large exponents neither overflow nor underflow.
    let top = values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = if m == 2.0 {
        values.iter().map(|v| (v / top) * (v / top)).sum()
    } else {
        values.iter().map(|v| (v.abs() / top).powf(m)).sum()
    };
    Ok(top * (sum * cell).powf(1.0 / m))
}

/// `Σ |u_i|^m h^N`, i.e. `‖u‖_m^m` without the root.
pub(crate) fn power_integral(values: &[f64], cell: f64, m: f64) -> f64 {
    let sum: f64 = if m == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(m)).sum()
    };
    sum * cell
}

/// Initial-data builders.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Zero,
    /// `A · ∏ cos(π (x_k − c_k) / L_k)`, vanishing on the box boundary.
    Bump { amplitude: f64 },
    /// `A` on the central half of the box, zero elsewhere.
    Indicator { amplitude: f64 },
    /// Independent uniform values in `[-A, A]`.
    Random { amplitude: f64, seed: u64 },
}

impl InitialKind {
    /// Parses `zero`, `bump`, `indicator` or `random`.
    pub fn parse(name: &str, amplitude: f64, seed: u64) -> Result<Self> {
        match name {
            "zero" => Ok(Self::Zero),
            "bump" => Ok(Self::Bump { amplitude }),
            "indicator" => Ok(Self::Indicator { amplitude }),
            "random" => Ok(Self::Random { amplitude, seed }),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

pub fn make_initial_data(kind: &InitialKind, grid: &GridSpec) -> Result<Field> {
    let dim = grid.dim();
    let c = grid.center();
    match *kind {
        InitialKind::Zero => Ok(Field::zeros(*grid)),
        InitialKind::Bump { amplitude } => Field::from_fn(*grid, |x| {
            let mut v = amplitude;
            for k in 0..dim {
                let len = grid.box_max()[k] - grid.box_min()[k];
                v *= (std::f64::consts::PI * (x[k] - c[k]) / len).cos().max(0.0);
            }
            v
        }),
        InitialKind::Indicator { amplitude } => Field::from_fn(*grid, |x| {
            let inside = (0..dim).all(|k| {
                let len = grid.box_max()[k] - grid.box_min()[k];
                (x[k] - c[k]).abs() <= 0.25 * len
            });
            if inside {
                amplitude
            } else {
                0.0
            }
        }),
        InitialKind::Random { amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..grid.len()).map(|_| amplitude * rng.gen_range(-1.0..=1.0)).collect();
            Field::new(*grid, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> GridSpec {
        GridSpec::line(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::line(1.0, 0.0, 8).is_err());
        assert!(GridSpec::line(0.0, 1.0, 3).is_err());
        assert!(GridSpec::new(3, &[0.0; 3], &[1.0; 3], 8).is_err());
        assert!(GridSpec::new(2, &[0.0], &[1.0], 8).is_err());
    }

    #[test]
    fn nodes_exclude_the_boundary() {
        let g = GridSpec::line(-1.0, 1.0, 9);
        let g = g.unwrap();
        assert_eq!(g.spacing(0), 0.2);
        assert!((g.coord(0)[0] + 0.8).abs() < 1e-15);
        assert!((g.coord(8)[0] - 0.8).abs() < 1e-15);
        let r = GridSpec::rect([0.0, 0.0], [2.0, 1.0], 4).unwrap();
        assert_eq!(r.len(), 16);
        assert!((r.cell_volume() - 0.4 * 0.2).abs() < 1e-15);
        assert_eq!(r.reflect(0), 15);
        assert_eq!(r.reflect(r.flat_index([1, 2])), r.flat_index([2, 1]));
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = line(4);
        assert_eq!(Field::new(g, vec![0.0, f64::NAN, 0.0, 0.0]), Err(Error::NonFinite(1)));
        assert!(matches!(Field::new(g, vec![0.0; 3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn norms_of_zero_and_constant_fields() {
        let g = GridSpec::line(0.0, 2.0, 99).unwrap();
        let z = Field::zeros(g);
        for m in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(lp_norm(&z, m).unwrap(), 0.0);
        }
        // Interior-node quadrature of a constant covers n·h = |Ω|·n/(n+1).
        let c = Field::new(g, vec![-3.0; 99]).unwrap();
        let quad_measure = 99.0 * g.cell_volume();
        let expected = 3.0 * quad_measure.sqrt();
        assert!((lp_norm(&c, 2.0).unwrap() - expected).abs() <= 1e-12);
        assert_eq!(lp_norm(&c, f64::INFINITY).unwrap(), 3.0);
        assert!(lp_norm(&c, 0.5).is_err());
    }

    #[test]
    fn norm_is_homogeneous() {
        let g = line(40);
        let u = make_initial_data(&InitialKind::Random { amplitude: 2.0, seed: 7 }, &g).unwrap();
        for m in [1.0, 2.0, 3.0, 7.5, f64::INFINITY] {
            let a = lp_norm(&u.scaled(-2.5), m).unwrap();
            let b = 2.5 * lp_norm(&u, m).unwrap();
            assert!((a - b).abs() <= 1e-13 * b, "m = {m}");
        }
    }

    #[test]
    fn large_exponent_approaches_sup_norm() {
        let g = line(63);
        let u = make_initial_data(&InitialKind::Bump { amplitude: 1.0 }, &g).unwrap();
        let sup = lp_norm(&u, f64::INFINITY).unwrap();
        let l64 = lp_norm(&u, 64.0).unwrap();
        assert!((sup - l64).abs() <= 0.05 * sup);
    }

    #[test]
    fn bump_builders() {
        let g = line(33);
        let z = make_initial_data(&InitialKind::Zero, &g).unwrap();
        assert!(z.is_zero());
        let b1 = make_initial_data(&InitialKind::Bump { amplitude: 1.0 }, &g).unwrap();
        let b2 = make_initial_data(&InitialKind::Bump { amplitude: 2.0 }, &g).unwrap();
        assert_eq!(b1.values()[16], 1.0);
        assert_eq!(lp_norm(&b1, f64::INFINITY).unwrap(), 1.0);
        for (x, y) in b1.values().iter().zip(b2.values()) {
            assert_eq!(2.0 * x, *y);
        }
        let sq = GridSpec::rect([0.0, 0.0], [1.0, 1.0], 9).unwrap();
        let b = make_initial_data(&InitialKind::Bump { amplitude: 1.0 }, &sq).unwrap();
        assert!((b.values()[sq.flat_index([4, 4])] - 1.0).abs() < 1e-15);
        assert!(InitialKind::parse("gaussian", 1.0, 0).is_err());
    }

    #[test]
    fn random_data_is_seeded() {
        let g = line(16);
        let a = make_initial_data(&InitialKind::Random { amplitude: 1.0, seed: 3 }, &g).unwrap();
        let b = make_initial_data(&InitialKind::Random { amplitude: 1.0, seed: 3 }, &g).unwrap();
        let c = make_initial_data(&InitialKind::Random { amplitude: 1.0, seed: 4 }, &g).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
