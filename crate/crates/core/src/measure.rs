//! Probability measures and functions on uniform 1D grids (and their 2-fold products).
//!
//! A measure carries its own quadrature: every integral is a weighted sum over
//! the grid points, never a re-integration of a density.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a normalized measure.
pub const MASS_TOL: f64 = 1e-12;

/// Uniform grid `lo, lo + h, …, hi` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let g = Grid1D { lo, hi, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {}", self.n)));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidGrid(format!(
                "need finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]x{}", self.lo, self.hi, self.n)
    }
}

/// Density profiles for [`discretize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    ExpPower {
        p: f64,
    },
    Uniform {},
    /// Unnormalized values at the grid points.
    Custom {
        values: Vec<f64>,
    },
}

/// JSON measure spec: `{grid: {lo, hi, n}, density: {kind, params}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub grid: Grid1D,
    pub density: Density,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<GridMeasure> {
        self.grid.validate()?;
        discretize(&self.density, &self.grid)
    }
}

/// A probability measure on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    grid: Grid1D,
    weights: Vec<f64>,
}

impl GridMeasure {
    /// Normalizes nonnegative finite weights into a probability measure.
    pub fn new(grid: Grid1D, weights: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if weights.len() != grid.n {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights, got {}",
                grid.n,
                weights.len()
            )));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value < 0.0 {
                return Err(Error::Negative { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroDensity);
        }
        Ok(GridMeasure {
            grid,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Weights from unnormalized log-weights (`-inf` allowed), max-shifted.
    pub fn from_log_weights(grid: Grid1D, log_weights: &[f64]) -> Result<Self> {
        let top = log_weights
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
            .fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::ZeroDensity);
        }
        let weights = log_weights.iter().map(|&l| (l - top).exp()).collect();
        GridMeasure::new(grid, weights)
    }

    /// Dirac mass at grid index `i`.
    pub fn dirac(grid: Grid1D, i: usize) -> Result<Self> {
        let mut w = vec![0.0; grid.n];
        *w.get_mut(i)
            .ok_or_else(|| Error::InvalidParameter(format!("index {i} outside grid {grid}")))? = 1.0;
        GridMeasure::new(grid, w)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total_mass() - 1.0).abs() <= tol
    }

    pub fn expect(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.grid.point(i))
            .sum()
    }

    /// Mass on the outer 1% of grid points at each end (at least one point each).
    pub fn boundary_mass(&self) -> f64 {
        boundary_mass(&self.weights)
    }

    pub fn total_variation(&self, other: &GridMeasure) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(0.5
            * self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,weight\n");
        for (i, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("{:e},{:e}\n", self.grid.point(i), w));
        }
        out
    }
}

pub(crate) fn boundary_mass(weights: &[f64]) -> f64 {
    let n = weights.len();
    let k = (n / 100).max(1).min(n / 2);
    weights[..k].iter().sum::<f64>() + weights[n - k..].iter().sum::<f64>()
}

/// A real function sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.n,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid1D, f: F) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        GridFunction::new(grid, values)
    }

    pub fn constant(grid: Grid1D, c: f64) -> Result<Self> {
        GridFunction::new(grid, vec![c; grid.n])
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<GridFunction> {
        GridFunction::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn neg(&self) -> GridFunction {
        self.scale(-1.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:e},{:e}\n", self.grid.point(i), v));
        }
        out
    }

    /// Reads `point,value` rows (header optional) on a uniform grid.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (a, b) = match (parts.next(), parts.next()) {
                (Some(a), Some(b)) => (a.trim(), b.trim()),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "line {}: expected `point,value`",
                        lineno + 1
                    )))
                }
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(v)) => {
                    xs.push(x);
                    vs.push(v);
                }
                _ if lineno == 0 => continue,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "line {}: cannot parse `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        if xs.len() < 3 {
            return Err(Error::InvalidGrid("need at least 3 rows".into()));
        }
        let grid = Grid1D::new(xs[0], xs[xs.len() - 1], xs.len())?;
        let h = grid.spacing();
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.point(i)).abs() > 1e-6 * h {
                return Err(Error::InvalidGrid(format!("row {} is not on a uniform grid", i + 1)));
            }
        }
        GridFunction::new(grid, vs)
    }
}

/// Product of one or two grid measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    factors: Vec<GridMeasure>,
}

impl ProductMeasure {
    pub fn new(factors: Vec<GridMeasure>) -> Result<Self> {
        if factors.is_empty() || factors.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "product measures support 1 or 2 factors, got {}",
                factors.len()
            )));
        }
        Ok(ProductMeasure { factors })
    }

    pub fn power(mu: &GridMeasure, n: usize) -> Result<Self> {
        ProductMeasure::new(vec![mu.clone(); n])
    }

    pub fn factors(&self) -> &[GridMeasure] {
        &self.factors
    }

    pub fn dims(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.grid().n).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat (row-major) index.
    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        match self.factors.len() {
            1 => vec![flat],
            _ => {
                let m = self.factors[1].grid().n;
                vec![flat / m, flat % m]
            }
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .zip(&self.factors)
            .map(|(i, f)| f.grid().point(i))
            .collect()
    }

    /// Joint weights in row-major order.
    pub fn joint_weights(&self) -> Vec<f64> {
        match self.factors.len() {
            1 => self.factors[0].weights().to_vec(),
            _ => {
                let (a, b) = (self.factors[0].weights(), self.factors[1].weights());
                a.iter().flat_map(|wa| b.iter().map(move |wb| wa * wb)).collect()
            }
        }
    }
}

/// A probability measure on a 2D tensor grid, row-major. Unlike
/// [`ProductMeasure`] its weights need not factorize.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMeasure {
    grids: [Grid1D; 2],
    weights: Vec<f64>,
}

impl PlaneMeasure {
    pub fn new(grids: [Grid1D; 2], weights: Vec<f64>) -> Result<Self> {
        let tmp = GridMeasure::new(
            Grid1D {
                lo: 0.0,
                hi: 1.0,
                n: grids[0].n * grids[1].n,
            },
            weights,
        )?;
        Ok(PlaneMeasure {
            grids,
            weights: tmp.weights,
        })
    }

    pub fn from_product(mu: &ProductMeasure) -> Result<Self> {
        if mu.dims() != 2 {
            return Err(Error::InvalidParameter("expected a 2-fold product".into()));
        }
        PlaneMeasure::new([*mu.factors[0].grid(), *mu.factors[1].grid()], mu.joint_weights())
    }

    pub fn grids(&self) -> &[Grid1D; 2] {
        &self.grids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, flat: usize) -> [f64; 2] {
        let m = self.grids[1].n;
        [self.grids[0].point(flat / m), self.grids[1].point(flat % m)]
    }
}

/// A function on the grid of a [`ProductMeasure`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFunction {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl ProductFunction {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if values.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} values, got {}",
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ProductFunction { shape, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(mu: &ProductMeasure, f: F) -> Result<Self> {
        let values = (0..mu.len()).map(|k| f(&mu.point(k))).collect();
        ProductFunction::new(mu.shape(), values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Weights proportional to the density at the grid points.
pub fn discretize(density: &Density, grid: &Grid1D) -> Result<GridMeasure> {
    grid.validate()?;
    let xs = grid.points();
    match density {
        Density::Gaussian { mean, sd } => {
            if !(*sd > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian sd must be positive, got {sd}"
                )));
            }
            let logw: Vec<f64> = xs.iter().map(|x| -0.5 * ((x - mean) / sd).powi(2)).collect();
            GridMeasure::from_log_weights(*grid, &logw)
        }
        Density::ExpPower { p } => {
            if !(*p > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "exp_power exponent must be positive, got {p}"
                )));
            }
            let logw: Vec<f64> = xs.iter().map(|x| -x.abs().powf(*p)).collect();
            GridMeasure::from_log_weights(*grid, &logw)
        }
        Density::Uniform {} => GridMeasure::new(*grid, vec![1.0; grid.n]),
        Density::Custom { values } => GridMeasure::new(*grid, values.clone()),
    }
}

/// `dν = e^f dμ / ∫e^f dμ`.
pub fn tilt(mu: &GridMeasure, f: &GridFunction) -> Result<GridMeasure> {
    mu.grid.check_same(&f.grid)?;
    let logw: Vec<f64> = mu
        .weights
        .iter()
        .zip(&f.values)
        .map(|(&w, &v)| if w > 0.0 { w.ln() + v } else { f64::NEG_INFINITY })
        .collect();
    GridMeasure::from_log_weights(mu.grid, &logw)
}

/// `H(ν|μ) = Σ ν log(ν/μ)`, `+∞` when ν charges a μ-null point.
pub fn relative_entropy(nu: &GridMeasure, mu: &GridMeasure) -> Result<f64> {
    nu.grid.check_same(&mu.grid)?;
    Ok(relative_entropy_weights(&nu.weights, &mu.weights))
}

pub(crate) fn relative_entropy_weights(nu: &[f64], mu: &[f64]) -> f64 {
    let mut h = 0.0;
    for (&p, &q) in nu.iter().zip(mu) {
        if p > 0.0 {
            if q <= 0.0 {
                return f64::INFINITY;
            }
            h += p * (p / q).ln();
        }
    }
    h.max(0.0)
}

/// `Ent_μ(g) = ∫g log g dμ − ∫g dμ · log ∫g dμ` for `g ≥ 0`.
pub fn entropy_functional(mu: &GridMeasure, g: &GridFunction) -> Result<f64> {
    mu.grid.check_same(&g.grid)?;
    if let Some((index, &value)) = g.values.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::Negative { index, value });
    }
    let mass: f64 = mu.expect(&g.values);
    if mass <= 0.0 {
        return Ok(0.0);
    }
    let glogg: f64 = mu
        .weights
        .iter()
        .zip(&g.values)
        .map(|(&w, &v)| if v > 0.0 { w * v * v.ln() } else { 0.0 })
        .sum();
    Ok((glogg - mass * mass.ln()).max(0.0))
}

/// `Ent_μ(e^f)`, evaluated through the max-shift `Ent(e^f) = e^M Ent(e^{f−M})`.
pub fn ent_exp(mu: &GridMeasure, f: &GridFunction) -> Result<f64> {
    mu.grid.check_same(&f.grid)?;
    Ok(ent_exp_weights(&mu.weights, &f.values))
}

pub(crate) fn ent_exp_weights(weights: &[f64], f: &[f64]) -> f64 {
    let (scaled, top) = ent_exp_shifted(weights, f);
    scaled * top.exp()
}

/// `(Ent_μ(e^{f−M}), M)` with `M = max f` on the support.
pub(crate) fn ent_exp_shifted(weights: &[f64], f: &[f64]) -> (f64, f64) {
    let top = support_max(weights, f);
    let mut z = 0.0;
    let mut fz = 0.0;
    for (&w, &v) in weights.iter().zip(f) {
        if w > 0.0 {
            let e = (v - top).exp();
            z += w * e;
            fz += w * e * (v - top);
        }
    }
    ((fz - z * z.ln()).max(0.0), top)
}

pub(crate) fn support_max(weights: &[f64], f: &[f64]) -> f64 {
    weights
        .iter()
        .zip(f)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `∫ g e^{f} dμ / e^M` together with `M = max f`, for ratios against [`ent_exp_shifted`].
pub(crate) fn weighted_exp_shifted(weights: &[f64], f: &[f64], g: &[f64], top: f64) -> f64 {
    weights
        .iter()
        .zip(f)
        .zip(g)
        .filter(|((&w, _), _)| w > 0.0)
        .map(|((&w, &v), &gv)| if gv == 0.0 { 0.0 } else { w * gv * (v - top).exp() })
        .sum()
}

/// Central differences inside, one-sided first order at the two ends.
pub fn gradient(f: &GridFunction) -> GridFunction {
    let v = &f.values;
    let n = v.len();
    let h = f.grid.spacing();
    let mut g = vec![0.0; n];
    g[0] = (v[1] - v[0]) / h;
    g[n - 1] = (v[n - 1] - v[n - 2]) / h;
    for i in 1..n - 1 {
        g[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    GridFunction {
        grid: f.grid,
        values: g,
    }
}

pub fn expectation(mu: &GridMeasure, f: &GridFunction) -> Result<f64> {
    mu.grid.check_same(&f.grid)?;
    Ok(mu.expect(&f.values))
}

/// `Var_μ(f)`, computed around the mean after shifting by `f(x₀)` so that
/// constants give exactly zero.
pub fn variance(mu: &GridMeasure, f: &GridFunction) -> Result<f64> {
    mu.grid.check_same(&f.grid)?;
    let base = f.values[0];
    let m: f64 = mu.weights.iter().zip(&f.values).map(|(w, v)| w * (v - base)).sum();
    Ok(mu
        .weights
        .iter()
        .zip(&f.values)
        .map(|(w, v)| w * (v - base - m) * (v - base - m))
        .sum::<f64>()
        .max(0.0))
}

/// `∫ e^{λ(f − ∫f dμ)} dμ`.
pub fn laplace(mu: &GridMeasure, f: &GridFunction, lambda: f64) -> Result<f64> {
    Ok(log_laplace(mu, f, lambda)?.exp())
}

/// `log ∫ e^{λ(f − ∫f dμ)} dμ`, max-shifted.
pub fn log_laplace(mu: &GridMeasure, f: &GridFunction, lambda: f64) -> Result<f64> {
    let m = expectation(mu, f)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let exps: Vec<f64> = f.values.iter().map(|v| lambda * (v - m)).collect();
    let top = support_max(&mu.weights, &exps);
    let s: f64 = mu
        .weights
        .iter()
        .zip(&exps)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &e)| w * (e - top).exp())
        .sum();
    Ok(top + s.ln())
}

/// `sup f − inf f`.
pub fn osc(f: &GridFunction) -> f64 {
    f.max() - f.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_grid() -> Grid1D {
        Grid1D::new(-8.0, 8.0, 1601).unwrap()
    }

    fn gaussian(m: f64) -> GridMeasure {
        discretize(&Density::Gaussian { mean: m, sd: 1.0 }, &std_grid()).unwrap()
    }

    fn two_point() -> Grid1D {
        Grid1D::new(0.0, 1.0, 3).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 1.0, 2).is_err());
        assert!(Grid1D::new(1.0, 1.0, 5).is_err());
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.spacing(), 0.5);
    }

    #[test]
    fn discretize_examples() {
        let mu = gaussian(0.0);
        assert!(mu.is_normalized(1e-12));
        assert!(mu.mean().abs() < 1e-10);
        let ep = discretize(&Density::ExpPower { p: 1.5 }, &Grid1D::new(-12.0, 12.0, 2401).unwrap()).unwrap();
        assert!(ep.is_normalized(1e-12));
        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        let u = discretize(&Density::Custom { values: vec![2.5; 101] }, &g).unwrap();
        assert!(u.weights().iter().all(|&w| (w - 1.0 / 101.0).abs() < 1e-16));
        assert_eq!(
            discretize(&Density::Custom { values: vec![0.0; 101] }, &g),
            Err(Error::ZeroDensity)
        );
    }

    #[test]
    fn tilt_examples() {
        let mu = gaussian(0.0);
        let c = GridFunction::constant(*mu.grid(), 3.7).unwrap();
        assert!(tilt(&mu, &c).unwrap().total_variation(&mu).unwrap() < 1e-15);

        let m = 0.5;
        let f = GridFunction::from_fn(std_grid(), |x| m * x - m * m / 2.0).unwrap();
        let tv = tilt(&mu, &f).unwrap().total_variation(&gaussian(m)).unwrap();
        assert!(tv < 1e-6, "tv = {tv}");

        // Two atoms at 0 and 1 with the middle point empty.
        let mu2 = GridMeasure::new(two_point(), vec![0.5, 0.0, 0.5]).unwrap();
        let f2 = GridFunction::new(two_point(), vec![3f64.ln(), 100.0, 0.0]).unwrap();
        let nu = tilt(&mu2, &f2).unwrap();
        assert!((nu.weights()[0] - 0.75).abs() < 1e-15);
        assert_eq!(nu.weights()[1], 0.0);
        assert!((nu.weights()[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_examples() {
        let mu = gaussian(0.0);
        assert_eq!(relative_entropy(&mu, &mu).unwrap(), 0.0);

        let mu2 = GridMeasure::new(two_point(), vec![0.5, 0.0, 0.5]).unwrap();
        let nu2 = GridMeasure::new(two_point(), vec![0.75, 0.0, 0.25]).unwrap();
        assert!((relative_entropy(&nu2, &mu2).unwrap() - 0.130_812_035_941_136_97).abs() < 1e-15);

        for m in [0.1, 0.3, 0.5, 0.75, 1.0] {
            let h = relative_entropy(&gaussian(m), &mu).unwrap();
            assert!((h - m * m / 2.0).abs() < 1e-4, "m = {m}: {h}");
        }

        let off = GridMeasure::new(two_point(), vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(relative_entropy(&off, &mu2).unwrap(), f64::INFINITY);
        let other = discretize(&Density::Uniform {}, &Grid1D::new(0.0, 2.0, 3).unwrap()).unwrap();
        assert!(matches!(
            relative_entropy(&other, &mu2),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let mu = gaussian(0.0);
        let c = GridFunction::constant(std_grid(), 2.0).unwrap();
        assert!(entropy_functional(&mu, &c).unwrap().abs() < 1e-14);

        let m = 0.5;
        let f = GridFunction::from_fn(std_grid(), |x| m * x - m * m / 2.0).unwrap();
        let g = f.map(f64::exp).unwrap();
        let z = expectation(&mu, &g).unwrap();
        let rhs = z * relative_entropy(&tilt(&mu, &f).unwrap(), &mu).unwrap();
        assert!((entropy_functional(&mu, &g).unwrap() - rhs).abs() < 1e-10);
        assert!((ent_exp(&mu, &f).unwrap() - rhs).abs() < 1e-10);

        let mu2 = GridMeasure::new(two_point(), vec![0.5, 0.0, 0.5]).unwrap();
        let g2 = GridFunction::new(two_point(), vec![3.0, 7.0, 1.0]).unwrap();
        assert!((entropy_functional(&mu2, &g2).unwrap() - 0.261_624_071_882_274).abs() < 1e-14);

        let neg = GridFunction::new(two_point(), vec![1.0, -1.0, 1.0]).unwrap();
        assert!(matches!(
            entropy_functional(&mu2, &neg),
            Err(Error::Negative { index: 1, .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let g = Grid1D::new(-2.0, 3.0, 51).unwrap();
        let lin = gradient(&GridFunction::from_fn(g, |x| x).unwrap());
        assert!(lin.values().iter().all(|d| (d - 1.0).abs() < 1e-12));

        let quad = gradient(&GridFunction::from_fn(g, |x| x * x / 2.0).unwrap());
        for i in 1..50 {
            assert!((quad.values()[i] - g.point(i)).abs() < 1e-12);
        }

        let fine = Grid1D::new(-3.0, 3.0, 601).unwrap();
        let s = gradient(&GridFunction::from_fn(fine, f64::sin).unwrap());
        let err = (1..600)
            .map(|i| (s.values()[i] - fine.point(i).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-5, "{err}");
    }

    #[test]
    fn moments() {
        let mu = gaussian(0.0);
        let c = GridFunction::constant(std_grid(), 1.0).unwrap();
        assert_eq!(variance(&mu, &c).unwrap(), 0.0);
        let x = GridFunction::from_fn(std_grid(), |x| x).unwrap();
        assert_eq!(laplace(&mu, &x, 0.0).unwrap(), 1.0);
        assert!((laplace(&mu, &x, 1.0).unwrap() - 0.5f64.exp()).abs() < 1e-6);
        assert!((osc(&GridFunction::from_fn(std_grid(), |x| x.sin()).unwrap()) - 2.0).abs() < 1e-4);
    }

    #[test]
    fn csv_round_trip() {
        let f = GridFunction::from_fn(Grid1D::new(-1.0, 1.0, 11).unwrap(), |x| x * x).unwrap();
        let back = GridFunction::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back.grid().n, 11);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(GridFunction::from_csv("point,value\n0,1\n0.1,1\n0.5,1\n").is_err());
    }

    #[test]
    fn measure_spec_json() {
        let spec: MeasureSpec = serde_json::from_str(
            r#"{"grid":{"lo":-8,"hi":8,"n":1601},"density":{"kind":"gaussian","params":{"mean":0,"sd":1}}}"#,
        )
        .unwrap();
        assert_eq!(spec.build().unwrap(), gaussian(0.0));
        let u: MeasureSpec =
            serde_json::from_str(r#"{"grid":{"lo":0,"hi":1,"n":5},"density":{"kind":"uniform","params":{}}}"#).unwrap();
        assert!(u.build().unwrap().is_normalized(1e-15));
        assert!(serde_json::from_str::<MeasureSpec>(
            r#"{"grid":{"lo":0,"hi":1,"n":5,"extra":1},"density":{"kind":"uniform","params":{}}}"#
        )
        .is_err());
    }

    #[test]
    fn product_layout() {
        let g = Grid1D::new(0.0, 2.0, 3).unwrap();
        let a = GridMeasure::new(g, vec![1.0, 1.0, 2.0]).unwrap();
        let p = ProductMeasure::power(&a, 2).unwrap();
        assert_eq!(p.len(), 9);
        assert_eq!(p.point(5), vec![1.0, 2.0]);
        let w = p.joint_weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[8] - 0.25).abs() < 1e-15);
        assert!(ProductMeasure::power(&a, 3).is_err());
    }
}
