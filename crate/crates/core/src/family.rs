//! Seeded families of test functions and test measures.
//!
//! Every member is drawn from its own ChaCha stream keyed by `(seed, index)`,
//! so member `i` does not depend on how many members are generated or in
//! which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::{tilt, variance, Grid1D, GridFunction, GridMeasure};
use crate::par;
use crate::semigroup::lipschitz_constant;

pub const DEFAULT_FUNCTIONS: usize = 50;
pub const DEFAULT_MEASURES: usize = 100;
/// Oscillation cap for the tilt exponents of the test measures.
pub const MAX_TILT_OSC: f64 = 2.0;
/// Number of leading measures that are pure linear tilts.
pub const LINEAR_TILTS: usize = 12;
/// Tilt shapes vary within `TILT_CORE` standard deviations of the base
/// measure's mean and are constant outside.
pub const TILT_CORE: f64 = 2.0;

const MEASURE_STREAM_OFFSET: u64 = 1 << 32;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `c0 + c1·x + c2·x² + a·sin(ωx + φ) + b·√((x − x0)² + ε²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub amp: f64,
    pub omega: f64,
    pub phase: f64,
    pub kink: f64,
    pub kink_at: f64,
    pub kink_width: f64,
}

impl FunctionSpec {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        FunctionSpec {
            c0: rng.random_range(-1.0..1.0),
            c1: rng.random_range(-1.0..1.0),
            c2: rng.random_range(-0.1..0.1),
            amp: rng.random_range(-1.0..1.0),
            omega: rng.random_range(0.5..3.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            kink: rng.random_range(-1.0..1.0),
            kink_at: rng.random_range(-2.0..2.0),
            kink_width: rng.random_range(0.05..0.5),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.kink_at;
        self.c0
            + self.c1 * x
            + self.c2 * x * x
            + self.amp * (self.omega * x + self.phase).sin()
            + self.kink * (d * d + self.kink_width * self.kink_width).sqrt()
    }

    /// The same function without its affine part.
    pub fn nonlinear(&self) -> Self {
        FunctionSpec {
            c0: 0.0,
            c1: 0.0,
            ..*self
        }
    }

    pub fn on(&self, grid: Grid1D) -> Result<GridFunction> {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}

/// Tilt exponent `s·g(x) + k·h·x` with `g` a nonlinear shape rescaled to
/// oscillation `shape_osc` and `k` a whole number of grid steps.
///
/// Keeping the linear slope on the grid lattice makes the translation part of
/// the tilt an exact grid shift. The shape is read in standardized
/// coordinates `z = (x − center)/scale` and frozen for `|z| > TILT_CORE`, so
/// its oscillation is spent where the base measure carries mass; a shape that
/// only moves in the tails gives a near-translation by less than one grid
/// step, which the grid cannot resolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltSpec {
    pub shape: Option<FunctionSpec>,
    pub shape_osc: f64,
    /// Fraction in `[-1, 1]` of the largest slope the oscillation budget allows.
    pub slope_fraction: f64,
}

impl TiltSpec {
    pub fn exponent(&self, grid: Grid1D, center: f64, scale: f64) -> Result<GridFunction> {
        if !(scale > 0.0 && scale.is_finite() && center.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!(
                "tilt window needs a finite center and positive scale, got {center}, {scale}"
            )));
        }
        let h = grid.spacing();
        let width = grid.hi - grid.lo;
        let mut values = vec![0.0; grid.len()];
        let mut used = 0.0;
        if let Some(shape) = self.shape {
            let g = GridFunction::from_fn(grid, |x| {
                shape.eval(((x - center) / scale).clamp(-TILT_CORE, TILT_CORE))
            })?;
            let (lo, hi) = (g.min(), g.max());
            if hi > lo {
                let s = self.shape_osc / (hi - lo);
                for (v, gv) in values.iter_mut().zip(g.values()) {
                    *v = s * (gv - lo);
                }
                used = self.shape_osc;
            }
        }
        let max_steps = ((MAX_TILT_OSC - used).max(0.0) / (h * width)).floor();
        let steps = (self.slope_fraction * max_steps).round();
        let slope = steps * h;
        for (i, v) in values.iter_mut().enumerate() {
            *v += slope * grid.point(i);
        }
        GridFunction::new(grid, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub seed: u64,
    pub functions: Vec<FunctionSpec>,
    pub tilts: Vec<TiltSpec>,
}

impl TestFamily {
    pub fn new(seed: u64) -> Self {
        Self::with_sizes(seed, DEFAULT_FUNCTIONS, DEFAULT_MEASURES)
    }

    pub fn with_sizes(seed: u64, functions: usize, measures: usize) -> Self {
        let functions = (0..functions as u64)
            .map(|i| FunctionSpec::draw(&mut stream(seed, i)))
            .collect();
        let tilts = (0..measures)
            .map(|i| {
                let mut rng = stream(seed, MEASURE_STREAM_OFFSET + i as u64);
                if i < LINEAR_TILTS {
                    // ±1/6, ±2/6, …, ±1 of the admissible slope range.
                    let k = (i / 2 + 1) as f64 / (LINEAR_TILTS / 2) as f64;
                    TiltSpec {
                        shape: None,
                        shape_osc: 0.0,
                        slope_fraction: if i % 2 == 0 { k } else { -k },
                    }
                } else {
                    TiltSpec {
                        shape: Some(FunctionSpec::draw(&mut rng).nonlinear()),
                        shape_osc: rng.random_range(0.2..1.8),
                        slope_fraction: rng.random_range(-1.0..1.0),
                    }
                }
            })
            .collect();
        TestFamily { seed, functions, tilts }
    }

    pub fn function(&self, i: usize, grid: Grid1D) -> Result<GridFunction> {
        self.functions[i].on(grid)
    }

    pub fn all_functions(&self, grid: Grid1D) -> Result<Vec<GridFunction>> {
        par::map_slice(&self.functions, |f| f.on(grid)).into_iter().collect()
    }

    /// Member `i` divided by its grid Lipschitz constant (so `Lip = 1` on the grid).
    pub fn lipschitz_function(&self, i: usize, grid: Grid1D) -> Result<GridFunction> {
        let f = self.function(i, grid)?;
        let lip = lipschitz_constant(&f);
        Ok(if lip > 0.0 { f.scale(1.0 / lip) } else { f })
    }

    /// Tilts of `mu` by every tilt exponent, in index order, with the shape
    /// window placed at the mean and standard deviation of `mu`.
    pub fn measures(&self, mu: &GridMeasure) -> Result<Vec<GridMeasure>> {
        let grid = *mu.grid();
        let center = mu.mean();
        let x = GridFunction::from_fn(grid, |x| x)?;
        let scale = variance(mu, &x)?.sqrt();
        par::map_slice(&self.tilts, |t| tilt(mu, &t.exponent(grid, center, scale)?))
            .into_iter()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{discretize, osc, Density};

    #[test]
    fn deterministic_and_prefix_stable() {
        let a = TestFamily::new(7);
        let b = TestFamily::with_sizes(7, 10, 20);
        assert_eq!(a, TestFamily::new(7));
        assert_eq!(&a.functions[..10], &b.functions[..]);
        assert_eq!(&a.tilts[..20], &b.tilts[..]);
        assert_ne!(a, TestFamily::new(8));
    }

    #[test]
    fn tilts_respect_oscillation_and_lattice() {
        let grid = Grid1D::new(-8.0, 8.0, 1601).unwrap();
        let fam = TestFamily::new(3);
        let h = grid.spacing();
        for t in &fam.tilts {
            let e = t.exponent(grid, 0.0, 1.0).unwrap();
            assert!(osc(&e) <= MAX_TILT_OSC + 1e-9, "{}", osc(&e));
            if t.shape.is_none() {
                let slope = (e.values()[1] - e.values()[0]) / h;
                assert!((slope / h - (slope / h).round()).abs() < 1e-6);
                assert!(slope != 0.0);
            }
        }
        let mu = discretize(&Density::Gaussian { mean: 0.0, sd: 1.0 }, &grid).unwrap();
        assert_eq!(fam.measures(&mu).unwrap().len(), DEFAULT_MEASURES);
    }

    #[test]
    fn lipschitz_normalization() {
        let grid = Grid1D::new(-4.0, 4.0, 401).unwrap();
        let fam = TestFamily::new(0);
        for i in 0..5 {
            let f = fam.lipschitz_function(i, grid).unwrap();
            assert!((lipschitz_constant(&f) - 1.0).abs() < 1e-12);
        }
    }
}
