//! Admissible one-dimensional cost profiles and separable costs built from them.
//!
//! A profile `α: ℝ → ℝ⁺` is admissible when it is symmetric, convex,
//! `α(0) = α'(0) = 0` and `α'` is concave on the half-line. Every constructor
//! checks these properties on a sample grid and refuses profiles that fail.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;
use crate::scalar::golden_section_max;

/// Half-width of the admissibility sample grid.
pub const CHECK_RADIUS: f64 = 20.0;
/// Number of points in the admissibility sample grid.
pub const CHECK_POINTS: usize = 4001;

/// Hard cap on the search radius of the numerical conjugate.
pub const CONJUGATE_RADIUS_CAP: f64 = 1e8;

/// Log-spaced grid used for the distortion functional ω_α.
pub const OMEGA_U_MIN: f64 = 1e-6;
pub const OMEGA_U_MAX: f64 = 1e6;
pub const OMEGA_POINTS: usize = 2001;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Built-in profile descriptors, addressable by string id.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Quadratic,
    PowerSmooth(f64),
    Alpha21,
    Scaled(Box<Builtin>, f64),
}

impl Builtin {
    /// Parses `quadratic`, `power:<p>`, `alpha21` or `scaled:<base>:<u>`.
    pub fn parse(id: &str) -> Result<Self> {
        let unknown = || Error::UnknownCost { id: id.to_string() };
        let id = id.trim();
        if id == "quadratic" {
            return Ok(Builtin::Quadratic);
        }
        if id == "alpha21" {
            return Ok(Builtin::Alpha21);
        }
        if let Some(p) = id.strip_prefix("power:") {
            let p: f64 = p.parse().map_err(|_| unknown())?;
            return Ok(Builtin::PowerSmooth(p));
        }
        if let Some(rest) = id.strip_prefix("scaled:") {
            let (base, u) = rest.rsplit_once(':').ok_or_else(unknown)?;
            let u: f64 = u.parse().map_err(|_| unknown())?;
            return Ok(Builtin::Scaled(Box::new(Builtin::parse(base)?), u));
        }
        Err(unknown())
    }

    pub fn id(&self) -> String {
        match self {
            Builtin::Quadratic => "quadratic".into(),
            Builtin::PowerSmooth(p) => format!("power:{p}"),
            Builtin::Alpha21 => "alpha21".into(),
            Builtin::Scaled(base, u) => format!("scaled:{}:{u}", base.id()),
        }
    }
}

#[derive(Clone)]
enum Kind {
    Quadratic,
    PowerSmooth { p: f64 },
    Alpha21,
    Scaled { base: Box<AlphaCost>, u: f64 },
    Custom { eval: ScalarFn, deriv: ScalarFn },
}

/// An admissible cost profile α with derivative, Legendre conjugate and name.
#[derive(Clone)]
pub struct AlphaCost {
    kind: Kind,
    name: String,
}

impl fmt::Debug for AlphaCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlphaCost").field("name", &self.name).finish()
    }
}

impl AlphaCost {
    /// `α(t) = t²/2`.
    pub fn quadratic() -> Self {
        AlphaCost {
            kind: Kind::Quadratic,
            name: "quadratic".into(),
        }
    }

    /// `α(t) = t²` on `[0,1]` glued C¹ to `(2/p)(tᵖ − 1) + 1` on `[1, ∞)`.
    pub fn power_smooth(p: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "power_smooth exponent must lie in [1, 2], got {p}"
            )));
        }
        let cost = AlphaCost {
            kind: Kind::PowerSmooth { p },
            name: format!("power:{p}"),
        };
        cost.check_admissible()?;
        Ok(cost)
    }

    /// `α(t) = min(t²/2, |t| − 1/2)`.
    pub fn alpha21() -> Self {
        AlphaCost {
            kind: Kind::Alpha21,
            name: "alpha21".into(),
        }
    }

    /// `c_u(t) = u·α(t/u)` for `u ≥ 1`.
    pub fn scaled(base: AlphaCost, u: f64) -> Result<Self> {
        if !(u >= 1.0 && u.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must satisfy u >= 1, got {u}"
            )));
        }
        let name = format!("scaled:{}:{u}", base.name);
        let cost = AlphaCost {
            kind: Kind::Scaled {
                base: Box::new(base),
                u,
            },
            name,
        };
        cost.check_admissible()?;
        Ok(cost)
    }

    /// A user-supplied profile. Its conjugate is computed numerically.
    pub fn custom<E, D>(name: &str, eval: E, deriv: D) -> Result<Self>
    where
        E: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let cost = AlphaCost {
            kind: Kind::Custom {
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
            },
            name: name.to_string(),
        };
        cost.check_admissible()?;
        Ok(cost)
    }

    /// Parses a string id, see [`Builtin::parse`].
    pub fn from_id(id: &str) -> Result<Self> {
        make_builtin(&Builtin::parse(id)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic => 0.5 * t * t,
            Kind::PowerSmooth { p } => {
                let a = t.abs();
                if a <= 1.0 {
                    a * a
                } else {
                    (2.0 / p) * (a.powf(*p) - 1.0) + 1.0
                }
            }
            Kind::Alpha21 => {
                let a = t.abs();
                if a <= 1.0 {
                    0.5 * a * a
                } else {
                    a - 0.5
                }
            }
            Kind::Scaled { base, u } => u * base.eval(t / u),
            Kind::Custom { eval, .. } => eval(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic => t,
            Kind::PowerSmooth { p } => {
                let a = t.abs();
                let d = if a <= 1.0 { 2.0 * a } else { 2.0 * a.powf(p - 1.0) };
                d.copysign(t)
            }
            Kind::Alpha21 => t.clamp(-1.0, 1.0),
            Kind::Scaled { base, u } => base.deriv(t / u),
            Kind::Custom { deriv, .. } => deriv(t),
        }
    }

    /// Legendre conjugate `α*(h) = sup_t { h·t − α(t) }`, possibly `+∞`.
    pub fn conj(&self, h: f64) -> f64 {
        legendre_conjugate(self, h)
    }

    /// Radius beyond which `α* = +∞`.
    pub fn conj_domain_radius(&self) -> f64 {
        match &self.kind {
            Kind::Quadratic => f64::INFINITY,
            Kind::PowerSmooth { p } => {
                if *p == 1.0 {
                    2.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Alpha21 => 1.0,
            Kind::Scaled { base, .. } => base.conj_domain_radius(),
            Kind::Custom { deriv, .. } => {
                // α' is nondecreasing on the half-line; a plateau far out is the
                // supremum of its range and hence the domain radius of α*.
                let far = deriv(CONJUGATE_RADIUS_CAP);
                let half = deriv(0.5 * CONJUGATE_RADIUS_CAP);
                if far.is_finite() && far <= half * (1.0 + 1e-6) {
                    far
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn has_closed_form_conjugate(&self) -> bool {
        match &self.kind {
            Kind::Custom { .. } => false,
            Kind::Scaled { base, .. } => base.has_closed_form_conjugate(),
            _ => true,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, Kind::Quadratic)
    }

    fn closed_form_conj(&self, h: f64) -> Option<f64> {
        match &self.kind {
            Kind::Quadratic => Some(0.5 * h * h),
            Kind::Alpha21 => Some(if h.abs() <= 1.0 { 0.5 * h * h } else { f64::INFINITY }),
            Kind::PowerSmooth { p } => {
                let a = h.abs();
                if a <= 2.0 {
                    Some(0.25 * a * a)
                } else if *p == 1.0 {
                    Some(f64::INFINITY)
                } else {
                    let t = (0.5 * a).powf(1.0 / (p - 1.0));
                    Some(a * t - (2.0 / p) * (t.powf(*p) - 1.0) - 1.0)
                }
            }
            Kind::Scaled { base, u } => base.closed_form_conj(h).map(|v| u * v),
            Kind::Custom { .. } => None,
        }
    }

    /// Samples the admissibility invariants on `[-20, 20]`.
    pub fn check_admissible(&self) -> Result<()> {
        let fail = |invariant: &'static str, point: f64| Error::Admissibility {
            cost: self.name.clone(),
            invariant,
            point,
        };
        if self.eval(0.0).abs() > 1e-12 {
            return Err(fail("alpha(0) = 0", 0.0));
        }
        if self.deriv(0.0).abs() > 1e-12 {
            return Err(fail("alpha'(0) = 0", 0.0));
        }
        let step = 2.0 * CHECK_RADIUS / (CHECK_POINTS - 1) as f64;
        let ts: Vec<f64> = (0..CHECK_POINTS).map(|i| -CHECK_RADIUS + i as f64 * step).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect();
        for (i, &t) in ts.iter().enumerate() {
            let v = vals[i];
            if !v.is_finite() || v < -1e-12 {
                return Err(fail("alpha finite and nonnegative", t));
            }
            if (v - self.eval(-t)).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(fail("alpha symmetric", t));
            }
        }
        for i in 1..CHECK_POINTS - 1 {
            let second = vals[i - 1] - 2.0 * vals[i] + vals[i + 1];
            if second < -1e-10 {
                return Err(fail("alpha convex", ts[i]));
            }
        }
        let mid = CHECK_POINTS / 2;
        let derivs: Vec<f64> = ts[mid..].iter().map(|&t| self.deriv(t)).collect();
        for i in 1..derivs.len() - 1 {
            let second = derivs[i - 1] - 2.0 * derivs[i] + derivs[i + 1];
            if second > 1e-10 {
                return Err(fail("alpha' concave on the half-line", ts[mid + i]));
            }
        }
        // α** = α: the dual grid holds the slopes α'(t_j), where Fenchel–Young is
        // an equality, so the discrete biconjugate can only drift if α* is wrong.
        let slopes: Vec<f64> = ts.iter().map(|&t| self.deriv(t)).collect();
        let conj: Vec<f64> = par::map_slice(&slopes, |&h| self.conj(h));
        let biconj = par::map_range(CHECK_POINTS, |i| {
            let x = ts[i];
            slopes
                .iter()
                .zip(&conj)
                .filter(|(_, c)| c.is_finite())
                .map(|(&h, &c)| x * h - c)
                .fold(f64::NEG_INFINITY, f64::max)
        });
        for i in 0..CHECK_POINTS {
            if (biconj[i] - vals[i]).abs() > 1e-8 * (1.0 + vals[i].abs()) {
                return Err(fail("alpha** = alpha", ts[i]));
            }
        }
        Ok(())
    }
}

/// Builds a built-in profile.
pub fn make_builtin(builtin: &Builtin) -> Result<AlphaCost> {
    match builtin {
        Builtin::Quadratic => Ok(AlphaCost::quadratic()),
        Builtin::PowerSmooth(p) => AlphaCost::power_smooth(*p),
        Builtin::Alpha21 => Ok(AlphaCost::alpha21()),
        Builtin::Scaled(base, u) => AlphaCost::scaled(make_builtin(base)?, *u),
    }
}

/// Legendre conjugate: closed form when registered, numerical otherwise.
pub fn legendre_conjugate(alpha: &AlphaCost, h: f64) -> f64 {
    match alpha.closed_form_conj(h) {
        Some(v) => v,
        None => numerical_conjugate(|t| alpha.eval(t), h),
    }
}

/// `sup_t { h·t − α(t) }` for a symmetric convex `α` with `α(0) = 0`.
///
/// The search radius doubles until the coarse maximizer is interior; the
/// bracket around it is then refined by golden section. If the objective is
/// still increasing at [`CONJUGATE_RADIUS_CAP`] the result is `+∞`.
pub fn numerical_conjugate<F: Fn(f64) -> f64>(alpha: F, h: f64) -> f64 {
    const COARSE: usize = 64;
    let a = h.abs();
    if a == 0.0 {
        return 0.0;
    }
    let objective = |t: f64| a * t - alpha(t);
    let mut radius = 1.0;
    loop {
        let step = radius / COARSE as f64;
        let values: Vec<f64> = (0..=COARSE).map(|k| objective(k as f64 * step)).collect();
        let best = par::argmax(&values).unwrap_or(0);
        if best < COARSE {
            let lo = best.saturating_sub(1) as f64 * step;
            let hi = (best + 1) as f64 * step;
            let refined = golden_section_max(objective, lo, hi, 1e-15);
            return refined.value.max(values[best]);
        }
        if radius >= CONJUGATE_RADIUS_CAP {
            let rise = values[COARSE] - values[COARSE - 1];
            return if rise > 1e-9 * (1.0 + values[COARSE].abs()) {
                f64::INFINITY
            } else {
                values[COARSE]
            };
        }
        radius *= 2.0;
    }
}

/// `sup_{u>0} f(u·x) / f(u)` over the fixed log-spaced u-grid.
pub fn omega_of<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let log_lo = OMEGA_U_MIN.ln();
    let log_hi = OMEGA_U_MAX.ln();
    let step = (log_hi - log_lo) / (OMEGA_POINTS - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    for k in 0..OMEGA_POINTS {
        let u = (log_lo + k as f64 * step).exp();
        let den = f(u);
        let num = f(u * x);
        if !(den.is_finite() && den > 0.0 && num.is_finite()) {
            continue;
        }
        best = best.max(num / den);
    }
    best
}

/// The distortion `ω_α(x) = sup_{u>0} α(ux)/α(u)`.
pub fn omega_alpha(alpha: &AlphaCost, x: f64) -> f64 {
    if alpha.is_quadratic() {
        return x * x;
    }
    omega_of(|t| alpha.eval(t), x)
}

/// `ω_{α*}(x)`, restricted to the u where `α*` is finite.
pub fn omega_conjugate(alpha: &AlphaCost, x: f64) -> f64 {
    if alpha.is_quadratic() {
        return x * x;
    }
    omega_of(|t| alpha.conj(t), x)
}

/// `α(u) + v·α'(u) + 4·α(v/2) − α(u+v)`, nonnegative for admissible α.
pub fn three_point_gap(alpha: &AlphaCost, u: f64, v: f64) -> f64 {
    alpha.eval(u) + v * alpha.deriv(u) + 4.0 * alpha.eval(0.5 * v) - alpha.eval(u + v)
}

/// `c(x) = Σᵢ α(xᵢ)` on `ℝᵏ`.
#[derive(Debug, Clone)]
pub struct SeparableCost {
    alpha: AlphaCost,
    dim: usize,
}

impl SeparableCost {
    pub fn new(alpha: AlphaCost, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("cost dimension must be positive".into()));
        }
        Ok(SeparableCost { alpha, dim })
    }

    /// The one-dimensional cost `c = α`.
    pub fn scalar(alpha: AlphaCost) -> Self {
        SeparableCost { alpha, dim: 1 }
    }

    pub fn alpha(&self) -> &AlphaCost {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        x.iter().map(|&xi| self.alpha.eval(xi)).sum()
    }

    pub fn conj(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        x.iter().map(|&xi| self.alpha.conj(xi)).sum()
    }
}
