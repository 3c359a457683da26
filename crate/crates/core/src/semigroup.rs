//! Inf- and sup-convolutions on a grid, semi-convexity certificates and the
//! checks built on them.
//!
//! All convolutions are exact minimizations over grid points. The kernel is
//! tabulated once per call on the `2n − 1` grid offsets, so brute force and
//! the accelerated sweep evaluate the same floating-point expressions.

use serde::{Deserialize, Serialize};

use crate::cost::{omega_alpha, SeparableCost};
use crate::error::{Error, Result};
use crate::measure::{gradient, GridFunction};
use crate::par;
use crate::report::InequalityReport;

/// Row spans below this are handled on the current thread.
const SEQUENTIAL_SPAN: usize = 256;

/// Minimization strategy for a min-plus convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Full O(n²) scan.
    Brute,
    /// Divide and conquer over monotone argmins, valid for convex kernels.
    Monotone,
}

/// Convolution values together with the grid index attaining each optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub function: GridFunction,
    pub arg: Vec<usize>,
}

fn require_1d(cost: &SeparableCost) -> Result<()> {
    if cost.dim() == 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "grid convolutions need a 1D cost, got dimension {}",
            cost.dim()
        )))
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// `kernel[k] = g((k − (n−1))·h)` for `k in 0..2n−1`.
fn tabulate<G: Fn(f64) -> f64>(n: usize, h: f64, g: G) -> Vec<f64> {
    (0..2 * n - 1).map(|k| g((k as f64 - (n - 1) as f64) * h)).collect()
}

#[inline]
fn row_min(values: &[f64], kernel: &[f64], i: usize, jlo: usize, jhi: usize) -> (f64, usize) {
    let n = values.len();
    let mut best = f64::INFINITY;
    let mut arg = jlo;
    for j in jlo..=jhi {
        let v = values[j] + kernel[i + n - 1 - j];
        if v < best {
            best = v;
            arg = j;
        }
    }
    (best, arg)
}

fn sweep(values: &[f64], kernel: &[f64], ilo: usize, jlo: usize, jhi: usize, out: &mut [f64], arg: &mut [usize]) {
    if out.is_empty() {
        return;
    }
    let mid = out.len() / 2;
    let (best, j) = row_min(values, kernel, ilo + mid, jlo, jhi);
    let (out_l, out_r) = out.split_at_mut(mid);
    let (arg_l, arg_r) = arg.split_at_mut(mid);
    out_r[0] = best;
    arg_r[0] = j;
    let (out_r, arg_r) = (&mut out_r[1..], &mut arg_r[1..]);
    if out_l.len() + out_r.len() > SEQUENTIAL_SPAN {
        par::join(
            || sweep(values, kernel, ilo, jlo, j, out_l, arg_l),
            || sweep(values, kernel, ilo + mid + 1, j, jhi, out_r, arg_r),
        );
    } else {
        sweep(values, kernel, ilo, jlo, j, out_l, arg_l);
        sweep(values, kernel, ilo + mid + 1, j, jhi, out_r, arg_r);
    }
}

/// `out[i] = min_j values[j] + kernel[i − j + n − 1]`, lowest `j` on ties.
pub(crate) fn min_plus(values: &[f64], kernel: &[f64], engine: Engine) -> (Vec<f64>, Vec<usize>) {
    let n = values.len();
    match engine {
        Engine::Brute => par::map_range(n, |i| row_min(values, kernel, i, 0, n - 1))
            .into_iter()
            .unzip(),
        Engine::Monotone => {
            let mut out = vec![0.0; n];
            let mut arg = vec![0; n];
            sweep(values, kernel, 0, 0, n - 1, &mut out, &mut arg);
            (out, arg)
        }
    }
}

fn envelope(f: &GridFunction, out: Vec<f64>, arg: Vec<usize>) -> Result<Envelope> {
    Ok(Envelope {
        function: GridFunction::new(*f.grid(), out)?,
        arg,
    })
}

/// `Q^λ f(x) = min_y { f(y) + λ c(x − y) }` over grid points `y`.
pub fn inf_convolution(f: &GridFunction, lambda: f64, cost: &SeparableCost) -> Result<GridFunction> {
    Ok(inf_convolution_with(f, lambda, cost, Engine::Monotone)?.function)
}

pub fn inf_convolution_with(f: &GridFunction, lambda: f64, cost: &SeparableCost, engine: Engine) -> Result<Envelope> {
    require_1d(cost)?;
    require_positive("lambda", lambda)?;
    let alpha = cost.alpha();
    let kernel = tabulate(f.grid().len(), f.grid().spacing(), |z| lambda * alpha.eval(z));
    let (out, arg) = min_plus(f.values(), &kernel, engine);
    envelope(f, out, arg)
}

/// Hopf–Lax sup-convolution `P_t f(x) = max_y { f(y) − t·c((x − y)/t) }`.
pub fn sup_convolution(f: &GridFunction, t: f64, cost: &SeparableCost) -> Result<GridFunction> {
    Ok(sup_convolution_with(f, t, cost, Engine::Monotone)?.function)
}

pub fn sup_convolution_with(f: &GridFunction, t: f64, cost: &SeparableCost, engine: Engine) -> Result<Envelope> {
    require_1d(cost)?;
    require_positive("t", t)?;
    let alpha = cost.alpha();
    let kernel = tabulate(f.grid().len(), f.grid().spacing(), |z| t * alpha.eval(z / t));
    sup_with_kernel(f, &kernel, engine)
}

/// `P^λ f(x) = max_y { f(y) − λ c(x − y) }`, i.e. `−Q^λ(−f)`.
pub fn sup_convolution_lambda(f: &GridFunction, lambda: f64, cost: &SeparableCost) -> Result<GridFunction> {
    require_1d(cost)?;
    require_positive("lambda", lambda)?;
    let alpha = cost.alpha();
    let kernel = tabulate(f.grid().len(), f.grid().spacing(), |z| lambda * alpha.eval(z));
    Ok(sup_with_kernel(f, &kernel, Engine::Monotone)?.function)
}

fn sup_with_kernel(f: &GridFunction, kernel: &[f64], engine: Engine) -> Result<Envelope> {
    let neg: Vec<f64> = f.values().iter().map(|v| -v).collect();
    let (out, arg) = min_plus(&neg, kernel, engine);
    envelope(f, out.into_iter().map(|v| -v).collect(), arg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMode {
    GradientForm,
    MidpointForm,
}

/// Smallest `K` for which a grid function passes the semi-convexity test.
///
/// `witness` holds the grid indices attaining `k_min`: `(x, y)` in gradient
/// form, `(x, midpoint, y)` in midpoint form. It is empty when `k_min = 0`
/// is attained nowhere with a positive defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiConvexityCertificate {
    pub k_min: f64,
    pub witness: Vec<usize>,
    pub witness_points: Vec<f64>,
    pub mode: CertificateMode,
    /// The witness touches the first or last grid point.
    pub boundary_witness: bool,
}

impl SemiConvexityCertificate {
    fn build(f: &GridFunction, k: f64, witness: Vec<usize>, mode: CertificateMode) -> Self {
        let n = f.grid().len();
        SemiConvexityCertificate {
            k_min: k,
            witness_points: witness.iter().map(|&i| f.grid().point(i)).collect(),
            boundary_witness: witness.iter().any(|&i| i == 0 || i + 1 == n),
            witness,
            mode,
        }
    }
}

/// Keeps the larger ratio; on equal ratios the first-seen candidate stays.
fn better(a: (f64, Vec<usize>), b: (f64, Vec<usize>)) -> (f64, Vec<usize>) {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

fn defect_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Gradient-form certificate: the max over ordered grid pairs `x ≠ y` of
/// `(f(x) + ∇f(x)(y − x) − f(y)) / c(y − x)`, clamped below at 0.
pub fn semiconvexity_defect(f: &GridFunction, cost: &SeparableCost) -> Result<SemiConvexityCertificate> {
    require_1d(cost)?;
    let alpha = cost.alpha();
    Ok(semiconvexity_defect_with(f, |z| alpha.eval(z)))
}

/// Gradient-form certificate against an arbitrary scalar cost `c`.
pub fn semiconvexity_defect_with<C>(f: &GridFunction, c: C) -> SemiConvexityCertificate
where
    C: Fn(f64) -> f64 + Sync,
{
    let n = f.grid().len();
    let h = f.grid().spacing();
    let table = tabulate(n, h, &c);
    let v = f.values();
    let g = gradient(f);
    let g = g.values();
    let rows = par::map_range(n, |i| {
        let mut best = (0.0, Vec::new());
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = (j as f64 - i as f64) * h;
            let ratio = defect_ratio(v[i] + g[i] * d - v[j], table[j + n - 1 - i]);
            if ratio > best.0 {
                best = (ratio, vec![i, j]);
            }
        }
        best
    });
    let (k, witness) = rows.into_iter().fold((0.0, Vec::new()), better);
    SemiConvexityCertificate::build(f, k, witness, CertificateMode::GradientForm)
}

/// Midpoint-form certificate on grid-aligned triples `x_i < x_m < x_j` with
/// `j − i ≤ max_span`: the smallest `K ≥ 0` with
/// `f(x_m) ≤ λf(x_i) + (1−λ)f(x_j) + λK c((1−λ)(x_j−x_i)) + (1−λ)K c(λ(x_j−x_i))`
/// where `x_m = λx_i + (1−λ)x_j`.
pub fn midpoint_defect(f: &GridFunction, cost: &SeparableCost, max_span: usize) -> Result<SemiConvexityCertificate> {
    require_1d(cost)?;
    let n = f.grid().len();
    let h = f.grid().spacing();
    let alpha = cost.alpha();
    let span = max_span.clamp(2, n - 1);
    let table: Vec<f64> = (0..=span).map(|k| alpha.eval(k as f64 * h)).collect();
    let v = f.values();
    let rows = par::map_range(n, |i| {
        let mut best = (0.0, Vec::new());
        for j in i + 2..=(i + span).min(n - 1) {
            let width = (j - i) as f64;
            for m in i + 1..j {
                let lam = (j - m) as f64 / width;
                let num = v[m] - lam * v[i] - (1.0 - lam) * v[j];
                let den = lam * table[m - i] + (1.0 - lam) * table[j - m];
                let ratio = defect_ratio(num, den);
                if ratio > best.0 {
                    best = (ratio, vec![i, m, j]);
                }
            }
        }
        best
    });
    let (k, witness) = rows.into_iter().fold((0.0, Vec::new()), better);
    Ok(SemiConvexityCertificate::build(
        f,
        k,
        witness,
        CertificateMode::MidpointForm,
    ))
}

/// `max_i |f(x_{i+1}) − f(x_i)| / h`.
pub fn lipschitz_constant(f: &GridFunction) -> f64 {
    let h = f.grid().spacing();
    f.values()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0, f64::max)
}

/// First-order grid tolerance `2·(Lip(f) + 1)·h` for semigroup property checks.
pub fn grid_tol(f: &GridFunction) -> f64 {
    2.0 * (lipschitz_constant(f) + 1.0) * f.grid().spacing()
}

/// Checks that `P_u f` is `4u·ω_α(1/(2u))`-semi-convex.
pub fn check_lem_semiconv(f: &GridFunction, u: f64, cost: &SeparableCost) -> Result<InequalityReport> {
    let pf = sup_convolution(f, u, cost)?;
    let cert = semiconvexity_defect(&pf, cost)?;
    let bound = 4.0 * u * omega_alpha(cost.alpha(), 1.0 / (2.0 * u));
    let mut report = InequalityReport::with_tol("lem_semiconv", bound, cert.k_min, bound, grid_tol(f))
        .witness(format!("u={u}, pair={:?}", cert.witness_points))
        .grid(f.grid());
    if cert.boundary_witness {
        report = report.flag("boundary_witness");
    }
    Ok(report)
}

/// Outcome of [`hopf_lax_residual`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    /// Max of `|∂_t P_t f − c*(−∇P_t f)|` over the points kept.
    pub max: f64,
    /// Grid index of the max, if any point was kept.
    pub at: Option<usize>,
    pub used: usize,
    pub kinks: usize,
    /// Points whose optimizer sits on the first or last grid point.
    pub truncated: usize,
}

/// Residual of the Hamilton–Jacobi equation `∂_t u = c*(−∇u)` for
/// `u_t = P_t f`, with a forward difference in time and central differences
/// in space.
///
/// Interior points are skipped where the forward and backward slopes of
/// `P_t f` differ by more than `10h` (kinks) or where the optimizer at either
/// time is a boundary index (the sup was truncated by the grid).
pub fn hopf_lax_residual(f: &GridFunction, t: f64, dt: f64, cost: &SeparableCost) -> Result<Residual> {
    require_positive("t", t)?;
    require_positive("dt", dt)?;
    if dt >= t {
        return Err(Error::InvalidParameter(format!("need t > dt, got t={t}, dt={dt}")));
    }
    let now = sup_convolution_with(f, t, cost, Engine::Monotone)?;
    let later = sup_convolution_with(f, t + dt, cost, Engine::Monotone)?;
    let n = f.grid().len();
    let h = f.grid().spacing();
    let u = now.function.values();
    let w = later.function.values();
    let alpha = cost.alpha();
    let mut out = Residual {
        max: 0.0,
        at: None,
        used: 0,
        kinks: 0,
        truncated: 0,
    };
    for i in 1..n - 1 {
        let on_edge = |a: usize| a == 0 || a + 1 == n;
        if on_edge(now.arg[i]) || on_edge(later.arg[i]) {
            out.truncated += 1;
            continue;
        }
        let forward = (u[i + 1] - u[i]) / h;
        let backward = (u[i] - u[i - 1]) / h;
        if (forward - backward).abs() > 10.0 * h {
            out.kinks += 1;
            continue;
        }
        let grad = 0.5 * (forward + backward);
        let r = ((w[i] - u[i]) / dt - alpha.conj(-grad)).abs();
        out.used += 1;
        if r > out.max || out.at.is_none() {
            out.max = r;
            out.at = Some(i);
        }
    }
    Ok(out)
}
