//! Scalar constants of the transport-entropy implication chain and the
//! orchestration of family sweeps that estimate constants from below.

use serde::Serialize;

use crate::cost::SeparableCost;
use crate::error::{Error, Result};
use crate::family::TestFamily;
use crate::measure::{ent_exp, variance, Grid1D, GridFunction, GridMeasure};
use crate::par;
use crate::report::{worst_slack, InequalityReport};
use crate::scalar::{golden_section_max, golden_section_min};
use crate::semigroup::{semiconvexity_defect, sup_convolution};
use crate::transport::transport_1d_monotone;
use crate::verify::{tc_report, verify_iclsi, verify_rmlsi};

/// Rounded bound on `1/sup_v v(1−v)^{1/v}` quoted for the constant ratio.
pub const SUP_V_QUOTED_BOUND: f64 = 7.7;

/// `ℓ(t) = η((1−t)^{1−v} − (1−t))`.
pub fn ell(t: f64, eta: f64, v: f64) -> f64 {
    let s = 1.0 - t;
    eta * (s.powf(1.0 - v) - s)
}

/// `ℓ'(t) = η(1 − (1−v)/(1−t)^v)`.
pub fn ell_prime(t: f64, eta: f64, v: f64) -> f64 {
    eta * (1.0 - (1.0 - v) / (1.0 - t).powf(v))
}

/// `T(v) = 1 − (1−v)^{1/v}`, the point where `ℓ` peaks.
pub fn t_of_v(v: f64) -> f64 {
    1.0 - (1.0 - v).powf(1.0 / v)
}

/// `ℓ(T(v)) = ηv(1−v)^{1/v − 1}`.
pub fn ell_at_t(eta: f64, v: f64) -> f64 {
    eta * v * (1.0 - v).powf(1.0 / v - 1.0)
}

/// `g(v) = v(1−v)^{1/v}`.
pub fn g_of_v(v: f64) -> f64 {
    v * (1.0 - v).powf(1.0 / v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupV {
    pub v_star: f64,
    pub g_star: f64,
    /// `1/g*`, the ratio between the two constants.
    pub inverse: f64,
    pub quoted_bound: f64,
}

/// Maximizes `v(1−v)^{1/v}` on `(0, 1)` by golden section.
pub fn sup_v_functional() -> SupV {
    let m = golden_section_max(g_of_v, 1e-9, 1.0 - 1e-9, 1e-12);
    SupV {
        v_star: m.x,
        g_star: m.value,
        inverse: 1.0 / m.value,
        quoted_bound: SUP_V_QUOTED_BOUND,
    }
}

/// `φ(t) = λt/2 + 2λ²C/(1 − λC/t)` for `t > λC`.
pub fn phi(t: f64, lambda: f64, c: f64) -> f64 {
    lambda * t / 2.0 + 2.0 * lambda * lambda * c / (1.0 - lambda * c / t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiMin {
    pub t_min: f64,
    pub value: f64,
    pub numeric_t: f64,
    pub numeric_value: f64,
}

/// Closed-form minimizer `(3Cλ, 9Cλ²/2)` of `φ`, with a golden-section cross-check.
pub fn phi_min(lambda: f64, c: f64) -> Result<PhiMin> {
    if !(lambda > 0.0 && c > 0.0 && lambda.is_finite() && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need lambda, C > 0, got lambda = {lambda}, C = {c}"
        )));
    }
    let s = lambda * c;
    let m = golden_section_min(|t| phi(t, lambda, c), s * (1.0 + 1e-6), 50.0 * s, 1e-12);
    Ok(PhiMin {
        t_min: 3.0 * s,
        value: 9.0 * c * lambda * lambda / 2.0,
        numeric_t: m.x,
        numeric_value: m.value,
    })
}

/// `K(κ,C) = ((2+κ√C)/(2−κ√C))² e^{κ√(5C)}` for `0 ≤ κ < 2/√C`.
pub fn bli_constant(kappa: f64, c: f64) -> Result<f64> {
    let r = kappa * c.sqrt();
    if !(c > 0.0 && kappa >= 0.0 && r < 2.0) {
        return Err(Error::Precondition {
            check: "kappa < 2/sqrt(C)",
            detail: format!("kappa = {kappa}, C = {c}"),
        });
    }
    let q = (2.0 + r) / (2.0 - r);
    Ok(q * q * (kappa * (5.0 * c).sqrt()).exp())
}

/// Default ε sequence for [`poincare_linearization_check`].
pub const LINEARIZATION_EPS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
/// Largest accepted ratio between successive linearization errors.
pub const LINEARIZATION_RATIO: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Linearization {
    pub variance: f64,
    /// `Ent(e^{εf})/(ε²/2) − Var(f)` for each ε.
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    pub report: InequalityReport,
}

/// Checks `Ent_μ(e^{εf}) = (ε²/2)Var_μ(f) + o(ε²)` by watching the error
/// shrink as ε halves. Errors already at roundoff level (below
/// `1e-10·(1+Var)`) count as converged and give ratio 0.
pub fn poincare_linearization_check(mu: &GridMeasure, f: &GridFunction, eps: &[f64]) -> Result<Linearization> {
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("need at least two positive eps values".into()));
    }
    let var = variance(mu, f)?;
    let floor = 1e-10 * (1.0 + var);
    let errors = eps
        .iter()
        .map(|&e| Ok(ent_exp(mu, &f.scale(e))? / (e * e / 2.0) - var))
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = errors
        .windows(2)
        .map(|w| {
            if w[1].abs() <= floor {
                0.0
            } else {
                w[1].abs() / w[0].abs()
            }
        })
        .collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let report = InequalityReport::with_tol("poincare_linearization", var, worst, LINEARIZATION_RATIO, 0.0)
        .witness(format!("eps={eps:?}"))
        .grid(mu.grid());
    Ok(Linearization {
        variance: var,
        errors,
        ratios,
        report,
    })
}

/// ICLSI sweep parameters `λ ∈ {0.1, …, 0.9}/C`.
pub fn iclsi_lambdas(c: f64) -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0 / c).collect()
}

/// Semi-convexity levels `K ∈ {0, 0.2, 0.4}/C` swept for rMLSI.
pub fn rmlsi_levels(c: f64) -> Vec<f64> {
    [0.0, 0.2, 0.4].iter().map(|k| k / c).collect()
}

/// Sup-convolution times used to make family functions semi-convex.
pub const SMOOTHING_TIMES: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub total: usize,
    pub passed: usize,
    /// Cases with no admissible parameters (for instance `K = 0` asked of a
    /// function whose certified defect is positive).
    pub skipped: usize,
    pub worst_slack: f64,
    pub worst_case: String,
}

impl StageSummary {
    fn from_reports(reports: &[InequalityReport], skipped: usize) -> Self {
        let worst = reports
            .iter()
            .min_by(|a, b| a.slack.total_cmp(&b.slack))
            .map(|r| r.witness.clone())
            .unwrap_or_default();
        StageSummary {
            total: reports.len(),
            passed: reports.iter().filter(|r| r.pass).count(),
            skipped,
            worst_slack: worst_slack(reports),
            worst_case: worst,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }
}

/// Reports of one sweep with the empirical constant it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub reports: Vec<InequalityReport>,
    pub skipped: usize,
    /// Smallest constant for which every case in the sweep would pass.
    pub c_hat: f64,
}

/// `T_c(C)` on the family tilts of `μ`; `Ĉ = max 𝒯_c/H`.
pub fn tc_sweep(mu: &GridMeasure, c: f64, cost: &SeparableCost, family: &TestFamily) -> Result<Sweep> {
    let measures = family.measures(mu)?;
    let indexed: Vec<(usize, &GridMeasure)> = measures.iter().enumerate().collect();
    let out = par::map_slice(&indexed, |(i, nu)| -> Result<(InequalityReport, f64)> {
        let r = tc_report(mu, c, cost, nu, &format!("nu[{i}]"))?;
        let h = r.rhs / c;
        let ratio = if h > 0.0 && h.is_finite() { r.lhs / h } else { 0.0 };
        Ok((r, ratio))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let c_hat = out.iter().map(|(_, q)| *q).fold(0.0, f64::max);
    Ok(Sweep {
        reports: out.into_iter().map(|(r, _)| r).collect(),
        skipped: 0,
        c_hat,
    })
}

/// ICLSI over the family functions and `λ ∈ {0.1, …, 0.9}/C`.
///
/// Per case the smallest passing constant solves `Ent = D/(1 − λC')`, i.e.
/// `C' = (1 − D/Ent)/λ`.
pub fn iclsi_sweep(mu: &GridMeasure, c: f64, cost: &SeparableCost, functions: &[GridFunction]) -> Result<Sweep> {
    let cases: Vec<(usize, f64)> = (0..functions.len())
        .flat_map(|i| iclsi_lambdas(c).into_iter().map(move |l| (i, l)))
        .collect();
    let out = par::map_slice(&cases, |&(i, lambda)| -> Result<(InequalityReport, f64)> {
        let mut r = verify_iclsi(mu, c, lambda, &functions[i], cost)?;
        r.witness = format!("f[{i}], {}", r.witness);
        let d = r.rhs * (1.0 - lambda * c);
        let needed = if r.lhs > 0.0 { (1.0 - d / r.lhs) / lambda } else { 0.0 };
        Ok((r, needed.max(0.0)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let c_hat = out.iter().map(|(_, q)| *q).fold(0.0, f64::max);
    Ok(Sweep {
        reports: out.into_iter().map(|(r, _)| r).collect(),
        skipped: 0,
        c_hat,
    })
}

/// rMLSI over `P_t f` for the family functions and `t ∈ SMOOTHING_TIMES`.
///
/// For each smoothed function with certified defect `K_c` the levels
/// `{K_c} ∪ {0, 0.2, 0.4}/C` are tried with `η = (1/C − K)/2`. A level
/// `0 < K < K_c` uses the function rescaled by `K/K_c`, whose defect is
/// exactly `K`; `K = 0` is skipped unless `K_c = 0`, and levels with
/// `K ≥ 1/C` are skipped. Per case the smallest passing constant is
/// `(1 − ηI/Ent)/(η + K)`.
pub fn rmlsi_sweep(mu: &GridMeasure, c: f64, cost: &SeparableCost, functions: &[GridFunction]) -> Result<Sweep> {
    let smoothed: Vec<(usize, f64)> = (0..functions.len())
        .flat_map(|i| SMOOTHING_TIMES.iter().map(move |&t| (i, t)))
        .collect();
    let prepared = par::map_slice(&smoothed, |&(i, t)| -> Result<(usize, f64, GridFunction, f64)> {
        let g = sup_convolution(&functions[i], t, cost)?;
        let k = semiconvexity_defect(&g, cost)?.k_min;
        Ok((i, t, g, k))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut cases = Vec::new();
    let mut skipped = 0;
    for (pi, (_, _, _, k_cert)) in prepared.iter().enumerate() {
        let mut levels = vec![*k_cert];
        levels.extend(rmlsi_levels(c).into_iter().filter(|&k| k != *k_cert));
        for k in levels {
            if k * c >= 1.0 || (k == 0.0 && *k_cert > 0.0) {
                skipped += 1;
                continue;
            }
            cases.push((pi, k));
        }
    }
    let out = par::map_slice(&cases, |&(pi, k)| -> Result<(InequalityReport, f64)> {
        let (i, t, g, k_cert) = &prepared[pi];
        let eta = (1.0 / c - k) / 2.0;
        let scaled;
        let f = if k < *k_cert {
            scaled = g.scale(k / k_cert);
            &scaled
        } else {
            g
        };
        let mut r = verify_rmlsi(mu, c, cost, k, eta, f)?;
        r.witness = format!("P_{t} f[{i}], {}", r.witness);
        let integral = r.rhs * (1.0 - c * (eta + k)) / eta;
        let needed = if r.lhs > 0.0 && integral.is_finite() {
            (1.0 - eta * integral / r.lhs) / (eta + k)
        } else {
            0.0
        };
        Ok((r, needed.max(0.0)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let c_hat = out.iter().map(|(_, q)| *q).fold(0.0, f64::max);
    Ok(Sweep {
        reports: out.into_iter().map(|(r, _)| r).collect(),
        skipped,
        c_hat,
    })
}

/// Outcome of [`run_chain`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub grid: Grid1D,
    pub mean: f64,
    pub cost: String,
    pub c: f64,
    pub seed: u64,
    pub tc: StageSummary,
    pub iclsi: StageSummary,
    pub rmlsi: StageSummary,
    /// Empirical lower bounds on the optimal constants over the family.
    pub c_hat_tc: f64,
    pub c_hat_iclsi: f64,
    pub c_hat_rmlsi: f64,
    /// When the rMLSI stage passes at `C`: whether `8C ≥ Ĉ_Tc`.
    pub eight_c_covers_tc: Option<bool>,
}

/// Transport inequality, then ICLSI, then rMLSI, all at the same `C`, on the
/// seeded family.
pub fn run_chain(mu: &GridMeasure, cost: &SeparableCost, c: f64, seed: u64) -> Result<ChainReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let family = TestFamily::new(seed);
    let functions = family.all_functions(*mu.grid())?;
    let tc = tc_sweep(mu, c, cost, &family)?;
    let iclsi = iclsi_sweep(mu, c, cost, &functions)?;
    let rmlsi = rmlsi_sweep(mu, c, cost, &functions)?;
    let rmlsi_summary = StageSummary::from_reports(&rmlsi.reports, rmlsi.skipped);
    Ok(ChainReport {
        grid: *mu.grid(),
        mean: mu.mean(),
        cost: cost.alpha().name().to_string(),
        c,
        seed,
        tc: StageSummary::from_reports(&tc.reports, 0),
        iclsi: StageSummary::from_reports(&iclsi.reports, 0),
        eight_c_covers_tc: rmlsi_summary.all_pass().then_some(8.0 * c >= tc.c_hat),
        rmlsi: rmlsi_summary,
        c_hat_tc: tc.c_hat,
        c_hat_iclsi: iclsi.c_hat,
        c_hat_rmlsi: rmlsi.c_hat,
    })
}

/// `𝒯_c(ν,μ)/H(ν|μ)` for one pair, `None` when `H` is zero or infinite.
pub fn transport_entropy_ratio(nu: &GridMeasure, mu: &GridMeasure, cost: &SeparableCost) -> Result<Option<f64>> {
    let h = crate::measure::relative_entropy(nu, mu)?;
    if !(h > 0.0 && h.is_finite()) {
        return Ok(None);
    }
    Ok(Some(transport_1d_monotone(nu, mu, cost)?.cost / h))
}
