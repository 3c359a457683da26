//! Instance verifiers. Each call checks one inequality on concrete grid data
//! and returns an [`InequalityReport`]; sweeps return one report per case in
//! input order.
//!
//! Semi-convexity hypotheses are enforced through certificates: a function
//! whose certified defect exceeds the claimed `K` is a precondition error,
//! not a failed instance.

use serde::Serialize;

use crate::constants::bli_constant;
use crate::cost::{AlphaCost, SeparableCost};
use crate::error::{Error, Result};
use crate::family::TestFamily;
use crate::measure::{
    boundary_mass, ent_exp_shifted, gradient, osc, relative_entropy, tilt, variance, weighted_exp_shifted,
    GridFunction, GridMeasure, ProductFunction, ProductMeasure,
};
use crate::par;
use crate::report::{all_pass, InequalityReport};
use crate::semigroup::{
    inf_convolution, lipschitz_constant, min_plus, semiconvexity_defect, sup_convolution_lambda, Engine,
    SemiConvexityCertificate,
};
use crate::transport::transport_1d_monotone;

/// Relative slack allowed between a claimed `K` and the certified defect.
pub const CERT_TOL: f64 = 1e-9;
/// Largest product grid side accepted by [`tensorization_check`].
pub const TENSOR_SIDE_LIMIT: usize = 101;

fn same_grid(mu: &GridMeasure, f: &GridFunction) -> Result<()> {
    if mu.grid() == f.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            left: mu.grid().to_string(),
            right: f.grid().to_string(),
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn precondition(check: &'static str, ok: bool, detail: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition {
            check,
            detail: detail(),
        })
    }
}

/// Mass of the tilted measure `e^f μ / ∫e^f dμ` near the grid ends.
fn tilted_boundary_mass(mu: &GridMeasure, f: &GridFunction) -> f64 {
    let top = f.max();
    let w: Vec<f64> = mu
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, v)| w * (v - top).exp())
        .collect();
    let z: f64 = w.iter().sum();
    boundary_mass(&w) / z
}

/// `(Ent_μ(e^f), ∫ g e^f dμ)` evaluated through a common max-shift.
fn ent_and_weighted(mu: &GridMeasure, f: &GridFunction, g: &[f64]) -> (f64, f64) {
    let (ent, top) = ent_exp_shifted(mu.weights(), f.values());
    let weighted = weighted_exp_shifted(mu.weights(), f.values(), g, top);
    let scale = top.exp();
    (ent * scale, weighted * scale)
}

/// Certifies that `f` is `k`-semi-convex for `cost`.
pub fn certify(f: &GridFunction, cost: &SeparableCost, k: f64) -> Result<SemiConvexityCertificate> {
    let cert = semiconvexity_defect(f, cost)?;
    precondition("semi-convexity", cert.k_min <= k + CERT_TOL * (1.0 + k), || {
        format!("certified defect {} exceeds K = {k}", cert.k_min)
    })?;
    Ok(cert)
}

/// `𝒯_c(ν, μ) ≤ C·H(ν|μ)` for one ν.
pub fn tc_report(
    mu: &GridMeasure,
    c: f64,
    cost: &SeparableCost,
    nu: &GridMeasure,
    label: &str,
) -> Result<InequalityReport> {
    positive("C", c)?;
    let h = relative_entropy(nu, mu)?;
    let t = transport_1d_monotone(nu, mu, cost)?.cost;
    let rhs = if h.is_infinite() { f64::INFINITY } else { c * h };
    let mut r = InequalityReport::new("tc", c, t, rhs)
        .witness(label)
        .boundary_mass(nu.boundary_mass())
        .grid(mu.grid());
    if h.is_infinite() {
        r = r.flag("not_absolutely_continuous");
    }
    Ok(r)
}

/// `T_c(C)` against every measure in `measures`.
pub fn verify_tc(
    mu: &GridMeasure,
    c: f64,
    cost: &SeparableCost,
    measures: &[GridMeasure],
) -> Result<Vec<InequalityReport>> {
    let indexed: Vec<(usize, &GridMeasure)> = measures.iter().enumerate().collect();
    par::map_slice(&indexed, |(i, nu)| tc_report(mu, c, cost, nu, &format!("nu[{i}]")))
        .into_iter()
        .collect()
}

/// `T_c(C)` against the tilts of `μ` generated by `family`.
pub fn verify_tc_family(
    mu: &GridMeasure,
    c: f64,
    cost: &SeparableCost,
    family: &TestFamily,
) -> Result<Vec<InequalityReport>> {
    verify_tc(mu, c, cost, &family.measures(mu)?)
}

/// `Ent_μ(e^f) ≤ (1/(1−λC)) ∫(f − Q^λ f) e^f dμ` for `λ ∈ (0, 1/C)`.
pub fn verify_iclsi(
    mu: &GridMeasure,
    c: f64,
    lambda: f64,
    f: &GridFunction,
    cost: &SeparableCost,
) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    positive("lambda", lambda)?;
    precondition("lambda < 1/C", lambda * c < 1.0, || {
        format!("lambda = {lambda}, C = {c}")
    })?;
    let q = inf_convolution(f, lambda, cost)?;
    let gap: Vec<f64> = f.values().iter().zip(q.values()).map(|(a, b)| a - b).collect();
    let (ent, d) = ent_and_weighted(mu, f, &gap);
    Ok(InequalityReport::new("iclsi", c, ent, d / (1.0 - lambda * c))
        .witness(format!("lambda={lambda}"))
        .boundary_mass(tilted_boundary_mass(mu, f))
        .grid(mu.grid()))
}

/// `Ent_μ(e^f) ≤ (η/(1−C(η+K))) ∫ c*(∇f/η) e^f dμ` for `K`-semi-convex `f`.
pub fn verify_rmlsi(
    mu: &GridMeasure,
    c: f64,
    cost: &SeparableCost,
    k: f64,
    eta: f64,
    f: &GridFunction,
) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    positive("eta", eta)?;
    precondition("K >= 0", k >= 0.0, || format!("K = {k}"))?;
    precondition("eta + K < 1/C", c * (eta + k) < 1.0, || {
        format!("eta = {eta}, K = {k}, C = {c}")
    })?;
    let cert = certify(f, cost, k)?;
    let alpha = cost.alpha();
    let conj: Vec<f64> = gradient(f).values().iter().map(|g| alpha.conj(g / eta)).collect();
    let (ent, integral) = ent_and_weighted(mu, f, &conj);
    let mut r = InequalityReport::new("rmlsi", c, ent, eta / (1.0 - c * (eta + k)) * integral)
        .witness(format!("K={k}, eta={eta}, K_cert={}", cert.k_min))
        .boundary_mass(tilted_boundary_mass(mu, f))
        .grid(mu.grid());
    if cert.boundary_witness {
        r = r.flag("boundary_witness");
    }
    Ok(r)
}

/// The `η` that turns the quadratic-cost rMLSI prefactor into the rLSI one.
pub fn rlsi_optimal_eta(c: f64, k: f64) -> f64 {
    (1.0 - c * k) / (2.0 * c)
}

/// `Ent_μ(e^f) ≤ (2C/(1−KC)²) ∫|∇f|² e^f dμ` for `K`-semi-convex `f` (quadratic cost).
pub fn verify_rlsi(mu: &GridMeasure, c: f64, k: f64, f: &GridFunction) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    precondition("0 <= K < 1/C", k >= 0.0 && k * c < 1.0, || format!("K = {k}, C = {c}"))?;
    let cert = certify(f, &SeparableCost::scalar(AlphaCost::quadratic()), k)?;
    let sq: Vec<f64> = gradient(f).values().iter().map(|g| g * g).collect();
    let (ent, integral) = ent_and_weighted(mu, f, &sq);
    let pre = 2.0 * c / ((1.0 - k * c) * (1.0 - k * c));
    Ok(InequalityReport::new("rlsi", c, ent, pre * integral)
        .witness(format!("K={k}, K_cert={}", cert.k_min))
        .boundary_mass(tilted_boundary_mass(mu, f))
        .grid(mu.grid()))
}

/// `∫e^f dμ ≤ exp(∫ P^λ f dμ)` with `P^λ f(x) = sup_y { f(y) − λc(x−y) }`.
pub fn verify_bobkov_gotze(
    mu: &GridMeasure,
    lambda: f64,
    f: &GridFunction,
    cost: &SeparableCost,
) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("lambda", lambda)?;
    let p = sup_convolution_lambda(f, lambda, cost)?;
    // Compare on the log scale shifted by max f so large f cannot overflow.
    let top = f.max();
    let lhs: f64 = mu
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, v)| w * (v - top).exp())
        .sum();
    let rhs = (mu.expect(p.values()) - top).exp();
    let scale = top.exp();
    Ok(
        InequalityReport::new("bobkov_gotze", 1.0 / lambda, lhs * scale, rhs * scale)
            .witness(format!("lambda={lambda}"))
            .boundary_mass(tilted_boundary_mass(mu, f))
            .grid(mu.grid()),
    )
}

/// `Ent_μ(e^f) ≤ (1/(1−λC)) ∫(P^λ f − f) dμ · ∫e^f dμ`.
pub fn verify_ls1(
    mu: &GridMeasure,
    c: f64,
    lambda: f64,
    f: &GridFunction,
    cost: &SeparableCost,
) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    positive("lambda", lambda)?;
    precondition("lambda < 1/C", lambda * c < 1.0, || {
        format!("lambda = {lambda}, C = {c}")
    })?;
    let p = sup_convolution_lambda(f, lambda, cost)?;
    let gap: Vec<f64> = p.values().iter().zip(f.values()).map(|(a, b)| a - b).collect();
    let ones = vec![1.0; gap.len()];
    let (ent, z) = ent_and_weighted(mu, f, &ones);
    let rhs = mu.expect(&gap) * z / (1.0 - lambda * c);
    Ok(InequalityReport::new("ls1", c, ent, rhs)
        .witness(format!("lambda={lambda}"))
        .boundary_mass(tilted_boundary_mass(mu, f))
        .grid(mu.grid()))
}

/// `Ent_μ(e^f) ≤ (η/(1−C(η+K))) ∫c*(∇f/η) dμ · ∫e^f dμ` for `K`-semi-concave `f`.
pub fn verify_ls2(
    mu: &GridMeasure,
    c: f64,
    k: f64,
    eta: f64,
    f: &GridFunction,
    cost: &SeparableCost,
) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    positive("eta", eta)?;
    precondition("K >= 0", k >= 0.0, || format!("K = {k}"))?;
    precondition("eta + K < 1/C", c * (eta + k) < 1.0, || {
        format!("eta = {eta}, K = {k}, C = {c}")
    })?;
    let cert = semiconvexity_defect(&f.neg(), cost)?;
    precondition("semi-concavity", cert.k_min <= k + CERT_TOL * (1.0 + k), || {
        format!("certified defect of -f {} exceeds K = {k}", cert.k_min)
    })?;
    let alpha = cost.alpha();
    let conj: Vec<f64> = gradient(f).values().iter().map(|g| alpha.conj(g / eta)).collect();
    let ones = vec![1.0; conj.len()];
    let (ent, z) = ent_and_weighted(mu, f, &ones);
    let integral = mu.expect(&conj);
    let rhs = if integral.is_infinite() {
        f64::INFINITY
    } else {
        eta / (1.0 - c * (eta + k)) * integral * z
    };
    Ok(InequalityReport::new("ls2", c, ent, rhs)
        .witness(format!("K={k}, eta={eta}, K_cert={}", cert.k_min))
        .boundary_mass(tilted_boundary_mass(mu, f))
        .grid(mu.grid()))
}

/// `Var_μ(f) ≤ C ∫|∇f|² dμ`.
pub fn verify_poincare(mu: &GridMeasure, c: f64, f: &GridFunction) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    let var = variance(mu, f)?;
    let sq: Vec<f64> = gradient(f).values().iter().map(|g| g * g).collect();
    Ok(InequalityReport::new("poincare", c, var, c * mu.expect(&sq))
        .boundary_mass(mu.boundary_mass())
        .grid(mu.grid()))
}

/// `Ent_μ(e^f) ≤ Cκ² K(κ,C) ∫ α₂,₁*(∇f/κ) e^f dμ` for `κ < 2/√C`.
pub fn verify_bli(mu: &GridMeasure, c: f64, kappa: f64, f: &GridFunction) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    positive("kappa", kappa)?;
    let k = bli_constant(kappa, c)?;
    let alpha = AlphaCost::alpha21();
    let conj: Vec<f64> = gradient(f).values().iter().map(|g| alpha.conj(g / kappa)).collect();
    let (ent, integral) = ent_and_weighted(mu, f, &conj);
    Ok(InequalityReport::new("bli", c, ent, c * kappa * kappa * k * integral)
        .witness(format!("kappa={kappa}, K={k}"))
        .boundary_mass(tilted_boundary_mass(mu, f))
        .grid(mu.grid()))
}

/// `∫e^{λ(f−∫f dμ)} dμ ≤ exp(2λ²C/(1−λKC))` for 1-Lipschitz, `K`-semi-convex `f`.
///
/// The Lipschitz precondition allows `2h` of grid slack.
pub fn herbst_check(mu: &GridMeasure, c: f64, k: f64, f: &GridFunction, lambda: f64) -> Result<InequalityReport> {
    same_grid(mu, f)?;
    positive("C", c)?;
    positive("lambda", lambda)?;
    precondition("K >= 0", k >= 0.0, || format!("K = {k}"))?;
    precondition("lambda < 1/(CK)", lambda * c * k < 1.0, || {
        format!("lambda = {lambda}, C = {c}, K = {k}")
    })?;
    let lip = lipschitz_constant(f);
    let h = f.grid().spacing();
    precondition("1-Lipschitz", lip <= 1.0 + 2.0 * h, || {
        format!("grid Lipschitz constant {lip}")
    })?;
    certify(f, &SeparableCost::scalar(AlphaCost::quadratic()), k)?;
    let lhs = crate::measure::laplace(mu, f, lambda)?;
    let rhs = (2.0 * lambda * lambda * c / (1.0 - lambda * k * c)).exp();
    Ok(InequalityReport::new("herbst", c, lhs, rhs)
        .witness(format!("K={k}, lambda={lambda}"))
        .boundary_mass(mu.boundary_mass())
        .grid(mu.grid()))
}

/// `Ent_{μ⊗μ'}(e^f) ≤ ∫ Σᵢ Ent(e^{fᵢ}) d(μ⊗μ')` on a 2-fold product grid.
pub fn tensorization_check(mu: &ProductMeasure, f: &ProductFunction) -> Result<InequalityReport> {
    if mu.dims() != 2 {
        return Err(Error::InvalidParameter("tensorization needs a 2-fold product".into()));
    }
    let shape = mu.shape();
    if f.shape() != shape.as_slice() {
        return Err(Error::InvalidParameter(format!(
            "function shape {:?} does not match product shape {shape:?}",
            f.shape()
        )));
    }
    precondition(
        "product grid <= 101x101",
        shape.iter().all(|&s| s <= TENSOR_SIDE_LIMIT),
        || format!("shape {shape:?}"),
    )?;
    let (a, b) = (mu.factors()[0].weights(), mu.factors()[1].weights());
    let (n, m) = (shape[0], shape[1]);
    let v = f.values();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lhs_shifted, _) = ent_exp_shifted(&mu.joint_weights(), &shifted(v, top));
    // Entropies of the one-coordinate sections, all with the same shift.
    let row = |i: usize| -> f64 { section_ent(b, &v[i * m..(i + 1) * m], top) };
    let col = |j: usize| -> f64 {
        let s: Vec<f64> = (0..n).map(|i| v[i * m + j]).collect();
        section_ent(a, &s, top)
    };
    let rows = par::map_range(n, row);
    let cols = par::map_range(m, col);
    let rhs_shifted: f64 =
        a.iter().zip(&rows).map(|(w, e)| w * e).sum::<f64>() + b.iter().zip(&cols).map(|(w, e)| w * e).sum::<f64>();
    let scale = top.exp();
    Ok(
        InequalityReport::new("tensorization", 1.0, lhs_shifted * scale, rhs_shifted * scale)
            .witness(format!("{n}x{m}")),
    )
}

fn shifted(v: &[f64], top: f64) -> Vec<f64> {
    v.iter().map(|x| x - top).collect()
}

/// `Ent(e^{s − top})` for a section `s`, on the scale fixed by `top`.
fn section_ent(weights: &[f64], s: &[f64], top: f64) -> f64 {
    let (e, local_top) = ent_exp_shifted(weights, &shifted(s, top));
    e * local_top.exp()
}

/// One row of a concentration profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    /// `μⁿ(A + rB₂)`.
    pub enlarged_mass: f64,
    /// `1 − e^{−(r−r₀)²/(18C)}` for `r ≥ r₀`, else 0.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationProfile {
    pub c: f64,
    pub r0: f64,
    pub set_mass: f64,
    pub rows: Vec<ProfileRow>,
}

impl ConcentrationProfile {
    pub fn reports(&self) -> Vec<InequalityReport> {
        self.rows
            .iter()
            .map(|row| {
                let mut r = InequalityReport::new("concentration", self.c, row.bound, row.enlarged_mass)
                    .witness(format!("r={}", row.r));
                if row.r < self.r0 {
                    r = r.flag("below_r0");
                }
                r
            })
            .collect()
    }
}

/// `r₀ = √(18C·log 2) + ε`, the smallest radius with `e^{−r₀²/(18C)} < 1/2`.
pub fn concentration_r0(c: f64) -> f64 {
    (18.0 * c * std::f64::consts::LN_2).sqrt() + 1e-9
}

/// Indicator of `{x : x₁ ≤ q}` with `q` the smallest grid value whose first
/// marginal cumulative mass reaches 1/2.
pub fn half_space(mu: &ProductMeasure) -> Vec<bool> {
    let first = &mu.factors()[0];
    let mut acc = 0.0;
    let mut cut = first.weights().len() - 1;
    for (i, w) in first.weights().iter().enumerate() {
        acc += w;
        if acc >= 0.5 {
            cut = i;
            break;
        }
    }
    (0..mu.len()).map(|k| mu.unflatten(k)[0] <= cut).collect()
}

/// Squared Euclidean distance from every grid point to the set `a`.
fn squared_distance(mu: &ProductMeasure, a: &[bool]) -> Vec<f64> {
    let grids: Vec<_> = mu.factors().iter().map(|f| *f.grid()).collect();
    let kernel = |g: &crate::measure::Grid1D| -> Vec<f64> {
        let n = g.len();
        let h = g.spacing();
        (0..2 * n - 1)
            .map(|k| {
                let d = (k as f64 - (n - 1) as f64) * h;
                d * d
            })
            .collect()
    };
    let inf_or_zero = |inside: bool| if inside { 0.0 } else { f64::INFINITY };
    match grids.len() {
        1 => {
            let v: Vec<f64> = a.iter().map(|&x| inf_or_zero(x)).collect();
            min_plus(&v, &kernel(&grids[0]), Engine::Brute).0
        }
        _ => {
            let (n, m) = (grids[0].len(), grids[1].len());
            let k0 = kernel(&grids[0]);
            let k1 = kernel(&grids[1]);
            // Pass along the second coordinate for every row, then the first.
            let rows = par::map_range(n, |i| {
                let v: Vec<f64> = (0..m).map(|j| inf_or_zero(a[i * m + j])).collect();
                min_plus(&v, &k1, Engine::Brute).0
            });
            let cols = par::map_range(m, |j| {
                let v: Vec<f64> = (0..n).map(|i| rows[i][j]).collect();
                min_plus(&v, &k0, Engine::Brute).0
            });
            (0..n * m).map(|k| cols[k % m][k / m]).collect()
        }
    }
}

/// `r ↦ μⁿ(A + rB₂)` against `1 − e^{−(r−r₀)²/(18C)}`.
pub fn concentration_profile(
    mu: &ProductMeasure,
    a: &[bool],
    r_values: &[f64],
    c: f64,
) -> Result<ConcentrationProfile> {
    positive("C", c)?;
    if a.len() != mu.len() {
        return Err(Error::InvalidParameter(format!(
            "set indicator has {} entries, grid has {}",
            a.len(),
            mu.len()
        )));
    }
    let w = mu.joint_weights();
    let set_mass: f64 = w.iter().zip(a).filter(|(_, &x)| x).map(|(w, _)| w).sum();
    precondition("mu(A) >= 1/2", set_mass >= 0.5 - 1e-12, || {
        format!("mu(A) = {set_mass}")
    })?;
    let d2 = squared_distance(mu, a);
    let r0 = concentration_r0(c);
    let rows = r_values
        .iter()
        .map(|&r| {
            let reach = r * r * (1.0 + 1e-12);
            let enlarged_mass = w.iter().zip(&d2).filter(|(_, &d)| d <= reach).map(|(w, _)| w).sum();
            let bound = if r >= r0 {
                1.0 - (-(r - r0) * (r - r0) / (18.0 * c)).exp()
            } else {
                0.0
            };
            ProfileRow {
                r,
                enlarged_mass,
                bound,
            }
        })
        .collect();
    Ok(ConcentrationProfile { c, r0, set_mass, rows })
}

/// Runs `T_c(8C·e^{Osc φ})` for `μ̃ = e^φ μ / Z` on the tilts of `μ̃`, after
/// checking that `T_c(C)` holds for `μ` on the same family.
pub fn perturbation_check(
    mu: &GridMeasure,
    c: f64,
    phi: &GridFunction,
    cost: &SeparableCost,
    family: &TestFamily,
) -> Result<Vec<InequalityReport>> {
    same_grid(mu, phi)?;
    let base = verify_tc_family(mu, c, cost, family)?;
    precondition("T_c(C) holds for mu on the family", all_pass(&base), || {
        let failed = base.iter().filter(|r| !r.pass).count();
        format!("{failed} of {} reports fail", base.len())
    })?;
    let perturbed = tilt(mu, phi)?;
    let constant = 8.0 * c * osc(phi).exp();
    Ok(verify_tc_family(&perturbed, constant, cost, family)?
        .into_iter()
        .map(|r| r.flag("perturbed"))
        .collect())
}

/// Pointwise `f − Q^{K+η} f ≤ η c*(−∇f/η)` over interior grid points for a
/// certified `K`-semi-convex `f`. The report's `lhs` is the largest
/// violation `(f − Q f) − η c*(…)`, `rhs = 0`.
pub fn inf_convolution_gap_check(f: &GridFunction, k: f64, eta: f64, cost: &SeparableCost) -> Result<InequalityReport> {
    positive("eta", eta)?;
    precondition("K >= 0", k >= 0.0, || format!("K = {k}"))?;
    certify(f, cost, k)?;
    let q = inf_convolution(f, k + eta, cost)?;
    let g = gradient(f);
    let alpha = cost.alpha();
    let n = f.grid().len();
    let mut worst = f64::NEG_INFINITY;
    let mut at = 1;
    for i in 1..n - 1 {
        let bound = eta * alpha.conj(-g.values()[i] / eta);
        let excess = f.values()[i] - q.values()[i] - bound;
        if excess > worst {
            worst = excess;
            at = i;
        }
    }
    Ok(InequalityReport::with_tol(
        "inf_convolution_gap",
        k,
        worst,
        0.0,
        1e-9 * (1.0 + f.values()[at].abs()),
    )
    .witness(format!("x={}", f.grid().point(at)))
    .grid(f.grid()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{discretize, Density, Grid1D};

    fn std_gaussian() -> GridMeasure {
        let g = Grid1D::new(-8.0, 8.0, 1601).unwrap();
        discretize(&Density::Gaussian { mean: 0.0, sd: 1.0 }, &g).unwrap()
    }

    fn quad() -> SeparableCost {
        SeparableCost::scalar(AlphaCost::quadratic())
    }

    #[test]
    fn tc_on_itself_and_translate() {
        let mu = std_gaussian();
        let r = tc_report(&mu, 1.0, &quad(), &mu, "mu").unwrap();
        assert!(r.pass && r.lhs == 0.0 && r.rhs == 0.0);
        let nu = discretize(&Density::Gaussian { mean: 0.5, sd: 1.0 }, mu.grid()).unwrap();
        let r = tc_report(&mu, 1.0, &quad(), &nu, "shift").unwrap();
        assert!((r.lhs - 0.125).abs() < 1e-4 && (r.rhs - 0.125).abs() < 1e-4);
        assert!(r.slack.abs() < 1e-4);
    }

    #[test]
    fn tc_flags_mass_outside_support() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let mu = GridMeasure::new(g, vec![1.0, 1.0, 0.0]).unwrap();
        let nu = GridMeasure::new(g, vec![0.0, 1.0, 1.0]).unwrap();
        let r = tc_report(&mu, 1.0, &quad(), &nu, "nu").unwrap();
        assert!(r.pass && r.rhs.is_infinite());
        assert!(r.diagnostics.flags.contains(&"not_absolutely_continuous".to_string()));
    }

    #[test]
    fn constant_functions_are_equalities() {
        let mu = std_gaussian();
        let f = GridFunction::constant(*mu.grid(), 0.4).unwrap();
        for r in [
            verify_iclsi(&mu, 1.0, 0.5, &f, &quad()).unwrap(),
            verify_rmlsi(&mu, 1.0, &quad(), 0.0, 0.5, &f).unwrap(),
            verify_rlsi(&mu, 1.0, 0.0, &f).unwrap(),
            verify_poincare(&mu, 1.0, &f).unwrap(),
        ] {
            assert!(r.pass, "{r:?}");
            assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12, "{r:?}");
        }
        let bg = verify_bobkov_gotze(&mu, 1.0, &f, &quad()).unwrap();
        assert!((bg.lhs - bg.rhs).abs() < 1e-12);
    }

    #[test]
    fn iclsi_sin_example() {
        let mu = std_gaussian();
        let f = GridFunction::from_fn(*mu.grid(), |x| 0.3 * x.sin()).unwrap();
        let r = verify_iclsi(&mu, 1.0, 0.5, &f, &quad()).unwrap();
        assert!(r.pass && r.slack > 0.0);
        assert_eq!(r.tol, crate::report::default_tol(r.lhs));
    }

    #[test]
    fn rmlsi_with_optimal_eta_equals_rlsi() {
        let mu = std_gaussian();
        let f = GridFunction::from_fn(*mu.grid(), |x| 0.2 * (0.7 * x).sin() + 0.1 * x).unwrap();
        let k = semiconvexity_defect(&f, &quad()).unwrap().k_min;
        let eta = rlsi_optimal_eta(1.0, k);
        let a = verify_rmlsi(&mu, 1.0, &quad(), k, eta, &f).unwrap();
        let b = verify_rlsi(&mu, 1.0, k, &f).unwrap();
        assert!((a.rhs - b.rhs).abs() < 1e-12 * b.rhs);
        // Any other eta gives a larger bound.
        let c = verify_rmlsi(&mu, 1.0, &quad(), k, 0.8 * eta, &f).unwrap();
        assert!(c.rhs > a.rhs);
    }

    #[test]
    fn rmlsi_rejects_uncertified_k() {
        let mu = std_gaussian();
        let f = GridFunction::from_fn(*mu.grid(), |x| -x * x / 4.0).unwrap();
        let err = verify_rmlsi(&mu, 1.0, &quad(), 0.1, 0.2, &f).unwrap_err();
        assert!(matches!(
            err,
            Error::Precondition {
                check: "semi-convexity",
                ..
            }
        ));
        assert!(verify_rmlsi(&mu, 1.0, &quad(), 0.5, 0.2, &f).is_ok());
        assert!(verify_rmlsi(&mu, 1.0, &quad(), 0.5, 0.6, &f).is_err());
    }

    #[test]
    fn herbst_linear_gaussian() {
        let mu = std_gaussian();
        let f = GridFunction::from_fn(*mu.grid(), |x| x).unwrap();
        let r = herbst_check(&mu, 1.0, 0.0, &f, 1.0).unwrap();
        assert!((r.lhs - 0.5f64.exp()).abs() < 1e-6);
        assert!((r.rhs - 2f64.exp()).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn bli_infinite_rhs_auto_passes() {
        let mu = std_gaussian();
        let f = GridFunction::from_fn(*mu.grid(), |x| 2.0 * x).unwrap();
        let r = verify_bli(&mu, 1.0, 1.0, &f).unwrap();
        assert!(r.pass && r.rhs.is_infinite());
        assert!(verify_bli(&mu, 1.0, 2.5, &f).is_err());
    }

    #[test]
    fn tensorization_holds_on_small_grid() {
        let g = Grid1D::new(-4.0, 4.0, 41).unwrap();
        let mu = discretize(&Density::Gaussian { mean: 0.0, sd: 1.0 }, &g).unwrap();
        let p = ProductMeasure::power(&mu, 2).unwrap();
        let f = ProductFunction::from_fn(&p, |x| (x[0] * x[1]).sin() + 0.3 * x[0]).unwrap();
        let r = tensorization_check(&p, &f).unwrap();
        assert!(r.pass && r.lhs > 0.0);
        let big = Grid1D::new(-4.0, 4.0, 103).unwrap();
        let mu = discretize(&Density::Uniform {}, &big).unwrap();
        let p = ProductMeasure::power(&mu, 2).unwrap();
        let f = ProductFunction::from_fn(&p, |x| x[0]).unwrap();
        assert!(tensorization_check(&p, &f).is_err());
    }

    #[test]
    fn concentration_whole_space() {
        let g = Grid1D::new(-4.0, 4.0, 81).unwrap();
        let mu = discretize(&Density::Gaussian { mean: 0.0, sd: 1.0 }, &g).unwrap();
        let p = ProductMeasure::power(&mu, 2).unwrap();
        let all = vec![true; p.len()];
        let prof = concentration_profile(&p, &all, &[0.0, 1.0, 5.0], 1.0).unwrap();
        for row in &prof.rows {
            assert!((row.enlarged_mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn squared_distance_matches_brute_force() {
        let g = Grid1D::new(-1.0, 1.0, 11).unwrap();
        let mu = discretize(&Density::Uniform {}, &g).unwrap();
        let p = ProductMeasure::power(&mu, 2).unwrap();
        let a: Vec<bool> = (0..p.len()).map(|k| k % 7 == 0 || k % 13 == 5).collect();
        let d2 = squared_distance(&p, &a);
        for k in 0..p.len() {
            let x = p.point(k);
            let brute = (0..p.len())
                .filter(|&j| a[j])
                .map(|j| {
                    let y = p.point(j);
                    (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d2[k] - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn inf_convolution_gap_on_concave_parabola() {
        let g = Grid1D::new(-3.0, 3.0, 301).unwrap();
        let f = GridFunction::from_fn(g, |x| -x * x / 2.0).unwrap();
        let r = inf_convolution_gap_check(&f, 1.0, 0.5, &quad()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(inf_convolution_gap_check(&f, 0.5, 0.5, &quad()).is_err());
    }
}
