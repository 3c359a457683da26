//! Executes a resolved [`RunConfig`].

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use tel_core::constants::{
    bli_constant, ell, ell_at_t, ell_prime, iclsi_lambdas, iclsi_sweep, phi_min, rmlsi_sweep, run_chain,
    sup_v_functional, t_of_v, SMOOTHING_TIMES,
};
use tel_core::measure::{discretize, ProductFunction};
use tel_core::semigroup::{inf_convolution, semiconvexity_defect, sup_convolution};
use tel_core::transport::{transport_cost, Law};
use tel_core::verify::{
    concentration_profile, concentration_r0, half_space, herbst_check, perturbation_check, tensorization_check,
    verify_bli, verify_bobkov_gotze, verify_ls1, verify_ls2, verify_poincare, verify_rlsi, verify_tc_family,
    TENSOR_SIDE_LIMIT,
};
use tel_core::{
    AlphaCost, Grid1D, GridFunction, GridMeasure, InequalityReport, MeasureSpec, ProductMeasure, SeparableCost,
    TestFamily,
};

use crate::config::{Command, Ineq, Op, RunConfig, Which};

/// Side length used for the product-grid checks when μ's grid is finer.
pub const PRODUCT_SIDE: usize = 61;

/// Result of a run, before it is written anywhere.
pub enum Output {
    Json { body: Value, pass: bool },
    Reports(Vec<InequalityReport>),
    Csv { body: String, pass: bool },
}

pub fn execute(config: &RunConfig) -> Result<Output> {
    let cost = SeparableCost::scalar(config.alpha()?);
    match config.command {
        Command::Transport => transport(config, &cost),
        Command::Semigroup => semigroup(config, &cost),
        Command::Certify => {
            let f = load_function(path(&config.f))?;
            let cert = semiconvexity_defect(&f, &cost)?;
            Ok(Output::Json {
                body: to_value(&cert)?,
                pass: true,
            })
        }
        Command::Verify => {
            let mut reports = verify(config, &cost)?;
            if let Some(tol) = config.tol {
                reports.iter_mut().for_each(|r| r.set_tol(tol));
            }
            Ok(Output::Reports(reports))
        }
        Command::Constants => constants(config),
        Command::Chain => {
            let spec = load_spec(path(&config.mu), config.grid)?;
            let chain = run_chain(&spec.build()?, &cost, constant(config), config.seed)?;
            let pass = chain.tc.all_pass() && chain.iclsi.all_pass() && chain.rmlsi.all_pass();
            Ok(Output::Json {
                body: to_value(&chain)?,
                pass,
            })
        }
        Command::Report => {
            let p = path(&config.input);
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            let mut reports: Vec<InequalityReport> = serde_path_to_error::deserialize(de)
                .map_err(|err| anyhow::anyhow!("{} at `{}`: {}", p.display(), err.path(), err.inner()))?;
            if let Some(tol) = config.tol {
                reports.iter_mut().for_each(|r| r.set_tol(tol));
            }
            let pass = tel_core::report::all_pass(&reports);
            Ok(Output::Csv {
                body: crate::emit::summary_csv(&reports)?,
                pass,
            })
        }
    }
}

fn path(p: &Option<std::path::PathBuf>) -> &Path {
    p.as_deref().expect("validated config")
}

fn constant(config: &RunConfig) -> f64 {
    config.c.expect("validated config")
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn load_spec(p: &Path, grid: Option<Grid1D>) -> Result<MeasureSpec> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut spec: MeasureSpec = serde_path_to_error::deserialize(de)
        .map_err(|err| anyhow::anyhow!("{} at `{}`: {}", p.display(), err.path(), err.inner()))?;
    if let Some(grid) = grid {
        spec.grid = grid;
    }
    Ok(spec)
}

fn load_function(p: &Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    GridFunction::from_csv(&text).with_context(|| format!("parsing {}", p.display()))
}

fn transport(config: &RunConfig, cost: &SeparableCost) -> Result<Output> {
    let nu = load_spec(path(&config.nu), config.grid)?.build()?;
    let mu = load_spec(path(&config.mu), config.grid)?.build()?;
    let result = transport_cost(Law::Line(&nu), Law::Line(&mu), cost)?;
    Ok(Output::Json {
        body: json!({ "cost": result.cost, "method": result.method }),
        pass: true,
    })
}

/// `inf` is `Q^λ f`; `sup` is `P_t f` with `t` read from `lambda`.
fn semigroup(config: &RunConfig, cost: &SeparableCost) -> Result<Output> {
    let f = load_function(path(&config.f))?;
    let lambda = config.lambda.expect("validated config");
    let g = match config.op.expect("validated config") {
        Op::Inf => inf_convolution(&f, lambda, cost)?,
        Op::Sup => sup_convolution(&f, lambda, cost)?,
    };
    Ok(Output::Csv {
        body: g.to_csv(),
        pass: true,
    })
}

fn constants(config: &RunConfig) -> Result<Output> {
    let body = match config.which.expect("validated config") {
        Which::Supv => to_value(&sup_v_functional())?,
        Which::Phimin => to_value(&phi_min(config.lambda.unwrap(), config.c.unwrap())?)?,
        Which::Bli => {
            let (kappa, c) = (config.kappa.unwrap(), config.c.unwrap());
            json!({ "kappa": kappa, "C": c, "K": bli_constant(kappa, c)? })
        }
        Which::Ell => {
            let (t, eta, v) = (config.t.unwrap(), config.eta.unwrap(), config.v.unwrap());
            if !(v > 0.0 && v < 1.0 && (0.0..=1.0).contains(&t) && eta > 0.0) {
                bail!("ell needs v in (0, 1), t in [0, 1] and eta > 0");
            }
            json!({
                "t": t,
                "eta": eta,
                "v": v,
                "ell": ell(t, eta, v),
                "ell_prime": ell_prime(t, eta, v),
                "T": t_of_v(v),
                "ell_at_T": ell_at_t(eta, v),
            })
        }
    };
    Ok(Output::Json { body, pass: true })
}

/// The measure spec's grid if it has at most `TENSOR_SIDE_LIMIT` points, otherwise
/// the same interval with `PRODUCT_SIDE` points; `true` when coarsened.
fn product_factor(spec: &MeasureSpec) -> Result<(GridMeasure, bool)> {
    if spec.grid.len() <= TENSOR_SIDE_LIMIT {
        return Ok((spec.build()?, false));
    }
    let (lo, hi) = (spec.grid.point(0), spec.grid.point(spec.grid.len() - 1));
    let grid = Grid1D::new(lo, hi, PRODUCT_SIDE)?;
    Ok((discretize(&spec.density, &grid)?, true))
}

fn on_product(r: InequalityReport, factor: &GridMeasure, coarsened: bool) -> InequalityReport {
    let r = r.grid(format!("{}^2", factor.grid()));
    if coarsened {
        r.flag("product_grid_coarsened")
    } else {
        r
    }
}

fn verify(config: &RunConfig, cost: &SeparableCost) -> Result<Vec<InequalityReport>> {
    let spec = load_spec(path(&config.mu), config.grid)?;
    let mu = spec.build()?;
    let grid = *mu.grid();
    let c = constant(config);
    let family = TestFamily::new(config.seed);
    let functions = || family.all_functions(grid);
    let quadratic = || -> Result<SeparableCost> {
        if !cost.alpha().is_quadratic() {
            bail!(
                "`{}` is stated for the quadratic cost, got `{}`",
                crate::config::id(&config.ineq),
                config.cost
            );
        }
        Ok(SeparableCost::scalar(AlphaCost::quadratic()))
    };
    let mut reports = Vec::new();
    match config.ineq.expect("validated config") {
        Ineq::Tc => reports = verify_tc_family(&mu, c, cost, &family)?,
        Ineq::Iclsi => reports = iclsi_sweep(&mu, c, cost, &functions()?)?.reports,
        Ineq::Rmlsi => reports = rmlsi_sweep(&mu, c, cost, &functions()?)?.reports,
        Ineq::Rlsi => {
            let quad = quadratic()?;
            for (i, f) in functions()?.iter().enumerate() {
                for t in SMOOTHING_TIMES {
                    let g = sup_convolution(f, t, &quad)?;
                    let k = semiconvexity_defect(&g, &quad)?.k_min;
                    if k * c < 1.0 {
                        reports.push(tag(verify_rlsi(&mu, c, k, &g)?, &format!("P_{t} f[{i}]")));
                    }
                }
            }
        }
        Ineq::Bg => {
            for i in 0..family.functions.len() {
                let f = family.lipschitz_function(i, grid)?;
                reports.push(tag(
                    verify_bobkov_gotze(&mu, 1.0 / c, &f, cost)?,
                    &format!("f[{i}]/Lip"),
                ));
            }
        }
        Ineq::Ls1 => {
            for (i, f) in functions()?.iter().enumerate() {
                for lambda in iclsi_lambdas(c) {
                    reports.push(tag(verify_ls1(&mu, c, lambda, f, cost)?, &format!("f[{i}]")));
                }
            }
        }
        Ineq::Ls2 => {
            // −P_t(−f) is semi-concave with the defect certified for P_t(−f).
            for (i, f) in functions()?.iter().enumerate() {
                for t in SMOOTHING_TIMES {
                    let g = sup_convolution(&f.neg(), t, cost)?.neg();
                    let k = semiconvexity_defect(&g.neg(), cost)?.k_min;
                    if k * c < 1.0 {
                        let eta = (1.0 / c - k) / 2.0;
                        reports.push(tag(verify_ls2(&mu, c, k, eta, &g, cost)?, &format!("-P_{t}(-f[{i}])")));
                    }
                }
            }
        }
        Ineq::Poincare => {
            for (i, f) in functions()?.iter().enumerate() {
                reports.push(tag(verify_poincare(&mu, c, f)?, &format!("f[{i}]")));
            }
        }
        Ineq::Bli => {
            for (i, f) in functions()?.iter().enumerate() {
                for kappa in [1.0 / c.sqrt(), 1.5 / c.sqrt()] {
                    reports.push(tag(verify_bli(&mu, c, kappa, f)?, &format!("f[{i}]")));
                }
            }
        }
        Ineq::Herbst => {
            let quad = quadratic()?;
            for i in 0..family.functions.len() {
                let f = family.lipschitz_function(i, grid)?;
                for t in SMOOTHING_TIMES {
                    let g = sup_convolution(&f, t, &quad)?;
                    let k = semiconvexity_defect(&g, &quad)?.k_min;
                    for lambda in [0.5, 1.0, 2.0] {
                        if lambda * k * c < 1.0 {
                            reports.push(tag(herbst_check(&mu, c, k, &g, lambda)?, &format!("P_{t} f[{i}]/Lip")));
                        }
                    }
                }
            }
        }
        Ineq::Tensor => {
            let (factor, coarsened) = product_factor(&spec)?;
            let prod = ProductMeasure::power(&factor, 2)?;
            let specs = &family.functions;
            if specs.len() < 2 {
                bail!("tensorization needs at least two family functions");
            }
            let pairs = (specs.len() / 2).min(10);
            for i in 0..pairs {
                let (a, b) = (specs[i], specs[i + pairs]);
                let f = ProductFunction::from_fn(&prod, |x| a.eval(x[0]) + b.eval(x[1]) + 0.3 * (x[0] * x[1]).sin())?;
                let r = tensorization_check(&prod, &f)?;
                let w = format!("f[{i}](x)+f[{}](y)+0.3sin(xy), {}", i + pairs, r.witness);
                reports.push(on_product(r.witness(w), &factor, coarsened));
            }
        }
        Ineq::Perturb => {
            let phi = GridFunction::from_fn(grid, |x| 0.5 * x.sin())?;
            reports = perturbation_check(&mu, c, &phi, cost, &family)?;
        }
        Ineq::Conc => {
            let (factor, coarsened) = product_factor(&spec)?;
            let prod = ProductMeasure::power(&factor, 2)?;
            let a = half_space(&prod);
            let r0 = concentration_r0(c);
            let rs: Vec<f64> = (0..12).map(|k| r0 * k as f64 / 6.0).collect();
            reports = concentration_profile(&prod, &a, &rs, c)?
                .reports()
                .into_iter()
                .map(|r| on_product(r, &factor, coarsened))
                .collect();
        }
    }
    Ok(reports)
}

fn tag(r: InequalityReport, label: &str) -> InequalityReport {
    let w = if r.witness.is_empty() {
        label.to_string()
    } else {
        format!("{label}, {}", r.witness)
    };
    r.witness(w)
}
