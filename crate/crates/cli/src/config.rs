//! Run configuration: one flat record shared by the flag parser and the JSON
//! config file, resolved and validated before anything runs.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tel_core::{AlphaCost, Grid1D};

pub const DEFAULT_COST: &str = "quadratic";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Transport,
    Semigroup,
    Certify,
    Verify,
    Constants,
    Chain,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Ineq {
    Tc,
    Iclsi,
    Rmlsi,
    Rlsi,
    Bg,
    Ls1,
    Ls2,
    Poincare,
    Bli,
    Herbst,
    Tensor,
    Perturb,
    Conc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Inf,
    Sup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Supv,
    Phimin,
    Bli,
    Ell,
}

/// The serde name of a unit variant.
pub fn id<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|s| s.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&id(self))
    }
}

fn default_cost() -> String {
    DEFAULT_COST.to_string()
}

/// Everything a run needs. Fields that a command does not use must be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ineq: Option<Ineq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<Op>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub which: Option<Which>,
    /// Measure spec JSON for μ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<PathBuf>,
    /// Measure spec JSON for ν (transport only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<PathBuf>,
    /// `point,value` CSV of a grid function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<PathBuf>,
    /// Report array JSON (report only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default = "default_cost")]
    pub cost: String,
    #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Replaces the grid of every measure spec; the density is re-discretized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid1D>,
    /// Tolerance applied to every report instead of the default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Where to write the CSV summary of a report array.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            ineq: None,
            op: None,
            which: None,
            mu: None,
            nu: None,
            f: None,
            input: None,
            cost: default_cost(),
            c: None,
            lambda: None,
            kappa: None,
            t: None,
            eta: None,
            v: None,
            seed: 0,
            grid: None,
            tol: None,
            out: None,
            csv: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            anyhow::anyhow!("config error at `{path}`: {}", err.into_inner())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn alpha(&self) -> Result<AlphaCost> {
        AlphaCost::from_id(&self.cost).with_context(|| "at `cost`")
    }

    /// Checks the fields each command needs and rejects the ones it ignores.
    pub fn validate(&self) -> Result<()> {
        use Command::*;
        self.alpha()?;
        let present = [
            ("ineq", self.ineq.is_some()),
            ("op", self.op.is_some()),
            ("which", self.which.is_some()),
            ("mu", self.mu.is_some()),
            ("nu", self.nu.is_some()),
            ("f", self.f.is_some()),
            ("input", self.input.is_some()),
            ("C", self.c.is_some()),
            ("lambda", self.lambda.is_some()),
            ("kappa", self.kappa.is_some()),
            ("t", self.t.is_some()),
            ("eta", self.eta.is_some()),
            ("v", self.v.is_some()),
            ("grid", self.grid.is_some()),
            ("tol", self.tol.is_some()),
            ("csv", self.csv.is_some()),
        ];
        let (required, allowed): (&[&str], &[&str]) = match self.command {
            Transport => (&["nu", "mu"], &["grid"]),
            Semigroup => (&["op", "lambda", "f"], &[]),
            Certify => (&["f"], &[]),
            Verify => (&["ineq", "mu", "C"], &["grid", "tol", "csv"]),
            Constants => (&["which"], &["lambda", "C", "kappa", "t", "eta", "v"]),
            Chain => (&["mu", "C"], &["grid"]),
            Report => (&["input"], &["tol"]),
        };
        for (key, set) in present {
            if required.contains(&key) && !set {
                bail!("config error at `{key}`: required by `{}`", self.command);
            }
            if set && !required.contains(&key) && !allowed.contains(&key) {
                bail!("config error at `{key}`: not used by `{}`", self.command);
            }
        }
        if let Some(which) = self.which {
            let needed: &[(&str, bool)] = match which {
                Which::Supv => &[],
                Which::Phimin => &[("lambda", self.lambda.is_some()), ("C", self.c.is_some())],
                Which::Bli => &[("kappa", self.kappa.is_some()), ("C", self.c.is_some())],
                Which::Ell => &[
                    ("t", self.t.is_some()),
                    ("eta", self.eta.is_some()),
                    ("v", self.v.is_some()),
                ],
            };
            if let Some((key, _)) = needed.iter().find(|(_, set)| !set) {
                bail!(
                    "config error at `{key}`: required by `constants --which {}`",
                    id(&which)
                );
            }
        }
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                bail!("config error at `C`: must be positive and finite, got {c}");
            }
        }
        if let Some(tol) = self.tol {
            if !(tol >= 0.0 && tol.is_finite()) {
                bail!("config error at `tol`: must be non-negative and finite, got {tol}");
            }
        }
        if let Some(grid) = self.grid {
            grid.validate().context("at `grid`")?;
        }
        Ok(())
    }
}
