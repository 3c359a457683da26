//! Inequality instance reports.
//!
//! Extended-real fields serialize as JSON numbers when finite and as the
//! strings `"+inf"`, `"-inf"` or `"nan"` otherwise, so reports round-trip.

use serde::{Deserialize, Serialize};

/// Default verifier tolerance: `max(1e-9, 1e-6·(1+|lhs|))`.
pub fn default_tol(lhs: f64) -> f64 {
    if lhs.is_finite() {
        (1e-6 * (1.0 + lhs.abs())).max(1e-9)
    } else {
        1e-9
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    #[serde(with = "extended::option")]
    pub boundary_mass: Option<f64>,
    pub grid: Option<String>,
    pub flags: Vec<String>,
}

/// One instance of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityReport {
    pub name: String,
    #[serde(with = "extended")]
    pub constant: f64,
    #[serde(with = "extended")]
    pub lhs: f64,
    #[serde(with = "extended")]
    pub rhs: f64,
    #[serde(with = "extended")]
    pub slack: f64,
    #[serde(with = "extended")]
    pub tol: f64,
    pub pass: bool,
    pub witness: String,
    pub diagnostics: Diagnostics,
}

impl InequalityReport {
    /// Builds the report with the default tolerance for `lhs`.
    pub fn new(name: &str, constant: f64, lhs: f64, rhs: f64) -> Self {
        Self::with_tol(name, constant, lhs, rhs, default_tol(lhs))
    }

    pub fn with_tol(name: &str, constant: f64, lhs: f64, rhs: f64, tol: f64) -> Self {
        let mut report = InequalityReport {
            name: name.to_string(),
            constant,
            lhs,
            rhs,
            slack: rhs - lhs,
            tol,
            pass: false,
            witness: String::new(),
            diagnostics: Diagnostics::default(),
        };
        report.reevaluate();
        report
    }

    /// Replaces the tolerance and recomputes `pass`.
    pub fn set_tol(&mut self, tol: f64) {
        self.tol = tol;
        self.reevaluate();
    }

    fn reevaluate(&mut self) {
        self.diagnostics.flags.retain(|f| f != "rhs_infinite");
        if self.rhs == f64::INFINITY && !self.lhs.is_nan() {
            self.slack = f64::INFINITY;
            self.pass = true;
            self.diagnostics.flags.push("rhs_infinite".to_string());
        } else {
            self.slack = self.rhs - self.lhs;
            self.pass = self.slack >= -self.tol;
        }
    }

    pub fn witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = witness.into();
        self
    }

    pub fn boundary_mass(mut self, mass: f64) -> Self {
        self.diagnostics.boundary_mass = Some(mass);
        self
    }

    pub fn grid(mut self, grid: impl ToString) -> Self {
        self.diagnostics.grid = Some(grid.to_string());
        self
    }

    pub fn flag(mut self, flag: impl Into<String>) -> Self {
        let flag = flag.into();
        if !self.diagnostics.flags.contains(&flag) {
            self.diagnostics.flags.push(flag);
        }
        self
    }
}

/// `true` iff every report passes (and there is at least one).
pub fn all_pass(reports: &[InequalityReport]) -> bool {
    !reports.is_empty() && reports.iter().all(|r| r.pass)
}

/// Smallest slack over a batch, `+inf` when empty.
pub fn worst_slack(reports: &[InequalityReport]) -> f64 {
    reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min)
}

/// Serde adapter for extended reals.
pub mod extended {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else if value.is_nan() {
            s.serialize_str("nan")
        } else if *value > 0.0 {
            s.serialize_str("+inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct ExtVisitor;

    impl<'de> Visitor<'de> for ExtVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number or one of \"+inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtVisitor)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}
