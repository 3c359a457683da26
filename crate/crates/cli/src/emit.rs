//! Writes run output: pretty JSON or CSV to stdout or a file, plus the
//! optional CSV summary of a report array.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use tel_core::InequalityReport;

#[derive(Serialize)]
struct SummaryRow<'a> {
    name: &'a str,
    constant: String,
    lhs: String,
    rhs: String,
    slack: String,
    pass: bool,
}

/// Shortest round-trip decimal, with the extended-real spellings used in JSON.
fn number(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

/// `name,constant,lhs,rhs,slack,pass`, one row per report.
pub fn summary_csv(reports: &[InequalityReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(SummaryRow {
            name: &r.name,
            constant: number(r.constant),
            lhs: number(r.lhs),
            rhs: number(r.rhs),
            slack: number(r.slack),
            pass: r.pass,
        })?;
    }
    if reports.is_empty() {
        w.write_record(["name", "constant", "lhs", "rhs", "slack", "pass"])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Writes `body` to `out`, or to stdout when `out` is `None`.
pub fn write(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_has_a_header_and_one_row_per_report() {
        let reports = vec![
            InequalityReport::new("tc", 1.0, 0.5, 1.0),
            InequalityReport::new("tc", 1.0, 2.0, f64::INFINITY),
        ];
        let csv = summary_csv(&reports).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "name,constant,lhs,rhs,slack,pass");
        assert_eq!(lines[1], "tc,1.0,0.5,1.0,0.5,true");
        assert_eq!(lines[2], "tc,1.0,2.0,+inf,+inf,true");
        assert_eq!(summary_csv(&[]).unwrap(), "name,constant,lhs,rhs,slack,pass\n");
    }
}
