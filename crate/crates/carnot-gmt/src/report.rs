//! Check reports and deterministic CSV output.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Verdict for an inequality recorded as `lhs <= rhs` with `margin = rhs -
/// lhs`: inconclusive when the margin is inside the numerical error band.
pub fn verdict_inequality(margin: f64, error: f64) -> Verdict {
    if margin.abs() <= error {
        Verdict::Inconclusive
    } else if margin > 0.0 {
        Verdict::Holds
    } else {
        Verdict::Violated
    }
}

/// Relative residual of an identity.
pub fn identity_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12)
}

/// Verdict for an identity: holds when the relative residual is at most
/// `tol` (checks use `1e-3`).
pub fn verdict_identity(residual: f64, tol: f64) -> Verdict {
    if residual <= tol {
        Verdict::Holds
    } else {
        Verdict::Violated
    }
}

/// One row of a run: a named scenario, the check it ran, both sides of the
/// tested relation, and enough configuration to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub error: f64,
    pub verdict: Verdict,
    /// Named constants that entered the check, in sorted key order.
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub evaluations: u64,
    pub seed: u64,
    pub tol_cell: f64,
    pub depth_cap: usize,
    pub tol_char: f64,
    pub version: String,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, check: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            check: check.into(),
            lhs: 0.0,
            rhs: 0.0,
            margin: 0.0,
            error: 0.0,
            verdict: Verdict::Inconclusive,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            evaluations: 0,
            seed: 0,
            tol_cell: 0.0,
            depth_cap: 0,
            tol_char: 0.0,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Auxiliary per-radius data attached to a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ProfileData {
    /// Rows `(t, m, error, evaluations)`.
    Density(Vec<(f64, f64, f64, u64)>),
    /// Rows `(t, m, bound)`.
    Monotonicity(Vec<(f64, f64, f64)>),
}

/// A report together with its optional profile.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub report: CheckReport,
    pub profile: Option<ProfileData>,
}

impl CheckOutcome {
    pub fn bare(report: CheckReport) -> Self {
        CheckOutcome {
            report,
            profile: None,
        }
    }
}

/// Floats in CSV cells carry seventeen significant digits so that rewriting
/// a run reproduces files byte for byte.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const REPORT_CSV_HEADER: &str = "name,check,lhs,rhs,margin,error,verdict,constants,notes,evaluations,seed,tol_cell,depth_cap,tol_char,version";

fn constants_cell(constants: &BTreeMap<String, f64>) -> String {
    let inner: Vec<String> = constants
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_float(*v)))
        .collect();
    inner.join(";")
}

/// Write reports as CSV with a fixed column set, `\n` line endings, and
/// deterministic formatting.
pub fn write_reports_csv<W: Write>(out: &mut W, reports: &[CheckReport]) -> io::Result<()> {
    out.write_all(REPORT_CSV_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for r in reports {
        let row = [
            csv_quote(&r.name),
            csv_quote(&r.check),
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.margin),
            fmt_float(r.error),
            r.verdict.as_str().to_string(),
            csv_quote(&constants_cell(&r.constants)),
            csv_quote(&r.notes.join(" | ")),
            r.evaluations.to_string(),
            r.seed.to_string(),
            fmt_float(r.tol_cell),
            r.depth_cap.to_string(),
            fmt_float(r.tol_char),
            csv_quote(&r.version),
        ];
        out.write_all(row.join(",").as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Write a profile as CSV; the column set depends on the profile kind.
pub fn write_profile_csv<W: Write>(out: &mut W, profile: &ProfileData) -> io::Result<()> {
    match profile {
        ProfileData::Density(rows) => {
            out.write_all(b"t,m,error,evaluations\n")?;
            for (t, m, e, n) in rows {
                let row = format!("{},{},{},{n}\n", fmt_float(*t), fmt_float(*m), fmt_float(*e));
                out.write_all(row.as_bytes())?;
            }
        }
        ProfileData::Monotonicity(rows) => {
            out.write_all(b"t,m,bound\n")?;
            for (t, m, b) in rows {
                let row = format!("{},{},{}\n", fmt_float(*t), fmt_float(*m), fmt_float(*b));
                out.write_all(row.as_bytes())?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_the_margin_rules() {
        assert_eq!(verdict_inequality(0.5, 0.1), Verdict::Holds);
        assert_eq!(verdict_inequality(-0.5, 0.1), Verdict::Violated);
        assert_eq!(verdict_inequality(0.05, 0.1), Verdict::Inconclusive);
        assert_eq!(verdict_inequality(-0.05, 0.1), Verdict::Inconclusive);
        assert_eq!(verdict_identity(5e-4, 1e-3), Verdict::Holds);
        assert_eq!(verdict_identity(2e-3, 1e-3), Verdict::Violated);
    }

    #[test]
    fn csv_rows_are_deterministic_and_quoted() {
        let mut r = CheckReport::new("demo", "density");
        r.lhs = 1.0 / 3.0;
        r.rhs = 0.75;
        r.constants.insert("kappa".into(), 0.25);
        r.constants.insert("alpha".into(), 1.0);
        r.notes.push("plain".into());
        r.notes.push("with, comma".into());
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(REPORT_CSV_HEADER));
        assert!(text.contains("3.3333333333333331e-1"));
        // sorted constant keys, semicolon-joined
        assert!(text.contains("alpha=1.0000000000000000e0;kappa=2.5000000000000000e-1"));
        assert!(text.contains("\"plain | with, comma\""));
        let mut buf2 = Vec::new();
        write_reports_csv(&mut buf2, std::slice::from_ref(&r)).unwrap();
        assert_eq!(buf, buf2);
        assert!(!text.contains('\r'));
    }
}
