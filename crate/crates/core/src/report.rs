//! JSON records shared by the command line tool and the HTTP service.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::expr::format_rational;
use crate::parser::{self, ParseError};
use crate::vcgen::{self, AssertionRef, CheckResult, VcError, VerificationCondition};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_ms: Option<u64>,
}

impl ResultRecord {
    pub fn new(r: &CheckResult, time_ms: Option<u64>) -> ResultRecord {
        let (model, message) = match r {
            CheckResult::Unproved { model } => {
                (model.as_ref().map(|m| m.iter().map(|(k, v)| (k.clone(), format_rational(v))).collect()), None)
            }
            CheckResult::SolverError(msg) => (None, Some(msg.clone())),
            CheckResult::Proved | CheckResult::Timeout => (None, None),
        };
        ResultRecord { status: r.status(), model, message, time_ms }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VcRecord {
    pub id: String,
    pub formula: String,
    pub origin: AssertionRef,
    pub label: String,
    pub spans: Vec<[usize; 2]>,
    pub solver: &'static str,
    pub result: Option<ResultRecord>,
}

impl VcRecord {
    pub fn new(vc: &VerificationCondition) -> VcRecord {
        VcRecord {
            id: vc.id.clone(),
            formula: vc.formula.to_string(),
            origin: vc.origin.clone(),
            label: vc.label.to_string(),
            spans: vc.spans.iter().map(|s| [s.start, s.end]).collect(),
            solver: vc.solver.as_str(),
            result: vc.result.as_ref().map(|r| ResultRecord::new(r, None)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub span: Option<[usize; 2]>,
    /// 1-based line and column of the span start.
    pub line: Option<usize>,
    pub col: Option<usize>,
}

impl ErrorRecord {
    pub fn parse(e: &ParseError, src: &str) -> ErrorRecord {
        let (line, col) = e.line_col(src);
        ErrorRecord {
            kind: "ParseError".to_string(),
            message: e.message.clone(),
            span: Some([e.span.start, e.span.end]),
            line: Some(line),
            col: Some(col),
        }
    }

    pub fn generation(e: &VcError, src: &str) -> ErrorRecord {
        let span = e.span();
        let pos = span.map(|s| parser::line_col(src, s.start));
        ErrorRecord {
            kind: e.kind().to_string(),
            message: e.to_string(),
            span: span.map(|s| [s.start, s.end]),
            line: pos.map(|p| p.0),
            col: pos.map(|p| p.1),
        }
    }

    pub fn other(kind: &str, message: impl Into<String>) -> ErrorRecord {
        ErrorRecord { kind: kind.to_string(), message: message.into(), span: None, line: None, col: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub total: usize,
    pub proved: usize,
    pub unproved: usize,
    pub timeout: usize,
    pub error: usize,
}

impl Counts {
    pub fn of<'a>(results: impl IntoIterator<Item = &'a CheckResult>) -> Counts {
        let mut c = Counts::default();
        for r in results {
            c.total += 1;
            match r {
                CheckResult::Proved => c.proved += 1,
                CheckResult::Unproved { .. } => c.unproved += 1,
                CheckResult::Timeout => c.timeout += 1,
                CheckResult::SolverError(_) => c.error += 1,
            }
        }
        c
    }

    pub fn all_proved(&self) -> bool {
        self.proved == self.total
    }
}

/// The document returned for a list of VCs, checked or not.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VcsReport {
    pub schema: u32,
    pub vcs: Vec<VcRecord>,
    pub errors: Vec<ErrorRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Counts>,
}

impl VcsReport {
    pub fn listing(vcs: &[VerificationCondition], warnings: Vec<String>) -> VcsReport {
        VcsReport { schema: SCHEMA, vcs: vcs.iter().map(VcRecord::new).collect(), errors: Vec::new(), warnings, summary: None }
    }

    pub fn failed(error: ErrorRecord) -> VcsReport {
        VcsReport { schema: SCHEMA, vcs: Vec::new(), errors: vec![error], warnings: Vec::new(), summary: None }
    }
}

pub struct Prepared {
    pub vcs: Vec<VerificationCondition>,
    pub warnings: Vec<String>,
}

/// Parses `src` and generates its VCs with solvers bound from the hints.
pub fn prepare(src: &str) -> Result<Prepared, ErrorRecord> {
    let file = parser::parse(src).map_err(|e| ErrorRecord::parse(&e, src))?;
    let mut vcs = vcgen::generate(&file).map_err(|e| ErrorRecord::generation(&e, src))?;
    let warnings = crate::labels::bind_solvers(&file, &mut vcs);
    Ok(Prepared { vcs, warnings })
}

/// Unchecked VC listing for `src`, as served by `/vcs`.
pub fn vcs_report(src: &str) -> VcsReport {
    match prepare(src) {
        Ok(p) => VcsReport::listing(&p.vcs, p.warnings),
        Err(e) => VcsReport::failed(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vc_listing_shape() {
        let src = crate::corpus::get("ex2").unwrap();
        let v = serde_json::to_value(vcs_report(src)).unwrap();
        assert_eq!(v["schema"], 1);
        let labels: Vec<&str> = v["vcs"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(sorted, ["exec", "init", "maintain", "skip"]);
        let first = &v["vcs"][0];
        assert_eq!(first["id"].as_str().unwrap().len(), 16);
        assert!(first["spans"][0].as_array().unwrap().len() == 2);
        assert_eq!(first["solver"], "z3");
        assert!(first["result"].is_null());
        assert!(first["origin"]["path"].is_string());
    }

    #[test]
    fn errors_carry_positions() {
        let r = vcs_report("pre [x >= 0];\nx := ;\npost [true];");
        assert_eq!(r.errors[0].kind, "ParseError");
        assert_eq!((r.errors[0].line, r.errors[0].col), (Some(2), Some(6)));
        let r = vcs_report("pre [true]; { x := 1; }*; post [true];");
        assert_eq!(r.errors[0].kind, "UnannotatedLoop");
        assert!(r.errors[0].span.is_some());
    }

    #[test]
    fn result_records() {
        let m = [("x".to_string(), crate::expr::Rational::new(1.into(), 2.into()))].into_iter().collect();
        let r = ResultRecord::new(&CheckResult::Unproved { model: Some(m) }, Some(3));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["status"], "unproved");
        assert_eq!(v["model"]["x"], "0.5");
        assert_eq!(v["time_ms"], 3);
        assert_eq!(Counts::of(&[CheckResult::Proved, CheckResult::Timeout]).timeout, 1);
    }
}
