//! Run reports: one JSON document per invocation.
//!
//! ```json
//! {"tool_version": "...", "config": {...}, "results": [...],
//!  "residuals": {...}, "summary": {...}, "status": "ok" | "fail" | "error"}
//! ```
//!
//! Keys are sorted and numbers carry 17 significant digits, so equal inputs
//! give byte-identical documents.

use std::collections::BTreeMap;

use nclp_core::divergence::{LOG_BASE, SUPPORT_TOL, UNITALITY_TOL};
use nclp_core::{SpectralConfig, EIGENSOLVER_ID, HERMITIAN_TOL, PSD_CLIP_TOL};
use serde_json::{json, Map, Value};

use crate::format::number;
use crate::propsuite::{self, SuiteConfig, TrialReport, GAUSSIAN_ID, PRNG_ID};

pub const TOOL_VERSION: &str = concat!("nclp ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Fail,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Fail => "fail",
            Self::Error => "error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: Map<String, Value>,
    pub results: Vec<Value>,
    pub residuals: BTreeMap<String, f64>,
    pub summary: Map<String, Value>,
    pub status: Status,
    pub error: Option<String>,
}

impl RunReport {
    /// Report with the numerical configuration echoed.
    pub fn new(command: &str, spectral: &SpectralConfig) -> Self {
        let mut config = Map::new();
        config.insert("command".into(), json!(command));
        config.insert("eps_rel".into(), number(spectral.eps_rel));
        config.insert("log_base".into(), json!(LOG_BASE));
        config.insert("eigensolver".into(), json!(EIGENSOLVER_ID));
        config.insert("prng".into(), json!(PRNG_ID));
        config.insert("gaussian".into(), json!(GAUSSIAN_ID));
        config.insert(
            "fixed_tolerances".into(),
            json!({
                "hermitian": number(HERMITIAN_TOL),
                "psd_clip": number(PSD_CLIP_TOL),
                "support": number(SUPPORT_TOL),
                "unitality": number(UNITALITY_TOL),
            }),
        );
        Self {
            config,
            results: Vec::new(),
            residuals: BTreeMap::new(),
            summary: Map::new(),
            status: Status::Ok,
            error: None,
        }
    }

    pub fn echo(&mut self, key: &str, value: Value) -> &mut Self {
        self.config.insert(key.to_string(), value);
        self
    }

    pub fn fail_with(&mut self, message: impl Into<String>) -> &mut Self {
        self.status = Status::Error;
        self.error = Some(message.into());
        self
    }

    pub fn to_value(&self) -> Value {
        let residuals: Map<String, Value> = self.residuals.iter().map(|(k, &v)| (k.clone(), number(v))).collect();
        let mut out = json!({
            "tool_version": TOOL_VERSION,
            "config": self.config,
            "results": self.results,
            "residuals": residuals,
            "summary": self.summary,
            "status": self.status.as_str(),
        });
        if let Some(e) = &self.error {
            out["error"] = json!(e);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("serializable");
        s.push('\n');
        s
    }
}

/// Report for a suite run: one result per trial, worst residuals, and a summary.
pub fn suite_report(config: &SuiteConfig, trials: &[TrialReport]) -> RunReport {
    let mut report = RunReport::new("suite", &config.spectral);
    if let Value::Object(m) = config.to_value() {
        report.config.extend(m);
    }
    report.results = trials.iter().map(TrialReport::to_value).collect();
    report.residuals = propsuite::worst_residuals(trials);
    let failed = trials.iter().filter(|t| !t.pass).count();
    report.summary.insert("trials".into(), json!(trials.len()));
    report.summary.insert("passed".into(), json!(trials.len() - failed));
    report.summary.insert("failed".into(), json!(failed));
    report.summary.insert("tags".into(), json!(propsuite::tags_seen(trials)));
    report.status = if failed == 0 { Status::Ok } else { Status::Fail };
    report
}
