use serde::Serialize;

use crate::error::Result;

/// Outcome of checking one suite distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub id: String,
    /// Upper bound on the target optimum: the loss of the returned solution.
    pub opt_target: f64,
    /// Certified lower bound on the target optimum.
    pub opt_lower: f64,
    pub achieved: f64,
    pub pulled_back_01: f64,
    /// `beta + slack`.
    pub bound: f64,
    /// `achieved - opt_lower <= alpha`.
    pub alpha_certified: bool,
    /// For exact reductions: `opt_target <= slack`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_ok: Option<bool>,
    pub probes: usize,
    pub probe_failures: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub reduction: String,
    pub alpha: f64,
    pub beta: f64,
    pub slack: f64,
    pub exact: bool,
    pub records: Vec<VerificationRecord>,
    pub all_pass: bool,
    pub summary: String,
}

/// Seventeen significant digits; `inf` for infinity.
pub fn fmt_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns: `id, opt_target, achieved, pulled_back_01, bound, pass`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| crate::error::Error::Io(std::io::Error::other(e));
        w.write_record(["id", "opt_target", "achieved", "pulled_back_01", "bound", "pass"])
            .map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.id.clone(),
                fmt_float(r.opt_target),
                fmt_float(r.achieved),
                fmt_float(r.pulled_back_01),
                fmt_float(r.bound),
                r.pass.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::error::Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
