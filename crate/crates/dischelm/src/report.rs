//! JSON shapes of the reports printed by the CLI.

use dischelm_core::{GridFn, Report, Witness};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessJson {
    pub t0: f64,
    pub h: f64,
    pub n: usize,
    pub q: Vec<f64>,
    pub p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<f64>>,
}

impl From<&Witness> for WitnessJson {
    fn from(w: &Witness) -> Self {
        let part = w.q.partition();
        Self {
            t0: part.t0(),
            h: part.step(),
            n: part.steps(),
            q: w.q.values().to_vec(),
            p: w.p,
            probe: w.probe.as_ref().map(|z: &GridFn| z.values().to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportJson {
    pub verdict: String,
    pub max_residual: f64,
    pub samples: usize,
    pub tolerance_abs: f64,
    pub tolerance_rel: f64,
    pub witness: Option<WitnessJson>,
}

impl ReportJson {
    pub fn new(r: &Report) -> Self {
        Self::with_verdict(r, r.verdict.as_str())
    }

    pub fn with_verdict(r: &Report, verdict: &str) -> Self {
        Self {
            verdict: verdict.to_string(),
            max_residual: r.max_residual,
            samples: r.samples,
            tolerance_abs: r.tolerance_abs,
            tolerance_rel: r.tolerance_rel,
            witness: r.witness.as_ref().map(WitnessJson::from),
        }
    }
}

/// Output of `null-decompose`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionJson {
    #[serde(flatten)]
    pub report: ReportJson,
    /// Largest defect seen while checking separability; absent on refusal.
    pub residual_bound: Option<f64>,
    pub reason: Option<String>,
}

/// Output of `compare`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonJson {
    pub max_deviation: f64,
    pub deviations: Vec<f64>,
    pub status_a: String,
    pub status_b: String,
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}
