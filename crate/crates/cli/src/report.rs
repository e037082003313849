//! Run summary: per-stage state metrics plus experiment-specific scalars.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

/// State metrics of one stage of a sequence. `fidelity` is against the ideal
/// target of that stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub stage: String,
    pub fidelity: Option<f64>,
    pub purity: f64,
    pub mean_n: f64,
    pub fano: Option<f64>,
    pub p0: f64,
    pub success_prob: Option<f64>,
}

impl MetricRow {
    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        [Some(self.purity), Some(self.mean_n), Some(self.p0), self.fidelity, self.fano, self.success_prob]
            .into_iter()
            .flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scalar {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub input: String,
    pub seed: u64,
    pub exact: bool,
    pub rows: Vec<MetricRow>,
    pub scalars: Vec<Scalar>,
    /// Absolute paths of the written artifacts, manifest last.
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn row(&self, stage: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.stage == stage)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|s| s.name == name).map(|s| s.value)
    }

    pub fn push_scalar(&mut self, name: impl Into<String>, value: f64) {
        self.scalars.push(Scalar {
            name: name.into(),
            value,
        });
    }

    /// Name of the first non-finite metric, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        for r in &self.rows {
            if r.values().any(|v| !v.is_finite()) {
                return Some(format!("stage {}", r.stage));
            }
        }
        self.scalars.iter().find(|s| !s.value.is_finite()).map(|s| s.name.clone())
    }

    /// Plain-text report; contains no paths or times, so reruns match.
    pub fn render(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.experiment);
        let _ = writeln!(s, "input: {}", self.input);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "exact: {}", self.exact);
        if !self.rows.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<22} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
                "stage", "fidelity", "purity", "mean_n", "fano", "p0", "success"
            );
            for r in &self.rows {
                let _ = writeln!(
                    s,
                    "{:<22} {:>10} {:>10.6} {:>10.6} {:>10} {:>10.6} {:>10}",
                    r.stage,
                    opt(r.fidelity),
                    r.purity,
                    r.mean_n,
                    opt(r.fano),
                    r.p0,
                    opt(r.success_prob)
                );
            }
        }
        if !self.scalars.is_empty() {
            let _ = writeln!(s);
            for sc in &self.scalars {
                let _ = writeln!(s, "{} = {}", sc.name, sc.value);
            }
        }
        s
    }
}
