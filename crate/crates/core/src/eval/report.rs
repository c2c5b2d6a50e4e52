use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{RetrievalMetrics, RobustnessVerdict};
use crate::pipeline::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Retrieval,
    Robustness,
}

/// Published live-model figures kept next to a run for comparison.
/// Never used as a pass/fail threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub model: String,
    pub entity_enhancement: bool,
    pub dataset_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval_percent: Option<RetrievalMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessCounts>,
}

impl ReferencePoint {
    pub fn retrieval() -> Self {
        Self {
            model: "gpt-4o".into(),
            entity_enhancement: false,
            dataset_size: 69,
            retrieval_percent: Some(RetrievalMetrics {
                iou: 75.2,
                precision: 77.5,
                recall: 77.8,
            }),
            robustness: None,
        }
    }

    pub fn robustness() -> Self {
        Self {
            model: "gpt-4o".into(),
            entity_enhancement: false,
            dataset_size: 69,
            retrieval_percent: None,
            robustness: Some(RobustnessCounts {
                denied: 65,
                uncertain: 1,
                full: 3,
                failed: 0,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub kind: ReportKind,
    pub model: String,
    pub entity_enhancement: bool,
    /// RFC 3339, UTC.
    pub generated_at: String,
    /// Always "macro": the aggregate is the mean of per-sample values.
    pub averaging: String,
    pub parallelism: usize,
    pub reference: ReferencePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub question: String,
    /// `None` when the sample was not scored (unsupported gold query).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<RetrievalMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<RobustnessVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RobustnessCounts {
    pub denied: usize,
    pub uncertain: usize,
    pub full: usize,
    /// Samples whose pipeline run failed before an answer existed.
    pub failed: usize,
}

impl RobustnessCounts {
    pub fn add(&mut self, v: RobustnessVerdict) {
        match v {
            RobustnessVerdict::Denied => self.denied += 1,
            RobustnessVerdict::Uncertain => self.uncertain += 1,
            RobustnessVerdict::Full => self.full += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.denied + self.uncertain + self.full + self.failed
    }

    /// Fraction of the total, 0 when there are no samples.
    pub fn rate(&self, v: RobustnessVerdict) -> f64 {
        let n = match v {
            RobustnessVerdict::Denied => self.denied,
            RobustnessVerdict::Uncertain => self.uncertain,
            RobustnessVerdict::Full => self.full,
        };
        if self.total() == 0 {
            0.0
        } else {
            n as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metadata: ReportMetadata,
    pub per_sample: Vec<SampleRecord>,
    /// Mean over scored samples.
    pub aggregate: RetrievalMetrics,
    pub scored: usize,
    pub skipped: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessCounts>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Recomputes the aggregate from `per_sample`.
    pub fn recompute_aggregate(&self) -> RetrievalMetrics {
        let scored: Vec<RetrievalMetrics> =
            self.per_sample.iter().filter_map(|s| s.metrics).collect();
        RetrievalMetrics::mean(&scored)
    }

    pub fn render_table(&self) -> String {
        match self.metadata.kind {
            ReportKind::Retrieval => retrieval_table(&[self]),
            ReportKind::Robustness => robustness_table(&[self]),
        }
    }
}

fn ee_flag(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

/// One row per report under "Model | EE | IoU | Precision | Recall", values in %.
pub fn retrieval_table(reports: &[&MetricsReport]) -> String {
    let mut out = String::from("Model | EE | IoU | Precision | Recall\n");
    for r in reports {
        let a = r.aggregate;
        let _ = writeln!(
            out,
            "{} | {} | {:.1} | {:.1} | {:.1}",
            r.metadata.model,
            ee_flag(r.metadata.entity_enhancement),
            a.iou * 100.0,
            a.precision * 100.0,
            a.recall * 100.0
        );
    }
    out
}

/// Verdict rows as `count/total (percent)`, one column per report.
pub fn robustness_table(reports: &[&MetricsReport]) -> String {
    let mut out = String::from("(in %)");
    for r in reports {
        let _ = write!(out, " | {}", r.metadata.model);
    }
    out.push('\n');
    let counts: Vec<RobustnessCounts> = reports
        .iter()
        .map(|r| r.robustness.unwrap_or_default())
        .collect();
    let rows = [
        ("Answer Denied", RobustnessVerdict::Denied),
        ("Uncertain Answer", RobustnessVerdict::Uncertain),
        ("Full Answer", RobustnessVerdict::Full),
    ];
    for (title, v) in rows {
        out.push_str(title);
        for c in &counts {
            let n = match v {
                RobustnessVerdict::Denied => c.denied,
                RobustnessVerdict::Uncertain => c.uncertain,
                RobustnessVerdict::Full => c.full,
            };
            let _ = write!(out, " | {}/{} ({:.1})", n, c.total(), c.rate(v) * 100.0);
        }
        out.push('\n');
    }
    if counts.iter().any(|c| c.failed > 0) {
        out.push_str("Not answered");
        for c in &counts {
            let pct = if c.total() == 0 {
                0.0
            } else {
                c.failed as f64 * 100.0 / c.total() as f64
            };
            let _ = write!(out, " | {}/{} ({:.1})", c.failed, c.total(), pct);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(kind: ReportKind, model: &str, ee: bool) -> MetricsReport {
        MetricsReport {
            metadata: ReportMetadata {
                kind,
                model: model.into(),
                entity_enhancement: ee,
                generated_at: "2024-01-01T00:00:00Z".into(),
                averaging: "macro".into(),
                parallelism: 1,
                reference: ReferencePoint::retrieval(),
            },
            per_sample: vec![],
            aggregate: RetrievalMetrics {
                iou: 0.752,
                precision: 0.775,
                recall: 0.778,
            },
            scored: 0,
            skipped: 0,
            robustness: None,
        }
    }

    #[test]
    fn retrieval_layout() {
        let a = report(ReportKind::Retrieval, "gpt-4o", true);
        let b = report(ReportKind::Retrieval, "gpt-4o", false);
        assert_eq!(
            retrieval_table(&[&a, &b]),
            "Model | EE | IoU | Precision | Recall\ngpt-4o | True | 75.2 | 77.5 | 77.8\ngpt-4o | False | 75.2 | 77.5 | 77.8\n"
        );
    }

    #[test]
    fn robustness_layout_matches_published_row() {
        let mut r = report(ReportKind::Robustness, "gpt-4o", false);
        r.robustness = ReferencePoint::robustness().robustness;
        let t = robustness_table(&[&r]);
        assert!(t.starts_with("(in %) | gpt-4o\n"));
        assert!(t.contains("Answer Denied | 65/69 (94.2)\n"));
        assert!(t.contains("Full Answer | 3/69 (4.3)\n"));
        assert!(!t.contains("Not answered"));
    }

    #[test]
    fn json_round_trip() {
        let r = report(ReportKind::Retrieval, "m", false);
        assert_eq!(MetricsReport::from_json(&r.to_json()).unwrap(), r);
    }
}
