//! Retrieval metrics, wrong-query robustness runs, judge prompts and reports.

mod dataset;
mod harness;
mod judge;
mod metrics;
mod report;
mod robustness;

pub use dataset::{load_dataset, parse_dataset, DatasetError, EvalSample};
pub use harness::{evaluate_retrieval, gold_echo_backend, run_robustness};
pub use judge::{judge, parse_judge_verdict, AnswerGrade, JudgeTally, JudgeVerdict};
pub use metrics::{canonical_rows, row_set_metrics, set_metrics, RetrievalMetrics};
pub use report::{
    retrieval_table, robustness_table, MetricsReport, ReferencePoint, ReportKind, ReportMetadata,
    RobustnessCounts, SampleRecord,
};
pub use robustness::{RobustnessClassifier, RobustnessVerdict, WrongQuerySource};
