pub mod annotate;
pub mod evaluate;
pub mod report;
pub mod translate;
pub mod validate;

pub use evaluate::{evaluate, EvaluateOutput, MetricsFile, RunManifest};
pub use report::{report, ReportOutput};
pub use translate::{translate, TranslateSummary};
pub use validate::{validate, ValidationReport};
