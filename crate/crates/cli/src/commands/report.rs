//! Heatmaps and tables from metric files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use polybias::corpus::sha256_file;
use polybias::metrics::MetricReport;
use polybias::report::write_report_bundle;
use serde::{Deserialize, Serialize};

use super::evaluate::{read_json, write_json, MetricsFile, METRICS_FILE};
use crate::config::RunConfig;
use crate::error::CliError;

pub const REPORT_MANIFEST_FILE: &str = "report_manifest.json";

/// Ties a rendered bundle to the metric files and run manifests it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportManifest {
    /// Metric file name to SHA-256.
    pub metrics: BTreeMap<String, String>,
    /// Run id to run-manifest SHA-256.
    pub run_manifests: BTreeMap<String, String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Renders the report bundle. Rendering reads only the metric files, so a
/// re-render produces byte-identical output.
pub fn report(config: &RunConfig) -> Result<ReportOutput, CliError> {
    let inputs = if config.report.metrics.is_empty() {
        vec![config.run_dir().join(METRICS_FILE)]
    } else {
        config.report.metrics.clone()
    };
    let dir = config
        .report
        .output_dir
        .clone()
        .unwrap_or_else(|| config.run_dir().join("report"));
    let mut reports: Vec<MetricReport> = Vec::new();
    let mut manifest = ReportManifest {
        metrics: BTreeMap::new(),
        run_manifests: BTreeMap::new(),
        files: Vec::new(),
    };
    for path in &inputs {
        let file: MetricsFile = read_json(path)?;
        let key = format!("{}/{}", file.run_id, path.file_name().unwrap_or_default().to_string_lossy());
        manifest.metrics.insert(key, sha256_file(path)?);
        manifest.run_manifests.insert(file.run_id.clone(), file.manifest_sha256.clone());
        reports.extend(file.reports);
    }
    let mut files = write_report_bundle(&reports, &dir)?;
    manifest.files = files
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let manifest_path = dir.join(REPORT_MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok(ReportOutput { dir, files })
}
