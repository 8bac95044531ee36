//! The annotation service and its exports.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use polybias::annotate::{AnnotationService, Annotator, Summary};
use polybias::corpus::write_exclusions;
use polybias::translate::read_review_sample;

use super::evaluate::write_json;
use crate::config::{AnnotateSection, RunConfig};
use crate::error::CliError;

fn section(config: &RunConfig) -> Result<&AnnotateSection, CliError> {
    config
        .annotate
        .as_ref()
        .ok_or_else(|| CliError::Usage("run file has no [annotate] section".into()))
}

/// Opens the store, registers the annotators and imports the configured
/// review samples. Annotators without a token are refused.
pub fn open_service(config: &RunConfig) -> Result<AnnotationService, CliError> {
    let section = section(config)?;
    let mut annotators = Vec::new();
    for a in &section.annotators {
        let token = a.token.clone().ok_or_else(|| {
            CliError::Usage(format!(
                "annotator `{}` has no token; set {}",
                a.id,
                a.token_env
                    .clone()
                    .unwrap_or_else(|| format!("POLYBIAS_ANNOTATOR_{}_TOKEN", crate::config::env_key(&a.id)))
            ))
        })?;
        annotators.push(Annotator {
            id: a.id.clone(),
            token,
            languages: a.languages.clone(),
        });
    }
    if let Some(dir) = section.database.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let service = AnnotationService::open(&section.database, annotators)?;
    for path in &section.samples {
        let sample = read_review_sample(path)?;
        let n = service.import_sample(&sample)?;
        tracing::info!(path = %path.display(), items = n, "imported review sample");
    }
    Ok(service)
}

/// Serves the API and console until interrupted.
pub fn serve(config: &RunConfig) -> Result<(), CliError> {
    let section = section(config)?;
    let service = Arc::new(open_service(config)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Validation(format!("runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&section.bind)
            .await
            .map_err(|e| CliError::Usage(format!("cannot bind {}: {e}", section.bind)))?;
        tracing::info!("annotation service listening on http://{}", section.bind);
        polybias::annotate::serve(listener, service, section.static_dir.clone())
            .await
            .map_err(|e| CliError::Validation(format!("server: {e}")))
    })
}

/// Writes every record, the exclusion set and per language and provider
/// summaries under `<run>/annotations/`.
pub fn export(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let service = open_service(config)?;
    let dir = config.run_dir().join("annotations");
    let records = service.export()?;
    let records_path = dir.join("annotations.json");
    write_json(&records_path, &records)?;
    let exclusions_path = dir.join("exclusions.json");
    write_exclusions(&exclusions_path, &service.derive_exclusions()?)?;
    let slices: BTreeSet<(String, String)> = records
        .iter()
        .map(|r| (r.language.clone(), r.provider_id.clone()))
        .collect();
    let mut summaries: Vec<Summary> = Vec::new();
    let mut agreement = Vec::new();
    for (language, provider) in &slices {
        summaries.push(service.summarize(language, provider)?);
        agreement.push(service.agreement_report(language, provider, Default::default())?);
    }
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summaries)?;
    let agreement_path = dir.join("agreement.json");
    write_json(&agreement_path, &agreement)?;
    Ok(vec![records_path, exclusions_path, summary_path, agreement_path])
}
