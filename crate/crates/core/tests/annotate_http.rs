//! The annotation API driven by two scripted clients over real HTTP.

use std::collections::BTreeMap;
use std::sync::Arc;

use polybias::annotate::{router, AnnotationRecord, AnnotationService, Annotator, Summary};
use polybias::corpus::{DatasetKind, Language};
use polybias::translate::{ReviewItem, ReviewSampleFile};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

fn start(service: Arc<AnnotationService>, static_dir: Option<std::path::PathBuf>) -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let app = router(service, static_dir);
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    url
}

fn fixture(n: usize) -> Arc<AnnotationService> {
    let people = ["A1", "A2"]
        .map(|id| Annotator {
            id: id.into(),
            token: format!("secret-{id}"),
            languages: vec!["de".into()],
        })
        .to_vec();
    let s = AnnotationService::in_memory(people).unwrap();
    s.import_sample(&ReviewSampleFile {
        dataset_kind: DatasetKind::CrowsPairs,
        source_language: Language::new("en").unwrap(),
        language: Language::new("de").unwrap(),
        seed: 1,
        field: "sent_more".into(),
        items: (1..=n)
            .map(|i| ReviewItem {
                sample_id: i.to_string(),
                source_text: format!("Sentence {i}."),
                candidates: BTreeMap::from([
                    ("deepl".to_string(), format!("Satz {i}.")),
                    ("meta".to_string(), format!("Satz Nummer {i}.")),
                ]),
            })
            .collect(),
    })
    .unwrap();
    Arc::new(s)
}

struct ApiClient {
    base: String,
    token: String,
    http: Client,
}

impl ApiClient {
    fn new(base: &str, who: &str) -> Self {
        ApiClient {
            base: base.to_string(),
            token: format!("secret-{who}"),
            http: Client::new(),
        }
    }

    fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).bearer_auth(&self.token).send().unwrap();
        (r.status(), r.json().unwrap())
    }

    fn post(&self, body: &Value) -> (StatusCode, Value) {
        let r = self
            .http
            .post(format!("{}/api/annotations", self.base))
            .bearer_auth(&self.token)
            .json(body)
            .send()
            .unwrap();
        (r.status(), r.json().unwrap())
    }

    fn next(&self) -> Option<Value> {
        let (status, body) = self.get("/api/tasks/next?language=de");
        assert_eq!(status, StatusCode::OK, "{body}");
        Some(body["task"].clone()).filter(|t| !t.is_null())
    }
}

#[test]
fn two_clients_complete_review_and_results_match_service() {
    let service = fixture(10);
    let base = start(service.clone(), None);
    let clients = [ApiClient::new(&base, "A1"), ApiClient::new(&base, "A2")];
    let mut seen: [Vec<String>; 2] = Default::default();
    let mut done = [false; 2];
    let mut step = 0;
    while !done.iter().all(|d| *d) {
        let c = step % 2;
        step += 1;
        if done[c] {
            continue;
        }
        let Some(task) = clients[c].next() else {
            done[c] = true;
            continue;
        };
        let id = task["sample_id"].as_str().unwrap().to_string();
        let n: usize = id.parse().unwrap();
        for provider in task["candidate_translations"].as_object().unwrap().keys() {
            let quality = if c == 0 { n % 3 } else { (n + usize::from(n > 7)) % 3 };
            let bias = if n == 4 { "not_reasonable" } else { "same" };
            let (status, ack) = clients[c].post(&json!({
                "sample_id": id, "language": "de", "provider_id": provider,
                "quality": quality, "bias_judgment": bias, "comment": "",
            }));
            assert_eq!(status, StatusCode::OK, "{ack}");
            assert_eq!(ack["flagged_for_exclusion"], n == 4);
        }
        seen[c].push(id);
    }
    let expected: Vec<String> = (1..=10).map(|i| i.to_string()).collect();
    assert_eq!(seen, [expected.clone(), expected]);

    let (_, export) = clients[0].get("/api/export");
    let records: Vec<AnnotationRecord> = serde_json::from_value(export).unwrap();
    assert_eq!(records, service.export().unwrap());
    assert_eq!(records.len(), 40);

    let (_, summary) = clients[1].get("/api/summary?language=de&provider_id=meta");
    let summary: Summary = serde_json::from_value(summary).unwrap();
    assert_eq!(summary, service.summarize("de", "meta").unwrap());
    assert_eq!(summary.annotators[0].quality, [3, 4, 3]);

    let (_, exclusions) = clients[1].get("/api/exclusions");
    assert_eq!(exclusions, json!(["4"]));

    let (_, agreement) = clients[0].get("/api/agreement?language=de&provider_id=deepl");
    assert_eq!(agreement["status"], "ok");
    let kappa = agreement["result"]["kappa"].as_f64().unwrap();
    let oracle = polybias::metrics::cohens_kappa_on_scale(
        &(1..=10).map(|n| n % 3).collect::<Vec<_>>(),
        &(1..=10usize).map(|n| (n + usize::from(n > 7)) % 3).collect::<Vec<_>>(),
        &[0, 1, 2],
        polybias::metrics::Weighting::None,
    )
    .unwrap();
    assert_eq!(kappa, oracle.kappa);
    assert_eq!(agreement["result"]["observed_agreement"], 0.7);
}

#[test]
fn auth_and_validation_errors() {
    let base = start(fixture(2), None);
    let http = Client::new();
    let r = http.get(format!("{base}/api/tasks/next?language=de")).send().unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    let r = http
        .get(format!("{base}/api/export"))
        .bearer_auth("wrong")
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);

    let c = ApiClient::new(&base, "A1");
    let (status, body) = c.get("/api/tasks/next?language=fr");
    assert_eq!(status, StatusCode::FORBIDDEN, "{body}");

    let valid = json!({"sample_id": "1", "language": "de", "provider_id": "meta", "quality": 2, "bias_judgment": "same"});
    let mut bad_quality = valid.clone();
    bad_quality["quality"] = json!(5);
    let mut bad_bias = valid.clone();
    bad_bias["bias_judgment"] = json!("slightly");
    let mut missing = valid.clone();
    missing.as_object_mut().unwrap().remove("bias_judgment");
    let mut extra = valid.clone();
    extra["annotator_id"] = json!("A2");
    for (body, field) in [
        (bad_quality, "quality"),
        (bad_bias, "bias_judgment"),
        (missing, "bias_judgment"),
        (extra, "annotator_id"),
    ] {
        let (status, err) = c.post(&body);
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{err}");
        assert_eq!(err["field"], field, "{err}");
    }
    let mut unknown = valid.clone();
    unknown["sample_id"] = json!("99");
    let (status, err) = c.post(&unknown);
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["field"], "sample_id");

    let (status, _) = c.post(&valid);
    assert_eq!(status, StatusCode::OK);
    let (status, ack) = c.post(&valid);
    assert_eq!((status, ack["overwritten"].as_bool()), (StatusCode::OK, Some(true)));
}

#[test]
fn agreement_with_one_annotator_reports_status() {
    let base = start(fixture(2), None);
    let c = ApiClient::new(&base, "A1");
    c.post(&json!({"sample_id": "1", "language": "de", "provider_id": "meta", "quality": 2, "bias_judgment": "same"}));
    let (status, body) = c.get("/api/agreement?language=de&provider_id=meta");
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "insufficient_annotators");
    assert!(body["result"].is_null());
}

#[test]
fn static_console_is_served_without_escaping_root() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>review</h1>").unwrap();
    std::fs::write(dir.path().join("app.js"), "let x = 1;").unwrap();
    let base = start(fixture(1), Some(dir.path().to_path_buf()));
    let http = Client::new();
    let r = http.get(format!("{base}/")).send().unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    assert!(r.headers()["content-type"].to_str().unwrap().starts_with("text/html"));
    assert_eq!(r.text().unwrap(), "<h1>review</h1>");
    let r = http.get(format!("{base}/app.js")).send().unwrap();
    assert!(r.headers()["content-type"].to_str().unwrap().starts_with("text/javascript"));
    let r = http.get(format!("{base}/..%2F..%2Fetc%2Fpasswd")).send().unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let r = http.get(format!("{base}/missing.css")).send().unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
}
