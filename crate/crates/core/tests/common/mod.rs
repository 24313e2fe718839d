#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};

use autoforecast::advisor::{AdvisorBackend, AdvisorMode};

/// Authorization header and JSON body of each request received.
pub type Seen = Arc<Mutex<Vec<(Option<String>, Value)>>>;

/// Chat-completion stand-in: answers each request with the next canned
/// message content and records what it was sent. An answer of the form
/// `status:<code>` replies with that HTTP status instead.
pub struct StubServer {
    pub url: String,
    pub requests: Seen,
    handle: Option<JoinHandle<()>>,
    server: Arc<tiny_http::Server>,
}

impl StubServer {
    pub fn start(contents: Vec<String>) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind stub"));
        let url = format!("http://{}/v1/chat/completions", server.server_addr());
        let requests: Seen = Arc::new(Mutex::new(Vec::new()));
        let (srv, seen) = (server.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            let mut answers = contents.into_iter();
            for mut req in srv.incoming_requests() {
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                let auth = req
                    .headers()
                    .iter()
                    .find(|h| h.field.equiv("Authorization"))
                    .map(|h| h.value.to_string());
                seen.lock().unwrap().push((auth, serde_json::from_str(&body).unwrap_or(Value::Null)));
                let (status, reply) = match answers.next() {
                    Some(code) if code.starts_with("status:") => {
                        (code[7..].parse().unwrap_or(500), json!({"error": "stub failure"}))
                    }
                    Some(content) => (200, json!({"choices": [{"message": {"role": "assistant", "content": content}}]})),
                    None => (200, json!({"error": "no more answers"})),
                };
                let resp = tiny_http::Response::from_string(reply.to_string()).with_status_code(status).with_header(
                    "Content-Type: application/json".parse::<tiny_http::Header>().unwrap(),
                );
                let _ = req.respond(resp);
            }
        });
        Self {
            url,
            requests,
            handle: Some(handle),
            server,
        }
    }

    pub fn backend(&self) -> AdvisorBackend {
        AdvisorBackend {
            mode: AdvisorMode::Llm,
            endpoint: self.url.clone(),
            timeout_secs: 5.0,
            max_retries: 0,
            api_key: Some("stub-key".into()),
            ..AdvisorBackend::default()
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn valid_preprocess_answer() -> String {
    json!({
        "basic_stats": {"mean": 1.0, "std": 0.5, "min": 0.0, "max": 2.0, "trend": "stable"},
        "missing_info": {"missing_count": 1, "missing_percentage": 0.01},
        "outlier_info": {"outlier_count": 0, "outlier_percentage": 0.0},
        "quality_assessment": {"data_quality_score": 0.95, "main_issues": ["one gap"]},
        "recommended_strategies": {
            "missing_value_strategy": "interpolate",
            "outlier_detect_strategy": "iqr",
            "outlier_handle_strategy": "clip"
        }
    })
    .to_string()
}

pub fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"));
    std::fs::read_to_string(p).expect("golden file")
}

pub fn bundled_csv() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic.csv")
}

pub fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("autoforecast-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
