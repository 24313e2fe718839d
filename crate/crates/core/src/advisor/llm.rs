//! Minimal chat-completion client. Requests carry the model name, a system
//! and a user message, and temperature 0; the credential travels only in the
//! Authorization header and never reaches the log.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::AdvisorBackend;

/// One request/response exchange, safe to log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub request: Value,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_error: Option<String>,
}

fn retryable(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::Transport(_) => true,
        ureq::Error::Status(code, _) => *code == 429 || *code >= 500,
    }
}

/// Send one chat request, retrying transport failures and 5xx/429 answers.
pub fn chat(backend: &AdvisorBackend, api_key: &str, system: &str, user: &str) -> Exchange {
    let request = json!({
        "model": backend.model_name,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
        "temperature": 0,
    });
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs_f64(backend.timeout_secs))
        .build();
    let mut exchange = Exchange {
        request: request.clone(),
        attempts: 0,
        raw_response: None,
        content: None,
        transport_error: None,
    };
    for _ in 0..=backend.max_retries {
        exchange.attempts += 1;
        let result = agent
            .post(&backend.endpoint)
            .set("Authorization", &format!("Bearer {api_key}"))
            .set("Content-Type", "application/json")
            .send_string(&request.to_string());
        match result {
            Ok(resp) => {
                match resp.into_string() {
                    Ok(body) => {
                        exchange.content = extract_content(&body);
                        exchange.raw_response = Some(body);
                        exchange.transport_error = None;
                    }
                    Err(e) => exchange.transport_error = Some(e.to_string()),
                }
                if exchange.raw_response.is_some() {
                    return exchange;
                }
            }
            Err(e) => {
                let again = retryable(&e);
                exchange.transport_error = Some(e.to_string());
                if let ureq::Error::Status(_, resp) = e {
                    exchange.raw_response = resp.into_string().ok();
                }
                if !again {
                    return exchange;
                }
            }
        }
    }
    exchange
}

/// `choices[0].message.content` of a chat-completion body.
pub fn extract_content(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/message/content")?.as_str().map(str::to_owned)
}

/// Drop a surrounding markdown code fence (with or without a language tag).
pub fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(inner) = t.strip_prefix("```") else {
        return t;
    };
    let inner = match inner.find('\n') {
        Some(nl) if !inner[..nl].trim().contains(['{', '[']) => &inner[nl + 1..],
        _ => inner,
    };
    inner.trim_end().strip_suffix("```").unwrap_or(inner).trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fences() {
        assert_eq!(strip_fences("```json\n{\"a\":1}\n```"), "{\"a\":1}");
        assert_eq!(strip_fences("```\n{\"a\":1}\n```\n"), "{\"a\":1}");
        assert_eq!(strip_fences("  {\"a\":1} "), "{\"a\":1}");
        assert_eq!(strip_fences("```{\"a\":1}```"), "{\"a\":1}");
    }

    #[test]
    fn content_pointer() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#;
        assert_eq!(extract_content(body).as_deref(), Some("hi"));
        assert_eq!(extract_content("not json"), None);
    }
}
