use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::parse::group_thousands;
use super::prompt::{lower_median, PromptSpec};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "LANEHOUSE_LLM_API_KEY";

pub struct ChatRequest<'a> {
    pub system: &'a str,
    pub prompt: &'a str,
    pub spec: &'a PromptSpec,
}

pub trait ChatClient: Sync {
    /// The raw reply text.
    fn complete(&self, req: &ChatRequest<'_>) -> Result<String>;

    /// Whether identical requests always get identical replies.
    fn is_deterministic(&self) -> bool {
        false
    }

    /// Pause before retry number `attempt` (1-based).
    fn retry_delay(&self, _attempt: u32) -> Duration {
        Duration::ZERO
    }
}

/// Offline stand-in. Replies with the lower median of the exemplar rents, or
/// the training median when there are no exemplars.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockClient;

impl MockClient {
    pub fn estimate(spec: &PromptSpec) -> f64 {
        let rents: Vec<f64> = spec.shots.iter().map(|s| s.rent).collect();
        lower_median(&rents).unwrap_or(spec.statistics.median_price)
    }
}

impl ChatClient for MockClient {
    fn complete(&self, req: &ChatRequest<'_>) -> Result<String> {
        Ok(format!(
            "Based on the information provided, the estimated rent is {} RMB per month.",
            group_thousands(Self::estimate(req.spec))
        ))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub struct LiveSettings {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub timeout: Duration,
    /// Minimum gap between the starts of consecutive requests.
    pub request_interval: Duration,
    /// Base pause before a retry, doubled per attempt.
    pub retry_backoff: Duration,
}

/// Chat-completions client over HTTP(S).
pub struct LiveClient {
    agent: ureq::Agent,
    settings: LiveSettings,
    api_key: String,
    next_start: Mutex<Option<Instant>>,
}

impl LiveClient {
    pub fn new(settings: LiveSettings, api_key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(settings.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            settings,
            api_key,
            next_start: Mutex::new(None),
        }
    }

    /// Reads the bearer token from `LANEHOUSE_LLM_API_KEY`.
    pub fn from_env(settings: LiveSettings) -> Result<Self> {
        match std::env::var(API_KEY_ENV) {
            Ok(key) if !key.trim().is_empty() => Ok(Self::new(settings, key.trim().to_string())),
            _ => Err(Error::Config(format!("{API_KEY_ENV} is not set"))),
        }
    }

    fn wait_for_slot(&self) {
        let wait = {
            let mut next = self.next_start.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let start = next.map_or(now, |t| t.max(now));
            *next = Some(start + self.settings.request_interval);
            start - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

fn first_choice(body: &Value) -> Option<&str> {
    body.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

impl ChatClient for LiveClient {
    fn complete(&self, req: &ChatRequest<'_>) -> Result<String> {
        self.wait_for_slot();
        let body = json!({
            "model": self.settings.model_name,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.prompt},
            ],
            "temperature": self.settings.temperature,
        });
        let mut resp = self
            .agent
            .post(&self.settings.endpoint_url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            let snippet: String = text.chars().take(200).collect();
            return Err(Error::Transport(format!("HTTP {status}: {snippet}")));
        }
        let parsed: Value =
            serde_json::from_str(&text).map_err(|e| Error::Transport(format!("bad response body: {e}")))?;
        first_choice(&parsed)
            .map(str::to_string)
            .ok_or_else(|| Error::Transport("response has no choices[0].message.content".into()))
    }

    fn retry_delay(&self, attempt: u32) -> Duration {
        self.settings.retry_backoff * 2u32.saturating_pow(attempt.saturating_sub(1)).min(64)
    }
}

#[cfg(test)]
mod tests {
    use super::super::listing::Listing;
    use super::super::prompt::{compute_statistics, DEFAULT_INSTRUCTION};
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn listing(rent: f64) -> Listing {
        Listing {
            row: 0,
            location: "Xuhui".into(),
            house_type: "lane house".into(),
            area: 40.0,
            bedrooms: 1.0,
            living_rooms: 1.0,
            bathrooms: 1.0,
            amenity_flags: vec![],
            amenities: vec![],
            rent,
        }
    }

    fn spec(shot_rents: &[f64]) -> PromptSpec {
        PromptSpec {
            query: listing(0.0),
            instruction: DEFAULT_INSTRUCTION.into(),
            statistics: compute_statistics(&[1000.0, 3000.0, 7000.0]).unwrap(),
            shots: shot_rents.iter().map(|&r| listing(r)).collect(),
            template_id: "default".into(),
        }
    }

    #[test]
    fn mock_uses_shot_median() {
        let s = spec(&[12000.0, 4000.0, 8000.0, 6000.0, 10000.0]);
        let reply = MockClient
            .complete(&ChatRequest {
                system: "",
                prompt: "",
                spec: &s,
            })
            .unwrap();
        assert_eq!(
            reply,
            "Based on the information provided, the estimated rent is 8,000 RMB per month."
        );
        assert_eq!(MockClient::estimate(&spec(&[])), 3000.0);
        assert_eq!(MockClient::estimate(&spec(&[4.0, 1.0, 3.0, 2.0])), 2.0);
    }

    /// Serves the canned `(status, body)` replies in order, one per connection,
    /// and returns the request bodies it saw.
    fn serve(replies: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let mut seen = Vec::new();
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut len = 0;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line.trim().to_string();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                seen.push(format!("{auth}\n{}", String::from_utf8(buf).unwrap()));
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            seen
        });
        (url, handle)
    }

    fn settings(url: String) -> LiveSettings {
        LiveSettings {
            endpoint_url: url,
            model_name: "test-model".into(),
            temperature: 0.0,
            timeout: Duration::from_secs(5),
            request_interval: Duration::ZERO,
            retry_backoff: Duration::from_millis(1),
        }
    }

    #[test]
    fn live_client_speaks_chat_completions() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"About 9,000 RMB."}}]}"#;
        let (url, server) = serve(vec![(500, "{}".into()), (200, ok.into())]);
        let client = LiveClient::new(settings(url), "sk-test".into());
        let s = spec(&[]);
        let req = ChatRequest {
            system: "sys",
            prompt: "hello",
            spec: &s,
        };
        let first = client.complete(&req).unwrap_err();
        assert!(
            matches!(first, Error::Transport(ref m) if m.starts_with("HTTP 500")),
            "{first}"
        );
        assert_eq!(client.complete(&req).unwrap(), "About 9,000 RMB.");
        let seen = server.join().unwrap();
        let (auth, body) = seen[1].split_once('\n').unwrap();
        assert_eq!(auth.to_ascii_lowercase(), "authorization: bearer sk-test");
        let body: Value = serde_json::from_str(body).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "hello");
    }

    #[test]
    fn malformed_reply_is_transport_error() {
        let (url, server) = serve(vec![(200, r#"{"choices":[]}"#.into())]);
        let client = LiveClient::new(settings(url), "k".into());
        let s = spec(&[]);
        let err = client
            .complete(&ChatRequest {
                system: "",
                prompt: "",
                spec: &s,
            })
            .unwrap_err();
        assert!(matches!(err, Error::Transport(_)));
        server.join().unwrap();
    }

    #[test]
    fn rate_limit_spaces_requests() {
        let mut st = settings("http://127.0.0.1:9/".into());
        st.request_interval = Duration::from_millis(30);
        let client = LiveClient::new(st, "k".into());
        let t0 = Instant::now();
        for _ in 0..3 {
            client.wait_for_slot();
        }
        assert!(t0.elapsed() >= Duration::from_millis(60));
        assert_eq!(client.retry_delay(3), Duration::from_millis(4));
    }
}
