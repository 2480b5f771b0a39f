//! Few-shot rent prediction with a chat model: listing records, exemplar
//! selection, prompt rendering, answer parsing and the batch runner.

mod client;
mod listing;
mod parse;
mod prompt;
mod shots;

pub use client::{ChatClient, ChatRequest, LiveClient, LiveSettings, MockClient, API_KEY_ENV};
pub use listing::{field_names, listings_from_table, Field, Listing, PromptColumns};
pub use parse::{group_thousands, parse_price, PriceWindow};
pub use prompt::{
    build_prompt, compute_statistics, lower_median, PromptSpec, StatsBlock, Trend, DEFAULT_INSTRUCTION,
    SQUARE_FEET_PER_SQUARE_METER, TEMPLATE_IDS,
};
pub use shots::{gower_distance, select_shots, Exemplar, ShotSet};

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::MetricsReport;

pub const DEFAULT_SYSTEM_MESSAGE: &str =
    "You are a real-estate analyst. Reply with your estimate of the monthly rent in RMB as a single number.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_ms: u64,
    pub request_interval_ms: u64,
    pub retry_backoff_ms: u64,
    pub mock_mode: bool,
    /// Requests in flight at once.
    pub workers: usize,
    pub template_id: String,
    pub instruction: String,
    pub system_message: String,
    pub trend: Trend,
    pub window: PriceWindow,
    /// Per-field weights for exemplar distance, in [`field_names`] order.
    pub shot_weights: Option<Vec<f64>>,
    pub columns: PromptColumns,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-3.5-turbo".into(),
            temperature: 0.0,
            max_retries: 3,
            timeout_ms: 60_000,
            request_interval_ms: 0,
            retry_backoff_ms: 1_000,
            mock_mode: true,
            workers: 4,
            template_id: "default".into(),
            instruction: DEFAULT_INSTRUCTION.into(),
            system_message: DEFAULT_SYSTEM_MESSAGE.into(),
            trend: Trend::Unspecified,
            window: PriceWindow::default(),
            shot_weights: None,
            columns: PromptColumns::default(),
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.window.min.is_finite() && self.window.max.is_finite() && self.window.min <= self.window.max) {
            return Err(Error::Config("price window must be finite with min <= max".into()));
        }
        if !TEMPLATE_IDS.contains(&self.template_id.as_str()) {
            return Err(Error::Config(format!("unknown prompt template {:?}", self.template_id)));
        }
        if !self.mock_mode && self.endpoint_url.trim().is_empty() {
            return Err(Error::Config("live mode needs an endpoint_url".into()));
        }
        Ok(())
    }

    pub fn live_settings(&self) -> LiveSettings {
        LiveSettings {
            endpoint_url: self.endpoint_url.clone(),
            model_name: self.model_name.clone(),
            temperature: self.temperature,
            timeout: Duration::from_millis(self.timeout_ms),
            request_interval: Duration::from_millis(self.request_interval_ms),
            retry_backoff: Duration::from_millis(self.retry_backoff_ms),
        }
    }
}

/// One prediction attempt sequence, as written to the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    /// Position among the queries.
    pub index: usize,
    /// Source row of the query listing.
    pub row: usize,
    pub k: usize,
    pub template_id: String,
    pub prompt_sha256: String,
    pub shots: Vec<usize>,
    pub truth: f64,
    /// Last reply received, if any.
    pub raw_response: Option<String>,
    pub parsed: Option<f64>,
    pub error: Option<String>,
    /// Wall time over all attempts. Absent for deterministic clients.
    pub latency_ms: Option<u64>,
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRun {
    pub k: usize,
    pub template_id: String,
    pub truncated_shots: bool,
    pub entries: Vec<RunLogEntry>,
}

impl LlmRun {
    pub fn predictions(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.parsed).collect()
    }

    pub fn truths(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.truth).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n").map_err(|e| Error::io("<run log>", e))?;
        }
        Ok(())
    }
}

struct Prepared {
    prompt: String,
    spec: PromptSpec,
    shots: Vec<usize>,
    truncated: bool,
}

fn prepare(query: &Listing, train: &[Listing], k: usize, stats: StatsBlock, cfg: &LlmConfig) -> Result<Prepared> {
    let set = select_shots(query, train, k, cfg.shot_weights.as_deref())?;
    let spec = PromptSpec {
        query: query.clone(),
        instruction: cfg.instruction.clone(),
        statistics: stats,
        shots: set.exemplars.iter().map(|e| train[e.index].clone()).collect(),
        template_id: cfg.template_id.clone(),
    };
    Ok(Prepared {
        prompt: build_prompt(&spec)?,
        shots: set.exemplars.iter().map(|e| train[e.index].row).collect(),
        truncated: set.truncated,
        spec,
    })
}

fn ask(index: usize, p: &Prepared, k: usize, cfg: &LlmConfig, client: &dyn ChatClient) -> RunLogEntry {
    let started = Instant::now();
    let mut raw_response = None;
    let mut parsed = None;
    let mut error = None;
    let mut retries = 0;
    for attempt in 0..=cfg.max_retries {
        if attempt > 0 {
            retries = attempt;
            std::thread::sleep(client.retry_delay(attempt));
        }
        let req = ChatRequest {
            system: &cfg.system_message,
            prompt: &p.prompt,
            spec: &p.spec,
        };
        match client.complete(&req).and_then(|raw| {
            raw_response = Some(raw.clone());
            parse_price(&raw, cfg.window)
        }) {
            Ok(v) => {
                parsed = Some(v);
                error = None;
                break;
            }
            Err(e @ (Error::Transport(_) | Error::Extraction { .. })) => error = Some(e.to_string()),
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    RunLogEntry {
        index,
        row: p.spec.query.row,
        k,
        template_id: cfg.template_id.clone(),
        prompt_sha256: hex::encode(Sha256::digest(p.prompt.as_bytes())),
        shots: p.shots.clone(),
        truth: p.spec.query.rent,
        raw_response,
        parsed,
        error,
        latency_ms: (!client.is_deterministic()).then(|| started.elapsed().as_millis() as u64),
        retries,
    }
}

/// Runs every query through exemplar selection, prompting and parsing.
///
/// Results land in slots fixed by query position, so the output does not
/// depend on `cfg.workers` or scheduling. A query whose retries run out keeps
/// an entry with `error` set.
pub fn predict_llm(
    queries: &[Listing],
    train: &[Listing],
    k: usize,
    cfg: &LlmConfig,
    client: &dyn ChatClient,
) -> Result<LlmRun> {
    cfg.validate()?;
    let mut stats = compute_statistics(&train.iter().map(|l| l.rent).collect::<Vec<_>>())?;
    stats.trend = cfg.trend;
    let prepared: Vec<Prepared> = queries
        .par_iter()
        .map(|q| prepare(q, train, k, stats, cfg))
        .collect::<Result<_>>()?;

    let slots: Vec<OnceLock<RunLogEntry>> = (0..queries.len()).map(|_| OnceLock::new()).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..cfg.workers.min(queries.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = prepared.get(i) else { break };
                let _ = slots[i].set(ask(i, p, k, cfg, client));
            });
        }
    });

    Ok(LlmRun {
        k,
        template_id: cfg.template_id.clone(),
        truncated_shots: prepared.iter().any(|p| p.truncated),
        entries: slots
            .into_iter()
            .map(|s| s.into_inner().expect("every slot is filled"))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmEvaluation {
    pub metrics: MetricsReport,
    pub attempted: usize,
    pub succeeded: usize,
    pub coverage: f64,
}

/// Metrics over the parsed predictions only, with the share that parsed.
pub fn evaluate_llm_run(predictions: &[Option<f64>], truths: &[f64]) -> Result<LlmEvaluation> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let (y, yhat): (Vec<f64>, Vec<f64>) = predictions
        .iter()
        .zip(truths)
        .filter_map(|(p, t)| p.map(|v| (*t, v)))
        .unzip();
    if y.is_empty() {
        return Err(Error::Empty("no prediction parsed successfully".into()));
    }
    Ok(LlmEvaluation {
        metrics: MetricsReport::evaluate(&y, &yhat)?,
        attempted: predictions.len(),
        succeeded: y.len(),
        coverage: y.len() as f64 / predictions.len() as f64,
    })
}
