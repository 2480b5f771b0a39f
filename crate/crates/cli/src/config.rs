//! Run configuration, read from JSON. Relative paths resolve against the
//! directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use indexmap::IndexMap;
use lanehouse::eval::{ModelFamily, ParamSet, Scoring};
use lanehouse::ingest::FeatureSchema;
use lanehouse::llm::LlmConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub label: String,
    pub family: ModelFamily,
    /// Fixed parameters.
    #[serde(default)]
    pub params: ParamSet,
    /// Values searched by k-fold CV on the training split.
    #[serde(default)]
    pub grid: IndexMap<String, Vec<f64>>,
}

impl ModelEntry {
    fn new(label: &str, family: ModelFamily, grid: &[(&str, &[f64])]) -> Self {
        Self {
            label: label.into(),
            family,
            params: ParamSet::new(),
            grid: grid.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect(),
        }
    }
}

/// The five classical regressors with their search grids.
pub fn default_models() -> Vec<ModelEntry> {
    vec![
        ModelEntry::new("MLR", ModelFamily::Mlr, &[]),
        ModelEntry::new(
            "Ridge",
            ModelFamily::Ridge,
            &[("lambda", &[0.1, 1.0, 10.0, 100.0, 1000.0])],
        ),
        ModelEntry::new(
            "Lasso",
            ModelFamily::Lasso,
            &[("lambda", &[1.0, 100.0, 1e4, 1e5, 1e6, 1e7])],
        ),
        ModelEntry::new(
            "DT",
            ModelFamily::Tree,
            &[
                ("max_depth", &[5.0]),
                ("min_samples_leaf", &[7.0]),
                ("min_samples_split", &[2.0]),
            ],
        ),
        ModelEntry::new("RF", ModelFamily::Forest, &[("feature_fraction", &[1.0 / 3.0, 1.0])]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub shuffled: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            shuffled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmRunConfig {
    #[serde(flatten)]
    pub client: LlmConfig,
    pub k_values: Vec<usize>,
    /// Use only the first this-many test rows as queries.
    pub max_queries: Option<usize>,
}

impl Default for LlmRunConfig {
    fn default() -> Self {
        Self {
            client: LlmConfig::default(),
            k_values: vec![0, 1, 5, 10],
            max_queries: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    /// Feature schema JSON. The built-in lane-house schema when absent.
    #[serde(default)]
    pub schema: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub split: SplitConfig,
    /// Columns that must be non-blank. Every schema column when absent.
    #[serde(default)]
    pub required_columns: Option<Vec<String>>,
    /// Column grouping the per-region summaries.
    #[serde(default = "default_region")]
    pub region_column: String,
    /// Column holding the floor area.
    #[serde(default = "default_area")]
    pub area_column: String,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub scoring: Scoring,
    #[serde(default = "default_models")]
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub llm: LlmRunConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_region() -> String {
    "district".into()
}

fn default_area() -> String {
    "sqmeters".into()
}

fn default_folds() -> usize {
    5
}

impl RunConfig {
    /// Minimal config over `dataset` with every other key at its default.
    pub fn for_dataset(dataset: impl Into<PathBuf>) -> Self {
        serde_json::from_value(serde_json::json!({ "dataset": dataset.into() })).expect("defaults deserialize")
    }

    /// Reads and validates a config file, resolving its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dataset = base.join(&cfg.dataset);
        cfg.schema = cfg.schema.map(|s| base.join(s));
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dataset.is_file() {
            bail!("dataset {} does not exist", self.dataset.display());
        }
        if let Some(s) = &self.schema {
            if !s.is_file() {
                bail!("schema {} does not exist", s.display());
            }
        }
        if self.models.is_empty() {
            bail!("config lists no models");
        }
        let mut labels: Vec<&str> = self.models.iter().map(|m| m.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            bail!("model label {:?} is used twice", w[0]);
        }
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            bail!("split.test_fraction must lie in (0, 1), got {f}");
        }
        self.llm.client.validate()?;
        Ok(())
    }

    pub fn load_schema(&self) -> Result<FeatureSchema> {
        match &self.schema {
            Some(p) => FeatureSchema::load(p).with_context(|| format!("loading schema {}", p.display())),
            None => Ok(FeatureSchema::default()),
        }
    }

    pub fn split_spec(&self) -> lanehouse::eval::SplitSpec {
        lanehouse::eval::SplitSpec {
            test_fraction: self.split.test_fraction,
            seed: self.seed,
            shuffled: self.split.shuffled,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.csv"), "rent\n1\n").unwrap();
        fs::write(dir.path().join("run.json"), r#"{"dataset": "data.csv", "seed": 7}"#).unwrap();
        let cfg = RunConfig::load(&dir.path().join("run.json")).unwrap();
        assert_eq!(cfg.dataset, dir.path().join("data.csv"));
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        assert_eq!(cfg.models.len(), 5);
        assert_eq!(cfg.llm.k_values, vec![0, 1, 5, 10]);
        assert_eq!(cfg.split_spec().seed, 7);
    }

    #[test]
    fn missing_schema_fails_fast() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.csv"), "rent\n1\n").unwrap();
        fs::write(
            dir.path().join("run.json"),
            r#"{"dataset": "data.csv", "schema": "nope.json"}"#,
        )
        .unwrap();
        let err = RunConfig::load(&dir.path().join("run.json")).unwrap_err();
        assert!(err.to_string().contains("nope.json"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_duplicate_labels() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.csv"), "rent\n1\n").unwrap();
        fs::write(dir.path().join("a.json"), r#"{"dataset": "data.csv", "sede": 1}"#).unwrap();
        assert!(RunConfig::load(&dir.path().join("a.json")).is_err());
        fs::write(
            dir.path().join("b.json"),
            r#"{"dataset": "data.csv", "models": [{"label": "x", "family": "mlr"}, {"label": "x", "family": "tree"}]}"#,
        )
        .unwrap();
        assert!(RunConfig::load(&dir.path().join("b.json")).is_err());
    }

    #[test]
    fn shipped_configs_parse() {
        let cfg: RunConfig = serde_json::from_str(include_str!("../../../configs/example.json")).unwrap();
        assert_eq!(cfg.models.len(), 5);
        assert!(cfg.llm.client.mock_mode);
        let schema: FeatureSchema = serde_json::from_str(include_str!("../../../configs/schema.json")).unwrap();
        assert_eq!(schema, FeatureSchema::default());
    }

    #[test]
    fn llm_keys_flatten() {
        let v = serde_json::json!({"dataset": "d.csv", "llm": {"mock_mode": false, "workers": 2, "k_values": [0, 3]}});
        let cfg: RunConfig = serde_json::from_value(v).unwrap();
        assert!(!cfg.llm.client.mock_mode);
        assert_eq!((cfg.llm.client.workers, cfg.llm.k_values.clone()), (2, vec![0, 3]));
    }
}
