use serde::{Deserialize, Serialize};

use super::family::{ModelFamily, ModelSpec, ParamSet};
use super::metrics::MetricsReport;
use super::split::{train_test_split, SplitSpec};
use super::{format_r2, format_sci};
use crate::error::{Error, Result};
use crate::ingest::DesignMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub label: String,
    pub family: ModelFamily,
    #[serde(default)]
    pub params: ParamSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub mse: f64,
    pub mae: f64,
    pub r_squared: f64,
}

impl From<&MetricsReport> for MetricTriple {
    fn from(r: &MetricsReport) -> Self {
        Self {
            mse: r.mse,
            mae: r.mae,
            r_squared: r.r_squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub family: ModelFamily,
    pub params: ParamSet,
    pub metrics: Option<MetricTriple>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Winning row label per metric, `None` when no row produced metrics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Winners {
    pub mse: Option<String>,
    pub mae: Option<String>,
    pub r_squared: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub n_train: usize,
    pub n_test: usize,
    pub rows: Vec<ComparisonRow>,
    pub winners: Winners,
}

fn winner(rows: &[ComparisonRow], key: impl Fn(&MetricTriple) -> f64, lower: bool) -> Option<String> {
    let mut best: Option<(&str, f64)> = None;
    for row in rows {
        if let Some(m) = &row.metrics {
            let v = key(m);
            let wins = match best {
                None => true,
                Some((_, b)) => (lower && v < b) || (!lower && v > b),
            };
            if wins {
                best = Some((&row.label, v));
            }
        }
    }
    best.map(|(l, _)| l.to_string())
}

fn run_one(
    cfg: &ModelConfig,
    train: &DesignMatrix,
    test: &DesignMatrix,
    seed: u64,
) -> Result<(MetricTriple, Vec<String>)> {
    let spec = ModelSpec::resolve(cfg.family, &cfg.params, seed)?;
    let fitted = spec.fit(train)?;
    let report = MetricsReport::evaluate(&test.y, &fitted.predict(&test.x)?)?;
    Ok(((&report).into(), fitted.warnings()))
}

/// Fits every config on one shared train split and scores it on the shared
/// test split. A failing config keeps its row, with the error recorded.
pub fn compare_models(
    d: &DesignMatrix,
    split: &SplitSpec,
    configs: &[ModelConfig],
    seed: u64,
) -> Result<ComparisonTable> {
    if configs.is_empty() {
        return Err(Error::Empty("comparison needs at least one model config".into()));
    }
    let (train, test) = train_test_split(d, split)?;
    let rows: Vec<ComparisonRow> = configs
        .iter()
        .map(|cfg| {
            let (metrics, warnings, error) = match run_one(cfg, &train, &test, seed) {
                Ok((m, w)) => (Some(m), w, None),
                Err(e) => (None, Vec::new(), Some(e.to_string())),
            };
            ComparisonRow {
                label: cfg.label.clone(),
                family: cfg.family,
                params: cfg.params.clone(),
                metrics,
                warnings,
                error,
            }
        })
        .collect();
    let mut table = ComparisonTable {
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        rows,
        winners: Winners::default(),
    };
    table.refresh_winners();
    Ok(table)
}

impl ComparisonTable {
    /// Recomputes the per-metric winners from the rows. Ties go to the
    /// earlier row.
    pub fn refresh_winners(&mut self) {
        self.winners = Winners {
            mse: winner(&self.rows, |m| m.mse, true),
            mae: winner(&self.rows, |m| m.mae, true),
            r_squared: winner(&self.rows, |m| m.r_squared, false),
        };
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Notes from every row, prefixed by its label.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.rows {
            if let Some(e) = &row.error {
                out.push(format!("{}: {e}", row.label));
            }
            out.extend(row.warnings.iter().map(|w| format!("{}: {w}", row.label)));
        }
        out
    }

    /// Three-column metric table with each metric's winner in bold.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| | MSE | MAE | R Squared |\n| --- | --- | --- | --- |\n");
        let bold = |text: String, win: &Option<String>, label: &str| {
            if win.as_deref() == Some(label) {
                format!("**{text}**")
            } else {
                text
            }
        };
        for row in &self.rows {
            match &row.metrics {
                Some(m) => out.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    row.label,
                    bold(format_sci(m.mse), &self.winners.mse, &row.label),
                    bold(format_sci(m.mae), &self.winners.mae, &row.label),
                    bold(format_r2(m.r_squared), &self.winners.r_squared, &row.label),
                )),
                None => out.push_str(&format!("| {} | failed | failed | failed |\n", row.label)),
            }
        }
        let warnings = self.warnings();
        if !warnings.is_empty() {
            out.push_str("\n### Warnings\n\n");
            for w in warnings {
                out.push_str(&format!("- {w}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn data() -> DesignMatrix {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y = rows
            .iter()
            .map(|r| 100.0 + 3.0 * r[0] + 2.0 * r[1] + if r[1] > 3.0 { 1.0 } else { -1.0 })
            .collect();
        DesignMatrix::new(Matrix::from_rows(&rows).unwrap(), y, vec!["a".into(), "b".into()]).unwrap()
    }

    fn cfg(label: &str, family: ModelFamily) -> ModelConfig {
        ModelConfig {
            label: label.into(),
            family,
            params: ParamSet::new(),
        }
    }

    #[test]
    fn single_config_single_row() {
        let t = compare_models(&data(), &SplitSpec::default(), &[cfg("MLR", ModelFamily::Mlr)], 0).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!((t.n_train, t.n_test), (32, 8));
        assert_eq!(t.winners.mse.as_deref(), Some("MLR"));
    }

    #[test]
    fn identical_configs_identical_rows() {
        let cs = [cfg("a", ModelFamily::Forest), cfg("b", ModelFamily::Forest)];
        let t = compare_models(&data(), &SplitSpec::default(), &cs, 3).unwrap();
        assert_eq!(t.rows[0].metrics, t.rows[1].metrics);
        assert_eq!(t.winners.mse.as_deref(), Some("a"));
    }

    #[test]
    fn failures_annotate_rows() {
        let mut bad = cfg("bad", ModelFamily::Ridge);
        bad.params.insert("lambda".into(), -2.0);
        let t = compare_models(&data(), &SplitSpec::default(), &[bad, cfg("ok", ModelFamily::Mlr)], 0).unwrap();
        assert!(t.rows[0].error.is_some() && t.rows[0].metrics.is_none());
        assert_eq!(t.winners.r_squared.as_deref(), Some("ok"));
        let md = t.to_markdown();
        assert!(md.contains("| bad | failed | failed | failed |"));
        assert!(md.contains("### Warnings"));
        assert!(compare_models(&data(), &SplitSpec::default(), &[], 0).is_err());
    }

    #[test]
    fn markdown_layout() {
        let t = ComparisonTable {
            n_train: 4,
            n_test: 1,
            rows: vec![ComparisonRow {
                label: "RF".into(),
                family: ModelFamily::Forest,
                params: ParamSet::new(),
                metrics: Some(MetricTriple {
                    mse: 3.71e7,
                    mae: 3064.0,
                    r_squared: 0.7412,
                }),
                warnings: vec![],
                error: None,
            }],
            winners: Winners {
                mse: Some("RF".into()),
                mae: None,
                r_squared: None,
            },
        };
        assert_eq!(
            t.to_markdown(),
            "| | MSE | MAE | R Squared |\n| --- | --- | --- | --- |\n| RF | **3.71e+7** | 3.06e+3 | 0.74 |\n"
        );
    }
}
