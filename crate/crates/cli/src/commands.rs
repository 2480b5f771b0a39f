//! The verbs. Each reads its inputs from the config and the output
//! directory and rewrites its output files in full.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lanehouse::eval::{
    compare_models, format_r2, format_sci, grid_search, mean, split_indices, ComparisonTable, CvTable, GridSpec,
    ModelConfig, Scoring,
};
use lanehouse::ingest::{
    build_design_matrix, clean, compute_total_ssvalue, load_csv, DesignMatrix, FeatureKind, RawTable, StageCounts,
};
use lanehouse::llm::{
    evaluate_llm_run, listings_from_table, lower_median, predict_llm, ChatClient, Listing, LiveClient, MockClient,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const SUMMARY: &str = "summary.json";
pub const CLEANED: &str = "cleaned.csv";
pub const DESIGN_MATRIX: &str = "design_matrix.csv";
pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_MD: &str = "comparison.md";
pub const LLM_JSON: &str = "llm_report.json";
pub const LLM_MD: &str = "llm_report.md";
pub const RUNLOG: &str = "runlog.jsonl";
pub const REPORT_MD: &str = "report.md";
pub const FIG1: &str = "plotdata_fig1_region_counts.csv";
pub const FIG2: &str = "plotdata_fig2_region_rent.csv";
pub const FIG3: &str = "plotdata_fig3_region_area.csv";
pub const FIG4: &str = "plotdata_fig4_amenity_totals.csv";
pub const FIG5: &str = "plotdata_fig5_comparison.csv";
pub const FIG6: &str = "plotdata_fig6_llm_shots.csv";

/// Files written and non-fatal problems met by one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn write(&mut self, dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }

    fn write_csv(&mut self, dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().context("flushing csv")?;
        self.write(dir, name, bytes)
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn prepare_output(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn require(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if !p.is_file() {
        bail!("{} is missing; run `preprocess` first", p.display());
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region: String,
    pub listings: usize,
    pub rent_min: f64,
    pub rent_median: f64,
    pub rent_mean: f64,
    pub rent_max: f64,
    pub area_min: f64,
    pub area_median: f64,
    pub area_mean: f64,
    pub area_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub stage_counts: StageCounts,
    pub rows: usize,
    pub features: usize,
    pub feature_names: Vec<String>,
    pub regions: Vec<RegionSummary>,
    /// Listings per amenity total.
    pub amenity_totals: Vec<(usize, usize)>,
}

fn region_summaries(d: &DesignMatrix, t: &RawTable, region: &str, area: &str) -> Result<Vec<RegionSummary>> {
    let ri = t.column_index(region)?;
    let ai = t.column_index(area)?;
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (r, cells) in t.rows().iter().enumerate() {
        let a: f64 = cells[ai]
            .trim()
            .parse()
            .with_context(|| format!("row {r}: {area} {:?} is not a number", cells[ai]))?;
        let g = groups.entry(cells[ri].trim()).or_default();
        g.0.push(d.y[r]);
        g.1.push(a);
    }
    let stats = |v: &[f64]| {
        (
            v.iter().copied().fold(f64::INFINITY, f64::min),
            lower_median(v).unwrap_or(f64::NAN),
            mean(v),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    Ok(groups
        .into_iter()
        .map(|(name, (rent, area))| {
            let (rent_min, rent_median, rent_mean, rent_max) = stats(&rent);
            let (area_min, area_median, area_mean, area_max) = stats(&area);
            RegionSummary {
                region: name.to_string(),
                listings: rent.len(),
                rent_min,
                rent_median,
                rent_mean,
                rent_max,
                area_min,
                area_median,
                area_mean,
                area_max,
            }
        })
        .collect())
}

/// Load, clean and encode the dataset; write the cleaned table, the design
/// matrix, a summary and the per-region plot data.
pub fn cmd_preprocess(cfg: &RunConfig) -> Result<Outcome> {
    let schema = cfg.load_schema()?;
    let raw = load_csv(&cfg.dataset).with_context(|| format!("loading {}", cfg.dataset.display()))?;
    let (cleaned, counts) = clean(&raw, &schema, cfg.required_columns.as_deref()).context("cleaning")?;
    let d = build_design_matrix(&cleaned, &schema).context("encoding")?;
    let dir = prepare_output(cfg)?;
    let mut out = Outcome::default();

    let mut buf = Vec::new();
    cleaned.write_csv(&mut buf)?;
    out.write(dir, CLEANED, buf)?;
    let mut buf = Vec::new();
    d.write_csv(&mut buf, &schema.target)?;
    out.write(dir, DESIGN_MATRIX, buf)?;

    let regions = region_summaries(&d, &cleaned, &cfg.region_column, &cfg.area_column)?;
    let mut amenity_totals = Vec::new();
    if let Some(entry) = schema
        .features
        .iter()
        .find(|e| e.kind == FeatureKind::Ordinal && e.amenities.is_some())
    {
        let cols = entry.amenities.clone().unwrap_or_default();
        let mut hist = vec![0usize; cols.len() + 1];
        for rec in cleaned.records() {
            hist[compute_total_ssvalue(&rec, &cols, &schema.truthy)?] += 1;
        }
        amenity_totals = hist.into_iter().enumerate().collect();
    }

    let summary = Summary {
        dataset: cfg
            .dataset
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        stage_counts: counts,
        rows: d.n_rows(),
        features: d.n_features(),
        feature_names: d.feature_names.clone(),
        regions,
        amenity_totals,
    };
    out.write(dir, SUMMARY, to_json(&summary)?)?;

    let f = |v: f64| v.to_string();
    let fig1: Vec<Vec<String>> = summary
        .regions
        .iter()
        .map(|r| vec![r.region.clone(), r.listings.to_string()])
        .collect();
    out.write_csv(dir, FIG1, &["region", "listings"], &fig1)?;
    let fig2: Vec<Vec<String>> = summary
        .regions
        .iter()
        .map(|r| {
            vec![
                r.region.clone(),
                r.listings.to_string(),
                f(r.rent_min),
                f(r.rent_median),
                f(r.rent_mean),
                f(r.rent_max),
            ]
        })
        .collect();
    out.write_csv(
        dir,
        FIG2,
        &["region", "listings", "rent_min", "rent_median", "rent_mean", "rent_max"],
        &fig2,
    )?;
    let fig3: Vec<Vec<String>> = summary
        .regions
        .iter()
        .map(|r| {
            vec![
                r.region.clone(),
                r.listings.to_string(),
                f(r.area_min),
                f(r.area_median),
                f(r.area_mean),
                f(r.area_max),
            ]
        })
        .collect();
    out.write_csv(
        dir,
        FIG3,
        &["region", "listings", "area_min", "area_median", "area_mean", "area_max"],
        &fig3,
    )?;
    let fig4: Vec<Vec<String>> = summary
        .amenity_totals
        .iter()
        .map(|(t, n)| vec![t.to_string(), n.to_string()])
        .collect();
    out.write_csv(dir, FIG4, &["amenity_total", "listings"], &fig4)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub label: String,
    pub cv_table: Option<CvTable>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub test_fraction: f64,
    pub folds: usize,
    pub scoring: Scoring,
    pub table: ComparisonTable,
    pub tuning: Vec<Tuning>,
}

impl ComparisonReport {
    pub fn to_markdown(&self) -> String {
        let mut md = format!(
            "## Model comparison\n\nTrain rows: {}. Test rows: {}. Seed: {}.\n\n{}",
            self.table.n_train,
            self.table.n_test,
            self.seed,
            self.table.to_markdown()
        );
        for t in &self.tuning {
            if let Some(cv) = &t.cv_table {
                md.push_str(&format!(
                    "\n### {} cross-validation ({} folds)\n\n{}",
                    t.label,
                    cv.folds,
                    cv.to_markdown()
                ));
            }
        }
        md
    }
}

/// Tune each model on the training split, then fit and score all of them on
/// the shared split.
pub fn cmd_compare(cfg: &RunConfig) -> Result<Outcome> {
    let dir = prepare_output(cfg)?;
    let path = require(dir, DESIGN_MATRIX)?;
    let d = DesignMatrix::read_csv(File::open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    let split = cfg.split_spec();
    let (train_idx, _) = split_indices(d.n_rows(), &split)?;
    let train = d.select_rows(&train_idx);

    let mut configs = Vec::new();
    let mut tuning = Vec::new();
    for m in &cfg.models {
        let mut params = m.params.clone();
        let mut t = Tuning {
            label: m.label.clone(),
            cv_table: None,
            error: None,
        };
        if !m.grid.is_empty() {
            let spec = GridSpec {
                family: m.family,
                grid: m.grid.clone(),
                base: m.params.clone(),
                folds: cfg.folds,
                scoring: cfg.scoring,
                seed: cfg.seed,
            };
            match grid_search(&train, &spec) {
                Ok(r) => {
                    params = r.best_params;
                    t.cv_table = Some(r.cv_table);
                }
                Err(e) => t.error = Some(format!("tuning failed: {e}")),
            }
        }
        configs.push(ModelConfig {
            label: m.label.clone(),
            family: m.family,
            params,
        });
        tuning.push(t);
    }

    let mut table = compare_models(&d, &split, &configs, cfg.seed)?;
    for (row, t) in table.rows.iter_mut().zip(&tuning) {
        if let Some(e) = &t.error {
            row.metrics = None;
            row.warnings.clear();
            row.error = Some(e.clone());
        }
    }
    table.refresh_winners();

    let report = ComparisonReport {
        seed: cfg.seed,
        test_fraction: split.test_fraction,
        folds: cfg.folds,
        scoring: cfg.scoring,
        table,
        tuning,
    };
    let mut out = Outcome {
        warnings: report.table.warnings(),
        ..Default::default()
    };
    out.write(dir, COMPARISON_JSON, to_json(&report)?)?;
    out.write(dir, COMPARISON_MD, report.to_markdown())?;
    let fig5: Vec<Vec<String>> = report
        .table
        .rows
        .iter()
        .map(|r| {
            let m = r.metrics;
            vec![
                r.label.clone(),
                r.family.to_string(),
                m.map_or_else(String::new, |m| m.mse.to_string()),
                m.map_or_else(String::new, |m| m.mae.to_string()),
                m.map_or_else(String::new, |m| m.r_squared.to_string()),
            ]
        })
        .collect();
    out.write_csv(dir, FIG5, &["label", "family", "mse", "mae", "r_squared"], &fig5)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRow {
    pub k: usize,
    pub label: String,
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    pub r_squared: Option<f64>,
    pub coverage: f64,
    pub attempted: usize,
    pub succeeded: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmReport {
    pub mode: String,
    pub model: String,
    pub template_id: String,
    pub seed: u64,
    pub train_rows: usize,
    pub queries: usize,
    pub rows: Vec<LlmRow>,
    pub warnings: Vec<String>,
}

impl LlmReport {
    pub fn to_markdown(&self) -> String {
        let mut md = format!(
            "## LLM few-shot prediction\n\nModel: {}. Template: {}. Queries: {}. Training rows: {}.\n\n\
             | | MSE | MAE | R Squared |\n| --- | --- | --- | --- |\n",
            if self.mode == "mock" {
                "offline mock"
            } else {
                &self.model
            },
            self.template_id,
            self.queries,
            self.train_rows
        );
        for r in &self.rows {
            match (r.mse, r.mae, r.r_squared) {
                (Some(a), Some(b), Some(c)) => md.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    r.label,
                    format_sci(a),
                    format_sci(b),
                    format_r2(c)
                )),
                _ => md.push_str(&format!("| {} | failed | failed | failed |\n", r.label)),
            }
        }
        md.push_str("\nCoverage (parsed answers / queries):");
        for r in &self.rows {
            md.push_str(&format!(" {}-shot {}/{};", r.k, r.succeeded, r.attempted));
        }
        md.pop();
        md.push_str(".\n");
        if !self.warnings.is_empty() {
            md.push_str("\n### Warnings\n\n");
            for w in &self.warnings {
                md.push_str(&format!("- {w}\n"));
            }
        }
        md
    }
}

fn make_client(cfg: &RunConfig) -> Result<Box<dyn ChatClient>> {
    if cfg.llm.client.mock_mode {
        Ok(Box::new(MockClient))
    } else {
        Ok(Box::new(LiveClient::from_env(cfg.llm.client.live_settings())?))
    }
}

/// Few-shot predictions on the test split for every configured `k`.
pub fn cmd_llm(cfg: &RunConfig) -> Result<Outcome> {
    let client = make_client(cfg)?;
    let dir = prepare_output(cfg)?;
    let schema = cfg.load_schema()?;
    let cleaned = load_csv(require(dir, CLEANED)?)?;
    let listings = listings_from_table(&cleaned, &schema, &cfg.llm.client.columns)?;
    let (train_idx, test_idx) = split_indices(listings.len(), &cfg.split_spec())?;
    let train: Vec<Listing> = train_idx.iter().map(|&i| listings[i].clone()).collect();
    let limit = cfg.llm.max_queries.unwrap_or(usize::MAX);
    let queries: Vec<Listing> = test_idx.iter().take(limit).map(|&i| listings[i].clone()).collect();

    let model = if cfg.llm.client.mock_mode {
        "mock".to_string()
    } else {
        cfg.llm.client.model_name.clone()
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut log = Vec::new();
    for &k in &cfg.llm.k_values {
        let run = predict_llm(&queries, &train, k, &cfg.llm.client, client.as_ref())?;
        run.write_jsonl(&mut log)?;
        let failed = run.entries.iter().filter(|e| e.parsed.is_none()).count();
        if failed > 0 {
            warnings.push(format!(
                "{k}-shot: {failed} of {} queries got no usable answer",
                queries.len()
            ));
        }
        if run.truncated_shots {
            warnings.push(format!("{k}-shot: only {} training rows available", train.len()));
        }
        let label = format!("{model} ({k}-shot)");
        rows.push(match evaluate_llm_run(&run.predictions(), &run.truths()) {
            Ok(ev) => LlmRow {
                k,
                label,
                mse: Some(ev.metrics.mse),
                mae: Some(ev.metrics.mae),
                r_squared: Some(ev.metrics.r_squared),
                coverage: ev.coverage,
                attempted: ev.attempted,
                succeeded: ev.succeeded,
                error: None,
            },
            Err(e) => {
                warnings.push(format!("{k}-shot: {e}"));
                LlmRow {
                    k,
                    label,
                    mse: None,
                    mae: None,
                    r_squared: None,
                    coverage: 0.0,
                    attempted: queries.len(),
                    succeeded: 0,
                    error: Some(e.to_string()),
                }
            }
        });
    }

    let report = LlmReport {
        mode: if cfg.llm.client.mock_mode { "mock" } else { "live" }.into(),
        model,
        template_id: cfg.llm.client.template_id.clone(),
        seed: cfg.seed,
        train_rows: train.len(),
        queries: queries.len(),
        rows,
        warnings: warnings.clone(),
    };
    let mut out = Outcome {
        warnings,
        ..Default::default()
    };
    out.write(dir, RUNLOG, log)?;
    out.write(dir, LLM_JSON, to_json(&report)?)?;
    out.write(dir, LLM_MD, report.to_markdown())?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    let fig6: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                opt(r.mse),
                opt(r.mae),
                opt(r.r_squared),
                r.coverage.to_string(),
            ]
        })
        .collect();
    out.write_csv(dir, FIG6, &["k", "mse", "mae", "r_squared", "coverage"], &fig6)?;
    Ok(out)
}

/// Combine whatever reports exist in the output directory into one file.
pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome> {
    let dir = prepare_output(cfg)?;
    let mut md = String::from("# Rent prediction report\n");
    let mut found = false;
    if let Ok(text) = fs::read_to_string(dir.join(SUMMARY)) {
        let s: Summary = serde_json::from_str(&text).context("parsing summary.json")?;
        let c = s.stage_counts;
        md.push_str(&format!(
            "\n## Data\n\nRows loaded: {}. After dropping missing values: {}. After removing duplicates: {}. Features: {}.\n",
            c.loaded, c.after_drop_missing, c.after_dedup, s.features
        ));
        found = true;
    }
    for name in [COMPARISON_JSON, LLM_JSON] {
        let Ok(text) = fs::read_to_string(dir.join(name)) else {
            continue;
        };
        md.push('\n');
        if name == COMPARISON_JSON {
            let r: ComparisonReport = serde_json::from_str(&text).context("parsing comparison.json")?;
            md.push_str(&r.to_markdown());
        } else {
            let r: LlmReport = serde_json::from_str(&text).context("parsing llm_report.json")?;
            md.push_str(&r.to_markdown());
        }
        found = true;
    }
    if !found {
        bail!(
            "nothing to report in {}; run preprocess, compare or llm first",
            dir.display()
        );
    }
    let mut out = Outcome::default();
    out.write(dir, REPORT_MD, md)?;
    Ok(out)
}

/// Writes a synthetic listing file in the raw column layout.
pub fn cmd_synth(spec: &lanehouse::synth::SynthSpec, path: &Path) -> Result<Outcome> {
    let t = lanehouse::synth::synthesize(spec)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    t.write_csv(BufWriter::new(f))?;
    Ok(Outcome {
        files: vec![path.to_path_buf()],
        warnings: Vec::new(),
    })
}
