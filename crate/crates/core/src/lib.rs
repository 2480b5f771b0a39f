//! Rental price prediction for Shanghai lane houses.
//!
//! The pipeline runs from a raw listing table to a numeric design matrix
//! ([`ingest`]), then to classical regressors ([`models`], [`trees`]) scored on
//! a shared split ([`eval`]), and to few-shot prompting of a chat model
//! ([`llm`]). Every random draw comes from a seeded stream in [`rng`].

pub mod error;
pub mod eval;
pub mod ingest;
pub mod llm;
pub mod models;
pub mod numerics;
pub mod rng;
pub mod synth;
pub mod trees;

pub use error::{Error, Result};
pub use eval::{
    compare_models, grid_search, train_test_split, ComparisonTable, GridSpec, MetricsReport, ModelConfig, ModelFamily,
    ParamSet, Scoring, SplitSpec,
};
pub use ingest::{build_design_matrix, clean, load_csv, DesignMatrix, FeatureSchema, RawTable, StageCounts};
pub use llm::{ChatClient, Listing, LlmConfig, MockClient};
pub use models::{FitConfig, LinearModel};
pub use numerics::Matrix;
pub use trees::{Forest, ForestParams, TreeNode, TreeParams};
