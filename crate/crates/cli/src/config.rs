//! Experiment configuration files: one JSON schema per subcommand, with
//! unknown keys rejected everywhere.
//!
//! Parsing happens in two stages so diagnostics stay precise: the outer
//! envelope first, then the subcommand-specific params block.

use serde::{Deserialize, Serialize};
use willsim_core::inference::FitConfig;

/// Outer envelope of every experiment config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCrsParams {
    pub n_grid: Vec<usize>,
    pub budget: u32,
    pub rank: usize,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferParams {
    pub n_humans: usize,
    pub n_items: usize,
    pub observed_fraction: f64,
    pub holdout_fraction: f64,
    pub model: FitConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyA7Params {
    pub n_trials: usize,
    pub n_background: usize,
    pub agreement_grid: Vec<f64>,
    pub pair_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatePolicyParams {
    /// Universe definition file, relative to the config file.
    pub universe_file: String,
    pub start_state: usize,
    pub alpha_hist: f64,
    pub beta_time: f64,
    pub gamma_future: f64,
    pub horizon: usize,
    /// States whose sensor snapshots form the will history, oldest
    /// first; defaults to just the start state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_states: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateWillpowerParams {
    /// "bundled" or a CSV path relative to the config file.
    pub dataset: String,
    /// "baseline", "projected", or an explicit table.
    pub fractions: FractionsChoice,
    pub budget_tw: f64,
    pub body_tw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FractionsChoice {
    Named(String),
    Explicit {
        liberal_democracy: f64,
        electoral_democracy: f64,
        electoral_autocracy: f64,
        closed_autocracy: f64,
        no_data: f64,
        body_aligned_share: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageScanParams {
    pub session_n_grid: Vec<usize>,
    pub session_budget: u32,
    pub population: f64,
    pub seconds_per_action: f64,
    pub time_fraction: f64,
    pub duration_years: f64,
    pub lifetime_years: f64,
}

/// All subcommand names, in help order.
pub const SUBCOMMANDS: [&str; 6] = [
    "simulate-crs",
    "infer",
    "verify-a7",
    "evaluate-policy",
    "estimate-willpower",
    "coverage-scan",
];
