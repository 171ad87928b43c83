//! Learning-rate sweeps over the three reward-variant environments, with
//! deterministic per-cell seed derivation and convergence aggregation.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Environment, RewardVariant};
use crate::fmt::sig12;
use crate::graph::WorkflowGraph;
use crate::qlearn::{train, write_telemetry_csvs, TrainConfig, TrainError, TrainResult};
use std::sync::Arc;

/// The default learning-rate grid, spanning the 0.001..0.9 range.
pub const DEFAULT_LEARNING_RATES: [f64; 12] = [
    0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
];

/// Report aliases of the three environments, in variant order.
pub const DEFAULT_ENVIRONMENT_NAMES: [&str; 3] = ["env_new1", "env_new2", "env_new3"];

/// Grid definition for one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub learning_rates: Vec<f64>,
    pub environment_names: Vec<String>,
    pub base: TrainConfig,
    pub seeds_per_cell: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            learning_rates: DEFAULT_LEARNING_RATES.to_vec(),
            environment_names: DEFAULT_ENVIRONMENT_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            base: TrainConfig::default(),
            seeds_per_cell: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.learning_rates.is_empty() {
            return Err(SweepError::InvalidGrid(
                "learning-rate list is empty".into(),
            ));
        }
        for pair in self.learning_rates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(SweepError::InvalidGrid(format!(
                    "learning rates must be strictly increasing: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &lr in &self.learning_rates {
            if !(lr > 0.0 && lr <= 1.0) {
                return Err(SweepError::InvalidGrid(format!(
                    "learning rate {lr} outside (0, 1]"
                )));
            }
        }
        if self.environment_names.is_empty() {
            return Err(SweepError::InvalidGrid("environment list is empty".into()));
        }
        for name in &self.environment_names {
            if RewardVariant::from_name(name).is_none() {
                return Err(SweepError::UnknownEnvironment(name.clone()));
            }
        }
        if self.seeds_per_cell == 0 {
            return Err(SweepError::InvalidGrid("seeds_per_cell must be >= 1".into()));
        }
        self.base.validate()?;
        Ok(())
    }
}

/// One trained cell of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub env_name: String,
    pub env_index: usize,
    pub learning_rate: f64,
    pub lr_index: usize,
    pub seed_index: u32,
    pub seed: u64,
    pub result: TrainResult,
}

impl SweepCell {
    /// Directory name for this cell's telemetry: `{env}_{lr}_{seed}`.
    pub fn dir_name(&self) -> String {
        format!("{}_{}_{}", self.env_name, self.learning_rate, self.seed_index)
    }
}

/// All cells of a sweep, ordered by (environment, learning rate, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown environment name: {0}")]
    UnknownEnvironment(String),
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("learning rate {0} is not part of the sweep")]
    MissingLearningRate(f64),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic, injective cell-seed derivation from
/// (base seed, environment index, learning-rate index, seed index).
pub fn derive_cell_seed(base: u64, env_index: usize, lr_index: usize, seed_index: u32) -> u64 {
    let stream = ((env_index as u64) << 40) | ((lr_index as u64) << 20) | u64::from(seed_index);
    splitmix64(base.wrapping_add(splitmix64(stream)))
}

/// Trains every (environment, learning rate, seed) cell. Cells run in
/// parallel; the result is independent of execution order.
pub fn run_sweep(graph: &Arc<WorkflowGraph>, config: &SweepConfig) -> Result<SweepResult, SweepError> {
    config.validate()?;

    let mut specs = Vec::new();
    for (env_index, env_name) in config.environment_names.iter().enumerate() {
        let variant = RewardVariant::from_name(env_name)
            .ok_or_else(|| SweepError::UnknownEnvironment(env_name.clone()))?;
        for (lr_index, &lr) in config.learning_rates.iter().enumerate() {
            for seed_index in 0..config.seeds_per_cell {
                specs.push((env_index, env_name.clone(), variant, lr_index, lr, seed_index));
            }
        }
    }

    let cells: Result<Vec<SweepCell>, SweepError> = specs
        .into_par_iter()
        .map(|(env_index, env_name, variant, lr_index, lr, seed_index)| {
            let seed = derive_cell_seed(config.base.seed, env_index, lr_index, seed_index);
            let cell_config = TrainConfig {
                alpha: lr,
                seed,
                ..config.base.clone()
            };
            let mut env = Environment::new(graph.clone(), variant);
            let result = train(&mut env, &cell_config, &BTreeSet::new())?;
            Ok(SweepCell {
                env_name,
                env_index,
                learning_rate: lr,
                lr_index,
                seed_index,
                seed,
                result,
            })
        })
        .collect();
    let mut cells = cells?;
    cells.sort_by(|a, b| {
        (a.env_index, a.lr_index, a.seed_index).cmp(&(b.env_index, b.lr_index, b.seed_index))
    });
    Ok(SweepResult {
        config: config.clone(),
        cells,
    })
}

/// One row of the convergence-speed table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub env_name: String,
    pub learning_rate: f64,
    /// Median episodes-to-convergence over seeds; non-converged cells
    /// contribute the full episode budget.
    pub median_episodes: f64,
    pub converged_fraction: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite episode counts"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Aggregates episodes-to-convergence per (environment, learning rate),
/// sorted by environment then learning rate.
pub fn convergence_table(result: &SweepResult) -> Vec<ConvergenceRow> {
    let budget = f64::from(result.config.base.episodes);
    let mut rows = Vec::new();
    for (env_index, env_name) in result.config.environment_names.iter().enumerate() {
        for (lr_index, &lr) in result.config.learning_rates.iter().enumerate() {
            let mut episodes: Vec<f64> = result
                .cells
                .iter()
                .filter(|c| c.env_index == env_index && c.lr_index == lr_index)
                .map(|c| {
                    c.result
                        .episodes_to_convergence
                        .map_or(budget, f64::from)
                })
                .collect();
            let converged = result
                .cells
                .iter()
                .filter(|c| {
                    c.env_index == env_index && c.lr_index == lr_index && c.result.converged
                })
                .count();
            let total = episodes.len().max(1);
            rows.push(ConvergenceRow {
                env_name: env_name.clone(),
                learning_rate: lr,
                median_episodes: median(&mut episodes),
                converged_fraction: converged as f64 / total as f64,
            });
        }
    }
    rows
}

/// Average reward per step for one environment across an episode window.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSeries {
    pub env_name: String,
    pub points: Vec<(u32, f64)>,
}

/// Per-environment (episode, episodic_return / steps) curves at one learning
/// rate, over an inclusive episode window (seed index 0 of each cell).
pub fn reward_dynamics(
    result: &SweepResult,
    learning_rate: f64,
    window: (u32, u32),
) -> Result<Vec<RewardSeries>, SweepError> {
    let lr_index = result
        .config
        .learning_rates
        .iter()
        .position(|&lr| lr == learning_rate)
        .ok_or(SweepError::MissingLearningRate(learning_rate))?;

    let mut series = Vec::new();
    for (env_index, env_name) in result.config.environment_names.iter().enumerate() {
        let cell = result.cells.iter().find(|c| {
            c.env_index == env_index && c.lr_index == lr_index && c.seed_index == 0
        });
        let points = cell.map_or_else(Vec::new, |cell| {
            cell.result
                .telemetry
                .episode_rewards
                .iter()
                .filter(|r| r.episode >= window.0 && r.episode <= window.1)
                .map(|r| {
                    let steps = f64::from(r.steps.max(1));
                    (r.episode, r.episodic_return / steps)
                })
                .collect()
        });
        series.push(RewardSeries {
            env_name: env_name.clone(),
            points,
        });
    }
    Ok(series)
}

/// Serializes a sweep to a directory: `sweep.json` (config echo), one
/// telemetry subdirectory per cell, and `convergence_table.csv`.
pub fn write_sweep_dir(result: &SweepResult, out_dir: &Path) -> Result<(), SweepError> {
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = serde_json::to_string_pretty(&result.config).expect("config serializes");
    manifest.push('\n');
    std::fs::write(out_dir.join("sweep.json"), manifest)?;

    for cell in &result.cells {
        let cell_dir = out_dir.join(cell.dir_name());
        write_telemetry_csvs(&cell.result.telemetry, &cell_dir)?;
        cell.result.q_table.write_csv(&cell_dir.join("qtable.csv"))?;
        let converged_line = match cell.result.episodes_to_convergence {
            Some(episodes) => format!("converged,{episodes}\n"),
            None => "converged,\n".to_string(),
        };
        std::fs::write(cell_dir.join("convergence.csv"), converged_line)?;
    }

    let mut table = String::from("env,lr,median_episodes,converged_fraction\n");
    for row in convergence_table(result) {
        table.push_str(&format!(
            "{},{},{},{}\n",
            row.env_name,
            row.learning_rate,
            sig12(row.median_episodes),
            sig12(row.converged_fraction)
        ));
    }
    std::fs::write(out_dir.join("convergence_table.csv"), table)?;
    Ok(())
}
