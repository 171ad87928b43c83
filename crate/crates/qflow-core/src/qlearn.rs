//! Tabular Q-learning with epsilon-greedy exploration, plus the exact
//! solvers (value iteration, policy evaluation) used as test oracles and to
//! derive the shipped ideal action list.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Environment, RewardVariant};
use crate::fmt::sig12;
use crate::graph::{ActionId, StateId, WorkflowGraph};

/// Default episode budget for training runs.
pub const DEFAULT_EPISODES: u32 = 1000;
/// Default per-episode step cap; episodes truncate here with done = false.
pub const DEFAULT_MAX_STEPS_PER_EPISODE: u32 = 200;
/// Default convergence threshold on a single Q-update magnitude.
pub const DEFAULT_CONVERGENCE_THRESHOLD: f64 = 1e-4;
/// Default floor for the exploration probability.
pub const DEFAULT_EPSILON_MIN: f64 = 0.05;
/// Consecutive below-threshold updates required by the stable convergence test.
pub const DEFAULT_STABLE_CONSECUTIVE: u32 = 50;

/// A num_states x num_actions matrix of action values.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        QTable {
            num_states,
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, state: StateId, action: ActionId) -> f64 {
        self.values[state.0 * self.num_actions + action.0]
    }

    pub fn set(&mut self, state: StateId, action: ActionId, value: f64) {
        self.values[state.0 * self.num_actions + action.0] = value;
    }

    pub fn row(&self, state: StateId) -> &[f64] {
        let start = state.0 * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    pub fn row_max(&self, state: StateId) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Argmax over the state's row; ties break to the lowest action index.
    pub fn argmax_row(&self, state: StateId) -> ActionId {
        let row = self.row(state);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        ActionId(best)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states)
            .map(|s| self.row(StateId(s)).to_vec())
            .collect()
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, TrainError> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_states == 0 || num_actions == 0 {
            return Err(TrainError::InvalidConfig(
                "q-table must have at least one state and one action".into(),
            ));
        }
        let mut values = Vec::with_capacity(num_states * num_actions);
        for row in &rows {
            if row.len() != num_actions {
                return Err(TrainError::InvalidConfig(format!(
                    "ragged q-table row: expected {num_actions} entries, got {}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(QTable {
            num_states,
            num_actions,
            values,
        })
    }

    /// Writes the matrix as CSV, one row per state, 12 significant digits.
    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut out = String::new();
        for s in 0..self.num_states {
            let row: Vec<String> = self.row(StateId(s)).iter().map(|&v| sig12(v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(path, out)
    }

    pub fn read_csv(path: &Path) -> io::Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut rows = Vec::new();
        for line in io::BufReader::new(file).lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            rows.push(row.map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
        }
        QTable::from_rows(rows).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// When training declares convergence.
///
/// `Paper` stops on the first sub-threshold nonzero update. `Stable` requires
/// `consecutive` such updates in a row. `Off` always runs the full budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ConvergenceMode {
    Paper,
    Stable { consecutive: u32 },
    Off,
}

impl Default for ConvergenceMode {
    fn default() -> Self {
        ConvergenceMode::Stable {
            consecutive: DEFAULT_STABLE_CONSECUTIVE,
        }
    }
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon0: f64,
    pub epsilon_min: f64,
    /// Post-episode decay step; `None` derives (epsilon0 - epsilon_min) / episodes.
    pub epsilon_decay_value: Option<f64>,
    /// Per-step in-episode decay factor; 0 disables the in-episode schedule.
    pub step_decay: f64,
    pub episodes: u32,
    pub max_steps_per_episode: u32,
    pub convergence_threshold: f64,
    pub convergence_mode: ConvergenceMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.1,
            gamma: 0.9,
            epsilon0: 0.9,
            epsilon_min: DEFAULT_EPSILON_MIN,
            epsilon_decay_value: None,
            step_decay: 0.0,
            episodes: DEFAULT_EPISODES,
            max_steps_per_episode: DEFAULT_MAX_STEPS_PER_EPISODE,
            convergence_threshold: DEFAULT_CONVERGENCE_THRESHOLD,
            convergence_mode: ConvergenceMode::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return fail(format!("epsilon0 {} outside [0, 1]", self.epsilon0));
        }
        if !(0.0..=self.epsilon0).contains(&self.epsilon_min) {
            return fail(format!(
                "epsilon_min {} outside [0, epsilon0 = {}]",
                self.epsilon_min, self.epsilon0
            ));
        }
        if let Some(decay) = self.epsilon_decay_value {
            if !(decay > 0.0) {
                return fail(format!("epsilon_decay_value {decay} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.step_decay) {
            return fail(format!("step_decay {} outside [0, 1)", self.step_decay));
        }
        if self.max_steps_per_episode == 0 {
            return fail("max_steps_per_episode must be positive".into());
        }
        if !(self.convergence_threshold > 0.0) {
            return fail(format!(
                "convergence_threshold {} must be positive",
                self.convergence_threshold
            ));
        }
        Ok(())
    }

    /// The post-episode epsilon decay step actually applied.
    pub fn effective_epsilon_decay(&self) -> f64 {
        self.epsilon_decay_value
            .unwrap_or((self.epsilon0 - self.epsilon_min) / f64::from(self.episodes.max(1)))
    }
}

/// One recorded Q-value write: `(old_q, new_q, episode, action)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QUpdate {
    pub old_q: f64,
    pub new_q: f64,
    pub episode: u32,
    pub action: ActionId,
}

/// One completed episode: `(episodic_return, episode, steps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeReward {
    pub episodic_return: f64,
    pub episode: u32,
    pub steps: u32,
}

/// Everything recorded during training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTelemetry {
    /// Every Q-value write, in order.
    pub q_updates: Vec<QUpdate>,
    /// Writes restricted to the configured watch pairs.
    pub tracked_updates: Vec<QUpdate>,
    /// One entry per completed episode.
    pub episode_rewards: Vec<EpisodeReward>,
    /// Exploration probability at the start of each episode.
    pub epsilon_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub q_table: QTable,
    pub telemetry: TrainTelemetry,
    pub episodes_to_convergence: Option<u32>,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("environment fault during training: {0}")]
    Environment(#[from] crate::env::EnvError),
}

/// Epsilon-greedy selection: explore uniformly with probability `epsilon`,
/// otherwise exploit the argmax (ties to the lowest action index).
pub fn select_action<R: Rng>(
    q: &QTable,
    state: StateId,
    epsilon: f64,
    rng: &mut R,
) -> ActionId {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        ActionId(rng.random_range(0..q.num_actions))
    } else {
        q.argmax_row(state)
    }
}

/// The Q-learning update rule:
/// `q + alpha * (reward + gamma * max_next_q - q)`.
pub fn bellman_update(q_sa: f64, reward: f64, max_next_q: f64, alpha: f64, gamma: f64) -> f64 {
    q_sa + alpha * (reward + gamma * max_next_q - q_sa)
}

/// Runs epsilon-greedy Q-learning over `env`, recording full telemetry.
///
/// Convergence fires when a single update magnitude falls below the
/// configured threshold while old and new values differ (subject to the
/// convergence mode); the interrupted episode still completes its
/// bookkeeping. Episodes that never reach a terminal truncate at the step
/// cap, which is not an error.
pub fn train(
    env: &mut Environment,
    config: &TrainConfig,
    watch_pairs: &BTreeSet<(StateId, ActionId)>,
) -> Result<TrainResult, TrainError> {
    config.validate()?;
    let graph = env.graph().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q = QTable::zeros(graph.num_states, graph.num_actions);
    let mut telemetry = TrainTelemetry::default();
    let mut epsilon = config.epsilon0;
    let decay = config.effective_epsilon_decay();
    let mut episodes_to_convergence = None;
    let mut consecutive_small = 0u32;

    'episodes: for episode in 0..config.episodes {
        let mut state = env.reset();
        telemetry.epsilon_trace.push(epsilon);
        let mut episodic_reward = 0.0;
        let mut steps = 0u32;
        let mut step_epsilon = epsilon;
        let mut converged_now = false;

        while !graph.is_terminal(state) && steps < config.max_steps_per_episode {
            let action = select_action(&q, state, step_epsilon, &mut rng);
            let outcome = env.step(action, &mut rng)?;
            episodic_reward += outcome.reward;
            steps += 1;

            let old_q = q.get(state, action);
            let max_next = if outcome.done {
                0.0
            } else {
                q.row_max(outcome.next_state)
            };
            let new_q = bellman_update(old_q, outcome.reward, max_next, config.alpha, config.gamma);
            q.set(state, action, new_q);

            let update = QUpdate {
                old_q,
                new_q,
                episode,
                action,
            };
            if watch_pairs.contains(&(state, action)) {
                telemetry.tracked_updates.push(update);
            }
            telemetry.q_updates.push(update);
            state = outcome.next_state;

            step_epsilon = (step_epsilon * (1.0 - config.step_decay)).max(config.epsilon_min);

            let small_update = (new_q - old_q).abs() < config.convergence_threshold
                && new_q != old_q;
            match config.convergence_mode {
                ConvergenceMode::Paper => converged_now = small_update,
                ConvergenceMode::Stable { consecutive } => {
                    consecutive_small = if small_update {
                        consecutive_small + 1
                    } else {
                        0
                    };
                    converged_now = consecutive_small >= consecutive;
                }
                ConvergenceMode::Off => {}
            }
            if converged_now || outcome.done {
                break;
            }
        }

        telemetry.episode_rewards.push(EpisodeReward {
            episodic_return: episodic_reward,
            episode,
            steps,
        });
        epsilon = (epsilon - decay * 0.5).max(config.epsilon_min);

        if converged_now {
            episodes_to_convergence = Some(episode + 1);
            break 'episodes;
        }
    }

    Ok(TrainResult {
        q_table: q,
        telemetry,
        converged: episodes_to_convergence.is_some(),
        episodes_to_convergence,
    })
}

/// Solves the Bellman optimality system by synchronous sweeps until the
/// maximum entry change drops below `tolerance`.
///
/// Matches environment semantics exactly: unpopulated slots are penalized
/// self-loops, terminal rows stay zero, terminal entry pays the variant's
/// stationary reward.
pub fn value_iteration(
    graph: &WorkflowGraph,
    variant: RewardVariant,
    gamma: f64,
    tolerance: f64,
) -> QTable {
    assert!((0.0..1.0).contains(&gamma), "gamma outside [0, 1)");
    assert!(tolerance > 0.0, "tolerance must be positive");
    let mut q = QTable::zeros(graph.num_states, graph.num_actions);
    let max_sweeps = 100_000;
    for _ in 0..max_sweeps {
        let state_values: Vec<f64> = (0..graph.num_states)
            .map(|s| {
                let s = StateId(s);
                if graph.is_terminal(s) {
                    0.0
                } else {
                    q.row_max(s)
                }
            })
            .collect();
        let mut next = q.clone();
        let mut delta = 0.0f64;
        for s in 0..graph.num_states {
            let state = StateId(s);
            if graph.is_terminal(state) {
                continue;
            }
            for a in 0..graph.num_actions {
                let action = ActionId(a);
                let value = backup(graph, variant, state, action, gamma, &state_values);
                delta = delta.max((value - q.get(state, action)).abs());
                next.set(state, action, value);
            }
        }
        q = next;
        if delta < tolerance {
            break;
        }
    }
    q
}

/// One-step expected value of (state, action) against `state_values`.
fn backup(
    graph: &WorkflowGraph,
    variant: RewardVariant,
    state: StateId,
    action: ActionId,
    gamma: f64,
    state_values: &[f64],
) -> f64 {
    match graph.edges(state, action) {
        Some(edges) => edges
            .iter()
            .map(|edge| {
                let reward = if graph.is_terminal(edge.next_state) {
                    variant.stationary_terminal_reward()
                } else {
                    variant.step_reward(edge.reward)
                };
                edge.probability * (reward + gamma * state_values[edge.next_state.0])
            })
            .sum(),
        None => variant.self_loop_reward() + gamma * state_values[state.0],
    }
}

/// Evaluates a deterministic policy by iterative sweeps of the linear
/// system; terminal states have value zero.
pub fn policy_value(
    graph: &WorkflowGraph,
    variant: RewardVariant,
    policy: &[ActionId],
    gamma: f64,
    tolerance: f64,
) -> Vec<f64> {
    assert!((0.0..1.0).contains(&gamma), "gamma outside [0, 1)");
    assert!(tolerance > 0.0, "tolerance must be positive");
    assert_eq!(policy.len(), graph.num_states, "policy covers every state");
    let mut values = vec![0.0; graph.num_states];
    let max_sweeps = 100_000;
    for _ in 0..max_sweeps {
        let mut next = values.clone();
        let mut delta = 0.0f64;
        for s in 0..graph.num_states {
            let state = StateId(s);
            if graph.is_terminal(state) {
                continue;
            }
            let value = backup(graph, variant, state, policy[s], gamma, &values);
            delta = delta.max((value - values[s]).abs());
            next[s] = value;
        }
        values = next;
        if delta < tolerance {
            break;
        }
    }
    values
}

/// Mean episodic return of greedy (epsilon = 0) rollouts.
pub fn evaluate_policy<R: Rng>(
    env: &mut Environment,
    q: &QTable,
    episodes: u32,
    rng: &mut R,
) -> f64 {
    assert!(episodes >= 1, "at least one evaluation episode");
    let graph = env.graph().clone();
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut state = env.reset();
        let mut steps = 0;
        while !graph.is_terminal(state) && steps < DEFAULT_MAX_STEPS_PER_EPISODE {
            let action = q.argmax_row(state);
            let outcome = env.step(action, rng).expect("non-terminal state steps");
            total += outcome.reward;
            state = outcome.next_state;
            steps += 1;
        }
    }
    total / f64::from(episodes)
}

/// Writes `q_updates.csv`, `episode_rewards.csv`, `epsilon_trace.csv` (and
/// `tracked_updates.csv` when watch pairs were recorded) into `dir`.
pub fn write_telemetry_csvs(telemetry: &TrainTelemetry, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut file = std::fs::File::create(dir.join("q_updates.csv"))?;
    writeln!(file, "old_q,new_q,episode,action")?;
    for u in &telemetry.q_updates {
        writeln!(
            file,
            "{},{},{},{}",
            sig12(u.old_q),
            sig12(u.new_q),
            u.episode,
            u.action
        )?;
    }

    if !telemetry.tracked_updates.is_empty() {
        let mut file = std::fs::File::create(dir.join("tracked_updates.csv"))?;
        writeln!(file, "old_q,new_q,episode,action")?;
        for u in &telemetry.tracked_updates {
            writeln!(
                file,
                "{},{},{},{}",
                sig12(u.old_q),
                sig12(u.new_q),
                u.episode,
                u.action
            )?;
        }
    }

    let mut file = std::fs::File::create(dir.join("episode_rewards.csv"))?;
    writeln!(file, "return,episode,steps")?;
    for r in &telemetry.episode_rewards {
        writeln!(file, "{},{},{}", sig12(r.episodic_return), r.episode, r.steps)?;
    }

    let mut file = std::fs::File::create(dir.join("epsilon_trace.csv"))?;
    writeln!(file, "episode,epsilon")?;
    for (episode, eps) in telemetry.epsilon_trace.iter().enumerate() {
        writeln!(file, "{},{}", episode, sig12(*eps))?;
    }
    Ok(())
}
