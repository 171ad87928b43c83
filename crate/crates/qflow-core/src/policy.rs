//! Policy extraction (argmax and stable softmax), accuracy scoring against
//! an ideal action list, and ideal-trajectory simulation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::RewardVariant;
use crate::graph::{ActionId, StateId, WorkflowGraph};
use crate::qlearn::{value_iteration, QTable};

/// Discount factor and tolerance used to derive the shipped ideal list.
pub const IDEAL_GAMMA: f64 = 0.9;
pub const IDEAL_TOLERANCE: f64 = 1e-10;

/// A deterministic policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyVector {
    pub actions: Vec<ActionId>,
}

/// Ground-truth actions and landing states, one per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealActionList {
    pub actions: Vec<ActionId>,
    pub landing: Vec<StateId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IdealDoc {
    actions: Vec<usize>,
    landing: Vec<usize>,
}

impl IdealActionList {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn to_json(&self) -> String {
        let doc = IdealDoc {
            actions: self.actions.iter().map(|a| a.0).collect(),
            landing: self.landing.iter().map(|s| s.0).collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("ideal list serializes");
        text.push('\n');
        text
    }

    pub fn from_json(source: &str) -> Result<Self, PolicyError> {
        let doc: IdealDoc =
            serde_json::from_str(source).map_err(|e| PolicyError::Parse(e.to_string()))?;
        if doc.actions.len() != doc.landing.len() {
            return Err(PolicyError::LengthMismatch {
                left: doc.actions.len(),
                right: doc.landing.len(),
            });
        }
        Ok(IdealActionList {
            actions: doc.actions.into_iter().map(ActionId).collect(),
            landing: doc.landing.into_iter().map(StateId).collect(),
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("input contains a non-finite entry")]
    NonFiniteInput,
    #[error("input is empty")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(
        "landing mismatch at state {state}: landing state {landing} is not reachable \
         under action {action}"
    )]
    LandingMismatch {
        state: StateId,
        action: ActionId,
        landing: StateId,
    },
    #[error("ideal list parse error: {0}")]
    Parse(String),
}

/// Per-state argmax of the Q-table; ties break to the lowest action index.
pub fn greedy_policy(q: &QTable) -> PolicyVector {
    PolicyVector {
        actions: (0..q.num_states()).map(|s| q.argmax_row(StateId(s))).collect(),
    }
}

/// Numerically stable softmax: `exp(x - max(x)) / sum(exp(x - max(x)))`.
pub fn stable_softmax(x: &[f64]) -> Result<Vec<f64>, PolicyError> {
    if x.is_empty() {
        return Err(PolicyError::EmptyInput);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PolicyError::NonFiniteInput);
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// How `softmax_policy` turns per-state probabilities into actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftmaxMode {
    /// Pick the most probable action (identical to the greedy policy).
    ArgmaxOfProbs,
    /// Draw categorically from the distribution.
    Sample,
}

/// Per-state softmax over Q-values, reduced to a deterministic policy by
/// `mode`. Sampling uses inverse-CDF over the probability vector.
pub fn softmax_policy<R: Rng>(
    q: &QTable,
    mode: SoftmaxMode,
    rng: &mut R,
) -> Result<PolicyVector, PolicyError> {
    let mut actions = Vec::with_capacity(q.num_states());
    for s in 0..q.num_states() {
        let probs = stable_softmax(q.row(StateId(s)))?;
        let action = match mode {
            SoftmaxMode::ArgmaxOfProbs => {
                let mut best = 0;
                for (i, &p) in probs.iter().enumerate().skip(1) {
                    if p > probs[best] {
                        best = i;
                    }
                }
                ActionId(best)
            }
            SoftmaxMode::Sample => {
                let draw: f64 = rng.random();
                let mut cumulative = 0.0;
                let mut chosen = probs.len() - 1;
                for (i, &p) in probs.iter().enumerate() {
                    cumulative += p;
                    if draw < cumulative {
                        chosen = i;
                        break;
                    }
                }
                ActionId(chosen)
            }
        };
        actions.push(action);
    }
    Ok(PolicyVector { actions })
}

/// Fraction of positions where both arrays agree.
pub fn get_acc(ideal: &[ActionId], predicted: &[ActionId]) -> Result<f64, PolicyError> {
    if ideal.len() != predicted.len() {
        return Err(PolicyError::LengthMismatch {
            left: ideal.len(),
            right: predicted.len(),
        });
    }
    if ideal.is_empty() {
        return Err(PolicyError::EmptyInput);
    }
    let matches = ideal
        .iter()
        .zip(predicted.iter())
        .filter(|(a, b)| a == b)
        .count();
    Ok(matches as f64 / ideal.len() as f64)
}

/// Report formatting for accuracies: exactly five decimal places.
pub fn format_accuracy(accuracy: f64) -> String {
    format!("{accuracy:.5}")
}

/// Derives an ideal action list from the Bellman-optimal Q-table of the
/// baseline variant: actions are the greedy policy, landing states are the
/// highest-probability successors (ties to the lowest state index; terminal
/// and unpopulated slots land on the state itself).
pub fn derive_ideal_list(graph: &WorkflowGraph) -> IdealActionList {
    let q = value_iteration(graph, RewardVariant::Baseline, IDEAL_GAMMA, IDEAL_TOLERANCE);
    let actions = greedy_policy(&q).actions;
    let landing = actions
        .iter()
        .enumerate()
        .map(|(s, &a)| landing_state(graph, StateId(s), a))
        .collect();
    IdealActionList { actions, landing }
}

/// Highest-probability successor of (state, action); ties break to the
/// lowest state index. Self when the slot is unpopulated or terminal.
pub fn landing_state(graph: &WorkflowGraph, state: StateId, action: ActionId) -> StateId {
    match graph.edges(state, action) {
        Some(edges) => {
            let mut best = edges[0].next_state;
            let mut best_p = edges[0].probability;
            for edge in &edges[1..] {
                if edge.probability > best_p
                    || (edge.probability == best_p && edge.next_state < best)
                {
                    best = edge.next_state;
                    best_p = edge.probability;
                }
            }
            best
        }
        None => state,
    }
}

/// Walks the ideal list's landing states from `start`, emitting one
/// (state, action) pair per visited state, the final state included. Stops
/// on terminal entry or after `max_hops` moves, whichever comes first.
///
/// Every hop checks that the landing state is actually reachable with
/// positive probability under the ideal action.
pub fn simulate_trajectory(
    graph: &WorkflowGraph,
    ideal: &IdealActionList,
    start: StateId,
    max_hops: usize,
) -> Result<Vec<(StateId, ActionId)>, PolicyError> {
    if ideal.actions.len() != graph.num_states {
        return Err(PolicyError::LengthMismatch {
            left: ideal.actions.len(),
            right: graph.num_states,
        });
    }
    let mut path = Vec::new();
    let mut state = start;
    let mut hops = 0;
    while !graph.is_terminal(state) && hops < max_hops {
        let action = ideal.actions[state.0];
        let landing = ideal.landing[state.0];
        let reachable = match graph.edges(state, action) {
            Some(edges) => edges
                .iter()
                .any(|e| e.next_state == landing && e.probability > 0.0),
            None => landing == state,
        };
        if !reachable {
            return Err(PolicyError::LandingMismatch {
                state,
                action,
                landing,
            });
        }
        path.push((state, action));
        state = landing;
        hops += 1;
    }
    path.push((state, ideal.actions[state.0]));
    Ok(path)
}
