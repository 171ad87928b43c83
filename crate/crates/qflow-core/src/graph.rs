//! The workflow graph: a data-driven MDP over forensic investigation states.
//!
//! A [`WorkflowGraph`] holds per-(state, action) stochastic transition lists,
//! a terminal set, and human-readable labels. The default graph models a
//! 67-state memory-forensics investigation in thirteen phases (tool
//! acquisition through string search), each with a milestone fast path and a
//! debug/recovery lane.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Tolerance for per-(state, action) probability sums.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;
/// Step reward carried by ordinary edges in the default graph.
pub const DEFAULT_STEP_REWARD: f64 = -0.04;
/// Reward carried by the edge entering the terminal state in the default graph.
pub const DEFAULT_TERMINAL_REWARD: f64 = 2.0;
/// Number of states in the default graph.
pub const DEFAULT_NUM_STATES: usize = 67;
/// Number of actions in the default graph.
pub const DEFAULT_NUM_ACTIONS: usize = 10;
/// The terminal "investigation complete" state of the default graph.
pub const DEFAULT_TERMINAL_STATE: StateId = StateId(66);

/// Index of a workflow state. State 0 is always the episode start.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct StateId(pub usize);

/// Index of an action slot in the global discrete action space.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One stochastic outcome of taking an action in a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub probability: f64,
    pub next_state: StateId,
    pub reward: f64,
    pub done: bool,
}

impl Transition {
    pub fn new(probability: f64, next_state: StateId, reward: f64, done: bool) -> Self {
        Self {
            probability,
            next_state,
            reward,
            done,
        }
    }
}

/// An immutable MDP: states, action slots, stochastic transitions, terminals.
///
/// Only explicitly populated (state, action) pairs appear in `transitions`;
/// environments treat unpopulated in-range slots as penalized self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowGraph {
    pub num_states: usize,
    pub num_actions: usize,
    pub transitions: BTreeMap<(StateId, ActionId), Vec<Transition>>,
    pub terminal_states: BTreeSet<StateId>,
    pub milestones: BTreeMap<StateId, String>,
    pub state_labels: BTreeMap<StateId, String>,
}

impl WorkflowGraph {
    pub fn is_terminal(&self, state: StateId) -> bool {
        self.terminal_states.contains(&state)
    }

    pub fn edges(&self, state: StateId, action: ActionId) -> Option<&[Transition]> {
        self.transitions
            .get(&(state, action))
            .map(|v| v.as_slice())
    }

    /// Number of explicitly populated (state, action-slot) pairs.
    pub fn populated_pairs(&self) -> usize {
        self.transitions.len()
    }

    /// Action slots populated for `state`, in ascending order.
    pub fn actions_of(&self, state: StateId) -> Vec<ActionId> {
        self.transitions
            .range((state, ActionId(0))..=(state, ActionId(usize::MAX)))
            .map(|((_, a), _)| *a)
            .collect()
    }

    /// SHA-256 of the canonical document serialization, hex-encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Serializes to the graph document format (pretty JSON, LF, trailing newline).
    pub fn to_json(&self) -> String {
        let doc = GraphDoc::from_graph(self);
        let mut text = serde_json::to_string_pretty(&doc).expect("graph document serializes");
        text.push('\n');
        text
    }
}

/// Which graph invariant a violation breaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    ProbabilitySum,
    DanglingState,
    UnreachableTerminal,
    IndexOutOfRange,
    TerminalHasEdges,
    DoneFlagMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ViolationKind::ProbabilitySum => "probability-sum",
            ViolationKind::DanglingState => "dangling-state",
            ViolationKind::UnreachableTerminal => "unreachable-terminal",
            ViolationKind::IndexOutOfRange => "index-out-of-range",
            ViolationKind::TerminalHasEdges => "terminal-has-edges",
            ViolationKind::DoneFlagMismatch => "done-flag-mismatch",
        };
        f.write_str(name)
    }
}

/// A single validation finding, pinpointing a state (and action, where
/// applicable).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphViolation {
    pub state: StateId,
    pub action: Option<ActionId>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.action {
            Some(a) => write!(
                f,
                "{} at (state {}, action {}): {}",
                self.kind, self.state, a, self.detail
            ),
            None => write!(f, "{} at state {}: {}", self.kind, self.state, self.detail),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid graph: {} violation(s), first: {}", violations.len(), violations[0])]
    Invalid { violations: Vec<GraphViolation> },
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    p: f64,
    next: usize,
    reward: f64,
    done: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntryDoc {
    state: usize,
    action: usize,
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    num_states: usize,
    num_actions: usize,
    terminal_states: Vec<usize>,
    milestones: BTreeMap<usize, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    state_labels: BTreeMap<usize, String>,
    transitions: Vec<TransitionEntryDoc>,
}

impl GraphDoc {
    fn from_graph(graph: &WorkflowGraph) -> Self {
        GraphDoc {
            num_states: graph.num_states,
            num_actions: graph.num_actions,
            terminal_states: graph.terminal_states.iter().map(|s| s.0).collect(),
            milestones: graph
                .milestones
                .iter()
                .map(|(s, label)| (s.0, label.clone()))
                .collect(),
            state_labels: graph
                .state_labels
                .iter()
                .map(|(s, label)| (s.0, label.clone()))
                .collect(),
            transitions: graph
                .transitions
                .iter()
                .map(|((s, a), edges)| TransitionEntryDoc {
                    state: s.0,
                    action: a.0,
                    edges: edges
                        .iter()
                        .map(|t| EdgeDoc {
                            p: t.probability,
                            next: t.next_state.0,
                            reward: t.reward,
                            done: t.done,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn into_graph(self) -> Result<WorkflowGraph, GraphError> {
        let mut transitions = BTreeMap::new();
        for entry in self.transitions {
            let key = (StateId(entry.state), ActionId(entry.action));
            let edges: Vec<Transition> = entry
                .edges
                .into_iter()
                .map(|e| Transition::new(e.p, StateId(e.next), e.reward, e.done))
                .collect();
            if transitions.insert(key, edges).is_some() {
                return Err(GraphError::Parse {
                    line: 0,
                    message: format!(
                        "duplicate transition entry for (state {}, action {})",
                        entry.state, entry.action
                    ),
                });
            }
        }
        Ok(WorkflowGraph {
            num_states: self.num_states,
            num_actions: self.num_actions,
            transitions,
            terminal_states: self.terminal_states.into_iter().map(StateId).collect(),
            milestones: self
                .milestones
                .into_iter()
                .map(|(s, label)| (StateId(s), label))
                .collect(),
            state_labels: self
                .state_labels
                .into_iter()
                .map(|(s, label)| (StateId(s), label))
                .collect(),
        })
    }
}

/// Parses and validates a graph document. Parsing is strict: unknown fields
/// and duplicate (state, action) entries are rejected.
pub fn load_graph(source: &str) -> Result<WorkflowGraph, GraphError> {
    let doc: GraphDoc = serde_json::from_str(source).map_err(|e| GraphError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let graph = doc.into_graph()?;
    let violations = validate(&graph);
    if violations.is_empty() {
        Ok(graph)
    } else {
        Err(GraphError::Invalid { violations })
    }
}

/// Checks every graph invariant and returns the findings, sorted by
/// (state, action, kind). An empty list means the graph is valid.
pub fn validate(graph: &WorkflowGraph) -> Vec<GraphViolation> {
    let mut violations = Vec::new();

    if graph.num_states == 0 || graph.num_actions == 0 {
        violations.push(GraphViolation {
            state: StateId(0),
            action: None,
            kind: ViolationKind::IndexOutOfRange,
            detail: "num_states and num_actions must be positive".to_string(),
        });
        return violations;
    }

    for state in &graph.terminal_states {
        if state.0 >= graph.num_states {
            violations.push(GraphViolation {
                state: *state,
                action: None,
                kind: ViolationKind::IndexOutOfRange,
                detail: format!(
                    "terminal state {} outside [0, {})",
                    state, graph.num_states
                ),
            });
        }
    }

    for ((state, action), edges) in &graph.transitions {
        if state.0 >= graph.num_states {
            violations.push(GraphViolation {
                state: *state,
                action: Some(*action),
                kind: ViolationKind::IndexOutOfRange,
                detail: format!("state {} outside [0, {})", state, graph.num_states),
            });
        }
        if action.0 >= graph.num_actions {
            violations.push(GraphViolation {
                state: *state,
                action: Some(*action),
                kind: ViolationKind::IndexOutOfRange,
                detail: format!("action {} outside [0, {})", action, graph.num_actions),
            });
        }
        if graph.is_terminal(*state) {
            violations.push(GraphViolation {
                state: *state,
                action: Some(*action),
                kind: ViolationKind::TerminalHasEdges,
                detail: format!("terminal state {state} must not have outgoing edges"),
            });
        }

        let mut sum = 0.0;
        for (i, edge) in edges.iter().enumerate() {
            sum += edge.probability;
            if !(0.0..=1.0).contains(&edge.probability) || !edge.probability.is_finite() {
                violations.push(GraphViolation {
                    state: *state,
                    action: Some(*action),
                    kind: ViolationKind::ProbabilitySum,
                    detail: format!(
                        "edge {} probability {} outside [0, 1]",
                        i, edge.probability
                    ),
                });
            }
            if edge.next_state.0 >= graph.num_states {
                violations.push(GraphViolation {
                    state: *state,
                    action: Some(*action),
                    kind: ViolationKind::IndexOutOfRange,
                    detail: format!(
                        "edge {} next state {} outside [0, {})",
                        i, edge.next_state, graph.num_states
                    ),
                });
            } else if edge.done && !graph.is_terminal(edge.next_state) {
                violations.push(GraphViolation {
                    state: *state,
                    action: Some(*action),
                    kind: ViolationKind::DoneFlagMismatch,
                    detail: format!(
                        "edge {} marked done but next state {} is not terminal",
                        i, edge.next_state
                    ),
                });
            }
        }
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            violations.push(GraphViolation {
                state: *state,
                action: Some(*action),
                kind: ViolationKind::ProbabilitySum,
                detail: format!("probabilities sum to {sum}, expected 1"),
            });
        }
    }

    // Non-terminal states need at least one populated action slot.
    for index in 0..graph.num_states {
        let state = StateId(index);
        if !graph.is_terminal(state) && graph.actions_of(state).is_empty() {
            violations.push(GraphViolation {
                state,
                action: None,
                kind: ViolationKind::DanglingState,
                detail: format!("non-terminal state {state} has no populated actions"),
            });
        }
    }

    // Some terminal state must be reachable from the start via
    // positive-probability edges.
    if let Some(violation) = check_terminal_reachability(graph) {
        violations.push(violation);
    }

    violations.sort_by(|a, b| {
        (a.state, a.action, a.kind, &a.detail).cmp(&(b.state, b.action, b.kind, &b.detail))
    });
    violations
}

fn check_terminal_reachability(graph: &WorkflowGraph) -> Option<GraphViolation> {
    if graph.terminal_states.is_empty() {
        return Some(GraphViolation {
            state: StateId(0),
            action: None,
            kind: ViolationKind::UnreachableTerminal,
            detail: "graph declares no terminal states".to_string(),
        });
    }

    let mut seen = vec![false; graph.num_states];
    let mut queue = VecDeque::new();
    seen[0] = true;
    queue.push_back(StateId(0));
    while let Some(state) = queue.pop_front() {
        if graph.is_terminal(state) {
            return None;
        }
        for action in graph.actions_of(state) {
            for edge in graph.edges(state, action).unwrap_or(&[]) {
                let next = edge.next_state;
                if edge.probability > 0.0 && next.0 < graph.num_states && !seen[next.0] {
                    seen[next.0] = true;
                    queue.push_back(next);
                }
            }
        }
    }

    let target = *graph.terminal_states.iter().next().expect("nonempty");
    Some(GraphViolation {
        state: target,
        action: None,
        kind: ViolationKind::UnreachableTerminal,
        detail: format!("no terminal state is reachable from state 0 (nearest declared: {target})"),
    })
}

// ---------------------------------------------------------------------------
// Default graph
// ---------------------------------------------------------------------------

/// Investigation phases, in workflow order. Each occupies five states
/// starting at `5 * index`; completing it lands on the next phase's start.
const PHASES: [&str; 13] = [
    "WinPmem installation",
    "live memory acquisition",
    "operating-system identification",
    "process enumeration",
    "AWK feature extraction",
    "DLL listing",
    "handle inspection",
    "network artefact collection",
    "registry hive discovery",
    "registry key listing",
    "process dump extraction",
    "hash verdict lookup",
    "memory string search",
];

/// Phases whose recovery lane carries an extra full-restart action. These are
/// the steps that corrupt their own inputs on failure, so restarting the
/// phase is a distinct move from resuming it.
const RESTART_PHASES: [usize; 3] = [1, 10, 11];

/// Builds the shipped 67-state, 10-action investigation graph.
///
/// Layout per phase `p` with base state `b = 5p`:
/// `b` runs the phase's main command (0.8 advance to `b+5`, 0.2 drop into the
/// debug lane at `b+1`), can step back to the previous milestone, or enter
/// diagnostics deliberately. The lane `b+1..b+4` triages, fixes (another
/// 0.8/0.2 branch), validates, and resumes at `b+5`. State 65 closes the
/// investigation into terminal 66 with the completion reward.
pub fn default_graph() -> Arc<WorkflowGraph> {
    let mut transitions: BTreeMap<(StateId, ActionId), Vec<Transition>> = BTreeMap::new();
    let mut put = |state: usize, action: usize, edges: Vec<(f64, usize, f64, bool)>| {
        let edges = edges
            .into_iter()
            .map(|(p, next, reward, done)| Transition::new(p, StateId(next), reward, done))
            .collect();
        transitions.insert((StateId(state), ActionId(action)), edges);
    };

    let step = DEFAULT_STEP_REWARD;
    for (phase, _) in PHASES.iter().enumerate() {
        let b = 5 * phase;
        let next_milestone = b + 5;
        let prev_milestone = b.saturating_sub(5);

        // Milestone state: run the phase, fall back, or enter diagnostics.
        put(b, 0, vec![(0.8, next_milestone, step, false), (0.2, b + 1, step, false)]);
        put(b, 1, vec![(1.0, prev_milestone, step, false)]);
        put(b, 2, vec![(1.0, b + 1, step, false)]);

        // Debug lane.
        put(b + 1, 0, vec![(1.0, b + 2, step, false)]);
        put(b + 1, 1, vec![(1.0, b, step, false)]);
        put(b + 2, 0, vec![(0.8, b + 3, step, false), (0.2, b + 1, step, false)]);
        put(b + 3, 0, vec![(1.0, b + 4, step, false)]);
        put(b + 4, 0, vec![(1.0, next_milestone, step, false)]);
        if RESTART_PHASES.contains(&phase) {
            put(b + 4, 1, vec![(1.0, b, step, false)]);
        }
    }

    // Wrap-up state: close out, or revisit the string search.
    put(65, 0, vec![(1.0, 66, DEFAULT_TERMINAL_REWARD, true)]);
    put(65, 1, vec![(1.0, 60, step, false)]);

    let mut milestones = BTreeMap::new();
    milestones.insert(StateId(5), "WinPmem installed".to_string());
    milestones.insert(StateId(10), "memory image acquired".to_string());
    milestones.insert(StateId(15), "operating system identified".to_string());
    milestones.insert(StateId(66), "investigation complete".to_string());

    let mut state_labels = BTreeMap::new();
    for (phase, name) in PHASES.iter().enumerate() {
        let b = 5 * phase;
        let entry = if phase == 0 {
            format!("investigation start: begin {name}")
        } else {
            format!("{} done: begin {}", PHASES[phase - 1], name)
        };
        state_labels.insert(StateId(b), entry);
        state_labels.insert(StateId(b + 1), format!("{name} failed: triage error output"));
        state_labels.insert(StateId(b + 2), format!("{name}: apply corrective fix"));
        state_labels.insert(StateId(b + 3), format!("{name}: validate the fix"));
        state_labels.insert(StateId(b + 4), format!("{name}: resume after recovery"));
    }
    state_labels.insert(
        StateId(65),
        "memory string search done: assemble final findings".to_string(),
    );
    state_labels.insert(StateId(66), "investigation complete".to_string());

    let graph = WorkflowGraph {
        num_states: DEFAULT_NUM_STATES,
        num_actions: DEFAULT_NUM_ACTIONS,
        transitions,
        terminal_states: BTreeSet::from([DEFAULT_TERMINAL_STATE]),
        milestones,
        state_labels,
    };
    debug_assert!(validate(&graph).is_empty());
    Arc::new(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state_doc() -> &'static str {
        r#"{
            "num_states": 2,
            "num_actions": 1,
            "terminal_states": [1],
            "milestones": {"1": "end"},
            "transitions": [
                {"state": 0, "action": 0, "edges": [{"p": 1.0, "next": 1, "reward": 0.0, "done": true}]}
            ]
        }"#
    }

    #[test]
    fn loads_minimal_two_state_graph() {
        let graph = load_graph(two_state_doc()).unwrap();
        assert_eq!(graph.num_states, 2);
        assert_eq!(graph.populated_pairs(), 1);
        assert!(graph.is_terminal(StateId(1)));
        assert!(validate(&graph).is_empty());
    }

    #[test]
    fn stochastic_edge_probabilities_are_preserved() {
        let doc = r#"{
            "num_states": 67,
            "num_actions": 10,
            "terminal_states": [10],
            "milestones": {},
            "transitions": [
                {"state": 0, "action": 0, "edges": [{"p": 1.0, "next": 5, "reward": -0.04, "done": false}]},
                {"state": 5, "action": 2, "edges": [
                    {"p": 0.8, "next": 10, "reward": -0.04, "done": true},
                    {"p": 0.2, "next": 5, "reward": -0.04, "done": false}
                ]}
            ]
        }"#;
        // States other than 0 and 5 are dangling; parse the document pieces
        // without full-graph validation.
        let err = load_graph(doc).unwrap_err();
        match err {
            GraphError::Invalid { violations } => {
                assert!(violations
                    .iter()
                    .all(|v| v.kind == ViolationKind::DanglingState));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn probability_sum_violation_is_reported_at_the_offending_pair() {
        let doc = r#"{
            "num_states": 4,
            "num_actions": 2,
            "terminal_states": [3],
            "milestones": {},
            "transitions": [
                {"state": 0, "action": 0, "edges": [{"p": 1.0, "next": 3, "reward": 0.0, "done": true}]},
                {"state": 1, "action": 0, "edges": [{"p": 1.0, "next": 3, "reward": 0.0, "done": true}]},
                {"state": 2, "action": 0, "edges": [{"p": 1.0, "next": 3, "reward": 0.0, "done": true}]},
                {"state": 3, "action": 1, "edges": [{"p": 0.6, "next": 1, "reward": 0.0, "done": false},
                                                     {"p": 0.3, "next": 2, "reward": 0.0, "done": false}]}
            ]
        }"#;
        let err = load_graph(doc).unwrap_err();
        match err {
            GraphError::Invalid { violations } => {
                let sum_violation = violations
                    .iter()
                    .find(|v| v.kind == ViolationKind::ProbabilitySum)
                    .expect("probability-sum violation present");
                assert_eq!(sum_violation.state, StateId(3));
                assert_eq!(sum_violation.action, Some(ActionId(1)));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn malformed_document_reports_parse_error() {
        let err = load_graph("{ not json").unwrap_err();
        assert!(matches!(err, GraphError::Parse { .. }));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let doc = r#"{
            "num_states": 2, "num_actions": 1, "terminal_states": [1],
            "milestones": {}, "transitions": [], "extra": 1
        }"#;
        let err = load_graph(doc).unwrap_err();
        assert!(matches!(err, GraphError::Parse { .. }));
    }

    #[test]
    fn terminal_with_edges_is_flagged() {
        let mut graph = load_graph(two_state_doc()).unwrap();
        graph.transitions.insert(
            (StateId(1), ActionId(0)),
            vec![Transition::new(1.0, StateId(0), 0.0, false)],
        );
        let violations = validate(&graph);
        assert!(violations
            .iter()
            .any(|v| v.kind == ViolationKind::TerminalHasEdges && v.state == StateId(1)));
    }

    #[test]
    fn unreachable_terminal_is_flagged() {
        let doc = r#"{
            "num_states": 3,
            "num_actions": 1,
            "terminal_states": [2],
            "milestones": {},
            "transitions": [
                {"state": 0, "action": 0, "edges": [{"p": 1.0, "next": 0, "reward": -0.04, "done": false}]},
                {"state": 1, "action": 0, "edges": [{"p": 1.0, "next": 2, "reward": 0.0, "done": true}]}
            ]
        }"#;
        let err = load_graph(doc).unwrap_err();
        match err {
            GraphError::Invalid { violations } => {
                assert!(violations
                    .iter()
                    .any(|v| v.kind == ViolationKind::UnreachableTerminal));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn done_flag_into_nonterminal_is_flagged() {
        let mut graph = load_graph(two_state_doc()).unwrap();
        graph
            .transitions
            .get_mut(&(StateId(0), ActionId(0)))
            .unwrap()[0] = Transition::new(1.0, StateId(0), 0.0, true);
        let violations = validate(&graph);
        assert!(violations
            .iter()
            .any(|v| v.kind == ViolationKind::DoneFlagMismatch));
    }

    #[test]
    fn validate_is_pure() {
        let mut graph = (*default_graph()).clone();
        graph
            .transitions
            .insert((StateId(66), ActionId(0)), vec![Transition::new(0.5, StateId(0), 0.0, false)]);
        let first = validate(&graph);
        let second = validate(&graph);
        assert!(!first.is_empty());
        assert_eq!(first, second);
    }

    #[test]
    fn round_trip_preserves_the_graph() {
        let graph = default_graph();
        let reparsed = load_graph(&graph.to_json()).unwrap();
        assert_eq!(*graph, reparsed);
    }

    #[test]
    fn default_graph_counts_and_validity() {
        let graph = default_graph();
        assert_eq!(graph.num_states, 67);
        assert_eq!(graph.num_actions, 10);
        assert_eq!(graph.populated_pairs(), 109);
        assert!(validate(&graph).is_empty());
        assert_eq!(graph.milestones.len(), 4);
        assert_eq!(graph.state_labels.len(), 67);
    }

    #[test]
    fn default_graph_probability_sums_are_exact() {
        let graph = default_graph();
        for edges in graph.transitions.values() {
            let sum: f64 = edges.iter().map(|e| e.probability).sum();
            assert!((sum - 1.0).abs() <= PROBABILITY_TOLERANCE);
        }
    }

    #[test]
    fn content_hash_is_stable_per_content() {
        let a = default_graph();
        let b = default_graph();
        assert_eq!(a.content_hash(), b.content_hash());
        let mut modified = (*a).clone();
        modified.milestones.insert(StateId(5), "changed".into());
        assert_ne!(a.content_hash(), modified.content_hash());
    }
}
