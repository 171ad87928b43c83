//! Data-driven MDP engine for post-incident forensic-workflow automation.
//!
//! A [`WorkflowGraph`] encodes an investigation as a 67-state MDP; the
//! [`Environment`] steps it under one of three reward variants; [`train`]
//! runs tabular Q-learning with epsilon-greedy exploration; [`run_sweep`]
//! grids learning rates across all variants; policy extraction, accuracy
//! scoring, command-plan rendering, and report emission turn the learned
//! tables into executable investigation plans and comparison figures.

pub mod command;
pub mod env;
pub mod fmt;
pub mod graph;
pub mod policy;
pub mod qlearn;
pub mod report;
pub mod sweep;

pub use command::{
    create_command, default_menu, execute_plan, render_plan, CommandContext, CommandError,
    CommandMenu, CommandPlan, CommandRunner, DryHashClient, DryRunner, ExecuteOptions,
    ExecutionRecord, HashLookup, HashLookupClient, HashVerdict, PlanProvenance, PlanStep,
    RenderedCommand, RunOutcome, SENTINEL_ACTION_OUT_OF_RANGE, SENTINEL_TRANSITIONAL_STATE,
};
pub use env::{Environment, EnvError, RewardVariant, StepOutcome};
pub use graph::{
    default_graph, load_graph, validate, ActionId, GraphError, GraphViolation, StateId,
    Transition, ViolationKind, WorkflowGraph, DEFAULT_NUM_ACTIONS, DEFAULT_NUM_STATES,
};
pub use policy::{
    derive_ideal_list, format_accuracy, get_acc, greedy_policy, simulate_trajectory,
    softmax_policy, stable_softmax, IdealActionList, PolicyError, PolicyVector, SoftmaxMode,
};
pub use qlearn::{
    bellman_update, evaluate_policy, policy_value, select_action, train, value_iteration,
    ConvergenceMode, EpisodeReward, QTable, QUpdate, TrainConfig, TrainError, TrainResult,
    TrainTelemetry,
};
pub use report::{
    compare_totals, convergence_plot_data, emit_report, fixture_timings, load_timings,
    serialize_timings, PlotKind, PlotSeries, ReportError, ReportFormat, TimingDataset,
    TimingRecord, TotalsReport,
};
pub use sweep::{
    convergence_table, derive_cell_seed, reward_dynamics, run_sweep, write_sweep_dir,
    ConvergenceRow, SweepCell, SweepConfig, SweepError, SweepResult,
};
