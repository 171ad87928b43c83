// Scratch harness for picking training defaults. Not part of the deliverable.

use std::collections::BTreeSet;

use qflow_core::*;

fn main() {
    let graph = default_graph();

    let variants = [
        ("baseline ", RewardVariant::Baseline),
        ("term-bonus", RewardVariant::terminal_bonus()),
        ("time-pen  ", RewardVariant::TimePenalty),
    ];

    for (mode_name, mode) in [
        ("paper", ConvergenceMode::Paper),
        ("stable25", ConvergenceMode::Stable { consecutive: 25 }),
        ("stable50", ConvergenceMode::Stable { consecutive: 50 }),
    ] {
        for threshold in [1e-4, 1e-3] {
            println!("== mode={mode_name} threshold={threshold} alpha=0.4 episodes=800 decay_x=2 ==");
            for (name, variant) in variants {
                let mut eps: Vec<u32> = Vec::new();
                for seed in 0..5u64 {
                    let config = TrainConfig {
                        alpha: 0.4,
                        episodes: 800,
                        epsilon_decay_value: Some((0.9 - 0.05) / 800.0 * 2.0),
                        convergence_threshold: threshold,
                        convergence_mode: mode,
                        seed: 1000 + seed,
                        ..TrainConfig::default()
                    };
                    let mut env = Environment::new(graph.clone(), variant);
                    let result = train(&mut env, &config, &BTreeSet::new()).unwrap();
                    eps.push(result.episodes_to_convergence.unwrap_or(800));
                }
                eps.sort_unstable();
                println!("  {name}: episodes-to-convergence = {eps:?} (median {})", eps[2]);
            }
        }
    }
}
