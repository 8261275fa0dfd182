use crate::bandit::{self, SweepSpec};
use crate::error::HarnessError;
use crate::gridworld::GridWorld;
use crate::mdp::{value_iteration, TabularMdp, ThreeStateMdp};
use crate::parallel::map_trials;
use crate::record::{Metric, RunRecord};
use crate::seeding::trial_rng;
use crate::stats::Summary;
use crate::tabular_rl::{run_agent, AgentConfig, AgentRun, Table};

use super::config::{ConvergenceParams, ExperimentConfig, ExperimentKind, GridworldParams};
use super::csv::write_csv;

type Result<T> = std::result::Result<T, HarnessError>;

/// Runs the configured experiment, writes the CSV when an output path is
/// set, and returns the aggregated rows.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let records = match &config.kind {
        ExperimentKind::Bandit { config: bc, sweep } => {
            let bc = bandit::BanditConfig {
                master_seed: config.master_seed,
                ..bc.clone()
            };
            match sweep {
                Some(spec) => run_bandit_sweep(&bc, spec, config)?,
                None => {
                    let label = format!("visitors={};ads={}", bc.num_visitors, bc.num_ads);
                    if config.progress {
                        eprintln!("bandit {label}: {} trials", bc.num_trials);
                    }
                    let reports = bandit::run_setting(&bc, &label, config.workers)?;
                    bandit::summarize_setting(&label, &reports)
                }
            }
        }
        ExperimentKind::Gridworld(params) => {
            run_gridworld(params, config.master_seed, config.workers, config.progress)?
        }
        ExperimentKind::Convergence(params) => {
            run_convergence(params, config.master_seed, config.workers, config.progress)?
        }
    };
    if let Some(path) = &config.output_path {
        write_csv(&records, path)?;
        if config.progress {
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
    }
    Ok(records)
}

fn run_bandit_sweep(
    base: &bandit::BanditConfig,
    spec: &SweepSpec,
    config: &ExperimentConfig,
) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for &value in &spec.values {
        let (cfg, label) = spec.apply(base, value)?;
        if config.progress {
            eprintln!("bandit {label}: {} trials", cfg.num_trials);
        }
        let reports = bandit::run_setting(&cfg, &label, config.workers)?;
        records.extend(bandit::summarize_setting(&label, &reports));
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn run_trials<M: TabularMdp + Sync>(
    mdp: &M,
    agent: &AgentConfig,
    experiment: &str,
    setting: &str,
    trials: usize,
    probe_interval: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<AgentRun>> {
    let key = format!("{setting}/{}", agent.label());
    let runs = map_trials(trials, workers, |t| {
        let mut rng = trial_rng(master_seed, experiment, &key, t as u64);
        run_agent(mdp, agent, &mut rng, probe_interval)
    })?;
    Ok(runs
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?)
}

/// Learning curves: mean reward per step and start-state value estimate at
/// every probe step, averaged over independent runs.
pub fn run_gridworld(
    params: &GridworldParams,
    master_seed: u64,
    workers: usize,
    progress: bool,
) -> Result<Vec<RunRecord>> {
    let grid = GridWorld::new(params.side)?;
    let setting = format!("n={}", params.side);
    let mut records = Vec::new();
    for agent in &params.agents {
        if progress {
            eprintln!(
                "gridworld {setting} {}: {} runs x {} steps",
                agent.label(),
                params.trials,
                agent.total_steps
            );
        }
        let runs = run_trials(
            &grid,
            agent,
            "gridworld",
            &setting,
            params.trials,
            params.probe_interval,
            master_seed,
            workers,
        )?;
        let probes = runs.first().map_or(0, |r| r.metrics.len());
        for p in 0..probes {
            let step = runs[0].metrics[p].step;
            let rewards: Vec<f64> = runs.iter().map(|r| r.metrics[p].reward).collect();
            let values: Vec<f64> = runs.iter().map(|r| r.metrics[p].v_start_estimate).collect();
            for (metric, data) in [(Metric::MeanReward, rewards), (Metric::VStart, values)] {
                let s = Summary::of(&data);
                records.push(RunRecord {
                    experiment: "gridworld".into(),
                    setting: format!("{setting};step={step}"),
                    algorithm: agent.label(),
                    trial_count: runs.len(),
                    metric,
                    value: s.mean,
                    stderr: s.stderr,
                });
            }
        }
    }
    Ok(records)
}

/// Final `max(|Q_A - Q*|_inf, |Q_B - Q*|_inf)` per run for one MDP.
pub fn final_errors<M: TabularMdp + Sync>(
    mdp: &M,
    agent: &AgentConfig,
    setting: &str,
    trials: usize,
    oracle_tolerance: f64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let q_star = value_iteration(mdp, agent.gamma, oracle_tolerance)
        .ok_or_else(|| HarnessError::Usage(format!("{setting}: no model for value iteration")))?;
    let interval = agent.total_steps.max(1);
    let runs = run_trials(
        mdp,
        agent,
        "convergence",
        setting,
        trials,
        interval,
        master_seed,
        workers,
    )?;
    Ok(runs
        .iter()
        .map(|r| {
            let err_a = r.pair.sup_error(Table::A, &q_star);
            if agent.algorithm.is_twin() {
                err_a.max(r.pair.sup_error(Table::B, &q_star))
            } else {
                err_a
            }
        })
        .collect())
}

pub fn run_convergence(
    params: &ConvergenceParams,
    master_seed: u64,
    workers: usize,
    progress: bool,
) -> Result<Vec<RunRecord>> {
    let three = ThreeStateMdp::default();
    let grid = GridWorld::new(params.grid_side)?;
    let grid_label = format!("mdp=grid{}", params.grid_side);
    let mut records = Vec::new();
    for agent in &params.agents {
        for setting in ["mdp=three_state", grid_label.as_str()] {
            if progress {
                eprintln!(
                    "convergence {setting} {}: {} runs x {} steps",
                    agent.label(),
                    params.trials,
                    agent.total_steps
                );
            }
            let errors = if setting == "mdp=three_state" {
                final_errors(
                    &three,
                    agent,
                    setting,
                    params.trials,
                    params.oracle_tolerance,
                    master_seed,
                    workers,
                )?
            } else {
                final_errors(
                    &grid,
                    agent,
                    setting,
                    params.trials,
                    params.oracle_tolerance,
                    master_seed,
                    workers,
                )?
            };
            let s = Summary::of(&errors);
            records.push(RunRecord {
                experiment: "convergence".into(),
                setting: setting.to_string(),
                algorithm: agent.label(),
                trial_count: errors.len(),
                metric: Metric::QError,
                value: s.mean,
                stderr: s.stderr,
            });
        }
    }
    Ok(records)
}
