//! Invariant checks behind `acdq selftest`.

use rand::Rng;

use crate::estimators::{
    ac_candidate_index, ac_clipped_double_estimate, ac_clipped_double_with,
    clipped_double_estimate, single_estimate, EstimateTriple, LowestIndex,
};
use crate::gridworld::{optimal_start_value, GridWorld};
use crate::mdp::{value_iteration, TabularMdp, ThreeStateMdp};
use crate::seeding::trial_rng;
use crate::tabular_rl::{ac_bootstrap, run_agent, AgentConfig, Algorithm, EpsilonMode, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, violations: usize, cases: usize) -> CheckResult {
    CheckResult {
        name,
        passed: violations == 0,
        detail: format!("{violations} violations in {cases} cases"),
    }
}

pub fn random_triple<R: Rng + ?Sized>(rng: &mut R) -> EstimateTriple {
    let n = rng.random_range(2..=20);
    let mut draw = || (0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    let (mu, a, b) = (draw(), draw(), draw());
    EstimateTriple::new(mu, a, b).expect("lengths agree")
}

fn estimator_identities(seed: u64, trials: usize) -> Vec<CheckResult> {
    let mut rng = trial_rng(seed, "selftest", "estimators", 0);
    let (mut clip, mut chain, mut reduce, mut top1, mut reduce_cases) = (0, 0, 0, 0, 0);
    for _ in 0..trials {
        let t = random_triple(&mut rng);
        let n = t.len();
        let se = single_estimate(t.mu_hat()).unwrap();
        let mut previous = f64::INFINITY;
        for k in 1..=n {
            if ac_clipped_double_estimate(&t, k, &mut rng).unwrap() > se {
                clip += 1;
            }
            let pre = t.mu_hat_b()[ac_candidate_index(&t, k, &mut LowestIndex).unwrap()];
            if pre > previous {
                chain += 1;
            }
            previous = pre;
        }
        let max_b = t
            .mu_hat_b()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if t.mu_hat_b()[ac_candidate_index(&t, 1, &mut LowestIndex).unwrap()] != max_b {
            top1 += 1;
        }
        let max_a = t
            .mu_hat_a()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if t.mu_hat_a().iter().filter(|&&v| v == max_a).count() == 1 {
            reduce_cases += 1;
            let ac = ac_clipped_double_with(&t, n, &mut LowestIndex).unwrap();
            if ac.to_bits() != clipped_double_estimate(&t, &mut rng).to_bits() {
                reduce += 1;
            }
        }
    }
    vec![
        check("ac_clipped_by_single", clip, trials),
        check("ac_monotone_in_k", chain, trials),
        check("ac_full_set_equals_cde", reduce, reduce_cases),
        check("ac_single_candidate_is_max_b", top1, trials),
    ]
}

fn target_ordering(seed: u64, trials: usize) -> CheckResult {
    let mut rng = trial_rng(seed, "selftest", "targets", 0);
    let mut violations = 0;
    for _ in 0..trials {
        let n = rng.random_range(2..=8);
        let own: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let other: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let own_max = own.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut previous = f64::INFINITY;
        for k in 1..=n {
            let y = ac_bootstrap(&own, &other, k, &mut LowestIndex).unwrap();
            if y > previous || y > own_max {
                violations += 1;
            }
            previous = y;
        }
    }
    check("ac_target_monotone_and_clipped", violations, trials)
}

fn simultaneous_coupling(seed: u64) -> CheckResult {
    let config = AgentConfig {
        algorithm: Algorithm::AcCdqSimultaneous,
        k: 1,
        gamma: 0.9,
        lr_exponent: 0.8,
        epsilon: EpsilonMode::Fixed(0.5),
        total_steps: 20_000,
    };
    let mut rng = trial_rng(seed, "selftest", "coupling", 0);
    let run = run_agent(&ThreeStateMdp::default(), &config, &mut rng, 1_000).unwrap();
    let equal = run.pair.table(Table::A) == run.pair.table(Table::B);
    CheckResult {
        name: "simultaneous_tables_stay_equal",
        passed: equal,
        detail: format!("{} steps", config.total_steps),
    }
}

fn closed_form_vs_oracle() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for side in 2..=6 {
        let grid = GridWorld::new(side).unwrap();
        for gamma in [0.5, 0.9, 0.95] {
            let q = value_iteration(&grid, gamma, 1e-12).unwrap();
            let v = q[grid.start_state()]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((v - optimal_start_value(side, gamma).unwrap()).abs());
            cases += 1;
        }
    }
    CheckResult {
        name: "grid_closed_form_matches_value_iteration",
        passed: worst < 1e-6,
        detail: format!("max deviation {worst:.3e} over {cases} cases"),
    }
}

/// Runs every check; `trials` random instances for the randomized ones.
pub fn run(seed: u64, trials: usize) -> Vec<CheckResult> {
    let mut out = estimator_identities(seed, trials);
    out.push(target_ordering(seed, trials));
    out.push(simultaneous_coupling(seed));
    out.push(closed_form_vs_oracle());
    out
}
