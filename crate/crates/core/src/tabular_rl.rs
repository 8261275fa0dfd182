//! Twin-table TD learning.
//!
//! One engine covers Q-learning, Double Q-learning, clipped Double
//! Q-learning and action-candidate clipped Double Q-learning in its random
//! (one table per step) and simultaneous (both tables, shared target) forms.
//! Learning rates are `1 / (n + 1)^p` on visit counts and exploration is
//! epsilon-greedy on `Q_A + Q_B`.

use std::fmt;

use rand::Rng;

use crate::error::RlError;
use crate::estimators::{argmax_all, argmax_with, max_of, RandomTie, TieBreaker};
use crate::mdp::TabularMdp;

type Result<T> = std::result::Result<T, RlError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    QLearning,
    DoubleQ,
    ClippedDoubleQ,
    AcCdqRandom,
    AcCdqSimultaneous,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::QLearning => "q_learning",
            Algorithm::DoubleQ => "double_q",
            Algorithm::ClippedDoubleQ => "clipped_double_q",
            Algorithm::AcCdqRandom => "ac_cdq_random",
            Algorithm::AcCdqSimultaneous => "ac_cdq_simultaneous",
        }
    }

    pub fn uses_candidates(self) -> bool {
        matches!(self, Algorithm::AcCdqRandom | Algorithm::AcCdqSimultaneous)
    }

    pub fn is_twin(self) -> bool {
        self != Algorithm::QLearning
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonMode {
    /// `1 / sqrt(n(s) + 1)` on state visit counts.
    CountBased,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    /// Candidate count; only read by the action-candidate variants.
    pub k: usize,
    pub gamma: f64,
    pub lr_exponent: f64,
    pub epsilon: EpsilonMode,
    pub total_steps: usize,
}

impl AgentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            k: 1,
            gamma: 0.95,
            lr_exponent: 0.8,
            epsilon: EpsilonMode::CountBased,
            total_steps: 10_000,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self, num_actions: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(RlError::InvalidGamma(self.gamma));
        }
        if self.algorithm.uses_candidates() {
            check_k(self.k, num_actions)?;
        }
        if let EpsilonMode::Fixed(e) = self.epsilon {
            if !(0.0..=1.0).contains(&e) {
                return Err(RlError::InvalidEpsilon(e));
            }
        }
        Ok(())
    }

    /// Short label, e.g. `ac_cdq_random_k2`.
    pub fn label(&self) -> String {
        if self.algorithm.uses_candidates() {
            format!("{}_k{}", self.algorithm.name(), self.k)
        } else {
            self.algorithm.name().to_string()
        }
    }
}

fn check_k(k: usize, num_actions: usize) -> Result<()> {
    if k == 0 || k > num_actions {
        return Err(RlError::InvalidCandidateCount { k, num_actions });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    A,
    B,
}

/// Twin Q-tables with visit counters, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct QPair {
    num_states: usize,
    num_actions: usize,
    q_a: Vec<f64>,
    q_b: Vec<f64>,
    visits: Vec<u64>,
    updates_a: Vec<u64>,
    updates_b: Vec<u64>,
    state_visits: Vec<u64>,
}

impl QPair {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        let cells = num_states * num_actions;
        Self {
            num_states,
            num_actions,
            q_a: vec![0.0; cells],
            q_b: vec![0.0; cells],
            visits: vec![0; cells],
            updates_a: vec![0; cells],
            updates_b: vec![0; cells],
            state_visits: vec![0; num_states],
        }
    }

    pub fn for_mdp<M: TabularMdp>(mdp: &M) -> Self {
        Self::new(mdp.num_states(), mdp.num_actions())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn range(&self, state: usize) -> std::ops::Range<usize> {
        state * self.num_actions..(state + 1) * self.num_actions
    }

    pub fn q_a(&self, state: usize) -> &[f64] {
        &self.q_a[self.range(state)]
    }

    pub fn q_b(&self, state: usize) -> &[f64] {
        &self.q_b[self.range(state)]
    }

    pub fn q_a_mut(&mut self, state: usize) -> &mut [f64] {
        let r = self.range(state);
        &mut self.q_a[r]
    }

    pub fn q_b_mut(&mut self, state: usize) -> &mut [f64] {
        let r = self.range(state);
        &mut self.q_b[r]
    }

    pub fn table(&self, which: Table) -> &[f64] {
        match which {
            Table::A => &self.q_a,
            Table::B => &self.q_b,
        }
    }

    /// Total updates of `(state, action)` across both tables' steps.
    pub fn visits(&self, state: usize, action: usize) -> u64 {
        self.visits[state * self.num_actions + action]
    }

    pub fn updates(&self, which: Table, state: usize, action: usize) -> u64 {
        let i = state * self.num_actions + action;
        match which {
            Table::A => self.updates_a[i],
            Table::B => self.updates_b[i],
        }
    }

    pub fn state_visits(&self, state: usize) -> u64 {
        self.state_visits[state]
    }

    /// `max |Q - reference|` over every cell of the chosen table.
    pub fn sup_error(&self, which: Table, reference: &[Vec<f64>]) -> f64 {
        let table = self.table(which);
        reference
            .iter()
            .flatten()
            .zip(table)
            .map(|(r, q)| (r - q).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    /// Number of environment steps taken so far.
    pub step: usize,
    /// Cumulative mean reward per step.
    pub reward: f64,
    pub v_start_estimate: f64,
}

pub fn learning_rate(visits_count: u64, lr_exponent: f64) -> f64 {
    1.0 / ((visits_count + 1) as f64).powf(lr_exponent)
}

pub fn epsilon_for(pair: &QPair, state: usize, config: &AgentConfig) -> f64 {
    match config.epsilon {
        EpsilonMode::Fixed(e) => e,
        EpsilonMode::CountBased => 1.0 / ((pair.state_visits(state) + 1) as f64).sqrt(),
    }
}

pub fn epsilon_greedy_action<R: Rng + ?Sized>(
    pair: &QPair,
    state: usize,
    config: &AgentConfig,
    rng: &mut R,
) -> usize {
    let epsilon = epsilon_for(pair, state, config);
    if rng.random::<f64>() < epsilon {
        return rng.random_range(0..pair.num_actions);
    }
    let combined: Vec<f64> = pair
        .q_a(state)
        .iter()
        .zip(pair.q_b(state))
        .map(|(a, b)| a + b)
        .collect();
    argmax_all(&combined, &mut RandomTie(rng))
}

/// Bootstrap of the action-candidate target for the table being updated:
/// candidates are the top `k` actions of `other`, the selected action
/// maximizes `own` among them, and the value is
/// `min(other[a_K], max_a own[a])`.
pub fn ac_bootstrap<T: TieBreaker + ?Sized>(
    own: &[f64],
    other: &[f64],
    k: usize,
    ties: &mut T,
) -> Result<f64> {
    check_k(k, own.len())?;
    let candidates =
        crate::estimators::candidate_set(other, k).map_err(|_| RlError::InvalidCandidateCount {
            k,
            num_actions: own.len(),
        })?;
    let a_k = argmax_with(own, &candidates, ties).expect("candidate set is nonempty");
    Ok(other[a_k].min(max_of(own)))
}

/// Clipped double bootstrap `min(other[a*], own[a*])`, `a* = argmax own`.
pub fn cdq_bootstrap<T: TieBreaker + ?Sized>(own: &[f64], other: &[f64], ties: &mut T) -> f64 {
    let a_star = argmax_all(own, ties);
    other[a_star].min(own[a_star])
}

/// Double Q bootstrap `other[argmax own]`.
pub fn double_q_bootstrap<T: TieBreaker + ?Sized>(own: &[f64], other: &[f64], ties: &mut T) -> f64 {
    other[argmax_all(own, ties)]
}

fn check_transition(pair: &QPair, t: &Transition) -> Result<()> {
    for s in [t.state, t.next_state] {
        if s >= pair.num_states {
            return Err(RlError::StateOutOfRange {
                state: s,
                num_states: pair.num_states,
            });
        }
    }
    if t.action >= pair.num_actions {
        return Err(RlError::ActionOutOfRange {
            action: t.action,
            num_actions: pair.num_actions,
        });
    }
    Ok(())
}

fn rows(pair: &QPair, state: usize, which: Table) -> (&[f64], &[f64]) {
    match which {
        Table::A => (pair.q_a(state), pair.q_b(state)),
        Table::B => (pair.q_b(state), pair.q_a(state)),
    }
}

/// Moves one table's `(s, a)` cell toward `target` with its per-table rate.
fn apply_to_table(
    pair: &mut QPair,
    t: &Transition,
    which: Table,
    target: f64,
    config: &AgentConfig,
) {
    let i = t.state * pair.num_actions + t.action;
    let (q, n) = match which {
        Table::A => (&mut pair.q_a, &mut pair.updates_a),
        Table::B => (&mut pair.q_b, &mut pair.updates_b),
    };
    let alpha = learning_rate(n[i], config.lr_exponent);
    q[i] += alpha * (target - q[i]);
    n[i] += 1;
    pair.visits[i] += 1;
    pair.state_visits[t.state] += 1;
}

fn target(t: &Transition, gamma: f64, bootstrap: impl FnOnce() -> f64) -> f64 {
    if t.terminal {
        t.reward
    } else {
        t.reward + gamma * bootstrap()
    }
}

pub fn q_learning_update(pair: &mut QPair, t: &Transition, config: &AgentConfig) -> Result<()> {
    check_transition(pair, t)?;
    let y = target(t, config.gamma, || max_of(pair.q_a(t.next_state)));
    apply_to_table(pair, t, Table::A, y, config);
    Ok(())
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> Table {
    if rng.random_bool(0.5) {
        Table::A
    } else {
        Table::B
    }
}

pub fn double_q_update_table<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    which: Table,
    rng: &mut R,
) -> Result<()> {
    check_transition(pair, t)?;
    let y = target(t, config.gamma, || {
        let (own, other) = rows(pair, t.next_state, which);
        double_q_bootstrap(own, other, &mut RandomTie(rng))
    });
    apply_to_table(pair, t, which, y, config);
    Ok(())
}

pub fn double_q_update<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<()> {
    let which = coin(rng);
    double_q_update_table(pair, t, config, which, rng)
}

pub fn cdq_update_table<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    which: Table,
    rng: &mut R,
) -> Result<()> {
    check_transition(pair, t)?;
    let y = target(t, config.gamma, || {
        let (own, other) = rows(pair, t.next_state, which);
        cdq_bootstrap(own, other, &mut RandomTie(rng))
    });
    apply_to_table(pair, t, which, y, config);
    Ok(())
}

pub fn cdq_update<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<()> {
    let which = coin(rng);
    cdq_update_table(pair, t, config, which, rng)
}

pub fn ac_cdq_update_table<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    which: Table,
    rng: &mut R,
) -> Result<()> {
    check_transition(pair, t)?;
    check_k(config.k, pair.num_actions)?;
    let y = if t.terminal {
        t.reward
    } else {
        let (own, other) = rows(pair, t.next_state, which);
        t.reward + config.gamma * ac_bootstrap(own, other, config.k, &mut RandomTie(rng))?
    };
    apply_to_table(pair, t, which, y, config);
    Ok(())
}

/// Random updating: a fair coin picks the table to update.
pub fn ac_cdq_update<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<()> {
    check_k(config.k, pair.num_actions)?;
    let which = coin(rng);
    ac_cdq_update_table(pair, t, config, which, rng)
}

/// Simultaneous updating: one target
/// `r + g min(Q_B(s', a_K), Q_A(s', a*))`, with candidates from `Q_B` and
/// selection by `Q_A`, applied to both tables under a shared visit count.
pub fn ac_cdq_simultaneous_update<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<()> {
    check_transition(pair, t)?;
    check_k(config.k, pair.num_actions)?;
    let y = if t.terminal {
        t.reward
    } else {
        let (own, other) = rows(pair, t.next_state, Table::A);
        t.reward + config.gamma * ac_bootstrap(own, other, config.k, &mut RandomTie(rng))?
    };
    let i = t.state * pair.num_actions + t.action;
    let alpha = learning_rate(pair.visits[i], config.lr_exponent);
    pair.q_a[i] += alpha * (y - pair.q_a[i]);
    pair.q_b[i] += alpha * (y - pair.q_b[i]);
    pair.visits[i] += 1;
    pair.updates_a[i] += 1;
    pair.updates_b[i] += 1;
    pair.state_visits[t.state] += 1;
    Ok(())
}

/// Dispatches one transition to the configured update rule.
pub fn update<R: Rng + ?Sized>(
    pair: &mut QPair,
    t: &Transition,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<()> {
    match config.algorithm {
        Algorithm::QLearning => q_learning_update(pair, t, config),
        Algorithm::DoubleQ => double_q_update(pair, t, config, rng),
        Algorithm::ClippedDoubleQ => cdq_update(pair, t, config, rng),
        Algorithm::AcCdqRandom => ac_cdq_update(pair, t, config, rng),
        Algorithm::AcCdqSimultaneous => ac_cdq_simultaneous_update(pair, t, config, rng),
    }
}

/// Start-state value probe: `max_a Q_A` for Q-learning, `max_a (Q_A + Q_B) / 2`
/// for the twin-table algorithms.
pub fn v_start_estimate(pair: &QPair, start_state: usize, algorithm: Algorithm) -> f64 {
    if algorithm.is_twin() {
        pair.q_a(start_state)
            .iter()
            .zip(pair.q_b(start_state))
            .map(|(a, b)| (a + b) / 2.0)
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        max_of(pair.q_a(start_state))
    }
}

#[derive(Debug, Clone)]
pub struct AgentRun {
    pub metrics: Vec<StepMetrics>,
    pub pair: QPair,
}

/// Runs `config.total_steps` epsilon-greedy steps from the start state,
/// restarting there after every terminal transition. A probe is recorded
/// after every `probe_interval`-th step.
pub fn run_agent<M: TabularMdp, R: Rng + ?Sized>(
    mdp: &M,
    config: &AgentConfig,
    rng: &mut R,
    probe_interval: usize,
) -> Result<AgentRun> {
    run_agent_from(mdp, config, QPair::for_mdp(mdp), rng, probe_interval)
}

/// As [`run_agent`], starting from given tables.
pub fn run_agent_from<M: TabularMdp, R: Rng + ?Sized>(
    mdp: &M,
    config: &AgentConfig,
    mut pair: QPair,
    rng: &mut R,
    probe_interval: usize,
) -> Result<AgentRun> {
    config.validate(mdp.num_actions())?;
    if probe_interval == 0 {
        return Err(RlError::ZeroProbeInterval);
    }
    let start = mdp.start_state();
    let mut metrics = Vec::with_capacity(config.total_steps / probe_interval);
    let mut state = start;
    let mut total_reward = 0.0;
    for step in 1..=config.total_steps {
        let action = epsilon_greedy_action(&pair, state, config, rng);
        let outcome = mdp.step(state, action, rng)?;
        let t = Transition {
            state,
            action,
            reward: outcome.reward,
            next_state: outcome.next_state,
            terminal: outcome.terminal,
        };
        update(&mut pair, &t, config, rng)?;
        total_reward += outcome.reward;
        state = if outcome.terminal {
            start
        } else {
            outcome.next_state
        };
        if step % probe_interval == 0 {
            metrics.push(StepMetrics {
                step,
                reward: total_reward / step as f64,
                v_start_estimate: v_start_estimate(&pair, start, config.algorithm),
            });
        }
    }
    Ok(AgentRun { metrics, pair })
}
