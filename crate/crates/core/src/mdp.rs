//! Finite MDP interface, exact value iteration, and a small fixture MDP.

use rand::Rng;

use crate::error::RlError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// One branch of the expected-reward model of a state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOutcome {
    pub probability: f64,
    pub next_state: usize,
    pub mean_reward: f64,
    pub terminal: bool,
}

pub trait TabularMdp {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn start_state(&self) -> usize;

    fn step<R: Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> Result<StepOutcome, RlError>;

    /// Closed-form `max_a Q*(start, a)`, when the environment knows one.
    fn optimal_start_value(&self, _gamma: f64) -> Option<f64> {
        None
    }

    /// Expected-reward model of `(state, action)`. An empty list marks a
    /// terminal state whose value is 0; `None` means no model is available.
    fn expected_model(&self, _state: usize, _action: usize) -> Option<Vec<ModelOutcome>> {
        None
    }
}

/// `Q*` as `table[state][action]` by value iteration on the expected-reward
/// model, iterated until the sup-norm change drops below `tolerance`.
pub fn value_iteration<M: TabularMdp>(
    mdp: &M,
    gamma: f64,
    tolerance: f64,
) -> Option<Vec<Vec<f64>>> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut model = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            model.push(mdp.expected_model(s, a)?);
        }
    }
    let mut q = vec![vec![0.0; na]; ns];
    loop {
        let v: Vec<f64> = q
            .iter()
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut delta: f64 = 0.0;
        for s in 0..ns {
            for a in 0..na {
                let updated: f64 = model[s * na + a]
                    .iter()
                    .map(|o| {
                        let future = if o.terminal { 0.0 } else { v[o.next_state] };
                        o.probability * (o.mean_reward + gamma * future)
                    })
                    .sum();
                delta = delta.max((updated - q[s][a]).abs());
                q[s][a] = updated;
            }
        }
        if delta < tolerance {
            return Some(q);
        }
    }
}

/// Fixed three-state, two-action continuing MDP with stochastic transitions
/// and rewards `mean ± noise` (each sign with probability 1/2).
#[derive(Debug, Clone)]
pub struct ThreeStateMdp {
    pub noise: f64,
}

impl Default for ThreeStateMdp {
    fn default() -> Self {
        Self { noise: 0.5 }
    }
}

// (next-state distribution over states 0..3, mean reward) for [state][action]
const THREE_STATE_TABLE: [[([f64; 3], f64); 2]; 3] = [
    [([0.5, 0.5, 0.0], 0.2), ([0.0, 0.8, 0.2], 0.0)],
    [([0.6, 0.0, 0.4], 0.5), ([0.0, 0.1, 0.9], -0.2)],
    [([1.0, 0.0, 0.0], 1.0), ([0.0, 0.5, 0.5], 0.8)],
];

impl ThreeStateMdp {
    fn check(&self, state: usize, action: usize) -> Result<(), RlError> {
        if state >= 3 {
            return Err(RlError::StateOutOfRange {
                state,
                num_states: 3,
            });
        }
        if action >= 2 {
            return Err(RlError::ActionOutOfRange {
                action,
                num_actions: 2,
            });
        }
        Ok(())
    }
}

impl TabularMdp for ThreeStateMdp {
    fn num_states(&self) -> usize {
        3
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn start_state(&self) -> usize {
        0
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> Result<StepOutcome, RlError> {
        self.check(state, action)?;
        let (probs, mean) = THREE_STATE_TABLE[state][action];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next_state = 2;
        for (s, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                next_state = s;
                break;
            }
        }
        let reward = if rng.random_bool(0.5) {
            mean + self.noise
        } else {
            mean - self.noise
        };
        Ok(StepOutcome {
            next_state,
            reward,
            terminal: false,
        })
    }

    fn expected_model(&self, state: usize, action: usize) -> Option<Vec<ModelOutcome>> {
        self.check(state, action).ok()?;
        let (probs, mean) = THREE_STATE_TABLE[state][action];
        Some(
            probs
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(s, &p)| ModelOutcome {
                    probability: p,
                    next_state: s,
                    mean_reward: mean,
                    terminal: false,
                })
                .collect(),
        )
    }
}
