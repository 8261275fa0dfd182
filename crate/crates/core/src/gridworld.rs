//! Stochastic `N x N` grid world.
//!
//! Cells are indexed `row * N + col` with `(0, 0)` the lower-left start and
//! `(N - 1, N - 1)` the upper-right goal. North increases the row, east
//! increases the column. Moves are deterministic; bumping into an edge leaves
//! the agent in place. Every move pays `-6` or `+4` with equal probability,
//! including the move that reaches the goal. Any action taken in the goal
//! pays `-30` or `+40` and ends the episode, so the shortest episode is
//! `2N - 2` moves followed by one goal action.

use rand::Rng;

use crate::error::RlError;
use crate::mdp::{ModelOutcome, StepOutcome, TabularMdp};

pub const EAST: usize = 0;
pub const WEST: usize = 1;
pub const SOUTH: usize = 2;
pub const NORTH: usize = 3;

pub const ACTION_NAMES: [&str; 4] = ["east", "west", "south", "north"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridWorld {
    side: usize,
}

impl GridWorld {
    pub fn new(side: usize) -> Result<Self, RlError> {
        if side < 2 {
            return Err(RlError::GridTooSmall(side));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.side + col
    }

    pub fn coords(&self, state: usize) -> (usize, usize) {
        (state / self.side, state % self.side)
    }

    pub fn goal(&self) -> usize {
        self.cell(self.side - 1, self.side - 1)
    }

    /// Deterministic successor of `(state, action)`.
    pub fn move_to(&self, state: usize, action: usize) -> usize {
        let (row, col) = self.coords(state);
        let last = self.side - 1;
        let (row, col) = match action {
            EAST => (row, (col + 1).min(last)),
            WEST => (row, col.saturating_sub(1)),
            SOUTH => (row.saturating_sub(1), col),
            _ => ((row + 1).min(last), col),
        };
        self.cell(row, col)
    }

    fn check(&self, state: usize, action: usize) -> Result<(), RlError> {
        if state >= self.side * self.side {
            return Err(RlError::StateOutOfRange {
                state,
                num_states: self.side * self.side,
            });
        }
        if action >= 4 {
            return Err(RlError::ActionOutOfRange {
                action,
                num_actions: 4,
            });
        }
        Ok(())
    }

    pub fn grid_step<R: Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> Result<StepOutcome, RlError> {
        self.check(state, action)?;
        let terminal = state == self.goal();
        let next_state = if terminal {
            state
        } else {
            self.move_to(state, action)
        };
        let heads = rng.random_bool(0.5);
        let reward = match (terminal, heads) {
            (false, true) => 4.0,
            (false, false) => -6.0,
            (true, true) => 40.0,
            (true, false) => -30.0,
        };
        Ok(StepOutcome {
            next_state,
            reward,
            terminal,
        })
    }
}

impl TabularMdp for GridWorld {
    fn num_states(&self) -> usize {
        self.side * self.side
    }

    fn num_actions(&self) -> usize {
        4
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
        self.grid_step(state, action, rng)
    }

    fn optimal_start_value(&self, gamma: f64) -> Option<f64> {
        optimal_start_value(self.side, gamma).ok()
    }

    fn expected_model(&self, state: usize, action: usize) -> Option<Vec<ModelOutcome>> {
        self.check(state, action).ok()?;
        let terminal = state == self.goal();
        let next_state = if terminal {
            state
        } else {
            self.move_to(state, action)
        };
        Some(vec![ModelOutcome {
            probability: 1.0,
            next_state,
            mean_reward: if terminal { 5.0 } else { -1.0 },
            terminal,
        }])
    }
}

/// `max_a Q*(start, a) = 5 g^(2(N-1)) - sum_{i=0}^{2N-3} g^i`: `2N - 2`
/// moves of mean reward -1, then the goal action of mean 5.
pub fn optimal_start_value(side: usize, gamma: f64) -> Result<f64, RlError> {
    if side < 2 {
        return Err(RlError::GridTooSmall(side));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(RlError::InvalidGamma(gamma));
    }
    let moves = 2 * (side - 1);
    let penalty: f64 = (0..moves).map(|i| gamma.powi(i as i32)).sum();
    Ok(5.0 * gamma.powi(moves as i32) - penalty)
}
