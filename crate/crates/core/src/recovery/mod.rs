//! Node-recovery strategies and their evaluation.
//!
//! A recovery strategy is a vector of belief thresholds indexed by the
//! position within the bounded-time-to-recovery period: recover when the
//! belief reaches the current threshold, and unconditionally at the end
//! of each period. The long-run cost of a strategy is estimated by
//! Monte Carlo simulation of independent node episodes.

pub mod dp;
pub mod optimize;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{belief_update, Belief};
use crate::model::{
    node_cost, node_transition_row, NodeAction, NodeParams, NodeState, ObservationModel,
};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("threshold vector has length {got}, expected {expected} for the given period")]
    ThresholdLength { got: usize, expected: usize },
    #[error("threshold {value} outside [0, 1]")]
    ThresholdRange { value: f64 },
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("objective requires at least one episode")]
    NoEpisodes,
    #[error("horizon {horizon} shorter than the recovery period {period}")]
    HorizonShorterThanPeriod { horizon: u32, period: u32 },
}

/// Periodic threshold strategy.
///
/// With a finite period `Δ` the strategy holds `Δ − 1` thresholds, one
/// per in-period step, and forces recovery at every multiple of `Δ`.
/// Without a period it holds a single stationary threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStrategy {
    /// Recovery period; `None` disables forced periodic recovery.
    pub delta_r: Option<u32>,
    /// Thresholds in `[0, 1]`, indexed by in-period position.
    pub thetas: Vec<f64>,
}

impl ThresholdStrategy {
    pub fn new(delta_r: Option<u32>, thetas: Vec<f64>) -> Result<Self, RecoveryError> {
        let strategy = Self { delta_r, thetas };
        strategy.validate()?;
        Ok(strategy)
    }

    /// Stationary single-threshold strategy (no forced recoveries).
    pub fn stationary(theta: f64) -> Result<Self, RecoveryError> {
        Self::new(None, vec![theta])
    }

    /// Number of free thresholds for a period: `Δ − 1` when finite, 1 otherwise.
    pub fn dimension_for(delta_r: Option<u32>) -> usize {
        match delta_r {
            Some(period) => period.saturating_sub(1) as usize,
            None => 1,
        }
    }

    pub fn validate(&self) -> Result<(), RecoveryError> {
        if self.delta_r == Some(0) {
            return Err(RecoveryError::ZeroPeriod);
        }
        let expected = Self::dimension_for(self.delta_r);
        if self.thetas.len() != expected {
            return Err(RecoveryError::ThresholdLength {
                got: self.thetas.len(),
                expected,
            });
        }
        for &theta in &self.thetas {
            if !(0.0..=1.0).contains(&theta) || !theta.is_finite() {
                return Err(RecoveryError::ThresholdRange { value: theta });
            }
        }
        Ok(())
    }

    /// Action at step `t >= 1` given the current belief.
    ///
    /// At multiples of the period recovery is forced. Otherwise the
    /// threshold index is `min(t mod Δ, d)` with `t mod Δ ∈ {1..Δ−1}`
    /// on non-forced steps; without a period the single threshold
    /// applies at every step.
    pub fn action(&self, belief: Belief, t: u32) -> NodeAction {
        match self.delta_r {
            Some(period) => {
                let phase = t % period;
                if phase == 0 {
                    return NodeAction::Recover;
                }
                if self.thetas.is_empty() {
                    // Period of 1: every step is a forced recovery.
                    return NodeAction::Recover;
                }
                let k = (phase as usize).min(self.thetas.len());
                if belief.value() >= self.thetas[k - 1] {
                    NodeAction::Recover
                } else {
                    NodeAction::Wait
                }
            }
            None => {
                if belief.value() >= self.thetas[0] {
                    NodeAction::Recover
                } else {
                    NodeAction::Wait
                }
            }
        }
    }
}

/// Monte Carlo cost objective for recovery strategies.
#[derive(Debug, Clone)]
pub struct RecoveryObjective {
    pub params: NodeParams,
    pub obs: ObservationModel,
    /// Episode length in steps.
    pub horizon: u32,
    /// Number of independent episodes per evaluation.
    pub episodes: u32,
    pub seed: u64,
}

/// Mean episode cost and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl RecoveryObjective {
    pub fn validate(&self, strategy: &ThresholdStrategy) -> Result<(), RecoveryError> {
        if self.episodes == 0 {
            return Err(RecoveryError::NoEpisodes);
        }
        if let Some(period) = strategy.delta_r {
            if self.horizon < period {
                return Err(RecoveryError::HorizonShorterThanPeriod {
                    horizon: self.horizon,
                    period,
                });
            }
        }
        Ok(())
    }
}

/// Simulates one node episode and returns its time-averaged cost.
///
/// The node starts healthy with the fresh-node belief. Once it crashes
/// the remaining steps contribute zero cost and the normalization stays
/// `1/T`: a restarted node is a new node and leaves this episode's cost
/// stream.
pub fn simulate_episode<R: Rng>(
    strategy: &ThresholdStrategy,
    params: &NodeParams,
    obs_model: &ObservationModel,
    horizon: u32,
    rng: &mut R,
) -> f64 {
    let mut state = NodeState::Healthy;
    let mut belief = Belief::initial(params);
    let mut total = 0.0;
    for t in 1..=horizon {
        let action = strategy.action(belief, t);
        total += node_cost(state, action, params.eta).expect("live state");
        let row = node_transition_row(params, state, action);
        let draw: f64 = rng.random();
        state = if draw < row[0] {
            NodeState::Healthy
        } else if draw < row[0] + row[1] {
            NodeState::Compromised
        } else {
            NodeState::Crashed
        };
        if state == NodeState::Crashed {
            break;
        }
        let observation = sample_observation(obs_model, state, rng);
        belief = belief_update(belief, action, observation, params, obs_model)
            .expect("positive likelihoods");
    }
    total / horizon as f64
}

pub(crate) fn sample_observation<R: Rng>(
    model: &ObservationModel,
    state: NodeState,
    rng: &mut R,
) -> usize {
    let row = match state {
        NodeState::Healthy => model.healthy_row(),
        NodeState::Compromised => model.compromised_row(),
        NodeState::Crashed => unreachable!("crashed nodes emit no observations"),
    };
    let draw: f64 = rng.random();
    let mut cumulative = 0.0;
    for (o, &p) in row.iter().enumerate() {
        cumulative += p;
        if draw < cumulative {
            return o;
        }
    }
    row.len() - 1
}

/// Estimates the mean episode cost of a strategy.
///
/// Episodes run in parallel with per-episode derived seeds; costs are
/// reduced in episode order, so the estimate is bitwise reproducible for
/// a fixed seed regardless of thread count.
pub fn evaluate_objective(
    strategy: &ThresholdStrategy,
    objective: &RecoveryObjective,
) -> Result<ObjectiveEstimate, RecoveryError> {
    strategy.validate()?;
    objective.validate(strategy)?;
    let costs: Vec<f64> = (0..objective.episodes)
        .into_par_iter()
        .map(|episode| {
            let mut rng = stream_rng(objective.seed, &[streams::RECOVERY_EVAL, episode as u64]);
            simulate_episode(strategy, &objective.params, &objective.obs, objective.horizon, &mut rng)
        })
        .collect();
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let variance = if costs.len() > 1 {
        costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(ObjectiveEstimate {
        mean,
        std_error: (variance / n).sqrt(),
    })
}
