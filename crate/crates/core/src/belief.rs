//! Exact Bayesian belief filtering for a single node.
//!
//! The belief is the posterior probability that a node is compromised
//! given its action/observation history, conditioned on the node not
//! having crashed (a crashed node stops reporting and is evicted, so the
//! crash branch of the dynamics enters only through renormalization over
//! the two live states).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{node_transition_row, NodeAction, NodeParams, NodeState, ObservationModel};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("belief {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("observation index {index} out of range (n_obs = {n_obs})")]
    ObservationIndex { index: usize, n_obs: usize },
    #[error("filter degenerate: observation {obs} has zero likelihood under both live states")]
    Degenerate { obs: usize },
    #[error("action and observation sequences have different lengths ({actions} vs {observations})")]
    LengthMismatch { actions: usize, observations: usize },
}

/// Probability that the node is compromised, conditioned on it being live.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(f64);

impl Belief {
    pub fn new(value: f64) -> Result<Self, FilterError> {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(FilterError::OutOfRange(value));
        }
        Ok(Self(value))
    }

    /// Initial belief of a fresh node: the one-step compromise probability.
    pub fn initial(params: &NodeParams) -> Self {
        Self(params.p_attack)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for Belief {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unnormalized two-state prediction: weights over (healthy, compromised)
/// after applying the live branches of the transition model.
fn predict(belief: f64, action: NodeAction, params: &NodeParams) -> (f64, f64) {
    let from_healthy = node_transition_row(params, NodeState::Healthy, action);
    let from_compromised = node_transition_row(params, NodeState::Compromised, action);
    let w_healthy = (1.0 - belief) * from_healthy[0] + belief * from_compromised[0];
    let w_compromised = (1.0 - belief) * from_healthy[1] + belief * from_compromised[1];
    (w_healthy, w_compromised)
}

/// One step of the Bayes recursion: prediction under `a_prev`, then the
/// observation correction, renormalized over the live states.
///
/// The denominator is strictly positive whenever every observation
/// likelihood is positive; a zero denominator is reported as filter
/// degeneracy rather than silently clamped.
pub fn belief_update(
    belief: Belief,
    a_prev: NodeAction,
    obs: usize,
    params: &NodeParams,
    model: &ObservationModel,
) -> Result<Belief, FilterError> {
    if obs >= model.n_obs() {
        return Err(FilterError::ObservationIndex {
            index: obs,
            n_obs: model.n_obs(),
        });
    }
    let (w_healthy, w_compromised) = predict(belief.value(), a_prev, params);
    let weighted_healthy = w_healthy * model.likelihood(NodeState::Healthy, obs);
    let weighted_compromised = w_compromised * model.likelihood(NodeState::Compromised, obs);
    let denominator = weighted_healthy + weighted_compromised;
    if denominator <= 0.0 {
        return Err(FilterError::Degenerate { obs });
    }
    Belief::new(weighted_compromised / denominator)
}

/// Brute-force forward filter used as a test oracle.
///
/// Runs the same Bayes filter over the whole history at once, carrying
/// the unnormalized live-state weight vector and normalizing only at
/// read-out. Mathematically identical to iterating [`belief_update`],
/// but shares none of its incremental code path.
pub fn forward_filter_oracle(
    actions: &[NodeAction],
    observations: &[usize],
    params: &NodeParams,
    model: &ObservationModel,
    initial: Belief,
) -> Result<Vec<Belief>, FilterError> {
    if actions.len() != observations.len() {
        return Err(FilterError::LengthMismatch {
            actions: actions.len(),
            observations: observations.len(),
        });
    }
    let mut posteriors = Vec::with_capacity(actions.len() + 1);
    posteriors.push(initial);
    let mut weights = (1.0 - initial.value(), initial.value());
    for (&action, &obs) in actions.iter().zip(observations) {
        if obs >= model.n_obs() {
            return Err(FilterError::ObservationIndex {
                index: obs,
                n_obs: model.n_obs(),
            });
        }
        let from_healthy = node_transition_row(params, NodeState::Healthy, action);
        let from_compromised = node_transition_row(params, NodeState::Compromised, action);
        let predicted_healthy = weights.0 * from_healthy[0] + weights.1 * from_compromised[0];
        let predicted_compromised = weights.0 * from_healthy[1] + weights.1 * from_compromised[1];
        weights = (
            predicted_healthy * model.likelihood(NodeState::Healthy, obs),
            predicted_compromised * model.likelihood(NodeState::Compromised, obs),
        );
        let total = weights.0 + weights.1;
        if total <= 0.0 {
            return Err(FilterError::Degenerate { obs });
        }
        posteriors.push(Belief::new(weights.1 / total)?);
        // Rescale to keep the unnormalized weights away from underflow on
        // long traces; the posterior is invariant under positive scaling.
        if total < 1e-100 {
            weights = (weights.0 / total, weights.1 / total);
        }
    }
    Ok(posteriors)
}
