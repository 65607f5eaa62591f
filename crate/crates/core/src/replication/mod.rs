//! Replication-factor control as a constrained MDP.
//!
//! The system state is the expected number of healthy replicas; the
//! action is whether to add one. The transition model is estimated by
//! Monte Carlo from the node-level dynamics, the optimal randomized
//! strategy comes from an occupancy-measure linear program (minimize the
//! expected replica count subject to an availability floor), and the
//! structural result that an optimal strategy mixes at most two
//! threshold rules is verified on the extracted strategy.

pub mod simplex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use simplex::{dump_lp, LinearProgram, LpError, LpSolution};

use crate::belief::{belief_update, Belief};
use crate::model::{node_transition_row, NodeParams, NodeState, ObservationModel};
use crate::numeric::solve_dense;
use crate::recovery::{sample_observation, ThresholdStrategy};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Error)]
pub enum ReplicationError {
    #[error("transition slice ({s},{a}) sums to {sum}, expected 1 within 1e-10")]
    SliceNotStochastic { s: usize, a: usize, sum: f64 },
    #[error("transition entry ({s},{a},{s_next}) = {value} is negative")]
    NegativeEntry {
        s: usize,
        a: usize,
        s_next: usize,
        value: f64,
    },
    #[error("tensor shape inconsistent with s_max = {s_max}")]
    BadShape { s_max: usize },
    #[error("tolerance threshold {f} must be below s_max = {s_max}")]
    ToleranceTooLarge { f: usize, s_max: usize },
    #[error("availability bound {0} outside (0, 1]")]
    BadAvailabilityBound(f64),
    #[error("estimation needs at least 1000 samples, got {0}")]
    TooFewSamples(usize),
    #[error("induced chain is singular; stationary distribution undefined")]
    SingularChain,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Constrained MDP over the healthy-replica count `{0..s_max}` with the
/// add-a-node action and an availability floor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemCmdp {
    pub s_max: usize,
    /// Tolerance threshold: service is available while `s >= f + 1`.
    pub tolerance: usize,
    /// Lower bound on long-run availability.
    pub epsilon_a: f64,
    /// `transitions[s][a][s']` with `a ∈ {0 = keep, 1 = add}`.
    pub transitions: Vec<Vec<Vec<f64>>>,
}

impl SystemCmdp {
    pub fn new(
        s_max: usize,
        tolerance: usize,
        epsilon_a: f64,
        transitions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, ReplicationError> {
        let cmdp = Self {
            s_max,
            tolerance,
            epsilon_a,
            transitions,
        };
        cmdp.validate()?;
        Ok(cmdp)
    }

    pub fn n_states(&self) -> usize {
        self.s_max + 1
    }

    pub fn validate(&self) -> Result<(), ReplicationError> {
        let n = self.n_states();
        if self.tolerance >= self.s_max {
            return Err(ReplicationError::ToleranceTooLarge {
                f: self.tolerance,
                s_max: self.s_max,
            });
        }
        if !(self.epsilon_a > 0.0 && self.epsilon_a <= 1.0) {
            return Err(ReplicationError::BadAvailabilityBound(self.epsilon_a));
        }
        if self.transitions.len() != n {
            return Err(ReplicationError::BadShape { s_max: self.s_max });
        }
        for (s, per_action) in self.transitions.iter().enumerate() {
            if per_action.len() != 2 {
                return Err(ReplicationError::BadShape { s_max: self.s_max });
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != n {
                    return Err(ReplicationError::BadShape { s_max: self.s_max });
                }
                for (s_next, &p) in row.iter().enumerate() {
                    if p < 0.0 || !p.is_finite() {
                        return Err(ReplicationError::NegativeEntry {
                            s,
                            a,
                            s_next,
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-10 {
                    return Err(ReplicationError::SliceNotStochastic { s, a, sum });
                }
            }
        }
        Ok(())
    }
}

/// Randomized replication strategy: per state, the probability of each
/// action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStrategy {
    /// `pi[s] = [P(keep), P(add)]`.
    pub pi: Vec<[f64; 2]>,
}

impl ReplicationStrategy {
    pub fn add_probability(&self, s: usize) -> f64 {
        self.pi[s][1]
    }

    pub fn validate(&self) -> Result<(), ReplicationError> {
        for (s, row) in self.pi.iter().enumerate() {
            let sum = row[0] + row[1];
            if (sum - 1.0).abs() > 1e-10 || row[0] < 0.0 || row[1] < 0.0 {
                return Err(ReplicationError::SliceNotStochastic { s, a: 0, sum });
            }
        }
        Ok(())
    }
}

/// Long-run state-action frequencies from the occupancy LP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    /// `rho[s] = [rho(s, keep), rho(s, add)]`.
    pub rho: Vec<[f64; 2]>,
    pub objective: f64,
}

impl OccupancyMeasure {
    pub fn total(&self) -> f64 {
        self.rho.iter().map(|r| r[0] + r[1]).sum()
    }
}

/// Estimates the system transition tensor by Monte Carlo.
///
/// From each source state `s`, one step of `s` independent fresh nodes
/// (healthy, initial belief) is simulated under the recovery strategy;
/// the destination is `floor(Σ(1 − b'))` over surviving nodes plus the
/// contemplated add action, clipped to `[0, s_max]`. Laplace smoothing
/// (`smoothing` added to every cell) keeps all entries strictly positive.
pub fn estimate_fs(
    params: &NodeParams,
    obs: &ObservationModel,
    strategy: &ThresholdStrategy,
    s_max: usize,
    samples: usize,
    seed: u64,
    smoothing: f64,
) -> Result<Vec<Vec<Vec<f64>>>, ReplicationError> {
    if samples < 1000 {
        return Err(ReplicationError::TooFewSamples(samples));
    }
    let n = s_max + 1;
    let tensor: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, &[streams::REPLICATION_EST, s as u64]);
            let mut counts = vec![vec![0.0_f64; n]; 2];
            for _ in 0..samples {
                let mut healthy_mass = 0.0;
                for _ in 0..s {
                    let action = strategy.action(Belief::initial(params), 1);
                    let row = node_transition_row(params, NodeState::Healthy, action);
                    let draw: f64 = rng.random();
                    let next = if draw < row[0] {
                        NodeState::Healthy
                    } else if draw < row[0] + row[1] {
                        NodeState::Compromised
                    } else {
                        NodeState::Crashed
                    };
                    if next == NodeState::Crashed {
                        continue;
                    }
                    let observation = sample_observation(obs, next, &mut rng);
                    let belief = belief_update(Belief::initial(params), action, observation, params, obs)
                        .expect("positive likelihoods");
                    healthy_mass += 1.0 - belief.value();
                }
                let floored = healthy_mass.floor() as usize;
                for a in 0..2 {
                    let s_next = (floored + a).min(s_max);
                    counts[a][s_next] += 1.0;
                }
            }
            counts
                .into_iter()
                .map(|row| {
                    let smoothed: Vec<f64> = row.iter().map(|c| c + smoothing).collect();
                    let total: f64 = smoothed.iter().sum();
                    smoothed.into_iter().map(|c| c / total).collect()
                })
                .collect::<Vec<Vec<f64>>>()
        })
        .collect();
    Ok(tensor)
}

/// Which structural assumptions behind the two-threshold-mixture theorem
/// hold for a transition tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thm2Report {
    /// (B) every transition probability strictly positive.
    pub strictly_positive: bool,
    /// (C) first-order stochastic dominance of rows in the source state.
    pub dominance: bool,
    /// (D) tail-sum differences between actions non-decreasing in the
    /// tail cutoff.
    pub tail_supermodular: bool,
    /// First `(s_hat, a, s)` violating (C), if any.
    pub dominance_violation: Option<(usize, usize, usize)>,
    /// First `(s_hat, s)` violating (D), if any.
    pub supermodularity_violation: Option<(usize, usize)>,
}

impl Thm2Report {
    pub fn all_hold(&self) -> bool {
        self.strictly_positive && self.dominance && self.tail_supermodular
    }
}

/// Evaluates assumptions (B)–(D); feasibility (A) is established
/// operationally by LP solvability.
pub fn check_thm2_assumptions(cmdp: &SystemCmdp) -> Thm2Report {
    let n = cmdp.n_states();
    let strictly_positive = cmdp
        .transitions
        .iter()
        .flatten()
        .flatten()
        .all(|&p| p > 0.0);

    let tail = |s_hat: usize, a: usize, s: usize| -> f64 {
        cmdp.transitions[s_hat][a][s..].iter().sum()
    };

    let mut dominance = true;
    let mut dominance_violation = None;
    'dom: for s_hat in 0..n - 1 {
        for a in 0..2 {
            for s in 0..n {
                if tail(s_hat + 1, a, s) < tail(s_hat, a, s) - 1e-12 {
                    dominance = false;
                    dominance_violation = Some((s_hat, a, s));
                    break 'dom;
                }
            }
        }
    }

    let mut tail_supermodular = true;
    let mut supermodularity_violation = None;
    'sup: for s_hat in 0..n {
        let mut previous = f64::NEG_INFINITY;
        for s in 0..n {
            let diff = tail(s_hat, 1, s) - tail(s_hat, 0, s);
            if diff < previous - 1e-12 {
                tail_supermodular = false;
                supermodularity_violation = Some((s_hat, s));
                break 'sup;
            }
            previous = diff;
        }
    }

    Thm2Report {
        strictly_positive,
        dominance,
        tail_supermodular,
        dominance_violation,
        supermodularity_violation,
    }
}

/// Assembles the occupancy-measure LP.
///
/// Variables `rho(s, a)` are indexed `s * 2 + a`. The objective is the
/// expected replica count; constraints are normalization, per-state flow
/// balance (inflow equals outflow), and the availability floor over
/// states above the tolerance threshold. Nonnegativity is implicit in
/// the solver.
pub fn build_lp(cmdp: &SystemCmdp) -> LinearProgram {
    let n = cmdp.n_states();
    let n_vars = 2 * n;
    let var = |s: usize, a: usize| s * 2 + a;

    let mut objective = vec![0.0; n_vars];
    for s in 0..n {
        for a in 0..2 {
            objective[var(s, a)] = s as f64;
        }
    }

    let mut eq_constraints = Vec::with_capacity(n + 1);
    eq_constraints.push((vec![1.0; n_vars], 1.0));
    for s in 0..n {
        let mut row = vec![0.0; n_vars];
        for a in 0..2 {
            row[var(s, a)] += 1.0;
        }
        for s_prev in 0..n {
            for a in 0..2 {
                row[var(s_prev, a)] -= cmdp.transitions[s_prev][a][s];
            }
        }
        eq_constraints.push((row, 0.0));
    }

    let mut availability = vec![0.0; n_vars];
    for s in cmdp.tolerance + 1..n {
        for a in 0..2 {
            availability[var(s, a)] = 1.0;
        }
    }
    LinearProgram {
        objective,
        eq_constraints,
        ge_constraints: vec![(availability, cmdp.epsilon_a)],
    }
}

/// Solves the occupancy LP for a CMDP.
pub fn solve_occupancy(cmdp: &SystemCmdp) -> Result<(OccupancyMeasure, LpSolution), ReplicationError> {
    let lp = build_lp(cmdp);
    let solution = lp.solve()?;
    let n = cmdp.n_states();
    let mut rho = vec![[0.0; 2]; n];
    for s in 0..n {
        for a in 0..2 {
            rho[s][a] = solution.x[s * 2 + a].max(0.0);
        }
    }
    Ok((
        OccupancyMeasure {
            rho,
            objective: solution.objective,
        },
        solution,
    ))
}

/// Normalizes the occupancy measure into a strategy. States with zero
/// occupancy get the conservative default: add while at or below the
/// tolerance threshold.
pub fn extract_strategy(rho: &OccupancyMeasure, tolerance: usize) -> ReplicationStrategy {
    let pi = rho
        .rho
        .iter()
        .enumerate()
        .map(|(s, row)| {
            let total = row[0] + row[1];
            if total > 0.0 {
                [row[0] / total, row[1] / total]
            } else if s <= tolerance {
                [0.0, 1.0]
            } else {
                [1.0, 0.0]
            }
        })
        .collect();
    ReplicationStrategy { pi }
}

/// Structure verdict for a replication strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureReport {
    /// Whether the add-probability is non-increasing and takes at most
    /// the values `{1, q, 0}` with the interior value on one contiguous
    /// block.
    pub is_mixture: bool,
    /// Last state with add-probability 1 (lower threshold).
    pub beta1: Option<usize>,
    /// Last state with positive add-probability (upper threshold).
    pub beta2: Option<usize>,
    /// Interior mixing weight; 1 when the strategy is deterministic.
    pub kappa: f64,
    /// States where monotonicity or the three-value shape fails.
    pub violations: Vec<usize>,
}

const VALUE_SNAP: f64 = 1e-9;

/// Checks that a strategy is a mixture of two threshold rules: the
/// add-probability must be non-increasing in the state and take at most
/// three distinct values `1 >= q >= 0`, with the interior value confined
/// to one contiguous block.
pub fn verify_threshold_mixture(strategy: &ReplicationStrategy) -> MixtureReport {
    let probs: Vec<f64> = strategy.pi.iter().map(|row| row[1]).collect();
    let mut violations = Vec::new();

    for (s, pair) in probs.windows(2).enumerate() {
        if pair[1] > pair[0] + VALUE_SNAP {
            violations.push(s + 1);
        }
    }

    let mut interior_values = Vec::new();
    for (s, &p) in probs.iter().enumerate() {
        if p > VALUE_SNAP && p < 1.0 - VALUE_SNAP {
            interior_values.push((s, p));
        }
    }
    // All interior states must share one value and be contiguous.
    if let Some(&(first_state, first_value)) = interior_values.first() {
        for &(s, p) in &interior_values[1..] {
            if (p - first_value).abs() > VALUE_SNAP {
                violations.push(s);
            }
        }
        let last_state = interior_values.last().expect("nonempty").0;
        if last_state - first_state + 1 != interior_values.len() {
            violations.push(last_state);
        }
    }

    violations.sort_unstable();
    violations.dedup();

    let beta1 = probs.iter().rposition(|&p| p >= 1.0 - VALUE_SNAP);
    let beta2 = probs.iter().rposition(|&p| p > VALUE_SNAP);
    let kappa = interior_values.first().map_or(1.0, |&(_, q)| q);

    MixtureReport {
        is_mixture: violations.is_empty(),
        beta1,
        beta2,
        kappa,
        violations,
    }
}

/// Long-run availability of a strategy: the stationary mass of states
/// above the tolerance threshold in the induced chain.
pub fn stationary_availability(
    strategy: &ReplicationStrategy,
    cmdp: &SystemCmdp,
) -> Result<f64, ReplicationError> {
    let mu = stationary_distribution(strategy, cmdp)?;
    Ok(mu[cmdp.tolerance + 1..].iter().sum())
}

/// Stationary distribution of the strategy-induced chain, solved from
/// `mu P = mu`, `sum mu = 1`.
pub fn stationary_distribution(
    strategy: &ReplicationStrategy,
    cmdp: &SystemCmdp,
) -> Result<Vec<f64>, ReplicationError> {
    let n = cmdp.n_states();
    // Rows of (P' - I) with the last equation replaced by normalization.
    let mut matrix = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for s_next in 0..n - 1 {
        for s in 0..n {
            let p = strategy.pi[s][0] * cmdp.transitions[s][0][s_next]
                + strategy.pi[s][1] * cmdp.transitions[s][1][s_next];
            matrix[s_next][s] = p - if s == s_next { 1.0 } else { 0.0 };
        }
    }
    for s in 0..n {
        matrix[n - 1][s] = 1.0;
    }
    rhs[n - 1] = 1.0;
    let mu = solve_dense(matrix, rhs, 1e-12).map_err(|_| ReplicationError::SingularChain)?;
    Ok(mu.into_iter().map(|m| m.max(0.0)).collect())
}
