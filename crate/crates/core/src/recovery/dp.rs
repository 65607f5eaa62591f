//! Dynamic-programming oracle on a belief grid.
//!
//! Certifies the structure of optimal recovery strategies: backward
//! induction over one bounded-time-to-recovery period when the period is
//! finite, and relative value iteration for the long-run average cost
//! when it is not. The belief space is discretized on a uniform grid
//! with linear interpolation of continuation values.
//!
//! The oracle works on the crash-conditioned belief process (crashes are
//! observable and end a node's cost stream), so the one-step kernel is
//! the same two-state Bayes update used by the online filter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{node_transition_row, NodeAction, NodeParams, NodeState, ObservationModel};

#[derive(Debug, Error)]
pub enum DpError {
    #[error("grid size {0} below the minimum of 51")]
    GridTooSmall(usize),
    #[error("value iteration did not reach span {tolerance:.1e} after {sweeps} sweeps")]
    NoConvergence { sweeps: usize, tolerance: f64 },
    #[error("period must be at least 1")]
    ZeroPeriod,
}

/// Span tolerance for relative value iteration.
const RVI_SPAN_TOLERANCE: f64 = 1e-8;
/// Sweep cap for relative value iteration.
const RVI_MAX_SWEEPS: usize = 100_000;

/// Solution of the belief-grid dynamic program.
///
/// For a finite period `Δ`, `values[t-1]` and `policy[t-1]` cover the
/// in-period steps `t = 1..=Δ` (the final step is the forced recovery).
/// For the stationary problem both have a single entry and `gain` holds
/// the optimal long-run average cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpSolution {
    pub grid: Vec<f64>,
    pub delta_r: Option<u32>,
    pub values: Vec<Vec<f64>>,
    pub policy: Vec<Vec<NodeAction>>,
    /// Smallest grid belief where recovery is optimal, per step; 1.0 when
    /// recovery is never optimal on the grid.
    pub thresholds: Vec<f64>,
    /// Long-run average cost (stationary solution only).
    pub gain: Option<f64>,
    pub sweeps: usize,
}

impl DpSolution {
    /// Extracts the threshold strategy induced by the policy table.
    ///
    /// For a finite period the free steps `1..Δ` supply the thresholds;
    /// the forced final step is implicit in the strategy's period.
    pub fn strategy(&self) -> crate::recovery::ThresholdStrategy {
        let thetas = match self.delta_r {
            Some(period) => self.thresholds[..period as usize - 1].to_vec(),
            None => vec![self.thresholds[0]],
        };
        crate::recovery::ThresholdStrategy {
            delta_r: self.delta_r,
            thetas,
        }
    }
}

/// One-step expected-cost/transition kernel on the grid.
struct GridKernel {
    grid_size: usize,
    n_obs: usize,
    /// `P[o | alive]` per (grid point, observation).
    obs_prob: [Vec<f64>; 2],
    /// Next-belief interpolation: lower index and fraction per
    /// (grid point, observation).
    next_lower: [Vec<usize>; 2],
    next_frac: [Vec<f64>; 2],
    /// Immediate cost per (grid point, action).
    cost: [Vec<f64>; 2],
}

impl GridKernel {
    fn build(params: &NodeParams, obs: &ObservationModel, grid: &[f64]) -> Self {
        let grid_size = grid.len();
        let n_obs = obs.n_obs();
        let mut obs_prob = [vec![0.0; grid_size * n_obs], vec![0.0; grid_size * n_obs]];
        let mut next_lower = [vec![0usize; grid_size * n_obs], vec![0usize; grid_size * n_obs]];
        let mut next_frac = [vec![0.0; grid_size * n_obs], vec![0.0; grid_size * n_obs]];
        let mut cost = [vec![0.0; grid_size], vec![0.0; grid_size]];
        for (a_idx, action) in [NodeAction::Wait, NodeAction::Recover].into_iter().enumerate() {
            let from_h = node_transition_row(params, NodeState::Healthy, action);
            let from_c = node_transition_row(params, NodeState::Compromised, action);
            for (g, &b) in grid.iter().enumerate() {
                cost[a_idx][g] = match action {
                    NodeAction::Wait => params.eta * b,
                    NodeAction::Recover => 1.0,
                };
                // Live-state prediction, conditioned on not crashing.
                let w_h = (1.0 - b) * from_h[0] + b * from_c[0];
                let w_c = (1.0 - b) * from_h[1] + b * from_c[1];
                let live = w_h + w_c;
                let p_h = w_h / live;
                let p_c = w_c / live;
                for o in 0..n_obs {
                    let z_h = obs.healthy_row()[o];
                    let z_c = obs.compromised_row()[o];
                    let p_o = p_h * z_h + p_c * z_c;
                    let b_next = if p_o > 0.0 { p_c * z_c / p_o } else { 0.0 };
                    let position = b_next.clamp(0.0, 1.0) * (grid_size - 1) as f64;
                    let lower = (position.floor() as usize).min(grid_size - 2);
                    let idx = g * n_obs + o;
                    obs_prob[a_idx][idx] = p_o;
                    next_lower[a_idx][idx] = lower;
                    next_frac[a_idx][idx] = position - lower as f64;
                }
            }
        }
        Self {
            grid_size,
            n_obs,
            obs_prob,
            next_lower,
            next_frac,
            cost,
        }
    }

    /// `c(b, a) + Σ_o P[o] V(b'(o))` for every grid point.
    fn backup(&self, action: usize, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid_size];
        for g in 0..self.grid_size {
            let mut expectation = 0.0;
            let base = g * self.n_obs;
            for o in 0..self.n_obs {
                let idx = base + o;
                let lower = self.next_lower[action][idx];
                let frac = self.next_frac[action][idx];
                let interpolated = values[lower] * (1.0 - frac) + values[lower + 1] * frac;
                expectation += self.obs_prob[action][idx] * interpolated;
            }
            out[g] = self.cost[action][g] + expectation;
        }
        out
    }
}

/// Recovery is chosen only when strictly better: ties keep waiting, so
/// the threshold is the infimum of the strict recovery region.
fn greedy(q_wait: &[f64], q_recover: &[f64]) -> (Vec<f64>, Vec<NodeAction>) {
    q_wait
        .iter()
        .zip(q_recover)
        .map(|(&w, &r)| {
            if r < w {
                (r, NodeAction::Recover)
            } else {
                (w, NodeAction::Wait)
            }
        })
        .unzip()
}

fn threshold_of(policy: &[NodeAction], grid: &[f64]) -> f64 {
    policy
        .iter()
        .position(|&a| a == NodeAction::Recover)
        .map_or(1.0, |i| grid[i])
}

/// Solves the belief-grid dynamic program.
///
/// With a finite period: backward induction over one period with the
/// final action forced to recovery. Without one: relative value
/// iteration for the average-cost criterion, reference state at belief 0,
/// stopping when the Bellman-update span falls below `1e-8`.
pub fn dp_oracle(
    params: &NodeParams,
    obs: &ObservationModel,
    delta_r: Option<u32>,
    grid_size: usize,
) -> Result<DpSolution, DpError> {
    if grid_size < 51 {
        return Err(DpError::GridTooSmall(grid_size));
    }
    if delta_r == Some(0) {
        return Err(DpError::ZeroPeriod);
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect();
    let kernel = GridKernel::build(params, obs, &grid);

    match delta_r {
        Some(period) => {
            let period = period as usize;
            let mut values = vec![Vec::new(); period];
            let mut policy = vec![Vec::new(); period];
            let mut thresholds = vec![0.0; period];
            // Final step: forced recovery, empty continuation.
            let terminal = vec![0.0; grid_size];
            values[period - 1] = kernel.backup(1, &terminal);
            policy[period - 1] = vec![NodeAction::Recover; grid_size];
            thresholds[period - 1] = 0.0;
            for t in (0..period - 1).rev() {
                let q_wait = kernel.backup(0, &values[t + 1]);
                let q_recover = kernel.backup(1, &values[t + 1]);
                let (v, p) = greedy(&q_wait, &q_recover);
                thresholds[t] = threshold_of(&p, &grid);
                values[t] = v;
                policy[t] = p;
            }
            Ok(DpSolution {
                grid,
                delta_r,
                values,
                policy,
                thresholds,
                gain: None,
                sweeps: period,
            })
        }
        None => {
            let mut values = vec![0.0; grid_size];
            for sweep in 1..=RVI_MAX_SWEEPS {
                let q_wait = kernel.backup(0, &values);
                let q_recover = kernel.backup(1, &values);
                let (mut next, policy) = greedy(&q_wait, &q_recover);
                let mut min_diff = f64::INFINITY;
                let mut max_diff = f64::NEG_INFINITY;
                for (n, v) in next.iter().zip(&values) {
                    let d = n - v;
                    min_diff = min_diff.min(d);
                    max_diff = max_diff.max(d);
                }
                let reference = next[0];
                for v in &mut next {
                    *v -= reference;
                }
                if max_diff - min_diff < RVI_SPAN_TOLERANCE {
                    let gain = 0.5 * (max_diff + min_diff);
                    let threshold = threshold_of(&policy, &grid);
                    return Ok(DpSolution {
                        grid,
                        delta_r: None,
                        values: vec![next],
                        policy: vec![policy],
                        thresholds: vec![threshold],
                        gain: Some(gain),
                        sweeps: sweep,
                    });
                }
                values = next;
            }
            Err(DpError::NoConvergence {
                sweeps: RVI_MAX_SWEEPS,
                tolerance: RVI_SPAN_TOLERANCE,
            })
        }
    }
}

/// Structure verdict for one policy-table step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepStructure {
    /// 1-based in-period step.
    pub t: usize,
    /// Whether the recovery region is an upper interval of the grid.
    pub is_threshold: bool,
    /// Smallest grid belief where recovery is chosen (1.0 if never).
    pub alpha: f64,
    /// Grid indices breaking the upper-interval property.
    pub violations: Vec<usize>,
}

/// Structure verdict for a whole policy table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    pub steps: Vec<StepStructure>,
    /// Steps where `alpha` dropped by more than one grid cell within the
    /// period (finite-period tables only).
    pub monotonicity_violations: Vec<usize>,
}

impl StructureReport {
    pub fn all_threshold(&self) -> bool {
        self.steps.iter().all(|s| s.is_threshold)
    }

    pub fn thresholds_non_decreasing(&self) -> bool {
        self.monotonicity_violations.is_empty()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.alpha).collect()
    }
}

/// Checks that each step's recovery region is an upper interval
/// `[alpha_t, 1]` of the grid and, for finite-period tables, that the
/// extracted thresholds are non-decreasing in `t` up to one grid cell.
///
/// Falsified steps are reported, never raised.
pub fn verify_threshold_structure(
    policy: &[Vec<NodeAction>],
    grid: &[f64],
    check_monotone_period: bool,
) -> StructureReport {
    let steps: Vec<StepStructure> = policy
        .iter()
        .enumerate()
        .map(|(idx, row)| {
            let first = row.iter().position(|&a| a == NodeAction::Recover);
            let mut violations = Vec::new();
            if let Some(first) = first {
                for (g, &a) in row.iter().enumerate().skip(first) {
                    if a == NodeAction::Wait {
                        violations.push(g);
                    }
                }
            }
            StepStructure {
                t: idx + 1,
                is_threshold: violations.is_empty(),
                alpha: first.map_or(1.0, |i| grid[i]),
                violations,
            }
        })
        .collect();

    let mut monotonicity_violations = Vec::new();
    if check_monotone_period && grid.len() > 1 {
        let cell = grid[1] - grid[0];
        for pair in steps.windows(2) {
            if pair[1].alpha < pair[0].alpha - cell - 1e-12 {
                monotonicity_violations.push(pair[1].t);
            }
        }
    }
    StructureReport {
        steps,
        monotonicity_violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn defaults() -> (NodeParams, ObservationModel) {
        (presets::default_node_params(), presets::default_observation_model())
    }

    #[test]
    fn rejects_small_grid() {
        let (params, obs) = defaults();
        assert!(matches!(
            dp_oracle(&params, &obs, None, 50),
            Err(DpError::GridTooSmall(50))
        ));
    }

    #[test]
    fn stationary_solution_has_single_threshold_and_gain() {
        let (params, obs) = defaults();
        let solution = dp_oracle(&params, &obs, None, 201).unwrap();
        assert_eq!(solution.values.len(), 1);
        assert_eq!(solution.thresholds.len(), 1);
        let gain = solution.gain.unwrap();
        assert!(gain > 0.0 && gain < params.eta);
        let alpha = solution.thresholds[0];
        assert!((0.0..=1.0).contains(&alpha));
        // Strategy extraction round-trip.
        let strategy = solution.strategy();
        assert_eq!(strategy.delta_r, None);
        assert_eq!(strategy.thetas, vec![alpha]);
    }

    #[test]
    fn stationary_value_function_is_monotone_and_midpoint_concave() {
        let (params, obs) = defaults();
        let solution = dp_oracle(&params, &obs, None, 201).unwrap();
        let v = &solution.values[0];
        for w in v.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "value decreased in belief");
        }
        // Midpoint concavity on all evenly spaced grid triples, allowing
        // interpolation error of the order of one grid cell.
        let n = v.len();
        for i in 0..n {
            for k in (i + 2..n).step_by(2) {
                let mid = (i + k) / 2;
                assert!(
                    v[mid] >= 0.5 * (v[i] + v[k]) - 1e-6,
                    "concavity violated at ({i},{mid},{k})"
                );
            }
        }
    }

    #[test]
    fn periodic_solution_thresholds_rise_toward_deadline() {
        let (params, obs) = defaults();
        let solution = dp_oracle(&params, &obs, Some(20), 201).unwrap();
        assert_eq!(solution.values.len(), 20);
        // Forced final step recovers everywhere.
        assert!(solution.policy[19].iter().all(|&a| a == NodeAction::Recover));
        assert_eq!(solution.thresholds[19], 0.0);
        let report =
            verify_threshold_structure(&solution.policy[..19], &solution.grid, true);
        assert!(report.all_threshold());
        assert!(report.thresholds_non_decreasing());
        // The last free step demands more evidence than the first.
        assert!(solution.thresholds[18] >= solution.thresholds[0]);
    }

    #[test]
    fn stationary_policy_is_threshold_by_construction_check() {
        let (params, obs) = defaults();
        let solution = dp_oracle(&params, &obs, None, 201).unwrap();
        let report = verify_threshold_structure(&solution.policy, &solution.grid, false);
        assert!(report.all_threshold());
        assert_eq!(report.alphas(), solution.thresholds);
    }

    #[test]
    fn pathological_policy_is_rejected() {
        // Recover on an interior interval only.
        let grid: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let mut row = vec![NodeAction::Wait; 101];
        for g in 40..60 {
            row[g] = NodeAction::Recover;
        }
        let report = verify_threshold_structure(&[row], &grid, false);
        assert!(!report.all_threshold());
        assert!(!report.steps[0].violations.is_empty());
        assert_eq!(report.steps[0].alpha, 0.4);
    }

    #[test]
    fn oracle_threshold_beats_nearby_strategies_in_monte_carlo() {
        // DP optimality cross-check against the simulator: the oracle's
        // stationary threshold should be no worse (within noise) than a
        // coarse sweep of alternatives.
        let (params, obs) = defaults();
        let solution = dp_oracle(&params, &obs, None, 201).unwrap();
        let alpha = solution.thresholds[0];
        let objective = crate::recovery::RecoveryObjective {
            params,
            obs,
            horizon: 300,
            episodes: 1500,
            seed: 17,
        };
        let oracle_strategy = crate::recovery::ThresholdStrategy::stationary(alpha).unwrap();
        let oracle_estimate =
            crate::recovery::evaluate_objective(&oracle_strategy, &objective).unwrap();
        for theta in [0.05, 0.5, 0.76, 0.95] {
            let other = crate::recovery::ThresholdStrategy::stationary(theta).unwrap();
            let estimate = crate::recovery::evaluate_objective(&other, &objective).unwrap();
            let slack = 2.0 * (oracle_estimate.std_error + estimate.std_error);
            assert!(
                oracle_estimate.mean <= estimate.mean + slack,
                "oracle J {} worse than theta={theta} J {}",
                oracle_estimate.mean,
                estimate.mean
            );
        }
    }
}
