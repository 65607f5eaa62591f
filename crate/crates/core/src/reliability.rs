//! Markov-chain reliability analytics for the no-recovery regime: mean
//! time to failure, reliability curves, and closed-form node failure
//! curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{solve_dense, NumericError};

#[derive(Debug, Error)]
pub enum ReliabilityError {
    #[error("row {row} sums to {sum}, expected 1 within 1e-12")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("failure cutoff {cutoff} must leave at least one operational state (n = {n})")]
    BadFailureSet { cutoff: usize, n: usize },
    #[error("initial state {0} out of range")]
    BadInitialState(usize),
    #[error("probability {0} outside [0, 1)")]
    BadProbability(f64),
    #[error("chain needs at least one state")]
    Empty,
    #[error("linear system singular on the reachable transient block: {0}")]
    Singular(NumericError),
}

/// Markov chain over `{0..N}` with the failure set `{0..=failure_cutoff}`
/// and a designated initial state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityChain {
    pub transition: Vec<Vec<f64>>,
    /// States `0..=failure_cutoff` count as failed.
    pub failure_cutoff: usize,
    pub initial: usize,
}

impl ReliabilityChain {
    pub fn new(
        transition: Vec<Vec<f64>>,
        failure_cutoff: usize,
        initial: usize,
    ) -> Result<Self, ReliabilityError> {
        let n = transition.len();
        if n == 0 {
            return Err(ReliabilityError::Empty);
        }
        for (row_idx, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(ReliabilityError::RowNotStochastic {
                    row: row_idx,
                    sum: f64::NAN,
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ReliabilityError::RowNotStochastic { row: row_idx, sum });
            }
        }
        if failure_cutoff + 1 >= n {
            return Err(ReliabilityError::BadFailureSet {
                cutoff: failure_cutoff,
                n,
            });
        }
        if initial >= n {
            return Err(ReliabilityError::BadInitialState(initial));
        }
        Ok(Self {
            transition,
            failure_cutoff,
            initial,
        })
    }

    fn is_failure(&self, state: usize) -> bool {
        state <= self.failure_cutoff
    }
}

/// Mean hitting time of the failure set from the initial state.
///
/// Solves `E[T|s] = 1 + Σ_{s'∉F} P(s,s') E[T|s']` on the transient block
/// by Gaussian elimination with partial pivoting. Returns `+∞` when the
/// chain can avoid the failure set forever with positive probability
/// (the transient block is then not substochastic-convergent, which is
/// detected structurally before the elimination); a singular system on a
/// genuinely convergent block is reported as an error instead.
pub fn mttf(chain: &ReliabilityChain) -> Result<f64, ReliabilityError> {
    if chain.is_failure(chain.initial) {
        return Ok(0.0);
    }
    let n = chain.transition.len();
    let operational: Vec<usize> = (0..n).filter(|&s| !chain.is_failure(s)).collect();

    // States that can reach the failure set; if anything reachable from
    // the start cannot, the hitting time is infinite with positive
    // probability, hence infinite in expectation.
    let mut can_fail = vec![false; n];
    for s in 0..n {
        can_fail[s] = chain.is_failure(s)
            || chain.transition[s]
                .iter()
                .enumerate()
                .any(|(s_next, &p)| p > 0.0 && chain.is_failure(s_next));
    }
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can_fail[s]
                && chain.transition[s]
                    .iter()
                    .enumerate()
                    .any(|(s_next, &p)| p > 0.0 && can_fail[s_next])
            {
                can_fail[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut reachable = vec![false; n];
    reachable[chain.initial] = true;
    loop {
        let mut changed = false;
        for s in 0..n {
            if reachable[s] && !chain.is_failure(s) {
                for (s_next, &p) in chain.transition[s].iter().enumerate() {
                    if p > 0.0 && !reachable[s_next] {
                        reachable[s_next] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    if (0..n).any(|s| reachable[s] && !can_fail[s]) {
        return Ok(f64::INFINITY);
    }

    let index: std::collections::HashMap<usize, usize> = operational
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();
    let m = operational.len();
    let mut matrix = vec![vec![0.0; m]; m];
    let mut rhs = vec![1.0; m];
    for (i, &s) in operational.iter().enumerate() {
        matrix[i][i] = 1.0;
        for (s_next, &p) in chain.transition[s].iter().enumerate() {
            if !chain.is_failure(s_next) {
                matrix[i][index[&s_next]] -= p;
            }
        }
    }
    let expected = solve_dense(matrix, rhs.drain(..).collect(), 1e-12)
        .map_err(ReliabilityError::Singular)?;
    Ok(expected[index[&chain.initial]])
}

/// Reliability curve `R(1..=horizon)`: the probability that the failure
/// set has not been hit by time `t`.
///
/// Failure states are made absorbing before powering, exactly matching
/// the no-recovery regime, and the powers are accumulated as iterated
/// vector-matrix products so every intermediate `R(t)` is produced.
/// `R(0) = 1` is the implicit prefix when the initial state is
/// operational.
pub fn reliability_curve(chain: &ReliabilityChain, horizon: usize) -> Vec<f64> {
    let n = chain.transition.len();
    let mut absorbing = chain.transition.clone();
    for s in 0..n {
        if chain.is_failure(s) {
            for (s_next, p) in absorbing[s].iter_mut().enumerate() {
                *p = if s_next == s { 1.0 } else { 0.0 };
            }
        }
    }
    let mut distribution = vec![0.0; n];
    distribution[chain.initial] = 1.0;
    let mut curve = Vec::with_capacity(horizon);
    for _ in 1..=horizon {
        let mut next = vec![0.0; n];
        for (s, &mass) in distribution.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (s_next, &p) in absorbing[s].iter().enumerate() {
                next[s_next] += mass * p;
            }
        }
        distribution = next;
        let survival: f64 = (0..n)
            .filter(|&s| !chain.is_failure(s))
            .map(|s| distribution[s])
            .sum();
        curve.push(survival);
    }
    curve
}

/// Probability that a node is compromised or crashed by each step
/// `t = 1..=horizon` when no recoveries occur: `1 − ((1−p_A)(1−p_C1))^t`.
pub fn no_recovery_failure_curve(
    p_attack: f64,
    p_crash_healthy: f64,
    horizon: usize,
) -> Result<Vec<f64>, ReliabilityError> {
    for p in [p_attack, p_crash_healthy] {
        if !(0.0..1.0).contains(&p) {
            return Err(ReliabilityError::BadProbability(p));
        }
    }
    let survival = (1.0 - p_attack) * (1.0 - p_crash_healthy);
    Ok((1..=horizon)
        .map(|t| 1.0 - survival.powi(t as i32))
        .collect())
}

/// Binomial-thinning chain for a system of `n` nodes where each healthy
/// node independently survives one step with probability `q`:
/// `P(s -> s') = C(s, s') q^{s'} (1-q)^{s-s'}` for `s' <= s`.
pub fn build_no_recovery_system_chain(
    n: usize,
    q: f64,
    failure_cutoff: usize,
    initial: usize,
) -> Result<ReliabilityChain, ReliabilityError> {
    if n < 1 {
        return Err(ReliabilityError::Empty);
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(ReliabilityError::BadProbability(q));
    }
    let size = n + 1;
    let mut transition = vec![vec![0.0; size]; size];
    for s in 0..size {
        for s_next in 0..=s {
            transition[s][s_next] =
                binomial(s, s_next) * q.powi(s_next as i32) * (1.0 - q).powi((s - s_next) as i32);
        }
        if q == 1.0 {
            // powi(0^0) conventions: survival certain, stay in place.
            for v in transition[s].iter_mut() {
                *v = 0.0;
            }
            transition[s][s] = 1.0;
        }
        let sum: f64 = transition[s].iter().sum();
        for v in transition[s].iter_mut() {
            *v /= sum;
        }
    }
    ReliabilityChain::new(transition, failure_cutoff, initial)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut result = 1.0;
    for i in 0..k {
        result = result * (n - i) as f64 / (i + 1) as f64;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    /// Two-state chain: state 1 operational, falls to state 0 with
    /// probability p per step.
    fn single_transient(p: f64) -> ReliabilityChain {
        ReliabilityChain::new(
            vec![vec![1.0, 0.0], vec![p, 1.0 - p]],
            0,
            1,
        )
        .unwrap()
    }

    #[test]
    fn mttf_zero_from_failure_state() {
        let mut chain = single_transient(0.1);
        chain.initial = 0;
        assert_eq!(mttf(&chain).unwrap(), 0.0);
    }

    #[test]
    fn mttf_geometric_mean() {
        let chain = single_transient(0.1);
        assert_abs_diff_eq!(mttf(&chain).unwrap(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn mttf_infinite_when_failure_unreachable() {
        // State 2 is absorbing and operational.
        let chain = ReliabilityChain::new(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.1, 0.5, 0.4],
                vec![0.0, 0.0, 1.0],
            ],
            0,
            1,
        )
        .unwrap();
        assert_eq!(mttf(&chain).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mttf_matches_monte_carlo_on_binomial_chain() {
        let chain = build_no_recovery_system_chain(3, 0.95, 1, 3).unwrap();
        let analytic = mttf(&chain).unwrap();
        let mut rng = crate::rng::stream_rng(0, &[crate::rng::streams::RELIABILITY_MC]);
        let episodes = 100_000;
        let mut total = 0.0;
        for _ in 0..episodes {
            let mut state = 3usize;
            let mut steps = 0u64;
            while state > 1 {
                steps += 1;
                let draw: f64 = rng.random();
                let mut cumulative = 0.0;
                for (s_next, &p) in chain.transition[state].iter().enumerate() {
                    cumulative += p;
                    if draw < cumulative {
                        state = s_next;
                        break;
                    }
                }
            }
            total += steps as f64;
        }
        let empirical = total / episodes as f64;
        let relative = (empirical - analytic).abs() / analytic;
        assert!(relative < 0.02, "MC {empirical} vs analytic {analytic}");
    }

    #[test]
    fn reliability_curve_closed_form() {
        let chain = single_transient(0.1);
        let curve = reliability_curve(&chain, 10);
        for (t, &r) in curve.iter().enumerate() {
            assert_abs_diff_eq!(r, 0.9f64.powi(t as i32 + 1), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(curve[9], 0.34867844, epsilon = 1e-8);
    }

    #[test]
    fn reliability_curve_non_increasing_on_random_chains() {
        let mut rng = crate::rng::stream_rng(5, &[77]);
        for _ in 0..1000 {
            let n = rng.random_range(2..6usize);
            let transition: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-9).collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / sum).collect()
                })
                .collect();
            let chain = ReliabilityChain::new(transition, 0, n - 1).unwrap();
            let curve = reliability_curve(&chain, 30);
            for w in curve.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn mttf_equals_reliability_sum() {
        // Discrete identity: MTTF = Σ_{t>=0} R(t), summed until R < 1e-6.
        let chain = build_no_recovery_system_chain(4, 0.9, 1, 4).unwrap();
        let analytic = mttf(&chain).unwrap();
        let mut horizon = 64;
        let curve = loop {
            let curve = reliability_curve(&chain, horizon);
            if *curve.last().unwrap() < 1e-6 {
                break curve;
            }
            horizon *= 2;
            assert!(horizon <= 1 << 20, "curve did not decay");
        };
        let truncated: f64 = 1.0 + curve.iter().take_while(|&&r| r >= 1e-6).sum::<f64>();
        let relative = (truncated - analytic).abs() / analytic;
        assert!(relative < 0.01, "sum {truncated} vs mttf {analytic}");
    }

    #[test]
    fn failure_curve_closed_forms() {
        assert!(no_recovery_failure_curve(0.0, 0.0, 10)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let curve = no_recovery_failure_curve(0.1, 0.0, 10).unwrap();
        assert_abs_diff_eq!(curve[9], 0.651322, epsilon = 1e-6);
        let curve = no_recovery_failure_curve(0.01, 0.0, 100).unwrap();
        assert_abs_diff_eq!(curve[99], 0.63397, epsilon = 1e-5);
        assert!(no_recovery_failure_curve(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn binomial_chain_rows() {
        let chain = build_no_recovery_system_chain(2, 0.5, 0, 2).unwrap();
        assert_abs_diff_eq!(chain.transition[2][0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(chain.transition[2][1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(chain.transition[2][2], 0.25, epsilon = 1e-12);

        let identity = build_no_recovery_system_chain(3, 1.0, 0, 3).unwrap();
        for (s, row) in identity.transition.iter().enumerate() {
            for (s_next, &p) in row.iter().enumerate() {
                assert_eq!(p, if s == s_next { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn mttf_strictly_increases_with_system_size() {
        let mut previous = 0.0;
        for n in 3..=10 {
            let chain = build_no_recovery_system_chain(n, 0.95, 1, n).unwrap();
            let value = mttf(&chain).unwrap();
            assert!(value > previous, "n={n}: {value} <= {previous}");
            previous = value;
        }
    }

    #[test]
    fn mttf_invariant_under_transient_row_permutation() {
        // Relabeling operational states must not change the answer.
        let chain = ReliabilityChain::new(
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.2, 0.5, 0.2, 0.1],
                vec![0.1, 0.3, 0.4, 0.2],
                vec![0.05, 0.15, 0.3, 0.5],
            ],
            0,
            3,
        )
        .unwrap();
        let base = mttf(&chain).unwrap();
        // Swap states 1 and 2 consistently (rows, columns, initial label).
        let p = &chain.transition;
        let relabel = |s: usize| match s {
            1 => 2,
            2 => 1,
            other => other,
        };
        let mut permuted = vec![vec![0.0; 4]; 4];
        for s in 0..4 {
            for s_next in 0..4 {
                permuted[relabel(s)][relabel(s_next)] = p[s][s_next];
            }
        }
        let chain2 = ReliabilityChain::new(permuted, 0, 3).unwrap();
        let swapped = mttf(&chain2).unwrap();
        assert!((base - swapped).abs() / base <= 1e-9);
    }
}
