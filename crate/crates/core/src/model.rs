//! Node-level stochastic model: states, recovery dynamics, observation
//! channels, per-step cost, and the structural assumptions under which
//! threshold recovery strategies are optimal.
//!
//! A node is healthy (`ℍ`), compromised (`ℂ`), or crashed. Every step an
//! attacker compromises a healthy node with probability `p_A`, a healthy
//! node crashes with probability `p_C1`, a compromised node crashes with
//! probability `p_C2`, and a compromised node is silently cured by a
//! software update with probability `p_U`. Recovery (`ℜ`) restores a
//! compromised node but costs as much as recovering a healthy one; the
//! weight `η ≥ 1` prices a compromised-and-waiting step against a
//! recovery.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value} outside {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("observation row {row} sums to {sum}, expected 1 within 1e-12")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("observation matrix entry ({row},{col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("observation matrix must have 2 rows of equal positive length")]
    BadShape,
    #[error("cost is undefined for a crashed node")]
    CrashedCost,
    #[error("distributions have different supports ({0} vs {1})")]
    SupportMismatch(usize, usize),
    #[error("q({index}) = 0 where p({index}) = {p} > 0: divergence is infinite")]
    AbsoluteContinuity { index: usize, p: f64 },
}

/// Node state. The numeric codes of `Healthy` and `Compromised` are used
/// arithmetically by the cost function and must stay 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Healthy = 0,
    Compromised = 1,
    Crashed = 2,
}

impl NodeState {
    /// 0 for healthy, 1 for compromised; crashed nodes have no cost code.
    pub fn cost_code(self) -> Option<f64> {
        match self {
            NodeState::Healthy => Some(0.0),
            NodeState::Compromised => Some(1.0),
            NodeState::Crashed => None,
        }
    }
}

/// Node action: wait (`𝔚` = 0) or recover (`ℜ` = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeAction {
    Wait = 0,
    Recover = 1,
}

impl NodeAction {
    pub fn cost_code(self) -> f64 {
        match self {
            NodeAction::Wait => 0.0,
            NodeAction::Recover => 1.0,
        }
    }
}

/// Per-node failure, intrusion, and update probabilities plus the cost
/// weight `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    /// Probability the attacker compromises the node in one step.
    #[serde(rename = "p_A")]
    pub p_attack: f64,
    /// Probability a healthy node crashes in one step.
    #[serde(rename = "p_C1")]
    pub p_crash_healthy: f64,
    /// Probability a compromised node crashes in one step.
    #[serde(rename = "p_C2")]
    pub p_crash_compromised: f64,
    /// Probability a software update cures a compromised node in one step.
    #[serde(rename = "p_U")]
    pub p_update: f64,
    /// Cost weight of a compromised-and-waiting step relative to a recovery.
    #[serde(rename = "eta")]
    pub eta: f64,
}

impl NodeParams {
    pub fn new(
        p_attack: f64,
        p_crash_healthy: f64,
        p_crash_compromised: f64,
        p_update: f64,
        eta: f64,
    ) -> Result<Self, ModelError> {
        let params = Self {
            p_attack,
            p_crash_healthy,
            p_crash_compromised,
            p_update,
            eta,
        };
        params.validate()?;
        Ok(params)
    }

    /// Basic validity: probabilities in `[0, 1]`, `eta >= 1`.
    ///
    /// The strict interior condition required by the threshold-optimality
    /// theorem is checked separately by [`check_thm1_assumptions`].
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("p_A", self.p_attack),
            ("p_C1", self.p_crash_healthy),
            ("p_C2", self.p_crash_compromised),
            ("p_U", self.p_update),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ModelError::ParameterRange {
                    name,
                    value,
                    range: "[0, 1]",
                });
            }
        }
        if !(self.eta >= 1.0) {
            return Err(ModelError::ParameterRange {
                name: "eta",
                value: self.eta,
                range: "[1, inf)",
            });
        }
        Ok(())
    }
}

/// Transition probabilities from `(state, action)` over
/// `(Healthy, Compromised, Crashed)`.
///
/// Crashing is action-independent and `Crashed` is absorbing. Recovery
/// from a compromised node behaves like restarting a fresh node: it is
/// re-compromised within the same step with probability `p_A`.
pub fn node_transition_row(params: &NodeParams, state: NodeState, action: NodeAction) -> [f64; 3] {
    let p_a = params.p_attack;
    let p_c1 = params.p_crash_healthy;
    let p_c2 = params.p_crash_compromised;
    let p_u = params.p_update;
    match (state, action) {
        (NodeState::Crashed, _) => [0.0, 0.0, 1.0],
        (NodeState::Healthy, _) => [(1.0 - p_a) * (1.0 - p_c1), (1.0 - p_c1) * p_a, p_c1],
        (NodeState::Compromised, NodeAction::Recover) => {
            [(1.0 - p_a) * (1.0 - p_c2), (1.0 - p_c2) * p_a, p_c2]
        }
        (NodeState::Compromised, NodeAction::Wait) => {
            [(1.0 - p_c2) * p_u, (1.0 - p_c2) * (1.0 - p_u), p_c2]
        }
    }
}

/// Per-step cost `eta·s − a·eta·s + a` with `s ∈ {0, 1}` and `a ∈ {0, 1}`.
///
/// Crashed nodes exit the cost stream and are rejected.
pub fn node_cost(state: NodeState, action: NodeAction, eta: f64) -> Result<f64, ModelError> {
    let s = state.cost_code().ok_or(ModelError::CrashedCost)?;
    let a = action.cost_code();
    Ok(eta * s - a * eta * s + a)
}

/// Row-stochastic observation matrix over a finite alert-count space.
///
/// Row 0 is the healthy-state distribution, row 1 the compromised-state
/// distribution. Crashed nodes emit nothing: a crash is directly
/// observable because the node stops reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    rows: [Vec<f64>; 2],
}

impl ObservationModel {
    /// Builds a model from explicit healthy/compromised rows.
    pub fn from_rows(healthy: Vec<f64>, compromised: Vec<f64>) -> Result<Self, ModelError> {
        if healthy.is_empty() || healthy.len() != compromised.len() {
            return Err(ModelError::BadShape);
        }
        let rows = [healthy, compromised];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(ModelError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ModelError::RowNotStochastic { row: i, sum });
            }
        }
        Ok(Self { rows })
    }

    /// Beta-Binomial observation channels on support `{0..n}`.
    ///
    /// The healthy row uses shapes `(alpha_h, beta_h)`, the compromised
    /// row `(alpha_c, beta_c)`. Shapes must be strictly positive.
    pub fn beta_binomial(
        n: usize,
        alpha_h: f64,
        beta_h: f64,
        alpha_c: f64,
        beta_c: f64,
    ) -> Result<Self, ModelError> {
        if n < 1 {
            return Err(ModelError::ParameterRange {
                name: "n",
                value: n as f64,
                range: "[1, inf)",
            });
        }
        for (name, value) in [
            ("alpha_h", alpha_h),
            ("beta_h", beta_h),
            ("alpha_c", alpha_c),
            ("beta_c", beta_c),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::ParameterRange {
                    name,
                    value,
                    range: "(0, inf)",
                });
            }
        }
        Self::from_rows(
            beta_binomial_pmf(n, alpha_h, beta_h),
            beta_binomial_pmf(n, alpha_c, beta_c),
        )
    }

    /// Number of observation symbols.
    pub fn n_obs(&self) -> usize {
        self.rows[0].len()
    }

    /// `P[o | state]` for a live state.
    pub fn likelihood(&self, state: NodeState, obs: usize) -> f64 {
        let row = match state {
            NodeState::Healthy => &self.rows[0],
            NodeState::Compromised => &self.rows[1],
            NodeState::Crashed => return 0.0,
        };
        row[obs]
    }

    pub fn healthy_row(&self) -> &[f64] {
        &self.rows[0]
    }

    pub fn compromised_row(&self) -> &[f64] {
        &self.rows[1]
    }

    /// Mean observation under the healthy row.
    pub fn healthy_mean(&self) -> f64 {
        self.rows[0]
            .iter()
            .enumerate()
            .map(|(o, p)| o as f64 * p)
            .sum()
    }
}

/// Beta-Binomial PMF on `{0..n}` computed through log-gamma, so large `n`
/// does not overflow.
pub fn beta_binomial_pmf(n: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let n_f = n as f64;
    let log_norm = ln_gamma(n_f + 1.0) + ln_gamma(alpha + beta) - ln_gamma(alpha) - ln_gamma(beta)
        - ln_gamma(n_f + alpha + beta);
    let mut pmf: Vec<f64> = (0..=n)
        .map(|k| {
            let k_f = k as f64;
            (log_norm - ln_gamma(k_f + 1.0) - ln_gamma(n_f - k_f + 1.0)
                + ln_gamma(k_f + alpha)
                + ln_gamma(n_f - k_f + beta))
            .exp()
        })
        .collect();
    let total: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= total;
    }
    pmf
}

/// Kullback-Leibler divergence `Σ p·ln(p/q)` in nats, with `0·ln(0/q) = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, ModelError> {
    if p.len() != q.len() {
        return Err(ModelError::SupportMismatch(p.len(), q.len()));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(ModelError::AbsoluteContinuity { index: i, p: pi });
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total)
}

/// Which of the five structural assumptions behind threshold optimality
/// hold for a given model.
///
/// The report is descriptive: solvers run regardless, but the threshold
/// shape of the optimal strategy is only guaranteed when all five hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm1Report {
    /// (A) all four probabilities strictly inside (0, 1).
    pub probabilities_interior: bool,
    /// (B) `p_A + p_U <= 1`.
    pub attack_update_sum: bool,
    /// (C) `p_C1(p_U−1) / (p_A(p_C1−1) + p_C1(p_U−1)) <= p_C2`.
    pub crash_ordering: bool,
    /// (D) every observation likelihood strictly positive.
    pub observations_positive: bool,
    /// (E) the observation matrix restricted to live states is TP-2:
    /// every 2×2 minor is nonnegative.
    pub observation_tp2: bool,
}

impl Thm1Report {
    pub fn all_hold(&self) -> bool {
        self.probabilities_interior
            && self.attack_update_sum
            && self.crash_ordering
            && self.observations_positive
            && self.observation_tp2
    }
}

/// Evaluates assumptions (A)–(E) for the threshold-optimality theorem.
pub fn check_thm1_assumptions(params: &NodeParams, obs: &ObservationModel) -> Thm1Report {
    let interior = [
        params.p_attack,
        params.p_crash_healthy,
        params.p_crash_compromised,
        params.p_update,
    ]
    .iter()
    .all(|&p| p > 0.0 && p < 1.0);

    let sum_ok = params.p_attack + params.p_update <= 1.0;

    let numerator = params.p_crash_healthy * (params.p_update - 1.0);
    let denominator = params.p_attack * (params.p_crash_healthy - 1.0) + numerator;
    let crash_ordering = if denominator == 0.0 {
        false
    } else {
        numerator / denominator <= params.p_crash_compromised
    };

    let positive = obs
        .healthy_row()
        .iter()
        .chain(obs.compromised_row())
        .all(|&z| z > 0.0);

    let h = obs.healthy_row();
    let c = obs.compromised_row();
    let mut tp2 = true;
    'outer: for o in 0..obs.n_obs() {
        for o_prime in o + 1..obs.n_obs() {
            if h[o] * c[o_prime] - h[o_prime] * c[o] < 0.0 {
                tp2 = false;
                break 'outer;
            }
        }
    }

    Thm1Report {
        probabilities_interior: interior,
        attack_update_sum: sum_ok,
        crash_ordering,
        observations_positive: positive,
        observation_tp2: tp2,
    }
}

/// A node model bundle as serialized in experiment configurations:
/// the scalar parameters plus an observation block that is either a
/// Beta-Binomial specification or an explicit matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeModelConfig {
    #[serde(flatten)]
    pub params: NodeParams,
    pub obs: ObservationSpec,
}

/// Observation block of a node-model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservationSpec {
    BetaBinomial {
        n: usize,
        alpha_h: f64,
        beta_h: f64,
        alpha_c: f64,
        beta_c: f64,
    },
    Matrix {
        matrix: Vec<Vec<f64>>,
    },
}

impl ObservationSpec {
    pub fn build(&self) -> Result<ObservationModel, ModelError> {
        match self {
            ObservationSpec::BetaBinomial {
                n,
                alpha_h,
                beta_h,
                alpha_c,
                beta_c,
            } => ObservationModel::beta_binomial(*n, *alpha_h, *beta_h, *alpha_c, *beta_c),
            ObservationSpec::Matrix { matrix } => {
                if matrix.len() != 2 {
                    return Err(ModelError::BadShape);
                }
                ObservationModel::from_rows(matrix[0].clone(), matrix[1].clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn crashed_is_absorbing_for_both_actions() {
        let params = presets::default_node_params();
        for action in [NodeAction::Wait, NodeAction::Recover] {
            assert_eq!(
                node_transition_row(&params, NodeState::Crashed, action),
                [0.0, 0.0, 1.0]
            );
        }
    }

    #[test]
    fn transition_examples_by_hand() {
        // Compromised + wait: P(healthy) = (1 - p_C2) * p_U.
        let params = NodeParams::new(0.1, 1e-5, 1e-3, 0.02, 2.0).unwrap();
        let row = node_transition_row(&params, NodeState::Compromised, NodeAction::Wait);
        assert_abs_diff_eq!(row[0], (1.0 - 1e-3) * 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(row[0], 0.01998, epsilon = 1e-15);

        // Healthy + wait: P(compromised) = (1 - p_C1) * p_A.
        let row = node_transition_row(&params, NodeState::Healthy, NodeAction::Wait);
        assert_abs_diff_eq!(row[1], (1.0 - 1e-5) * 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(row[1], 0.0999990, epsilon = 1e-12);
    }

    #[test]
    fn transition_rows_sum_to_one_over_random_draws() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(7, &[99]);
        for _ in 0..10_000 {
            let params = NodeParams {
                p_attack: rng.random::<f64>(),
                p_crash_healthy: rng.random::<f64>(),
                p_crash_compromised: rng.random::<f64>(),
                p_update: rng.random::<f64>(),
                eta: 1.0 + rng.random::<f64>(),
            };
            for state in [NodeState::Healthy, NodeState::Compromised, NodeState::Crashed] {
                for action in [NodeAction::Wait, NodeAction::Recover] {
                    let row = node_transition_row(&params, state, action);
                    let sum: f64 = row.iter().sum();
                    assert!((sum - 1.0).abs() < 1e-12, "row sum {sum} for {state:?}/{action:?}");
                    assert!(row.iter().all(|&p| p >= 0.0));
                }
            }
        }
    }

    #[test]
    fn cost_table_is_exact_for_all_pairs() {
        for eta in [1.0, 1.5, 2.0, 10.0] {
            assert_eq!(node_cost(NodeState::Healthy, NodeAction::Wait, eta).unwrap(), 0.0);
            assert_eq!(node_cost(NodeState::Healthy, NodeAction::Recover, eta).unwrap(), 1.0);
            assert_eq!(node_cost(NodeState::Compromised, NodeAction::Recover, eta).unwrap(), 1.0);
            assert_eq!(node_cost(NodeState::Compromised, NodeAction::Wait, eta).unwrap(), eta);
        }
        assert!(matches!(
            node_cost(NodeState::Crashed, NodeAction::Wait, 2.0),
            Err(ModelError::CrashedCost)
        ));
    }

    #[test]
    fn beta_binomial_uniform_for_unit_shapes() {
        let model = ObservationModel::beta_binomial(10, 1.0, 1.0, 1.0, 1.0).unwrap();
        for row in [model.healthy_row(), model.compromised_row()] {
            for &p in row {
                assert_abs_diff_eq!(p, 1.0 / 11.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn beta_binomial_rejects_nonpositive_shapes() {
        assert!(ObservationModel::beta_binomial(10, 0.0, 3.0, 1.0, 0.7).is_err());
        assert!(ObservationModel::beta_binomial(10, 0.7, -1.0, 1.0, 0.7).is_err());
    }

    #[test]
    fn beta_binomial_large_n_stays_normalized() {
        let pmf = beta_binomial_pmf(1000, 0.7, 3.0);
        let sum: f64 = pmf.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(pmf.iter().all(|&p| p.is_finite() && p >= 0.0));
    }

    #[test]
    fn default_compromised_row_stochastically_dominates_healthy_row() {
        // Independent PMF evaluation: compare CDFs at every symbol.
        let model = presets::default_observation_model();
        let mut cdf_h = 0.0;
        let mut cdf_c = 0.0;
        for o in 0..model.n_obs() {
            cdf_h += model.healthy_row()[o];
            cdf_c += model.compromised_row()[o];
            assert!(
                cdf_c <= cdf_h + 1e-12,
                "dominance violated at o={o}: {cdf_c} > {cdf_h}"
            );
        }
    }

    #[test]
    fn default_pair_has_monotone_likelihood_ratio() {
        let model = presets::default_observation_model();
        let mut prev = 0.0;
        for o in 0..model.n_obs() {
            let ratio = model.compromised_row()[o] / model.healthy_row()[o];
            assert!(ratio >= prev, "likelihood ratio decreased at o={o}");
            prev = ratio;
        }
    }

    #[test]
    fn kl_divergence_hand_value_and_asymmetry() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let forward = kl_divergence(&p, &q).unwrap();
        let expected = 0.5 * 2.0f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert_abs_diff_eq!(forward, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(forward, 0.143841, epsilon = 1e-6);
        let backward = kl_divergence(&q, &p).unwrap();
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn kl_divergence_error_paths() {
        assert!(matches!(
            kl_divergence(&[1.0], &[0.5, 0.5]),
            Err(ModelError::SupportMismatch(1, 2))
        ));
        assert!(matches!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]),
            Err(ModelError::AbsoluteContinuity { index: 1, .. })
        ));
        // 0 * ln(0/q) = 0: zero mass in p is fine.
        assert_abs_diff_eq!(
            kl_divergence(&[0.0, 1.0], &[0.5, 0.5]).unwrap(),
            2.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn thm1_report_on_default_parameters() {
        let params = presets::default_node_params();
        let obs = presets::default_observation_model();
        let report = check_thm1_assumptions(&params, &obs);
        assert!(report.probabilities_interior);
        assert!(report.attack_update_sum);
        // Evaluate (C) numerically rather than assuming: the closed form
        // gives 9.799e-5 <= 1e-3 for the default parameters.
        let lhs = 1e-5 * (0.02 - 1.0) / (0.1 * (1e-5 - 1.0) + 1e-5 * (0.02 - 1.0));
        assert!(lhs <= 1e-3);
        assert!(report.crash_ordering);
        assert!(report.observations_positive);
        assert!(report.observation_tp2);
        assert!(report.all_hold());
    }

    #[test]
    fn thm1_boundary_violation_and_equal_rows() {
        let mut params = presets::default_node_params();
        params.p_attack = 0.0;
        let obs = presets::default_observation_model();
        let report = check_thm1_assumptions(&params, &obs);
        assert!(!report.probabilities_interior);

        let row = beta_binomial_pmf(10, 0.7, 3.0);
        let equal = ObservationModel::from_rows(row.clone(), row).unwrap();
        let report = check_thm1_assumptions(&presets::default_node_params(), &equal);
        assert!(report.observation_tp2, "equal rows have all minors exactly 0");
    }

    #[test]
    fn node_model_config_round_trips_both_obs_forms() {
        let doc = r#"{
            "p_A": 0.1, "p_C1": 1e-5, "p_C2": 1e-3, "p_U": 0.02, "eta": 2.0,
            "obs": {"n": 10, "alpha_h": 0.7, "beta_h": 3.0, "alpha_c": 1.0, "beta_c": 0.7}
        }"#;
        let config: NodeModelConfig = serde_json::from_str(doc).unwrap();
        let model = config.obs.build().unwrap();
        assert_eq!(model.n_obs(), 11);
        assert_eq!(config.params.eta, 2.0);

        let doc = r#"{
            "p_A": 0.1, "p_C1": 1e-5, "p_C2": 1e-3, "p_U": 0.02, "eta": 2.0,
            "obs": {"matrix": [[0.5, 0.5], [0.25, 0.75]]}
        }"#;
        let config: NodeModelConfig = serde_json::from_str(doc).unwrap();
        let model = config.obs.build().unwrap();
        assert_eq!(model.n_obs(), 2);
        let serialized = serde_json::to_string(&config).unwrap();
        let back: NodeModelConfig = serde_json::from_str(&serialized).unwrap();
        assert_eq!(back.obs.build().unwrap(), model);
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_iff_equal(
            raw_p in proptest::collection::vec(1e-3..1.0f64, 2..12),
            raw_q in proptest::collection::vec(1e-3..1.0f64, 2..12),
        ) {
            let n = raw_p.len().min(raw_q.len());
            let sum_p: f64 = raw_p[..n].iter().sum();
            let sum_q: f64 = raw_q[..n].iter().sum();
            let p: Vec<f64> = raw_p[..n].iter().map(|x| x / sum_p).collect();
            let q: Vec<f64> = raw_q[..n].iter().map(|x| x / sum_q).collect();
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= -1e-15);
            let self_d = kl_divergence(&p, &p).unwrap();
            prop_assert!(self_d.abs() < 1e-12);
            let max_gap = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if max_gap > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }
    }
}
