//! Default model calibration used across examples, tests, and the CLI
//! when a configuration omits a block.

use crate::model::{NodeParams, ObservationModel};

/// Default per-node probabilities and cost weight.
pub fn default_node_params() -> NodeParams {
    NodeParams {
        p_attack: 0.1,
        p_crash_healthy: 1e-5,
        p_crash_compromised: 1e-3,
        p_update: 2e-2,
        eta: 2.0,
    }
}

/// Default Beta-Binomial alert channels on `{0..10}`: healthy nodes emit
/// few alerts, compromised nodes many.
pub fn default_observation_model() -> ObservationModel {
    ObservationModel::beta_binomial(10, 0.7, 3.0, 1.0, 0.7).expect("valid default shapes")
}

/// Default system-level evaluation scenario.
pub mod system {
    /// Maximum replication factor tracked by the system controller.
    pub const S_MAX: usize = 13;
    /// Availability lower bound for the replication LP.
    pub const EPSILON_A: f64 = 0.9;
    /// Initial replication factor.
    pub const N1: usize = 3;
    /// Tolerance threshold paired with `N1 = 3`.
    pub const TOLERANCE_F: usize = 1;
    /// Maximum simultaneous recoveries.
    pub const PARALLEL_RECOVERIES: usize = 1;
}
