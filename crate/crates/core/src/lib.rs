//! Two-level feedback control for intrusion-tolerant replicated systems.
//!
//! The toolkit decomposes intrusion tolerance into two stacked control
//! problems and provides solvers, structural verifiers, and evaluation
//! machinery for both:
//!
//! - **Node level** (when to recover a single replica): a partially
//!   observed machine-replacement problem. The node state (healthy,
//!   compromised, crashed) is hidden behind an alert-count observation
//!   channel; the controller tracks a Bayesian belief and recovers when
//!   the belief crosses a threshold. See [`model`], [`belief`], and
//!   [`recovery`].
//! - **System level** (when to grow the replication factor): a
//!   constrained MDP over the number of healthy replicas, solved exactly
//!   via an occupancy-measure linear program. See [`replication`].
//!
//! [`reliability`] computes mean-time-to-failure and reliability curves
//! for the no-recovery baseline chains, and [`sim`] runs the full
//! two-level system in a seeded discrete-time simulation with
//! availability / time-to-recovery / recovery-frequency metrics.

pub mod belief;
pub mod model;
pub mod numeric;
pub mod presets;
pub mod recovery;
pub mod reliability;
pub mod replication;
pub mod rng;
pub mod sim;

pub use belief::Belief;
pub use model::{NodeAction, NodeParams, NodeState, ObservationModel};
pub use recovery::{RecoveryObjective, ThresholdStrategy};
pub use replication::{OccupancyMeasure, ReplicationStrategy, SystemCmdp};
pub use sim::{Metrics, SystemConfig, Trace};
