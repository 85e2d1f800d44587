//! MIG-aware VM placement: block model, configuration-space analysis,
//! placement ILP, cluster state, policies, workloads and simulation.

pub mod cluster;
pub mod config_space;
pub mod ilp;
pub mod mig;
pub mod policies;
pub mod sim;
pub mod workload;

pub use cluster::{ClusterError, ClusterState, HostSpec, PoolMode};
pub use mig::{BlockSet, GpuState, MigError, Profile};
pub use policies::{PolicyConfig, PolicyKind};
pub use workload::{VmId, VmRequest};
