//! Compiler core for mapping spiking neural networks onto heterogeneous
//! memristor-crossbar inventories.
//!
//! The pipeline is: load a [`graph::Network`], expand an
//! [`inventory::Inventory`] of crossbar instances, build a 0/1 linear model
//! with [`ilp::build_mapping_model`], solve it with the built-in
//! branch-and-bound in [`solver`], and decode the winning assignment into a
//! [`mapping::MappingSolution`]. Higher-level stage chains (area, route
//! minimization, profile-guided packets) live in [`optimize`]; the flawed
//! packing baseline used for comparisons lives in [`mcc`]; the discrete-time
//! integrate-and-fire simulator used for profiling lives in [`sim`].

pub mod gen;
pub mod graph;
pub mod ilp;
pub mod inventory;
pub mod mapping;
pub mod mcc;
pub mod optimize;
pub mod rational;
pub mod sim;
pub mod solver;

pub use graph::{Direction, Edge, Network, NetworkError, NeuronId};
pub use ilp::{IlpModel, LinearConstraint, MappingVars, ModelError, ModelOptions, RouteMode, VarId};
pub use inventory::{Crossbar, CrossbarId, CrossbarKind, Inventory, InventoryError};
pub use mapping::{MappingSolution, MetricsReport, SolutionError, SolutionMetrics};
pub use optimize::{PipelineError, PipelineTrace, StageOutcome, TraceRow};
pub use solver::{
    Incumbent, SolveLimits, SolveResult, SolveStatus, SolverBackend, OracleError,
};
