//! Cascading-failure simulation and worst-case contingency identification
//! for DC-approximated transmission grids.
//!
//! The crate is organized around five subsystems:
//!
//! * [`grid`] — network model, case-file parsing, island decomposition and
//!   DC power flow.
//! * [`device`] — component models: TCSC reactance dynamics under PID
//!   control, HVDC converter injections, and protective relay timers.
//! * [`cascade`] — the stepwise cascade engine that alternates continuous
//!   device integration with discrete branch trips and reports the final
//!   cost `J = ||P_e||^2`.
//! * [`solver`] — a Jacobian-free Newton-Krylov solver (finite-difference
//!   Jacobian-vector products, Arnoldi/GMRES corrections under a step cap)
//!   and the KKT system it is pointed at.
//! * [`identify`] — the outer contingency-identification loop that searches
//!   the disturbance box for the admittance perturbation minimizing the
//!   post-cascade cost.

pub mod cascade;
pub mod device;
pub mod error;
pub mod grid;
pub mod identify;
pub mod linalg;
pub mod solver;

pub use cascade::{
    apply_disturbance, evaluate_cost, run_cascade, CascadeOutcome, CascadeState, Disturbance,
    EngineConfig, OutageEvent, ThresholdPolicy,
};
pub use device::{hvdc_injections, relay_step, tcsc_step, HvdcLink, RelayState, TcscParams, TcscState};
pub use error::{CoreError, ParseError};
pub use grid::{
    dc_power_flow, island_decomposition, parse_case, Branch, Bus, BusKind, DeviceKind, FlowSolution,
    GridCase, IslandPartition,
};
pub use identify::{gradient_fd, identify, identify_with_cost, CiaConfig, CiaIteration, CiaResult};
pub use solver::{
    gmres_correction, jfnk_solve, jvp, kkt_residual, Constraint, JfnkResult, KktProblem,
    KktResidual, KktVector, SolverConfig,
};
