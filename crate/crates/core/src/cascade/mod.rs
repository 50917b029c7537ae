//! Stepwise cascade engine: applies the initial disturbance, alternates
//! continuous device integration with discrete relay trips over cascade
//! steps of duration `T`, and reports the final-state cost `J = ||P_e||^2`.

mod engine;

pub use engine::{run_cascade, run_cascade_traced};

use crate::device::{HvdcLink, RelayState, TcscParams, TcscState};
use crate::error::{CoreError, Result};
use crate::grid::{BranchStatus, GridCase, IslandPartition};
use serde::{Deserialize, Serialize};

/// An admittance perturbation on one branch, bounded by the box
/// `[lower, upper]`, taking effect at `apply_time` within the first
/// cascade step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub branch_id: usize,
    /// Admittance reduction in per-unit; `delta = upper` severs the branch
    /// when the bound equals the branch admittance.
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    /// Application time tau in seconds, within `[0, T)`.
    pub apply_time: f64,
}

impl Disturbance {
    pub fn new(branch_id: usize, delta: f64, lower: f64, upper: f64) -> Self {
        Self { branch_id, delta, lower, upper, apply_time: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower <= self.delta && self.delta <= self.upper) {
            return Err(CoreError::DisturbanceOutOfBounds {
                value: self.delta,
                lower: self.lower,
                upper: self.upper,
            });
        }
        Ok(())
    }
}

/// How relay thresholds are assigned before a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ThresholdPolicy {
    /// Use the `threshold` column of the case file.
    FromCase,
    /// `sigma_i = max(margin * |base flow_i|, floor)`, computed once from
    /// the undisturbed case and frozen.
    AutoMargin { margin: f64, floor: f64 },
    /// No branch ever overloads; the run reduces to a single flow solve.
    Unlimited,
}

/// Which branches carry a TCSC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcscPlacement {
    Off,
    /// Every in-service branch that is not an HVDC corridor.
    All,
    /// Branches marked `tcsc` in the case file.
    FromCase,
    Branches(Vec<usize>),
}

/// Engine settings for one cascade run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Substep for device integration, seconds; must divide `step_time`.
    pub dt: f64,
    /// Cascade step duration `T` in seconds.
    pub step_time: f64,
    /// Maximum number of cascade steps `m`.
    pub max_steps: usize,
    /// Relay preset time; defaults to `step_time` when `None`.
    pub relay_preset: Option<f64>,
    pub threshold_policy: ThresholdPolicy,
    pub tcsc_placement: TcscPlacement,
    pub tcsc_params: TcscParams,
    pub hvdc: Vec<HvdcLink>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            step_time: 1.0,
            max_steps: 12,
            relay_preset: None,
            threshold_policy: ThresholdPolicy::AutoMargin { margin: 1.05, floor: 0.01 },
            tcsc_placement: TcscPlacement::Off,
            tcsc_params: TcscParams::default(),
            hvdc: Vec::new(),
        }
    }
}

impl EngineConfig {
    pub fn relay_preset(&self) -> f64 {
        self.relay_preset.unwrap_or(self.step_time)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(CoreError::Config("dt must be positive".into()));
        }
        if !(self.step_time > 0.0) {
            return Err(CoreError::Config("step time T must be positive".into()));
        }
        if self.dt > self.step_time {
            return Err(CoreError::Config("dt must not exceed the step time".into()));
        }
        let n_sub = (self.step_time / self.dt).round();
        if n_sub < 1.0 || (n_sub * self.dt - self.step_time).abs() > 1e-9 {
            return Err(CoreError::Config("dt must divide the step time".into()));
        }
        if self.max_steps < 1 {
            return Err(CoreError::Config("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Snapshot of the hybrid state at a cascade step boundary.
#[derive(Debug, Clone, Serialize)]
pub struct CascadeState {
    pub step: usize,
    /// Seconds; equals `step * T` at boundaries.
    pub time: f64,
    pub statuses: Vec<BranchStatus>,
    pub relays: Vec<RelayState>,
    pub tcsc: Vec<Option<TcscState>>,
    pub flows: Vec<f64>,
    pub injections: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageCause {
    /// Severed directly by the initial disturbance reaching zero admittance.
    Disturbance,
    /// Tripped by a protective relay.
    Relay,
}

/// One timeline entry: every branch listed tripped at the same instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageEvent {
    pub time: f64,
    pub branch_ids: Vec<usize>,
    pub cause: OutageCause,
}

/// Final state of a cascade run.
#[derive(Debug, Clone, Serialize)]
pub struct CascadeOutcome {
    /// Per-branch flows at the end of the cascade (zero for tripped).
    pub final_flows: Vec<f64>,
    /// Per-bus effective injections, including HVDC terminal adjustments.
    pub final_injections: Vec<f64>,
    /// Per-branch admittance at the end of the cascade (zero for tripped).
    pub final_susceptances: Vec<f64>,
    /// `J = sum of squared final branch flows`.
    pub cost: f64,
    pub outage_timeline: Vec<OutageEvent>,
    pub islands: IslandPartition,
    pub terminated_at_step: usize,
    /// Relay thresholds that were in force (useful for reporting).
    pub thresholds: Vec<f64>,
}

impl CascadeOutcome {
    pub fn outage_count(&self) -> usize {
        self.outage_timeline.iter().map(|e| e.branch_ids.len()).sum()
    }
}

/// Returns a copy of the case with the disturbance applied: the branch's
/// admittance magnitude is reduced by `delta` (clamped at zero); reaching
/// zero severs the branch.
pub fn apply_disturbance(case: &GridCase, disturbance: &Disturbance) -> Result<GridCase> {
    disturbance.validate()?;
    let position = case
        .branch_position(disturbance.branch_id)
        .ok_or(CoreError::BranchNotFound(disturbance.branch_id))?;
    if !case.branches[position].is_in_service() {
        return Err(CoreError::BranchOutOfService(disturbance.branch_id));
    }
    let mut out = case.clone();
    let branch = &mut out.branches[position];
    let reduced = branch.susceptance - disturbance.delta;
    if reduced <= f64::EPSILON * branch.susceptance.abs() {
        branch.susceptance = 0.0;
        branch.status = BranchStatus::Tripped;
    } else {
        branch.susceptance = reduced;
    }
    Ok(out)
}

/// `J = sum_i P_e,i^2`; a smaller value indicates a worse disruption.
pub fn evaluate_cost(outcome: &CascadeOutcome) -> f64 {
    outcome.final_flows.iter().map(|f| f * f).sum()
}
