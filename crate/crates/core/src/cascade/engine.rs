//! The cascade loop.

use super::{
    CascadeOutcome, CascadeState, Disturbance, EngineConfig, OutageCause, OutageEvent,
    TcscPlacement, ThresholdPolicy,
};
use crate::device::{hvdc_injections, relay_step, tcsc_step, RelayState, TcscState};
use crate::error::{CoreError, Result};
use crate::grid::{dc_power_flow, electrical_islands, island_decomposition, BranchStatus, DeviceKind, GridCase};

/// Minimum total branch reactance when a TCSC offset is applied, so the
/// effective susceptance stays finite.
const REACTANCE_FLOOR: f64 = 1e-6;

/// Runs the cascade and returns the outcome.
pub fn run_cascade(
    case: &GridCase,
    disturbances: &[Disturbance],
    config: &EngineConfig,
) -> Result<CascadeOutcome> {
    Driver::new(case, disturbances, config, false)?.run()
}

/// Like [`run_cascade`] but also returns the hybrid state at every executed
/// step boundary (step 0 is the pre-disturbance state).
pub fn run_cascade_traced(
    case: &GridCase,
    disturbances: &[Disturbance],
    config: &EngineConfig,
) -> Result<(CascadeOutcome, Vec<CascadeState>)> {
    let mut driver = Driver::new(case, disturbances, config, true)?;
    let outcome = driver.run()?;
    Ok((outcome, driver.trace))
}

struct Driver<'a> {
    config: &'a EngineConfig,
    working: GridCase,
    disturbances: Vec<Disturbance>,
    /// Disturbances not yet applied.
    pending: Vec<bool>,
    /// Admittance after the disturbance, before any TCSC offset.
    line_admittance: Vec<f64>,
    thresholds: Vec<f64>,
    relays: Vec<RelayState>,
    tcsc: Vec<Option<TcscState>>,
    flows: Vec<f64>,
    /// Flow solution is stale (topology or admittance changed).
    dirty: bool,
    substeps: usize,
    timeline: Vec<OutageEvent>,
    tracing: bool,
    trace: Vec<CascadeState>,
}

impl<'a> Driver<'a> {
    fn new(
        case: &GridCase,
        disturbances: &[Disturbance],
        config: &'a EngineConfig,
        tracing: bool,
    ) -> Result<Self> {
        config.validate()?;
        let mut working = case.clone();

        // HVDC corridors become fixed terminal injections.
        let mut hvdc_seen = vec![false; working.branches.len()];
        for link in &config.hvdc {
            let position = working
                .branch_position(link.branch_id)
                .ok_or(CoreError::BranchNotFound(link.branch_id))?;
            if working.branches[position].device != DeviceKind::Hvdc {
                return Err(CoreError::Config(format!(
                    "branch {} is not marked hvdc in the case",
                    link.branch_id
                )));
            }
            if hvdc_seen[position] {
                return Err(CoreError::Config(format!(
                    "duplicate HVDC link for branch {}",
                    link.branch_id
                )));
            }
            hvdc_seen[position] = true;
            link.validate()?;
            let (p_rectifier, p_inverter, _) = hvdc_injections(link)?;
            let rect = working
                .bus_position(link.rectifier_bus)
                .ok_or_else(|| CoreError::Config(format!("unknown rectifier bus {}", link.rectifier_bus)))?;
            let inv = working
                .bus_position(link.inverter_bus)
                .ok_or_else(|| CoreError::Config(format!("unknown inverter bus {}", link.inverter_bus)))?;
            working.buses[rect].injection -= p_rectifier;
            working.buses[inv].injection += p_inverter;
        }
        for (i, branch) in working.branches.iter().enumerate() {
            if branch.device == DeviceKind::Hvdc && !hvdc_seen[i] {
                return Err(CoreError::Config(format!(
                    "branch {} is marked hvdc but no link parameters were supplied",
                    branch.id
                )));
            }
        }

        for d in disturbances {
            d.validate()?;
            let position = working
                .branch_position(d.branch_id)
                .ok_or(CoreError::BranchNotFound(d.branch_id))?;
            let branch = &working.branches[position];
            if !branch.is_in_service() {
                return Err(CoreError::BranchOutOfService(d.branch_id));
            }
            if branch.device == DeviceKind::Hvdc {
                return Err(CoreError::Config(format!(
                    "branch {} is an HVDC corridor and cannot carry an admittance disturbance",
                    d.branch_id
                )));
            }
        }

        // The base (undisturbed) flow solution fixes thresholds and TCSC
        // references for the whole run.
        let base = dc_power_flow(&working, &electrical_islands(&working))
            .map_err(|e| CoreError::CascadeFlow { step: 0, source: Box::new(e) })?;
        let thresholds: Vec<f64> = match config.threshold_policy {
            ThresholdPolicy::FromCase => working.branches.iter().map(|b| b.flow_threshold).collect(),
            ThresholdPolicy::AutoMargin { margin, floor } => {
                base.flows.iter().map(|f| (margin * f.abs()).max(floor)).collect()
            }
            ThresholdPolicy::Unlimited => vec![f64::INFINITY; working.branches.len()],
        };
        let relay_preset = config.relay_preset();
        let relays: Vec<RelayState> =
            thresholds.iter().map(|&sigma| RelayState::new(relay_preset, sigma)).collect();

        let tcsc: Vec<Option<TcscState>> = working
            .branches
            .iter()
            .map(|branch| {
                let selected = match &config.tcsc_placement {
                    TcscPlacement::Off => false,
                    TcscPlacement::All => true,
                    TcscPlacement::FromCase => branch.device == DeviceKind::Tcsc,
                    TcscPlacement::Branches(ids) => ids.contains(&branch.id),
                };
                if selected && branch.device != DeviceKind::Hvdc && branch.is_in_service() {
                    Some(TcscState::new(config.tcsc_params))
                } else {
                    None
                }
            })
            .collect();

        let line_admittance: Vec<f64> = working.branches.iter().map(|b| b.susceptance).collect();
        let flows = base.flows;
        let substeps = (config.step_time / config.dt).round() as usize;

        Ok(Self {
            config,
            working,
            pending: vec![true; disturbances.len()],
            disturbances: disturbances.to_vec(),
            line_admittance,
            thresholds,
            relays,
            tcsc,
            flows,
            dirty: false,
            substeps,
            timeline: Vec::new(),
            tracing,
            trace: Vec::new(),
        })
    }

    fn run(&mut self) -> Result<CascadeOutcome> {
        if self.tracing {
            self.snapshot(0, 0.0);
        }
        let mut terminated_at_step = self.config.max_steps;
        for step in 1..=self.config.max_steps {
            let mut step_tripped = false;
            let mut step_overloaded = false;
            for sub in 0..self.substeps {
                let t = ((step - 1) * self.substeps + sub) as f64 * self.config.dt;
                self.apply_due_disturbances(t);
                self.refresh_flows(step)?;

                // All devices observe the same flow solution; trips take
                // effect at the end of the substep, simultaneously.
                let mut tripping: Vec<usize> = Vec::new();
                for i in 0..self.working.branches.len() {
                    let branch = &self.working.branches[i];
                    if !branch.carries_ac() {
                        continue;
                    }
                    let flow = self.flows[i];
                    if flow.abs() > self.thresholds[i] {
                        step_overloaded = true;
                    }
                    let (next, trip) = relay_step(self.relays[i], flow, self.config.dt);
                    self.relays[i] = next;
                    if trip {
                        tripping.push(i);
                    }
                }
                for i in 0..self.working.branches.len() {
                    if tripping.contains(&i) || !self.working.branches[i].carries_ac() {
                        continue;
                    }
                    let Some(state) = self.tcsc[i] else { continue };
                    let next = tcsc_step(state, self.flows[i], self.thresholds[i], self.config.dt);
                    if next.reactance != state.reactance {
                        self.set_branch_admittance(i, next.reactance);
                    }
                    self.tcsc[i] = Some(next);
                }
                if !tripping.is_empty() {
                    step_tripped = true;
                    let ids: Vec<usize> = tripping.iter().map(|&i| self.working.branches[i].id).collect();
                    for &i in &tripping {
                        self.working.branches[i].status = BranchStatus::Tripped;
                        self.working.branches[i].susceptance = 0.0;
                    }
                    self.timeline.push(OutageEvent {
                        time: (((step - 1) * self.substeps + sub + 1) as f64) * self.config.dt,
                        branch_ids: ids,
                        cause: OutageCause::Relay,
                    });
                    self.dirty = true;
                }
            }
            if self.tracing {
                self.refresh_flows(step)?;
                self.snapshot(step, step as f64 * self.config.step_time);
            }
            if !step_tripped && !step_overloaded {
                terminated_at_step = step;
                break;
            }
        }

        self.refresh_flows(terminated_at_step)?;
        let islands = island_decomposition(&self.working);
        let cost = self.flows.iter().map(|f| f * f).sum();
        Ok(CascadeOutcome {
            final_flows: self.flows.clone(),
            final_injections: self.working.buses.iter().map(|b| b.injection).collect(),
            final_susceptances: self.working.branches.iter().map(|b| b.susceptance).collect(),
            cost,
            outage_timeline: self.timeline.clone(),
            islands,
            terminated_at_step,
            thresholds: self.thresholds.clone(),
        })
    }

    /// Applies every still-pending disturbance whose `apply_time` has been
    /// reached. Branches driven to zero admittance are severed on the spot.
    fn apply_due_disturbances(&mut self, t: f64) {
        if !self.pending.iter().any(|p| *p) {
            return;
        }
        let mut severed: Vec<usize> = Vec::new();
        for di in 0..self.disturbances.len() {
            if !self.pending[di] || t + 1e-12 < self.disturbances[di].apply_time {
                continue;
            }
            self.pending[di] = false;
            let d = self.disturbances[di].clone();
            let i = self.working.branch_position(d.branch_id).expect("validated");
            let reduced = self.line_admittance[i] - d.delta.max(0.0);
            if reduced <= f64::EPSILON * self.line_admittance[i] {
                self.line_admittance[i] = 0.0;
                self.working.branches[i].susceptance = 0.0;
                self.working.branches[i].status = BranchStatus::Tripped;
                severed.push(self.working.branches[i].id);
            } else {
                self.line_admittance[i] = reduced;
                let reactance_offset = self.tcsc[i].map(|s| s.reactance).unwrap_or(0.0);
                self.set_branch_admittance(i, reactance_offset);
            }
            self.dirty = true;
        }
        if !severed.is_empty() {
            self.timeline.push(OutageEvent { time: t, branch_ids: severed, cause: OutageCause::Disturbance });
        }
    }

    /// Recomputes the branch's effective susceptance from its disturbed
    /// line admittance and a TCSC reactance offset.
    fn set_branch_admittance(&mut self, i: usize, reactance_offset: f64) {
        let line = self.line_admittance[i];
        if line <= 0.0 {
            self.working.branches[i].susceptance = 0.0;
            return;
        }
        let total_reactance = (1.0 / line + reactance_offset).max(REACTANCE_FLOOR);
        self.working.branches[i].susceptance = 1.0 / total_reactance;
        self.dirty = true;
    }

    fn refresh_flows(&mut self, step: usize) -> Result<()> {
        if !self.dirty {
            return Ok(());
        }
        let partition = electrical_islands(&self.working);
        let solution = dc_power_flow(&self.working, &partition)
            .map_err(|e| CoreError::CascadeFlow { step, source: Box::new(e) })?;
        self.flows = solution.flows;
        self.dirty = false;
        Ok(())
    }

    fn snapshot(&mut self, step: usize, time: f64) {
        self.trace.push(CascadeState {
            step,
            time,
            statuses: self.working.branches.iter().map(|b| b.status).collect(),
            relays: self.relays.clone(),
            tcsc: self.tcsc.clone(),
            flows: self.flows.clone(),
            injections: self.working.buses.iter().map(|b| b.injection).collect(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{apply_disturbance, evaluate_cost};
    use crate::grid::parse_case;

    fn chain_case() -> GridCase {
        // gen at 1 feeds loads at 2 and 3 through a chain; the middle
        // branch carries the bus-3 load.
        parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -0.4\nBUS 3 load -0.6\n\
             BRANCH 1 1 2 10.0 1.2 none\nBRANCH 2 2 3 10.0 0.7 none\n",
        )
        .unwrap()
    }

    fn quiet_config() -> EngineConfig {
        EngineConfig { threshold_policy: ThresholdPolicy::FromCase, ..Default::default() }
    }

    #[test]
    fn quiescent_system_terminates_at_step_one() {
        let case = chain_case();
        let config = quiet_config();
        let outcome = run_cascade(&case, &[], &config).unwrap();
        assert_eq!(outcome.terminated_at_step, 1);
        assert!(outcome.outage_timeline.is_empty());
        // J equals the squared base flows: 1.0^2 + 0.6^2
        assert!((outcome.cost - (1.0 + 0.36)).abs() < 1e-12);
    }

    #[test]
    fn overloaded_middle_branch_trips_and_sheds_downstream() {
        // drop branch 2's threshold below its base flow so it trips after
        // T of sustained overload.
        let mut case = chain_case();
        case.branches[1].flow_threshold = 0.5; // base flow 0.6
        let config = quiet_config();
        let outcome = run_cascade(&case, &[], &config).unwrap();
        assert_eq!(outcome.outage_timeline.len(), 1);
        let event = &outcome.outage_timeline[0];
        assert_eq!(event.branch_ids, vec![2]);
        assert_eq!(event.cause, OutageCause::Relay);
        // T = 1 s, dt = 0.01 s: trip on the first substep where t_c > T
        assert!((event.time - 1.01).abs() < 1e-12);
        // downstream island {3} lost supply; the remaining flow feeds bus 2
        assert_eq!(outcome.islands.island_count(), 2);
        assert!((outcome.final_flows[0] - 0.4).abs() < 1e-12);
        assert_eq!(outcome.final_flows[1], 0.0);
        assert!((outcome.cost - 0.16).abs() < 1e-12);
    }

    #[test]
    fn full_disturbance_severs_branch_at_tau() {
        let case = chain_case();
        let config = quiet_config();
        let d = Disturbance::new(2, 10.0, 0.0, 10.0);
        let outcome = run_cascade(&case, &[d], &config).unwrap();
        let event = &outcome.outage_timeline[0];
        assert_eq!(event.cause, OutageCause::Disturbance);
        assert_eq!(event.time, 0.0);
        assert_eq!(event.branch_ids, vec![2]);
        assert_eq!(outcome.final_susceptances[1], 0.0);
    }

    #[test]
    fn delayed_disturbance_lands_on_the_grid_point() {
        let case = chain_case();
        let config = quiet_config();
        let mut d = Disturbance::new(2, 10.0, 0.0, 10.0);
        d.apply_time = 0.25;
        let outcome = run_cascade(&case, &[d], &config).unwrap();
        assert_eq!(outcome.outage_timeline[0].time, 0.25);
    }

    #[test]
    fn null_disturbance_leaves_case_unchanged() {
        let case = chain_case();
        let d = Disturbance::new(1, 0.0, 0.0, 10.0);
        let disturbed = apply_disturbance(&case, &d).unwrap();
        assert_eq!(disturbed.branches[0].susceptance, case.branches[0].susceptance);
        assert!(disturbed.branches[0].is_in_service());
    }

    #[test]
    fn half_disturbance_halves_admittance() {
        let case = chain_case();
        let d = Disturbance::new(1, 5.0, 0.0, 10.0);
        let disturbed = apply_disturbance(&case, &d).unwrap();
        assert_eq!(disturbed.branches[0].susceptance, 5.0);
        assert!(disturbed.branches[0].is_in_service());
    }

    #[test]
    fn out_of_bounds_disturbance_is_rejected() {
        let case = chain_case();
        let d = Disturbance::new(1, 11.0, 0.0, 10.0);
        assert!(matches!(
            apply_disturbance(&case, &d),
            Err(CoreError::DisturbanceOutOfBounds { .. })
        ));
        assert!(matches!(
            run_cascade(&case, &[d], &quiet_config()),
            Err(CoreError::DisturbanceOutOfBounds { .. })
        ));
    }

    #[test]
    fn unknown_branch_is_rejected() {
        let case = chain_case();
        let d = Disturbance::new(99, 1.0, 0.0, 10.0);
        assert!(matches!(apply_disturbance(&case, &d), Err(CoreError::BranchNotFound(99))));
    }

    #[test]
    fn unlimited_thresholds_reduce_to_flow_evaluation() {
        let mut case = chain_case();
        case.branches[1].flow_threshold = 0.0001; // would trip instantly otherwise
        let config = EngineConfig {
            threshold_policy: ThresholdPolicy::Unlimited,
            ..Default::default()
        };
        let outcome = run_cascade(&case, &[], &config).unwrap();
        assert_eq!(outcome.terminated_at_step, 1);
        assert!(outcome.outage_timeline.is_empty());
        assert!((outcome.cost - (1.0 + 0.36)).abs() < 1e-12);
    }

    #[test]
    fn determinism_bitwise() {
        let mut case = chain_case();
        case.branches[1].flow_threshold = 0.5;
        let config = quiet_config();
        let a = run_cascade(&case, &[], &config).unwrap();
        let b = run_cascade(&case, &[], &config).unwrap();
        assert_eq!(a.final_flows, b.final_flows);
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        assert_eq!(a.outage_timeline, b.outage_timeline);
    }

    #[test]
    fn tripped_branches_only_accumulate() {
        let mut case = chain_case();
        case.branches[0].flow_threshold = 0.9;
        case.branches[1].flow_threshold = 0.5;
        let config = quiet_config();
        let (_, trace) = run_cascade_traced(&case, &[], &config).unwrap();
        let mut tripped: usize = 0;
        for state in &trace {
            let now = state.statuses.iter().filter(|s| **s == BranchStatus::Tripped).count();
            assert!(now >= tripped, "tripped set shrank");
            tripped = now;
        }
    }

    #[test]
    fn all_branches_tripped_gives_zero_cost() {
        let mut case = chain_case();
        case.branches[0].flow_threshold = 0.1;
        case.branches[1].flow_threshold = 0.1;
        let config = quiet_config();
        let outcome = run_cascade(&case, &[], &config).unwrap();
        assert_eq!(outcome.outage_count(), 2);
        assert_eq!(evaluate_cost(&outcome), 0.0);
        assert_eq!(outcome.islands.island_count(), 3);
        assert_eq!(outcome.islands.isolated_buses, 3);
    }

    #[test]
    fn tcsc_state_freezes_after_its_branch_trips() {
        let mut case = chain_case();
        case.branches[1].flow_threshold = 0.5;
        let config = EngineConfig {
            threshold_policy: ThresholdPolicy::FromCase,
            tcsc_placement: TcscPlacement::All,
            ..Default::default()
        };
        let (outcome, trace) = run_cascade_traced(&case, &[], &config).unwrap();
        assert_eq!(outcome.outage_timeline.len(), 1);
        // branch 2 (index 1) tripped during step 2; its TCSC state must be
        // identical at every later boundary.
        let frozen: Vec<_> = trace
            .iter()
            .filter(|s| s.statuses[1] == BranchStatus::Tripped)
            .map(|s| s.tcsc[1])
            .collect();
        assert!(frozen.len() >= 2);
        for pair in frozen.windows(2) {
            assert_eq!(pair[0], pair[1]);
        }
    }
}
