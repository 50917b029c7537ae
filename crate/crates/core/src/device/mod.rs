//! Component models: TCSC series compensation under PID control, HVDC
//! converter terminal injections, and protective relay timers.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// PID gains and bounds for a TCSC, shared by every instance in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcscParams {
    pub x_min: f64,
    pub x_max: f64,
    /// Reference reactance `X*` the device relaxes to without control action.
    pub x_ref: f64,
    /// First-order time constant in seconds, > 0.
    pub time_constant: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
}

impl Default for TcscParams {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 10.0,
            x_ref: 0.0,
            time_constant: 0.05,
            k_p: 4.0,
            k_i: 3.0,
            k_d: 2.0,
        }
    }
}

/// State of one TCSC: the controllable series reactance and the PID memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcscState {
    pub reactance: f64,
    pub pid_integral: f64,
    pub pid_prev_error: f64,
    pub params: TcscParams,
}

impl TcscState {
    pub fn new(params: TcscParams) -> Self {
        let reactance = params.x_ref.clamp(params.x_min, params.x_max);
        Self { reactance, pid_integral: 0.0, pid_prev_error: 0.0, params }
    }
}

/// Advances a TCSC by one explicit-Euler step of length `dt`.
///
/// The regulation error is nonzero only while the measured flow magnitude
/// is at or above the reference: `e = P* - |P|`. The PID output feeds the
/// first-order reactance dynamics `T_C dX/dt = -X + X* + u`, and the result
/// is hard-clamped to `[x_min, x_max]`.
pub fn tcsc_step(state: TcscState, measured_flow: f64, reference_flow: f64, dt: f64) -> TcscState {
    debug_assert!(dt > 0.0);
    let p = &state.params;
    let error = if measured_flow.abs() >= reference_flow {
        reference_flow - measured_flow.abs()
    } else {
        0.0
    };
    let integral = state.pid_integral + error * dt;
    let derivative = (error - state.pid_prev_error) / dt;
    let u = p.k_p * error + p.k_i * integral + p.k_d * derivative;
    let dx = (-state.reactance + p.x_ref + u) * (dt / p.time_constant);
    let reactance = (state.reactance + dx).clamp(p.x_min, p.x_max);
    TcscState { reactance, pid_integral: integral, pid_prev_error: error, params: state.params }
}

/// An HVDC corridor between a rectifier bus (consuming `P_r`) and an
/// inverter bus (injecting `P_i`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HvdcLink {
    pub branch_id: usize,
    /// Rectifier ignition delay angle in radians, within [pi/30, pi/2].
    pub alpha: f64,
    /// Inverter extinction advance angle in radians. The nominal operating
    /// band is [pi/12, pi/9]; values outside it are accepted with a warning
    /// because published operating points set gamma well above the band.
    pub gamma: f64,
    pub r_cr: f64,
    pub r_ci: f64,
    pub r_l: f64,
    pub rectifier_bus: usize,
    pub inverter_bus: usize,
}

pub const HVDC_ALPHA_MIN: f64 = std::f64::consts::PI / 30.0;
pub const HVDC_ALPHA_MAX: f64 = std::f64::consts::PI / 2.0;
pub const HVDC_GAMMA_BAND: (f64, f64) = (std::f64::consts::PI / 12.0, std::f64::consts::PI / 9.0);

impl HvdcLink {
    /// Validates the structural invariants. Returns `true` when gamma sits
    /// inside its nominal band, `false` when it is overridden.
    pub fn validate(&self) -> Result<bool> {
        if !(HVDC_ALPHA_MIN..=HVDC_ALPHA_MAX).contains(&self.alpha) {
            return Err(CoreError::HvdcAlphaOutOfRange { branch: self.branch_id, alpha: self.alpha });
        }
        if (self.r_cr + self.r_l - self.r_ci).abs() < 1e-12 {
            return Err(CoreError::HvdcDegenerate { branch: self.branch_id });
        }
        Ok((HVDC_GAMMA_BAND.0..=HVDC_GAMMA_BAND.1).contains(&self.gamma))
    }
}

/// Computes `(P_r, P_i, I_d)` for an HVDC link.
///
/// `I_d = 3 sqrt(3) (cos a - cos g) / (pi (R_cr + R_L - R_ci))`, the
/// rectifier consumes `P_r = (3 sqrt(3) / pi) I_d cos a - R_cr I_d^2` and
/// the inverter injects `P_i = (3 sqrt(3) / pi) I_d cos g - R_ci I_d^2`,
/// which satisfies the line-loss identity `P_i = P_r - R_L I_d^2`.
pub fn hvdc_injections(link: &HvdcLink) -> Result<(f64, f64, f64)> {
    let denominator = link.r_cr + link.r_l - link.r_ci;
    if denominator.abs() < 1e-12 {
        return Err(CoreError::HvdcDegenerate { branch: link.branch_id });
    }
    let k = 3.0 * 3.0_f64.sqrt() / std::f64::consts::PI;
    let current = k * (link.alpha.cos() - link.gamma.cos()) / denominator;
    let p_rectifier = k * current * link.alpha.cos() - link.r_cr * current * current;
    let p_inverter = k * current * link.gamma.cos() - link.r_ci * current * current;
    Ok((p_rectifier, p_inverter, current))
}

/// Timer state of one protective relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayState {
    /// Preset time T in seconds the overload must persist before tripping.
    pub preset_time: f64,
    /// Accumulated overload time; resets when the overload clears.
    pub counting_time: f64,
    /// Flow threshold sigma in per-unit power.
    pub threshold: f64,
}

impl RelayState {
    pub fn new(preset_time: f64, threshold: f64) -> Self {
        Self { preset_time, counting_time: 0.0, threshold }
    }
}

/// Guard against accumulated rounding in the timer comparison: summing
/// `dt` repeatedly can overshoot an exact multiple by a few ulps, which
/// would fire the trip one substep early. A nanosecond of slack is far
/// below any meaningful `dt` and keeps the trip step identical to exact
/// (counted-step) arithmetic.
const TIMER_SLACK: f64 = 1e-9;

/// Advances the relay timer by `dt` and reports whether the breaker trips.
///
/// Overload (`|flow| > sigma`) accumulates counting time; anything less
/// resets the timer. The trip fires on the first step where the
/// accumulated time exceeds the preset time while still overloaded.
pub fn relay_step(state: RelayState, flow: f64, dt: f64) -> (RelayState, bool) {
    debug_assert!(dt > 0.0);
    let overloaded = flow.abs() > state.threshold;
    let counting_time = if overloaded { state.counting_time + dt } else { 0.0 };
    let trip = overloaded && counting_time > state.preset_time + TIMER_SLACK;
    (RelayState { counting_time, ..state }, trip)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_input_params() -> TcscParams {
        // K_P = 1 with zero integral/derivative turns the PID into a
        // pass-through of the error, giving a constant u for constant
        // flows; bounds are wide so the clamp stays inactive.
        TcscParams {
            x_min: -100.0,
            x_max: 100.0,
            x_ref: 5.0,
            time_constant: 0.05,
            k_p: 1.0,
            k_i: 0.0,
            k_d: 0.0,
        }
    }

    #[test]
    fn tcsc_holds_equilibrium_with_zero_error() {
        let params = TcscParams { x_ref: 3.0, x_min: 0.0, x_max: 10.0, ..Default::default() };
        let mut state = TcscState::new(params);
        state.reactance = 3.0;
        for _ in 0..100 {
            state = tcsc_step(state, 0.5, 1.0, 0.001); // |flow| < reference: e = 0
        }
        assert_eq!(state.reactance, 3.0);
        assert_eq!(state.pid_integral, 0.0);
    }

    #[test]
    fn tcsc_matches_first_order_response() {
        // constant u0 = P* - |P| = 1 - 3 = -2, X* = 5, so X -> 3
        let params = constant_input_params();
        let mut state = TcscState::new(params);
        let dt = params.time_constant / 100.0;
        let horizon = 10.0 * params.time_constant;
        let steps = (horizon / dt).round() as usize;
        let u0 = -2.0;
        let target = params.x_ref + u0;
        let x0 = state.reactance;
        for _ in 0..steps {
            state = tcsc_step(state, 3.0, 1.0, dt);
        }
        let closed_form = target + (x0 - target) * (-horizon / params.time_constant).exp();
        assert!(
            (state.reactance - closed_form).abs() <= 0.01 * (x0 - target).abs(),
            "euler {} vs closed form {}",
            state.reactance,
            closed_form
        );
    }

    #[test]
    fn tcsc_clamps_at_lower_bound() {
        let params = TcscParams { x_min: 0.0, x_max: 10.0, x_ref: 0.0, ..Default::default() };
        let mut state = TcscState::new(params);
        for _ in 0..1000 {
            // heavy overload with positive gains drives u strongly negative
            state = tcsc_step(state, 50.0, 1.0, 0.01);
            assert!(state.reactance >= 0.0);
        }
        assert_eq!(state.reactance, 0.0);
    }

    #[test]
    fn hvdc_zero_angle_difference_gives_zero_power() {
        let link = HvdcLink {
            branch_id: 1,
            alpha: 0.3,
            gamma: 0.3,
            r_cr: 0.1,
            r_ci: 0.1,
            r_l: 0.1,
            rectifier_bus: 1,
            inverter_bus: 2,
        };
        let (p_r, p_i, i_d) = hvdc_injections(&link).unwrap();
        assert_eq!(i_d, 0.0);
        assert_eq!(p_r, 0.0);
        assert_eq!(p_i, 0.0);
    }

    #[test]
    fn hvdc_published_operating_point() {
        // alpha = pi/15, gamma = pi/4, all resistances 0.1; oracle is the
        // direct evaluation of the three formulas.
        let link = HvdcLink {
            branch_id: 4,
            alpha: std::f64::consts::PI / 15.0,
            gamma: std::f64::consts::PI / 4.0,
            r_cr: 0.1,
            r_ci: 0.1,
            r_l: 0.1,
            rectifier_bus: 3,
            inverter_bus: 5,
        };
        let (p_r, p_i, i_d) = hvdc_injections(&link).unwrap();
        let k = 3.0 * 3.0_f64.sqrt() / std::f64::consts::PI;
        let i_oracle = k * ((std::f64::consts::PI / 15.0).cos() - (std::f64::consts::PI / 4.0).cos()) / 0.1;
        assert!((i_d - i_oracle).abs() < 1e-12);
        assert!((i_d - 4.483).abs() < 1e-3);
        assert!((p_r - 5.243).abs() < 1e-3);
        assert!((p_i - 3.233).abs() < 1e-3);
        assert!((p_i - (p_r - 0.1 * i_d * i_d)).abs() < 1e-12);
    }

    #[test]
    fn hvdc_degenerate_denominator_is_rejected() {
        let link = HvdcLink {
            branch_id: 9,
            alpha: 0.3,
            gamma: 0.4,
            r_cr: 0.1,
            r_ci: 0.2,
            r_l: 0.1,
            rectifier_bus: 1,
            inverter_bus: 2,
        };
        assert!(matches!(hvdc_injections(&link), Err(CoreError::HvdcDegenerate { branch: 9 })));
        assert!(link.validate().is_err());
    }

    #[test]
    fn relay_never_trips_below_threshold() {
        let mut relay = RelayState::new(1.0, 2.0);
        for _ in 0..1000 {
            let (next, trip) = relay_step(relay, 1.99, 0.01);
            assert!(!trip);
            relay = next;
        }
        assert_eq!(relay.counting_time, 0.0);
    }

    #[test]
    fn relay_trips_on_first_step_past_preset() {
        // sustained 20% overload, T = 1 s, dt = 0.01 s: counting over the
        // steps puts the trip exactly at step 101.
        let mut relay = RelayState::new(1.0, 1.0);
        let mut tripped_at = None;
        for step in 1..=200 {
            let (next, trip) = relay_step(relay, 1.2, 0.01);
            relay = next;
            if trip {
                tripped_at = Some(step);
                break;
            }
        }
        assert_eq!(tripped_at, Some(101));
    }

    #[test]
    fn relay_resets_when_overload_clears() {
        let mut relay = RelayState::new(1.0, 1.0);
        for _ in 0..50 {
            relay = relay_step(relay, 1.2, 0.01).0; // half of T
        }
        relay = relay_step(relay, 0.5, 0.01).0; // clears
        assert_eq!(relay.counting_time, 0.0);
        // needs the full continuous window again
        let mut tripped_at = None;
        for step in 1..=200 {
            let (next, trip) = relay_step(relay, 1.2, 0.01);
            relay = next;
            if trip {
                tripped_at = Some(step);
                break;
            }
        }
        assert_eq!(tripped_at, Some(101));
    }
}
