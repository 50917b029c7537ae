//! Contingency identification: an outer loop of Newton-Krylov solves of
//! the optimality system, tracking the best (lowest-cost) feasible
//! disturbance found so far.

use crate::cascade::{run_cascade, Disturbance, EngineConfig};
use crate::error::{CoreError, Result};
use crate::grid::GridCase;
use crate::solver::{jfnk_solve, CostGradient, KktProblem, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::Mutex;

/// Settings for the identification loop.
#[derive(Debug, Clone, Serialize)]
pub struct CiaConfig {
    /// Outer iterations; the loop runs for `l = 0..=l_max`.
    pub l_max: usize,
    pub solver: SolverConfig,
    /// Disturbance box per component: `(lower, upper)` with `lower < upper`
    /// (a degenerate `lower == upper` box pins the component).
    pub bounds: Vec<(f64, f64)>,
    /// Forward-difference step for the cost gradient.
    pub gradient_eps: f64,
    /// Candidates within this tolerance of the box (relative to the bound
    /// magnitude) are snapped onto it; anything further outside is
    /// rejected rather than projected.
    pub feasibility_tol: f64,
}

impl CiaConfig {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self {
            l_max: 10,
            solver: SolverConfig::default(),
            bounds,
            gradient_eps: 1e-2,
            feasibility_tol: 1e-8,
        }
    }
}

/// Record of one outer iteration.
#[derive(Debug, Clone, Serialize)]
pub struct CiaIteration {
    pub l: usize,
    pub candidate: Vec<f64>,
    /// Cost at the candidate, when it was evaluable.
    pub cost: Option<f64>,
    pub feasible: bool,
    /// Whether this candidate improved on the best cost so far.
    pub accepted: bool,
    pub solver_steps: usize,
    pub solver_converged: bool,
}

/// Identification result: the best disturbance, its cost, and the full
/// iteration record.
#[derive(Debug, Clone, Serialize)]
pub struct CiaResult {
    pub best_delta: Vec<f64>,
    pub best_cost: f64,
    pub iterations: Vec<CiaIteration>,
}

/// Forward-difference gradient `(J(delta + eps e_i) - J(delta)) / eps`.
///
/// Components are evaluated concurrently; each probe is an independent
/// cost evaluation. A failing probe is reported with its component index.
pub fn gradient_fd<F>(cost: &F, delta: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    debug_assert!(eps > 0.0);
    let base = cost(delta)?;
    delta
        .par_iter()
        .enumerate()
        .map(|(i, _)| {
            let mut probe = delta.to_vec();
            probe[i] += eps;
            let shifted = cost(&probe).map_err(|e| CoreError::GradientProbe {
                component: i,
                source: Box::new(e),
            })?;
            Ok((shifted - base) / eps)
        })
        .collect()
}

/// Runs the identification loop against an arbitrary cost map. The cost is
/// evaluated with its argument clamped to the box, which makes the
/// composite map total on the neighborhood of the box that the
/// finite-difference probes visit.
pub fn identify_with_cost<F>(cost: F, config: &CiaConfig) -> Result<CiaResult>
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
{
    let dims = config.bounds.len();
    if dims == 0 {
        return Err(CoreError::Config("identification needs at least one component".into()));
    }
    for (lower, upper) in &config.bounds {
        if !(lower <= upper) {
            return Err(CoreError::Config(format!("invalid bounds [{lower}, {upper}]")));
        }
    }
    let bounds = config.bounds.clone();
    let clamped_cost = move |delta: &[f64]| -> Result<f64> {
        let inside: Vec<f64> = delta
            .iter()
            .zip(&bounds)
            .map(|(d, (lo, hi))| d.clamp(*lo, *hi))
            .collect();
        cost(&inside)
    };
    let clamped_cost = std::sync::Arc::new(clamped_cost);

    // Table I initialization: delta = 0 (projected into the box).
    let start: Vec<f64> = config.bounds.iter().map(|(lo, hi)| 0.0_f64.clamp(*lo, *hi)).collect();
    let mut best_delta = start.clone();
    let mut best_cost = clamped_cost(&start)?;
    let mut iterations = Vec::with_capacity(config.l_max + 1);
    let mut any_candidate = false;

    for l in 0..=config.l_max {
        let delta0 = start_point(l, &start, &config.bounds);
        let cost_for_problem = clamped_cost.clone();
        let problem = KktProblem::boxed(
            Box::new(move |d: &[f64]| cost_for_problem(d)),
            CostGradient::ForwardDifference { eps: config.gradient_eps },
            &config.bounds,
        );
        let z0 = problem.initial_vector(&delta0).pack();
        let solve = jfnk_solve(|flat| problem.residual_flat(flat), &z0, &config.solver);
        let (candidate, solver_steps, solver_converged) = match solve {
            Ok(result) => {
                let candidate = result.z[..dims].to_vec();
                (candidate, result.steps, result.converged)
            }
            Err(_) => {
                iterations.push(CiaIteration {
                    l,
                    candidate: delta0,
                    cost: None,
                    feasible: false,
                    accepted: false,
                    solver_steps: 0,
                    solver_converged: false,
                });
                continue;
            }
        };

        let snapped = snap_into_box(&candidate, &config.bounds, config.feasibility_tol);
        match snapped {
            Some(delta_star) => {
                match clamped_cost(&delta_star) {
                    Ok(cost_star) => {
                        any_candidate = true;
                        let accepted = cost_star < best_cost;
                        if accepted {
                            best_cost = cost_star;
                            best_delta = delta_star.clone();
                        }
                        iterations.push(CiaIteration {
                            l,
                            candidate: delta_star,
                            cost: Some(cost_star),
                            feasible: true,
                            accepted,
                            solver_steps,
                            solver_converged,
                        });
                    }
                    Err(_) => iterations.push(CiaIteration {
                        l,
                        candidate: delta_star,
                        cost: None,
                        feasible: true,
                        accepted: false,
                        solver_steps,
                        solver_converged,
                    }),
                }
            }
            None => iterations.push(CiaIteration {
                l,
                candidate,
                cost: None,
                feasible: false,
                accepted: false,
                solver_steps,
                solver_converged,
            }),
        }
    }

    if !any_candidate {
        return Err(CoreError::NoCandidate);
    }
    Ok(CiaResult { best_delta, best_cost, iterations })
}

/// Identification over the cascade: the cost of a candidate `delta` is the
/// final `J` of a cascade run with `delta[k]` applied to `targets[k]`.
/// Cascade evaluations are memoized, so repeated probes at the same point
/// are free.
pub fn identify(
    case: &GridCase,
    targets: &[usize],
    engine: &EngineConfig,
    config: &CiaConfig,
) -> Result<CiaResult> {
    if targets.len() != config.bounds.len() {
        return Err(CoreError::Config(format!(
            "{} target branches but {} bounds",
            targets.len(),
            config.bounds.len()
        )));
    }
    for id in targets {
        let branch = case
            .branch_by_id(*id)
            .ok_or(CoreError::BranchNotFound(*id))?;
        if !branch.is_in_service() {
            return Err(CoreError::BranchOutOfService(*id));
        }
    }
    let case = case.clone();
    let engine = engine.clone();
    let targets = targets.to_vec();
    let bounds = config.bounds.clone();
    let cache: Mutex<HashMap<Vec<u64>, f64>> = Mutex::new(HashMap::new());

    let cost = move |delta: &[f64]| -> Result<f64> {
        let key: Vec<u64> = delta.iter().map(|d| d.to_bits()).collect();
        if let Some(hit) = cache.lock().unwrap().get(&key) {
            return Ok(*hit);
        }
        let disturbances: Vec<Disturbance> = targets
            .iter()
            .zip(delta)
            .zip(&bounds)
            .map(|((branch, d), (lower, upper))| Disturbance {
                branch_id: *branch,
                delta: *d,
                lower: *lower,
                upper: *upper,
                apply_time: 0.0,
            })
            .collect();
        let outcome = run_cascade(&case, &disturbances, &engine)?;
        cache.lock().unwrap().insert(key, outcome.cost);
        Ok(outcome.cost)
    };
    identify_with_cost(cost, config)
}

/// Deterministic start schedule for the outer iterations: the zero point
/// first, then the box corners (constrained optimality candidates sit on
/// active bounds more often than not), then low-discrepancy interior
/// points so later iterations explore different basins without any
/// randomness.
fn start_point(l: usize, zero_start: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    match l {
        0 => zero_start.to_vec(),
        1 => bounds.iter().map(|(_, hi)| *hi).collect(),
        2 => bounds.iter().map(|(lo, _)| *lo).collect(),
        _ => halton_point(l - 2, bounds),
    }
}

/// Base-2/3/5... van der Corput per component.
fn halton_point(index: usize, bounds: &[(f64, f64)]) -> Vec<f64> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    bounds
        .iter()
        .enumerate()
        .map(|(k, (lower, upper))| {
            let base = PRIMES[k % PRIMES.len()];
            lower + van_der_corput(index, base) * (upper - lower)
        })
        .collect()
}

fn van_der_corput(mut index: usize, base: usize) -> f64 {
    let mut result = 0.0;
    let mut denom = 1.0;
    while index > 0 {
        denom *= base as f64;
        result += (index % base) as f64 / denom;
        index /= base;
    }
    result
}

fn snap_into_box(candidate: &[f64], bounds: &[(f64, f64)], tol: f64) -> Option<Vec<f64>> {
    let mut snapped = Vec::with_capacity(candidate.len());
    for (value, (lower, upper)) in candidate.iter().zip(bounds) {
        let slack = tol * (1.0 + lower.abs().max(upper.abs()));
        if *value < lower - slack || *value > upper + slack || !value.is_finite() {
            return None;
        }
        snapped.push(value.clamp(*lower, *upper));
    }
    Some(snapped)
}
