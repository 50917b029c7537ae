//! The three verbs: simulate, identify, sweep.

use crate::artifacts::{
    cia_iterations_csv, flows_csv, outage_series, outage_series_csv, outage_series_svg,
    sweep_csv, timeline_csv, write_json, write_text, SimulationSummary, SweepRow,
};
use crate::config::{IdentifyCost, Scenario};
use anyhow::{bail, Context, Result};
use gridcascade_core::{identify, identify_with_cost, run_cascade, CiaResult, Disturbance};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

pub fn cmd_simulate(
    scenario: &Scenario,
    disturbance_flag: Option<f64>,
    out_dir: &Path,
) -> Result<()> {
    let value = match disturbance_flag.or(scenario.disturbance_value) {
        Some(v) => v,
        None => bail!("no disturbance value: set --disturbance or [disturbance].value"),
    };
    let disturbance = Disturbance {
        branch_id: scenario.target_branch,
        delta: value,
        lower: scenario.cia.bounds[0].0,
        upper: scenario.cia.bounds[0].1,
        apply_time: 0.0,
    };
    let outcome = run_cascade(&scenario.case, &[disturbance], &scenario.engine)?;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_text(&out_dir.join("timeline.csv"), &timeline_csv(&outcome))?;
    write_text(&out_dir.join("flows.csv"), &flows_csv(&outcome, &scenario.case))?;
    write_json(&out_dir.join("islands.json"), &outcome.islands)?;
    let series = outage_series(&outcome, scenario.engine.step_time);
    write_text(&out_dir.join("outage_series.csv"), &outage_series_csv(&series))?;
    write_text(&out_dir.join("outage_series.svg"), &outage_series_svg(&series))?;
    write_json(
        &out_dir.join("summary.json"),
        &SimulationSummary {
            cost: outcome.cost,
            outage_count: outcome.outage_count(),
            island_count: outcome.islands.island_count(),
            isolated_buses: outcome.islands.isolated_buses,
            terminated_at_step: outcome.terminated_at_step,
            disturbance_branch: scenario.target_branch,
            disturbance_value: value,
            islands: &outcome.islands,
        },
    )?;
    println!(
        "simulate: delta={} cost={:.4} outages={} islands={} steps={}",
        value,
        outcome.cost,
        outcome.outage_count(),
        outcome.islands.island_count(),
        outcome.terminated_at_step
    );
    Ok(())
}

#[derive(Serialize)]
struct IdentifyArtifact<'a> {
    target_branch: usize,
    bounds: (f64, f64),
    best_delta: &'a [f64],
    best_cost: f64,
    iterations: usize,
    result: &'a CiaResult,
}

pub fn cmd_identify(scenario: &Scenario, out_dir: &Path) -> Result<()> {
    let result = match scenario.identify_cost {
        IdentifyCost::Cascade => identify(
            &scenario.case,
            &[scenario.target_branch],
            &scenario.engine,
            &scenario.cia,
        )?,
        IdentifyCost::Quadratic { center } => identify_with_cost(
            move |d: &[f64]| Ok((d[0] - center) * (d[0] - center)),
            &scenario.cia,
        )?,
    };

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_json(
        &out_dir.join("cia_result.json"),
        &IdentifyArtifact {
            target_branch: scenario.target_branch,
            bounds: scenario.cia.bounds[0],
            best_delta: &result.best_delta,
            best_cost: result.best_cost,
            iterations: result.iterations.len(),
            result: &result,
        },
    )?;
    write_text(&out_dir.join("cia_iterations.csv"), &cia_iterations_csv(&result))?;
    println!(
        "identify: best_delta={:?} best_cost={:.4} iterations={}",
        result.best_delta,
        result.best_cost,
        result.iterations.len()
    );
    Ok(())
}

pub fn cmd_sweep(scenario: &Scenario, points_flag: Option<usize>, out_dir: &Path) -> Result<()> {
    let points = points_flag.unwrap_or(scenario.sweep_points);
    let (lower, upper) = scenario.cia.bounds[0];
    let grid: Vec<f64> = if points == 0 {
        Vec::new()
    } else if points == 1 || upper == lower {
        vec![lower]
    } else {
        (0..points)
            .map(|i| lower + (upper - lower) * i as f64 / (points - 1) as f64)
            .collect()
    };

    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&delta| {
            let disturbance = Disturbance {
                branch_id: scenario.target_branch,
                delta,
                lower,
                upper,
                apply_time: 0.0,
            };
            match run_cascade(&scenario.case, &[disturbance], &scenario.engine) {
                Ok(outcome) => SweepRow {
                    delta,
                    cost: Some(outcome.cost),
                    outages: Some(outcome.outage_count()),
                    islands: Some(outcome.islands.island_count()),
                    error: None,
                },
                Err(e) => SweepRow {
                    delta,
                    cost: None,
                    outages: None,
                    islands: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_text(&out_dir.join("sweep.csv"), &sweep_csv(&rows))?;

    let best = rows
        .iter()
        .filter_map(|r| r.cost.map(|c| (r.delta, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((delta, cost)) => {
            println!("sweep: {} points, min cost {:.4} at delta={}", rows.len(), cost, delta)
        }
        None => println!("sweep: {} points, no successful evaluations", rows.len()),
    }
    Ok(())
}
