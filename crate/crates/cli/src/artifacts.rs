//! Artifact writers. Every file is a deterministic function of the run:
//! fixed column orders, struct-ordered JSON, and shortest-round-trip float
//! formatting.

use anyhow::{Context, Result};
use gridcascade_core::cascade::OutageCause;
use gridcascade_core::{CascadeOutcome, CiaResult, IslandPartition};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing json")?;
    text.push('\n');
    write_text(path, &text)
}

/// `time,branch_id,event` rows, one per tripped branch, chronological.
pub fn timeline_csv(outcome: &CascadeOutcome) -> String {
    let mut out = String::from("time,branch_id,event\n");
    for event in &outcome.outage_timeline {
        let label = match event.cause {
            OutageCause::Disturbance => "disturbance",
            OutageCause::Relay => "relay",
        };
        for id in &event.branch_ids {
            let _ = writeln!(out, "{},{},{}", event.time, id, label);
        }
    }
    out
}

/// Cumulative outage count sampled at every step boundary `k * T`
/// (the shape of an outage-propagation plot).
pub fn outage_series(outcome: &CascadeOutcome, step_time: f64) -> Vec<(f64, usize)> {
    let mut series = Vec::with_capacity(outcome.terminated_at_step + 1);
    for step in 0..=outcome.terminated_at_step {
        let boundary = step as f64 * step_time;
        let count: usize = outcome
            .outage_timeline
            .iter()
            .filter(|e| e.time <= boundary + 1e-12)
            .map(|e| e.branch_ids.len())
            .sum();
        series.push((boundary, count));
    }
    series
}

pub fn outage_series_csv(series: &[(f64, usize)]) -> String {
    let mut out = String::from("time,outage_count\n");
    for (time, count) in series {
        let _ = writeln!(out, "{time},{count}");
    }
    out
}

/// Minimal static SVG render of the outage-count series.
pub fn outage_series_svg(series: &[(f64, usize)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 50.0;
    let t_max = series.last().map(|(t, _)| *t).unwrap_or(1.0).max(1e-9);
    let n_max = series.iter().map(|(_, n)| *n).max().unwrap_or(1).max(1) as f64;
    let x = |t: f64| MARGIN + (t / t_max) * (W - 2.0 * MARGIN);
    let y = |n: f64| H - MARGIN - (n / n_max) * (H - 2.0 * MARGIN);

    let mut points = String::new();
    for (t, n) in series {
        let _ = write!(points, "{:.2},{:.2} ", x(*t), y(*n as f64));
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = H - MARGIN
    );
    let _ = writeln!(
        svg,
        "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>",
        points.trim_end()
    );
    for (t, n) in series {
        let _ = writeln!(
            svg,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>",
            x(*t),
            y(*n as f64)
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\">time (s)</text>",
        W / 2.0 - 20.0,
        H - MARGIN / 3.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\" transform=\"rotate(-90 14 {:.0})\">outage count</text>",
        14.0,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{m:.0}\" y=\"{:.0}\" font-size=\"11\">0</text>",
        H - MARGIN + 14.0,
        m = MARGIN
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"11\">{t_max}</text>",
        W - MARGIN - 6.0,
        H - MARGIN + 14.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"11\">{}</text>",
        MARGIN - 24.0,
        MARGIN + 4.0,
        n_max as usize
    );
    svg.push_str("</svg>\n");
    svg
}

/// `branch_id,flow,susceptance,threshold,status` for the final state.
pub fn flows_csv(outcome: &CascadeOutcome, case: &gridcascade_core::GridCase) -> String {
    let mut out = String::from("branch_id,flow,susceptance,threshold,status\n");
    for (k, branch) in case.branches.iter().enumerate() {
        let tripped = outcome
            .outage_timeline
            .iter()
            .any(|e| e.branch_ids.contains(&branch.id));
        let status = if tripped { "tripped" } else { "in_service" };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            branch.id, outcome.final_flows[k], outcome.final_susceptances[k], outcome.thresholds[k], status
        );
    }
    out
}

#[derive(Serialize)]
pub struct SimulationSummary<'a> {
    pub cost: f64,
    pub outage_count: usize,
    pub island_count: usize,
    pub isolated_buses: usize,
    pub terminated_at_step: usize,
    pub disturbance_branch: usize,
    pub disturbance_value: f64,
    pub islands: &'a IslandPartition,
}

/// `l,candidate,cost` rows; unevaluable candidates leave the cost empty.
pub fn cia_iterations_csv(result: &CiaResult) -> String {
    let mut out = String::from("l,candidate,cost\n");
    for it in &result.iterations {
        let candidate = it
            .candidate
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(";");
        match it.cost {
            Some(cost) => {
                let _ = writeln!(out, "{},{},{}", it.l, candidate, cost);
            }
            None => {
                let _ = writeln!(out, "{},{},", it.l, candidate);
            }
        }
    }
    out
}

pub struct SweepRow {
    pub delta: f64,
    pub cost: Option<f64>,
    pub outages: Option<usize>,
    pub islands: Option<usize>,
    pub error: Option<String>,
}

/// `delta,cost,outages,islands,error`; failed points carry the error text
/// and empty numeric fields.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("delta,cost,outages,islands,error\n");
    for row in rows {
        let cost = row.cost.map(|v| v.to_string()).unwrap_or_default();
        let outages = row.outages.map(|v| v.to_string()).unwrap_or_default();
        let islands = row.islands.map(|v| v.to_string()).unwrap_or_default();
        let error = row.error.clone().unwrap_or_default().replace(',', ";");
        let _ = writeln!(out, "{},{},{},{},{}", row.delta, cost, outages, islands, error);
    }
    out
}
