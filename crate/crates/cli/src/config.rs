//! Scenario configuration: a single TOML file describing the case, the
//! engine settings, device placements and parameters, and the
//! identification setup. Command-line flags override individual fields.

use anyhow::{bail, Context, Result};
use gridcascade_core::{
    CiaConfig, EngineConfig, GridCase, HvdcLink, SolverConfig, TcscParams,
};
use gridcascade_core::cascade::TcscPlacement;
use gridcascade_core::cascade::ThresholdPolicy;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: CaseSection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub tcsc: Option<TcscSection>,
    #[serde(default)]
    pub hvdc: Vec<HvdcSection>,
    pub disturbance: DisturbanceSection,
    #[serde(default)]
    pub identify: IdentifySection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    /// Case file path, resolved relative to the config file's directory.
    pub path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub dt: f64,
    pub step_time: f64,
    pub max_steps: usize,
    pub relay_preset: Option<f64>,
    pub thresholds: ThresholdSection,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            step_time: 1.0,
            max_steps: 12,
            relay_preset: None,
            thresholds: ThresholdSection::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSection {
    pub policy: String,
    pub margin: f64,
    pub floor: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self { policy: "auto_margin".into(), margin: 1.05, floor: 0.01 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcscSection {
    /// "off", "all", "from_case", or "branches".
    pub placement: String,
    #[serde(default)]
    pub branches: Vec<usize>,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default)]
    pub x_ref: f64,
    #[serde(default = "default_time_constant")]
    pub time_constant: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
}

fn default_x_min() -> f64 {
    0.0
}
fn default_x_max() -> f64 {
    10.0
}
fn default_time_constant() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvdcSection {
    pub branch: usize,
    pub rectifier: usize,
    pub inverter: usize,
    /// Radians.
    pub alpha: f64,
    pub gamma: f64,
    pub r_cr: f64,
    pub r_ci: f64,
    pub r_l: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub branch: usize,
    pub lower: f64,
    pub upper: f64,
    /// Default magnitude for `simulate` when `--disturbance` is absent.
    #[serde(default)]
    pub value: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifySection {
    pub l_max: usize,
    pub gradient_eps: f64,
    pub feasibility_tol: f64,
    pub solver: SolverSection,
    /// "cascade" (default) or "quadratic" (synthetic validation cost).
    pub cost: String,
    pub quadratic_center: f64,
}

impl Default for IdentifySection {
    fn default() -> Self {
        Self {
            l_max: 10,
            gradient_eps: 1e-2,
            feasibility_tol: 1e-8,
            solver: SolverSection::default(),
            cost: "cascade".into(),
            quadratic_center: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub eps_fd: f64,
    pub eps_min: f64,
    pub step_cap: f64,
    pub krylov_dim: usize,
    pub max_newton_steps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            eps_fd: d.eps_fd,
            eps_min: d.eps_min,
            step_cap: d.step_cap,
            krylov_dim: d.krylov_dim,
            max_newton_steps: d.max_newton_steps,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { points: 50 }
    }
}

/// Fully resolved scenario: parsed case plus core-level configs.
pub struct Scenario {
    pub case: GridCase,
    pub engine: EngineConfig,
    pub cia: CiaConfig,
    pub target_branch: usize,
    pub disturbance_value: Option<f64>,
    pub sweep_points: usize,
    pub identify_cost: IdentifyCost,
}

pub enum IdentifyCost {
    Cascade,
    Quadratic { center: f64 },
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: RunConfig =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(config)
}

impl RunConfig {
    /// Resolves the config into core types, applying CLI overrides.
    pub fn resolve(
        &self,
        config_dir: &Path,
        facts_override: Option<bool>,
        relay_t_override: Option<f64>,
    ) -> Result<Scenario> {
        let case_path = if self.case.path.is_absolute() {
            self.case.path.clone()
        } else {
            config_dir.join(&self.case.path)
        };
        let text = std::fs::read_to_string(&case_path)
            .with_context(|| format!("reading case {}", case_path.display()))?;
        let case = gridcascade_core::parse_case(&text)
            .with_context(|| format!("parsing case {}", case_path.display()))?;

        let threshold_policy = match self.engine.thresholds.policy.as_str() {
            "from_case" => ThresholdPolicy::FromCase,
            "auto_margin" => ThresholdPolicy::AutoMargin {
                margin: self.engine.thresholds.margin,
                floor: self.engine.thresholds.floor,
            },
            "unlimited" => ThresholdPolicy::Unlimited,
            other => bail!("unknown threshold policy '{other}'"),
        };

        let (tcsc_placement, tcsc_params) = match &self.tcsc {
            None => (TcscPlacement::Off, TcscParams::default()),
            Some(section) => {
                let placement = match section.placement.as_str() {
                    "off" => TcscPlacement::Off,
                    "all" => TcscPlacement::All,
                    "from_case" => TcscPlacement::FromCase,
                    "branches" => TcscPlacement::Branches(section.branches.clone()),
                    other => bail!("unknown tcsc placement '{other}'"),
                };
                let params = TcscParams {
                    x_min: section.x_min,
                    x_max: section.x_max,
                    x_ref: section.x_ref,
                    time_constant: section.time_constant,
                    k_p: section.k_p,
                    k_i: section.k_i,
                    k_d: section.k_d,
                };
                (placement, params)
            }
        };
        let tcsc_placement = match facts_override {
            Some(true) => TcscPlacement::All,
            Some(false) => TcscPlacement::Off,
            None => tcsc_placement,
        };

        let hvdc: Vec<HvdcLink> = self
            .hvdc
            .iter()
            .map(|section| HvdcLink {
                branch_id: section.branch,
                alpha: section.alpha,
                gamma: section.gamma,
                r_cr: section.r_cr,
                r_ci: section.r_ci,
                r_l: section.r_l,
                rectifier_bus: section.rectifier,
                inverter_bus: section.inverter,
            })
            .collect();
        for link in &hvdc {
            let in_band = link
                .validate()
                .with_context(|| format!("HVDC link on branch {}", link.branch_id))?;
            if !in_band {
                eprintln!(
                    "warning: HVDC link on branch {}: gamma {:.4} rad is outside the nominal \
                     [pi/12, pi/9] band; proceeding with the configured value",
                    link.branch_id, link.gamma
                );
            }
        }

        let step_time = relay_t_override.unwrap_or(self.engine.step_time);
        let relay_preset = match relay_t_override {
            Some(t) => Some(t),
            None => self.engine.relay_preset,
        };
        let engine = EngineConfig {
            dt: self.engine.dt,
            step_time,
            max_steps: self.engine.max_steps,
            relay_preset,
            threshold_policy,
            tcsc_placement,
            tcsc_params,
            hvdc,
        };
        engine.validate().context("engine configuration")?;

        if !(self.disturbance.lower <= self.disturbance.upper) {
            bail!(
                "disturbance bounds [{}, {}] are inverted",
                self.disturbance.lower,
                self.disturbance.upper
            );
        }

        let cia = CiaConfig {
            l_max: self.identify.l_max,
            solver: SolverConfig {
                eps_fd: self.identify.solver.eps_fd,
                eps_min: self.identify.solver.eps_min,
                step_cap: self.identify.solver.step_cap,
                krylov_dim: self.identify.solver.krylov_dim,
                max_newton_steps: self.identify.solver.max_newton_steps,
            },
            bounds: vec![(self.disturbance.lower, self.disturbance.upper)],
            gradient_eps: self.identify.gradient_eps,
            feasibility_tol: self.identify.feasibility_tol,
        };

        let identify_cost = match self.identify.cost.as_str() {
            "cascade" => IdentifyCost::Cascade,
            "quadratic" => IdentifyCost::Quadratic { center: self.identify.quadratic_center },
            other => bail!("unknown identify cost '{other}'"),
        };

        Ok(Scenario {
            case,
            engine,
            cia,
            target_branch: self.disturbance.branch,
            disturbance_value: self.disturbance.value,
            sweep_points: self.sweep.points,
            identify_cost,
        })
    }
}
