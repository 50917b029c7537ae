//! Network model: buses, branches, case-file parsing, island
//! decomposition and DC power flow.

mod flow;
mod island;
mod parse;

pub use flow::{dc_power_flow, FlowSolution};
pub use island::{electrical_islands, island_decomposition, IslandPartition};
pub use parse::parse_case;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Role of a bus in the case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Generator,
    Load,
    Reference,
}

impl BusKind {
    /// Whether the bus can serve as a source of generation (and hence as an
    /// island slack candidate).
    pub fn is_generation(self) -> bool {
        matches!(self, BusKind::Generator | BusKind::Reference)
    }
}

/// Device attached to a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    None,
    Tcsc,
    Hvdc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchStatus {
    InService,
    Tripped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    /// Net injected real power in per-unit; positive means generation.
    pub injection: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Per-unit susceptance; always positive for an in-service line.
    pub susceptance: f64,
    /// Relay threshold sigma in per-unit power, > 0.
    pub flow_threshold: f64,
    pub status: BranchStatus,
    pub device: DeviceKind,
}

impl Branch {
    pub fn is_in_service(&self) -> bool {
        self.status == BranchStatus::InService
    }

    /// Whether the branch contributes admittance to the AC network matrix.
    /// HVDC corridors are modeled as paired injections instead and tripped
    /// branches contribute nothing.
    pub fn carries_ac(&self) -> bool {
        self.is_in_service() && self.device != DeviceKind::Hvdc
    }
}

/// A parsed transmission case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCase {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    /// System base in MVA, > 0.
    pub base_mva: f64,
    /// Id of the designated reference bus.
    pub reference_bus: usize,
    #[serde(skip)]
    bus_index: HashMap<usize, usize>,
    #[serde(skip)]
    branch_index: HashMap<usize, usize>,
}

impl GridCase {
    /// Builds a case from raw parts, indexing ids. Caller is responsible
    /// for the structural invariants (the parser enforces them for file
    /// input).
    pub fn new(buses: Vec<Bus>, branches: Vec<Branch>, base_mva: f64, reference_bus: usize) -> Self {
        let bus_index = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let branch_index = branches.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        Self { buses, branches, base_mva, reference_bus, bus_index, branch_index }
    }

    pub fn bus_position(&self, id: usize) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn branch_position(&self, id: usize) -> Option<usize> {
        self.branch_index.get(&id).copied()
    }

    pub fn branch_by_id(&self, id: usize) -> Option<&Branch> {
        self.branch_position(id).map(|i| &self.branches[i])
    }

    /// Rebuilds the id lookup tables; needed after deserializing.
    pub fn reindex(&mut self) {
        self.bus_index = self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        self.branch_index = self.branches.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    }
}
