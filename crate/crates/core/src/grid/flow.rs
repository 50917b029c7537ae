//! DC power flow: per-island solution of `B theta = P`.

use super::{GridCase, IslandPartition};
use crate::error::{CoreError, Result};
use crate::linalg::DenseMatrix;
use serde::{Deserialize, Serialize};

/// Result of a DC power-flow solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSolution {
    /// Branch flows in per-unit, aligned with `case.branches`. The sign is
    /// positive from `from_bus` to `to_bus`. Tripped and HVDC branches are
    /// exactly zero.
    pub flows: Vec<f64>,
    /// Bus voltage angles in radians, aligned with `case.buses`. Slack and
    /// de-energized buses sit at zero.
    pub angles: Vec<f64>,
    /// Chosen slack bus id per island (aligned with the partition), `None`
    /// for islands without generation.
    pub slacks: Vec<Option<usize>>,
}

impl FlowSolution {
    /// Sum of squared branch flows over in-service branches.
    pub fn squared_norm(&self) -> f64 {
        self.flows.iter().map(|f| f * f).sum()
    }
}

/// Solves the DC power flow for every island of the partition.
///
/// For each island containing at least one generation-capable bus, the
/// reduced susceptance system is solved with the island slack (the
/// designated reference bus when present, otherwise the generation bus
/// with the lowest id) absorbing the island imbalance. Islands without
/// generation are de-energized: all their loads are shed and internal
/// flows are zero.
pub fn dc_power_flow(case: &GridCase, partition: &IslandPartition) -> Result<FlowSolution> {
    let n = case.buses.len();
    let mut angles = vec![0.0; n];
    let mut slacks = Vec::with_capacity(partition.islands.len());
    let mut energized = vec![false; n];

    for (island_idx, island) in partition.islands.iter().enumerate() {
        let slack = choose_slack(case, island);
        slacks.push(slack);
        let Some(slack_id) = slack else {
            continue; // no generation: de-energized, angles stay zero
        };
        for &id in island {
            let pos = case
                .bus_position(id)
                .ok_or_else(|| CoreError::Config(format!("partition references unknown bus {id}")))?;
            energized[pos] = true;
        }
        if island.len() == 1 {
            continue; // single energized bus, nothing to solve
        }

        // local numbering for the island without its slack bus
        let mut local: Vec<usize> = Vec::with_capacity(island.len() - 1);
        let mut local_of_bus = vec![usize::MAX; n];
        for &id in island {
            if id == slack_id {
                continue;
            }
            let pos = case.bus_position(id).unwrap();
            local_of_bus[pos] = local.len();
            local.push(pos);
        }

        let m = local.len();
        let mut b = DenseMatrix::zeros(m);
        for branch in &case.branches {
            if !branch.carries_ac() {
                continue;
            }
            let (Some(i), Some(j)) = (case.bus_position(branch.from_bus), case.bus_position(branch.to_bus))
            else {
                continue;
            };
            let (li, lj) = (local_of_bus[i], local_of_bus[j]);
            let in_island = island.binary_search(&branch.from_bus).is_ok();
            if !in_island {
                continue;
            }
            let y = branch.susceptance;
            if li != usize::MAX {
                b.add(li, li, y);
            }
            if lj != usize::MAX {
                b.add(lj, lj, y);
            }
            if li != usize::MAX && lj != usize::MAX {
                b.add(li, lj, -y);
                b.add(lj, li, -y);
            }
        }
        let rhs: Vec<f64> = local.iter().map(|&pos| case.buses[pos].injection).collect();
        let theta = b
            .solve_into(&rhs)
            .ok_or(CoreError::SingularIsland { island: island_idx })?;
        for (&pos, &t) in local.iter().zip(&theta) {
            angles[pos] = t;
        }
    }

    let mut flows = vec![0.0; case.branches.len()];
    for (k, branch) in case.branches.iter().enumerate() {
        if !branch.carries_ac() {
            continue;
        }
        let i = case.bus_position(branch.from_bus).unwrap();
        let j = case.bus_position(branch.to_bus).unwrap();
        if !energized[i] {
            continue; // de-energized island
        }
        flows[k] = branch.susceptance * (angles[i] - angles[j]);
    }

    Ok(FlowSolution { flows, angles, slacks })
}

fn choose_slack(case: &GridCase, island: &[usize]) -> Option<usize> {
    if island.binary_search(&case.reference_bus).is_ok() {
        return Some(case.reference_bus);
    }
    island
        .iter()
        .copied()
        .filter(|&id| {
            case.bus_position(id)
                .map(|pos| case.buses[pos].kind.is_generation())
                .unwrap_or(false)
        })
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{electrical_islands, parse_case};

    #[test]
    fn two_bus_flow_matches_injection() {
        let case = parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -1.0\nBRANCH 1 1 2 10.0 1.1 none\n",
        )
        .unwrap();
        let partition = electrical_islands(&case);
        let sol = dc_power_flow(&case, &partition).unwrap();
        assert!((sol.flows[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.slacks, vec![Some(1)]);
    }

    #[test]
    fn three_bus_ring_matches_dense_oracle() {
        // symmetric ring, equal susceptances; oracle solves the reduced
        // 2x2 system directly.
        let case = parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -0.5\nBUS 3 load -0.5\n\
             BRANCH 1 1 2 5.0 2.0 none\nBRANCH 2 2 3 5.0 2.0 none\nBRANCH 3 1 3 5.0 2.0 none\n",
        )
        .unwrap();
        let partition = electrical_islands(&case);
        let sol = dc_power_flow(&case, &partition).unwrap();

        // reduced B over buses {2,3}: [[10,-5],[-5,10]], P = [-0.5,-0.5]
        // theta = B^-1 P = [-0.1, -0.1]
        assert!((sol.angles[1] + 0.1).abs() < 1e-12);
        assert!((sol.angles[2] + 0.1).abs() < 1e-12);
        assert!((sol.flows[0] - 0.5).abs() < 1e-12); // 1->2
        assert!((sol.flows[1] - 0.0).abs() < 1e-12); // 2->3
        assert!((sol.flows[2] - 0.5).abs() < 1e-12); // 1->3
    }

    #[test]
    fn island_without_generation_is_shed() {
        let case = parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -1.0\nBUS 3 load -0.4\nBUS 4 load -0.6\n\
             BRANCH 1 1 2 10.0 1.1 none\nBRANCH 2 3 4 10.0 1.1 none\n",
        )
        .unwrap();
        let partition = electrical_islands(&case);
        let sol = dc_power_flow(&case, &partition).unwrap();
        assert!((sol.flows[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.flows[1], 0.0);
        assert_eq!(sol.slacks[1], None);
    }

    #[test]
    fn singular_island_is_reported() {
        // bus 3 is connected only through a branch that also serves as its
        // sole tie; cutting susceptance to ~0 is rejected by the parser, so
        // build a genuinely singular system: two identical buses joined to
        // nothing else cannot happen with positive susceptances, so instead
        // force singularity through a zero-susceptance override.
        let mut case = parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -0.5\nBUS 3 load -0.5\n\
             BRANCH 1 1 2 10.0 1.1 none\nBRANCH 2 2 3 10.0 1.1 none\n",
        )
        .unwrap();
        case.branches[1].susceptance = 0.0; // degenerate but still "in service"
        let partition = electrical_islands(&case); // still one island by status
        match dc_power_flow(&case, &partition) {
            Err(CoreError::SingularIsland { island }) => assert_eq!(island, 0),
            other => panic!("expected singular island, got {other:?}"),
        }
    }
}
