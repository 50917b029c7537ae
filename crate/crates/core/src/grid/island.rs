//! Island decomposition: connected components of the bus graph.

use super::GridCase;
use serde::{Deserialize, Serialize};

/// Partition of the buses into islands.
///
/// Islands are ordered by their smallest contained bus id and each island
/// lists its bus ids in ascending order, so the partition is a
/// deterministic function of the case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IslandPartition {
    pub islands: Vec<Vec<usize>>,
    /// Number of single-bus islands.
    pub isolated_buses: usize,
}

impl IslandPartition {
    pub fn island_count(&self) -> usize {
        self.islands.len()
    }

    /// Island index containing the given bus id, if any.
    pub fn island_of(&self, bus_id: usize) -> Option<usize> {
        self.islands.iter().position(|island| island.binary_search(&bus_id).is_ok())
    }
}

/// Connected components induced by all in-service branches.
pub fn island_decomposition(case: &GridCase) -> IslandPartition {
    partition(case, |i| case.branches[i].is_in_service())
}

/// Connected components induced by in-service branches that contribute
/// admittance to the network matrix (HVDC corridors excluded). This is the
/// partition the DC flow solver operates on.
pub fn electrical_islands(case: &GridCase) -> IslandPartition {
    partition(case, |i| case.branches[i].carries_ac())
}

fn partition(case: &GridCase, keep: impl Fn(usize) -> bool) -> IslandPartition {
    let n = case.buses.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, branch) in case.branches.iter().enumerate() {
        if !keep(i) {
            continue;
        }
        let (Some(a), Some(b)) = (case.bus_position(branch.from_bus), case.bus_position(branch.to_bus))
        else {
            continue;
        };
        adjacency[a].push(b);
        adjacency[b].push(a);
    }

    let mut seen = vec![false; n];
    let mut islands: Vec<Vec<usize>> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(case.buses[v].id);
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        islands.push(members);
    }
    islands.sort_by_key(|island| island[0]);
    let isolated_buses = islands.iter().filter(|i| i.len() == 1).count();
    IslandPartition { islands, isolated_buses }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_case, BranchStatus};

    fn chain_case(trip_middle: bool) -> GridCase {
        let mut case = parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -0.5\nBUS 3 load -0.5\n\
             BRANCH 1 1 2 10.0 2.0 none\nBRANCH 2 2 3 10.0 2.0 none\n",
        )
        .unwrap();
        if trip_middle {
            case.branches[1].status = BranchStatus::Tripped;
        }
        case
    }

    #[test]
    fn connected_case_is_one_island() {
        let p = island_decomposition(&chain_case(false));
        assert_eq!(p.islands, vec![vec![1, 2, 3]]);
        assert_eq!(p.isolated_buses, 0);
    }

    #[test]
    fn tripping_splits_island() {
        let p = island_decomposition(&chain_case(true));
        assert_eq!(p.islands, vec![vec![1, 2], vec![3]]);
        assert_eq!(p.isolated_buses, 1);
    }

    #[test]
    fn fully_separated_two_bus_case() {
        let mut case = parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -1.0\nBRANCH 1 1 2 10.0 1.1 none\n",
        )
        .unwrap();
        case.branches[0].status = BranchStatus::Tripped;
        let p = island_decomposition(&case);
        assert_eq!(p.island_count(), 2);
        assert_eq!(p.isolated_buses, 2);
    }

    #[test]
    fn hvdc_counts_for_reporting_but_not_electrically() {
        let case = parse_case(
            "REF 1\nBUS 1 generator 1.0\nBUS 2 load -1.0\nBRANCH 1 1 2 10.0 1.1 hvdc\n",
        )
        .unwrap();
        assert_eq!(island_decomposition(&case).island_count(), 1);
        assert_eq!(electrical_islands(&case).island_count(), 2);
    }
}
