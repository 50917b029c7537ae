//! Plain-text case-file parser.
//!
//! The format is line oriented and whitespace delimited; `#` starts a
//! comment that runs to the end of the line. Rows:
//!
//! ```text
//! BASE <mva>
//! REF <bus_id>
//! BUS <id> <generator|load|reference> <injection_pu>
//! BRANCH <id> <from_bus> <to_bus> <susceptance_pu> <threshold_pu> <none|tcsc|hvdc>
//! ```
//!
//! Rows may appear in any order; every branch starts in service.

use super::{Branch, BranchStatus, Bus, BusKind, DeviceKind, GridCase};
use crate::error::ParseError;
use std::collections::HashMap;

pub fn parse_case(text: &str) -> Result<GridCase, ParseError> {
    let mut buses: Vec<Bus> = Vec::new();
    let mut branches: Vec<(usize, Branch)> = Vec::new(); // (line, branch)
    let mut bus_lines: HashMap<usize, usize> = HashMap::new();
    let mut branch_ids: HashMap<usize, usize> = HashMap::new();
    let mut base_mva: Option<f64> = None;
    let mut reference: Option<(usize, usize)> = None; // (line, bus id)

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        match fields[0] {
            "BASE" => {
                expect_fields(line, &fields, 2)?;
                let mva = parse_real(line, fields[1], "base MVA")?;
                if mva <= 0.0 {
                    return Err(ParseError::InvalidValue {
                        line,
                        detail: format!("base MVA must be positive, got {mva}"),
                    });
                }
                if base_mva.replace(mva).is_some() {
                    return Err(ParseError::InvalidValue {
                        line,
                        detail: "duplicate BASE row".into(),
                    });
                }
            }
            "REF" => {
                expect_fields(line, &fields, 2)?;
                let id = parse_id(line, fields[1], "reference bus id")?;
                if reference.replace((line, id)).is_some() {
                    return Err(ParseError::InvalidValue {
                        line,
                        detail: "duplicate REF row".into(),
                    });
                }
            }
            "BUS" => {
                expect_fields(line, &fields, 4)?;
                let id = parse_id(line, fields[1], "bus id")?;
                let kind = match fields[2] {
                    "generator" => BusKind::Generator,
                    "load" => BusKind::Load,
                    "reference" => BusKind::Reference,
                    other => {
                        return Err(ParseError::MalformedRow {
                            line,
                            detail: format!("unknown bus kind '{other}'"),
                        })
                    }
                };
                let injection = parse_real(line, fields[3], "injection")?;
                if !injection.is_finite() {
                    return Err(ParseError::InvalidValue {
                        line,
                        detail: format!("bus {id} injection is not finite"),
                    });
                }
                if bus_lines.insert(id, line).is_some() {
                    return Err(ParseError::DuplicateBus { line, id });
                }
                buses.push(Bus { id, kind, injection });
            }
            "BRANCH" => {
                expect_fields(line, &fields, 7)?;
                let id = parse_id(line, fields[1], "branch id")?;
                let from_bus = parse_id(line, fields[2], "from bus")?;
                let to_bus = parse_id(line, fields[3], "to bus")?;
                let susceptance = parse_real(line, fields[4], "susceptance")?;
                let flow_threshold = parse_real(line, fields[5], "threshold")?;
                let device = match fields[6] {
                    "none" => DeviceKind::None,
                    "tcsc" => DeviceKind::Tcsc,
                    "hvdc" => DeviceKind::Hvdc,
                    other => {
                        return Err(ParseError::MalformedRow {
                            line,
                            detail: format!("unknown device '{other}'"),
                        })
                    }
                };
                if from_bus == to_bus {
                    return Err(ParseError::SelfLoop { line, branch: id, bus: from_bus });
                }
                if !(susceptance.is_finite() && susceptance > 0.0) {
                    return Err(ParseError::InvalidValue {
                        line,
                        detail: format!("branch {id} susceptance must be positive and finite"),
                    });
                }
                if !(flow_threshold.is_finite() && flow_threshold > 0.0) {
                    return Err(ParseError::InvalidValue {
                        line,
                        detail: format!("branch {id} threshold must be positive and finite"),
                    });
                }
                if branch_ids.insert(id, line).is_some() {
                    return Err(ParseError::DuplicateBranch { line, id });
                }
                branches.push((
                    line,
                    Branch {
                        id,
                        from_bus,
                        to_bus,
                        susceptance,
                        flow_threshold,
                        status: BranchStatus::InService,
                        device,
                    },
                ));
            }
            other => {
                return Err(ParseError::MalformedRow {
                    line,
                    detail: format!("unknown row keyword '{other}'"),
                })
            }
        }
    }

    if buses.is_empty() {
        return Err(ParseError::EmptyCase);
    }
    let (ref_line, reference_bus) = reference.ok_or(ParseError::MissingReference)?;
    if !bus_lines.contains_key(&reference_bus) {
        return Err(ParseError::UnknownReference { line: ref_line, id: reference_bus });
    }
    // A bus may only carry the `reference` kind if it is the designated one.
    for bus in &buses {
        if bus.kind == BusKind::Reference && bus.id != reference_bus {
            return Err(ParseError::InvalidValue {
                line: bus_lines[&bus.id],
                detail: format!(
                    "bus {} declared as reference but REF designates bus {}",
                    bus.id, reference_bus
                ),
            });
        }
    }
    for (line, br) in &branches {
        for endpoint in [br.from_bus, br.to_bus] {
            if !bus_lines.contains_key(&endpoint) {
                return Err(ParseError::DanglingEndpoint {
                    line: *line,
                    branch: br.id,
                    bus: endpoint,
                });
            }
        }
    }

    let base_mva = base_mva.unwrap_or(100.0);
    let branches = branches.into_iter().map(|(_, b)| b).collect();
    Ok(GridCase::new(buses, branches, base_mva, reference_bus))
}

fn expect_fields(line: usize, fields: &[&str], want: usize) -> Result<(), ParseError> {
    if fields.len() != want {
        return Err(ParseError::MalformedRow {
            line,
            detail: format!("expected {} fields, found {}", want, fields.len()),
        });
    }
    Ok(())
}

fn parse_id(line: usize, text: &str, what: &str) -> Result<usize, ParseError> {
    text.parse().map_err(|_| ParseError::MalformedRow {
        line,
        detail: format!("invalid {what} '{text}'"),
    })
}

fn parse_real(line: usize, text: &str, what: &str) -> Result<f64, ParseError> {
    text.parse().map_err(|_| ParseError::MalformedRow {
        line,
        detail: format!("invalid {what} '{text}'"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "\
# smallest valid network
BASE 100
REF 1
BUS 1 generator 1.0
BUS 2 load -1.0
BRANCH 1 1 2 10.0 1.05 none
";

    #[test]
    fn parses_two_bus_case() {
        let case = parse_case(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert_eq!(case.reference_bus, 1);
        assert_eq!(case.base_mva, 100.0);
        assert!(case.branches[0].is_in_service());
    }

    #[test]
    fn rejects_dangling_endpoint() {
        let text = "BASE 100\nREF 1\nBUS 1 generator 1.0\nBRANCH 1 1 999 10.0 1.0 none\n";
        match parse_case(text) {
            Err(ParseError::DanglingEndpoint { line, branch, bus }) => {
                assert_eq!(line, 4);
                assert_eq!(branch, 1);
                assert_eq!(bus, 999);
            }
            other => panic!("expected dangling endpoint, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_bus() {
        let text = "REF 1\nBUS 1 load 0.0\nBUS 1 load 0.0\n";
        match parse_case(text) {
            Err(ParseError::DuplicateBus { line, id }) => {
                assert_eq!(line, 3);
                assert_eq!(id, 1);
            }
            other => panic!("expected duplicate bus, got {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_reference() {
        let text = "BUS 1 load 0.0\n";
        assert!(matches!(parse_case(text), Err(ParseError::MissingReference)));
    }

    #[test]
    fn rejects_malformed_row_with_line_number() {
        let text = "REF 1\nBUS 1 load 0.0\nBRANCH 1 1\n";
        match parse_case(text) {
            Err(ParseError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed row, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let text = "REF 1\nBUS 1 load 0.0\nBUS 2 load 0.0\nBRANCH 1 1 2 5.0 0.0 none\n";
        assert!(matches!(parse_case(text), Err(ParseError::InvalidValue { line: 4, .. })));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\n# header\nREF 7\nBUS 7 reference 0.5 # slack\n";
        let case = parse_case(text).unwrap();
        assert_eq!(case.buses.len(), 1);
        assert_eq!(case.reference_bus, 7);
    }
}
