//! Plain-text edge lists.
//!
//! Format: an optional header line `n <count>`, then one arc per line as
//! `u w` (ASCII decimal, single space). Lines starting with `#` are comments.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

use super::{DirectedGraph, GraphError, NodeId};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: malformed arc line {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: node id {text} overflows the id space")]
    IdOverflow { line: usize, text: String },
    #[error("line {line}: node id {id} not below declared count {n}")]
    OutOfRange { line: usize, id: u64, n: usize },
    #[error("line {line}: duplicate arc {u} -> {w}")]
    DuplicateArc { line: usize, u: NodeId, w: NodeId },
    #[error("line {line}: header must precede all arcs")]
    LateHeader { line: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_id(tok: &str, line: usize) -> Result<NodeId, ParseError> {
    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::Malformed {
            line,
            text: tok.to_string(),
        });
    }
    tok.parse::<NodeId>().map_err(|_| ParseError::IdOverflow {
        line,
        text: tok.to_string(),
    })
}

pub fn load_edge_list<R: BufRead>(reader: R) -> Result<DirectedGraph, ParseError> {
    let mut declared: Option<usize> = None;
    let mut arcs: Vec<(NodeId, NodeId)> = Vec::new();
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut max_id: Option<NodeId> = None;

    for (idx, raw) in reader.lines().enumerate() {
        let line = idx + 1;
        let raw = raw?;
        let text = raw.strip_suffix('\r').unwrap_or(&raw);
        if text.starts_with('#') || text.trim().is_empty() {
            continue;
        }
        let mut parts = text.split(' ');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(ParseError::Malformed {
                    line,
                    text: text.to_string(),
                })
            }
        };
        if a == "n" {
            if declared.is_some() || !arcs.is_empty() {
                return Err(ParseError::LateHeader { line });
            }
            let count = b.parse::<usize>().map_err(|_| ParseError::Malformed {
                line,
                text: text.to_string(),
            })?;
            declared = Some(count);
            continue;
        }
        let u = parse_id(a, line)?;
        let w = parse_id(b, line)?;
        if let Some(n) = declared {
            for id in [u, w] {
                if id as usize >= n {
                    return Err(ParseError::OutOfRange {
                        line,
                        id: id as u64,
                        n,
                    });
                }
            }
        }
        if !seen.insert((u, w)) {
            return Err(ParseError::DuplicateArc { line, u, w });
        }
        max_id = Some(max_id.map_or(u.max(w), |m| m.max(u).max(w)));
        arcs.push((u, w));
    }

    let n = match declared {
        Some(n) => n,
        None => max_id.map_or(0, |m| m as usize + 1),
    };
    Ok(DirectedGraph::from_arcs(n, arcs)?)
}

pub fn read_edge_list_file(path: &Path) -> Result<DirectedGraph, ParseError> {
    let file = std::fs::File::open(path)?;
    load_edge_list(io::BufReader::new(file))
}

/// Writes the header and all arcs in sorted order (byte-stable output).
pub fn write_edge_list<W: Write>(graph: &DirectedGraph, mut out: W) -> io::Result<()> {
    writeln!(out, "n {}", graph.node_count())?;
    for (u, w) in graph.arcs() {
        writeln!(out, "{u} {w}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<DirectedGraph, ParseError> {
        load_edge_list(s.as_bytes())
    }

    #[test]
    fn three_node_star() {
        let g = parse("0 0\n1 0\n2 0").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn header_only_gives_isolated_nodes() {
        let g = parse("n 5\n").unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.arc_count(), 0);
    }

    #[test]
    fn duplicate_reports_line() {
        match parse("0 1\n0 1") {
            Err(ParseError::DuplicateArc {
                line: 2,
                u: 0,
                w: 1,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_errors() {
        let g = parse("# header comment\nn 4\n# mid\n3 1\n").unwrap();
        assert_eq!(g.node_count(), 4);
        assert!(matches!(
            parse("0 x"),
            Err(ParseError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse("0 1 2"),
            Err(ParseError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse("0 99999999999"),
            Err(ParseError::IdOverflow { line: 1, .. })
        ));
        assert!(matches!(
            parse("n 2\n0 2"),
            Err(ParseError::OutOfRange { line: 2, .. })
        ));
        assert!(matches!(
            parse("0 1\nn 3"),
            Err(ParseError::LateHeader { line: 2 })
        ));
    }

    #[test]
    fn write_then_read_keeps_isolated_nodes() {
        let g = DirectedGraph::from_arcs(6, [(0, 1), (1, 1)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "n 6\n0 1\n1 1\n");
        assert_eq!(load_edge_list(&buf[..]).unwrap(), g);
    }
}
