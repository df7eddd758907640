//! Reader for the DIMACS shortest-path challenge `.gr` format.
//!
//! ```text
//! c comment
//! p sp <nodes> <arcs>
//! a <u> <v> <weight>
//! ```
//!
//! Node ids are 1-based in the file and 0-based in the returned graph. Arcs
//! are directed. Self-loops are dropped and repeated arcs keep their
//! smallest weight.

use std::collections::HashMap;
use std::io::BufRead;

use super::graph::Graph;
use crate::error::{Result, UscoError};

#[derive(Clone, Debug, PartialEq)]
pub struct DimacsGraph {
    pub graph: Graph,
    /// Integer arc weights from the file, indexed like `graph.edges()`.
    pub weights: Vec<u64>,
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| UscoError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| UscoError::Parse {
        line,
        msg: format!("{what} `{tok}` is not a nonnegative integer"),
    })
}

pub fn parse_dimacs<R: BufRead>(reader: R) -> Result<DimacsGraph> {
    let mut nodes: Option<usize> = None;
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut weights: Vec<u64> = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| UscoError::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None | Some("c") => {}
            Some("p") => {
                if nodes.is_some() {
                    return Err(UscoError::Parse {
                        line: lineno,
                        msg: "duplicate problem line".into(),
                    });
                }
                match toks.next() {
                    Some("sp") => {}
                    other => {
                        return Err(UscoError::Parse {
                            line: lineno,
                            msg: format!("expected problem type `sp`, found {other:?}"),
                        })
                    }
                }
                let n: usize = field(toks.next(), lineno, "node count")?;
                let m: usize = field(toks.next(), lineno, "arc count")?;
                nodes = Some(n);
                arcs.reserve(m);
            }
            Some("a") => {
                let n = nodes.ok_or_else(|| UscoError::Parse {
                    line: lineno,
                    msg: "arc before problem line".into(),
                })?;
                let u: usize = field(toks.next(), lineno, "tail")?;
                let v: usize = field(toks.next(), lineno, "head")?;
                let w: u64 = field(toks.next(), lineno, "weight")?;
                for id in [u, v] {
                    if id == 0 || id > n {
                        return Err(UscoError::Parse {
                            line: lineno,
                            msg: format!("node id {id} out of range 1..={n}"),
                        });
                    }
                }
                let (u, v) = (u - 1, v - 1);
                if u == v {
                    continue;
                }
                match seen.get(&(u, v)) {
                    Some(&e) => weights[e] = weights[e].min(w),
                    None => {
                        seen.insert((u, v), arcs.len());
                        arcs.push((u, v));
                        weights.push(w);
                    }
                }
            }
            Some(other) => {
                return Err(UscoError::Parse {
                    line: lineno,
                    msg: format!("unknown line type `{other}`"),
                })
            }
        }
    }

    let n = nodes.ok_or(UscoError::Parse {
        line: 0,
        msg: "missing problem line".into(),
    })?;
    Ok(DimacsGraph {
        graph: Graph::new(n, arcs, true)?,
        weights,
    })
}
