//! Plain-text graph format.
//!
//! ```text
//! c optional comment lines
//! p mbb <n_u> <n_v> <m>
//! e <i> <j>        (m lines, 0-based)
//! ```

use std::fmt::Write as _;

use super::BipartiteGraph;
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} {tok:?}")))
}

pub fn parse_graph(text: &str) -> Result<BipartiteGraph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("c") => continue,
            Some("p") => {
                if header.is_some() {
                    return Err(parse_err(lineno, "duplicate header"));
                }
                if toks.next() != Some("mbb") {
                    return Err(parse_err(lineno, "header must start with `p mbb`"));
                }
                let n_u = field(toks.next(), lineno, "n_u")?;
                let n_v = field(toks.next(), lineno, "n_v")?;
                let m = field(toks.next(), lineno, "edge count")?;
                if toks.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens in header"));
                }
                header = Some((n_u, n_v, m));
            }
            Some("e") => {
                let Some((n_u, n_v, _)) = header else {
                    return Err(parse_err(lineno, "edge before header"));
                };
                let i = field(toks.next(), lineno, "left index")?;
                let j = field(toks.next(), lineno, "right index")?;
                if toks.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens in edge line"));
                }
                if i >= n_u || j >= n_v {
                    return Err(parse_err(
                        lineno,
                        format!("edge ({i}, {j}) out of range for {n_u} x {n_v}"),
                    ));
                }
                edges.push((i, j));
            }
            Some(other) => return Err(parse_err(lineno, format!("unknown line type {other:?}"))),
            None => unreachable!(),
        }
    }
    let (n_u, n_v, m) = header.ok_or_else(|| parse_err(0, "missing `p mbb` header"))?;
    if edges.len() != m {
        return Err(parse_err(
            0,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    BipartiteGraph::new(n_u, n_v, edges)
}

/// Canonical form: header, then edges in sorted order, no comments.
pub fn serialize_graph(g: &BipartiteGraph) -> String {
    serialize_graph_with_comments(g, &[])
}

pub fn serialize_graph_with_comments(g: &BipartiteGraph, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "c {line}");
        }
    }
    let _ = writeln!(out, "p mbb {} {} {}", g.n_u(), g.n_v(), g.edge_count());
    for &(i, j) in g.edges() {
        let _ = writeln!(out, "e {i} {j}");
    }
    out
}
