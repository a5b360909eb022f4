//! Whitespace-separated edge-list files.
//!
//! One pair per line with an optional third weight column. Lines starting with
//! `#` are comments; comments of the form `# key=value` are headers. The keys
//! `nodes` and `generated` are honored when labels are not relabeled, so a
//! saved graph keeps its isolated and generated nodes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{canonical, Graph, Provenance};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ParsedEdgeList {
    pub graph: Graph,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
    pub headers: Vec<(String, String)>,
}

pub fn parse_edge_list(text: &str, relabel: bool) -> Result<ParsedEdgeList> {
    let mut headers = Vec::new();
    let mut labels: HashMap<&str, usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize, Option<f64>)> = Vec::new();
    let mut self_loops = 0;
    let mut max_node: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                headers.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected two node labels, found `{line}`"),
                })
            }
        };
        let weight = match tokens.next() {
            None => None,
            Some(tok) => {
                let w: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid edge weight `{tok}`"),
                })?;
                if !(-1.0..=1.0).contains(&w) {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("edge weight {w} outside [-1, 1]"),
                    });
                }
                Some(w)
            }
        };
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "too many columns".into(),
            });
        }
        let (u, v) = if relabel {
            let next = labels.len();
            let u = *labels.entry(a).or_insert(next);
            let next = labels.len();
            let v = *labels.entry(b).or_insert(next);
            (u, v)
        } else {
            let parse = |tok: &str| {
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("node label `{tok}` is not a non-negative integer"),
                })
            };
            (parse(a)?, parse(b)?)
        };
        max_node = Some(max_node.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        if u == v {
            self_loops += 1;
            continue;
        }
        pairs.push((u, v, weight));
    }

    let header = |key: &str| -> Result<Option<usize>> {
        headers
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| {
                v.parse::<usize>().map_err(|_| Error::Parse {
                    line: 0,
                    message: format!("header `{key}={v}` is not an integer"),
                })
            })
            .transpose()
    };
    let declared_nodes = if relabel { None } else { header("nodes")? };
    let generated = if relabel { None } else { header("generated")? };

    if pairs.is_empty() && self_loops == 0 && declared_nodes.is_none() {
        return Err(Error::EmptyEdgeList);
    }

    let n = if relabel {
        labels.len()
    } else {
        let seen = max_node.map_or(0, |m| m + 1);
        match declared_nodes {
            Some(d) if d < seen => {
                return Err(Error::InvalidGraph(format!(
                    "header declares {d} nodes but label {} appears",
                    seen - 1
                )))
            }
            Some(d) => d,
            None => seen,
        }
    };

    let input_pairs = pairs.len();
    let mut graph = Graph::from_edges(n, pairs.iter().map(|&(u, v, _)| (u, v)))?;
    for &(u, v, w) in &pairs {
        if let Some(w) = w {
            graph.weights.insert(canonical(u, v), w);
        }
    }
    if let Some(m) = generated {
        if m > n {
            return Err(Error::InvalidGraph(format!(
                "{m} generated nodes exceed node count {n}"
            )));
        }
        let prov = (0..n)
            .map(|i| {
                if i >= n - m {
                    Provenance::Generated
                } else {
                    Provenance::Original
                }
            })
            .collect();
        graph.set_provenance(prov)?;
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop(s) while reading edge list");
    }
    Ok(ParsedEdgeList {
        duplicates_collapsed: input_pairs - graph.edge_count(),
        graph,
        self_loops_dropped: self_loops,
        headers,
    })
}

pub fn load_edge_list(path: impl AsRef<Path>, relabel: bool) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_edge_list(&text, relabel)?.graph)
}

/// Canonical text: headers, then `u v` (or `u v w`) with `u < v`, sorted.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nodes={}", g.node_count());
    let _ = writeln!(out, "# original={}", g.original_count());
    let _ = writeln!(out, "# generated={}", g.generated_count());
    for (u, v) in g.edges() {
        match g.weight(u, v) {
            Some(w) => {
                let _ = writeln!(out, "{u} {v} {w}");
            }
            None => {
                let _ = writeln!(out, "{u} {v}");
            }
        }
    }
    out
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_edge_list(g)).map_err(|e| Error::io(path, e))
}
