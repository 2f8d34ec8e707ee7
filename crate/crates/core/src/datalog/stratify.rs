use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{Literal, Program};
use crate::error::DatalogError;

/// Partitions the predicates into strata so every negative dependency points
/// strictly upward. Each stratum is as low as its dependencies allow and is
/// sorted by name.
pub fn stratify(p: &Program) -> Result<Vec<Vec<String>>, DatalogError> {
    let preds = p.predicates();
    if preds.is_empty() {
        return Ok(Vec::new());
    }
    let mut g: DiGraph<&str, bool> = DiGraph::new();
    let idx: BTreeMap<&str, NodeIndex> = preds.iter().map(|n| (n.as_str(), g.add_node(n))).collect();
    for r in &p.rules {
        let head = idx[r.head.pred.as_str()];
        for l in &r.body {
            let (a, negative) = match l {
                Literal::Pos(a) => (a, false),
                Literal::Neg(a) => (a, true),
                _ => continue,
            };
            if a.is_builtin() {
                continue;
            }
            let from = idx[a.pred.as_str()];
            match g.find_edge(from, head) {
                // a negative dependency wins over a positive one between the same pair
                Some(e) => g[e] |= negative,
                None => {
                    g.add_edge(from, head, negative);
                }
            }
        }
    }
    // tarjan_scc yields components in reverse topological order
    let mut sccs = tarjan_scc(&g);
    sccs.reverse();
    let mut component = vec![0usize; g.node_count()];
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = i;
        }
    }
    for e in g.edge_indices() {
        let (a, b) = g.edge_endpoints(e).expect("edge");
        if g[e] && component[a.index()] == component[b.index()] {
            let mut cycle: Vec<String> = sccs[component[a.index()]]
                .iter()
                .map(|n| g[*n].to_string())
                .collect();
            cycle.sort();
            cycle.push(cycle[0].clone());
            return Err(DatalogError::NotStratifiable { cycle });
        }
    }
    let mut level = vec![0usize; sccs.len()];
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            for e in g.edges_directed(*n, petgraph::Direction::Incoming) {
                use petgraph::visit::EdgeRef;
                let from = component[e.source().index()];
                if from != i {
                    level[i] = level[i].max(level[from] + usize::from(*e.weight()));
                }
            }
        }
    }
    let mut strata: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            strata.entry(level[i]).or_default().insert(g[*n].to_string());
        }
    }
    Ok(strata.into_values().map(|s| s.into_iter().collect()).collect())
}
