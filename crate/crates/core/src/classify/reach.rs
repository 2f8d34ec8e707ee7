use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::interaction_pairs;
use crate::chase::for_each_lhs_match;
use crate::md::Md;
use crate::model::{Instance, Tid, Value, VersionSet};
use crate::problem::Problem;

/// Bound on the number of tuple versions explored by [`reachable_versions`].
pub const DEFAULT_VERSION_LIMIT: usize = 20_000;

/// Closes the versions of `d` under enforcement of every MD on any
/// combination of versions, the same fixpoint the residual program computes
/// for its relations. Pairs the matching function leaves undefined are
/// skipped. Returns `None` when more than `limit` versions appear.
pub fn reachable_versions(p: &Problem, d: &Instance, limit: usize) -> Option<VersionSet> {
    let mut versions = VersionSet::from_instance(d);
    loop {
        let mut fresh: Vec<(String, Tid, Vec<Value>)> = Vec::new();
        for md in &p.mds {
            for_each_lhs_match(&versions, md, &p.sim, |tids, env| {
                let (l, r) = (&env[md.rhs.left.as_str()], &env[md.rhs.right.as_str()]);
                if l == r {
                    return true;
                }
                let Ok(joined) = p.mf.match_values(&md.rhs.domain, l, r) else {
                    return true;
                };
                for (side, pos) in [(0, md.rhs.left_pos), (1, md.rhs.right_pos)] {
                    let atom = md.leading_atom(side);
                    let mut vals: Vec<Value> = atom.vars.iter().map(|v| env[v.as_str()].clone()).collect();
                    vals[pos] = joined.clone();
                    let tid = &tids[md.leading[side]];
                    if !versions.contains(&atom.relation, tid, &vals) {
                        fresh.push((atom.relation.clone(), tid.clone(), vals));
                    }
                }
                true
            });
        }
        let mut grew = false;
        for (r, t, v) in fresh {
            grew |= versions.insert(&r, t, v);
        }
        if versions.len() > limit {
            return None;
        }
        if !grew {
            return Some(versions);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interference {
    /// `writer` can change `cell` while `reader`, satisfied in the same
    /// reachable state, compares it with a cell the writer does not merge.
    Conflict {
        writer_md: String,
        writer: BTreeMap<String, Tid>,
        reader_md: String,
        reader: BTreeMap<String, Tid>,
        cell: String,
    },
    TooManyVersions { limit: usize },
}

/// One left-hand-side match over versions, with each tid bound to one version.
struct Assignment {
    tids: Vec<Tid>,
    versions: HashMap<Tid, Vec<Value>>,
    applicable: bool,
}

fn assignments(versions: &VersionSet, md: &Md, p: &Problem) -> Vec<Assignment> {
    let mut out = Vec::new();
    for_each_lhs_match(versions, md, &p.sim, |tids, env| {
        let mut seen: HashMap<Tid, Vec<Value>> = HashMap::new();
        for (a, t) in md.atoms.iter().zip(tids) {
            let vals: Vec<Value> = a.vars.iter().map(|v| env[v.as_str()].clone()).collect();
            match seen.get(t) {
                Some(prev) if *prev != vals => return true,
                _ => {
                    seen.insert(t.clone(), vals);
                }
            }
        }
        out.push(Assignment {
            tids: tids.to_vec(),
            versions: seen,
            applicable: env[md.rhs.left.as_str()] != env[md.rhs.right.as_str()],
        });
        true
    });
    out
}

type Cell = (usize, usize);

/// Pairs of (atom, position) compared by the left-hand side.
fn comparisons(md: &Md) -> Vec<(Cell, Cell)> {
    let mut out = Vec::new();
    for s in &md.similarities {
        for a in md.occurrences(&s.left) {
            for b in md.occurrences(&s.right) {
                out.push((a, b));
            }
        }
    }
    for v in md.join_vars() {
        let occ = md.occurrences(&v);
        for (i, a) in occ.iter().enumerate() {
            for b in &occ[i + 1..] {
                out.push((*a, *b));
            }
        }
    }
    out
}

fn named(md: &Md, tids: &[Tid]) -> BTreeMap<String, Tid> {
    md.atoms
        .iter()
        .zip(tids)
        .map(|(a, t)| (a.tid.clone(), t.clone()))
        .collect()
}

/// Searches the reachable versions for two enforcements that can be pending
/// in the same state where one writes a cell the other compares, other than
/// the pair of cells the writer itself makes equal.
pub fn reachable_interference(p: &Problem, limit: usize) -> Option<Interference> {
    let Some(versions) = reachable_versions(p, &p.instance, limit) else {
        return Some(Interference::TooManyVersions { limit });
    };
    let mut cache: HashMap<&str, Vec<Assignment>> = HashMap::new();
    let mut pairs: Vec<(String, String)> = interaction_pairs(&p.mds, &p.schema)
        .into_iter()
        .map(|ip| (ip.md1, ip.md2))
        .collect();
    pairs.dedup();
    for (n1, n2) in pairs {
        let m1 = p.mds.get(&n1).expect("known md");
        let m2 = p.mds.get(&n2).expect("known md");
        for md in [m1, m2] {
            cache
                .entry(md.name.as_str())
                .or_insert_with(|| assignments(&versions, md, p));
        }
        let cmp = comparisons(m2);
        for s1 in cache[m1.name.as_str()].iter().filter(|a| a.applicable) {
            let w1 = (s1.tids[m1.leading[0]].clone(), m1.rhs.left_pos);
            let w2 = (s1.tids[m1.leading[1]].clone(), m1.rhs.right_pos);
            for s2 in &cache[m2.name.as_str()] {
                if n1 == n2 && s1.tids == s2.tids {
                    continue;
                }
                let coexist = s2
                    .versions
                    .iter()
                    .all(|(t, v)| s1.versions.get(t).is_none_or(|u| u == v));
                if !coexist {
                    continue;
                }
                for ((i, pi), (k, pk)) in &cmp {
                    let c = (s2.tids[*i].clone(), *pi);
                    let d = (s2.tids[*k].clone(), *pk);
                    let touches = c == w1 || c == w2 || d == w1 || d == w2;
                    let merged = c == d || (c == w1 && d == w2) || (c == w2 && d == w1);
                    if touches && !merged {
                        let (cell_tid, cell_pos) = if c == w1 || c == w2 { &c } else { &d };
                        let rel = p.schema.relation(p.instance.relation_of(cell_tid).expect("known tid")).expect("known");
                        return Some(Interference::Conflict {
                            writer_md: n1.clone(),
                            writer: named(m1, &s1.tids),
                            reader_md: n2.clone(),
                            reader: named(m2, &s2.tids),
                            cell: format!("{}.{}", cell_tid, rel.attributes[*cell_pos].name),
                        });
                    }
                }
            }
        }
    }
    None
}
