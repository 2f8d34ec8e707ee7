use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::interaction_pairs;
use crate::md::{Md, MdSet};
use crate::model::{AttrRef, Schema, SimilarityRelation, TupleSource};
use crate::query::{find_witness, Condition, ConjunctiveQuery, QueryAtom, Term, Witness};

/// The Boolean queries testing one interaction pair on one attribute. The
/// pair is violated when any variant has an answer.
#[derive(Clone, Debug, Serialize)]
pub struct SfaiQuery {
    pub name: String,
    pub md1: String,
    pub md2: String,
    pub attribute: AttrRef,
    pub variants: Vec<ConjunctiveQuery>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryOutcome {
    pub name: String,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug)]
pub struct SfaiReport {
    /// Every query is false.
    pub holds: bool,
    pub outcomes: Vec<QueryOutcome>,
}

/// One named query per interaction pair and shared attribute.
///
/// For each leading atom of `md1` that receives the written attribute, and
/// each atom of `md2` that reads it, the two atoms are unified (they describe
/// the same tuple) and the remaining atoms and similarity conditions of both
/// left-hand sides are conjoined. All tuple-identifier variables are required
/// to be pairwise distinct.
pub fn sfai_queries(mds: &MdSet, schema: &Schema) -> Vec<SfaiQuery> {
    let mut out = Vec::new();
    for pair in interaction_pairs(mds, schema) {
        let m1 = mds.get(&pair.md1).expect("pair names an md");
        let m2 = mds.get(&pair.md2).expect("pair names an md");
        let name = format!(
            "q_{}_{}_{}_{}",
            m1.name, m2.name, pair.attribute.relation, pair.attribute.attribute
        );
        let rel = schema.relation(&pair.attribute.relation).expect("validated");
        let pos = rel.position(&pair.attribute.attribute).expect("validated");
        let read = read_vars(m2);
        let mut variants: Vec<ConjunctiveQuery> = Vec::new();
        for side in 0..2 {
            let written = if side == 0 {
                &m1.rhs.left_attr
            } else {
                &m1.rhs.right_attr
            };
            if *written != pair.attribute {
                continue;
            }
            for (j, atom) in m2.atoms.iter().enumerate() {
                if atom.relation != rel.name || !read.contains(atom.vars[pos].as_str()) {
                    continue;
                }
                let q = unify(&name, m1, m1.leading[side], m2, j);
                if !variants.contains(&q) {
                    variants.push(q);
                }
            }
        }
        out.push(SfaiQuery {
            name,
            md1: pair.md1,
            md2: pair.md2,
            attribute: pair.attribute,
            variants,
        });
    }
    out
}

/// Variables compared on the left-hand side: in a similarity or repeated.
fn read_vars(md: &Md) -> BTreeSet<&str> {
    let mut out: BTreeSet<&str> = md
        .similarities
        .iter()
        .flat_map(|s| [s.left.as_str(), s.right.as_str()])
        .collect();
    let joins = md.join_vars();
    for a in &md.atoms {
        for v in &a.vars {
            if joins.contains(v) {
                out.insert(v);
            }
        }
    }
    out
}

struct UnionFind(HashMap<String, String>);

impl UnionFind {
    fn find(&mut self, x: &str) -> String {
        let mut cur = x.to_string();
        while let Some(p) = self.0.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        cur
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        // names of the first copy carry no mark and win
        let key = |s: &String| (s.ends_with('\''), s.clone());
        let (root, child) = if key(&ra) <= key(&rb) { (ra, rb) } else { (rb, ra) };
        self.0.insert(child, root);
    }
}

fn unify(name: &str, m1: &Md, lead: usize, m2: &Md, j: usize) -> ConjunctiveQuery {
    let n1 = m1.rule_vars("");
    let n2 = m2.rule_vars("'");
    let mut uf = UnionFind(HashMap::new());
    let l1 = &m1.atoms[lead];
    let o2 = &m2.atoms[j];
    uf.union(&n2[&o2.tid], &n1[&l1.tid]);
    for (a, b) in o2.vars.iter().zip(&l1.vars) {
        uf.union(&n2[a], &n1[b]);
    }
    let mut term = |names: &HashMap<String, String>, v: &String| Term::Var(uf.find(&names[v]));

    let mut atoms: Vec<QueryAtom> = Vec::new();
    let mut conditions: Vec<Condition> = Vec::new();
    for (md, names, skip) in [(m1, &n1, None), (m2, &n2, Some(j))] {
        for (k, a) in md.atoms.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            let atom = QueryAtom {
                relation: a.relation.clone(),
                tid: term(names, &a.tid),
                args: a.vars.iter().map(|v| term(names, v)).collect(),
            };
            if !atoms.contains(&atom) {
                atoms.push(atom);
            }
        }
        for s in &md.similarities {
            let (l, r) = (term(names, &s.left), term(names, &s.right));
            let c = Condition::Sim {
                left: l.clone(),
                right: r.clone(),
                domain: Some(s.domain.clone()),
            };
            if l != r && !conditions.contains(&c) {
                conditions.push(c);
            }
        }
    }
    let mut tids: Vec<Term> = Vec::new();
    for a in &atoms {
        if !tids.contains(&a.tid) {
            tids.push(a.tid.clone());
        }
    }
    for (i, a) in tids.iter().enumerate() {
        for b in &tids[i + 1..] {
            conditions.push(Condition::Neq(a.clone(), b.clone()));
        }
    }
    ConjunctiveQuery {
        name: name.to_string(),
        head: Vec::new(),
        atoms,
        conditions,
    }
}

/// Evaluates every generated query on `d`.
pub fn is_sfai<S: TupleSource + ?Sized>(
    mds: &MdSet,
    schema: &Schema,
    d: &S,
    sim: &SimilarityRelation,
) -> SfaiReport {
    let mut outcomes = Vec::new();
    for q in sfai_queries(mds, schema) {
        let witness = q.variants.iter().find_map(|v| {
            find_witness(d, v, sim).expect("generated queries match the schema")
        });
        outcomes.push(QueryOutcome {
            name: q.name,
            satisfied: witness.is_some(),
            witness,
        });
    }
    SfaiReport {
        holds: outcomes.iter().all(|o| !o.satisfied),
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::parse_mds;
    use crate::model::Instance;
    use crate::query::parse_queries;
    use crate::testkit::{example2, example4, r_schema};

    #[test]
    fn example4_queries() {
        let p = example4();
        let qs = sfai_queries(&p.mds, &p.schema);
        let names: Vec<&str> = qs.iter().map(|q| q.name.as_str()).collect();
        assert_eq!(names, vec!["q_phi1_phi2_R_B", "q_phi2_phi2_R_B"]);
        let first = &qs[0].variants[0];
        assert_eq!(
            first.to_string(),
            "q_phi1_phi2_R_B() :- R(T1, X1, Y1), R(T2, X2, Y2), R(T2', X2', Y2'), \
             X1 ~A~ X2, Y1 ~B~ Y2', T1 != T2, T1 != T2', T2 != T2'."
        );
        let report = is_sfai(&p.mds, &p.schema, &p.instance, &p.sim);
        assert!(report.holds);
        assert!(report.outcomes.iter().all(|o| !o.satisfied && o.witness.is_none()));
    }

    #[test]
    fn paper_query_shape_is_equivalent() {
        // the written-out query for (phi1, phi2) from the worked example
        let paper = parse_queries(
            "q() :- R(T1, X1, Y1), R(T2, X2, Y2), X1 ~ X2, R(T3, X3, Y3), Y2 ~ Y3, \
             T1 != T2, T1 != T3, T2 != T3.",
        )
        .unwrap()
        .remove(0);
        for p in [example2(), example4()] {
            let ours = &sfai_queries(&p.mds, &p.schema)[0];
            let a = find_witness(&p.instance, &paper, &p.sim).unwrap().is_some();
            let b = ours
                .variants
                .iter()
                .any(|v| find_witness(&p.instance, v, &p.sim).unwrap().is_some());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn example2_violated_with_witness() {
        let p = example2();
        let report = is_sfai(&p.mds, &p.schema, &p.instance, &p.sim);
        assert!(!report.holds);
        let first = &report.outcomes[0];
        assert!(first.satisfied);
        let w = first.witness.as_ref().unwrap();
        let tids: BTreeSet<&str> = w
            .iter()
            .filter(|(k, _)| k.starts_with('T'))
            .map(|(_, v)| v.as_str())
            .collect();
        assert_eq!(tids, BTreeSet::from(["t1", "t2", "t3"]));
    }

    #[test]
    fn footnote_pair_gives_two_queries() {
        let s = r_schema();
        let mds = parse_mds(
            "md fb: R(t1; x1, y1), R(t2; x2, y2), y1 ~ y2 -> x1 := x2;
             md fa: R(t1; x1, y1), R(t2; x2, y2), x1 ~ x2 -> y1 := y2;",
            &s,
            None,
        )
        .unwrap();
        assert_eq!(sfai_queries(&mds, &s).len(), 2);
    }

    #[test]
    fn non_interacting_has_no_queries() {
        let p = example2();
        assert!(sfai_queries(&p.mds.select(&["phi1"]), &p.schema).is_empty());
    }

    #[test]
    fn empty_instance_is_sfai() {
        let p = example2();
        let empty = Instance::new(p.schema.clone());
        assert!(is_sfai(&p.mds, &p.schema, &empty, &p.sim).holds);
    }
}
