use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::*;
use crate::error::CodegenError;

/// The disjunctive cleaning program, valid for every input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AspProgram {
    pub blocks: Vec<Block>,
}

impl AspProgram {
    pub fn block(&self, number: u8) -> &[Clause] {
        self.blocks
            .iter()
            .find(|b| b.number == number)
            .map(|b| b.clauses.as_slice())
            .unwrap_or(&[])
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.blocks.iter().flat_map(|b| &b.clauses)
    }
}

impl fmt::Display for AspProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks)
    }
}

/// One way of reading a matching of an MD as "the shared tuple and its
/// partner". Self-symmetric MDs have one reading, others two.
struct Orientation<'a> {
    md: &'a Md,
    /// Which leading atom is the shared tuple.
    side: usize,
    shared: &'a RelationSchema,
    partner: &'a RelationSchema,
    shared_pos: usize,
    partner_pos: usize,
}

impl Orientation<'_> {
    fn shape(&self) -> (String, String) {
        (self.shared.name.clone(), self.partner.name.clone())
    }

    /// `match_φ` over the given shared and partner arguments.
    fn matching(&self, shared: &[Term], partner: &[Term]) -> Literal {
        let mut args = Vec::new();
        if self.side == 0 {
            args.extend_from_slice(shared);
            args.extend_from_slice(partner);
        } else {
            args.extend_from_slice(partner);
            args.extend_from_slice(shared);
        }
        pos(match_pred(&self.md.name), args)
    }
}

fn orientations<'a>(p: &'a Problem) -> Vec<Orientation<'a>> {
    let mut out = Vec::new();
    for md in p.mds.iter() {
        let sides: &[usize] = if md.is_self_symmetric() { &[0] } else { &[0, 1] };
        for &side in sides {
            let rel = |i: usize| {
                p.schema
                    .relation(&md.leading_atom(i).relation)
                    .expect("validated relation")
            };
            let (sp, pp) = if side == 0 {
                (md.rhs.left_pos, md.rhs.right_pos)
            } else {
                (md.rhs.right_pos, md.rhs.left_pos)
            };
            out.push(Orientation {
                md,
                side,
                shared: rel(side),
                partner: rel(1 - side),
                shared_pos: sp,
                partner_pos: pp,
            });
        }
    }
    out
}

/// Tid and attribute variables of one tuple: `T1, A1, B1` for suffix `1`.
/// Attributes in `primed` get `mark` appended.
fn tuple_terms(rel: &RelationSchema, tid: &str, suffix: &str, primed: &BTreeSet<usize>, mark: &str) -> Vec<Term> {
    let mut out = vec![var(tid)];
    for (i, s) in attr_stems(rel).iter().enumerate() {
        let m = if primed.contains(&i) { mark } else { "" };
        out.push(var(&format!("{s}{suffix}{m}")));
    }
    out
}

type Signature = ((String, String), (String, String));

struct PrecNames {
    single: bool,
}

impl PrecNames {
    fn pred(&self, sig: &Signature) -> String {
        if self.single {
            "prec".to_string()
        } else {
            let ((a, b), (c, d)) = sig;
            format!("prec_{}_{}__{}_{}", mangle(a), mangle(b), mangle(c), mangle(d))
        }
    }
}

/// The fields of a recorded matching of shape `shape`: the shared tuple
/// (tid `T1`, attributes with `shared_suffix`) then the partner.
fn fields(p: &Problem, shape: &(String, String), shared_suffix: &str, partner: usize) -> Vec<Term> {
    let s = p.schema.relation(&shape.0).expect("validated relation");
    let q = p.schema.relation(&shape.1).expect("validated relation");
    let mut out = tuple_terms(s, "T1", shared_suffix, &BTreeSet::new(), "");
    out.extend(tuple_terms(q, &format!("T{partner}"), &partner.to_string(), &BTreeSet::new(), ""));
    out
}

/// Emits the disjunctive program in seven blocks: facts, matching and its
/// guards, insertion of merged values, the two families of precedence
/// recording rules, the order axioms on precedence, and collection of the
/// clean tuples.
pub fn emit_general_asp(p: &Problem) -> Result<AspProgram, CodegenError> {
    let written = written_positions(p);
    let none = BTreeSet::new();
    let written_of = |rel: &str| written.get(rel).unwrap_or(&none);

    let mut facts = tuple_facts(p, primed_pred);
    facts.extend(table_facts(p, true)?);

    let mut matching = Vec::new();
    let mut constraints = Vec::new();
    let mut insertion = Vec::new();
    for md in p.mds.iter() {
        let names = md.rule_vars("");
        let args = match_args(md, &names);
        let m = Atom::new(match_pred(&md.name), args.clone());
        let n = Atom::new(notmatch_pred(&md.name), args.clone());
        matching.push(Clause {
            head: vec![m.clone(), n.clone()],
            body: match_body(md, &names, &primed_pred),
        });
        if md.is_self_symmetric() {
            let mut swapped = md_atom_args(md, md.leading[1], &names);
            swapped.extend(md_atom_args(md, md.leading[0], &names));
            matching.push(rule(Atom::new(match_pred(&md.name), swapped), vec![Literal::Pos(m.clone())]));
        }
        let mut body = vec![Literal::Pos(n)];
        for i in md.leading {
            let rel = &md.atoms[i].relation;
            if !written_of(rel).is_empty() {
                body.push(Literal::Neg(Atom::new(old_pred(rel), md_atom_args(md, i, &names))));
            }
        }
        constraints.push(Clause { head: Vec::new(), body });
        insertion.extend(insertion_rules(md, &names, &primed_pred));
    }
    for rel in p.schema.relations() {
        let w = written_of(&rel.name);
        if !w.is_empty() {
            let order = |d: &str, a: Term, b: Term| builtin("mf", d, vec![a, b.clone(), b]);
            matching.push(old_version_rule(rel, w, &primed_pred(&rel.name), &order));
        }
    }
    matching.extend(constraints);

    let ors = orientations(p);
    let shapes: BTreeSet<(String, String)> = ors.iter().map(Orientation::shape).collect();
    let names = PrecNames {
        single: shapes.len() <= 1,
    };
    let mut emitted: BTreeSet<Signature> = BTreeSet::new();
    let mut newer = Vec::new();
    let mut same = Vec::new();
    for oi in &ors {
        for oj in ors.iter().filter(|o| o.shared.name == oi.shared.name) {
            let sig = (oi.shape(), oj.shape());
            let head = |f2: &[Term]| {
                let mut args = fields(p, &oi.shape(), "1", 2);
                args.extend_from_slice(f2);
                Atom::new(names.pred(&sig), args)
            };
            let shared1 = tuple_terms(oi.shared, "T1", "1", &BTreeSet::new(), "");
            let partner2 = tuple_terms(oi.partner, "T2", "2", &BTreeSet::new(), "");
            let partner3 = tuple_terms(oj.partner, "T3", "3", &BTreeSet::new(), "");

            let w = written_of(&oi.shared.name);
            if !w.is_empty() {
                let shared1n = tuple_terms(oi.shared, "T1", "1", w, "'");
                let mut body = vec![oi.matching(&shared1, &partner2), oj.matching(&shared1n, &partner3)];
                let (mut l, mut r) = (Vec::new(), Vec::new());
                for &k in w {
                    let d = oi.shared.domain_of(k);
                    body.push(builtin("mf", d, vec![shared1[k + 1].clone(), shared1n[k + 1].clone(), shared1n[k + 1].clone()]));
                    l.push(shared1[k + 1].clone());
                    r.push(shared1n[k + 1].clone());
                }
                body.push(neq(l, r));
                let mut f2 = shared1n.clone();
                f2.extend(partner3.clone());
                newer.push(rule(head(&f2), body));
                emitted.insert(sig.clone());
            }

            let m = var("M");
            let ys = shared1[oj.shared_pos + 1].clone();
            let yp = partner3[oj.partner_pos + 1].clone();
            let body = vec![
                oi.matching(&shared1, &partner2),
                oj.matching(&shared1, &partner3),
                builtin("mf", &oj.md.rhs.domain, vec![ys.clone(), yp, m.clone()]),
                Literal::neq(ys, m),
            ];
            let mut f2 = shared1.clone();
            f2.extend(partner3);
            same.push(rule(head(&f2), body));
            emitted.insert(sig);
        }
    }

    let mut order = Vec::new();
    let f = |shape: &(String, String), suffix: &str, partner: usize| fields(p, shape, suffix, partner);
    let cat = |a: &[Term], b: &[Term]| -> Vec<Term> { a.iter().chain(b).cloned().collect() };
    for sig in &emitted {
        let (s1, s2) = sig;
        let f1 = f(s1, "1", 2);
        let f2 = f(s2, "1'", 3);
        let refl = (s1.clone(), s1.clone());
        order.push(rule(
            Atom::new(names.pred(&refl), cat(&f1, &f1)),
            vec![pos(names.pred(sig), cat(&f1, &f2))],
        ));
    }
    order.dedup();
    for sig in &emitted {
        let (s1, s2) = sig;
        let back = (s2.clone(), s1.clone());
        if s1 <= s2 && emitted.contains(&back) {
            let f1 = f(s1, "1", 2);
            let f2 = f(s2, "1'", 3);
            let mut body = vec![
                pos(names.pred(sig), cat(&f1, &f2)),
                pos(names.pred(&back), cat(&f2, &f1)),
            ];
            if s1 == s2 {
                body.push(neq(f1, f2));
            }
            order.push(Clause { head: Vec::new(), body });
        }
    }
    let mut by_first: BTreeMap<&(String, String), Vec<&(String, String)>> = BTreeMap::new();
    for (a, b) in &emitted {
        by_first.entry(a).or_default().push(b);
    }
    for (s1, s2) in &emitted {
        for s3 in by_first.get(s2).into_iter().flatten() {
            let f1 = f(s1, "1", 2);
            let f2 = f(s2, "1'", 3);
            let f3 = f(s3, "1''", 4);
            order.push(Clause {
                head: Vec::new(),
                body: vec![
                    pos(names.pred(&(s1.clone(), s2.clone())), cat(&f1, &f2)),
                    pos(names.pred(&(s2.clone(), (*s3).clone())), cat(&f2, &f3)),
                    Literal::Neg(Atom::new(names.pred(&(s1.clone(), (*s3).clone())), cat(&f1, &f3))),
                ],
            });
        }
    }

    let collect = p
        .schema
        .relations()
        .iter()
        .map(|rel| collection_rule(rel, written.get(&rel.name), &primed_pred(&rel.name)))
        .collect();

    let block = |number: u8, title: &str, clauses: Vec<Clause>| Block {
        number,
        title: title.to_string(),
        clauses,
    };
    Ok(AspProgram {
        blocks: vec![
            block(1, "facts", facts),
            block(2, "matching", matching),
            block(3, "insertion of merged values", insertion),
            block(4, "precedence across versions", newer),
            block(5, "precedence within a version", same),
            block(6, "precedence is a partial order", order),
            block(7, "clean tuples", collect),
        ],
    })
}
