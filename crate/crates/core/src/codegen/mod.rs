//! Rule programs generated from a cleaning problem: the disjunctive program
//! for the general case and the stratified residual program for inputs with a
//! single clean instance.
//!
//! Predicate names: relation `R` becomes `r`, its primed copy `r_p`, its
//! clean copy `r_c` and its outdated versions `old_version_r`; MD `phi`
//! contributes `match_phi` and, in the disjunctive program, `notmatch_phi`.

mod asp;
mod residual;

pub use asp::{emit_general_asp, AspProgram};
pub use residual::{clean_instance, emit_residual_datalog, solve, ResidualProgram, Solution};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::datalog::{Atom, Clause, Literal, Term};
use crate::error::ModelError;
use crate::md::Md;
use crate::model::{RelationSchema, Value};
use crate::problem::Problem;

/// A numbered, titled group of clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub number: u8,
    pub title: String,
    pub clauses: Vec<Clause>,
}

fn write_blocks(f: &mut fmt::Formatter<'_>, blocks: &[Block]) -> fmt::Result {
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            writeln!(f)?;
        }
        writeln!(f, "% {}. {}", b.number, b.title)?;
        for c in &b.clauses {
            writeln!(f, "{c}")?;
        }
    }
    Ok(())
}

const RESERVED: [&str; 4] = ["sim", "mf", "pre", "not"];

/// Lowercase identifier usable as a predicate name.
pub(crate) fn mangle(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    if !out.starts_with(|c: char| c.is_ascii_lowercase()) || RESERVED.contains(&out.as_str()) {
        out.insert_str(0, "p_");
    }
    out
}

pub(crate) fn rel_pred(rel: &str) -> String {
    mangle(rel)
}

pub(crate) fn primed_pred(rel: &str) -> String {
    format!("{}_p", mangle(rel))
}

pub(crate) fn clean_pred(rel: &str) -> String {
    format!("{}_c", mangle(rel))
}

pub(crate) fn old_pred(rel: &str) -> String {
    format!("old_version_{}", mangle(rel))
}

pub(crate) fn match_pred(md: &str) -> String {
    format!("match_{}", mangle(md))
}

pub(crate) fn notmatch_pred(md: &str) -> String {
    format!("notmatch_{}", mangle(md))
}

fn var(name: &str) -> Term {
    Term::Var(name.to_string())
}

fn konst(s: &str) -> Term {
    Term::Const(Value::new(s))
}

fn pos(pred: impl Into<String>, args: Vec<Term>) -> Literal {
    Literal::Pos(Atom::new(pred, args))
}

fn builtin(pred: &str, domain: &str, args: Vec<Term>) -> Literal {
    let mut all = vec![konst(domain)];
    all.extend(args);
    Literal::Pos(Atom::new(pred, all))
}

fn neq(a: Vec<Term>, b: Vec<Term>) -> Literal {
    Literal::Neq(a, b)
}

fn fact(pred: &str, args: impl IntoIterator<Item = Value>) -> Clause {
    Clause {
        head: vec![Atom::new(pred, args.into_iter().map(Term::Const).collect())],
        body: Vec::new(),
    }
}

fn rule(head: Atom, body: Vec<Literal>) -> Clause {
    Clause {
        head: vec![head],
        body,
    }
}

/// Variable stems for the attributes of a relation. Stems never end in a
/// digit, never equal the tid stem `T` and are pairwise distinct, so a stem
/// followed by a numeric suffix is unambiguous.
pub(crate) fn attr_stems(rel: &RelationSchema) -> Vec<String> {
    let mut used = BTreeSet::from(["T".to_string(), "M".to_string()]);
    rel.attributes
        .iter()
        .map(|a| {
            let mut s: String = a
                .name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            match s.chars().next() {
                Some(c) if c.is_ascii_alphabetic() => {
                    s.replace_range(..1, &c.to_ascii_uppercase().to_string())
                }
                _ => s.insert(0, 'V'),
            }
            if s.ends_with(|c: char| c.is_ascii_digit()) {
                s.push('_');
            }
            while !used.insert(s.clone()) {
                s.push('_');
            }
            s
        })
        .collect()
}

/// Per relation, the attribute positions some MD writes. Only these change
/// during the chase.
pub(crate) fn written_positions(p: &Problem) -> BTreeMap<String, BTreeSet<usize>> {
    let mut out: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for md in p.mds.iter() {
        out.entry(md.leading_atom(0).relation.clone())
            .or_default()
            .insert(md.rhs.left_pos);
        out.entry(md.leading_atom(1).relation.clone())
            .or_default()
            .insert(md.rhs.right_pos);
    }
    out
}

/// Values each domain can take during the chase: the active values, closed
/// under the matching function on domains some MD writes.
fn domain_values(p: &Problem) -> Result<BTreeMap<String, BTreeSet<Value>>, ModelError> {
    let written: BTreeSet<&str> = p.mds.iter().map(|m| m.rhs.domain.as_str()).collect();
    let mut out = BTreeMap::new();
    for (d, vals) in p.active_values() {
        let vals = if written.contains(d.as_str()) {
            p.mf.closure(&d, vals)?
        } else {
            vals
        };
        out.insert(d, vals);
    }
    Ok(out)
}

/// `sim` and `mf` facts over the values the chase can reach. With `closed`
/// every fact is listed in both orders and reflexive facts are included, as an
/// external solver needs; otherwise only pairs `a < b` are listed.
fn table_facts(p: &Problem, closed: bool) -> Result<Vec<Clause>, ModelError> {
    let values = domain_values(p)?;
    let empty = BTreeSet::new();
    let mut out = Vec::new();
    let merge_domains: BTreeSet<&str> = p.mds.iter().map(|m| m.rhs.domain.as_str()).collect();
    for d in merge_domains {
        let vals = values.get(d).unwrap_or(&empty);
        for (a, b, c) in p.mf.triples_over(d, vals) {
            if a < b || (closed && a != b) {
                out.push(fact("mf", [Value::new(d), a, b, c]));
            }
        }
        if closed {
            for a in vals {
                out.push(fact("mf", [Value::new(d), a.clone(), a.clone(), a.clone()]));
            }
        }
    }
    let sim_domains: BTreeSet<&str> = p
        .mds
        .iter()
        .flat_map(|m| m.similarities.iter().map(|s| s.domain.as_str()))
        .collect();
    for d in sim_domains {
        let vals = values.get(d).unwrap_or(&empty);
        for a in vals {
            for b in vals {
                if (closed || a < b) && p.sim.holds(d, a, b) {
                    out.push(fact("sim", [Value::new(d), a.clone(), b.clone()]));
                }
            }
        }
    }
    Ok(out)
}

/// Facts `pred(tid, values...)` for every tuple of the instance.
fn tuple_facts(p: &Problem, pred: impl Fn(&str) -> String) -> Vec<Clause> {
    p.instance
        .iter()
        .map(|(rel, tid, vals)| {
            let mut args = vec![Value::new(tid.as_str())];
            args.extend(vals.iter().cloned());
            fact(&pred(rel), args)
        })
        .collect()
}

/// Atom arguments for an MD atom: tid then attribute variables.
fn md_atom_args(md: &Md, i: usize, names: &std::collections::HashMap<String, String>) -> Vec<Term> {
    let a = &md.atoms[i];
    std::iter::once(&a.tid)
        .chain(&a.vars)
        .map(|v| var(&names[v]))
        .collect()
}

/// A merge variable not among `taken`.
fn fresh(taken: impl IntoIterator<Item = String>) -> String {
    let taken: BTreeSet<String> = taken.into_iter().collect();
    let mut name = "M".to_string();
    let mut n = 1;
    while taken.contains(&name) {
        n += 1;
        name = format!("M_{n}");
    }
    name
}

/// Body of the rule deriving `match_φ`: the atoms of the MD, its similarity
/// constraints and the requirement that the identified values differ.
fn match_body(
    md: &Md,
    names: &std::collections::HashMap<String, String>,
    pred: &dyn Fn(&str) -> String,
) -> Vec<Literal> {
    let mut body = Vec::new();
    for i in md.leading.iter().copied().chain(md.context_atoms().map(|(i, _)| i)) {
        body.push(pos(pred(&md.atoms[i].relation), md_atom_args(md, i, names)));
    }
    for s in &md.similarities {
        body.push(builtin("sim", &s.domain, vec![var(&names[&s.left]), var(&names[&s.right])]));
    }
    body.push(Literal::neq(var(&names[&md.rhs.left]), var(&names[&md.rhs.right])));
    body
}

fn match_args(md: &Md, names: &std::collections::HashMap<String, String>) -> Vec<Term> {
    let mut args = md_atom_args(md, md.leading[0], names);
    args.extend(md_atom_args(md, md.leading[1], names));
    args
}

/// The two rules inserting the merged value into each leading tuple.
fn insertion_rules(
    md: &Md,
    names: &std::collections::HashMap<String, String>,
    pred: &dyn Fn(&str) -> String,
) -> Vec<Clause> {
    let m = fresh(names.values().cloned());
    let head_match = Atom::new(match_pred(&md.name), match_args(md, names));
    let y1 = var(&names[&md.rhs.left]);
    let y2 = var(&names[&md.rhs.right]);
    [(0, md.rhs.left_pos), (1, md.rhs.right_pos)]
        .into_iter()
        .map(|(side, p)| {
            let i = md.leading[side];
            let mut args = md_atom_args(md, i, names);
            args[p + 1] = var(&m);
            rule(
                Atom::new(pred(&md.atoms[i].relation), args),
                vec![
                    Literal::Pos(head_match.clone()),
                    builtin("mf", &md.rhs.domain, vec![y1.clone(), y2.clone(), var(&m)]),
                ],
            )
        })
        .collect()
}

/// Variables `T, A, B, ...` for a whole tuple of `rel`, and the same with the
/// written attributes primed.
fn tuple_vars(rel: &RelationSchema, written: &BTreeSet<usize>) -> (Vec<Term>, Vec<Term>) {
    let stems = attr_stems(rel);
    let mut now = vec![var("T")];
    let mut next = vec![var("T")];
    for (i, s) in stems.iter().enumerate() {
        now.push(var(s));
        next.push(var(&if written.contains(&i) { format!("{s}'") } else { s.clone() }));
    }
    (now, next)
}

/// `old_version_r(T, Z) :- r(T, Z), r(T, Z'), Z ⪯ Z', Z != Z'` over the
/// written attributes; `order` renders one `⪯` comparison.
fn old_version_rule(
    rel: &RelationSchema,
    written: &BTreeSet<usize>,
    pred: &str,
    order: &dyn Fn(&str, Term, Term) -> Literal,
) -> Clause {
    let (now, next) = tuple_vars(rel, written);
    let mut body = vec![pos(pred, now.clone()), pos(pred, next.clone())];
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &i in written {
        body.push(order(rel.domain_of(i), now[i + 1].clone(), next[i + 1].clone()));
        left.push(now[i + 1].clone());
        right.push(next[i + 1].clone());
    }
    body.push(neq(left, right));
    rule(Atom::new(old_pred(&rel.name), now), body)
}

/// `r_c(T, Z) :- r(T, Z), not old_version_r(T, Z).`
fn collection_rule(rel: &RelationSchema, written: Option<&BTreeSet<usize>>, pred: &str) -> Clause {
    let (now, _) = tuple_vars(rel, &BTreeSet::new());
    let mut body = vec![pos(pred, now.clone())];
    if written.is_some_and(|w| !w.is_empty()) {
        body.push(Literal::Neg(Atom::new(old_pred(&rel.name), now.clone())));
    }
    rule(Atom::new(clean_pred(&rel.name), now), body)
}
