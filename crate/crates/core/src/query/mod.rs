//! Conjunctive queries over instances and certain answers over sets of clean
//! instances.
//!
//! ```text
//! q(X) :- R(T, X, Y), Y ~B~ c, T != T2.
//! ```
//!
//! The first argument of a relation atom is the tuple identifier. Variables
//! start with an uppercase letter, constants are lowercase words or quoted
//! strings. `~` (optionally `~DOM~`) is similarity, `!=` and `=` compare terms.

mod parser;

pub use parser::parse_queries;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{ModelError, QueryError};
use crate::model::{Instance, Schema, SimilarityRelation, TupleSource, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => f.write_str(&constant_text(c.as_str())),
        }
    }
}

/// Spelling of a constant in rule text: bare when it lexes as a lowercase
/// word, quoted otherwise.
pub fn constant_text(s: &str) -> String {
    let bare = s.starts_with(|c: char| c.is_ascii_lowercase())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if bare {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryAtom {
    pub relation: String,
    pub tid: Term,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    Sim {
        left: Term,
        right: Term,
        domain: Option<String>,
    },
    Neq(Term, Term),
    Eq(Term, Term),
}

impl Condition {
    fn terms(&self) -> [&Term; 2] {
        match self {
            Condition::Sim { left, right, .. } => [left, right],
            Condition::Neq(a, b) | Condition::Eq(a, b) => [a, b],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConjunctiveQuery {
    pub name: String,
    pub head: Vec<String>,
    pub atoms: Vec<QueryAtom>,
    pub conditions: Vec<Condition>,
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) :- ", self.name, self.head.join(", "))?;
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                let mut args = vec![a.tid.to_string()];
                args.extend(a.args.iter().map(Term::to_string));
                format!("{}({})", a.relation, args.join(", "))
            })
            .collect();
        for c in &self.conditions {
            parts.push(match c {
                Condition::Sim {
                    left,
                    right,
                    domain: Some(d),
                } => format!("{left} ~{d}~ {right}"),
                Condition::Sim { left, right, .. } => format!("{left} ~ {right}"),
                Condition::Neq(a, b) => format!("{a} != {b}"),
                Condition::Eq(a, b) => format!("{a} = {b}"),
            });
        }
        write!(f, "{}.", parts.join(", "))
    }
}

pub type AnswerSet = BTreeSet<Vec<Value>>;

/// Variable bindings of one satisfying assignment.
pub type Witness = BTreeMap<String, Value>;

impl ConjunctiveQuery {
    /// Head variables kept in answers. Variables occurring only as tuple
    /// identifiers are dropped unless `include_tids` is set.
    pub fn answer_columns(&self, include_tids: bool) -> Vec<String> {
        if include_tids {
            return self.head.clone();
        }
        let value_vars: BTreeSet<&str> = self
            .atoms
            .iter()
            .flat_map(|a| a.args.iter().filter_map(Term::as_var))
            .collect();
        let tid_vars: BTreeSet<&str> = self.atoms.iter().filter_map(|a| a.tid.as_var()).collect();
        self.head
            .iter()
            .filter(|h| !tid_vars.contains(h.as_str()) || value_vars.contains(h.as_str()))
            .cloned()
            .collect()
    }

    /// Checks the query against `schema` and resolves similarity domains.
    fn resolve(&self, schema: &Schema) -> Result<Vec<Option<String>>, QueryError> {
        let invalid = |message: String| QueryError::Invalid {
            query: self.name.clone(),
            message,
        };
        let mut var_domain: HashMap<&str, &str> = HashMap::new();
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        for a in &self.atoms {
            let rel = schema
                .relation(&a.relation)
                .ok_or_else(|| QueryError::Model(ModelError::UnknownRelation(a.relation.clone())))?;
            if rel.arity() != a.args.len() {
                return Err(QueryError::Model(ModelError::ArityMismatch {
                    relation: a.relation.clone(),
                    expected: rel.arity() + 1,
                    found: a.args.len() + 1,
                }));
            }
            if let Some(v) = a.tid.as_var() {
                bound.insert(v);
            }
            for (p, t) in a.args.iter().enumerate() {
                if let Some(v) = t.as_var() {
                    bound.insert(v);
                    var_domain.entry(v).or_insert(rel.domain_of(p));
                }
            }
        }
        for h in &self.head {
            if !bound.contains(h.as_str()) {
                return Err(QueryError::UnsafeHead {
                    query: self.name.clone(),
                    var: h.clone(),
                });
            }
        }
        let mut domains = Vec::with_capacity(self.conditions.len());
        for c in &self.conditions {
            for t in c.terms() {
                if let Some(v) = t.as_var() {
                    if !bound.contains(v) {
                        return Err(invalid(format!("variable {v} does not occur in a relation atom")));
                    }
                }
            }
            domains.push(match c {
                Condition::Sim { left, right, domain } => {
                    let inferred = [left, right]
                        .iter()
                        .filter_map(|t| t.as_var())
                        .find_map(|v| var_domain.get(v).copied());
                    match (domain, inferred) {
                        (Some(d), _) => Some(d.clone()),
                        (None, Some(d)) => Some(d.to_string()),
                        (None, None) => {
                            return Err(invalid(format!(
                                "cannot tell the domain of `{left} ~ {right}`; write `~DOMAIN~`"
                            )))
                        }
                    }
                }
                _ => None,
            });
        }
        Ok(domains)
    }
}

/// All answers of `q` on `d`, tuple identifiers excluded from answers.
pub fn eval_cq<S: TupleSource + ?Sized>(
    d: &S,
    q: &ConjunctiveQuery,
    sim: &SimilarityRelation,
) -> Result<AnswerSet, QueryError> {
    eval_cq_with(d, q, sim, false)
}

pub fn eval_cq_with<S: TupleSource + ?Sized>(
    d: &S,
    q: &ConjunctiveQuery,
    sim: &SimilarityRelation,
    include_tids: bool,
) -> Result<AnswerSet, QueryError> {
    let cols = q.answer_columns(include_tids);
    let mut out = AnswerSet::new();
    search(d, q, sim, |env| {
        out.insert(cols.iter().map(|c| env[c.as_str()].clone()).collect());
        true
    })?;
    Ok(out)
}

/// The first satisfying assignment of `q` on `d`, if any.
pub fn find_witness<S: TupleSource + ?Sized>(
    d: &S,
    q: &ConjunctiveQuery,
    sim: &SimilarityRelation,
) -> Result<Option<Witness>, QueryError> {
    let mut found = None;
    search(d, q, sim, |env| {
        found = Some(env.iter().map(|(k, v)| (k.to_string(), v.clone())).collect());
        false
    })?;
    Ok(found)
}

/// Answers that hold in every member of `clean`.
pub fn certain_answers<'a, I>(
    clean: I,
    q: &ConjunctiveQuery,
    sim: &SimilarityRelation,
    include_tids: bool,
) -> Result<AnswerSet, QueryError>
where
    I: IntoIterator<Item = &'a Instance>,
{
    let mut acc: Option<AnswerSet> = None;
    for d in clean {
        let ans = eval_cq_with(d, q, sim, include_tids)?;
        acc = Some(match acc {
            None => ans,
            Some(prev) => prev.intersection(&ans).cloned().collect(),
        });
    }
    acc.ok_or(QueryError::EmptyCleanSet)
}

/// Backtracking homomorphism search. Atoms are taken greedily, most bound
/// first; each condition is tested as soon as its variables are bound.
fn search<S: TupleSource + ?Sized, F>(
    d: &S,
    q: &ConjunctiveQuery,
    sim: &SimilarityRelation,
    mut visit: F,
) -> Result<(), QueryError>
where
    F: FnMut(&HashMap<&str, Value>) -> bool,
{
    let domains = q.resolve(d.schema())?;
    let order = atom_order(q);
    // conditions become checkable after the atom at this step of `order`
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); order.len().max(1)];
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut ready_at: Vec<Option<usize>> = vec![None; q.conditions.len()];
    for (step, &ai) in order.iter().enumerate() {
        let a = &q.atoms[ai];
        seen.extend(a.tid.as_var());
        seen.extend(a.args.iter().filter_map(Term::as_var));
        for (ci, c) in q.conditions.iter().enumerate() {
            if ready_at[ci].is_none() && c.terms().iter().all(|t| t.as_var().is_none_or(|v| seen.contains(v))) {
                ready_at[ci] = Some(step);
                checks[step].push(ci);
            }
        }
    }
    // conditions over constants only
    let ground: Vec<usize> = (0..q.conditions.len()).filter(|&i| ready_at[i].is_none()).collect();
    let env: HashMap<&str, Value> = HashMap::new();
    if !ground.iter().all(|&ci| holds(&q.conditions[ci], domains[ci].as_deref(), &env, sim)) {
        return Ok(());
    }
    let mut env = env;
    if order.is_empty() {
        visit(&env);
        return Ok(());
    }
    step(d, q, sim, &domains, &order, &checks, 0, &mut env, &mut visit);
    Ok(())
}

fn atom_order(q: &ConjunctiveQuery) -> Vec<usize> {
    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let mut left: Vec<usize> = (0..q.atoms.len()).collect();
    let mut order = Vec::new();
    while !left.is_empty() {
        let score = |i: usize| {
            let a = &q.atoms[i];
            std::iter::once(&a.tid)
                .chain(&a.args)
                .filter(|t| t.as_var().is_none_or(|v| bound.contains(v)))
                .count()
        };
        let (k, _) = left
            .iter()
            .enumerate()
            .max_by_key(|(k, &i)| (score(i), std::cmp::Reverse(*k)))
            .expect("nonempty");
        let i = left.remove(k);
        let a = &q.atoms[i];
        bound.extend(a.tid.as_var());
        bound.extend(a.args.iter().filter_map(Term::as_var));
        order.push(i);
    }
    order
}

fn value_of<'e>(t: &'e Term, env: &'e HashMap<&str, Value>) -> &'e Value {
    match t {
        Term::Var(v) => &env[v.as_str()],
        Term::Const(c) => c,
    }
}

fn holds(c: &Condition, domain: Option<&str>, env: &HashMap<&str, Value>, sim: &SimilarityRelation) -> bool {
    match c {
        Condition::Sim { left, right, .. } => sim.holds(
            domain.expect("resolved"),
            value_of(left, env),
            value_of(right, env),
        ),
        Condition::Neq(a, b) => value_of(a, env) != value_of(b, env),
        Condition::Eq(a, b) => value_of(a, env) == value_of(b, env),
    }
}

#[allow(clippy::too_many_arguments)]
fn step<'q, S: TupleSource + ?Sized, F>(
    d: &S,
    q: &'q ConjunctiveQuery,
    sim: &SimilarityRelation,
    domains: &[Option<String>],
    order: &[usize],
    checks: &[Vec<usize>],
    k: usize,
    env: &mut HashMap<&'q str, Value>,
    visit: &mut F,
) -> bool
where
    F: FnMut(&HashMap<&str, Value>) -> bool,
{
    if k == order.len() {
        return visit(env);
    }
    let atom = &q.atoms[order[k]];
    for (tid, vals) in d.scan(&atom.relation) {
        let tid_val = Value::new(tid.as_str());
        let mut added: Vec<&str> = Vec::new();
        let mut ok = true;
        for (t, v) in std::iter::once((&atom.tid, &tid_val)).chain(atom.args.iter().zip(vals)) {
            match t {
                Term::Const(c) => {
                    if c != v {
                        ok = false;
                        break;
                    }
                }
                Term::Var(name) => match env.get(name.as_str()) {
                    Some(prev) if prev != v => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        env.insert(name, v.clone());
                        added.push(name);
                    }
                },
            }
        }
        if ok {
            ok = checks[k]
                .iter()
                .all(|&ci| holds(&q.conditions[ci], domains[ci].as_deref(), env, sim));
        }
        let mut go_on = true;
        if ok {
            go_on = step(d, q, sim, domains, order, checks, k + 1, env, visit);
        }
        for v in added {
            env.remove(v);
        }
        if !go_on {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{example2, r_instance};

    fn q(text: &str) -> ConjunctiveQuery {
        parse_queries(text).unwrap().remove(0)
    }

    fn vals(list: &[&str]) -> AnswerSet {
        list.iter().map(|v| vec![Value::new(v)]).collect()
    }

    fn d1() -> Instance {
        r_instance(&[("t1", "a1", "b12"), ("t2", "a2", "b12"), ("t3", "a3", "b3")])
    }

    fn d2() -> Instance {
        r_instance(&[("t1", "a1", "b123"), ("t2", "a2", "b123"), ("t3", "a3", "b23")])
    }

    #[test]
    fn projection_over_clean_instances() {
        let sim = example2().sim;
        let qx = q("q(X) :- R(T, X, Y).");
        let qy = q("q(Y) :- R(T, X, Y).");
        assert_eq!(eval_cq(&d1(), &qx, &sim).unwrap(), vals(&["a1", "a2", "a3"]));
        assert_eq!(eval_cq(&d2(), &qy, &sim).unwrap(), vals(&["b123", "b23"]));
    }

    #[test]
    fn certain_answers_intersect() {
        let sim = example2().sim;
        let (a, b) = (d1(), d2());
        let qx = q("q(X) :- R(T, X, Y).");
        let qy = q("q(Y) :- R(T, X, Y).");
        assert_eq!(
            certain_answers([&a, &b], &qy, &sim, false).unwrap(),
            AnswerSet::new()
        );
        assert_eq!(
            certain_answers([&a, &b], &qx, &sim, false).unwrap(),
            vals(&["a1", "a2", "a3"])
        );
        assert_eq!(
            certain_answers([&a], &qy, &sim, false).unwrap(),
            eval_cq(&a, &qy, &sim).unwrap()
        );
        assert_eq!(
            certain_answers([], &qy, &sim, false),
            Err(QueryError::EmptyCleanSet)
        );
    }

    #[test]
    fn empty_instance_has_no_answers() {
        let sim = example2().sim;
        let empty = r_instance(&[]);
        assert!(eval_cq(&empty, &q("q(X) :- R(T, X, Y)."), &sim).unwrap().is_empty());
        assert!(eval_cq(&empty, &q("q() :- R(T, X, Y)."), &sim).unwrap().is_empty());
    }

    #[test]
    fn similarity_and_constants() {
        let p = example2();
        let q1 = q("q(T) :- R(T, X, Y), Y ~ b3.");
        let got = eval_cq_with(&p.instance, &q1, &p.sim, true).unwrap();
        assert_eq!(got, vals(&["t2", "t3"]));
        // tid-only head variables are dropped by default
        let got = eval_cq(&p.instance, &q1, &p.sim).unwrap();
        assert_eq!(got, [vec![]].into_iter().collect());
    }

    #[test]
    fn boolean_query_with_distinct_tids() {
        let p = example2();
        let sat = q("q() :- R(T1, X1, Y1), R(T2, X2, Y2), X1 ~ X2, R(T3, X3, Y3), Y2 ~ Y3, T1 != T2, T1 != T3, T2 != T3.");
        let w = find_witness(&p.instance, &sat, &p.sim).unwrap().unwrap();
        assert_eq!(w["T3"], Value::new("t3"));
        assert_eq!(w["T2"], Value::new("t2"));
    }

    #[test]
    fn errors() {
        let sim = example2().sim;
        let err = eval_cq(&d1(), &q("q(Z) :- R(T, X, Y)."), &sim).unwrap_err();
        assert!(matches!(err, QueryError::UnsafeHead { .. }));
        let err = eval_cq(&d1(), &q("q(X) :- S(T, X)."), &sim).unwrap_err();
        assert!(matches!(err, QueryError::Model(ModelError::UnknownRelation(_))));
        let err = eval_cq(&d1(), &q("q(X) :- R(T, X)."), &sim).unwrap_err();
        assert!(matches!(err, QueryError::Model(ModelError::ArityMismatch { .. })));
    }

    #[test]
    fn display_round_trips() {
        let text = "q(X) :- R(T, X, Y), Y ~B~ \"b 1\", T != t2.";
        let parsed = q(text);
        assert_eq!(parsed.to_string(), text);
        assert_eq!(q(&parsed.to_string()), parsed);
    }
}
