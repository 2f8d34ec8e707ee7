//! Stratified Datalog with built-in literals, evaluated bottom-up.
//!
//! ```text
//! r(T, X, Z) :- match_phi1(T, X, Y, T2, X2, Y2), mf("B", Y, Y2, Z).
//! r_c(T, X, Y) :- r(T, X, Y), not old_version_r(T, X, Y).
//! ```
//!
//! Built-ins are `sim(D, X, Y)`, `mf(D, X, Y, Z)`, `pre(D, X, Y)`, `X != Y`,
//! `(X1, X2) != (Y1, Y2)` and `X = Y`. The same clause grammar also carries
//! disjunctive heads and constraints so emitted ASP text can be read back.

mod builtins;
mod eval;
mod parser;
mod stratify;

pub use builtins::{Builtins, CoreBuiltins, FactBuiltins};
pub use eval::{evaluate, evaluate_naive, Model};
pub use parser::{parse_clauses, parse_program};
pub use stratify::stratify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::DatalogError;
use crate::model::Value;
pub use crate::query::Term;

/// Built-in predicate names with their arities.
pub const BUILTINS: [(&str, usize); 3] = [("sim", 3), ("mf", 4), ("pre", 3)];

pub fn builtin_arity(pred: &str) -> Option<usize> {
    BUILTINS.iter().find(|(n, _)| *n == pred).map(|(_, a)| *a)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn is_builtin(&self) -> bool {
        builtin_arity(&self.pred).is_some()
    }

    fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_terms(f, &self.args)?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[Term]) -> fmt::Result {
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    /// Disequality of two equally long term tuples; length one is `X != Y`.
    Neq(Vec<Term>, Vec<Term>),
    Eq(Term, Term),
}

impl Literal {
    pub fn neq(a: Term, b: Term) -> Self {
        Literal::Neq(vec![a], vec![b])
    }

    fn terms(&self) -> Vec<&Term> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
            Literal::Neq(a, b) => a.iter().chain(b).collect(),
            Literal::Eq(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Neq(a, b) if a.len() == 1 => write!(f, "{} != {}", a[0], b[0]),
            Literal::Neq(a, b) => {
                f.write_str("(")?;
                write_terms(f, a)?;
                f.write_str(") != (")?;
                write_terms(f, b)?;
                f.write_str(")")
            }
            Literal::Eq(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

/// A clause of the shared grammar: a fact or rule (one head atom), a
/// disjunctive rule (several), or a constraint (none).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub head: Vec<Atom>,
    pub body: Vec<Literal>,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{h}")?;
        }
        if !self.body.is_empty() {
            f.write_str(if self.head.is_empty() { ":- " } else { " :- " })?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head, body }
    }

    pub fn to_clause(&self) -> Clause {
        Clause {
            head: vec![self.head.clone()],
            body: self.body.clone(),
        }
    }

    /// Variables bound by positive non-built-in atoms, extended through `mf`
    /// outputs and equalities whose other side is bound.
    fn bound_vars(&self) -> BTreeSet<&str> {
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        for l in &self.body {
            if let Literal::Pos(a) = l {
                if !a.is_builtin() {
                    bound.extend(a.vars());
                }
            }
        }
        let is_bound = |t: &Term, b: &BTreeSet<&str>| t.as_var().is_none_or(|v| b.contains(v));
        loop {
            let before = bound.len();
            for l in &self.body {
                match l {
                    Literal::Pos(a) if a.pred == "mf" => {
                        if a.args[..3].iter().all(|t| is_bound(t, &bound)) {
                            bound.extend(a.args[3].as_var());
                        }
                    }
                    Literal::Eq(x, y) => {
                        if is_bound(x, &bound) {
                            bound.extend(y.as_var());
                        }
                        if is_bound(y, &bound) {
                            bound.extend(x.as_var());
                        }
                    }
                    _ => {}
                }
            }
            if bound.len() == before {
                return bound;
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_clause())
    }
}

/// Rules plus ground facts. Facts over `sim` and `mf` are tables for
/// [`FactBuiltins`]; the evaluator does not treat them as relations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub facts: Vec<Atom>,
}

impl Program {
    pub fn new(rules: Vec<Rule>, facts: Vec<Atom>) -> Result<Self, DatalogError> {
        let p = Program { rules, facts };
        p.validate()?;
        Ok(p)
    }

    pub fn from_clauses(clauses: Vec<Clause>) -> Result<Self, DatalogError> {
        let mut rules = Vec::new();
        let mut facts = Vec::new();
        for c in clauses {
            if c.head.len() != 1 {
                return Err(DatalogError::NotDatalog(c.to_string()));
            }
            let head = c.head.into_iter().next().expect("one head");
            if c.body.is_empty() && head.is_ground() {
                facts.push(head);
            } else {
                rules.push(Rule::new(head, c.body));
            }
        }
        Program::new(rules, facts)
    }

    /// Checks arities, reserved heads, safety and ground facts.
    pub fn validate(&self) -> Result<(), DatalogError> {
        let mut arity: BTreeMap<String, usize> = BTreeMap::new();
        let mut note = |a: &Atom| -> Result<(), DatalogError> {
            let n = a.args.len();
            let known = builtin_arity(&a.pred).or_else(|| arity.get(a.pred.as_str()).copied());
            match known {
                Some(m) if m != n => Err(DatalogError::ArityClash {
                    pred: a.pred.clone(),
                    first: m,
                    second: n,
                }),
                _ => {
                    arity.insert(a.pred.clone(), n);
                    Ok(())
                }
            }
        };
        for f in &self.facts {
            note(f)?;
            if !f.is_ground() {
                return Err(DatalogError::Unsafe {
                    rule: format!("{f}."),
                    var: f.vars().next().unwrap_or_default().to_string(),
                });
            }
        }
        for r in &self.rules {
            if r.head.is_builtin() {
                return Err(DatalogError::ReservedPredicate(r.head.pred.clone()));
            }
            note(&r.head)?;
            for l in &r.body {
                if let Literal::Pos(a) | Literal::Neg(a) = l {
                    note(a)?;
                }
                if let Literal::Neq(a, b) = l {
                    if a.len() != b.len() || a.is_empty() {
                        return Err(DatalogError::Parse {
                            line: 0,
                            column: 0,
                            message: format!("rule `{r}`: tuple disequality needs equal, nonzero lengths"),
                        });
                    }
                }
            }
            let bound = r.bound_vars();
            let unsafe_var = r
                .head
                .vars()
                .chain(r.body.iter().flat_map(|l| l.terms().into_iter().filter_map(Term::as_var)))
                .find(|v| !bound.contains(v));
            if let Some(v) = unsafe_var {
                return Err(DatalogError::Unsafe {
                    rule: r.to_string(),
                    var: v.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Non-built-in predicates in order of first appearance.
    pub fn predicates(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let atoms = self.facts.iter().chain(self.rules.iter().flat_map(|r| {
            std::iter::once(&r.head).chain(r.body.iter().filter_map(|l| match l {
                Literal::Pos(a) | Literal::Neg(a) => Some(a),
                _ => None,
            }))
        }));
        for a in atoms {
            if !a.is_builtin() && seen.insert(a.pred.clone()) {
                out.push(a.pred.clone());
            }
        }
        out
    }

    pub fn add_fact(&mut self, pred: &str, values: &[Value]) {
        self.facts.push(Atom::new(
            pred,
            values.iter().cloned().map(Term::Const).collect(),
        ));
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.facts {
            writeln!(f, "{a}.")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
