use std::collections::HashMap;
use std::ops::Index;

use crate::md::Md;
use crate::model::{SimilarityRelation, Tid, TupleSource, Value};

/// Variable bindings of a partial match. MDs have few variables, so a linear
/// scan beats hashing.
#[derive(Debug, Default)]
pub(crate) struct Bindings<'m> {
    slots: Vec<(&'m str, Value)>,
}

impl<'m> Bindings<'m> {
    pub(crate) fn get(&self, var: &str) -> Option<&Value> {
        self.slots.iter().find(|(v, _)| *v == var).map(|(_, x)| x)
    }

    fn bind(&mut self, var: &'m str, val: Value) {
        self.slots.push((var, val));
    }

    fn truncate(&mut self, len: usize) {
        self.slots.truncate(len);
    }
}

impl Index<&str> for Bindings<'_> {
    type Output = Value;

    fn index(&self, var: &str) -> &Value {
        self.get(var).unwrap_or_else(|| panic!("unbound variable {var}"))
    }
}

/// Enumerates the assignments of the tuples of `d` to the atoms of
/// `md` that satisfy its left-hand side. `visit` receives one tid per atom and
/// the variable bindings; returning `false` stops the search.
pub(crate) fn for_each_lhs_match<S, F>(d: &S, md: &Md, sim: &SimilarityRelation, mut visit: F)
where
    S: TupleSource + ?Sized,
    F: FnMut(&[Tid], &Bindings<'_>) -> bool,
{
    // checks[k]: similarity constraints whose variables are all bound once atom k is.
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for (i, a) in md.atoms.iter().enumerate() {
        for v in &a.vars {
            first_seen.entry(v.as_str()).or_insert(i);
        }
    }
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); md.atoms.len()];
    for (s, c) in md.similarities.iter().enumerate() {
        let k = first_seen[c.left.as_str()].max(first_seen[c.right.as_str()]);
        checks[k].push(s);
    }
    let rows: Vec<Vec<(&Tid, &[Value])>> = md
        .atoms
        .iter()
        .map(|a| d.scan(&a.relation).collect())
        .collect();
    let mut tids: Vec<Tid> = Vec::with_capacity(md.atoms.len());
    let mut env = Bindings::default();
    search(md, sim, &rows, &checks, 0, &mut tids, &mut env, &mut visit);
}

#[allow(clippy::too_many_arguments)]
fn search<'m, F>(
    md: &'m Md,
    sim: &SimilarityRelation,
    rows: &[Vec<(&Tid, &[Value])>],
    checks: &[Vec<usize>],
    k: usize,
    tids: &mut Vec<Tid>,
    env: &mut Bindings<'m>,
    visit: &mut F,
) -> bool
where
    F: FnMut(&[Tid], &Bindings<'_>) -> bool,
{
    if k == md.atoms.len() {
        return visit(tids, env);
    }
    let atom = &md.atoms[k];
    'rows: for (tid, vals) in &rows[k] {
        let mark = env.slots.len();
        for (var, val) in atom.vars.iter().zip(vals.iter()) {
            match env.get(var) {
                Some(prev) if prev != val => {
                    env.truncate(mark);
                    continue 'rows;
                }
                Some(_) => {}
                None => env.bind(var, val.clone()),
            }
        }
        let ok = checks[k].iter().all(|&s| {
            let c = &md.similarities[s];
            sim.holds(&c.domain, &env[c.left.as_str()], &env[c.right.as_str()])
        });
        let mut keep_going = true;
        if ok {
            tids.push((*tid).clone());
            keep_going = search(md, sim, rows, checks, k + 1, tids, env, visit);
            tids.pop();
        }
        env.truncate(mark);
        if !keep_going {
            return false;
        }
    }
    true
}
