use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use super::{stratify, Atom, Builtins, Literal, Program, Rule, Term};
use crate::error::DatalogError;
use crate::model::Value;

/// Derived relations, one sorted set of rows per predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Model {
    relations: BTreeMap<String, BTreeSet<Vec<Value>>>,
}

impl Model {
    pub fn get(&self, pred: &str) -> Option<&BTreeSet<Vec<Value>>> {
        self.relations.get(pred)
    }

    /// Rows of `pred`, empty when it was never derived.
    pub fn rows(&self, pred: &str) -> impl Iterator<Item = &Vec<Value>> {
        self.relations.get(pred).into_iter().flatten()
    }

    pub fn contains(&self, pred: &str, row: &[Value]) -> bool {
        self.relations.get(pred).is_some_and(|r| r.contains(row))
    }

    pub fn relations(&self) -> &BTreeMap<String, BTreeSet<Vec<Value>>> {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
enum CTerm {
    Var(usize),
    Const(Value),
}

#[derive(Clone, Debug)]
struct CAtom {
    pred: String,
    args: Vec<CTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Src {
    Full,
    Delta,
}

#[derive(Clone, Debug)]
enum Op {
    Scan { atom: CAtom, key: Vec<usize>, src: Src },
    /// Negated relation atom, every argument bound.
    Absent(CAtom),
    /// Built-in with every argument bound, possibly negated.
    Test { atom: CAtom, negated: bool },
    Merge { args: [CTerm; 3], out: usize },
    Neq(Vec<CTerm>, Vec<CTerm>),
    Bind { var: usize, from: CTerm },
    Same(CTerm, CTerm),
}

struct Plan {
    ops: Vec<Op>,
    head: CAtom,
    slots: usize,
}

struct Slots<'r> {
    names: HashMap<&'r str, usize>,
}

impl<'r> Slots<'r> {
    fn term(&mut self, t: &'r Term) -> CTerm {
        match t {
            Term::Const(v) => CTerm::Const(v.clone()),
            Term::Var(v) => {
                let n = self.names.len();
                CTerm::Var(*self.names.entry(v).or_insert(n))
            }
        }
    }

    fn atom(&mut self, a: &'r Atom) -> CAtom {
        CAtom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|t| self.term(t)).collect(),
        }
    }
}

fn compile(rule: &Rule, delta: Option<usize>) -> Result<Plan, DatalogError> {
    let mut slots = Slots {
        names: HashMap::new(),
    };
    let lits: Vec<(&Literal, Option<CAtom>)> = rule
        .body
        .iter()
        .map(|l| match l {
            Literal::Pos(a) | Literal::Neg(a) => (l, Some(slots.atom(a))),
            _ => (l, None),
        })
        .collect();
    let mut bound: HashSet<usize> = HashSet::new();
    let is_bound = |t: &CTerm, b: &HashSet<usize>| match t {
        CTerm::Var(i) => b.contains(i),
        CTerm::Const(_) => true,
    };
    let mut ops = Vec::new();
    let mut remaining: Vec<usize> = (0..lits.len()).collect();
    let scan = |a: &CAtom, src: Src, bound: &mut HashSet<usize>| {
        let key = (0..a.args.len()).filter(|&p| is_bound(&a.args[p], bound)).collect();
        for t in &a.args {
            if let CTerm::Var(i) = t {
                bound.insert(*i);
            }
        }
        Op::Scan {
            atom: a.clone(),
            key,
            src,
        }
    };
    if let Some(d) = delta {
        let a = lits[d].1.as_ref().expect("delta literal is an atom");
        ops.push(scan(a, Src::Delta, &mut bound));
        remaining.retain(|&i| i != d);
    }
    while !remaining.is_empty() {
        // cheapest first: anything that filters or binds without scanning
        let mut pick: Option<(usize, Op)> = None;
        for (k, &i) in remaining.iter().enumerate() {
            let (lit, ca) = &lits[i];
            let op = match (lit, ca) {
                (Literal::Neg(a), Some(c)) if c.args.iter().all(|t| is_bound(t, &bound)) => Some(if a.is_builtin() {
                    Op::Test {
                        atom: c.clone(),
                        negated: true,
                    }
                } else {
                    Op::Absent(c.clone())
                }),
                (Literal::Pos(a), Some(c)) if a.is_builtin() => {
                    if c.args.iter().all(|t| is_bound(t, &bound)) {
                        Some(Op::Test {
                            atom: c.clone(),
                            negated: false,
                        })
                    } else if a.pred == "mf" && c.args[..3].iter().all(|t| is_bound(t, &bound)) {
                        let CTerm::Var(out) = c.args[3] else { unreachable!() };
                        Some(Op::Merge {
                            args: [c.args[0].clone(), c.args[1].clone(), c.args[2].clone()],
                            out,
                        })
                    } else {
                        None
                    }
                }
                (Literal::Neq(a, b), _) => {
                    let (a, b): (Vec<CTerm>, Vec<CTerm>) = (a.iter().map(|t| slots.term(t)).collect(), b.iter().map(|t| slots.term(t)).collect());
                    a.iter()
                        .chain(&b)
                        .all(|t| is_bound(t, &bound))
                        .then_some(Op::Neq(a, b))
                }
                (Literal::Eq(x, y), _) => {
                    let (x, y) = (slots.term(x), slots.term(y));
                    match (is_bound(&x, &bound), is_bound(&y, &bound), &x, &y) {
                        (true, true, _, _) => Some(Op::Same(x, y)),
                        (true, false, _, CTerm::Var(v)) => Some(Op::Bind { var: *v, from: x }),
                        (false, true, CTerm::Var(v), _) => Some(Op::Bind { var: *v, from: y }),
                        _ => None,
                    }
                }
                _ => None,
            };
            if let Some(op) = op {
                pick = Some((k, op));
                break;
            }
        }
        if let Some((k, op)) = pick {
            match &op {
                Op::Merge { out, .. } | Op::Bind { var: out, .. } => {
                    bound.insert(*out);
                }
                _ => {}
            }
            ops.push(op);
            remaining.remove(k);
            continue;
        }
        // otherwise scan the relation atom with the most bound arguments
        let best = remaining
            .iter()
            .enumerate()
            .filter_map(|(k, &i)| match &lits[i] {
                (Literal::Pos(a), Some(c)) if !a.is_builtin() => {
                    Some((c.args.iter().filter(|t| is_bound(t, &bound)).count(), std::cmp::Reverse(k)))
                }
                _ => None,
            })
            .max();
        let Some((_, std::cmp::Reverse(k))) = best else {
            let stuck = lits[remaining[0]].0;
            return Err(DatalogError::UnboundBuiltin {
                rule: rule.to_string(),
                literal: stuck.to_string(),
            });
        };
        let i = remaining.remove(k);
        ops.push(scan(lits[i].1.as_ref().expect("atom"), Src::Full, &mut bound));
    }
    let head = slots.atom(&rule.head);
    for t in &head.args {
        if let CTerm::Var(v) = t {
            if !bound.contains(v) {
                return Err(DatalogError::Unsafe {
                    rule: rule.to_string(),
                    var: slots.names.iter().find(|(_, i)| *i == v).map(|(n, _)| n.to_string()).unwrap_or_default(),
                });
            }
        }
    }
    Ok(Plan {
        ops,
        head,
        slots: slots.names.len(),
    })
}

#[derive(Default)]
struct Index {
    upto: usize,
    map: HashMap<Vec<Value>, Vec<usize>>,
}

#[derive(Default)]
struct Rel {
    rows: Vec<Vec<Value>>,
    set: HashSet<Vec<Value>>,
    indexes: HashMap<Vec<usize>, Index>,
}

impl Rel {
    fn insert(&mut self, row: Vec<Value>) -> bool {
        if self.set.contains(&row) {
            return false;
        }
        self.set.insert(row.clone());
        self.rows.push(row);
        true
    }

    fn index(&mut self, key: &[usize]) {
        let ix = self.indexes.entry(key.to_vec()).or_default();
        for (id, row) in self.rows.iter().enumerate().skip(ix.upto) {
            let k: Vec<Value> = key.iter().map(|&p| row[p].clone()).collect();
            ix.map.entry(k).or_default().push(id);
        }
        ix.upto = self.rows.len();
    }
}

struct Db<'b> {
    rels: HashMap<String, Rel>,
    /// Per predicate, the delta range of the current round.
    window: HashMap<String, (usize, usize)>,
    builtins: &'b dyn Builtins,
}

impl Db<'_> {
    fn range(&self, pred: &str, src: Src) -> (usize, usize) {
        let len = self.rels.get(pred).map_or(0, |r| r.rows.len());
        match (src, self.window.get(pred)) {
            (Src::Full, Some(&(_, hi))) => (0, hi),
            (Src::Full, None) => (0, len),
            (Src::Delta, Some(&w)) => w,
            (Src::Delta, None) => (len, len),
        }
    }

    fn prepare(&mut self, plan: &Plan) {
        for op in &plan.ops {
            if let Op::Scan { atom, key, .. } = op {
                if !key.is_empty() {
                    self.rels.entry(atom.pred.clone()).or_default().index(key);
                }
            }
        }
    }

    fn run(&self, plan: &Plan, out: &mut Vec<(String, Vec<Value>)>) {
        let mut env: Vec<Option<Value>> = vec![None; plan.slots];
        self.step(plan, 0, &mut env, out);
    }

    fn step(&self, plan: &Plan, k: usize, env: &mut Vec<Option<Value>>, out: &mut Vec<(String, Vec<Value>)>) {
        let val = |t: &CTerm, env: &[Option<Value>]| -> Value {
            match t {
                CTerm::Const(v) => v.clone(),
                CTerm::Var(i) => env[*i].clone().expect("bound by plan"),
            }
        };
        let Some(op) = plan.ops.get(k) else {
            let row: Vec<Value> = plan.head.args.iter().map(|t| val(t, env)).collect();
            if !self.rels.get(&plan.head.pred).is_some_and(|r| r.set.contains(&row)) {
                out.push((plan.head.pred.clone(), row));
            }
            return;
        };
        match op {
            Op::Scan { atom, key, src } => {
                let Some(rel) = self.rels.get(&atom.pred) else { return };
                let (lo, hi) = self.range(&atom.pred, *src);
                let visit = |id: usize, env: &mut Vec<Option<Value>>, out: &mut Vec<(String, Vec<Value>)>| {
                    let row = &rel.rows[id];
                    let mut set: Vec<usize> = Vec::new();
                    let mut ok = true;
                    for (t, v) in atom.args.iter().zip(row) {
                        match t {
                            CTerm::Const(c) => ok = c == v,
                            CTerm::Var(i) => match &env[*i] {
                                Some(b) => ok = b == v,
                                None => {
                                    env[*i] = Some(v.clone());
                                    set.push(*i);
                                }
                            },
                        }
                        if !ok {
                            break;
                        }
                    }
                    if ok {
                        self.step(plan, k + 1, env, out);
                    }
                    for i in set {
                        env[i] = None;
                    }
                };
                if key.is_empty() {
                    for id in lo..hi {
                        visit(id, env, out);
                    }
                } else {
                    let probe: Vec<Value> = key.iter().map(|&p| val(&atom.args[p], env)).collect();
                    let ix = &rel.indexes[key];
                    if let Some(ids) = ix.map.get(&probe) {
                        let start = ids.partition_point(|&i| i < lo);
                        for &id in ids[start..].iter().take_while(|&&i| i < hi) {
                            visit(id, env, out);
                        }
                    }
                }
            }
            Op::Absent(atom) => {
                let row: Vec<Value> = atom.args.iter().map(|t| val(t, env)).collect();
                if !self.rels.get(&atom.pred).is_some_and(|r| r.set.contains(&row)) {
                    self.step(plan, k + 1, env, out);
                }
            }
            Op::Test { atom, negated } => {
                let a: Vec<Value> = atom.args.iter().map(|t| val(t, env)).collect();
                if call(self.builtins, &atom.pred, &a) != *negated {
                    self.step(plan, k + 1, env, out);
                }
            }
            Op::Merge { args, out: o } => {
                let [d, a, b] = [val(&args[0], env), val(&args[1], env), val(&args[2], env)];
                if let Some(m) = self.builtins.mf(d.as_str(), &a, &b) {
                    env[*o] = Some(m);
                    self.step(plan, k + 1, env, out);
                    env[*o] = None;
                }
            }
            Op::Neq(a, b) => {
                let differ = a.iter().zip(b).any(|(x, y)| val(x, env) != val(y, env));
                if differ {
                    self.step(plan, k + 1, env, out);
                }
            }
            Op::Bind { var, from } => {
                env[*var] = Some(val(from, env));
                self.step(plan, k + 1, env, out);
                env[*var] = None;
            }
            Op::Same(a, b) => {
                if val(a, env) == val(b, env) {
                    self.step(plan, k + 1, env, out);
                }
            }
        }
    }
}

fn call(b: &dyn Builtins, pred: &str, a: &[Value]) -> bool {
    match (pred, a) {
        ("sim", [d, x, y]) => b.sim(d.as_str(), x, y),
        ("pre", [d, x, y]) => b.pre(d.as_str(), x, y),
        ("mf", [d, x, y, z]) => b.mf(d.as_str(), x, y).as_ref() == Some(z),
        _ => false,
    }
}

fn fact_row(a: &Atom) -> Vec<Value> {
    a.args
        .iter()
        .map(|t| match t {
            Term::Const(v) => v.clone(),
            Term::Var(_) => unreachable!("facts are ground"),
        })
        .collect()
}

/// Bottom-up semi-naive evaluation, stratum by stratum.
pub fn evaluate(p: &Program, builtins: &dyn Builtins) -> Result<Model, DatalogError> {
    p.validate()?;
    let strata = stratify(p)?;
    let mut db = Db {
        rels: HashMap::new(),
        window: HashMap::new(),
        builtins,
    };
    for f in p.facts.iter().filter(|f| !f.is_builtin()) {
        db.rels.entry(f.pred.clone()).or_default().insert(fact_row(f));
    }
    for stratum in &strata {
        let here: HashSet<&str> = stratum.iter().map(String::as_str).collect();
        let rules: Vec<&Rule> = p.rules.iter().filter(|r| here.contains(r.head.pred.as_str())).collect();
        if rules.is_empty() {
            continue;
        }
        let full: Vec<Plan> = rules.iter().map(|r| compile(r, None)).collect::<Result<_, _>>()?;
        let mut deltas: Vec<Plan> = Vec::new();
        for r in &rules {
            for (i, l) in r.body.iter().enumerate() {
                if matches!(l, Literal::Pos(a) if here.contains(a.pred.as_str())) {
                    deltas.push(compile(r, Some(i))?);
                }
            }
        }
        let len = |db: &Db, pred: &str| db.rels.get(pred).map_or(0, |r| r.rows.len());
        let mut round_start: HashMap<&str, usize> = here.iter().map(|p| (*p, len(&db, p))).collect();
        db.window.clear();
        let mut derived = Vec::new();
        for plan in &full {
            db.prepare(plan);
            db.run(plan, &mut derived);
        }
        loop {
            for (pred, row) in derived.drain(..) {
                db.rels.entry(pred).or_default().insert(row);
            }
            let mut grew = false;
            db.window.clear();
            for p in &here {
                let (lo, hi) = (round_start[p], len(&db, p));
                grew |= hi > lo;
                db.window.insert(p.to_string(), (lo, hi));
                round_start.insert(p, hi);
            }
            if !grew {
                break;
            }
            for plan in &deltas {
                db.prepare(plan);
                db.run(plan, &mut derived);
            }
        }
        db.window.clear();
    }
    let mut model = Model::default();
    // probing may leave empty entries behind; a model lists derived rows only
    for (pred, rel) in db.rels.into_iter().filter(|(_, r)| !r.rows.is_empty()) {
        model.relations.insert(pred, rel.rows.into_iter().collect());
    }
    Ok(model)
}

/// Reference evaluator: re-applies every rule of a stratum to the whole
/// database until nothing new appears, joining atoms in written order.
pub fn evaluate_naive(p: &Program, builtins: &dyn Builtins) -> Result<Model, DatalogError> {
    p.validate()?;
    let strata = stratify(p)?;
    let mut db: BTreeMap<String, BTreeSet<Vec<Value>>> = BTreeMap::new();
    for f in p.facts.iter().filter(|f| !f.is_builtin()) {
        db.entry(f.pred.clone()).or_default().insert(fact_row(f));
    }
    for stratum in &strata {
        let rules: Vec<&Rule> = p.rules.iter().filter(|r| stratum.contains(&r.head.pred)).collect();
        loop {
            let mut new = Vec::new();
            for r in &rules {
                for env in naive_matches(r, &db, builtins)? {
                    let row: Vec<Value> = r
                        .head
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::Const(v) => v.clone(),
                            Term::Var(v) => env[v].clone(),
                        })
                        .collect();
                    if !db.get(&r.head.pred).is_some_and(|s| s.contains(&row)) {
                        new.push((r.head.pred.clone(), row));
                    }
                }
            }
            if new.is_empty() {
                break;
            }
            for (pred, row) in new {
                db.entry(pred).or_default().insert(row);
            }
        }
    }
    Ok(Model { relations: db })
}

type Env = BTreeMap<String, Value>;

fn naive_matches(
    r: &Rule,
    db: &BTreeMap<String, BTreeSet<Vec<Value>>>,
    b: &dyn Builtins,
) -> Result<Vec<Env>, DatalogError> {
    let mut envs: Vec<Env> = vec![Env::new()];
    for l in &r.body {
        let Literal::Pos(a) = l else { continue };
        if a.is_builtin() {
            continue;
        }
        let mut next = Vec::new();
        for env in &envs {
            for row in db.get(&a.pred).into_iter().flatten() {
                let mut e = env.clone();
                let ok = a.args.iter().zip(row).all(|(t, v)| match t {
                    Term::Const(c) => c == v,
                    Term::Var(x) => e.entry(x.clone()).or_insert_with(|| v.clone()) == v,
                });
                if ok {
                    next.push(e);
                }
            }
        }
        envs = next;
    }
    let get = |t: &Term, e: &Env| -> Option<Value> {
        match t {
            Term::Const(c) => Some(c.clone()),
            Term::Var(x) => e.get(x).cloned(),
        }
    };
    let mut out = Vec::new();
    'env: for mut e in envs {
        let mut pending: Vec<&Literal> = r
            .body
            .iter()
            .filter(|l| !matches!(l, Literal::Pos(a) if !a.is_builtin()))
            .collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut keep = Vec::new();
            for l in pending {
                let verdict: Option<bool> = match l {
                    Literal::Pos(a) | Literal::Neg(a) => {
                        let vals: Option<Vec<Value>> = a.args.iter().map(|t| get(t, &e)).collect();
                        match vals {
                            Some(vals) => {
                                let holds = if a.is_builtin() {
                                    call(b, &a.pred, &vals)
                                } else {
                                    db.get(&a.pred).is_some_and(|s| s.contains(&vals))
                                };
                                Some(holds == matches!(l, Literal::Pos(_)))
                            }
                            None if a.pred == "mf" && matches!(l, Literal::Pos(_)) => {
                                let ins: Option<Vec<Value>> = a.args[..3].iter().map(|t| get(t, &e)).collect();
                                match (ins, &a.args[3]) {
                                    (Some(ins), Term::Var(z)) => {
                                        match b.mf(ins[0].as_str(), &ins[1], &ins[2]) {
                                            Some(m) => {
                                                e.insert(z.clone(), m);
                                                Some(true)
                                            }
                                            None => Some(false),
                                        }
                                    }
                                    _ => None,
                                }
                            }
                            None => None,
                        }
                    }
                    Literal::Neq(x, y) => {
                        let xs: Option<Vec<Value>> = x.iter().map(|t| get(t, &e)).collect();
                        let ys: Option<Vec<Value>> = y.iter().map(|t| get(t, &e)).collect();
                        match (xs, ys) {
                            (Some(xs), Some(ys)) => Some(xs != ys),
                            _ => None,
                        }
                    }
                    Literal::Eq(x, y) => match (get(x, &e), get(y, &e)) {
                        (Some(u), Some(v)) => Some(u == v),
                        (Some(u), None) | (None, Some(u)) => {
                            let var = x.as_var().filter(|v| !e.contains_key(*v)).or(y.as_var()).expect("var");
                            e.insert(var.to_string(), u);
                            Some(true)
                        }
                        (None, None) => None,
                    },
                };
                match verdict {
                    Some(false) => continue 'env,
                    Some(true) => {}
                    None => keep.push(l),
                }
            }
            if keep.len() == before {
                return Err(DatalogError::UnboundBuiltin {
                    rule: r.to_string(),
                    literal: keep[0].to_string(),
                });
            }
            pending = keep;
        }
        out.push(e);
    }
    Ok(out)
}
