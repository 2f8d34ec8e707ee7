use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{ActiveValues, Value};
use crate::error::ModelError;

/// Upper bound on the number of values a domain closure may reach.
pub const CLOSURE_LIMIT: usize = 4096;

/// Rule-based matching functions. All three are semilattice joins by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MfBuiltin {
    /// Union of whitespace-separated token sets.
    TokenUnion,
    /// The smaller value (numeric when both parse as numbers).
    ValueMin,
    /// The larger value (numeric when both parse as numbers).
    ValueMax,
}

impl MfBuiltin {
    pub fn name(self) -> &'static str {
        match self {
            MfBuiltin::TokenUnion => "token-union",
            MfBuiltin::ValueMin => "value-min",
            MfBuiltin::ValueMax => "value-max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "token-union" => Some(MfBuiltin::TokenUnion),
            "value-min" | "min" => Some(MfBuiltin::ValueMin),
            "value-max" | "max" => Some(MfBuiltin::ValueMax),
            _ => None,
        }
    }

    fn apply(self, a: &Value, b: &Value) -> Value {
        match self {
            MfBuiltin::TokenUnion => {
                let mut t: Vec<&str> = a.tokens();
                t.extend(b.tokens());
                t.sort_unstable();
                t.dedup();
                Value::new(t.join(" "))
            }
            MfBuiltin::ValueMin => {
                if value_cmp(a, b).is_le() {
                    a.clone()
                } else {
                    b.clone()
                }
            }
            MfBuiltin::ValueMax => {
                if value_cmp(a, b).is_ge() {
                    a.clone()
                } else {
                    b.clone()
                }
            }
        }
    }
}

fn value_cmp(a: &Value, b: &Value) -> std::cmp::Ordering {
    match (a.as_str().parse::<f64>(), b.as_str().parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
            x.partial_cmp(&y).unwrap().then_with(|| a.cmp(b))
        }
        _ => a.cmp(b),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainMatch {
    declared: BTreeSet<(Value, Value, Value)>,
    builtin: Option<MfBuiltin>,
    /// Join table keyed by ordered pairs. Holds the declared triples until
    /// saturation, then the full closure.
    #[serde(skip)]
    table: BTreeMap<(Value, Value), Value>,
}

impl DomainMatch {
    pub fn declared(&self) -> &BTreeSet<(Value, Value, Value)> {
        &self.declared
    }

    pub fn builtin(&self) -> Option<MfBuiltin> {
        self.builtin
    }

    fn lookup(&self, a: &Value, b: &Value) -> Option<Value> {
        if let Some(rule) = self.builtin {
            return Some(rule.apply(a, b));
        }
        if a == b {
            return Some(a.clone());
        }
        self.table.get(&(a.clone(), b.clone())).cloned()
    }

    /// Number of entries in the explicit join table (zero for built-ins).
    pub fn table_len(&self) -> usize {
        self.table.len()
    }
}

/// Matching functions for every domain that has one.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingFunction {
    domains: BTreeMap<String, DomainMatch>,
    saturated: bool,
}

impl MatchingFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, domain: &str, a: Value, b: Value, result: Value) {
        let d = self.domains.entry(domain.to_string()).or_default();
        d.table.entry((a.clone(), b.clone())).or_insert(result.clone());
        d.declared.insert((a, b, result));
        self.saturated = false;
    }

    pub fn set_builtin(&mut self, domain: &str, rule: MfBuiltin) {
        self.domains.entry(domain.to_string()).or_default().builtin = Some(rule);
        self.saturated = false;
    }

    pub fn has_mf(&self, domain: &str) -> bool {
        self.domains.contains_key(domain)
    }

    pub fn domain(&self, domain: &str) -> Option<&DomainMatch> {
        self.domains.get(domain)
    }

    pub fn domains(&self) -> impl Iterator<Item = (&String, &DomainMatch)> {
        self.domains.iter()
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Values mentioned by declared triples, per domain.
    pub fn declared_values(&self) -> ActiveValues {
        self.domains
            .iter()
            .map(|(d, m)| {
                let vals = m
                    .declared
                    .iter()
                    .flat_map(|(a, b, c)| [a.clone(), b.clone(), c.clone()])
                    .collect();
                (d.clone(), vals)
            })
            .collect()
    }

    /// `m(a, b)` for `domain`.
    pub fn match_values(&self, domain: &str, a: &Value, b: &Value) -> Result<Value, ModelError> {
        let d = self
            .domains
            .get(domain)
            .ok_or_else(|| ModelError::UnknownDomain(domain.to_string()))?;
        d.lookup(a, b).ok_or_else(|| ModelError::UndefinedMatch {
            domain: domain.to_string(),
            left: a.clone(),
            right: b.clone(),
        })
    }

    /// `a ⪯ b` iff `m(a, b) = b`; plain equality for domains without a matching function.
    pub fn precedes(&self, domain: &str, a: &Value, b: &Value) -> bool {
        match self.domains.get(domain) {
            None => a == b,
            Some(d) => d.lookup(a, b).as_ref() == Some(b),
        }
    }

    /// Attribute-wise [`precedes`](Self::precedes); `domains[i]` is the domain of position `i`.
    pub fn tuple_precedes<S: AsRef<str>>(&self, domains: &[S], a: &[Value], b: &[Value]) -> bool {
        debug_assert_eq!(a.len(), b.len());
        domains
            .iter()
            .zip(a.iter().zip(b))
            .all(|(d, (x, y))| self.precedes(d.as_ref(), x, y))
    }

    /// Closes `seeds` under the matching function of `domain`, skipping
    /// undefined pairs. Fails once the closure exceeds [`CLOSURE_LIMIT`].
    pub fn closure(
        &self,
        domain: &str,
        seeds: impl IntoIterator<Item = Value>,
    ) -> Result<BTreeSet<Value>, ModelError> {
        let mut all: BTreeSet<Value> = seeds.into_iter().collect();
        let Some(d) = self.domains.get(domain) else {
            return Ok(all);
        };
        let mut frontier: Vec<Value> = all.iter().cloned().collect();
        while let Some(v) = frontier.pop() {
            let snapshot: Vec<Value> = all.iter().cloned().collect();
            for w in snapshot {
                if let Some(j) = d.lookup(&v, &w) {
                    if all.insert(j.clone()) {
                        if all.len() > CLOSURE_LIMIT {
                            return Err(ModelError::ClosureTooLarge {
                                domain: domain.to_string(),
                                limit: CLOSURE_LIMIT,
                            });
                        }
                        frontier.push(j);
                    }
                }
            }
        }
        Ok(all)
    }

    /// Every defined triple `m(a, b) = c` with `a, b` drawn from `values`.
    pub fn triples_over(&self, domain: &str, values: &BTreeSet<Value>) -> Vec<(Value, Value, Value)> {
        let Some(d) = self.domains.get(domain) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for a in values {
            for b in values {
                if let Some(c) = d.lookup(a, b) {
                    out.push((a.clone(), b.clone(), c));
                }
            }
        }
        out
    }

    /// See [`saturate_mf`].
    pub fn saturate(&self, active: &ActiveValues) -> Result<MatchingFunction, ModelError> {
        saturate_mf(self, active)
    }
}

/// Closes the declared triples of every domain under idempotence,
/// commutativity and associativity.
///
/// Each value `v` is represented by the smallest set of values that contains
/// `v`, is downward closed (`x, y ⪯ m(x, y)`) and is closed under the declared
/// joins. The join of two values is the closure of the union of their sets; it
/// is recorded only when that set is the representation of a named value.
/// Two distinct values with the same representation are forced equal by the
/// laws, which is reported as a [`ModelError::SemilatticeViolation`].
pub fn saturate_mf(
    mf: &MatchingFunction,
    active: &ActiveValues,
) -> Result<MatchingFunction, ModelError> {
    let mut out = mf.clone();
    for (domain, dm) in out.domains.iter_mut() {
        check_functional(domain, dm)?;
        if let Some(rule) = dm.builtin {
            for (a, b, c) in &dm.declared {
                if rule.apply(a, b) != *c {
                    return Err(ModelError::SemilatticeViolation {
                        domain: domain.clone(),
                        detail: format!(
                            "declared m({a}, {b}) = {c} contradicts built-in {}",
                            rule.name()
                        ),
                    });
                }
            }
            dm.table.clear();
            continue;
        }
        let extra = active.get(domain.as_str()).cloned().unwrap_or_default();
        dm.table = saturate_domain(domain, &dm.declared, extra)?;
    }
    out.saturated = true;
    Ok(out)
}

fn check_functional(domain: &str, dm: &DomainMatch) -> Result<(), ModelError> {
    let mut seen: HashMap<(Value, Value), Value> = HashMap::new();
    for (a, b, c) in &dm.declared {
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        if let Some(prev) = seen.insert(key, c.clone()) {
            if prev != *c {
                return Err(ModelError::SemilatticeViolation {
                    domain: domain.to_string(),
                    detail: format!("m({a}, {b}) is declared as both {prev} and {c}"),
                });
            }
        }
    }
    Ok(())
}

fn saturate_domain(
    domain: &str,
    declared: &BTreeSet<(Value, Value, Value)>,
    extra: BTreeSet<Value>,
) -> Result<BTreeMap<(Value, Value), Value>, ModelError> {
    let mut names: BTreeSet<Value> = extra;
    for (a, b, c) in declared {
        names.insert(a.clone());
        names.insert(b.clone());
        names.insert(c.clone());
    }
    let names: Vec<Value> = names.into_iter().collect();
    let index: HashMap<&Value, usize> = names.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let triples: Vec<(usize, usize, usize)> = declared
        .iter()
        .map(|(a, b, c)| (index[a], index[b], index[c]))
        .collect();
    let n = names.len();

    let close = |mut set: Vec<bool>| -> Vec<bool> {
        loop {
            let mut changed = false;
            for &(x, y, r) in &triples {
                if set[x] && set[y] && !set[r] {
                    set[r] = true;
                    changed = true;
                }
                if set[r] && !(set[x] && set[y]) {
                    set[x] = true;
                    set[y] = true;
                    changed = true;
                }
            }
            if !changed {
                return set;
            }
        }
    };

    let mut reps: Vec<Vec<bool>> = Vec::with_capacity(n);
    let mut by_rep: HashMap<Vec<bool>, usize> = HashMap::new();
    for i in 0..n {
        let mut s = vec![false; n];
        s[i] = true;
        let rep = close(s);
        if let Some(&j) = by_rep.get(&rep) {
            return Err(ModelError::SemilatticeViolation {
                domain: domain.to_string(),
                detail: format!(
                    "the laws force {} and {} to be the same value",
                    names[j], names[i]
                ),
            });
        }
        by_rep.insert(rep.clone(), i);
        reps.push(rep);
    }

    let mut table = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let union: Vec<bool> = reps[i].iter().zip(&reps[j]).map(|(a, b)| *a || *b).collect();
            let joined = close(union);
            if let Some(&k) = by_rep.get(&joined) {
                table.insert((names[i].clone(), names[j].clone()), names[k].clone());
                table.insert((names[j].clone(), names[i].clone()), names[k].clone());
            }
        }
    }
    Ok(table)
}
