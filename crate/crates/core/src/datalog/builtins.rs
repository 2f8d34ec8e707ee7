use std::collections::{BTreeMap, BTreeSet};

use super::{Atom, Term};
use crate::model::{MatchingFunction, SimilarityRelation, Value};

/// Interpretation of `sim`, `mf` and `pre`. Domains are passed as constants.
pub trait Builtins {
    fn sim(&self, domain: &str, a: &Value, b: &Value) -> bool;
    /// The merge of `a` and `b`, if defined.
    fn mf(&self, domain: &str, a: &Value, b: &Value) -> Option<Value>;
    fn pre(&self, domain: &str, a: &Value, b: &Value) -> bool;
}

/// Built-ins answered from the in-memory similarity relation and matching
/// function.
pub struct CoreBuiltins<'a> {
    pub sim: &'a SimilarityRelation,
    pub mf: &'a MatchingFunction,
}

impl Builtins for CoreBuiltins<'_> {
    fn sim(&self, domain: &str, a: &Value, b: &Value) -> bool {
        self.sim.holds(domain, a, b)
    }

    fn mf(&self, domain: &str, a: &Value, b: &Value) -> Option<Value> {
        self.mf.match_values(domain, a, b).ok()
    }

    fn pre(&self, domain: &str, a: &Value, b: &Value) -> bool {
        self.mf.precedes(domain, a, b)
    }
}

/// Built-ins read from `sim/3` and `mf/4` facts. Similarity is closed under
/// reflexivity and symmetry, merges under commutativity; `pre` is equality on
/// domains without `mf` facts.
#[derive(Clone, Debug, Default)]
pub struct FactBuiltins {
    sim: BTreeSet<(String, Value, Value)>,
    mf: BTreeMap<(String, Value, Value), Value>,
    mf_domains: BTreeSet<String>,
}

impl FactBuiltins {
    pub fn from_facts<'a>(facts: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut out = FactBuiltins::default();
        for f in facts {
            let vals: Vec<&Value> = f
                .args
                .iter()
                .filter_map(|t| match t {
                    Term::Const(v) => Some(v),
                    Term::Var(_) => None,
                })
                .collect();
            match (f.pred.as_str(), vals.as_slice()) {
                ("sim", [d, a, b]) => {
                    out.sim.insert((d.to_string(), (*a).clone(), (*b).clone()));
                    out.sim.insert((d.to_string(), (*b).clone(), (*a).clone()));
                }
                ("mf", [d, a, b, c]) => {
                    out.mf.insert((d.to_string(), (*a).clone(), (*b).clone()), (*c).clone());
                    out.mf.insert((d.to_string(), (*b).clone(), (*a).clone()), (*c).clone());
                    out.mf_domains.insert(d.to_string());
                }
                _ => {}
            }
        }
        out
    }
}

impl Builtins for FactBuiltins {
    fn sim(&self, domain: &str, a: &Value, b: &Value) -> bool {
        a == b || self.sim.contains(&(domain.to_string(), a.clone(), b.clone()))
    }

    fn mf(&self, domain: &str, a: &Value, b: &Value) -> Option<Value> {
        if a == b {
            return Some(a.clone());
        }
        self.mf.get(&(domain.to_string(), a.clone(), b.clone())).cloned()
    }

    fn pre(&self, domain: &str, a: &Value, b: &Value) -> bool {
        if !self.mf_domains.contains(domain) {
            return a == b;
        }
        self.mf(domain, a, b).as_ref() == Some(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    #[test]
    fn fact_tables() {
        let p = parse_program(r#"sim("B", b2, b3). mf("B", b1, b2, b12). mf("B", b1, b12, b12)."#).unwrap();
        let b = FactBuiltins::from_facts(&p.facts);
        let v = |s: &str| Value::new(s);
        assert!(b.sim("B", &v("b3"), &v("b2")));
        assert!(b.sim("B", &v("b9"), &v("b9")));
        assert!(!b.sim("B", &v("b1"), &v("b2")));
        assert_eq!(b.mf("B", &v("b2"), &v("b1")), Some(v("b12")));
        assert!(b.pre("B", &v("b1"), &v("b12")));
        assert!(!b.pre("B", &v("b12"), &v("b1")));
        assert!(b.pre("A", &v("a1"), &v("a1")));
        assert!(!b.pre("A", &v("a1"), &v("a2")));
    }
}
