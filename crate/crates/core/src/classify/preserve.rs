use std::collections::BTreeSet;

use serde::Serialize;

use crate::md::MdSet;
use crate::model::{
    ActiveValues, AttrRef, MatchingFunction, MfBuiltin, Schema, SimBuiltin, SimilarityRelation,
    Value,
};

/// Largest value set scanned exhaustively for one domain.
const SCAN_LIMIT: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreservationFailure {
    /// `a ≈ a_prime` but not `a ≈ m(a_prime, a_second)`.
    Counterexample {
        domain: String,
        a: Value,
        a_prime: Value,
        a_second: Value,
        joined: Value,
    },
    /// A written attribute is compared by an equality join, which merging
    /// does not preserve.
    EqualityJoin { md: String, attribute: AttrRef },
    /// The closure of the active values is too large to scan.
    TooManyValues { domain: String, values: usize },
}

/// Checks that every matching function used on a right-hand side preserves
/// similarity over the active values closed under that function.
pub fn similarity_preservation(
    mds: &MdSet,
    schema: &Schema,
    sim: &SimilarityRelation,
    mf: &MatchingFunction,
    active: &ActiveValues,
) -> Result<(), PreservationFailure> {
    let written: BTreeSet<AttrRef> = mds.iter().flat_map(|m| m.arhs()).collect();
    for md in mds {
        for v in md.join_vars() {
            for (i, p) in md.occurrences(&v) {
                let rel = schema.relation(&md.atoms[i].relation).expect("validated");
                let attr = AttrRef::new(&rel.name, &rel.attributes[p].name);
                if written.contains(&attr) {
                    return Err(PreservationFailure::EqualityJoin {
                        md: md.name.clone(),
                        attribute: attr,
                    });
                }
            }
        }
    }
    let domains: BTreeSet<&str> = mds.iter().map(|m| m.rhs.domain.as_str()).collect();
    for d in domains {
        check_domain(d, sim, mf, active)?;
    }
    Ok(())
}

fn check_domain(
    domain: &str,
    sim: &SimilarityRelation,
    mf: &MatchingFunction,
    active: &ActiveValues,
) -> Result<(), PreservationFailure> {
    let ds = sim.domain(domain);
    let declared_pairs = ds.map_or(0, |s| s.pairs().len());
    // token overlap survives token union: a shares a token with a', hence with a' ∪ a''
    if declared_pairs == 0
        && ds.and_then(|s| s.builtin()) == Some(SimBuiltin::TokenOverlap)
        && mf.domain(domain).and_then(|m| m.builtin()) == Some(MfBuiltin::TokenUnion)
    {
        return Ok(());
    }
    let seeds = active.get(domain).cloned().unwrap_or_default();
    let too_many = |n| PreservationFailure::TooManyValues {
        domain: domain.to_string(),
        values: n,
    };
    let values: Vec<Value> = mf
        .closure(domain, seeds)
        .map_err(|_| too_many(crate::model::CLOSURE_LIMIT))?
        .into_iter()
        .collect();
    if values.len() > SCAN_LIMIT {
        return Err(too_many(values.len()));
    }
    // distinct similar pairs first, so reported witnesses are informative
    for reflexive in [false, true] {
        for a in &values {
            for a1 in &values {
                if (a == a1) != reflexive || !sim.holds(domain, a, a1) {
                    continue;
                }
                for a2 in &values {
                    let Ok(j) = mf.match_values(domain, a1, a2) else {
                        continue;
                    };
                    if !sim.holds(domain, a, &j) {
                        return Err(PreservationFailure::Counterexample {
                            domain: domain.to_string(),
                            a: a.clone(),
                            a_prime: a1.clone(),
                            a_second: a2.clone(),
                            joined: j,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::example2;

    #[test]
    fn example2_not_preserving() {
        let p = example2();
        let err = similarity_preservation(&p.mds, &p.schema, &p.sim, &p.mf, &p.active_values())
            .unwrap_err();
        let PreservationFailure::Counterexample {
            domain,
            a,
            a_prime,
            a_second,
            joined,
        } = err
        else {
            panic!("expected a counterexample, got {err:?}");
        };
        assert_eq!(domain, "B");
        assert!(p.sim.holds("B", &a, &a_prime));
        assert_eq!(p.mf.match_values("B", &a_prime, &a_second).unwrap(), joined);
        assert!(!p.sim.holds("B", &a, &joined));
    }

    #[test]
    fn token_builtins_preserve() {
        let mut p = example2();
        p.sim = SimilarityRelation::new(["A", "B"]);
        p.sim.set_builtin("B", SimBuiltin::TokenOverlap).unwrap();
        let mut mf = MatchingFunction::new();
        mf.set_builtin("B", MfBuiltin::TokenUnion);
        p.mf = mf.saturate(&Default::default()).unwrap();
        assert_eq!(
            similarity_preservation(&p.mds, &p.schema, &p.sim, &p.mf, &p.active_values()),
            Ok(())
        );
    }

    #[test]
    fn everything_similar_preserves() {
        // with the empty similarity only reflexive pairs remain, and
        // a ≈ m(a, a'') fails; an all-similar domain passes vacuously
        let mut p = example2();
        let values = ["b1", "b2", "b3", "b4", "b12", "b23", "b34", "b123"];
        p.sim = SimilarityRelation::new(["A", "B"]);
        for x in values {
            for y in values {
                p.sim.declare("B", x.into(), y.into()).unwrap();
            }
        }
        assert_eq!(
            similarity_preservation(&p.mds, &p.schema, &p.sim, &p.mf, &p.active_values()),
            Ok(())
        );
    }
}
