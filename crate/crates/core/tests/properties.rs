mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;

use common::{random_case, random_program};
use mdclean::chase::{chase_all, chase_one, ChaseOptions};
use mdclean::classify::{classify, Verdict};
use mdclean::codegen::solve;
use mdclean::datalog::{evaluate, evaluate_naive, parse_program, FactBuiltins};
use mdclean::io::parse_schema;
use mdclean::md::parse_mds;
use mdclean::model::{ActiveValues, Instance, MatchingFunction, Schema, SimilarityRelation, Value};
use mdclean::query::{certain_answers, eval_cq, parse_queries};

fn name(mask: u8) -> Value {
    Value::new(format!("v{mask}"))
}

/// Joins of `masks` under union, declared pairwise; `v{mask}` names each value.
fn union_table(masks: &[u8]) -> MatchingFunction {
    let mut mf = MatchingFunction::new();
    for (i, &a) in masks.iter().enumerate() {
        for &b in &masks[i + 1..] {
            mf.declare("D", name(a), name(b), name(a | b));
        }
    }
    mf
}

fn active(masks: &[u8]) -> ActiveValues {
    BTreeMap::from([("D".to_string(), masks.iter().map(|&m| name(m)).collect())])
}

fn masks() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::btree_set(1u8..16, 2..5).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn saturation_is_sound_for_union(base in masks()) {
        // only the joins of base pairs are declared. Every join saturation
        // derives must agree with union; joins the laws leave open stay undefined
        let mf = union_table(&base).saturate(&active(&base)).unwrap();
        let named: BTreeSet<u8> = base
            .iter()
            .flat_map(|&a| base.iter().map(move |&b| a | b))
            .collect();
        for &x in &named {
            for &y in &named {
                if let Ok(j) = mf.match_values("D", &name(x), &name(y)) {
                    prop_assert_eq!(j, name(x | y));
                }
            }
        }
        for &a in &base {
            for &b in &base {
                prop_assert_eq!(mf.match_values("D", &name(a), &name(b)).ok(), Some(name(a | b)));
            }
        }
        let again = mf.saturate(&active(&base)).unwrap();
        prop_assert_eq!(again, mf);
    }

    #[test]
    fn semilattice_laws_where_defined(base in masks()) {
        let mf = union_table(&base).saturate(&active(&base)).unwrap();
        let vals: Vec<Value> = mf.closure("D", base.iter().map(|&m| name(m))).unwrap().into_iter().collect();
        let m = |a: &Value, b: &Value| mf.match_values("D", a, b).ok();
        for a in &vals {
            prop_assert_eq!(m(a, a), Some(a.clone()));
            for b in &vals {
                prop_assert_eq!(m(a, b), m(b, a));
                for c in &vals {
                    let l = m(a, b).and_then(|ab| m(&ab, c));
                    let r = m(b, c).and_then(|bc| m(a, &bc));
                    if let (Some(l), Some(r)) = (l, r) {
                        prop_assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn precedence_is_a_partial_order(base in masks()) {
        let mf = union_table(&base).saturate(&active(&base)).unwrap();
        let vals: Vec<Value> = mf.closure("D", base.iter().map(|&m| name(m))).unwrap().into_iter().collect();
        let le = |a: &Value, b: &Value| mf.precedes("D", a, b);
        for a in &vals {
            prop_assert!(le(a, a));
            for b in &vals {
                if a != b {
                    prop_assert!(!(le(a, b) && le(b, a)));
                }
                for c in &vals {
                    if le(a, b) && le(b, c) {
                        prop_assert!(le(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn inconsistent_join_rejected(base in masks(), wrong in 1u8..16) {
        let mut mf = union_table(&base);
        let (a, b) = (base[0], base[base.len() - 1]);
        prop_assume!(a != b && wrong != (a | b));
        mf.declare("D", name(b), name(a), name(wrong));
        prop_assert!(mf.saturate(&active(&base)).is_err());
    }

    #[test]
    fn similarity_symmetric_and_reflexive(pairs in prop::collection::vec((0u8..6, 0u8..6), 0..10)) {
        let mut sim = SimilarityRelation::new(["D"]);
        for (a, b) in &pairs {
            sim.declare("D", name(*a), name(*b)).unwrap();
        }
        for a in 0u8..6 {
            prop_assert!(sim.similar("D", &name(a), &name(a)).unwrap());
            for b in 0u8..6 {
                prop_assert_eq!(
                    sim.similar("D", &name(a), &name(b)).unwrap(),
                    sim.similar("D", &name(b), &name(a)).unwrap()
                );
            }
        }
    }

    #[test]
    fn dependencies_print_and_reparse(seed in any::<u64>()) {
        let case = random_case(seed);
        let p = &case.problem;
        let printed = p.mds.to_string();
        let back = parse_mds(&printed, &p.schema, None).unwrap();
        prop_assert_eq!(&back, &p.mds);
        prop_assert_eq!(back.to_string(), printed);
    }

    #[test]
    fn semi_naive_matches_naive(seed in any::<u64>()) {
        let text = random_program(seed);
        let prog = parse_program(&text).unwrap();
        let b = FactBuiltins::from_facts(&prog.facts);
        prop_assert_eq!(evaluate(&prog, &b).unwrap(), evaluate_naive(&prog, &b).unwrap());
    }
}

fn r_schema() -> Arc<Schema> {
    Arc::new(parse_schema("R(A, B)").unwrap())
}

fn instance(rows: &[(u8, u8)]) -> Instance {
    let mut d = Instance::new(r_schema());
    for (i, (a, b)) in rows.iter().enumerate() {
        d = d.with("R", &format!("t{i}"), &[&format!("a{a}"), &format!("b{b}")]).unwrap();
    }
    d
}

fn instances() -> impl Strategy<Value = Vec<Instance>> {
    prop::collection::vec(
        prop::collection::vec((0u8..3, 0u8..3), 0..5).prop_map(|r| instance(&r)),
        1..5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certain_answers_hold_everywhere(set in instances(), extra in instances()) {
        let sim = SimilarityRelation::new(["A", "B"]);
        let queries = parse_queries("q1(X) :- R(T, X, Y).\nq2(X, Y) :- R(T, X, Y), R(U, X2, Y), T != U.").unwrap();
        for q in &queries {
            let certain = certain_answers(&set, q, &sim, false).unwrap();
            for d in &set {
                let each = eval_cq(d, q, &sim).unwrap();
                prop_assert!(certain.is_subset(&each));
            }
            let mut more = set.clone();
            more.extend(extra.iter().cloned());
            let fewer = certain_answers(&more, q, &sim, false).unwrap();
            prop_assert!(fewer.is_subset(&certain));
        }
    }

    #[test]
    fn residual_program_equals_chase(seed in any::<u64>()) {
        let case = random_case(seed);
        let p = &case.problem;
        let c = classify(p);
        prop_assume!(c.verdict != Verdict::General);
        let all = chase_all(&p.instance, &p.mds, &p.sim, &p.mf, &ChaseOptions::default()).unwrap();
        prop_assert_eq!(all.len(), 1, "{}", case.text);
        let want = all.members[0].instance.rows();
        prop_assert_eq!(&solve(p, &c).unwrap().instance.rows(), &want, "{}", case.text);
        for s in [0, seed | 1] {
            let one = chase_one(&p.instance, &p.mds, &p.sim, &p.mf, s, 1000).unwrap();
            prop_assert_eq!(&one.instance.rows(), &want, "{}", case.text);
        }
    }
}

#[test]
fn certain_answers_of_one_instance_are_its_answers() {
    let sim = SimilarityRelation::new(["A", "B"]);
    let d = instance(&[(0, 1), (1, 1), (2, 0)]);
    let q = &parse_queries("q(Y) :- R(T, X, Y).").unwrap()[0];
    let want: BTreeSet<Vec<Value>> = ["b0", "b1"].iter().map(|v| vec![Value::new(v)]).collect();
    assert_eq!(certain_answers([&d], q, &sim, false).unwrap(), want);
    assert_eq!(eval_cq(&d, q, &sim).unwrap(), want);
}
