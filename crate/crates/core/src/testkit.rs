//! Hand-built inputs shared by unit tests.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::md::parse_mds;
use crate::model::{
    Attribute, Instance, MatchingFunction, RelationSchema, Schema, SimilarityRelation, Tid, Value,
};
use crate::problem::Problem;

pub(crate) const EXAMPLE2_MDS: &str = "
md phi1: R(t1; x1, y1), R(t2; x2, y2), x1 ~ x2 -> y1 := y2;
md phi2: R(t1; x1, y1), R(t2; x2, y2), y1 ~ y2 -> y1 := y2;
";

pub(crate) fn r_schema() -> Arc<Schema> {
    let attr = |n: &str| Attribute {
        name: n.into(),
        domain: n.into(),
    };
    Arc::new(
        Schema::new(vec![RelationSchema {
            name: "R".into(),
            attributes: vec![attr("A"), attr("B")],
        }])
        .unwrap(),
    )
}

pub(crate) fn example_mf() -> MatchingFunction {
    let mut mf = MatchingFunction::new();
    for (a, b, c) in [
        ("b1", "b2", "b12"),
        ("b2", "b3", "b23"),
        ("b1", "b23", "b123"),
        ("b3", "b4", "b34"),
    ] {
        mf.declare("B", a.into(), b.into(), c.into());
    }
    mf
}

pub(crate) fn r_instance(rows: &[(&str, &str, &str)]) -> Instance {
    let mut d = Instance::new(r_schema());
    for (t, a, b) in rows {
        d = d.with("R", t, &[a, b]).unwrap();
    }
    d
}

pub(crate) fn example2() -> Problem {
    let schema = r_schema();
    let mds = parse_mds(EXAMPLE2_MDS, &schema, None).unwrap();
    let mut sim = SimilarityRelation::new(["A", "B"]);
    sim.declare("A", "a1".into(), "a2".into()).unwrap();
    sim.declare("B", "b2".into(), "b3".into()).unwrap();
    let d = r_instance(&[("t1", "a1", "b1"), ("t2", "a2", "b2"), ("t3", "a3", "b3")]);
    Problem::new(mds, sim, example_mf(), d).unwrap()
}

pub(crate) fn example4() -> Problem {
    let schema = r_schema();
    let mds = parse_mds(EXAMPLE2_MDS, &schema, None).unwrap();
    let mut sim = SimilarityRelation::new(["A", "B"]);
    sim.declare("A", "a1".into(), "a2".into()).unwrap();
    sim.declare("B", "b3".into(), "b4".into()).unwrap();
    let d = r_instance(&[
        ("t1", "a1", "b1"),
        ("t2", "a2", "b2"),
        ("t3", "a3", "b3"),
        ("t4", "a4", "b4"),
    ]);
    Problem::new(mds, sim, example_mf(), d).unwrap()
}

pub(crate) fn rows(list: &[(&str, &str, &str)]) -> BTreeSet<(String, Tid, Vec<Value>)> {
    list.iter()
        .map(|(t, a, b)| ("R".to_string(), Tid::new(t), vec![Value::new(a), Value::new(b)]))
        .collect()
}
