use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Instance, Schema, Tid, Value};

/// Anything that can list identified tuples per relation. A tid may appear
/// more than once when a source holds several versions of a tuple.
pub trait TupleSource {
    fn schema(&self) -> &Schema;
    fn scan<'a>(&'a self, relation: &str) -> Box<dyn Iterator<Item = (&'a Tid, &'a [Value])> + 'a>;
}

impl TupleSource for Instance {
    fn schema(&self) -> &Schema {
        Instance::schema(self)
    }

    fn scan<'a>(&'a self, relation: &str) -> Box<dyn Iterator<Item = (&'a Tid, &'a [Value])> + 'a> {
        Box::new(self.tuples(relation).map(|(t, v)| (t, v.as_slice())))
    }
}

/// Every version of every tuple, as a flat set of `(tid, values)` per relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VersionSet {
    schema: Arc<Schema>,
    relations: BTreeMap<String, BTreeSet<(Tid, Vec<Value>)>>,
}

impl VersionSet {
    pub fn new(schema: Arc<Schema>) -> Self {
        let relations = schema
            .relations()
            .iter()
            .map(|r| (r.name.clone(), BTreeSet::new()))
            .collect();
        VersionSet { schema, relations }
    }

    /// The current versions of `d`.
    pub fn from_instance(d: &Instance) -> Self {
        let mut out = VersionSet::new(d.schema().clone());
        for (r, t, v) in d.iter() {
            out.insert(r, t.clone(), v.clone());
        }
        out
    }

    /// Returns whether the version is new.
    pub fn insert(&mut self, relation: &str, tid: Tid, values: Vec<Value>) -> bool {
        self.relations
            .get_mut(relation)
            .expect("relation of the schema")
            .insert((tid, values))
    }

    pub fn contains(&self, relation: &str, tid: &Tid, values: &[Value]) -> bool {
        self.relations
            .get(relation)
            .is_some_and(|s| s.contains(&(tid.clone(), values.to_vec())))
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tid, &Vec<Value>)> {
        self.relations
            .iter()
            .flat_map(|(r, s)| s.iter().map(move |(t, v)| (r.as_str(), t, v)))
    }
}

impl TupleSource for VersionSet {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn scan<'a>(&'a self, relation: &str) -> Box<dyn Iterator<Item = (&'a Tid, &'a [Value])> + 'a> {
        Box::new(
            self.relations
                .get(relation)
                .into_iter()
                .flat_map(|s| s.iter().map(|(t, v)| (t, v.as_slice()))),
        )
    }
}
