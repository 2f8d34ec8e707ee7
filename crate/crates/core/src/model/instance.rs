use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use super::{Schema, Tid, Value, TID_ATTRIBUTE};
use crate::error::ModelError;

/// A database instance: the current version of every identified tuple, plus
/// the history of every version each tuple has held.
///
/// Equality and ordering only look at current versions; two instances that
/// reached the same values by different routes compare equal.
#[derive(Clone, Debug)]
pub struct Instance {
    schema: Arc<Schema>,
    relations: BTreeMap<String, BTreeMap<Tid, Vec<Value>>>,
    owner: BTreeMap<Tid, String>,
    history: BTreeMap<Tid, BTreeSet<Vec<Value>>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.relations == other.relations
    }
}

impl Eq for Instance {}

impl PartialOrd for Instance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Instance {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.relations.cmp(&other.relations)
    }
}

impl std::hash::Hash for Instance {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.relations.hash(state);
    }
}

impl Instance {
    pub fn new(schema: Arc<Schema>) -> Self {
        let relations = schema
            .relations()
            .iter()
            .map(|r| (r.name.clone(), BTreeMap::new()))
            .collect();
        Instance {
            schema,
            relations,
            owner: BTreeMap::new(),
            history: BTreeMap::new(),
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn insert(
        &mut self,
        relation: &str,
        tid: Tid,
        values: Vec<Value>,
    ) -> Result<(), ModelError> {
        let rel = self.schema.require(relation)?;
        if values.len() != rel.arity() {
            return Err(ModelError::ArityMismatch {
                relation: relation.to_string(),
                expected: rel.arity(),
                found: values.len(),
            });
        }
        if self.owner.contains_key(&tid) {
            return Err(ModelError::DuplicateTid(tid));
        }
        self.owner.insert(tid.clone(), relation.to_string());
        self.history
            .entry(tid.clone())
            .or_default()
            .insert(values.clone());
        self.relations
            .get_mut(relation)
            .expect("relation registered at construction")
            .insert(tid, values);
        Ok(())
    }

    /// Builder-style insert for literals in tests and fixtures.
    pub fn with(mut self, relation: &str, tid: &str, values: &[&str]) -> Result<Self, ModelError> {
        self.insert(
            relation,
            Tid::new(tid),
            values.iter().map(Value::new).collect(),
        )?;
        Ok(self)
    }

    pub fn relation_of(&self, tid: &Tid) -> Option<&str> {
        self.owner.get(tid).map(String::as_str)
    }

    pub fn get(&self, tid: &Tid) -> Option<&[Value]> {
        let rel = self.owner.get(tid)?;
        self.relations[rel].get(tid).map(Vec::as_slice)
    }

    pub fn tuples(&self, relation: &str) -> impl Iterator<Item = (&Tid, &Vec<Value>)> {
        self.relations.get(relation).into_iter().flat_map(|m| m.iter())
    }

    /// All `(relation, tid, values)` triples in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tid, &Vec<Value>)> {
        self.relations
            .iter()
            .flat_map(|(r, m)| m.iter().map(move |(t, v)| (r.as_str(), t, v)))
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    /// Overwrites one attribute of the current version of `tid`, recording the
    /// new version in the history.
    pub fn set_value(&mut self, tid: &Tid, pos: usize, value: Value) -> Result<(), ModelError> {
        let rel = self
            .owner
            .get(tid)
            .ok_or_else(|| ModelError::UnknownTid(tid.clone()))?;
        let current = self
            .relations
            .get_mut(rel)
            .and_then(|m| m.get_mut(tid))
            .ok_or_else(|| ModelError::UnknownTid(tid.clone()))?;
        current[pos] = value;
        self.history
            .entry(tid.clone())
            .or_default()
            .insert(current.clone());
        Ok(())
    }

    /// Every version `tid` has held, including the current one.
    pub fn versions(&self, tid: &Tid) -> Option<&BTreeSet<Vec<Value>>> {
        self.history.get(tid)
    }

    /// Values per domain occurring in current tuples.
    pub fn active_values(&self) -> super::ActiveValues {
        let mut out = super::ActiveValues::new();
        for rel in self.schema.relations() {
            for vals in self.relations[&rel.name].values() {
                for (attr, v) in rel.attributes.iter().zip(vals) {
                    out.entry(attr.domain.clone()).or_default().insert(v.clone());
                }
            }
        }
        out
    }

    /// Current versions as `(relation, tid, values)` rows; handy for set comparisons.
    pub fn rows(&self) -> BTreeSet<(String, Tid, Vec<Value>)> {
        self.iter()
            .map(|(r, t, v)| (r.to_string(), t.clone(), v.clone()))
            .collect()
    }

    /// Drops version history; the result holds only current values.
    pub fn forget_history(&self) -> Instance {
        let mut out = self.clone();
        out.history = out
            .owner
            .keys()
            .map(|t| {
                let cur = self.get(t).expect("owned tid").to_vec();
                (t.clone(), BTreeSet::from([cur]))
            })
            .collect();
        out
    }
}

/// Serialises as `{relation: [{tid, attr: value, ...}]}`, the same shape the
/// JSON loader accepts.
impl Serialize for Instance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.relations.len()))?;
        for rel in self.schema.relations() {
            let rows: Vec<serde_json::Map<String, serde_json::Value>> = self.relations[&rel.name]
                .iter()
                .map(|(tid, vals)| {
                    let mut row = serde_json::Map::new();
                    row.insert(TID_ATTRIBUTE.into(), tid.as_str().into());
                    for (a, v) in rel.attributes.iter().zip(vals) {
                        row.insert(a.name.clone(), v.as_str().into());
                    }
                    row
                })
                .collect();
            map.serialize_entry(&rel.name, &rows)?;
        }
        map.end()
    }
}
