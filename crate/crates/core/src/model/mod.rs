//! Relational data model: schemas, identified tuples, instances, similarity
//! relations and matching functions.

mod instance;
mod matching;
mod similarity;
mod source;

pub use instance::Instance;
pub use matching::{
    saturate_mf, DomainMatch, MatchingFunction, MfBuiltin, CLOSURE_LIMIT,
};
pub use similarity::{DomainSimilarity, SimBuiltin, SimilarityRelation};
pub use source::{TupleSource, VersionSet};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// An opaque attribute value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(Arc<str>);

impl Value {
    pub fn new(s: impl AsRef<str>) -> Self {
        Value(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whitespace-separated tokens, sorted and deduplicated.
    pub fn tokens(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.0.split_whitespace().collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Canonical token-set spelling of this value.
    pub fn canonical_tokens(&self) -> Value {
        Value::new(self.tokens().join(" "))
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::new(s)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value(Arc::from(s))
    }
}

/// A tuple identifier, unique across an instance.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tid(Arc<str>);

impl Tid {
    pub fn new(s: impl AsRef<str>) -> Self {
        Tid(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Tid {
    fn from(s: &str) -> Self {
        Tid::new(s)
    }
}

/// A relation-qualified attribute, written `R[A]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttrRef {
    pub relation: String,
    pub attribute: String,
}

impl AttrRef {
    pub fn new(relation: impl Into<String>, attribute: impl Into<String>) -> Self {
        AttrRef {
            relation: relation.into(),
            attribute: attribute.into(),
        }
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.relation, self.attribute)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub domain: String,
}

/// One relation. The tuple-identifier column is implicit and always comes first;
/// `attributes` lists the ordinary columns in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSchema {
    pub name: String,
    pub attributes: Vec<Attribute>,
}

impl RelationSchema {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn position(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == attribute)
    }

    pub fn domain_of(&self, pos: usize) -> &str {
        &self.attributes[pos].domain
    }
}

/// Name of the implicit tuple-identifier attribute.
pub const TID_ATTRIBUTE: &str = "tid";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    relations: Vec<RelationSchema>,
}

impl Schema {
    pub fn new(relations: Vec<RelationSchema>) -> Result<Self, ModelError> {
        let mut schema = Schema::default();
        for r in relations {
            schema.add_relation(r)?;
        }
        Ok(schema)
    }

    pub fn add_relation(&mut self, rel: RelationSchema) -> Result<(), ModelError> {
        if self.relation(&rel.name).is_some() {
            return Err(ModelError::InvalidSchema(format!(
                "relation `{}` declared twice",
                rel.name
            )));
        }
        let lowered = rel.name.to_lowercase();
        if self
            .relations
            .iter()
            .any(|r| r.name.to_lowercase() == lowered)
        {
            return Err(ModelError::InvalidSchema(format!(
                "relation `{}` differs from an existing relation only by case",
                rel.name
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &rel.attributes {
            if a.name == TID_ATTRIBUTE {
                return Err(ModelError::InvalidSchema(format!(
                    "relation `{}`: attribute name `{}` is reserved for tuple identifiers",
                    rel.name, TID_ATTRIBUTE
                )));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(ModelError::InvalidSchema(format!(
                    "relation `{}`: attribute `{}` declared twice",
                    rel.name, a.name
                )));
            }
        }
        self.relations.push(rel);
        Ok(())
    }

    pub fn relations(&self) -> &[RelationSchema] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&RelationSchema> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&RelationSchema, ModelError> {
        self.relation(name)
            .ok_or_else(|| ModelError::UnknownRelation(name.to_string()))
    }

    pub fn domain_of(&self, attr: &AttrRef) -> Option<&str> {
        let rel = self.relation(&attr.relation)?;
        rel.position(&attr.attribute).map(|p| rel.domain_of(p))
    }

    /// Every domain name mentioned by some attribute, sorted.
    pub fn domains(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .relations
            .iter()
            .flat_map(|r| r.attributes.iter().map(|a| a.domain.clone()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Attributes (as `R[A]`) ranging over `domain`.
    pub fn attributes_in_domain(&self, domain: &str) -> Vec<AttrRef> {
        self.relations
            .iter()
            .flat_map(|r| {
                r.attributes
                    .iter()
                    .filter(|a| a.domain == domain)
                    .map(|a| AttrRef::new(&r.name, &a.name))
            })
            .collect()
    }
}

/// Values per domain, used wherever a finite "active domain" is needed.
pub type ActiveValues = BTreeMap<String, std::collections::BTreeSet<Value>>;
