use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Value;
use crate::error::ModelError;

/// Rule-based similarity for a whole domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimBuiltin {
    /// Only identical values are similar.
    Exact,
    /// Values sharing at least one whitespace-separated token.
    TokenOverlap,
}

impl SimBuiltin {
    pub fn name(self) -> &'static str {
        match self {
            SimBuiltin::Exact => "exact",
            SimBuiltin::TokenOverlap => "token-overlap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" | "exact-equality" => Some(SimBuiltin::Exact),
            "token-overlap" => Some(SimBuiltin::TokenOverlap),
            _ => None,
        }
    }

    fn holds(self, a: &Value, b: &Value) -> bool {
        match self {
            SimBuiltin::Exact => a == b,
            SimBuiltin::TokenOverlap => {
                let ta: BTreeSet<&str> = a.tokens().into_iter().collect();
                b.tokens().iter().any(|t| ta.contains(t))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSimilarity {
    /// Declared pairs, stored with the smaller value first.
    pairs: BTreeSet<(Value, Value)>,
    builtin: Option<SimBuiltin>,
}

impl DomainSimilarity {
    pub fn pairs(&self) -> &BTreeSet<(Value, Value)> {
        &self.pairs
    }

    pub fn builtin(&self) -> Option<SimBuiltin> {
        self.builtin
    }

    fn holds(&self, a: &Value, b: &Value) -> bool {
        if a == b {
            return true;
        }
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.pairs.contains(&key) || self.builtin.is_some_and(|r| r.holds(a, b))
    }
}

/// Per-domain similarity relations. Reflexivity and symmetry are applied when
/// queried, never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityRelation {
    domains: BTreeMap<String, DomainSimilarity>,
}

impl SimilarityRelation {
    /// A relation knowing `domains`, each with only the reflexive pairs.
    pub fn new<I, S>(domains: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SimilarityRelation {
            domains: domains
                .into_iter()
                .map(|d| (d.into(), DomainSimilarity::default()))
                .collect(),
        }
    }

    pub fn add_domain(&mut self, domain: impl Into<String>) {
        self.domains.entry(domain.into()).or_default();
    }

    pub fn declare(&mut self, domain: &str, a: Value, b: Value) -> Result<(), ModelError> {
        let d = self
            .domains
            .get_mut(domain)
            .ok_or_else(|| ModelError::UnknownDomain(domain.to_string()))?;
        if a != b {
            d.pairs.insert(if a <= b { (a, b) } else { (b, a) });
        }
        Ok(())
    }

    pub fn set_builtin(&mut self, domain: &str, rule: SimBuiltin) -> Result<(), ModelError> {
        let d = self
            .domains
            .get_mut(domain)
            .ok_or_else(|| ModelError::UnknownDomain(domain.to_string()))?;
        d.builtin = Some(rule);
        Ok(())
    }

    pub fn domain(&self, domain: &str) -> Option<&DomainSimilarity> {
        self.domains.get(domain)
    }

    pub fn domains(&self) -> impl Iterator<Item = (&String, &DomainSimilarity)> {
        self.domains.iter()
    }

    pub fn similar(&self, domain: &str, a: &Value, b: &Value) -> Result<bool, ModelError> {
        self.domains
            .get(domain)
            .map(|d| d.holds(a, b))
            .ok_or_else(|| ModelError::UnknownDomain(domain.to_string()))
    }

    /// Like [`similar`](Self::similar), but a domain without an entry only
    /// relates equal values.
    pub fn holds(&self, domain: &str, a: &Value, b: &Value) -> bool {
        match self.domains.get(domain) {
            Some(d) => d.holds(a, b),
            None => a == b,
        }
    }

    /// Values mentioned by declared pairs, per domain.
    pub fn declared_values(&self) -> super::ActiveValues {
        self.domains
            .iter()
            .map(|(d, s)| {
                let vals = s
                    .pairs
                    .iter()
                    .flat_map(|(a, b)| [a.clone(), b.clone()])
                    .collect();
                (d.clone(), vals)
            })
            .collect()
    }
}
