//! Membership in the single-clean-instance classes: non-interacting sets,
//! similarity-preserving matching functions, and SFAI combinations.

mod preserve;
mod reach;
mod sfai;

pub use preserve::{similarity_preservation, PreservationFailure};
pub use reach::{reachable_interference, reachable_versions, Interference, DEFAULT_VERSION_LIMIT};
pub use sfai::{is_sfai, sfai_queries, QueryOutcome, SfaiQuery, SfaiReport};

use std::fmt;

use serde::Serialize;

use crate::md::MdSet;
use crate::model::{AttrRef, Schema};
use crate::problem::Problem;

/// `md1` writes `attribute` and `md2` reads it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct InteractionPair {
    pub md1: String,
    pub md2: String,
    pub attribute: AttrRef,
}

/// Ordered pairs (a dependency may pair with itself) with
/// `ARHS(md1) ∩ ALHS(md2)` nonempty, one entry per shared attribute.
pub fn interaction_pairs(mds: &MdSet, schema: &Schema) -> Vec<InteractionPair> {
    let mut out = Vec::new();
    for m1 in mds {
        let written = m1.arhs();
        for m2 in mds {
            for attr in written.intersection(&m2.alhs(schema)) {
                out.push(InteractionPair {
                    md1: m1.name.clone(),
                    md2: m2.name.clone(),
                    attribute: attr.clone(),
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    NonInteracting,
    SimilarityPreserving,
    #[serde(rename = "SFAI")]
    Sfai,
    General,
}

impl Verdict {
    pub fn is_sci(self) -> bool {
        self != Verdict::General
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NonInteracting => "NonInteracting",
            Verdict::SimilarityPreserving => "SimilarityPreserving",
            Verdict::Sfai => "SFAI",
            Verdict::General => "General",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub interaction_pairs: Vec<InteractionPair>,
    pub queries: Vec<QueryOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preservation_counterexample: Option<PreservationFailure>,
    /// Set when every query is false on the input but two enforcements
    /// that can occur later in the chase still interfere.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reachable_interference: Option<Interference>,
}

/// The first of NonInteracting, SimilarityPreserving, SFAI that holds, else General.
///
/// SFAI requires every generated query to be false on the input instance and,
/// in addition, [`reachable_interference`] to find no conflicting pair of
/// enforcements over the tuple versions the chase can produce.
pub fn classify(p: &Problem) -> Classification {
    let pairs = interaction_pairs(&p.mds, &p.schema);
    if pairs.is_empty() {
        return Classification {
            verdict: Verdict::NonInteracting,
            interaction_pairs: pairs,
            queries: Vec::new(),
            preservation_counterexample: None,
            reachable_interference: None,
        };
    }
    let preservation = similarity_preservation(&p.mds, &p.schema, &p.sim, &p.mf, &p.active_values());
    let report = is_sfai(&p.mds, &p.schema, &p.instance, &p.sim);
    let mut out = Classification {
        verdict: Verdict::General,
        interaction_pairs: pairs,
        queries: report.outcomes,
        preservation_counterexample: preservation.err(),
        reachable_interference: None,
    };
    if out.preservation_counterexample.is_none() {
        out.verdict = Verdict::SimilarityPreserving;
    } else if report.holds {
        match reachable_interference(p, DEFAULT_VERSION_LIMIT) {
            None => out.verdict = Verdict::Sfai,
            Some(i) => out.reachable_interference = Some(i),
        }
    }
    log::info!("classification: {}", out.verdict);
    out
}
