use std::sync::Arc;

use crate::error::ModelError;
use crate::md::MdSet;
use crate::model::{ActiveValues, Instance, MatchingFunction, Schema, SimilarityRelation};

/// Everything one cleaning task needs: schema, dependencies, similarity and
/// matching functions, and the dirty instance.
#[derive(Clone, Debug)]
pub struct Problem {
    pub schema: Arc<Schema>,
    pub mds: MdSet,
    pub sim: SimilarityRelation,
    /// Saturated over the active values of the instance and the similarity table.
    pub mf: MatchingFunction,
    pub instance: Instance,
}

impl Problem {
    /// Registers every schema domain with `sim` and saturates `mf`.
    pub fn new(
        mds: MdSet,
        mut sim: SimilarityRelation,
        mf: MatchingFunction,
        instance: Instance,
    ) -> Result<Self, ModelError> {
        let schema = instance.schema().clone();
        for d in schema.domains() {
            sim.add_domain(d);
        }
        let mf = mf.saturate(&active_values(&instance, &sim))?;
        Ok(Problem {
            schema,
            mds,
            sim,
            mf,
            instance,
        })
    }

    /// Same dependencies and tables over a different instance.
    pub fn with_instance(&self, instance: Instance) -> Result<Self, ModelError> {
        let mf = self.mf.saturate(&active_values(&instance, &self.sim))?;
        Ok(Problem {
            instance,
            mf,
            ..self.clone()
        })
    }

    pub fn active_values(&self) -> ActiveValues {
        active_values(&self.instance, &self.sim)
    }
}

/// Values of the instance plus values named by declared similarities.
pub fn active_values(instance: &Instance, sim: &SimilarityRelation) -> ActiveValues {
    let mut out = instance.active_values();
    for (d, vals) in sim.declared_values() {
        out.entry(d).or_default().extend(vals);
    }
    out
}
