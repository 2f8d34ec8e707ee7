use std::fmt;

use super::*;
use crate::classify::Classification;
use crate::datalog::{evaluate, CoreBuiltins, Model, Program};
use crate::error::CodegenError;
use crate::model::{Instance, Tid};

/// The stratified program whose `r_c` relations hold the unique clean
/// instance. Block numbers follow the disjunctive program; the precedence
/// blocks are not needed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualProgram {
    pub blocks: Vec<Block>,
    pub program: Program,
}

impl fmt::Display for ResidualProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks)
    }
}

/// Compiles the problem to stratified Datalog. Refused unless the
/// classification places the input in a single-clean-instance class.
pub fn emit_residual_datalog(p: &Problem, c: &Classification) -> Result<ResidualProgram, CodegenError> {
    if !c.verdict.is_sci() {
        return Err(CodegenError::NotSci(c.verdict.to_string()));
    }
    let written = written_positions(p);

    let mut facts = tuple_facts(p, rel_pred);
    facts.extend(table_facts(p, false)?);

    let mut matching = Vec::new();
    let mut insertion = Vec::new();
    for md in p.mds.iter() {
        let names = md.rule_vars("");
        matching.push(rule(
            Atom::new(match_pred(&md.name), match_args(md, &names)),
            match_body(md, &names, &rel_pred),
        ));
        insertion.extend(insertion_rules(md, &names, &rel_pred));
    }
    for rel in p.schema.relations() {
        if let Some(w) = written.get(&rel.name) {
            let order = |d: &str, a: Term, b: Term| builtin("pre", d, vec![a, b]);
            matching.push(old_version_rule(rel, w, &rel_pred(&rel.name), &order));
        }
    }
    let collect: Vec<Clause> = p
        .schema
        .relations()
        .iter()
        .map(|rel| collection_rule(rel, written.get(&rel.name), &rel_pred(&rel.name)))
        .collect();

    let block = |number: u8, title: &str, clauses: Vec<Clause>| Block {
        number,
        title: title.to_string(),
        clauses,
    };
    let blocks = vec![
        block(1, "facts", facts),
        block(2, "matching", matching),
        block(3, "insertion of merged values", insertion),
        block(7, "clean tuples", collect),
    ];
    let program = Program::from_clauses(blocks.iter().flat_map(|b| b.clauses.clone()).collect())?;
    Ok(ResidualProgram { blocks, program })
}

/// Reads the `r_c` relations of an evaluated residual program back into an
/// instance. Two clean rows for one tid mean the input had no single clean
/// instance, reported as a duplicate tid.
pub fn clean_instance(p: &Problem, model: &Model) -> Result<Instance, CodegenError> {
    let mut out = Instance::new(p.schema.clone());
    for rel in p.schema.relations() {
        for row in model.rows(&clean_pred(&rel.name)) {
            out.insert(&rel.name, Tid::new(row[0].as_str()), row[1..].to_vec())?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub program: ResidualProgram,
    pub model: Model,
    pub instance: Instance,
    /// Matched pairs whose merge is undefined; their insertion rules did not
    /// fire.
    pub warnings: Vec<String>,
}

/// Emits, evaluates and reads back the residual program. Matched pairs whose
/// merge is undefined are collected as warnings.
pub fn solve(p: &Problem, c: &Classification) -> Result<Solution, CodegenError> {
    let program = emit_residual_datalog(p, c)?;
    let model = evaluate(
        &program.program,
        &CoreBuiltins {
            sim: &p.sim,
            mf: &p.mf,
        },
    )?;
    let mut warnings = Vec::new();
    for md in p.mds.iter() {
        let width = 1 + md.leading_atom(0).vars.len();
        for row in model.rows(&match_pred(&md.name)) {
            let (a, b) = (&row[1 + md.rhs.left_pos], &row[width + 1 + md.rhs.right_pos]);
            if let Err(e) = p.mf.match_values(&md.rhs.domain, a, b) {
                log::warn!("{}: {e}", md.name);
                warnings.push(format!("{}: {e}", md.name));
            }
        }
    }
    let instance = clean_instance(p, &model)?;
    Ok(Solution {
        program,
        model,
        instance,
        warnings,
    })
}
