use std::fs;
use std::io::Write;

use serde_json::json;

use mdclean::chase::{chase_all, chase_one, ChaseOptions, CleanInstance};
use mdclean::classify::{classify, Classification};
use mdclean::codegen::{emit_general_asp, emit_residual_datalog, solve};
use mdclean::io::{load_problem, load_queries, ProblemFiles};
use mdclean::model::Instance;
use mdclean::query::certain_answers;
use mdclean::{ChaseError, CodegenError, LoadError, ModelError, Problem};

use crate::{Cli, Command, Format};

/// Exit status of a failed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Validation = 1,
    Semantic = 2,
    Io = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

fn fail(kind: Kind, message: impl Into<String>) -> Failure {
    Failure {
        kind,
        message: message.into(),
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let kind = match e {
            LoadError::Io { .. } => Kind::Io,
            _ => Kind::Validation,
        };
        fail(kind, e.to_string())
    }
}

impl From<ChaseError> for Failure {
    fn from(e: ChaseError) -> Self {
        let kind = match &e {
            ChaseError::Model(m) if !matches!(m, ModelError::UndefinedMatch { .. }) => Kind::Validation,
            _ => Kind::Semantic,
        };
        fail(kind, e.to_string())
    }
}

impl From<CodegenError> for Failure {
    fn from(e: CodegenError) -> Self {
        let kind = match &e {
            CodegenError::Model(m) if !matches!(m, ModelError::UndefinedMatch { .. }) => Kind::Validation,
            _ => Kind::Semantic,
        };
        fail(kind, e.to_string())
    }
}

fn problem(cli: &Cli) -> Result<Problem, Failure> {
    let i = &cli.inputs;
    let schema = i
        .schema
        .clone()
        .ok_or_else(|| fail(Kind::Validation, "--schema is required"))?;
    for p in [&i.instance, &i.mds, &i.sim, &i.mf].into_iter().flatten() {
        if !p.exists() {
            return Err(fail(Kind::Io, format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(load_problem(&ProblemFiles {
        schema,
        instance: i.instance.clone(),
        mds: i.mds.clone(),
        sim: i.sim.clone(),
        mf: i.mf.clone(),
    })?)
}

fn output(cli: &Cli, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error, what: &str| fail(Kind::Io, format!("{what}: {e}"));
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| io(e, &p.display().to_string())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io(e, "stdout")),
    }
}

fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn instance_text(d: &Instance) -> String {
    let mut out = String::new();
    for (rel, tid, vals) in d.iter() {
        let vals: Vec<&str> = vals.iter().map(|v| v.as_str()).collect();
        out.push_str(&format!("{rel}({tid}, {})\n", vals.join(", ")));
    }
    out
}

fn classification_text(c: &Classification) -> String {
    let mut out = format!("verdict: {}\n", c.verdict);
    for p in &c.interaction_pairs {
        out.push_str(&format!("interaction: {} -> {} on {}\n", p.md1, p.md2, p.attribute));
    }
    for q in &c.queries {
        out.push_str(&format!("query {}: {}\n", q.name, if q.satisfied { "true" } else { "false" }));
    }
    if let Some(f) = &c.preservation_counterexample {
        out.push_str(&format!("not similarity preserving: {}\n", serde_json::to_string(f).expect("serialisable")));
    }
    if let Some(i) = &c.reachable_interference {
        out.push_str(&format!("interference after chase steps: {}\n", serde_json::to_string(i).expect("serialisable")));
    }
    out
}

fn clean_text(members: &[&CleanInstance]) -> String {
    let mut out = String::new();
    for (i, c) in members.iter().enumerate() {
        out.push_str(&format!("# clean instance {} ({} steps)\n", i + 1, c.steps.len()));
        out.push_str(&instance_text(&c.instance));
    }
    out
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate => {
            let p = problem(cli)?;
            let queries = match &cli.inputs.query {
                Some(q) => load_queries(q)?.len(),
                None => 0,
            };
            let relations: serde_json::Map<String, serde_json::Value> = p
                .schema
                .relations()
                .iter()
                .map(|r| (r.name.clone(), p.instance.tuples(&r.name).count().into()))
                .collect();
            let mds: Vec<&str> = p.mds.iter().map(|m| m.name.as_str()).collect();
            let text = match cli.format {
                Format::Json => to_json(&json!({
                    "valid": true,
                    "tuples": relations,
                    "mds": mds,
                    "queries": queries,
                })),
                Format::Text => format!(
                    "valid: {} tuples, {} MDs, {} queries\n",
                    p.instance.len(),
                    mds.len(),
                    queries
                ),
            };
            output(cli, &text)
        }
        Command::Classify => {
            let p = problem(cli)?;
            let c = classify(&p);
            let text = match cli.format {
                Format::Json => to_json(&c),
                Format::Text => classification_text(&c),
            };
            output(cli, &text)
        }
        Command::Chase { one, .. } => {
            let p = problem(cli)?;
            let members: Vec<CleanInstance> = if *one {
                vec![chase_one(&p.instance, &p.mds, &p.sim, &p.mf, cli.seed, cli.step_limit)?]
            } else {
                let opts = ChaseOptions {
                    step_limit: cli.step_limit,
                    ..ChaseOptions::default()
                };
                chase_all(&p.instance, &p.mds, &p.sim, &p.mf, &opts)
                    .map_err(|e| match e {
                        ChaseError::TooLarge { .. } => fail(Kind::Semantic, format!("{e}; use `chase --one`")),
                        e => e.into(),
                    })?
                    .members
            };
            let text = match (cli.format, *one) {
                (Format::Json, true) => to_json(&members[0]),
                (Format::Json, false) => to_json(&members),
                (Format::Text, _) => clean_text(&members.iter().collect::<Vec<_>>()),
            };
            output(cli, &text)
        }
        Command::EmitAsp => {
            let p = problem(cli)?;
            output(cli, &emit_general_asp(&p)?.to_string())
        }
        Command::EmitDatalog => {
            let p = problem(cli)?;
            let c = classify(&p);
            output(cli, &emit_residual_datalog(&p, &c)?.to_string())
        }
        Command::Solve => {
            let p = problem(cli)?;
            let c = classify(&p);
            let s = solve(&p, &c)?;
            let text = match cli.format {
                Format::Json => to_json(&json!({
                    "verdict": c.verdict,
                    "clean": s.instance,
                    "warnings": s.warnings,
                })),
                Format::Text => instance_text(&s.instance),
            };
            output(cli, &text)
        }
        Command::Answer { include_tids } => {
            let p = problem(cli)?;
            let qpath = cli
                .inputs
                .query
                .as_ref()
                .ok_or_else(|| fail(Kind::Validation, "`answer` needs --query"))?;
            let queries = load_queries(qpath)?;
            let c = classify(&p);
            let (via, clean): (&str, Vec<Instance>) = if c.verdict.is_sci() {
                ("solve", vec![solve(&p, &c)?.instance])
            } else {
                let opts = ChaseOptions {
                    step_limit: cli.step_limit,
                    ..ChaseOptions::default()
                };
                let all = chase_all(&p.instance, &p.mds, &p.sim, &p.mf, &opts)?;
                ("chase", all.instances().cloned().collect())
            };
            let mut results = Vec::new();
            let mut text = String::new();
            for q in &queries {
                let rows = certain_answers(&clean, q, &p.sim, *include_tids)
                    .map_err(|e| fail(Kind::Validation, format!("{}: {e}", qpath.display())))?;
                let columns = q.answer_columns(*include_tids);
                text.push_str(&format!("{}({}):\n", q.name, columns.join(", ")));
                for r in &rows {
                    let r: Vec<&str> = r.iter().map(|v| v.as_str()).collect();
                    text.push_str(&format!("  {}\n", r.join(", ")));
                }
                results.push(json!({ "query": q.name, "columns": columns, "answers": rows }));
            }
            let text = match cli.format {
                Format::Json => to_json(&json!({
                    "verdict": c.verdict,
                    "via": via,
                    "clean_instances": clean.len(),
                    "results": results,
                })),
                Format::Text => text,
            };
            output(cli, &text)
        }
    }
}
