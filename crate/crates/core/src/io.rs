//! Input files.
//!
//! Schema, one relation per line, domains defaulting to the attribute name:
//!
//! ```text
//! R(A, B)
//! Author(Name, PTitle: Title, ABlock: Block)
//! ```
//!
//! Instances are a directory of `<Relation>.csv` files, a single such file,
//! or a JSON document `{"R": [{"tid": "t1", "A": "a1", "B": "b1"}]}`. CSV
//! files start with a header whose first column is `tid`.
//!
//! Similarity lines are `DOM: v1 ~ v2` or `DOM: builtin token-overlap`;
//! matching-function lines are `DOM: m(v1, v2) = v3` or
//! `DOM: builtin token-union`. Values containing spaces or punctuation are
//! written in double quotes. `#` starts a comment everywhere.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::LoadError;
use crate::md::{parse_mds, MdSet};
use crate::model::{
    Attribute, Instance, MatchingFunction, MfBuiltin, RelationSchema, Schema, SimBuiltin,
    SimilarityRelation, Tid, Value,
};
use crate::problem::Problem;
use crate::query::{parse_queries, ConjunctiveQuery};

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: show(path),
        source,
    })
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Format {
        path: show(path),
        line,
        message: message.into(),
    }
}

/// Lines with comments stripped, paired with 1-based line numbers. A `#`
/// inside double quotes is kept.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let mut quoted = false;
        let mut end = l.len();
        for (j, c) in l.char_indices() {
            match c {
                '"' => quoted = !quoted,
                '#' if !quoted => {
                    end = j;
                    break;
                }
                _ => {}
            }
        }
        let l = l[..end].trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_schema(text: &str) -> Result<Schema, (usize, String)> {
    let mut rels = Vec::new();
    for (n, line) in content_lines(text) {
        let (name, rest) = line
            .split_once('(')
            .ok_or((n, "expected `Relation(Attr, ...)`".to_string()))?;
        let body = rest
            .trim_end()
            .strip_suffix(')')
            .ok_or((n, "missing closing `)`".to_string()))?;
        let name = name.trim();
        if name.is_empty() {
            return Err((n, "missing relation name".into()));
        }
        let mut attributes = Vec::new();
        for part in body.split(',') {
            let (attr, dom) = match part.split_once(':') {
                Some((a, d)) => (a.trim(), d.trim()),
                None => (part.trim(), part.trim()),
            };
            if attr.is_empty() || dom.is_empty() {
                return Err((n, format!("empty attribute or domain in `{line}`")));
            }
            attributes.push(Attribute {
                name: attr.to_string(),
                domain: dom.to_string(),
            });
        }
        rels.push(RelationSchema {
            name: name.to_string(),
            attributes,
        });
    }
    Schema::new(rels).map_err(|e| (0, e.to_string()))
}

pub fn load_schema(path: &Path) -> Result<Arc<Schema>, LoadError> {
    let text = read(path)?;
    parse_schema(&text)
        .map(Arc::new)
        .map_err(|(line, m)| format_err(path, line, m))
}

/// Reads an instance from a directory of CSV files, one CSV file, or JSON.
pub fn load_instance(path: &Path, schema: &Arc<Schema>) -> Result<Instance, LoadError> {
    let mut d = Instance::new(schema.clone());
    if path.is_dir() {
        let entries = fs::read_dir(path).map_err(|source| LoadError::Io {
            path: show(path),
            source,
        })?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        for f in files {
            read_csv(&f, &mut d)?;
        }
    } else if path.extension().is_some_and(|x| x == "json") {
        read_json(path, &mut d)?;
    } else {
        read_csv(path, &mut d)?;
    }
    Ok(d)
}

fn read_csv(path: &Path, d: &mut Instance) -> Result<(), LoadError> {
    let rel_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    let schema = d.schema().clone();
    let rel = schema
        .relation(&rel_name)
        .ok_or_else(|| format_err(path, 0, format!("file name names no relation of the schema (`{rel_name}`)")))?;
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| format_err(path, 1, e.to_string()))?
        .clone();
    if header.get(0) != Some("tid") {
        return Err(format_err(path, 1, "first column must be `tid`"));
    }
    let mut columns = Vec::new();
    for h in header.iter().skip(1) {
        let p = rel
            .position(h)
            .ok_or_else(|| format_err(path, 1, format!("relation `{}` has no attribute `{h}`", rel.name)))?;
        columns.push(p);
    }
    if columns.len() != rel.arity() {
        return Err(format_err(
            path,
            1,
            format!("expected {} attribute columns, found {}", rel.arity(), columns.len()),
        ));
    }
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            format_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut vals = vec![Value::new(""); rel.arity()];
        for (i, &p) in columns.iter().enumerate() {
            vals[p] = Value::new(&rec[i + 1]);
        }
        d.insert(&rel.name, Tid::new(&rec[0]), vals)
            .map_err(|e| format_err(path, line, e.to_string()))?;
    }
    Ok(())
}

fn read_json(path: &Path, d: &mut Instance) -> Result<(), LoadError> {
    let text = read(path)?;
    let doc: BTreeMap<String, Vec<serde_json::Map<String, serde_json::Value>>> =
        serde_json::from_str(&text).map_err(|e| format_err(path, e.line(), e.to_string()))?;
    let schema = d.schema().clone();
    for (rel_name, rows) in doc {
        let rel = schema
            .relation(&rel_name)
            .ok_or_else(|| format_err(path, 0, format!("unknown relation `{rel_name}`")))?;
        for (i, row) in rows.iter().enumerate() {
            let field = |k: &str| -> Result<Value, LoadError> {
                match row.get(k) {
                    Some(serde_json::Value::String(s)) => Ok(Value::new(s)),
                    Some(v @ (serde_json::Value::Number(_) | serde_json::Value::Bool(_))) => Ok(Value::new(v.to_string())),
                    _ => Err(format_err(
                        path,
                        0,
                        format!("{rel_name}[{i}]: missing or non-scalar field `{k}`"),
                    )),
                }
            };
            let tid = field("tid")?;
            let vals = rel
                .attributes
                .iter()
                .map(|a| field(&a.name))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != rel.arity() + 1 {
                return Err(format_err(path, 0, format!("{rel_name}[{i}]: unexpected fields")));
            }
            d.insert(&rel.name, Tid::new(tid.as_str()), vals)
                .map_err(|e| format_err(path, 0, format!("{rel_name}[{i}]: {e}")))?;
        }
    }
    Ok(())
}

/// Splits `DOM: rest`.
fn domain_line(line: &str) -> Result<(&str, &str), String> {
    let (d, rest) = line
        .split_once(':')
        .ok_or_else(|| "expected `DOMAIN: ...`".to_string())?;
    let d = d.trim();
    if d.is_empty() {
        return Err("missing domain name".into());
    }
    Ok((d, rest.trim()))
}

/// Values and single-character punctuation of a table line.
#[derive(Debug, PartialEq)]
enum Piece {
    Val(String),
    Punct(char),
}

fn pieces(s: &str) -> Result<Vec<Piece>, String> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if "~(),=".contains(c) {
            out.push(Piece::Punct(c));
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut v = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => v.extend(chars.next()),
                    Some(ch) => v.push(ch),
                    None => return Err("unterminated string".into()),
                }
            }
            out.push(Piece::Val(v));
        } else {
            let mut v = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || "~(),=\"".contains(ch) {
                    break;
                }
                v.push(ch);
                chars.next();
            }
            out.push(Piece::Val(v));
        }
    }
    Ok(out)
}

fn builtin_name(rest: &str) -> Option<&str> {
    let r = rest.strip_prefix("builtin")?;
    r.starts_with(char::is_whitespace).then(|| r.trim())
}

pub fn parse_similarity(text: &str, sim: &mut SimilarityRelation) -> Result<(), (usize, String)> {
    for (n, line) in content_lines(text) {
        let (d, rest) = domain_line(line).map_err(|m| (n, m))?;
        if let Some(name) = builtin_name(rest) {
            let rule = SimBuiltin::parse(name).ok_or((n, format!("unknown similarity built-in `{name}`")))?;
            sim.set_builtin(d, rule).map_err(|e| (n, e.to_string()))?;
            continue;
        }
        match pieces(rest).map_err(|m| (n, m))?.as_slice() {
            [Piece::Val(a), Piece::Punct('~'), Piece::Val(b)] => {
                sim.declare(d, Value::new(a), Value::new(b)).map_err(|e| (n, e.to_string()))?;
            }
            _ => return Err((n, "expected `DOMAIN: v1 ~ v2`".into())),
        }
    }
    Ok(())
}

/// Similarity over every domain of `schema`, plus the declarations of `path`.
pub fn load_similarity(path: &Path, schema: &Schema) -> Result<SimilarityRelation, LoadError> {
    let text = read(path)?;
    let mut sim = SimilarityRelation::new(schema.domains());
    parse_similarity(&text, &mut sim).map_err(|(l, m)| format_err(path, l, m))?;
    Ok(sim)
}

/// Parses matching-function lines. Two lines giving different results for
/// the same unordered pair are rejected here, naming both lines.
pub fn parse_matching(text: &str) -> Result<MatchingFunction, (usize, String)> {
    let mut mf = MatchingFunction::new();
    let mut seen: HashMap<(String, Value, Value), (Value, usize)> = HashMap::new();
    for (n, line) in content_lines(text) {
        let (d, rest) = domain_line(line).map_err(|m| (n, m))?;
        if let Some(name) = builtin_name(rest) {
            let rule = MfBuiltin::parse(name).ok_or((n, format!("unknown matching built-in `{name}`")))?;
            mf.set_builtin(d, rule);
            continue;
        }
        match pieces(rest).map_err(|m| (n, m))?.as_slice() {
            [Piece::Val(m), Piece::Punct('('), Piece::Val(a), Piece::Punct(','), Piece::Val(b), Piece::Punct(')'), Piece::Punct('='), Piece::Val(c)]
                if m == "m" =>
            {
                let (a, b, c) = (Value::new(a), Value::new(b), Value::new(c));
                let key = if a <= b {
                    (d.to_string(), a.clone(), b.clone())
                } else {
                    (d.to_string(), b.clone(), a.clone())
                };
                if let Some((prev, at)) = seen.get(&key) {
                    if *prev != c {
                        return Err((
                            n,
                            format!("m({a}, {b}) = {c} contradicts line {at} (= {prev}); matching functions are commutative and single-valued"),
                        ));
                    }
                }
                if a == b && c != a {
                    return Err((n, format!("m({a}, {a}) must be {a} (idempotence)")));
                }
                seen.insert(key, (c.clone(), n));
                mf.declare(d, a, b, c);
            }
            _ => return Err((n, "expected `DOMAIN: m(v1, v2) = v3`".into())),
        }
    }
    Ok(mf)
}

pub fn load_matching(path: &Path) -> Result<MatchingFunction, LoadError> {
    let text = read(path)?;
    parse_matching(&text).map_err(|(l, m)| format_err(path, l, m))
}

pub fn load_mds(path: &Path, schema: &Schema, mf: &MatchingFunction) -> Result<MdSet, LoadError> {
    let text = read(path)?;
    parse_mds(&text, schema, Some(mf)).map_err(|source| LoadError::Md {
        path: show(path),
        source,
    })
}

pub fn load_queries(path: &Path) -> Result<Vec<ConjunctiveQuery>, LoadError> {
    let text = read(path)?;
    parse_queries(&text).map_err(|source| LoadError::Query {
        path: show(path),
        source,
    })
}

/// Paths of the files making up one cleaning problem.
#[derive(Clone, Debug, Default)]
pub struct ProblemFiles {
    pub schema: PathBuf,
    pub instance: Option<PathBuf>,
    pub mds: Option<PathBuf>,
    pub sim: Option<PathBuf>,
    pub mf: Option<PathBuf>,
}

/// Loads and validates everything; missing optional files mean an empty
/// instance, no dependencies, no declared similarities or merges.
pub fn load_problem(files: &ProblemFiles) -> Result<Problem, LoadError> {
    let schema = load_schema(&files.schema)?;
    let sim = match &files.sim {
        Some(p) => load_similarity(p, &schema)?,
        None => SimilarityRelation::new(schema.domains()),
    };
    let mf = match &files.mf {
        Some(p) => load_matching(p)?,
        None => MatchingFunction::new(),
    };
    let mds = match &files.mds {
        Some(p) => load_mds(p, &schema, &mf)?,
        None => MdSet::new(Vec::new()).expect("no names"),
    };
    let d = match &files.instance {
        Some(p) => load_instance(p, &schema)?,
        None => Instance::new(schema.clone()),
    };
    let blame = files.mf.as_ref().or(files.instance.as_ref()).unwrap_or(&files.schema);
    Problem::new(mds, sim, mf, d).map_err(|source| LoadError::Model {
        path: show(blame),
        source,
    })
}
