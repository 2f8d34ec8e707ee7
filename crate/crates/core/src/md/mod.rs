//! Matching dependencies: abstract syntax, the textual front end and
//! structural validation.
//!
//! A dependency is written
//!
//! ```text
//! md phi1: lead R(t1; x1, y1), lead R(t2; x2, y2), x1 ~A~ x2 -> y1 := y2;
//! ```
//!
//! Atoms list the tuple-identifier variable, a `;`, and one variable per
//! attribute. `lead` marks the two leading atoms; it may be omitted when the
//! dependency has exactly two atoms. `x ~ y` states similarity (`x ~D~ y`
//! names the domain explicitly), and a variable repeated across attribute
//! positions is an equality join. The right-hand side identifies one variable
//! of each leading atom.

mod parser;

pub use parser::{parse_md_decls, parse_mds};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::model::AttrRef;

/// Source position, 1-based. Compares equal to every other span so that ASTs
/// compare structurally.
#[derive(Clone, Copy, Debug, Default, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MdAtom {
    pub relation: String,
    pub tid: String,
    pub vars: Vec<String>,
    pub leading: bool,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimConstraint {
    pub left: String,
    pub right: String,
    pub domain: String,
    #[serde(skip)]
    pub span: Span,
}

/// The single identity on the right-hand side: `left` belongs to the first
/// leading atom, `right` to the second.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Identity {
    pub left: String,
    pub right: String,
    pub left_attr: AttrRef,
    pub right_attr: AttrRef,
    /// Attribute positions (excluding the tid column) inside the leading atoms.
    pub left_pos: usize,
    pub right_pos: usize,
    pub domain: String,
}

/// A validated (possibly relational) matching dependency.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Md {
    pub name: String,
    /// All atoms in source order.
    pub atoms: Vec<MdAtom>,
    /// Indices of the two leading atoms; `leading[0]` holds `rhs.left`.
    pub leading: [usize; 2],
    pub similarities: Vec<SimConstraint>,
    pub rhs: Identity,
    /// Domain of every attribute variable.
    pub var_domains: BTreeMap<String, String>,
    #[serde(skip)]
    pub span: Span,
}

impl Md {
    pub fn leading_atom(&self, i: usize) -> &MdAtom {
        &self.atoms[self.leading[i]]
    }

    pub fn context_atoms(&self) -> impl Iterator<Item = (usize, &MdAtom)> {
        self.atoms
            .iter()
            .enumerate()
            .filter(move |(i, _)| !self.leading.contains(i))
    }

    /// Every `(atom index, attribute position)` where `var` occurs.
    pub fn occurrences(&self, var: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            for (p, v) in a.vars.iter().enumerate() {
                if v == var {
                    out.push((i, p));
                }
            }
        }
        out
    }

    /// Variables that occur in more than one attribute position (equality joins).
    pub fn join_vars(&self) -> BTreeSet<String> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &self.atoms {
            for v in &a.vars {
                *counts.entry(v).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .filter(|(_, n)| *n > 1)
            .map(|(v, _)| v.to_string())
            .collect()
    }

    /// Attributes read on the left-hand side: those of variables in a
    /// similarity constraint or in an equality join.
    pub fn alhs(&self, schema: &crate::model::Schema) -> BTreeSet<AttrRef> {
        let mut read: BTreeSet<String> = self.join_vars();
        for s in &self.similarities {
            read.insert(s.left.clone());
            read.insert(s.right.clone());
        }
        read.iter()
            .flat_map(|v| self.occurrences(v))
            .map(|(i, p)| {
                let rel = &self.atoms[i].relation;
                let attr = &schema.require(rel).expect("validated relation").attributes[p];
                AttrRef::new(rel, &attr.name)
            })
            .collect()
    }

    /// Attributes written by the right-hand side identity.
    pub fn arhs(&self) -> BTreeSet<AttrRef> {
        [self.rhs.left_attr.clone(), self.rhs.right_attr.clone()].into()
    }

    pub fn is_same_relation(&self) -> bool {
        self.leading_atom(0).relation == self.leading_atom(1).relation
    }

    /// Whether swapping the two leading atoms describes the same write, i.e.
    /// both leading atoms range over one relation and the identity relates one
    /// attribute to itself.
    pub fn is_self_symmetric(&self) -> bool {
        self.is_same_relation() && self.rhs.left_pos == self.rhs.right_pos
    }

    pub fn is_relational(&self) -> bool {
        self.atoms.len() > 2
    }

    /// Rule-language names (uppercase initial) for the variables of this MD;
    /// `mark` is appended to each, e.g. to tell two copies apart.
    pub fn rule_vars(&self, mark: &str) -> HashMap<String, String> {
        let mut out = HashMap::new();
        let mut used = BTreeSet::new();
        let all = self
            .atoms
            .iter()
            .flat_map(|a| std::iter::once(&a.tid).chain(&a.vars));
        for v in all {
            if out.contains_key(v) {
                continue;
            }
            let mut base: String = v
                .chars()
                .enumerate()
                .map(|(i, c)| if i == 0 { c.to_ascii_uppercase() } else { c })
                .collect();
            if !base.starts_with(|c: char| c.is_ascii_uppercase()) {
                base.insert(0, 'V');
            }
            let mut name = format!("{base}{mark}");
            let mut n = 1;
            while !used.insert(name.clone()) {
                n += 1;
                name = format!("{base}_{n}{mark}");
            }
            out.insert(v.clone(), name);
        }
        out
    }
}

impl fmt::Display for Md {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "md {}: ", self.name)?;
        let mut first = true;
        for a in &self.atoms {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            if a.leading {
                f.write_str("lead ")?;
            }
            write!(f, "{}({}", a.relation, a.tid)?;
            if !a.vars.is_empty() {
                write!(f, "; {}", a.vars.join(", "))?;
            }
            f.write_str(")")?;
        }
        for s in &self.similarities {
            write!(f, ", {} ~{}~ {}", s.left, s.domain, s.right)?;
        }
        write!(f, " -> {} := {};", self.rhs.left, self.rhs.right)
    }
}

/// An ordered, name-indexed set of dependencies.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct MdSet {
    mds: Vec<Md>,
}

impl MdSet {
    pub fn new(mds: Vec<Md>) -> Result<Self, String> {
        let mut seen = BTreeSet::new();
        for m in &mds {
            if !seen.insert(m.name.as_str()) {
                return Err(format!("md name `{}` used twice", m.name));
            }
        }
        Ok(MdSet { mds })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Md> {
        self.mds.iter()
    }

    pub fn len(&self) -> usize {
        self.mds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mds.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Md> {
        self.mds.iter().find(|m| m.name == name)
    }

    /// A subset keeping the listed names, in the original order.
    pub fn select(&self, names: &[&str]) -> MdSet {
        MdSet {
            mds: self
                .mds
                .iter()
                .filter(|m| names.contains(&m.name.as_str()))
                .cloned()
                .collect(),
        }
    }
}

impl<'a> IntoIterator for &'a MdSet {
    type Item = &'a Md;
    type IntoIter = std::slice::Iter<'a, Md>;

    fn into_iter(self) -> Self::IntoIter {
        self.mds.iter()
    }
}

impl fmt::Display for MdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mds {
            writeln!(f, "{m}")?;
        }
        Ok(())
    }
}
