use std::collections::{BTreeMap, BTreeSet};

use super::{Identity, Md, MdAtom, MdSet, SimConstraint, Span};
use crate::error::MdError;
use crate::model::{AttrRef, MatchingFunction, Schema};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Colon,
    Comma,
    Semi,
    LParen,
    RParen,
    Arrow,
    Assign,
    Tilde,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Tilde => "`~`".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, MdError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let span = Span {
                line: ln + 1,
                column: i + 1,
            };
            match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                }
                c if c.is_alphanumeric() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    out.push((Tok::Ident(chars[start..i].iter().collect()), span));
                }
                ':' if chars.get(i + 1) == Some(&'=') => {
                    out.push((Tok::Assign, span));
                    i += 2;
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    out.push((Tok::Arrow, span));
                    i += 2;
                }
                ':' | ',' | ';' | '(' | ')' | '~' => {
                    let t = match c {
                        ':' => Tok::Colon,
                        ',' => Tok::Comma,
                        ';' => Tok::Semi,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        _ => Tok::Tilde,
                    };
                    out.push((t, span));
                    i += 1;
                }
                other => {
                    return Err(MdError::Parse {
                        line: span.line,
                        column: span.column,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// A dependency as written, before schema-dependent checks.
#[derive(Clone, Debug)]
pub struct MdDecl {
    pub name: String,
    pub atoms: Vec<MdAtom>,
    pub sims: Vec<(String, String, Option<String>, Span)>,
    pub rhs: (String, String, Span),
    pub span: Span,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: Span,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|(_, s)| *s).unwrap_or(self.end)
    }

    fn err(&self, message: String) -> MdError {
        let s = self.span();
        MdError::Parse {
            line: s.line,
            column: s.column,
            message,
        }
    }

    fn expect(&mut self, want: Tok) -> Result<Span, MdError> {
        match self.peek() {
            Some(t) if *t == want => {
                let s = self.span();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.err(format!("expected {}, found {}", want.describe(), t.describe()))),
            None => Err(self.err(format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), MdError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                let span = self.span();
                self.pos += 1;
                Ok((s, span))
            }
            Some(t) => Err(self.err(format!("expected {what}, found {}", t.describe()))),
            None => Err(self.err(format!("expected {what}, found end of input"))),
        }
    }

    fn decl(&mut self) -> Result<MdDecl, MdError> {
        let span = self.span();
        match self.ident("`md`")? {
            (kw, _) if kw == "md" => {}
            (kw, s) => {
                return Err(MdError::Parse {
                    line: s.line,
                    column: s.column,
                    message: format!("expected `md`, found `{kw}`"),
                })
            }
        }
        let (name, _) = self.ident("dependency name")?;
        self.expect(Tok::Colon)?;
        let mut atoms = Vec::new();
        let mut sims = Vec::new();
        loop {
            self.conjunct(&mut atoms, &mut sims)?;
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::Arrow) => {
                    self.pos += 1;
                    break;
                }
                Some(t) => return Err(self.err(format!("expected `,` or `->`, found {}", t.describe()))),
                None => return Err(self.err("expected `->`, found end of input".into())),
            }
        }
        let (left, rspan) = self.ident("variable")?;
        self.expect(Tok::Assign)?;
        let (right, _) = self.ident("variable")?;
        self.expect(Tok::Semi)?;
        Ok(MdDecl {
            name,
            atoms,
            sims,
            rhs: (left, right, rspan),
            span,
        })
    }

    fn conjunct(
        &mut self,
        atoms: &mut Vec<MdAtom>,
        sims: &mut Vec<(String, String, Option<String>, Span)>,
    ) -> Result<(), MdError> {
        let leading = matches!(self.peek(), Some(Tok::Ident(s)) if s == "lead")
            && matches!(self.peek_at(1), Some(Tok::Ident(_)))
            && matches!(self.peek_at(2), Some(Tok::LParen));
        if leading {
            self.pos += 1;
        }
        let (first, span) = self.ident("atom or variable")?;
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let (tid, _) = self.ident("tuple-identifier variable")?;
                let mut vars = Vec::new();
                if self.peek() == Some(&Tok::Semi) {
                    self.pos += 1;
                    loop {
                        vars.push(self.ident("variable")?.0);
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                atoms.push(MdAtom {
                    relation: first,
                    tid,
                    vars,
                    leading,
                    span,
                });
            }
            Some(Tok::Tilde) if !leading => {
                self.pos += 1;
                let (second, _) = self.ident("variable or domain")?;
                if self.peek() == Some(&Tok::Tilde) {
                    self.pos += 1;
                    let (right, _) = self.ident("variable")?;
                    sims.push((first, right, Some(second), span));
                } else {
                    sims.push((first, second, None, span));
                }
            }
            Some(t) => return Err(self.err(format!("expected `(` or `~`, found {}", t.describe()))),
            None => return Err(self.err("unexpected end of input".into())),
        }
        Ok(())
    }
}

/// Parses the syntax of every dependency in `text` without consulting a schema.
pub fn parse_md_decls(text: &str) -> Result<Vec<MdDecl>, MdError> {
    let toks = lex(text)?;
    let end = Span {
        line: text.lines().count().max(1),
        column: text.lines().last().map_or(1, |l| l.chars().count() + 1),
    };
    let mut p = Parser { toks, pos: 0, end };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.decl()?);
    }
    Ok(out)
}

/// Parses and validates a dependency file against `schema`. When `mf` is
/// given, every right-hand-side domain must have a matching function.
pub fn parse_mds(
    text: &str,
    schema: &Schema,
    mf: Option<&MatchingFunction>,
) -> Result<MdSet, MdError> {
    let decls = parse_md_decls(text)?;
    let mut mds = Vec::with_capacity(decls.len());
    let mut names = BTreeSet::new();
    for d in decls {
        if !names.insert(d.name.clone()) {
            return Err(MdError::Validation {
                md: d.name.clone(),
                line: d.span.line,
                column: d.span.column,
                message: "name already used by an earlier dependency".into(),
            });
        }
        mds.push(validate(d, schema, mf)?);
    }
    Ok(MdSet::new(mds).expect("names checked above"))
}

fn validate(d: MdDecl, schema: &Schema, mf: Option<&MatchingFunction>) -> Result<Md, MdError> {
    let fail = |span: Span, message: String| MdError::Validation {
        md: d.name.clone(),
        line: span.line,
        column: span.column,
        message,
    };

    let mut var_domains: BTreeMap<String, String> = BTreeMap::new();
    let mut tids: BTreeSet<&str> = BTreeSet::new();
    for a in &d.atoms {
        let rel = schema
            .relation(&a.relation)
            .ok_or_else(|| fail(a.span, format!("unknown relation `{}`", a.relation)))?;
        if rel.arity() != a.vars.len() {
            return Err(fail(
                a.span,
                format!(
                    "`{}` has {} attributes but the atom lists {} variables",
                    a.relation,
                    rel.arity(),
                    a.vars.len()
                ),
            ));
        }
        if !tids.insert(&a.tid) {
            return Err(fail(a.span, format!("tuple variable `{}` used by two atoms", a.tid)));
        }
        for (p, v) in a.vars.iter().enumerate() {
            let dom = rel.domain_of(p);
            match var_domains.get(v) {
                Some(prev) if prev != dom => {
                    return Err(fail(
                        a.span,
                        format!("variable `{v}` ranges over both `{prev}` and `{dom}`"),
                    ))
                }
                _ => {
                    var_domains.insert(v.clone(), dom.to_string());
                }
            }
        }
    }
    for a in &d.atoms {
        if var_domains.contains_key(&a.tid) {
            return Err(fail(
                a.span,
                format!("tuple variable `{}` also used as an attribute variable", a.tid),
            ));
        }
    }

    let mut similarities = Vec::new();
    for (l, r, dom, span) in &d.sims {
        let dl = var_domains
            .get(l)
            .ok_or_else(|| fail(*span, format!("variable `{l}` does not occur in any atom")))?;
        let dr = var_domains
            .get(r)
            .ok_or_else(|| fail(*span, format!("variable `{r}` does not occur in any atom")))?;
        if dl != dr {
            return Err(fail(
                *span,
                format!("`{l}` ({dl}) and `{r}` ({dr}) are not comparable"),
            ));
        }
        if let Some(dom) = dom {
            if dom != dl {
                return Err(fail(
                    *span,
                    format!("similarity is declared over `{dom}` but `{l}` ranges over `{dl}`"),
                ));
            }
        }
        similarities.push(SimConstraint {
            left: l.clone(),
            right: r.clone(),
            domain: dl.clone(),
            span: *span,
        });
    }

    // leading atoms
    let marked: Vec<usize> = (0..d.atoms.len()).filter(|&i| d.atoms[i].leading).collect();
    let lead: Vec<usize> = if marked.is_empty() {
        if d.atoms.len() != 2 {
            return Err(fail(
                d.span,
                format!(
                    "{} atoms but no `lead` markers; mark the two leading atoms",
                    d.atoms.len()
                ),
            ));
        }
        vec![0, 1]
    } else if marked.len() != 2 {
        return Err(fail(
            d.span,
            format!("exactly two atoms must be marked `lead`, found {}", marked.len()),
        ));
    } else {
        marked
    };

    let (left, right, rspan) = &d.rhs;
    if left == right {
        return Err(fail(*rspan, "the identity must relate two distinct variables".into()));
    }
    let position_in = |atom: usize, var: &str| -> Vec<usize> {
        d.atoms[atom]
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| *v == var)
            .map(|(p, _)| p)
            .collect()
    };
    let owner = |var: &str| -> Result<(usize, usize), MdError> {
        let hits: Vec<(usize, Vec<usize>)> = lead
            .iter()
            .map(|&i| (i, position_in(i, var)))
            .filter(|(_, ps)| !ps.is_empty())
            .collect();
        match hits.as_slice() {
            [] => Err(fail(
                *rspan,
                format!("right-hand side variable `{var}` does not occur in a leading atom"),
            )),
            [(i, ps)] if ps.len() == 1 => Ok((*i, ps[0])),
            [(_, _)] => Err(fail(
                *rspan,
                format!("right-hand side variable `{var}` occurs twice in its leading atom"),
            )),
            _ => Err(fail(
                *rspan,
                format!("right-hand side variable `{var}` occurs in both leading atoms"),
            )),
        }
    };
    let (la, lp) = owner(left)?;
    let (ra, rp) = owner(right)?;
    if la == ra {
        return Err(fail(
            *rspan,
            "the identity must relate variables of different leading atoms".into(),
        ));
    }
    let dom_l = &var_domains[left];
    let dom_r = &var_domains[right];
    if dom_l != dom_r {
        return Err(fail(
            *rspan,
            format!("`{left}` ({dom_l}) and `{right}` ({dom_r}) are not comparable"),
        ));
    }
    if let Some(mf) = mf {
        if !mf.has_mf(dom_l) {
            return Err(fail(
                *rspan,
                format!("domain `{dom_l}` of the identified attributes has no matching function"),
            ));
        }
    }
    let attr = |atom: usize, pos: usize| -> AttrRef {
        let rel = schema.relation(&d.atoms[atom].relation).expect("checked");
        AttrRef::new(&rel.name, &rel.attributes[pos].name)
    };

    let mut atoms = d.atoms.clone();
    atoms[la].leading = true;
    atoms[ra].leading = true;
    Ok(Md {
        name: d.name.clone(),
        atoms,
        leading: [la, ra],
        similarities,
        rhs: Identity {
            left: left.clone(),
            right: right.clone(),
            left_attr: attr(la, lp),
            right_attr: attr(ra, rp),
            left_pos: lp,
            right_pos: rp,
            domain: dom_l.clone(),
        },
        var_domains,
        span: d.span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Attribute, RelationSchema};

    fn rel(name: &str, attrs: &[&str]) -> RelationSchema {
        RelationSchema {
            name: name.into(),
            attributes: attrs
                .iter()
                .map(|a| Attribute {
                    name: a.to_string(),
                    domain: a.to_string(),
                })
                .collect(),
        }
    }

    fn r_schema() -> Schema {
        Schema::new(vec![rel("R", &["A", "B"])]).unwrap()
    }

    fn bib_schema() -> Schema {
        Schema::new(vec![
            rel("Author", &["Name", "PTitle", "ABlock"]),
            rel("Paper", &["PTitle", "Venue", "PBlock"]),
        ])
        .unwrap()
    }

    const PHI1: &str = "md phi1: lead R(t1; x1, y1), lead R(t2; x2, y2), x1 ~A~ x2 -> y1 := y2;";
    const PHI2: &str = "md phi2: R(t1; x1, y1), R(t2; x2, y2), y1 ~ y2 -> y1 := y2;";
    const BLOCK: &str = "
        # Example-3 style blocking dependency
        md block: lead Author(t1; x1, y1, bl1), Paper(t3; y1p, z1, bl4), y1 ~ y1p,
                  lead Author(t2; x2, y2, bl2), Paper(t4; y2p, z2, bl4), y2 ~ y2p,
                  x1 ~ x2, y1 ~ y2 -> bl1 := bl2;
    ";

    fn attrs(list: &[(&str, &str)]) -> BTreeSet<AttrRef> {
        list.iter().map(|(r, a)| AttrRef::new(*r, *a)).collect()
    }

    #[test]
    fn classical_md() {
        let set = parse_mds(PHI1, &r_schema(), None).unwrap();
        let m = set.get("phi1").unwrap();
        assert_eq!(m.atoms.len(), 2);
        assert_eq!(m.similarities.len(), 1);
        assert_eq!(m.similarities[0].domain, "A");
        assert_eq!(m.rhs.left_attr, AttrRef::new("R", "B"));
        assert_eq!(m.alhs(&r_schema()), attrs(&[("R", "A")]));
        assert_eq!(m.arhs(), attrs(&[("R", "B")]));
    }

    #[test]
    fn phi2_reads_and_writes_b() {
        let set = parse_mds(PHI2, &r_schema(), None).unwrap();
        let m = set.get("phi2").unwrap();
        assert_eq!(m.alhs(&r_schema()), attrs(&[("R", "B")]));
        assert_eq!(m.arhs(), attrs(&[("R", "B")]));
    }

    #[test]
    fn relational_md() {
        let s = bib_schema();
        let set = parse_mds(BLOCK, &s, None).unwrap();
        let m = set.get("block").unwrap();
        assert_eq!(m.atoms.len(), 4);
        assert_eq!(m.context_atoms().count(), 2);
        assert_eq!(m.similarities.len(), 4);
        assert_eq!(m.join_vars(), BTreeSet::from(["bl4".to_string()]));
        assert_eq!(
            m.alhs(&s),
            attrs(&[
                ("Author", "Name"),
                ("Author", "PTitle"),
                ("Paper", "PTitle"),
                ("Paper", "PBlock")
            ])
        );
        assert_eq!(m.arhs(), attrs(&[("Author", "ABlock")]));
        assert_eq!(m.leading_atom(0).tid, "t1");
        assert_eq!(m.leading_atom(1).tid, "t2");
    }

    #[test]
    fn rhs_must_come_from_leading_atoms() {
        let err = parse_mds("md bad: lead R(t1; x1, y1), lead R(t2; x2, y2) -> z := x2;", &r_schema(), None)
            .unwrap_err();
        assert!(matches!(err, MdError::Validation { ref md, .. } if md == "bad"), "{err}");
    }

    #[test]
    fn rhs_from_context_atom_rejected() {
        let s = bib_schema();
        let text = "md bad: lead Author(t1; x1, y1, b1), lead Author(t2; x2, y2, b2), Paper(t3; y1, z, pb) -> b1 := pb;";
        let err = parse_mds(text, &s, None).unwrap_err();
        assert!(err.to_string().contains("leading atom"), "{err}");
    }

    #[test]
    fn incomparable_similarity_rejected() {
        let err = parse_mds("md bad: R(t1; x1, y1), R(t2; x2, y2), x1 ~ y2 -> y1 := y2;", &r_schema(), None)
            .unwrap_err();
        assert!(err.to_string().contains("not comparable"));
    }

    #[test]
    fn missing_mf_rejected() {
        let mf = MatchingFunction::new();
        let err = parse_mds(PHI1, &r_schema(), Some(&mf)).unwrap_err();
        assert!(err.to_string().contains("no matching function"));
    }

    #[test]
    fn unmarked_relational_rejected() {
        let s = bib_schema();
        let text = "md bad: Author(t1; x1, y1, b1), Author(t2; x2, y2, b2), Paper(t3; y1, z, pb) -> b1 := b2;";
        assert!(parse_mds(text, &s, None).is_err());
    }

    #[test]
    fn parse_error_position() {
        let err = parse_md_decls("md x: R(t1; a b) -> a := b;").unwrap_err();
        match err {
            MdError::Parse { line, column, .. } => {
                assert_eq!((line, column), (1, 15));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = format!("{PHI1}\n{}", PHI1);
        assert!(parse_mds(&text, &r_schema(), None).is_err());
    }

    #[test]
    fn pretty_print_round_trip() {
        let s = bib_schema();
        let first = parse_mds(BLOCK, &s, None).unwrap();
        let printed = first.to_string();
        let second = parse_mds(&printed, &s, None).unwrap();
        assert_eq!(first, second);
    }
}
