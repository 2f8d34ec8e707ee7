use super::{Atom, Clause, Literal, Program, Term};
use crate::error::DatalogError;
use crate::model::Value;
use crate::syntax::{is_variable, lex, Cursor, Pos, Tok};

type PResult<T> = Result<T, (Pos, String)>;

fn parse_error((pos, message): (Pos, String)) -> DatalogError {
    DatalogError::Parse {
        line: pos.line,
        column: pos.column,
        message,
    }
}

/// Parses facts, rules, disjunctive rules and constraints.
pub fn parse_clauses(text: &str) -> Result<Vec<Clause>, DatalogError> {
    let toks = lex(text).map_err(parse_error)?;
    let mut c = Cursor::new(toks, text);
    let mut out = Vec::new();
    while !c.at_end() {
        out.push(clause(&mut c).map_err(parse_error)?);
    }
    Ok(out)
}

/// Parses a Datalog program: every clause needs exactly one head atom.
pub fn parse_program(text: &str) -> Result<Program, DatalogError> {
    Program::from_clauses(parse_clauses(text)?)
}

fn clause(c: &mut Cursor) -> PResult<Clause> {
    let mut head = Vec::new();
    if c.peek() != Some(&Tok::If) {
        head.push(atom(c)?);
        while c.eat(&Tok::Bar) {
            head.push(atom(c)?);
        }
    }
    let mut body = Vec::new();
    if c.eat(&Tok::If) {
        body.push(literal(c)?);
        while c.eat(&Tok::Comma) {
            body.push(literal(c)?);
        }
    }
    c.expect(&Tok::Dot)?;
    Ok(Clause { head, body })
}

fn atom(c: &mut Cursor) -> PResult<Atom> {
    let pred = match c.peek().cloned() {
        Some(Tok::Word(w)) if !is_variable(&w) => {
            c.bump();
            w
        }
        _ => return Err(c.unexpected("a predicate name")),
    };
    let mut args = Vec::new();
    if c.eat(&Tok::LParen) {
        args = terms(c)?;
        c.expect(&Tok::RParen)?;
    }
    Ok(Atom { pred, args })
}

fn terms(c: &mut Cursor) -> PResult<Vec<Term>> {
    let mut out = vec![term(c)?];
    while c.eat(&Tok::Comma) {
        out.push(term(c)?);
    }
    Ok(out)
}

fn term(c: &mut Cursor) -> PResult<Term> {
    match c.peek().cloned() {
        Some(Tok::Word(w)) => {
            c.bump();
            Ok(if is_variable(&w) {
                Term::Var(w)
            } else {
                Term::Const(Value::new(w))
            })
        }
        Some(Tok::Quoted(q)) => {
            c.bump();
            Ok(Term::Const(Value::new(q)))
        }
        _ => Err(c.unexpected("a variable or constant")),
    }
}

fn literal(c: &mut Cursor) -> PResult<Literal> {
    if c.eat(&Tok::LParen) {
        let left = terms(c)?;
        c.expect(&Tok::RParen)?;
        let pos = c.pos();
        if !c.eat(&Tok::Neq) {
            return Err(c.unexpected("`!=`"));
        }
        c.expect(&Tok::LParen)?;
        let right = terms(c)?;
        c.expect(&Tok::RParen)?;
        if left.len() != right.len() {
            return Err((pos, "tuples of different lengths".into()));
        }
        return Ok(Literal::Neq(left, right));
    }
    match (c.peek().cloned(), c.peek_at(1).cloned()) {
        (Some(Tok::Word(w)), Some(Tok::Word(_))) if w == "not" => {
            c.bump();
            return Ok(Literal::Neg(atom(c)?));
        }
        (Some(Tok::Word(w)), next) if !is_variable(&w) && !matches!(next, Some(Tok::Neq | Tok::Eq)) => {
            return Ok(Literal::Pos(atom(c)?));
        }
        _ => {}
    }
    let left = term(c)?;
    match c.bump() {
        Some(Tok::Neq) => Ok(Literal::neq(left, term(c)?)),
        Some(Tok::Eq) => Ok(Literal::Eq(left, term(c)?)),
        _ => Err((c.pos(), "expected `!=` or `=` after a term".into())),
    }
}
