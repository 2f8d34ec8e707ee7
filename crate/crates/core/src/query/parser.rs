use super::{Condition, ConjunctiveQuery, QueryAtom, Term};
use crate::error::QueryError;
use crate::model::Value;
use crate::syntax::{is_variable, lex, Cursor, Pos, Tok};

fn parse_error((pos, message): (Pos, String)) -> QueryError {
    QueryError::Parse {
        line: pos.line,
        column: pos.column,
        message,
    }
}

/// Parses one or more queries, each terminated by `.`.
pub fn parse_queries(text: &str) -> Result<Vec<ConjunctiveQuery>, QueryError> {
    let toks = lex(text).map_err(parse_error)?;
    let mut c = Cursor::new(toks, text);
    let mut out = Vec::new();
    while !c.at_end() {
        out.push(query(&mut c).map_err(parse_error)?);
    }
    Ok(out)
}

fn query(c: &mut Cursor) -> Result<ConjunctiveQuery, (Pos, String)> {
    let name = match c.bump() {
        Some(Tok::Word(w)) if !is_variable(&w) => w,
        _ => return Err(c.unexpected("query name")),
    };
    c.expect(&Tok::LParen)?;
    let mut head = Vec::new();
    if !c.eat(&Tok::RParen) {
        loop {
            let pos = c.pos();
            match c.bump() {
                Some(Tok::Word(w)) if is_variable(&w) => head.push(w),
                _ => return Err((pos, "head arguments must be variables".into())),
            }
            if c.eat(&Tok::RParen) {
                break;
            }
            c.expect(&Tok::Comma)?;
        }
    }
    c.expect(&Tok::If)?;
    let mut atoms = Vec::new();
    let mut conditions = Vec::new();
    loop {
        literal(c, &mut atoms, &mut conditions)?;
        if c.eat(&Tok::Dot) {
            break;
        }
        c.expect(&Tok::Comma)?;
    }
    Ok(ConjunctiveQuery {
        name,
        head,
        atoms,
        conditions,
    })
}

fn term(c: &mut Cursor) -> Result<Term, (Pos, String)> {
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

fn literal(
    c: &mut Cursor,
    atoms: &mut Vec<QueryAtom>,
    conditions: &mut Vec<Condition>,
) -> Result<(), (Pos, String)> {
    if let (Some(Tok::Word(rel)), Some(Tok::LParen)) = (c.peek().cloned(), c.peek_at(1)) {
        c.bump();
        c.bump();
        let mut terms = vec![term(c)?];
        while c.eat(&Tok::Comma) {
            terms.push(term(c)?);
        }
        c.expect(&Tok::RParen)?;
        let tid = terms.remove(0);
        atoms.push(QueryAtom {
            relation: rel,
            tid,
            args: terms,
        });
        return Ok(());
    }
    let left = term(c)?;
    let cond = match c.bump() {
        Some(Tok::Tilde) => {
            let domain = match (c.peek().cloned(), c.peek_at(1)) {
                (Some(Tok::Word(d)), Some(Tok::Tilde)) => {
                    c.bump();
                    c.bump();
                    Some(d)
                }
                _ => None,
            };
            Condition::Sim {
                left,
                right: term(c)?,
                domain,
            }
        }
        Some(Tok::Neq) => Condition::Neq(left, term(c)?),
        Some(Tok::Eq) => Condition::Eq(left, term(c)?),
        _ => return Err((c.pos(), "expected `~`, `!=` or `=` after a term".into())),
    };
    conditions.push(cond);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_conditions() {
        let qs = parse_queries("q(X) :- R(T, X, Y), Y ~B~ c, X ~ Z, T != t2.\n% second\np() :- R(T, X, Y).").unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].atoms.len(), 1);
        assert_eq!(qs[0].conditions.len(), 3);
        assert!(matches!(&qs[0].conditions[0], Condition::Sim { domain: Some(d), .. } if d == "B"));
        assert!(matches!(&qs[0].conditions[1], Condition::Sim { domain: None, .. }));
        assert!(qs[1].head.is_empty());
    }

    #[test]
    fn error_position() {
        let err = parse_queries("q(X) :- R(T, X, Y) Y.").unwrap_err();
        assert_eq!(
            err,
            QueryError::Parse {
                line: 1,
                column: 20,
                message: "expected `,`, found `Y`".into()
            }
        );
    }

    #[test]
    fn head_must_be_variables() {
        assert!(parse_queries("q(a) :- R(T, X, Y).").is_err());
    }
}
