//! Tokeniser shared by the Datalog/ASP and query front ends.

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Identifier or number: letters, digits, `_`, `'`.
    Word(String),
    /// Double-quoted constant, unescaped.
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    If,
    Bar,
    Tilde,
    Neq,
    Eq,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Quoted(q) => format!("\"{q}\""),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::If => "`:-`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Eq => "`=`".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
}

/// Splits `text` into tokens. Everything after `%` or `#` on a line is a comment.
pub(crate) fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, (Pos, String)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let pos = Pos {
                line: ln + 1,
                column: i + 1,
            };
            let c = chars[i];
            let next = chars.get(i + 1).copied();
            let (tok, width) = match c {
                '%' | '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                c if c.is_alphanumeric() || c == '_' => {
                    let start = i;
                    let mut j = i;
                    while j < chars.len()
                        && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
                    {
                        j += 1;
                    }
                    (Tok::Word(chars[start..j].iter().collect()), j - i)
                }
                '"' => {
                    let mut s = String::new();
                    let mut j = i + 1;
                    loop {
                        match chars.get(j) {
                            None => return Err((pos, "unterminated string".into())),
                            Some('"') => break,
                            Some('\\') if j + 1 < chars.len() => {
                                s.push(chars[j + 1]);
                                j += 2;
                            }
                            Some(&ch) => {
                                s.push(ch);
                                j += 1;
                            }
                        }
                    }
                    (Tok::Quoted(s), j + 1 - i)
                }
                ':' if next == Some('-') => (Tok::If, 2),
                '!' if next == Some('=') => (Tok::Neq, 2),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '|' => (Tok::Bar, 1),
                '~' => (Tok::Tilde, 1),
                '=' => (Tok::Eq, 1),
                other => return Err((pos, format!("unexpected character `{other}`"))),
            };
            out.push((tok, pos));
            i += width;
        }
    }
    Ok(out)
}

/// Cursor over a token stream with position-aware errors.
pub(crate) struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Cursor {
    pub(crate) fn new(toks: Vec<(Tok, Pos)>, text: &str) -> Self {
        let end = Pos {
            line: text.lines().count().max(1),
            column: text.lines().last().map_or(1, |l| l.chars().count() + 1),
        };
        Cursor { toks, at: 0, end }
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    pub(crate) fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|(t, _)| t)
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    pub(crate) fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    pub(crate) fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, want: &Tok) -> Result<(), (Pos, String)> {
        if self.eat(want) {
            Ok(())
        } else {
            Err(self.unexpected(&want.describe()))
        }
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> (Pos, String) {
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), Tok::describe);
        (self.pos(), format!("expected {wanted}, found {found}"))
    }

    pub(crate) fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }
}

/// Variables start with an uppercase letter or `_`.
pub(crate) fn is_variable(word: &str) -> bool {
    word.starts_with(|c: char| c.is_uppercase() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_comments() {
        let toks = lex("p(X, \"a b\") :- q(X), X != y. % trailing\n# whole line").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|(t, _)| t).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Word("p".into()),
                Tok::LParen,
                Tok::Word("X".into()),
                Tok::Comma,
                Tok::Quoted("a b".into()),
                Tok::RParen,
                Tok::If,
                Tok::Word("q".into()),
                Tok::LParen,
                Tok::Word("X".into()),
                Tok::RParen,
                Tok::Comma,
                Tok::Word("X".into()),
                Tok::Neq,
                Tok::Word("y".into()),
                Tok::Dot,
            ]
        );
    }

    #[test]
    fn positions() {
        let toks = lex("a.\n  b(").unwrap();
        assert_eq!(toks[2].1, Pos { line: 2, column: 3 });
    }

    #[test]
    fn bad_character() {
        let err = lex("p :- q & r.").unwrap_err();
        assert_eq!(err.0, Pos { line: 1, column: 8 });
    }
}
