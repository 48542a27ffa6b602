//! Text syntax: `!`, `&`, `|`, `->` (right associative), `[]`, `true`,
//! `false`, parentheses and atoms `[A-Za-z_][A-Za-z0-9_]*`.

use super::{ModalFormula, ModalSystem};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Not,
    And,
    Or,
    Arrow,
    Box,
    LParen,
    RParen,
    Ident(String),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = lx.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let col = col0 + i;
            let err = |m: String| ParseError { line, col, message: m };
            match c {
                ' ' | '\t' | '\r' => {
                    i += 1;
                    continue;
                }
                '!' => lx.toks.push((Tok::Not, col)),
                '&' => lx.toks.push((Tok::And, col)),
                '|' => lx.toks.push((Tok::Or, col)),
                '(' => lx.toks.push((Tok::LParen, col)),
                ')' => lx.toks.push((Tok::RParen, col)),
                '-' if bytes.get(i + 1) == Some(&b'>') => {
                    lx.toks.push((Tok::Arrow, col));
                    i += 1;
                }
                '[' if bytes.get(i + 1) == Some(&b']') => {
                    lx.toks.push((Tok::Box, col));
                    i += 1;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                        i += 1;
                    }
                    lx.toks.push((Tok::Ident(lx.src[start..i].to_string()), col));
                    continue;
                }
                other => return Err(err(format!("unexpected character `{other}`"))),
            }
            i += 1;
        }
        lx.toks.push((Tok::End, col0 + bytes.len()));
        Ok(lx.toks)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn error(&self, expected: &str) -> ParseError {
        let (tok, col) = &self.toks[self.pos];
        let found = match tok {
            Tok::End => "end of input".to_string(),
            Tok::Ident(s) => format!("`{s}`"),
            t => format!("{t:?}"),
        };
        ParseError { line: self.line, col: *col, message: format!("expected {expected}, found {found}") }
    }

    fn implies(&mut self) -> Result<ModalFormula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(ModalFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<ModalFormula, ParseError> {
        let mut f = self.and()?;
        while *self.peek() == Tok::Or {
            self.pos += 1;
            f = ModalFormula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<ModalFormula, ParseError> {
        let mut f = self.unary()?;
        while *self.peek() == Tok::And {
            self.pos += 1;
            f = ModalFormula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<ModalFormula, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.pos += 1;
                Ok(ModalFormula::not(self.unary()?))
            }
            Tok::Box => {
                self.pos += 1;
                Ok(ModalFormula::boxed(self.unary()?))
            }
            Tok::LParen => {
                self.pos += 1;
                let f = self.implies()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.pos += 1;
                Ok(f)
            }
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(match s.as_str() {
                    "true" => ModalFormula::Top,
                    "false" => ModalFormula::Bot,
                    _ => ModalFormula::Atom(s),
                })
            }
            _ => Err(self.error("a formula")),
        }
    }
}

fn parse_at(src: &str, line: usize, col0: usize) -> Result<ModalFormula, ParseError> {
    let toks = Lexer::run(src, line, col0)?;
    let mut p = Parser { toks, pos: 0, line };
    let f = p.implies()?;
    if *p.peek() != Tok::End {
        return Err(p.error("an operator or end of input"));
    }
    Ok(f)
}

pub fn parse_formula(src: &str) -> Result<ModalFormula, ParseError> {
    parse_at(src, 1, 1)
}

/// One `name := formula` per line; blank lines and `#` comments are skipped.
pub fn parse_definitions(src: &str) -> Result<ModalSystem, ParseError> {
    let mut sys = ModalSystem::new();
    for (n, raw) in src.lines().enumerate() {
        let line = n + 1;
        let text = raw.split('#').next().unwrap_or("");
        if text.trim().is_empty() {
            continue;
        }
        let Some((name, body)) = text.split_once(":=") else {
            return Err(ParseError { line, col: 1, message: "expected `name := formula`".into() });
        };
        let atom = name.trim();
        let valid = atom.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && atom.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && atom != "true"
            && atom != "false";
        if !valid {
            return Err(ParseError { line, col: 1, message: format!("invalid atom name `{atom}`") });
        }
        if sys.get(atom).is_some() {
            return Err(ParseError { line, col: 1, message: format!("atom `{atom}` defined twice") });
        }
        let f = parse_at(body, line, name.len() + 3)?;
        sys.define(atom, f);
    }
    Ok(sys)
}
