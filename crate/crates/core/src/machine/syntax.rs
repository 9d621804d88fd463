//! A small surface syntax for writing terms by hand.
//!
//! ```text
//! term  := '\' ident+ '.' term      named abstraction(s)
//!        | '\' term                 nameless abstraction
//!        | atom+                    left-associative application
//! atom  := ident | index | '(' term ')'
//! ```
//!
//! `λ` is accepted for `\`. A bare positive integer is a raw de Bruijn
//! index. Identifiers not bound by an enclosing abstraction are looked up
//! in a [`Library`] of closed terms and inlined. `#` starts a line comment.

use std::collections::BTreeMap;

use thiserror::Error;

use super::term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected character {ch:?} at offset {offset}")]
    UnexpectedChar { ch: char, offset: usize },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdent { name: String, offset: usize },
    #[error("de Bruijn index must be positive at offset {offset}")]
    ZeroIndex { offset: usize },
    #[error("library entry `{0}` is not a closed term")]
    OpenDefinition(String),
}

/// Named closed terms available to the parser.
#[derive(Clone, Default, Debug)]
pub struct Library {
    defs: BTreeMap<String, Term>,
}

impl Library {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.defs.get(name)
    }

    pub fn insert(&mut self, name: &str, term: Term) -> Result<(), SyntaxError> {
        if !term.is_closed() {
            return Err(SyntaxError::OpenDefinition(name.to_string()));
        }
        self.defs.insert(name.to_string(), term);
        Ok(())
    }

    /// Parses `src` against the current library and stores it under `name`.
    pub fn define(&mut self, name: &str, src: &str) -> Result<Term, SyntaxError> {
        let t = parse_with(src, self)?;
        self.insert(name, t.clone())?;
        Ok(t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lambda,
    Dot,
    Open,
    Close,
    Ident(String),
    Index(u32),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '\\' | 'λ' => {
                chars.next();
                out.push((Tok::Lambda, i));
            }
            '.' => {
                chars.next();
                out.push((Tok::Dot, i));
            }
            '(' => {
                chars.next();
                out.push((Tok::Open, i));
            }
            ')' => {
                chars.next();
                out.push((Tok::Close, i));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !c.is_ascii_digit() {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                let n: u32 = s
                    .parse()
                    .map_err(|_| SyntaxError::UnexpectedChar { ch: c, offset: i })?;
                if n == 0 {
                    return Err(SyntaxError::ZeroIndex { offset: i });
                }
                out.push((Tok::Index(n), i));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !(c.is_alphanumeric() || c == '_' || c == '\'') || c == 'λ' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push((Tok::Ident(s), i));
            }
            ch => return Err(SyntaxError::UnexpectedChar { ch, offset: i }),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    lib: &'a Library,
    // Binder names, innermost last; nameless binders are `None`.
    scope: Vec<Option<String>>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(usize::MAX)
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        if self.peek() == Some(&Tok::Lambda) {
            self.pos += 1;
            let mut names = Vec::new();
            while let Some(Tok::Ident(n)) = self.peek() {
                names.push(n.clone());
                self.pos += 1;
            }
            if names.is_empty() {
                self.scope.push(None);
                let body = self.term();
                self.scope.pop();
                return Ok(Term::lam(body?));
            }
            match self.peek() {
                Some(Tok::Dot) => self.pos += 1,
                Some(_) => {
                    return Err(SyntaxError::UnexpectedChar {
                        ch: '?',
                        offset: self.offset(),
                    })
                }
                None => return Err(SyntaxError::UnexpectedEnd),
            }
            let k = names.len();
            self.scope.extend(names.into_iter().map(Some));
            let body = self.term();
            self.scope.truncate(self.scope.len() - k);
            return Ok(Term::lams(k, body?));
        }
        let mut head = self.atom()?;
        while let Some(tok) = self.peek() {
            if matches!(tok, Tok::Close | Tok::Dot) {
                break;
            }
            let arg = if *tok == Tok::Lambda {
                // A trailing abstraction extends to the end of the group.
                self.term()?
            } else {
                self.atom()?
            };
            head = Term::app(head, arg);
        }
        Ok(head)
    }

    fn atom(&mut self) -> Result<Term, SyntaxError> {
        let offset = self.offset();
        let tok = self.peek().cloned().ok_or(SyntaxError::UnexpectedEnd)?;
        self.pos += 1;
        match tok {
            Tok::Index(i) => Ok(Term::Var(i)),
            Tok::Ident(name) => {
                if let Some(pos) = self
                    .scope
                    .iter()
                    .rposition(|n| n.as_deref() == Some(name.as_str()))
                {
                    Ok(Term::Var((self.scope.len() - pos) as u32))
                } else if let Some(t) = self.lib.get(&name) {
                    Ok(t.clone())
                } else {
                    Err(SyntaxError::UnknownIdent { name, offset })
                }
            }
            Tok::Open => {
                let t = self.term()?;
                match self.peek() {
                    Some(Tok::Close) => {
                        self.pos += 1;
                        Ok(t)
                    }
                    Some(_) => Err(SyntaxError::UnexpectedChar {
                        ch: '?',
                        offset: self.offset(),
                    }),
                    None => Err(SyntaxError::UnexpectedEnd),
                }
            }
            Tok::Lambda => unreachable!("handled by term()"),
            Tok::Dot => Err(SyntaxError::UnexpectedChar { ch: '.', offset }),
            Tok::Close => Err(SyntaxError::UnexpectedChar { ch: ')', offset }),
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, SyntaxError> {
    parse_with(src, &Library::new())
}

pub fn parse_with(src: &str, lib: &Library) -> Result<Term, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        lib,
        scope: Vec::new(),
    };
    let t = p.term()?;
    if p.pos != p.toks.len() {
        let (tok, offset) = &p.toks[p.pos];
        let ch = match tok {
            Tok::Close => ')',
            Tok::Dot => '.',
            _ => '?',
        };
        return Err(SyntaxError::UnexpectedChar { ch, offset: *offset });
    }
    Ok(t)
}
