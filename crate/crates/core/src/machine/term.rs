//! De Bruijn lambda terms and the binary lambda calculus code.
//!
//! The code is prefix-free: `Lam b` is `00` followed by the code of `b`,
//! `App f a` is `01` followed by the codes of `f` and `a`, and `Var i`
//! is `i` ones followed by a zero.

use std::fmt;

use thiserror::Error;

use super::bits::BitString;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// De Bruijn index, counted from 1.
    Var(u32),
    Lam(Box<Term>),
    App(Box<Term>, Box<Term>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bit string exhausted mid-term at offset {offset}")]
    Exhausted { offset: usize },
    #[error("variable index too large at offset {offset}")]
    IndexOverflow { offset: usize },
}

impl DecodeError {
    pub fn offset(&self) -> usize {
        match *self {
            DecodeError::Exhausted { offset } | DecodeError::IndexOverflow { offset } => offset,
        }
    }
}

impl Term {
    pub fn var(i: u32) -> Term {
        assert!(i >= 1, "de Bruijn indices start at 1");
        Term::Var(i)
    }

    pub fn lam(body: Term) -> Term {
        Term::Lam(Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    /// `lams(k, body)` wraps `body` in `k` abstractions.
    pub fn lams(k: usize, body: Term) -> Term {
        (0..k).fold(body, |b, _| Term::lam(b))
    }

    /// Left-nested application of `head` to `args`.
    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    /// Number of Var/Lam/App nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            n += 1;
            match t {
                Term::Var(_) => {}
                Term::Lam(b) => stack.push(b),
                Term::App(f, a) => {
                    stack.push(f);
                    stack.push(a);
                }
            }
        }
        n
    }

    /// Length of the binary code, without materialising it.
    pub fn code_len(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(i) => n += *i as usize + 1,
                Term::Lam(b) => {
                    n += 2;
                    stack.push(b);
                }
                Term::App(f, a) => {
                    n += 2;
                    stack.push(f);
                    stack.push(a);
                }
            }
        }
        n
    }

    /// True iff every variable is bound by an enclosing abstraction.
    pub fn is_closed(&self) -> bool {
        self.max_free_excess(0) == 0
    }

    /// Largest amount by which a variable escapes its binders when the
    /// term sits under `depth` abstractions (0 when closed there).
    pub fn max_free_excess(&self, depth: u32) -> u32 {
        let mut worst = 0;
        let mut stack = vec![(self, depth)];
        while let Some((t, d)) = stack.pop() {
            match t {
                Term::Var(i) => worst = worst.max(i.saturating_sub(d)),
                Term::Lam(b) => stack.push((b, d + 1)),
                Term::App(f, a) => {
                    stack.push((f, d));
                    stack.push((a, d));
                }
            }
        }
        worst
    }
}

// Iterative drop: normal forms can be deep enough to overflow a recursive drop.
impl Drop for Term {
    fn drop(&mut self) {
        let mut stack: Vec<Term> = Vec::new();
        match self {
            Term::Var(_) => return,
            Term::Lam(b) => stack.push(std::mem::replace(b.as_mut(), Term::Var(1))),
            Term::App(f, a) => {
                stack.push(std::mem::replace(f.as_mut(), Term::Var(1)));
                stack.push(std::mem::replace(a.as_mut(), Term::Var(1)));
            }
        }
        while let Some(mut t) = stack.pop() {
            match &mut t {
                Term::Var(_) => {}
                Term::Lam(b) => stack.push(std::mem::replace(b.as_mut(), Term::Var(1))),
                Term::App(f, a) => {
                    stack.push(std::mem::replace(f.as_mut(), Term::Var(1)));
                    stack.push(std::mem::replace(a.as_mut(), Term::Var(1)));
                }
            }
        }
    }
}

pub fn encode_term(t: &Term) -> BitString {
    let mut out = BitString::new();
    encode_into(t, &mut out);
    out
}

pub fn encode_into(t: &Term, out: &mut BitString) {
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t {
            Term::Var(i) => {
                for _ in 0..*i {
                    out.push(true);
                }
                out.push(false);
            }
            Term::Lam(b) => {
                out.push(false);
                out.push(false);
                stack.push(b);
            }
            Term::App(f, a) => {
                out.push(false);
                out.push(true);
                stack.push(a);
                stack.push(f);
            }
        }
    }
}

/// Parses the unique term whose code is a prefix of `bits`, returning it
/// with the number of bits consumed.
pub fn decode_term(bits: &BitString) -> Result<(Term, usize), DecodeError> {
    decode_prefix(bits.bits())
}

pub fn decode_prefix(bits: &[bool]) -> Result<(Term, usize), DecodeError> {
    enum Frame {
        Lam,
        AppFun,
        AppArg(Term),
    }
    let mut pos = 0;
    let mut frames: Vec<Frame> = Vec::new();
    let next = |pos: &mut usize| -> Result<bool, DecodeError> {
        let b = bits
            .get(*pos)
            .copied()
            .ok_or(DecodeError::Exhausted { offset: *pos })?;
        *pos += 1;
        Ok(b)
    };
    loop {
        // Parse one leaf or push frames until a leaf is produced.
        let mut done = if next(&mut pos)? {
            let start = pos - 1;
            let mut i: u32 = 1;
            while next(&mut pos)? {
                i = i
                    .checked_add(1)
                    .ok_or(DecodeError::IndexOverflow { offset: start })?;
            }
            Term::Var(i)
        } else {
            if next(&mut pos)? {
                frames.push(Frame::AppFun);
            } else {
                frames.push(Frame::Lam);
            }
            continue;
        };
        // Unwind completed frames.
        loop {
            match frames.pop() {
                None => return Ok((done, pos)),
                Some(Frame::Lam) => done = Term::lam(done),
                Some(Frame::AppFun) => {
                    frames.push(Frame::AppArg(done));
                    break;
                }
                Some(Frame::AppArg(f)) => done = Term::app(f, done),
            }
        }
    }
}

impl fmt::Display for Term {
    /// Nameless surface syntax, e.g. `\ \ 2` or `\ 1 (\ \ 1) (\ \ 1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Term, f: &mut fmt::Formatter<'_>, ctx: Ctx) -> fmt::Result {
            match t {
                Term::Var(i) => write!(f, "{i}"),
                Term::Lam(b) => {
                    let paren = ctx != Ctx::Top;
                    if paren {
                        f.write_str("(")?;
                    }
                    f.write_str("\\ ")?;
                    go(b, f, Ctx::Top)?;
                    if paren {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
                Term::App(fun, arg) => {
                    let paren = ctx == Ctx::Arg;
                    if paren {
                        f.write_str("(")?;
                    }
                    go(fun, f, Ctx::Fun)?;
                    f.write_str(" ")?;
                    go(arg, f, Ctx::Arg)?;
                    if paren {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
            }
        }
        #[derive(PartialEq, Clone, Copy)]
        enum Ctx {
            Top,
            Fun,
            Arg,
        }
        go(self, f, Ctx::Top)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id() -> Term {
        Term::lam(Term::var(1))
    }

    #[test]
    fn golden_codes() {
        assert_eq!(encode_term(&id()).to_string(), "0010");
        assert_eq!(
            encode_term(&Term::app(id(), id())).to_string(),
            "0100100010"
        );
        // 00 · 00 · 110
        assert_eq!(
            encode_term(&Term::lam(Term::lam(Term::var(2)))).to_string(),
            "0000110"
        );
    }

    #[test]
    fn decode_prefix_property() {
        let (t, n) = decode_term(&"0010".parse().unwrap()).unwrap();
        assert_eq!((t, n), (id(), 4));
        let (t, n) = decode_term(&"001011".parse().unwrap()).unwrap();
        assert_eq!((t, n), (id(), 4));
        assert_eq!(
            decode_term(&"00".parse().unwrap()),
            Err(DecodeError::Exhausted { offset: 2 })
        );
        assert_eq!(
            decode_term(&"0111".parse().unwrap()),
            Err(DecodeError::Exhausted { offset: 4 })
        );
    }

    #[test]
    fn closedness() {
        assert!(id().is_closed());
        assert!(!Term::lam(Term::var(2)).is_closed());
        assert!(!Term::var(1).is_closed());
    }

    #[test]
    fn display_is_nameless() {
        let t = Term::lam(Term::apps(
            Term::var(1),
            [Term::lams(2, Term::var(1)), Term::lams(2, Term::var(1))],
        ));
        assert_eq!(t.to_string(), "\\ 1 (\\ \\ 1) (\\ \\ 1)");
        assert_eq!(Term::app(id(), id()).to_string(), "(\\ 1) (\\ 1)");
    }

    #[test]
    fn deep_term_drops_without_overflow() {
        let mut t = Term::var(1);
        for _ in 0..200_000 {
            t = Term::lam(t);
        }
        assert_eq!(t.code_len(), 400_002);
        drop(t);
    }
}
