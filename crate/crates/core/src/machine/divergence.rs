//! A sound but incomplete divergence test.
//!
//! Weak head reduction is deterministic, so if the term being head-reduced
//! ever repeats exactly, it never reaches weak head normal form and the
//! program never halts. The unread remainder of the data stream is
//! modelled by a free variable: the real run makes the same head steps
//! until that variable reaches head position, and the test gives up there.

use std::collections::HashSet;

use super::bits::BitString;
use super::io::{bits_to_list, bool_term, cons_term};
use super::term::Term;

const MAX_NODES: usize = 2_000;

/// True only if the program `code` given `z`, having demanded `data`,
/// provably never halts. `fuel` bounds the steps examined.
///
/// Besides exact repeats, a head `P` that reduces to `P c₁…cⱼ` without
/// touching the arguments after it is a loop, since those arguments never
/// reach head position. Read-back of a weak head normal form continues
/// into a lambda body, or into the first argument of a neutral term,
/// exactly as normal order does.
pub fn certainly_diverges(code: &Term, z: &BitString, data: &[bool], fuel: usize) -> bool {
    // Under no binders, index 1 is free: it stands for the unread stream.
    let stream = data
        .iter()
        .rev()
        .fold(Term::var(1), |acc, &b| cons_term(bool_term(b), acc));
    let (mut head, mut args) = unspine(Term::apps(code.clone(), [bits_to_list(z), stream]));
    let mut depth = 0u32;
    let mut entered: HashSet<Term> = HashSet::new();
    entered.insert(Term::apps(head.clone(), args.iter().cloned()));
    // Spines since the last move under a binder or into an argument.
    let mut history: Vec<Seen> = Vec::new();
    for _ in 0..fuel {
        if head.size() + args.iter().map(Term::size).sum::<usize>() > MAX_NODES {
            return false;
        }
        if history.iter().any(|e| e.reaches(&head, &args)) {
            return true;
        }
        history.push(Seen {
            head: head.clone(),
            args: args.clone(),
            untouched: args.len(),
        });
        let next = match head {
            Term::Lam(ref body) if !args.is_empty() => {
                for e in &mut history {
                    if e.untouched == args.len() {
                        e.untouched -= 1;
                    }
                }
                let arg = args.remove(0);
                Term::apps(subst(body, &arg), args.drain(..))
            }
            Term::Lam(ref mut body) => {
                depth += 1;
                let body = std::mem::replace(body.as_mut(), Term::Var(1));
                if !entered.insert(body.clone()) {
                    return true;
                }
                history.clear();
                body
            }
            // A bound variable; anything above `depth` is the stream.
            Term::Var(i) if i <= depth && !args.is_empty() => {
                let first = args.swap_remove(0);
                if !entered.insert(first.clone()) {
                    return true;
                }
                history.clear();
                first
            }
            _ => return false,
        };
        (head, args) = unspine(next);
    }
    false
}

struct Seen {
    head: Term,
    args: Vec<Term>,
    // Trailing arguments no step has consumed since this spine was seen.
    untouched: usize,
}

impl Seen {
    // The current spine is the core of this one applied to zero or more
    // extra arguments, followed by the same untouched tail.
    fn reaches(&self, head: &Term, args: &[Term]) -> bool {
        let core = self.args.len() - self.untouched;
        args.len() >= self.args.len() && *head == self.head && args[..core] == self.args[..core]
    }
}

// Head and arguments, first argument first.
fn unspine(t: Term) -> (Term, Vec<Term>) {
    let mut args = Vec::new();
    let mut head = t;
    while let Term::App(f, a) = &mut head {
        let f = std::mem::replace(f.as_mut(), Term::Var(1));
        args.push(std::mem::replace(a.as_mut(), Term::Var(1)));
        head = f;
    }
    args.reverse();
    (head, args)
}

/// `body[1 := arg]` with the binder removed.
fn subst(body: &Term, arg: &Term) -> Term {
    fn go(t: &Term, depth: u32, arg: &Term) -> Term {
        match t {
            Term::Var(i) if *i == depth + 1 => shift(arg, depth, 0),
            Term::Var(i) if *i > depth + 1 => Term::Var(i - 1),
            Term::Var(i) => Term::Var(*i),
            Term::Lam(b) => Term::lam(go(b, depth + 1, arg)),
            Term::App(f, a) => Term::app(go(f, depth, arg), go(a, depth, arg)),
        }
    }
    go(body, 0, arg)
}

// Adds `by` to every variable of `t` free above `cutoff`.
fn shift(t: &Term, by: u32, cutoff: u32) -> Term {
    if by == 0 {
        return t.clone();
    }
    match t {
        Term::Var(i) if *i > cutoff => Term::Var(i + by),
        Term::Var(i) => Term::Var(*i),
        Term::Lam(b) => Term::lam(shift(b, by, cutoff + 1)),
        Term::App(f, a) => Term::app(shift(f, by, cutoff), shift(a, by, cutoff)),
    }
}
