//! Explicit witness programs built from the frozen combinator library.
//!
//! A witness is a valid program `code ++ data`. Combinators take witness
//! terms as arguments and pass them the condition and the data stream.
//! Every argument sees the stream from its first bit, so at most one
//! argument of a combinator may read data; [`freeze`] turns a witness into
//! a data-free one by baking its data in as a literal list.

use crate::combinators::{self, literal, numeral};
use crate::machine::io::{decode_pair, split_program};
use crate::machine::term::{encode_term, Term};
use crate::machine::BitString;

/// A witness split into its term and its data bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parts {
    pub term: Term,
    pub data: BitString,
}

impl Parts {
    /// Splits a program. Panics if `p` does not start with a closed code.
    pub fn of(p: &BitString) -> Parts {
        let (term, n) = split_program(p).expect("witness starts with a closed code");
        Parts {
            term,
            data: p.slice(n, p.len()),
        }
    }

    pub fn reads_data(&self) -> bool {
        !self.data.is_empty()
    }

    pub fn program(&self) -> BitString {
        encode_term(&self.term).concat(&self.data)
    }
}

fn program(term: Term, data: &BitString) -> BitString {
    encode_term(&term).concat(data)
}

fn comb(name: &str, args: impl IntoIterator<Item = Term>) -> Term {
    Term::apps(combinators::get(name), args)
}

/// Size of `name` applied to `k` arguments, excluding the arguments.
pub fn applied_cost(name: &str, k: usize) -> usize {
    combinators::size(name) + 2 * k
}

/// `λz d. x` with `x` as a literal list.
pub fn literal_witness(x: &BitString) -> BitString {
    encode_term(&Term::lams(2, literal(x)))
}

/// `ECHO |x|` followed by `x` itself as data.
pub fn echo_witness(x: &BitString) -> BitString {
    program(comb("ECHO", [numeral(x.len())]), x)
}

/// Valid for `x` given `z` exactly when `x = z`.
pub fn copy_witness() -> BitString {
    encode_term(&combinators::get("COPY"))
}

/// Programs that extract `x` from a pair-structured condition `z`, with
/// the combinator used.
pub fn extraction_witnesses(x: &BitString, z: &BitString) -> Vec<(&'static str, BitString)> {
    let mut out = Vec::new();
    if let Ok((a, b)) = decode_pair(z) {
        if &a == x {
            out.push(("FST_Z", encode_term(&combinators::get("FST_Z"))));
        }
        if &b == x {
            out.push(("SND_Z", encode_term(&combinators::get("SND_Z"))));
        }
        if let Ok((ba, bb)) = decode_pair(&b) {
            if &ba == x {
                out.push(("FST_SND_Z", encode_term(&combinators::get("FST_SND_Z"))));
            }
            if &bb == x {
                out.push(("SND_SND_Z", encode_term(&combinators::get("SND_SND_Z"))));
            }
        }
    }
    out
}

/// `λz d. T z LIT(data)`: the same output, reading nothing.
pub fn freeze(w: &Parts) -> Parts {
    if !w.reads_data() {
        return w.clone();
    }
    let body = Term::apps(w.term.clone(), [Term::var(2), literal(&w.data)]);
    Parts {
        term: Term::lams(2, body),
        data: BitString::new(),
    }
}

/// Makes at most one of two witnesses read data, freezing whichever
/// choice is cheaper.
pub fn share_stream(a: &Parts, b: &Parts) -> (Parts, Parts) {
    if !a.reads_data() || !b.reads_data() {
        return (a.clone(), b.clone());
    }
    let fa = freeze(a);
    let fb = freeze(b);
    if fa.term.code_len() - a.term.code_len() <= fb.term.code_len() - b.term.code_len() {
        (fa, b.clone())
    } else {
        (a.clone(), fb)
    }
}

fn data_of<'a>(a: &'a Parts, b: &'a Parts) -> &'a BitString {
    if a.reads_data() {
        &a.data
    } else {
        &b.data
    }
}

/// A witness for `⟨x, y⟩` from witnesses for `x` and `y`.
pub fn pair_witness(wx: &BitString, wy: &BitString) -> BitString {
    let (a, b) = share_stream(&Parts::of(wx), &Parts::of(wy));
    program(comb("PAIR", [a.term.clone(), b.term.clone()]), data_of(&a, &b))
}

/// A witness for `⟨y, x⟩` from one for `⟨x, y⟩`.
pub fn swap_witness(w: &BitString) -> BitString {
    let p = Parts::of(w);
    program(comb("SWAP", [p.term]), &p.data)
}

/// A witness for `x` from one for `⟨x, y⟩`.
pub fn proj_witness(w: &BitString) -> BitString {
    let p = Parts::of(w);
    program(comb("PROJ", [p.term]), &p.data)
}

/// A witness for `x` given `⟨z, e⟩` from one for `x` given `z`.
pub fn ignore_witness(w: &BitString) -> BitString {
    let p = Parts::of(w);
    program(comb("IGNORE", [p.term]), &p.data)
}

/// A witness for `⟨x, y⟩` given `z`, from a witness for `x` given `z`, the
/// number `k` and a witness for `y` given `⟨x, ⟨bin k, z⟩⟩`.
pub fn chain_witness(wx: &BitString, k: u64, wy: &BitString) -> BitString {
    let (a, b) = share_stream(&Parts::of(wx), &Parts::of(wy));
    let k_lit = literal(&BitString::from_uint(k));
    program(
        comb("CHAIN", [a.term.clone(), k_lit, b.term.clone()]),
        data_of(&a, &b),
    )
}

/// Cost of the literal for `k` inside a [`chain_witness`].
pub fn chain_literal_cost(k: u64) -> usize {
    combinators::literal_len(&BitString::from_uint(k))
}

/// A program printing the program `p`: the print combinator reads `p`'s
/// code from the data, echoing it, then echoes `p`'s own data.
pub fn print_witness(p: &BitString) -> BitString {
    let parts = Parts::of(p);
    if parts.reads_data() {
        program(comb("PRINTK", [numeral(parts.data.len())]), p)
    } else {
        encode_term(&combinators::get("PRINT")).concat(p)
    }
}

/// `|print_witness(p)| − |p|`.
pub fn print_overhead(data_len: usize) -> usize {
    if data_len == 0 {
        combinators::size("PRINT")
    } else {
        applied_cost("PRINTK", 1) + combinators::numeral_len(data_len)
    }
}
