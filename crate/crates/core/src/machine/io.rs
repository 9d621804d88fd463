//! The program I/O convention of the reference machine.
//!
//! A program is `code ++ data`. `code` is the binary code of a closed term
//! `T`; the machine evaluates `T z D`, where `z` is the auxiliary input as
//! a strict list and `D` is the data stream, whose cells are produced only
//! when forced. The program halts with output `x` when `T z D` reaches a
//! normal form that is a bit list spelling `x`. It is *valid* when it
//! halted having forced exactly the data bits it was given.
//!
//! Encodings: `false = λλ1` is bit 0, `true = λλ2` is bit 1, `nil = λλ1`,
//! `cons h t = λf. f h t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bits::BitString;
use super::eval::{BitSource, Gas, Machine, Stop};
use super::term::{decode_term, DecodeError, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    Halted,
    OutOfGas,
    ParseError,
    Malformed,
    NeedsMoreInput,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: RunStatus,
    /// The decoded output, present iff `status == Halted`.
    pub output: Option<BitString>,
    /// Data bits forced by the computation.
    pub bits_read: usize,
    /// Data bits that were supplied to the run.
    pub data_len: usize,
    pub steps: u64,
}

impl RunOutcome {
    /// Halted having read all of the supplied data and nothing beyond it.
    pub fn is_valid(&self) -> bool {
        self.status == RunStatus::Halted && self.bits_read == self.data_len
    }

    fn parse_error() -> RunOutcome {
        RunOutcome {
            status: RunStatus::ParseError,
            output: None,
            bits_read: 0,
            data_len: 0,
            steps: 0,
        }
    }
}

pub fn bool_term(b: bool) -> Term {
    Term::lams(2, Term::var(if b { 2 } else { 1 }))
}

pub fn nil_term() -> Term {
    bool_term(false)
}

pub fn cons_term(h: Term, t: Term) -> Term {
    Term::lam(Term::apps(Term::var(1), [h, t]))
}

/// The strict list of Church booleans spelling `b`; ε maps to nil.
pub fn bits_to_list(b: &BitString) -> Term {
    b.bits()
        .iter()
        .rev()
        .fold(nil_term(), |acc, &bit| cons_term(bool_term(bit), acc))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ListError {
    #[error("term is not a list of booleans")]
    NotAList,
}

/// Inverse of [`bits_to_list`] on normal forms.
pub fn list_to_bits(t: &Term) -> Result<BitString, ListError> {
    fn as_bool(t: &Term) -> Option<bool> {
        match t {
            Term::Lam(a) => match a.as_ref() {
                Term::Lam(b) => match b.as_ref() {
                    Term::Var(1) => Some(false),
                    Term::Var(2) => Some(true),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }
    let mut out = BitString::new();
    let mut cur = t;
    loop {
        let Term::Lam(inner) = cur else {
            return Err(ListError::NotAList);
        };
        match inner.as_ref() {
            Term::Lam(v) if **v == Term::Var(1) => return Ok(out),
            Term::App(fh, tail) => match fh.as_ref() {
                Term::App(f, h) if **f == Term::Var(1) => {
                    out.push(as_bool(h).ok_or(ListError::NotAList)?);
                    cur = tail;
                }
                _ => return Err(ListError::NotAList),
            },
            _ => return Err(ListError::NotAList),
        }
    }
}

/// `⟨x, y⟩ = 0^|x| 1 x y`: a unary length header closed by a 1, then both
/// strings. The header makes the split point recoverable.
pub fn encode_pair(x: &BitString, y: &BitString) -> BitString {
    let mut out = BitString::new();
    for _ in 0..x.len() {
        out.push(false);
    }
    out.push(true);
    out.extend_from(x);
    out.extend_from(y);
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairError {
    #[error("pair header has no terminating 1")]
    MissingTerminator,
    #[error("pair body shorter than its header announces")]
    Truncated,
}

pub fn decode_pair(b: &BitString) -> Result<(BitString, BitString), PairError> {
    let bits = b.bits();
    let n = bits
        .iter()
        .position(|&bit| bit)
        .ok_or(PairError::MissingTerminator)?;
    let start = n + 1;
    if bits.len() < start + n {
        return Err(PairError::Truncated);
    }
    Ok((b.slice(start, start + n), b.slice(start + n, b.len())))
}

/// `⟨a, b, c⟩ = ⟨a, ⟨b, c⟩⟩`.
pub fn encode_triple(a: &BitString, b: &BitString, c: &BitString) -> BitString {
    encode_pair(a, &encode_pair(b, c))
}

/// Why a bit string could not be split into a closed code and data.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("code is not a closed term")]
    Open,
}

/// Splits `p` into its code term and the number of code bits.
pub fn split_program(p: &BitString) -> Result<(Term, usize), CodeError> {
    let (t, n) = decode_term(p)?;
    if !t.is_closed() {
        return Err(CodeError::Open);
    }
    Ok((t, n))
}

/// A loaded program term and auxiliary input, reusable across many data
/// streams. This is the hot path for enumeration.
pub struct Runner {
    machine: Machine,
}

impl Runner {
    pub fn new(code: &Term, z: &BitString) -> Runner {
        let mut machine = Machine::new();
        machine.load_program(code, &bits_to_list(z));
        Runner { machine }
    }

    /// Runs against `src`. `data_len` is recorded in the outcome as the
    /// amount of supplied data (use the demand count for open-ended sources).
    pub fn run_with<S: BitSource>(&mut self, src: &mut S, gas: Gas) -> RunOutcome {
        let exec = self.machine.execute(src, gas);
        let bits_read = self.machine.demanded().len();
        let (status, output) = match exec.result {
            Ok(nf) => match self.machine.nf_to_bits(nf) {
                Some(x) => (RunStatus::Halted, Some(x)),
                None => (RunStatus::Malformed, None),
            },
            Err(Stop::OutOfGas) | Err(Stop::TooBig) => (RunStatus::OutOfGas, None),
            Err(Stop::NeedsInput) => (RunStatus::NeedsMoreInput, None),
        };
        RunOutcome {
            status,
            output,
            bits_read,
            data_len: bits_read,
            steps: exec.steps,
        }
    }

    pub fn run_data(&mut self, data: &[bool], gas: Gas) -> RunOutcome {
        let mut src = data;
        let mut out = self.run_with(&mut src, gas);
        out.data_len = data.len();
        out
    }

    pub fn demanded(&self) -> &[bool] {
        self.machine.demanded()
    }
}

/// Executes program `p` with auxiliary input `z`.
pub fn run(p: &BitString, z: &BitString, gas: Gas) -> RunOutcome {
    let Ok((code, n)) = split_program(p) else {
        return RunOutcome::parse_error();
    };
    Runner::new(&code, z).run_data(&p.bits()[n..], gas)
}

/// Executes a code with data drawn from `oracle` exactly when forced.
/// Returns the outcome and the demanded bits, in order.
pub fn run_demand<S: BitSource>(
    code: &BitString,
    z: &BitString,
    oracle: &mut S,
    gas: Gas,
) -> (RunOutcome, BitString) {
    let Ok((term, n)) = split_program(code) else {
        return (RunOutcome::parse_error(), BitString::new());
    };
    if n != code.len() {
        return (RunOutcome::parse_error(), BitString::new());
    }
    let mut runner = Runner::new(&term, z);
    let out = runner.run_with(oracle, gas);
    let demanded = BitString::from_bits(runner.demanded().to_vec());
    (out, demanded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::syntax::parse_term;
    use crate::machine::term::encode_term;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn code(src: &str) -> BitString {
        encode_term(&parse_term(src).unwrap())
    }

    #[test]
    fn list_encodings() {
        assert_eq!(bits_to_list(&bs("")), nil_term());
        assert_eq!(
            bits_to_list(&bs("0")),
            cons_term(bool_term(false), nil_term())
        );
        assert_eq!(list_to_bits(&nil_term()), Ok(bs("")));
        assert_eq!(
            list_to_bits(&parse_term("\\ 1").unwrap()),
            Err(ListError::NotAList)
        );
    }

    #[test]
    fn pair_golden_vectors() {
        assert_eq!(encode_pair(&bs(""), &bs("")), bs("1"));
        assert_eq!(encode_pair(&bs("1"), &bs("0")), bs("0110"));
        assert_eq!(encode_pair(&bs("10"), &bs("")), bs("00110"));
        assert_eq!(encode_pair(&bs("011"), &bs("10")), bs("000101110"));
        assert_eq!(decode_pair(&bs("1")), Ok((bs(""), bs(""))));
        assert_eq!(decode_pair(&bs("000")), Err(PairError::MissingTerminator));
        assert_eq!(decode_pair(&bs("0011")), Err(PairError::Truncated));
    }

    #[test]
    fn constant_program_reads_nothing() {
        let p = code("\\z d. \\a b. b");
        let out = run(&p, &bs(""), Gas::default());
        assert_eq!(out.status, RunStatus::Halted);
        assert_eq!(out.output, Some(bs("")));
        assert_eq!(out.bits_read, 0);
        assert!(out.is_valid());

        let mut q = p.clone();
        q.push(true);
        let out = run(&q, &bs(""), Gas::default());
        assert_eq!(out.status, RunStatus::Halted);
        assert_eq!((out.bits_read, out.data_len), (0, 1));
        assert!(!out.is_valid());
    }

    #[test]
    fn copy_program_returns_condition() {
        let p = code("\\z d. z");
        assert_eq!(p.to_string(), "0000110");
        let out = run(&p, &bs("0110"), Gas::default());
        assert_eq!(out.output, Some(bs("0110")));
        assert!(out.is_valid());
    }

    #[test]
    fn echo_one_bit_reads_one_bit() {
        // Output the first data bit as a one-element list.
        let p = code("\\z d. d (\\h t f. f h (\\a b. b))");
        for bit in [false, true] {
            let mut q = p.clone();
            q.push(bit);
            let out = run(&q, &bs(""), Gas::default());
            assert!(out.is_valid(), "{out:?}");
            assert_eq!(out.output, Some(BitString::from_bits(vec![bit])));
        }
        let out = run(&p, &bs(""), Gas::default());
        assert_eq!(out.status, RunStatus::NeedsMoreInput);
    }

    #[test]
    fn streaming_the_whole_input_never_halts() {
        let p = code("\\z d. d");
        let out = run(&p.concat(&bs("0101")), &bs(""), Gas::default());
        assert_eq!(out.status, RunStatus::NeedsMoreInput);
        assert_eq!(out.bits_read, 4);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(run(&bs("00"), &bs(""), Gas::default()).status, RunStatus::ParseError);
        // λ2 is open.
        assert_eq!(run(&bs("00110"), &bs(""), Gas::default()).status, RunStatus::ParseError);
    }

    #[test]
    fn identity_code_is_malformed() {
        let out = run(&bs("0010"), &bs(""), Gas::default());
        assert_eq!(out.status, RunStatus::Malformed);
    }

    #[test]
    fn demand_records_positions() {
        let p = code("\\z d. d (\\h t. t (\\h2 t2 f. f h2 (\\a b. b)))");
        let mut bits = [true, false, true].iter().copied();
        let mut src = crate::machine::eval::FnSource(|_| bits.next());
        let (out, demanded) = run_demand(&p, &bs(""), &mut src, Gas::default());
        assert_eq!(out.status, RunStatus::Halted);
        assert_eq!(out.output, Some(bs("0")));
        assert_eq!(demanded, bs("10"));
    }
}
