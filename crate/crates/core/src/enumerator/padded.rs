//! The padded-program family: `r·χ·η·g` outputs `x` for every pad `g`.
//!
//! `r` is the application prefix `01 01` followed by the pad-reader
//! combinator, which takes a witness term χ and a Church numeral η, skips
//! η data bits, and then runs χ on the rest of the data. Any data χ
//! itself reads therefore comes after the pad.

use thiserror::Error;

use crate::combinators::{self, numeral};
use crate::machine::io::{run, split_program};
use crate::machine::term::encode_term;
use crate::machine::{BitString, Gas};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaddedError {
    #[error("no witness program for the subject is known")]
    WitnessMissing,
    #[error("the supplied witness {0} is not a valid program for the subject")]
    WitnessInvalid(BitString),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaddedProgram {
    pub r: BitString,
    /// Code part of the witness χ.
    pub chi: BitString,
    /// Data part of the witness χ, placed after the pad.
    pub chi_data: BitString,
    pub eta: BitString,
    pub pad_len: usize,
}

impl PaddedProgram {
    /// Length of every program in the family.
    pub fn n(&self) -> usize {
        self.r.len() + self.chi.len() + self.eta.len() + self.pad_len + self.chi_data.len()
    }

    /// The program with pad `g`.
    pub fn program(&self, g: &BitString) -> BitString {
        assert_eq!(g.len(), self.pad_len, "pad has the wrong length");
        let mut p = self.r.concat(&self.chi);
        p.extend_from(&self.eta);
        p.extend_from(g);
        p.extend_from(&self.chi_data);
        p
    }

    /// All `2^pad_len` programs, pads in lexicographic order.
    pub fn programs(&self) -> impl Iterator<Item = BitString> + '_ {
        BitString::all_of_len(self.pad_len).map(|g| self.program(&g))
    }
}

/// The pad-reader prefix `r`.
pub fn pad_reader() -> BitString {
    let mut r: BitString = "0101".parse().expect("literal bits");
    r.extend_from(&encode_term(&combinators::get("PAD")));
    r
}

/// Builds `r·χ·η·g` around `witness`, a valid program for `x` given `z`.
pub fn build_padded(
    x: &BitString,
    z: &BitString,
    pad_len: usize,
    witness: Option<&BitString>,
    gas: Gas,
) -> Result<PaddedProgram, PaddedError> {
    let w = witness.ok_or(PaddedError::WitnessMissing)?;
    let out = run(w, z, gas);
    if !out.is_valid() || out.output.as_ref() != Some(x) {
        return Err(PaddedError::WitnessInvalid(w.clone()));
    }
    let (_, code_len) = split_program(w).map_err(|_| PaddedError::WitnessInvalid(w.clone()))?;
    Ok(PaddedProgram {
        r: pad_reader(),
        chi: w.slice(0, code_len),
        chi_data: w.slice(code_len, w.len()),
        eta: encode_term(&numeral(pad_len)),
        pad_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::io::run_demand;
    use crate::machine::syntax::parse_term;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn zero_witness() -> BitString {
        // Given z = ε, cons z z is the list "0".
        encode_term(&parse_term(r"\z d. \f. f z z").unwrap())
    }

    #[test]
    fn every_pad_gives_a_valid_program() {
        let x = bs("0");
        let z = bs("");
        for pad_len in 0..=3 {
            let pp = build_padded(&x, &z, pad_len, Some(&zero_witness()), Gas::default()).unwrap();
            let progs: Vec<_> = pp.programs().collect();
            assert_eq!(progs.len(), 1 << pad_len);
            for p in &progs {
                assert_eq!(p.len(), pp.n());
                let out = run(p, &z, Gas::default());
                assert!(out.is_valid(), "{p}");
                assert_eq!(out.output, Some(x.clone()));
            }
        }
    }

    #[test]
    fn pad_reader_demands_exactly_the_pad() {
        let pp = build_padded(&bs("0"), &bs(""), 3, Some(&zero_witness()), Gas::default()).unwrap();
        let mut code = pp.r.concat(&pp.chi);
        code.extend_from(&pp.eta);
        for bits in [[false; 3], [true, false, true]] {
            let mut src: &[bool] = &bits;
            let (out, demanded) = run_demand(&code, &bs(""), &mut src, Gas::default());
            assert_eq!(out.status, crate::machine::RunStatus::Halted);
            assert_eq!(demanded.len(), 3);
        }
    }

    #[test]
    fn witness_data_follows_the_pad() {
        // Echoes one data bit.
        let w = encode_term(&parse_term(r"\z d. d (\b t. \f. f b z)").unwrap()).concat(&bs("1"));
        let pp = build_padded(&bs("1"), &bs(""), 2, Some(&w), Gas::default()).unwrap();
        assert_eq!(pp.chi_data, bs("1"));
        for p in pp.programs() {
            let out = run(&p, &bs(""), Gas::default());
            assert!(out.is_valid());
            assert_eq!(out.output, Some(bs("1")));
        }
    }

    #[test]
    fn missing_or_wrong_witness() {
        let z = bs("");
        assert_eq!(
            build_padded(&bs("0"), &z, 1, None, Gas::default()),
            Err(PaddedError::WitnessMissing)
        );
        assert!(matches!(
            build_padded(&bs("1"), &z, 1, Some(&zero_witness()), Gas::default()),
            Err(PaddedError::WitnessInvalid(_))
        ));
    }
}
