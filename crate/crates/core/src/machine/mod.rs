//! The reference machine: term codec, normal-order evaluation and the
//! self-delimiting program convention every other module builds on.

pub mod bits;
pub mod divergence;
pub mod eval;
pub mod io;
pub mod syntax;
pub mod term;

pub use bits::BitString;
pub use eval::{reduce, BitSource, FnSource, Gas, NoInput, ReduceError};
pub use io::{
    bits_to_list, decode_pair, encode_pair, list_to_bits, run, run_demand, split_program,
    RunOutcome, RunStatus, Runner,
};
pub use syntax::{parse_term, parse_with, Library};
pub use term::{decode_term, encode_term, Term};
