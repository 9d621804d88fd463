//! A desk-scale workbench for algorithmic-information arguments about
//! model simplicity, built on a binary lambda calculus reference machine.

pub mod machine;
pub mod combinators;
pub mod enumerator;
pub mod complexity;
pub mod predictor;
pub mod ledger;
pub mod verify;
