//! Exploration of program space: code enumeration, exact vote-set
//! censuses, the padded-program family and Monte Carlo sampling.

pub mod codes;

pub use codes::{codes_of_len, enumerate_codes, enumerate_codes_unchecked};
pub mod census;

pub use census::{
    vote_census, valid_programs, CensusConfig, CensusError, OutputKey, ProgramCensus, VoteCensus,
};
pub mod padded;

pub use padded::{build_padded, pad_reader, PaddedError, PaddedProgram};
pub mod sampling;

pub use sampling::{monte_carlo_m, MonteCarloEstimate};
