//! Monte Carlo estimates of the universal distribution `m(x)`.
//!
//! A trial feeds fair coin flips to the machine: first as many as it takes
//! to read one complete term code, then one per demanded data bit. Every
//! trial owns a ChaCha stream selected by its index, so results do not
//! depend on how trials are spread over threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::census::OutputKey;
use crate::machine::eval::FnSource;
use crate::machine::io::{RunStatus, Runner};
use crate::machine::term::{decode_prefix, Term};
use crate::machine::{BitString, Gas};

/// Codes longer than this count as unparsed trials.
pub const MAX_CODE_BITS: usize = 4_096;
const BATCH: u64 = 4_096;

/// The coin-flip stream of trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Reads one term code from coin flips. `None` when the code is open or
/// longer than [`MAX_CODE_BITS`].
pub fn draw_code<R: Rng>(rng: &mut R) -> Option<(Term, usize)> {
    let mut bits = Vec::new();
    // Binder depth of each pending subterm slot.
    let mut slots = vec![0u32];
    let mut open = false;
    while let Some(depth) = slots.pop() {
        if bits.len() >= MAX_CODE_BITS {
            return None;
        }
        let b = rng.gen::<bool>();
        bits.push(b);
        if b {
            let mut i = 1u32;
            while rng.gen::<bool>() {
                bits.push(true);
                i += 1;
                if bits.len() >= MAX_CODE_BITS {
                    return None;
                }
            }
            bits.push(false);
            open |= i > depth;
        } else {
            let b2 = rng.gen::<bool>();
            bits.push(b2);
            if b2 {
                slots.push(depth);
                slots.push(depth);
            } else {
                slots.push(depth + 1);
            }
        }
    }
    if open {
        return None;
    }
    let (t, n) = decode_prefix(&bits).expect("complete code");
    debug_assert_eq!(n, bits.len());
    Some((t, n))
}

/// Outcome of one coin-flip trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trial {
    Halted { output: BitString, program_len: usize },
    Unparsed,
    OutOfGas,
    Malformed,
}

/// Runs `code` with data drawn from `rng` on demand.
pub fn coin_run<R: Rng>(code: &Term, z: &BitString, rng: &mut R, gas: Gas) -> (Trial, usize) {
    let mut runner = Runner::new(code, z);
    let mut src = FnSource(|_| Some(rng.gen::<bool>()));
    let out = runner.run_with(&mut src, gas);
    let trial = match out.status {
        RunStatus::Halted => Trial::Halted {
            output: out.output.expect("halted runs carry output"),
            program_len: out.bits_read,
        },
        RunStatus::OutOfGas => Trial::OutOfGas,
        _ => Trial::Malformed,
    };
    (trial, out.bits_read)
}

/// One full trial: draw a code, then run it on coin flips.
pub fn sample_trial(z: &BitString, gas: Gas, seed: u64, index: u64) -> Trial {
    let mut rng = trial_rng(seed, index);
    let Some((code, code_len)) = draw_code(&mut rng) else {
        return Trial::Unparsed;
    };
    match coin_run(&code, z, &mut rng, gas).0 {
        Trial::Halted {
            output,
            program_len,
        } => Trial::Halted {
            output,
            program_len: program_len + code_len,
        },
        t => t,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub samples: u64,
    pub seed: u64,
    pub gas: Gas,
    pub hits: BTreeMap<OutputKey, u64>,
    pub unparsed: u64,
    pub out_of_gas: u64,
    pub malformed: u64,
}

impl MonteCarloEstimate {
    pub fn halted(&self) -> u64 {
        self.hits.values().sum()
    }

    pub fn m_hat(&self, x: &BitString) -> f64 {
        self.hits_of(x) as f64 / self.samples as f64
    }

    pub fn hits_of(&self, x: &BitString) -> u64 {
        self.hits.get(&OutputKey::Bits(x.clone())).copied().unwrap_or(0)
    }

    /// Binomial standard error of [`Self::m_hat`].
    pub fn stderr(&self, x: &BitString) -> f64 {
        let p = self.m_hat(x);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    pub fn total_mass(&self) -> f64 {
        self.halted() as f64 / self.samples as f64
    }

    /// CSV rows `x_as_bits,hits,m_hat,stderr,samples,gas,seed`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x_as_bits,hits,m_hat,stderr,samples,gas,seed\n");
        for (k, &h) in &self.hits {
            let p = h as f64 / self.samples as f64;
            let se = (p * (1.0 - p) / self.samples as f64).sqrt();
            s.push_str(&format!(
                "{},{},{:.9},{:.9},{},{},{}\n",
                k, h, p, se, self.samples, self.gas.max_steps, self.seed
            ));
        }
        s
    }
}

/// Estimates `m(x|z)` for every output from `samples` coin-flip trials.
/// Panics if `samples` is zero.
pub fn monte_carlo_m(
    samples: u64,
    z: &BitString,
    gas: Gas,
    seed: u64,
    max_output_bits: usize,
) -> MonteCarloEstimate {
    assert!(samples >= 1, "at least one sample is required");
    let mut est = MonteCarloEstimate {
        samples,
        seed,
        gas,
        hits: BTreeMap::new(),
        unparsed: 0,
        out_of_gas: 0,
        malformed: 0,
    };
    let batches: Vec<(u64, u64)> = (0..samples)
        .step_by(BATCH as usize)
        .map(|s| (s, (s + BATCH).min(samples)))
        .collect();
    let parts: Vec<MonteCarloEstimate> = batches
        .par_iter()
        .map(|&(lo, hi)| {
            let mut part = MonteCarloEstimate {
                hits: BTreeMap::new(),
                ..est.clone()
            };
            for i in lo..hi {
                match sample_trial(z, gas, seed, i) {
                    Trial::Halted { output, .. } => {
                        let key = if output.len() > max_output_bits {
                            OutputKey::Overflow
                        } else {
                            OutputKey::Bits(output)
                        };
                        *part.hits.entry(key).or_default() += 1;
                    }
                    Trial::Unparsed => part.unparsed += 1,
                    Trial::OutOfGas => part.out_of_gas += 1,
                    Trial::Malformed => part.malformed += 1,
                }
            }
            part
        })
        .collect();
    for p in parts {
        for (k, v) in p.hits {
            *est.hits.entry(k).or_default() += v;
        }
        est.unparsed += p.unparsed;
        est.out_of_gas += p.out_of_gas;
        est.malformed += p.malformed;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::io::run;
    use crate::machine::term::encode_term;

    #[test]
    fn trials_are_reproducible_and_valid() {
        let z = BitString::new();
        let mut halted = 0;
        for i in 0..300 {
            let a = sample_trial(&z, Gas::new(2_000), 7, i);
            assert_eq!(a, sample_trial(&z, Gas::new(2_000), 7, i));
            if let Trial::Halted {
                output,
                program_len,
            } = a
            {
                halted += 1;
                // Recover the program bits from the same stream.
                let mut rng = trial_rng(7, i);
                let (code, _) = draw_code(&mut rng).unwrap();
                let mut p = encode_term(&code);
                while p.len() < program_len {
                    p.push(rng.gen());
                }
                let out = run(&p, &z, Gas::new(2_000));
                assert!(out.is_valid());
                assert_eq!(out.output, Some(output));
            }
        }
        assert!(halted > 0);
    }

    #[test]
    fn mass_is_at_most_one() {
        let est = monte_carlo_m(2_000, &BitString::new(), Gas::new(2_000), 1, 64);
        let total: u64 = est.halted() + est.unparsed + est.out_of_gas + est.malformed;
        assert_eq!(total, 2_000);
        assert!(est.total_mass() <= 1.0);
    }

    #[test]
    #[should_panic]
    fn zero_samples_rejected() {
        monte_carlo_m(0, &BitString::new(), Gas::new(10), 0, 64);
    }
}
