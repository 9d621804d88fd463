//! A persistent store of the best known witness per `(x, z)`.
//!
//! CSV columns: `x,z,value_bits,status,gas,max_len,witness_hex`. The
//! witness is packed MSB-first into hex and `value_bits` long. Every
//! witness is re-run on load; records that fail are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::search::{ComplexityEstimate, EstimateStatus};
use crate::machine::io::run;
use crate::machine::{BitString, Gas};

pub const CORPUS_HEADER: &str = "x,z,value_bits,status,gas,max_len,witness_hex";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub value_bits: usize,
    pub status: EstimateStatus,
    pub gas: Gas,
    pub max_len: usize,
    pub witness: BitString,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("corpus line {line}: witness does not print {x} given {z}")]
    BadWitness { line: usize, x: String, z: String },
    #[error("corpus i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WitnessCorpus {
    entries: BTreeMap<(BitString, BitString), CorpusEntry>,
}

impl WitnessCorpus {
    pub fn get(&self, x: &BitString, z: &BitString) -> Option<&CorpusEntry> {
        self.entries.get(&(x.clone(), z.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps `e` if it beats the stored witness for its subject.
    pub fn offer(&mut self, e: &ComplexityEstimate) {
        let key = (e.subject.clone(), e.condition.clone());
        let new = CorpusEntry {
            value_bits: e.value_bits,
            status: e.status,
            gas: e.gas,
            max_len: e.max_len,
            witness: e.witness.clone(),
        };
        match self.entries.get_mut(&key) {
            Some(old) if (old.witness.len(), &old.witness) <= (new.witness.len(), &new.witness) => {
                // Same witness, wider search: keep the stronger claim.
                if old.witness == new.witness && new.max_len > old.max_len {
                    *old = new;
                }
            }
            Some(old) => *old = new,
            None => {
                self.entries.insert(key, new);
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CORPUS_HEADER}\n");
        for ((x, z), e) in &self.entries {
            s += &format!(
                "{x},{z},{},{},{},{},{}\n",
                e.value_bits,
                e.status,
                e.gas.max_steps,
                e.max_len,
                e.witness.to_hex()
            );
        }
        s
    }

    /// Parses and verifies a corpus.
    pub fn from_csv(text: &str) -> Result<WitnessCorpus, CorpusError> {
        let mut corpus = WitnessCorpus::default();
        for (i, row) in text.lines().enumerate() {
            let line = i + 1;
            if i == 0 && row.trim() == CORPUS_HEADER {
                continue;
            }
            if row.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| CorpusError::Format {
                line,
                reason: reason.to_string(),
            };
            let f: Vec<&str> = row.split(',').collect();
            if f.len() != 7 {
                return Err(bad("expected 7 fields"));
            }
            let x: BitString = f[0].parse().map_err(|_| bad("x is not a bit string"))?;
            let z: BitString = f[1].parse().map_err(|_| bad("z is not a bit string"))?;
            let value_bits: usize = f[2].parse().map_err(|_| bad("bad value_bits"))?;
            let status: EstimateStatus = f[3].parse().map_err(|e: String| bad(&e))?;
            let gas = Gas::new(f[4].parse().map_err(|_| bad("bad gas"))?);
            let max_len: usize = f[5].parse().map_err(|_| bad("bad max_len"))?;
            let witness =
                BitString::from_hex(f[6], value_bits).ok_or_else(|| bad("bad witness_hex"))?;
            let out = run(&witness, &z, gas);
            if !out.is_valid() || out.output.as_ref() != Some(&x) {
                return Err(CorpusError::BadWitness {
                    line,
                    x: x.to_string(),
                    z: z.to_string(),
                });
            }
            corpus.offer(&ComplexityEstimate {
                subject: x,
                condition: z,
                value_bits,
                witness,
                status,
                gas,
                max_len,
                method: "corpus".into(),
            });
        }
        Ok(corpus)
    }

    pub fn load(path: &Path) -> Result<WitnessCorpus, CorpusError> {
        WitnessCorpus::from_csv(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_csv())?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    /// Merges another corpus, keeping the better entry per subject.
    pub fn merge(&mut self, other: &WitnessCorpus) {
        for ((x, z), e) in &other.entries {
            self.offer(&ComplexityEstimate {
                subject: x.clone(),
                condition: z.clone(),
                value_bits: e.value_bits,
                witness: e.witness.clone(),
                status: e.status,
                gas: e.gas,
                max_len: e.max_len,
                method: "corpus".into(),
            });
        }
    }
}
