//! Exhaustive search for short programs and the `K'` estimate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::constructions::{
    copy_witness, echo_witness, extraction_witnesses, literal_witness,
};
use super::corpus::WitnessCorpus;
use crate::enumerator::census::{valid_programs, CensusConfig, CensusError};
use crate::machine::io::run;
use crate::machine::{BitString, Gas};

/// Default search length; about half a second at gas 10^4.
pub const DEFAULT_MAX_LEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateStatus {
    /// Found by exhaustive search: no shorter valid program for the subject
    /// halts within the gas among all programs of length ≤ the bound.
    ExhaustiveUpToL(usize),
    HeuristicUpperBound,
}

impl fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimateStatus::ExhaustiveUpToL(l) => write!(f, "exhaustive<={l}"),
            EstimateStatus::HeuristicUpperBound => f.write_str("heuristic"),
        }
    }
}

impl std::str::FromStr for EstimateStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "heuristic" {
            return Ok(EstimateStatus::HeuristicUpperBound);
        }
        s.strip_prefix("exhaustive<=")
            .and_then(|l| l.parse().ok())
            .map(EstimateStatus::ExhaustiveUpToL)
            .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

/// `K'(x|z)`: the length of the shortest known valid program for `x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub subject: BitString,
    pub condition: BitString,
    pub value_bits: usize,
    pub witness: BitString,
    pub status: EstimateStatus,
    pub gas: Gas,
    /// Length up to which exhaustive search was run.
    pub max_len: usize,
    /// Where the witness came from: `search`, `corpus` or a construction.
    pub method: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("no valid program found up to {max_len} bits at gas {gas}")]
    NotFound { max_len: usize, gas: u64 },
    #[error("search failed: {0}")]
    Census(String),
}

impl From<CensusError> for SearchError {
    fn from(e: CensusError) -> Self {
        SearchError::Census(e.to_string())
    }
}

/// Shortest, then lexicographically first.
fn better(a: &BitString, b: &BitString) -> bool {
    (a.len(), a) < (b.len(), b)
}

/// The shortest valid program per output, among all programs of length
/// ≤ `max_len` given `z`.
#[derive(Clone, Debug)]
pub struct SearchIndex {
    pub z: BitString,
    pub max_len: usize,
    pub gas: Gas,
    pub best: BTreeMap<BitString, BitString>,
    /// Prefixes left unresolved at this gas.
    pub unresolved: usize,
}

impl SearchIndex {
    pub fn build(z: &BitString, max_len: usize, gas: Gas) -> Result<SearchIndex, SearchError> {
        let config = CensusConfig {
            ceiling: max_len.max(crate::enumerator::census::DEFAULT_CEILING),
            ..CensusConfig::with_gas(gas)
        };
        let pc = valid_programs(max_len, z, &config)?;
        let mut best: BTreeMap<BitString, BitString> = BTreeMap::new();
        for v in pc.valid {
            match best.get(&v.output) {
                Some(b) if !better(&v.program, b) => {}
                _ => {
                    best.insert(v.output, v.program);
                }
            }
        }
        Ok(SearchIndex {
            z: z.clone(),
            max_len,
            gas,
            best,
            unresolved: pc.unresolved.len(),
        })
    }

    pub fn lookup(&self, x: &BitString) -> Option<&BitString> {
        self.best.get(x)
    }
}

/// Exhaustive `K'(x|z)` up to `max_len`.
pub fn k_prime(
    x: &BitString,
    z: &BitString,
    max_len: usize,
    gas: Gas,
) -> Result<ComplexityEstimate, SearchError> {
    let index = SearchIndex::build(z, max_len, gas)?;
    index
        .lookup(x)
        .map(|w| ComplexityEstimate {
            subject: x.clone(),
            condition: z.clone(),
            value_bits: w.len(),
            witness: w.clone(),
            status: EstimateStatus::ExhaustiveUpToL(max_len),
            gas,
            max_len,
            method: "search".into(),
        })
        .ok_or(SearchError::NotFound {
            max_len,
            gas: gas.max_steps,
        })
}

/// The anytime `K'` oracle: exhaustive search indices cached per
/// condition, the base constructions, and a witness corpus. Estimates
/// found here are added to the corpus, so repeated queries and later runs
/// loading the same corpus never get worse.
pub struct KPrime {
    pub max_len: usize,
    pub gas: Gas,
    indices: HashMap<BitString, Arc<SearchIndex>>,
    pub corpus: WitnessCorpus,
}

impl KPrime {
    pub fn new(max_len: usize, gas: Gas) -> KPrime {
        KPrime {
            max_len,
            gas,
            indices: HashMap::new(),
            corpus: WitnessCorpus::default(),
        }
    }

    pub fn with_corpus(max_len: usize, gas: Gas, corpus: WitnessCorpus) -> KPrime {
        KPrime {
            corpus,
            ..KPrime::new(max_len, gas)
        }
    }

    pub fn index(&mut self, z: &BitString) -> Result<Arc<SearchIndex>, SearchError> {
        if let Some(i) = self.indices.get(z) {
            return Ok(i.clone());
        }
        let i = Arc::new(SearchIndex::build(z, self.max_len, self.gas)?);
        self.indices.insert(z.clone(), i.clone());
        Ok(i)
    }

    /// Candidate witnesses from every source, unverified.
    fn candidates(
        &mut self,
        x: &BitString,
        z: &BitString,
    ) -> Result<Vec<(String, BitString, EstimateStatus)>, SearchError> {
        let mut c = Vec::new();
        let index = self.index(z)?;
        if let Some(w) = index.lookup(x) {
            c.push((
                "search".to_string(),
                w.clone(),
                EstimateStatus::ExhaustiveUpToL(self.max_len),
            ));
        }
        let h = EstimateStatus::HeuristicUpperBound;
        c.push(("literal".into(), literal_witness(x), h));
        c.push(("echo".into(), echo_witness(x), h));
        if x == z {
            c.push(("copy".into(), copy_witness(), h));
        }
        for (name, w) in extraction_witnesses(x, z) {
            c.push((format!("extract:{name}"), w, h));
        }
        if let Some(e) = self.corpus.get(x, z) {
            c.push(("corpus".into(), e.witness.clone(), e.status));
        }
        Ok(c)
    }

    /// The best known estimate of `K'(x|z)`, also offering `extra`
    /// witnesses (checked before use).
    pub fn estimate_with(
        &mut self,
        x: &BitString,
        z: &BitString,
        extra: &[(&str, BitString)],
    ) -> Result<ComplexityEstimate, SearchError> {
        let mut cands = self.candidates(x, z)?;
        for (name, w) in extra {
            cands.push((name.to_string(), w.clone(), EstimateStatus::HeuristicUpperBound));
        }
        let mut best: Option<(String, BitString, EstimateStatus)> = None;
        for (name, w, status) in cands {
            if let Some((_, b, _)) = &best {
                if !better(&w, b) {
                    continue;
                }
            }
            let out = run(&w, z, self.gas);
            if out.is_valid() && out.output.as_ref() == Some(x) {
                best = Some((name, w, status));
            }
        }
        let (method, witness, mut status) = best.expect("the literal witness is always valid");
        // Search covers every program up to max_len, so a witness that
        // beat it is at least as short as anything it could have found.
        if status == EstimateStatus::HeuristicUpperBound && witness.len() <= self.max_len {
            status = EstimateStatus::ExhaustiveUpToL(self.max_len);
        }
        let est = ComplexityEstimate {
            subject: x.clone(),
            condition: z.clone(),
            value_bits: witness.len(),
            witness,
            status,
            gas: self.gas,
            max_len: self.max_len,
            method,
        };
        self.corpus.offer(&est);
        Ok(est)
    }

    pub fn estimate(&mut self, x: &BitString, z: &BitString) -> Result<ComplexityEstimate, SearchError> {
        self.estimate_with(x, z, &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    const GAS: Gas = Gas { max_steps: 5_000 };

    #[test]
    fn smallest_programs_given_empty_condition() {
        // λ1 is malformed under the I/O convention; λλ2 copies z = ε.
        let e = k_prime(&bs(""), &bs(""), 12, GAS).unwrap();
        assert_eq!((e.value_bits, e.witness.to_string()), (7, "0000110".to_string()));
        let e = k_prime(&bs("0"), &bs(""), 20, GAS).unwrap();
        assert_eq!(e.value_bits, 20);
        assert!(matches!(
            k_prime(&bs("1"), &bs(""), 20, GAS),
            Err(SearchError::NotFound { max_len: 20, .. })
        ));
    }

    #[test]
    fn search_agrees_with_naive_oracle() {
        // All bit strings up to 14 bits through `run`, filtered for validity.
        let mut naive: BTreeMap<BitString, BitString> = BTreeMap::new();
        for len in 0..=14 {
            for p in BitString::all_of_len(len) {
                let out = run(&p, &bs(""), GAS);
                if out.is_valid() {
                    naive.entry(out.output.unwrap()).or_insert(p);
                }
            }
        }
        let index = SearchIndex::build(&bs(""), 14, GAS).unwrap();
        assert_eq!(index.best, naive);
    }

    #[test]
    fn estimates_are_anytime() {
        let mut kp = KPrime::new(12, GAS);
        let short = kp.estimate(&bs("0"), &bs("")).unwrap();
        assert_eq!(short.method, "literal");
        let mut kp2 = KPrime::with_corpus(20, GAS, kp.corpus.clone());
        let long = kp2.estimate(&bs("0"), &bs("")).unwrap();
        assert!(long.value_bits <= short.value_bits);
        assert_eq!(long.value_bits, 20);
        // A later, smaller search keeps the corpus result.
        let mut kp3 = KPrime::with_corpus(8, GAS, kp2.corpus.clone());
        assert_eq!(kp3.estimate(&bs("0"), &bs("")).unwrap().value_bits, 20);
    }

    #[test]
    fn status_round_trips() {
        for s in [EstimateStatus::ExhaustiveUpToL(20), EstimateStatus::HeuristicUpperBound] {
            assert_eq!(s.to_string().parse::<EstimateStatus>().unwrap(), s);
        }
    }
}
