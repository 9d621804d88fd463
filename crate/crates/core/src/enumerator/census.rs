//! Exact vote-set censuses by demand-tree exploration.
//!
//! For a closed code `c` and a length `n`, every program of length `n`
//! starting with `c` is `c ++ d` for some data `d` of `n − |c|` bits. The
//! machine decides which bits it reads, so instead of trying all `2^(n−|c|)`
//! data strings we run `c` and branch only when it demands a bit. Each
//! leaf of this tree stands for a block of programs sharing the demanded
//! prefix.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::codes::codes_of_len;
use crate::machine::divergence::certainly_diverges;
use crate::machine::io::{RunStatus, Runner};
use crate::machine::term::{decode_term, Term};
use crate::machine::{BitString, Gas};

/// Default length ceiling for [`vote_census`]; about a second at gas 10^4.
pub const DEFAULT_CEILING: usize = 26;
pub const DEFAULT_NODE_CAP: u64 = 100_000_000;
pub const DEFAULT_MAX_OUTPUT_BITS: usize = 64;
const CHECKPOINT_VERSION: u32 = 1;
// Head steps examined when looking for a loop after running out of gas.
const LOOP_FUEL: usize = 1_000;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("n = {n} is above the census ceiling {ceiling}")]
    AboveCeiling { n: usize, ceiling: usize },
    #[error("node budget exceeded: {nodes} nodes explored, cap {cap}")]
    BudgetExceeded {
        nodes: u64,
        cap: u64,
        checkpoint: Option<PathBuf>,
    },
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
}

/// An output as tallied by a census. Outputs longer than the configured
/// limit share one bucket.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutputKey {
    Bits(BitString),
    Overflow,
}

impl OutputKey {
    pub fn bits(&self) -> Option<&BitString> {
        match self {
            OutputKey::Bits(b) => Some(b),
            OutputKey::Overflow => None,
        }
    }
}

// Shorter outputs first, then lexicographic; the overflow bucket last.
impl Ord for OutputKey {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (OutputKey::Bits(a), OutputKey::Bits(b)) => {
                a.len().cmp(&b.len()).then_with(|| a.cmp(b))
            }
            (OutputKey::Bits(_), OutputKey::Overflow) => Ordering::Less,
            (OutputKey::Overflow, OutputKey::Bits(_)) => Ordering::Greater,
            (OutputKey::Overflow, OutputKey::Overflow) => Ordering::Equal,
        }
    }
}

impl PartialOrd for OutputKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for OutputKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputKey::Bits(b) => write!(f, "{b}"),
            OutputKey::Overflow => f.write_str("overflow"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CensusConfig {
    pub gas: Gas,
    pub node_cap: u64,
    pub ceiling: usize,
    pub max_output_bits: usize,
    /// Where to persist progress. A matching file found here is resumed.
    pub checkpoint: Option<PathBuf>,
    /// Codes per parallel batch; progress is saved between batches.
    pub chunk: usize,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            gas: Gas::new(10_000),
            node_cap: DEFAULT_NODE_CAP,
            ceiling: DEFAULT_CEILING,
            max_output_bits: DEFAULT_MAX_OUTPUT_BITS,
            checkpoint: None,
            chunk: 256,
        }
    }
}

impl CensusConfig {
    pub fn with_gas(gas: Gas) -> Self {
        CensusConfig {
            gas,
            ..Default::default()
        }
    }
}

/// How a demand-tree branch ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeafKind {
    Halted(OutputKey),
    OutOfGas,
    /// Ran out of gas in a provable loop.
    Diverges,
    /// Normal form that is not a bit list.
    Malformed,
    /// Still demanding bits at the depth limit.
    Overrun,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    /// Data bits demanded on the path to this leaf.
    pub data: Vec<bool>,
    pub kind: LeafKind,
}

struct Aborted;

/// Explores the demand tree of `code` to `max_depth` data bits, depth
/// first with the 0-branch first, calling `visit` on every leaf.
/// Every machine run increments `nodes`; exploration stops once it
/// passes `cap`.
#[allow(clippy::too_many_arguments)]
fn explore(
    runner: &mut Runner,
    code: &Term,
    z: &BitString,
    max_depth: usize,
    gas: Gas,
    max_output_bits: usize,
    nodes: &AtomicU64,
    cap: u64,
    visit: &mut impl FnMut(Leaf),
) -> Result<u64, Aborted> {
    let mut stack: Vec<Vec<bool>> = vec![Vec::new()];
    let mut local = 0;
    while let Some(data) = stack.pop() {
        if nodes.fetch_add(1, AtomicOrdering::Relaxed) >= cap {
            return Err(Aborted);
        }
        local += 1;
        let out = runner.run_data(&data, gas);
        let kind = match out.status {
            RunStatus::Halted => {
                let x = out.output.expect("halted runs carry output");
                LeafKind::Halted(if x.len() > max_output_bits {
                    OutputKey::Overflow
                } else {
                    OutputKey::Bits(x)
                })
            }
            RunStatus::OutOfGas if certainly_diverges(code, z, &data, LOOP_FUEL) => {
                LeafKind::Diverges
            }
            RunStatus::OutOfGas => LeafKind::OutOfGas,
            RunStatus::Malformed | RunStatus::ParseError => LeafKind::Malformed,
            RunStatus::NeedsMoreInput if data.len() >= max_depth => LeafKind::Overrun,
            RunStatus::NeedsMoreInput => {
                let mut one = data.clone();
                one.push(true);
                let mut zero = data;
                zero.push(false);
                stack.push(one);
                stack.push(zero);
                continue;
            }
        };
        visit(Leaf { data, kind });
    }
    Ok(local)
}

/// Demand-tree leaves of a single code, for inspection and tests.
pub fn code_leaves(code: &Term, z: &BitString, max_depth: usize, gas: Gas) -> Vec<Leaf> {
    let mut runner = Runner::new(code, z);
    let mut out = Vec::new();
    let nodes = AtomicU64::new(0);
    explore(
        &mut runner,
        code,
        z,
        max_depth,
        gas,
        usize::MAX,
        &nodes,
        u64::MAX,
        &mut |l| out.push(l),
    )
    .unwrap_or_else(|_| unreachable!("no cap"));
    out
}

/// The census of `V_n(x|z)` for every `x` at one `n` and gas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteCensus {
    pub n: usize,
    pub z: BitString,
    pub gas: Gas,
    /// Valid programs of length `n` per output: a certified lower bound.
    #[serde(with = "counts_list")]
    pub counts: BTreeMap<OutputKey, u64>,
    /// Demand-tree leaves that ran out of gas.
    pub unresolved: u64,
    /// Programs of length `n` below those leaves. Adding this to a count
    /// gives an upper bound at this gas.
    #[serde(with = "u128_string")]
    pub unresolved_programs: u128,
    /// Leaves that can produce no valid program of length `n`.
    pub invalid: u64,
    /// Of the invalid leaves, those proven never to halt.
    pub diverged: u64,
    pub leaves: u64,
    /// Machine runs performed.
    pub nodes: u64,
    pub codes: u64,
}

// JSON object keys must be strings, so counts persist as a list of pairs.
mod counts_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::OutputKey;

    pub fn serialize<S: Serializer>(m: &BTreeMap<OutputKey, u64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(&OutputKey, &u64)> = m.iter().collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<OutputKey, u64>, D::Error> {
        let v: Vec<(OutputKey, u64)> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

mod u128_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl VoteCensus {
    fn empty(n: usize, z: &BitString, gas: Gas) -> VoteCensus {
        VoteCensus {
            n,
            z: z.clone(),
            gas,
            counts: BTreeMap::new(),
            unresolved: 0,
            unresolved_programs: 0,
            invalid: 0,
            diverged: 0,
            leaves: 0,
            nodes: 0,
            codes: 0,
        }
    }

    fn merge(&mut self, other: VoteCensus) {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_default() += v;
        }
        self.unresolved += other.unresolved;
        self.unresolved_programs += other.unresolved_programs;
        self.invalid += other.invalid;
        self.diverged += other.diverged;
        self.leaves += other.leaves;
        self.nodes += other.nodes;
        self.codes += other.codes;
    }

    pub fn count(&self, x: &BitString) -> u64 {
        self.counts
            .get(&OutputKey::Bits(x.clone()))
            .copied()
            .unwrap_or(0)
    }

    /// `[lo, hi]` bounds on `|V_n(x|z)|` at this gas.
    pub fn bounds(&self, x: &BitString) -> (u64, u128) {
        let lo = self.count(x);
        (lo, lo as u128 + self.unresolved_programs)
    }

    pub fn fully_resolved(&self) -> bool {
        self.unresolved == 0
    }

    pub fn resolved_total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// CSV rows `n,x_as_bits,count_lo,count_hi,unresolved,gas,seed`, one
    /// per observed output plus one per requested `extra` output.
    pub fn to_csv(&self, seed: u64, extra: &[BitString]) -> String {
        let mut keys: BTreeMap<OutputKey, u64> = self.counts.clone();
        for x in extra {
            keys.entry(OutputKey::Bits(x.clone())).or_insert(0);
        }
        let mut s = String::from("n,x_as_bits,count_lo,count_hi,unresolved,gas,seed\n");
        for (k, lo) in keys {
            let hi = lo as u128 + self.unresolved_programs;
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.n, k, lo, hi, self.unresolved, self.gas.max_steps, seed
            ));
        }
        s
    }

    fn record(&mut self, code_len: usize, leaf: Leaf) {
        self.leaves += 1;
        let len = code_len + leaf.data.len();
        match leaf.kind {
            LeafKind::Halted(x) if len == self.n => *self.counts.entry(x).or_default() += 1,
            LeafKind::OutOfGas => {
                self.unresolved += 1;
                self.unresolved_programs += 1u128 << (self.n - len);
            }
            LeafKind::Diverges => {
                self.invalid += 1;
                self.diverged += 1;
            }
            _ => self.invalid += 1,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    next_code: u64,
    census: VoteCensus,
    max_output_bits: usize,
}

fn load_checkpoint(
    path: &Path,
    n: usize,
    z: &BitString,
    config: &CensusConfig,
) -> Result<Option<Checkpoint>, CensusError> {
    let err = |reason: String| CensusError::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(err(e.to_string())),
    };
    let cp: Checkpoint = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    if cp.version != CHECKPOINT_VERSION {
        return Err(err(format!("unsupported version {}", cp.version)));
    }
    if cp.census.n != n
        || &cp.census.z != z
        || cp.census.gas != config.gas
        || cp.max_output_bits != config.max_output_bits
    {
        return Err(err("checkpoint was written for a different census".into()));
    }
    Ok(Some(cp))
}

fn save_checkpoint(path: &Path, cp: &Checkpoint) -> Result<(), CensusError> {
    let err = |reason: String| CensusError::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let text = serde_json::to_string_pretty(cp).map_err(|e| err(e.to_string()))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| err(e.to_string()))?;
    fs::rename(&tmp, path).map_err(|e| err(e.to_string()))
}

/// All closed codes of length ≤ `n`, in enumeration order.
fn codes_upto(n: usize) -> Vec<BitString> {
    (0..=n).flat_map(codes_of_len).collect()
}

/// Counts the valid programs of length exactly `n` given `z`, per output.
///
/// Codes are processed in fixed-size chunks in parallel; per-code results
/// are merged by addition, so the result does not depend on the number of
/// worker threads. With a checkpoint path, progress is saved after every
/// chunk and when the node budget runs out; a later call with the same
/// parameters resumes from it.
pub fn vote_census(
    n: usize,
    z: &BitString,
    config: &CensusConfig,
) -> Result<VoteCensus, CensusError> {
    if n > config.ceiling {
        return Err(CensusError::AboveCeiling {
            n,
            ceiling: config.ceiling,
        });
    }
    let codes = codes_upto(n);
    let (mut total, start) = match &config.checkpoint {
        Some(path) => match load_checkpoint(path, n, z, config)? {
            Some(cp) => (cp.census, cp.next_code as usize),
            None => (VoteCensus::empty(n, z, config.gas), 0),
        },
        None => (VoteCensus::empty(n, z, config.gas), 0),
    };
    let nodes = AtomicU64::new(0);
    let mut next = start.min(codes.len());
    while next < codes.len() {
        let end = (next + config.chunk.max(1)).min(codes.len());
        let parts: Result<Vec<VoteCensus>, Aborted> = codes[next..end]
            .par_iter()
            .map(|code| {
                let mut part = VoteCensus::empty(n, z, config.gas);
                let (term, _) = decode_term(code).expect("enumerated code parses");
                let mut runner = Runner::new(&term, z);
                part.nodes = explore(
                    &mut runner,
                    &term,
                    z,
                    n - code.len(),
                    config.gas,
                    config.max_output_bits,
                    &nodes,
                    config.node_cap,
                    &mut |leaf| part.record(code.len(), leaf),
                )?;
                part.codes = 1;
                Ok(part)
            })
            .collect();
        match parts {
            Ok(parts) => {
                for p in parts {
                    total.merge(p);
                }
                next = end;
                if let Some(path) = &config.checkpoint {
                    save_checkpoint(
                        path,
                        &Checkpoint {
                            version: CHECKPOINT_VERSION,
                            next_code: next as u64,
                            census: total.clone(),
                            max_output_bits: config.max_output_bits,
                        },
                    )?;
                }
            }
            Err(Aborted) => {
                return Err(CensusError::BudgetExceeded {
                    nodes: nodes.load(AtomicOrdering::Relaxed),
                    cap: config.node_cap,
                    checkpoint: config.checkpoint.clone(),
                });
            }
        }
    }
    Ok(total)
}

/// A valid program found by exhaustive exploration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidProgram {
    pub program: BitString,
    pub code_len: usize,
    pub output: BitString,
}

/// Everything exhaustive exploration of all programs of length ≤ `max_len`
/// found: the valid programs, in code order then demand order, and the
/// program prefixes whose runs ran out of gas.
#[derive(Clone, Debug, Default)]
pub struct ProgramCensus {
    pub max_len: usize,
    pub valid: Vec<ValidProgram>,
    pub unresolved: Vec<BitString>,
    pub nodes: u64,
}

impl ProgramCensus {
    /// `Σ 2^{−|p|}` over the valid programs, as an exact binary fraction
    /// scaled by `2^max_len`.
    pub fn kraft_numerator(&self) -> u128 {
        self.valid
            .iter()
            .map(|p| 1u128 << (self.max_len - p.program.len()))
            .sum()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.kraft_numerator() as f64 / (1u128 << self.max_len) as f64
    }

    /// Pairs `(p, q)` of valid programs where `p` is a proper prefix of `q`.
    pub fn prefix_pairs(&self) -> Vec<(BitString, BitString)> {
        let mut progs: Vec<&BitString> = self.valid.iter().map(|v| &v.program).collect();
        progs.sort();
        let mut pairs = Vec::new();
        // In sorted order every extension of p follows p contiguously.
        for (i, p) in progs.iter().enumerate() {
            for q in &progs[i + 1..] {
                if !p.is_prefix_of(q) {
                    break;
                }
                if p.len() < q.len() {
                    pairs.push(((*p).clone(), (*q).clone()));
                }
            }
        }
        pairs
    }
}

/// Explores every closed code of length ≤ `max_len` with data up to the
/// total length `max_len`, collecting all valid programs.
pub fn valid_programs(
    max_len: usize,
    z: &BitString,
    config: &CensusConfig,
) -> Result<ProgramCensus, CensusError> {
    if max_len > config.ceiling {
        return Err(CensusError::AboveCeiling {
            n: max_len,
            ceiling: config.ceiling,
        });
    }
    let codes = codes_upto(max_len);
    let nodes = AtomicU64::new(0);
    let parts: Result<Vec<ProgramCensus>, Aborted> = codes
        .par_iter()
        .map(|code| {
            let (term, _) = decode_term(code).expect("enumerated code parses");
            let mut runner = Runner::new(&term, z);
            let mut part = ProgramCensus::default();
            explore(
                &mut runner,
                &term,
                z,
                max_len - code.len(),
                config.gas,
                usize::MAX,
                &nodes,
                config.node_cap,
                &mut |leaf| {
                    let program: BitString =
                        code.bits().iter().chain(&leaf.data).copied().collect();
                    match leaf.kind {
                        LeafKind::Halted(OutputKey::Bits(output)) => {
                            part.valid.push(ValidProgram {
                                program,
                                code_len: code.len(),
                                output,
                            })
                        }
                        LeafKind::OutOfGas => part.unresolved.push(program),
                        _ => {}
                    }
                },
            )?;
            Ok(part)
        })
        .collect();
    let parts = parts.map_err(|_| CensusError::BudgetExceeded {
        nodes: nodes.load(AtomicOrdering::Relaxed),
        cap: config.node_cap,
        checkpoint: None,
    })?;
    let mut out = ProgramCensus {
        max_len,
        nodes: nodes.load(AtomicOrdering::Relaxed),
        ..Default::default()
    };
    for p in parts {
        out.valid.extend(p.valid);
        out.unresolved.extend(p.unresolved);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::io::run;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn cfg() -> CensusConfig {
        CensusConfig::with_gas(Gas::new(2_000))
    }

    #[test]
    fn nothing_fits_below_four_bits() {
        for n in 0..4 {
            let c = vote_census(n, &bs(""), &cfg()).unwrap();
            assert!(c.counts.is_empty());
            assert_eq!(c.codes, 0);
        }
    }

    #[test]
    fn identity_code_is_malformed() {
        // λ1 z D reduces to λb.b, which is not a list.
        let c = vote_census(4, &bs(""), &cfg()).unwrap();
        assert_eq!(c.codes, 1);
        assert!(c.counts.is_empty());
        assert_eq!((c.invalid, c.leaves), (1, 1));
    }

    #[test]
    fn copy_program_votes_for_z() {
        let c = vote_census(7, &bs("1"), &cfg()).unwrap();
        assert_eq!(c.count(&bs("1")), 1);
        assert_eq!(c.resolved_total(), 1);
    }

    #[test]
    fn leaves_partition() {
        let c = vote_census(16, &bs(""), &cfg()).unwrap();
        assert_eq!(c.resolved_total() + c.unresolved + c.invalid, c.leaves);
    }

    #[test]
    fn counted_programs_rerun_standalone() {
        let z = bs("");
        let pc = valid_programs(16, &z, &cfg()).unwrap();
        assert!(!pc.valid.is_empty());
        for v in &pc.valid {
            let out = run(&v.program, &z, Gas::new(2_000));
            assert!(out.is_valid(), "{}", v.program);
            assert_eq!(out.output.as_ref(), Some(&v.output));
            assert_eq!(out.bits_read, v.program.len() - v.code_len);
        }
    }

    #[test]
    fn output_key_order() {
        let mut keys = [
            OutputKey::Overflow,
            OutputKey::Bits(bs("1")),
            OutputKey::Bits(bs("00")),
            OutputKey::Bits(bs("")),
            OutputKey::Bits(bs("0")),
        ];
        keys.sort();
        let shown: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        assert_eq!(shown, ["", "0", "1", "00", "overflow"]);
    }

    #[test]
    fn checkpoint_resume_matches_single_run() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.json");
        let z = bs("");
        let full = vote_census(18, &z, &cfg()).unwrap();
        let tight = CensusConfig {
            // The shortest codes carry most of the demand tree, so a
            // tighter cap would never get past the first chunk.
            node_cap: full.nodes - 1,
            checkpoint: Some(path.clone()),
            chunk: 16,
            ..cfg()
        };
        let mut attempts = 0;
        let resumed = loop {
            attempts += 1;
            match vote_census(18, &z, &tight) {
                Ok(c) => break c,
                Err(CensusError::BudgetExceeded { .. }) => assert!(attempts < 50),
                Err(e) => panic!("{e}"),
            }
        };
        assert!(attempts > 1);
        assert_eq!(resumed.counts, full.counts);
        assert_eq!(resumed.unresolved, full.unresolved);
        assert_eq!(resumed.leaves, full.leaves);
    }

    #[test]
    fn checkpoint_for_other_parameters_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.json");
        let with_cp = CensusConfig {
            checkpoint: Some(path.clone()),
            ..cfg()
        };
        vote_census(10, &bs(""), &with_cp).unwrap();
        assert!(matches!(
            vote_census(11, &bs(""), &with_cp),
            Err(CensusError::Checkpoint { .. })
        ));
    }
}
