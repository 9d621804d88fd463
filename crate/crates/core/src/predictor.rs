//! Probability ratios between candidate continuations, from shortest known
//! programs and from program censuses, plus stochastic models and the
//! regularized loss used to choose among them.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::complexity::{ComplexityEstimate, KPrime, SearchError};
use crate::enumerator::census::{vote_census, CensusConfig, CensusError, VoteCensus};
use crate::enumerator::sampling::{coin_run, trial_rng, Trial};
use crate::machine::io::{run, split_program};
use crate::machine::{BitString, Gas};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("no witness for candidate {candidate}: {reason}")]
    WitnessMissing { candidate: String, reason: String },
    #[error("candidate {candidate} received no votes at n = {n}")]
    ZeroVotes { candidate: String, n: usize },
    #[error("outcome {outcome} never sampled in {samples} trials; surprisal > {bound:.3} bits")]
    OutcomeNeverSampled {
        outcome: String,
        samples: u64,
        bound: f64,
    },
    #[error("model {0}")]
    Model(String),
    #[error(transparent)]
    Census(#[from] CensusError),
}

/// `2^e` for display: exact powers up to 2^63, otherwise float.
pub fn ratio_from_log2(e: i64) -> String {
    if (0..64).contains(&e) {
        format!("{}", 1u64 << e)
    } else {
        format!("{:e}", 2f64.powi(e as i32))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OddsReport {
    pub o: BitString,
    pub a: BitString,
    pub b: BitString,
    pub z: BitString,
    pub k_oa: ComplexityEstimate,
    pub k_ob: ComplexityEstimate,
    /// `K'(ob|z) − K'(oa|z)`.
    pub delta_bits: i64,
    /// `log2 P(oa|z)/P(ob|z)`, equal to `delta_bits`.
    pub ratio_log2: i64,
    pub census: Option<DemocraticOdds>,
}

impl OddsReport {
    /// The odds of `a` over `b`, e.g. `2^30`.
    pub fn ratio_label(&self) -> String {
        format!("2^{}", self.ratio_log2)
    }

    pub fn ratio(&self) -> f64 {
        2f64.powi(self.ratio_log2 as i32)
    }
}

fn witness(kp: &mut KPrime, x: &BitString, z: &BitString, label: &str) -> Result<ComplexityEstimate, PredictError> {
    kp.estimate(x, z).map_err(|e: SearchError| PredictError::WitnessMissing {
        candidate: label.to_string(),
        reason: e.to_string(),
    })
}

/// Odds of continuation `a` over `b` after `o`, given `z`.
pub fn odds(
    kp: &mut KPrime,
    o: &BitString,
    a: &BitString,
    b: &BitString,
    z: &BitString,
) -> Result<OddsReport, PredictError> {
    let k_oa = witness(kp, &o.concat(a), z, "a")?;
    let k_ob = witness(kp, &o.concat(b), z, "b")?;
    let delta = k_ob.value_bits as i64 - k_oa.value_bits as i64;
    Ok(OddsReport {
        o: o.clone(),
        a: a.clone(),
        b: b.clone(),
        z: z.clone(),
        k_oa,
        k_ob,
        delta_bits: delta,
        ratio_log2: delta,
        census: None,
    })
}

/// Normalizes `2^{−K'}` over the listed candidates only. The result says
/// nothing about continuations that were not listed.
pub fn relative_probabilities(k_bits: &[usize]) -> Vec<f64> {
    let Some(&min) = k_bits.iter().min() else {
        return Vec::new();
    };
    let w: Vec<f64> = k_bits.iter().map(|&k| 2f64.powi(-((k - min) as i32))).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// The log2 ratio of vote counts for two candidates, as an interval over
/// the census count bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemocraticOdds {
    pub n: usize,
    pub gas: Gas,
    pub a_lo: u64,
    pub a_hi: u128,
    pub b_lo: u64,
    pub b_hi: u128,
    pub lo_log2: f64,
    pub hi_log2: f64,
    pub fully_resolved: bool,
}

impl DemocraticOdds {
    pub fn midpoint(&self) -> f64 {
        (self.lo_log2 + self.hi_log2) / 2.0
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo_log2 <= v && v <= self.hi_log2
    }

    /// Distance from `v` to the interval, 0 inside.
    pub fn distance(&self, v: f64) -> f64 {
        (self.lo_log2 - v).max(v - self.hi_log2).max(0.0)
    }
}

impl fmt::Display for DemocraticOdds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6}, {:.6}]", self.lo_log2, self.hi_log2)
    }
}

/// Reads the democratic interval for `oa` against `ob` off a census.
pub fn odds_from_census(
    census: &VoteCensus,
    o: &BitString,
    a: &BitString,
    b: &BitString,
) -> Result<DemocraticOdds, PredictError> {
    let (a_lo, a_hi) = census.bounds(&o.concat(a));
    let (b_lo, b_hi) = census.bounds(&o.concat(b));
    for (lo, label) in [(a_lo, "a"), (b_lo, "b")] {
        if lo == 0 {
            return Err(PredictError::ZeroVotes {
                candidate: label.to_string(),
                n: census.n,
            });
        }
    }
    let l2 = |v: f64| v.log2();
    Ok(DemocraticOdds {
        n: census.n,
        gas: census.gas,
        a_lo,
        a_hi,
        b_lo,
        b_hi,
        lo_log2: l2(a_lo as f64) - l2(b_hi as f64),
        hi_log2: l2(a_hi as f64) - l2(b_lo as f64),
        fully_resolved: census.fully_resolved(),
    })
}

/// Runs one census at `(n, z)` and reads off the interval.
pub fn democratic_odds(
    o: &BitString,
    a: &BitString,
    b: &BitString,
    z: &BitString,
    n: usize,
    config: &CensusConfig,
) -> Result<DemocraticOdds, PredictError> {
    let census = vote_census(n, z, config)?;
    odds_from_census(&census, o, a, b)
}

/// Outcome frequencies of a stochastic model fed fair coin flips.
#[derive(Clone, Debug, Serialize)]
pub struct StochasticEval {
    pub q: BitString,
    pub z: BitString,
    pub samples: u64,
    pub gas: Gas,
    pub seed: u64,
    pub outcome_counts: BTreeMap<BitString, u64>,
    pub out_of_gas: u64,
    pub malformed: u64,
}

impl StochasticEval {
    pub fn freq(&self, o: &BitString) -> f64 {
        self.outcome_counts.get(o).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    /// `−log2 freq(o)`; infinite for outcomes never seen.
    pub fn surprisal_bits(&self, o: &BitString) -> f64 {
        // Adding zero turns −0 into 0 for certain outcomes.
        -self.freq(o).log2() + 0.0
    }

    pub fn halting_fraction(&self) -> f64 {
        self.outcome_counts.values().sum::<u64>() as f64 / self.samples as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("outcome,count,freq,surprisal_bits,samples,gas,seed\n");
        for (o, &c) in &self.outcome_counts {
            s += &format!(
                "{o},{c},{:.9},{:.6},{},{},{}\n",
                self.freq(o),
                self.surprisal_bits(o),
                self.samples,
                self.gas.max_steps,
                self.seed
            );
        }
        s
    }
}

/// Runs the model code `q` `samples` times, trial `i` drawing its coin
/// flips from stream `i` of `seed`.
pub fn stochastic_eval(
    q_code: &BitString,
    z: &BitString,
    samples: u64,
    gas: Gas,
    seed: u64,
) -> Result<StochasticEval, PredictError> {
    let (term, used) = split_program(q_code).map_err(|e| PredictError::Model(e.to_string()))?;
    if used != q_code.len() {
        return Err(PredictError::Model("trailing bits after the model code".into()));
    }
    let trials: Vec<Trial> = (0..samples)
        .into_par_iter()
        .map(|i| coin_run(&term, z, &mut trial_rng(seed, i), gas).0)
        .collect();
    let mut eval = StochasticEval {
        q: q_code.clone(),
        z: z.clone(),
        samples,
        gas,
        seed,
        outcome_counts: BTreeMap::new(),
        out_of_gas: 0,
        malformed: 0,
    };
    for t in trials {
        match t {
            Trial::Halted { output, .. } => *eval.outcome_counts.entry(output).or_default() += 1,
            Trial::OutOfGas => eval.out_of_gas += 1,
            Trial::Unparsed | Trial::Malformed => eval.malformed += 1,
        }
    }
    Ok(eval)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LossKind {
    /// Differing bits over the shorter length, plus the length difference.
    Hamming,
    /// `K'(o|o')`, the bits needed to correct the model output.
    CorrectionK,
    /// `−log2 P̂(o)` from sampling.
    Surprisal,
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(LossKind::Hamming),
            "correction" | "correctionk" => Ok(LossKind::CorrectionK),
            "surprisal" => Ok(LossKind::Surprisal),
            _ => Err(format!("unknown loss kind {s:?}")),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularizedLoss {
    pub model: BitString,
    pub kind: LossKind,
    pub complexity_bits: usize,
    pub empirical_loss_bits: f64,
    pub total_bits: f64,
    /// The model's own output, for the deterministic kinds.
    pub model_output: Option<BitString>,
}

/// Parameters for [`regularized_loss`].
pub struct LossParams<'a> {
    pub gas: Gas,
    pub samples: u64,
    pub seed: u64,
    /// Needed for [`LossKind::CorrectionK`].
    pub kprime: Option<&'a mut KPrime>,
}

pub fn hamming_loss(a: &BitString, b: &BitString) -> usize {
    let common = a.len().min(b.len());
    let diff = (0..common).filter(|&i| a.get(i) != b.get(i)).count();
    diff + a.len().abs_diff(b.len())
}

/// `|model| + L_emp(o)`. For the deterministic kinds the model is a valid
/// program; for surprisal it is a code run on coin flips.
pub fn regularized_loss(
    model: &BitString,
    o: &BitString,
    z: &BitString,
    kind: LossKind,
    params: LossParams<'_>,
) -> Result<RegularizedLoss, PredictError> {
    let (empirical, model_output) = match kind {
        LossKind::Hamming | LossKind::CorrectionK => {
            let out = run(model, z, params.gas);
            if !out.is_valid() {
                return Err(PredictError::Model(format!(
                    "is not a valid program: {:?}",
                    out.status
                )));
            }
            let prediction = out.output.expect("valid runs carry output");
            let loss = match kind {
                LossKind::Hamming => hamming_loss(&prediction, o) as f64,
                _ => {
                    let kp = params
                        .kprime
                        .ok_or_else(|| PredictError::Model("correction loss needs a K' oracle".into()))?;
                    witness(kp, o, &prediction, "o")?.value_bits as f64
                }
            };
            (loss, Some(prediction))
        }
        LossKind::Surprisal => {
            let eval = stochastic_eval(model, z, params.samples, params.gas, params.seed)?;
            let f = eval.freq(o);
            if f == 0.0 {
                return Err(PredictError::OutcomeNeverSampled {
                    outcome: o.to_string(),
                    samples: params.samples,
                    bound: (params.samples as f64).log2(),
                });
            }
            (-f.log2(), None)
        }
    };
    Ok(RegularizedLoss {
        model: model.clone(),
        kind,
        complexity_bits: model.len(),
        empirical_loss_bits: empirical,
        total_bits: model.len() as f64 + empirical,
        model_output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinators;
    use crate::complexity::constructions::literal_witness;
    use crate::machine::parse_term;
    use crate::machine::term::encode_term;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn kp() -> KPrime {
        KPrime::new(12, Gas::new(10_000))
    }

    #[test]
    fn odds_symmetry_and_antisymmetry() {
        let mut kp = kp();
        let (o, z) = (bs("01"), bs(""));
        let same = odds(&mut kp, &o, &bs("1"), &bs("1"), &z).unwrap();
        assert_eq!((same.delta_bits, same.ratio()), (0, 1.0));
        let ab = odds(&mut kp, &o, &bs(""), &bs("1101"), &z).unwrap();
        let ba = odds(&mut kp, &o, &bs("1101"), &bs(""), &z).unwrap();
        assert_eq!(ab.delta_bits, -ba.delta_bits);
        assert_eq!(ab.delta_bits, ab.k_ob.value_bits as i64 - ab.k_oa.value_bits as i64);
    }

    #[test]
    fn thirty_bits_is_about_a_billion() {
        assert_eq!(ratio_from_log2(30), "1073741824");
    }

    #[test]
    fn argmin_k_is_argmax_odds() {
        let mut kp = kp();
        let (o, z) = (bs("0"), bs(""));
        let cands = [bs(""), bs("1"), bs("00"), bs("110")];
        let ks: Vec<usize> = cands
            .iter()
            .map(|c| kp.estimate(&o.concat(c), &z).unwrap().value_bits)
            .collect();
        let best = (0..cands.len()).min_by_key(|&i| (ks[i], i)).unwrap();
        for j in 0..cands.len() {
            let r = odds(&mut kp, &o, &cands[best], &cands[j], &z).unwrap();
            assert!(r.delta_bits >= 0);
        }
        let p = relative_probabilities(&ks);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v <= p[best]));
    }

    #[test]
    fn democratic_interval_for_equal_candidates_contains_zero() {
        let config = CensusConfig::with_gas(Gas::new(2_000));
        let d = democratic_odds(&bs(""), &bs(""), &bs(""), &bs(""), 13, &config).unwrap();
        assert!(d.contains(0.0));
        assert!(matches!(
            democratic_odds(&bs(""), &bs("111"), &bs(""), &bs(""), 13, &config),
            Err(PredictError::ZeroVotes { .. })
        ));
    }

    #[test]
    fn one_bit_echo_is_fair() {
        let q = encode_term(&parse_term(r"\z d. d (\b t. \f. f b (\a c. c))").unwrap());
        let n = 100_000;
        let e = stochastic_eval(&q, &bs(""), n, Gas::new(1_000), 7).unwrap();
        let sigma = (0.25 / n as f64).sqrt();
        for o in ["0", "1"] {
            assert!((e.freq(&bs(o)) - 0.5).abs() < 4.0 * sigma);
            assert_eq!(e.surprisal_bits(&bs(o)), -e.freq(&bs(o)).log2());
        }
        let again = stochastic_eval(&q, &bs(""), n, Gas::new(1_000), 7).unwrap();
        assert_eq!(again.outcome_counts, e.outcome_counts);
    }

    #[test]
    fn deterministic_model_has_one_outcome() {
        let q = literal_witness(&bs("10"));
        let e = stochastic_eval(&q, &bs(""), 100, Gas::new(1_000), 1).unwrap();
        assert_eq!(e.outcome_counts.len(), 1);
        assert_eq!(e.freq(&bs("10")), e.halting_fraction());
    }

    #[test]
    fn coin_fed_model_matches_enumerated_noise() {
        // q·ρ over all ρ of length l votes exactly like the census leaves
        // of q at data length l.
        let q = parse_term(r"\z d. d (\b t. b (\f. f b z) (t (\c u. \f. f c z)))").unwrap();
        let code = encode_term(&q);
        let z = bs("");
        for l in 0..=3 {
            let mut by_strings: BTreeMap<BitString, u64> = BTreeMap::new();
            for rho in BitString::all_of_len(l) {
                let out = run(&code.concat(&rho), &z, Gas::new(1_000));
                if out.is_valid() {
                    *by_strings.entry(out.output.unwrap()).or_default() += 1;
                }
            }
            let mut by_leaves: BTreeMap<BitString, u64> = BTreeMap::new();
            for leaf in crate::enumerator::census::code_leaves(&q, &z, l, Gas::new(1_000)) {
                if let crate::enumerator::census::LeafKind::Halted(k) = leaf.kind {
                    if leaf.data.len() == l {
                        *by_leaves.entry(k.bits().unwrap().clone()).or_default() += 1;
                    }
                }
            }
            assert_eq!(by_strings, by_leaves, "l = {l}");
        }
    }

    #[test]
    fn regularized_losses() {
        let mut kp = kp();
        let o = bs("0110");
        let exact = literal_witness(&o);
        let r = regularized_loss(
            &exact,
            &o,
            &bs(""),
            LossKind::Hamming,
            LossParams { gas: Gas::new(10_000), samples: 0, seed: 0, kprime: None },
        )
        .unwrap();
        assert_eq!((r.empirical_loss_bits, r.total_bits), (0.0, exact.len() as f64));
        let r = regularized_loss(
            &exact,
            &o,
            &bs(""),
            LossKind::CorrectionK,
            LossParams { gas: Gas::new(10_000), samples: 0, seed: 0, kprime: Some(&mut kp) },
        )
        .unwrap();
        assert_eq!(r.empirical_loss_bits, combinators::size("COPY") as f64);
        assert_eq!(r.total_bits, r.complexity_bits as f64 + r.empirical_loss_bits);
        // A shorter but wrong model can still lose on total.
        let rough = literal_witness(&bs("0"));
        let rl = regularized_loss(
            &rough,
            &o,
            &bs(""),
            LossKind::Hamming,
            LossParams { gas: Gas::new(10_000), samples: 0, seed: 0, kprime: None },
        )
        .unwrap();
        assert_eq!(rl.empirical_loss_bits, 3.0);
        assert!(rl.complexity_bits < exact.len());
        assert_eq!(hamming_loss(&bs("0110"), &bs("01")), 2);
    }

    #[test]
    fn never_sampled_outcome_is_a_bound() {
        let q = literal_witness(&bs("1"));
        let err = regularized_loss(
            &q,
            &bs("0"),
            &bs(""),
            LossKind::Surprisal,
            LossParams { gas: Gas::new(1_000), samples: 64, seed: 3, kprime: None },
        )
        .unwrap_err();
        assert!(matches!(err, PredictError::OutcomeNeverSampled { samples: 64, .. }));
    }
}
