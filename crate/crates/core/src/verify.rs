//! The acceptance checks, shared by `occam verify` and the acceptance test.
//! Each check returns a CSV table and a PASS/FAIL verdict; tolerances are
//! the constants below.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexity::{chain_rule_gap, joint_bounds, neutrality_check, KPrime};
use crate::enumerator::census::{vote_census, CensusConfig, OutputKey};
use crate::enumerator::{build_padded, monte_carlo_m, pad_reader, valid_programs};
use crate::ledger::{model_complexity, Definition, ModelManifest, Registry};
use crate::machine::io::run;
use crate::machine::{BitString, Gas};
use crate::predictor::{odds, odds_from_census, ratio_from_log2};

/// Standard errors allowed below `2^{−K'(x)}` in the coding-theorem check.
pub const MC_SIGMAS: f64 = 3.0;
/// Outputs with fewer Monte Carlo hits are not checked.
pub const MC_MIN_HITS: u64 = 100;
/// The ratio the odds check must print for a 30-bit gap.
pub const ODDS_DELTA: i64 = 30;
pub const RANDOM_DAGS: usize = 50;

/// Allowed distance, in bits, between the democratic log2 ratio and the
/// `K'` difference: the length of the pad reader prefix, the largest fixed
/// overhead in the padding construction behind the census lower bound.
pub fn coherence_band_bits() -> f64 {
    pad_reader().len() as f64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    pub gas: Gas,
    pub kraft_max_len: usize,
    pub oracle_max_n: usize,
    pub pad_lengths: Vec<usize>,
    pub mc_samples: u64,
    pub seed: u64,
    pub coherence_n: [usize; 2],
    /// Search length for `K'` in the complexity-based checks.
    pub search_len: usize,
    pub census_ceiling: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            gas: Gas::new(10_000),
            kraft_max_len: 20,
            oracle_max_n: 12,
            pad_lengths: (0..=8).collect(),
            mc_samples: 1_000_000,
            seed: 2024,
            coherence_n: [20, 22],
            search_len: 20,
            census_ceiling: crate::enumerator::census::DEFAULT_CEILING,
        }
    }
}

impl VerifyConfig {
    fn census(&self) -> CensusConfig {
        CensusConfig {
            ceiling: self.census_ceiling,
            ..CensusConfig::with_gas(self.gas)
        }
    }

    fn kprime(&self) -> KPrime {
        KPrime::new(self.search_len, self.gas)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
    pub csv: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {}: {} ({})",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.summary
        )
    }
}

pub const NAMES: [&str; 10] = [
    "kraft",
    "prefix-free",
    "census-oracle",
    "padding",
    "coding-theorem",
    "coherence",
    "inequalities",
    "odds",
    "ledger-dedup",
    "determinism",
];

/// Runs criterion `id` (1 to 10).
pub fn run_criterion(id: u8, cfg: &VerifyConfig) -> Outcome {
    match id {
        1 => kraft(cfg),
        2 => prefix_free(cfg),
        3 => census_oracle(cfg),
        4 => padding(cfg),
        5 => coding_theorem(cfg),
        6 => coherence(cfg),
        7 => inequalities(cfg),
        8 => odds_arithmetic(cfg),
        9 => ledger_dedup(cfg),
        10 => determinism(cfg),
        _ => panic!("no criterion {id}"),
    }
}

pub fn criterion_id(name: &str) -> Option<u8> {
    if let Ok(id) = name.parse::<u8>() {
        return (1..=10).contains(&id).then_some(id);
    }
    NAMES.iter().position(|&n| n == name).map(|i| i as u8 + 1)
}

fn outcome(id: u8, pass: bool, summary: String, csv: String) -> Outcome {
    Outcome {
        id,
        name: NAMES[id as usize - 1],
        pass,
        summary,
        csv,
    }
}

pub fn kraft(cfg: &VerifyConfig) -> Outcome {
    let pc = match valid_programs(cfg.kraft_max_len, &BitString::new(), &cfg.census()) {
        Ok(pc) => pc,
        Err(e) => return outcome(1, false, e.to_string(), String::new()),
    };
    let num = pc.kraft_numerator();
    let den = 1u128 << pc.max_len;
    let csv = format!(
        "max_len,gas,valid_programs,unresolved_prefixes,kraft_numerator,kraft_denominator,kraft_sum\n{},{},{},{},{},{},{:.12}\n",
        pc.max_len,
        cfg.gas.max_steps,
        pc.valid.len(),
        pc.unresolved.len(),
        num,
        den,
        pc.kraft_sum()
    );
    outcome(
        1,
        num <= den,
        format!("sum {:.9} over {} valid programs", pc.kraft_sum(), pc.valid.len()),
        csv,
    )
}

pub fn prefix_free(cfg: &VerifyConfig) -> Outcome {
    let pc = match valid_programs(cfg.kraft_max_len, &BitString::new(), &cfg.census()) {
        Ok(pc) => pc,
        Err(e) => return outcome(2, false, e.to_string(), String::new()),
    };
    let pairs = pc.prefix_pairs();
    let mut csv = String::from("prefix,extension\n");
    for (p, q) in &pairs {
        csv += &format!("{p},{q}\n");
    }
    outcome(
        2,
        pairs.is_empty(),
        format!("{} prefix pairs among {} valid programs", pairs.len(), pc.valid.len()),
        csv,
    )
}

/// Output counts at exactly length `n`, by running every bit string.
pub fn naive_counts(n: usize, z: &BitString, gas: Gas) -> BTreeMap<BitString, u64> {
    let mut counts = BTreeMap::new();
    for p in BitString::all_of_len(n) {
        let out = run(&p, z, gas);
        if out.is_valid() {
            *counts.entry(out.output.expect("valid")).or_default() += 1;
        }
    }
    counts
}

pub fn census_oracle(cfg: &VerifyConfig) -> Outcome {
    let z = BitString::new();
    let mut csv = String::from("n,x_as_bits,census,oracle\n");
    let mut mismatches = 0;
    for n in 0..=cfg.oracle_max_n {
        let census = match vote_census(n, &z, &cfg.census()) {
            Ok(c) => c,
            Err(e) => return outcome(3, false, e.to_string(), csv),
        };
        let oracle = naive_counts(n, &z, cfg.gas);
        let mut keys: Vec<BitString> = oracle.keys().cloned().collect();
        for k in census.counts.keys() {
            match k {
                OutputKey::Bits(b) if !oracle.contains_key(b) => keys.push(b.clone()),
                OutputKey::Overflow => mismatches += 1,
                _ => {}
            }
        }
        keys.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        if census.unresolved > 0 {
            mismatches += 1;
        }
        for x in keys {
            let (c, o) = (census.count(&x), oracle.get(&x).copied().unwrap_or(0));
            if c != o {
                mismatches += 1;
            }
            csv += &format!("{n},{x},{c},{o}\n");
        }
    }
    outcome(
        3,
        mismatches == 0,
        format!("{mismatches} mismatches for n <= {}", cfg.oracle_max_n),
        csv,
    )
}

pub fn padding(cfg: &VerifyConfig) -> Outcome {
    let x: BitString = "0".parse().expect("bits");
    let z = BitString::new();
    let mut kp = cfg.kprime();
    let w = match kp.estimate(&x, &z) {
        Ok(e) => e.witness,
        Err(e) => return outcome(4, false, e.to_string(), String::new()),
    };
    let mut csv = String::from("pad_len,n,programs,valid,census_count,census_status\n");
    let mut all_valid = true;
    let mut census_ok = true;
    for &g in &cfg.pad_lengths {
        let fam = match build_padded(&x, &z, g, Some(&w), cfg.gas) {
            Ok(f) => f,
            Err(e) => return outcome(4, false, e.to_string(), csv),
        };
        let valid = fam
            .programs()
            .filter(|p| {
                let out = run(p, &z, cfg.gas);
                out.is_valid() && out.output.as_ref() == Some(&x)
            })
            .count();
        all_valid &= valid == 1 << g;
        let (count, status) = match vote_census(fam.n(), &z, &cfg.census()) {
            Ok(c) => {
                census_ok &= c.count(&x) >= 1 << g;
                (c.count(&x).to_string(), "ok".to_string())
            }
            Err(e) => {
                census_ok = false;
                ("".into(), e.to_string())
            }
        };
        csv += &format!("{g},{},{},{valid},{count},{status}\n", fam.n(), 1u64 << g);
    }
    let n0 = build_padded(&x, &z, 0, Some(&w), cfg.gas).map(|f| f.n()).unwrap_or(0);
    outcome(
        4,
        all_valid && census_ok,
        format!(
            "padded programs valid: {}; census at n >= {n0} {}",
            if all_valid { "all" } else { "not all" },
            if census_ok {
                "confirms the counts".to_string()
            } else {
                format!("is beyond the enumeration ceiling {}", cfg.census_ceiling)
            }
        ),
        csv,
    )
}

pub fn coding_theorem(cfg: &VerifyConfig) -> Outcome {
    let z = BitString::new();
    let est = monte_carlo_m(cfg.mc_samples, &z, cfg.gas, cfg.seed, 64);
    let mut kp = cfg.kprime();
    let mut csv = String::from("x_as_bits,hits,m_hat,stderr,k_prime,lower_bound,pass\n");
    let mut checked = 0;
    let mut pass = true;
    for (k, &hits) in &est.hits {
        let OutputKey::Bits(x) = k else { continue };
        if hits < MC_MIN_HITS {
            continue;
        }
        let kx = match kp.estimate(x, &z) {
            Ok(e) => e.value_bits,
            Err(e) => return outcome(5, false, e.to_string(), csv),
        };
        let bound = 2f64.powi(-(kx as i32));
        let ok = est.m_hat(x) + MC_SIGMAS * est.stderr(x) >= bound;
        pass &= ok;
        checked += 1;
        csv += &format!(
            "{x},{hits},{:.9},{:.9},{kx},{bound:.9e},{ok}\n",
            est.m_hat(x),
            est.stderr(x)
        );
    }
    outcome(
        5,
        pass && checked > 0,
        format!("{checked} outputs with >= {MC_MIN_HITS} hits in {} samples", cfg.mc_samples),
        csv,
    )
}

pub fn coherence(cfg: &VerifyConfig) -> Outcome {
    let band = coherence_band_bits();
    let (o, a, b, z) = (
        BitString::new(),
        BitString::new(),
        "0".parse::<BitString>().expect("bits"),
        BitString::new(),
    );
    let mut kp = cfg.kprime();
    let report = match odds(&mut kp, &o, &a, &b, &z) {
        Ok(r) => r,
        Err(e) => return outcome(6, false, e.to_string(), String::new()),
    };
    let delta = report.delta_bits as f64;
    let mut csv = String::from(
        "n,a_lo,a_hi,b_lo,b_hi,lo_log2,hi_log2,midpoint,delta_bits,distance,fully_resolved,neutral\n",
    );
    let mut pass = true;
    let mut mids = Vec::new();
    for &n in &cfg.coherence_n {
        let neutral = match neutrality_check(&mut kp, n as u64, &[o.concat(&a), o.concat(&b)], &z) {
            Ok(r) => r.iter().all(|r| !r.non_neutral),
            Err(e) => return outcome(6, false, e.to_string(), csv),
        };
        let census = match vote_census(n, &z, &cfg.census()) {
            Ok(c) => c,
            Err(e) => return outcome(6, false, e.to_string(), csv),
        };
        let d = match odds_from_census(&census, &o, &a, &b) {
            Ok(d) => d,
            Err(e) => return outcome(6, false, e.to_string(), csv),
        };
        let dist = d.distance(delta);
        pass &= d.fully_resolved && neutral && dist <= band;
        mids.push(d.midpoint());
        csv += &format!(
            "{n},{},{},{},{},{:.6},{:.6},{:.6},{},{:.6},{},{}\n",
            d.a_lo,
            d.a_hi,
            d.b_lo,
            d.b_hi,
            d.lo_log2,
            d.hi_log2,
            d.midpoint(),
            report.delta_bits,
            dist,
            d.fully_resolved,
            neutral
        );
    }
    let drift = (mids[0] - mids[1]).abs();
    pass &= drift <= band;
    outcome(
        6,
        pass,
        format!(
            "delta {} bits, midpoints {:.3} and {:.3}, band {band} bits",
            report.delta_bits, mids[0], mids[1]
        ),
        csv,
    )
}

/// The ten `(x, y, z)` cases for the constructive inequalities.
pub fn inequality_corpus() -> Vec<(BitString, BitString, BitString)> {
    [
        ("", "", ""),
        ("0", "1", ""),
        ("1", "1", ""),
        ("01", "", ""),
        ("", "10", ""),
        ("110", "0", ""),
        ("0", "0", "1"),
        ("10", "01", "10"),
        ("0000", "1", ""),
        ("1", "0110", "0"),
    ]
    .iter()
    .map(|(x, y, z)| (x.parse().unwrap(), y.parse().unwrap(), z.parse().unwrap()))
    .collect()
}

pub fn inequalities(cfg: &VerifyConfig) -> Outcome {
    let mut kp = KPrime::new(cfg.search_len.min(16), cfg.gas);
    let mut csv = String::from(
        "x,y,z,kx,ky,kxy,kyx,c_pair,c_swap,c_proj,freeze_bits,joint_ok,chain_lhs,chain_rhs,gap_bits,c_chain,literal_bits,chain_ok\n",
    );
    let mut pass = true;
    let mut gaps = Vec::new();
    for (x, y, z) in inequality_corpus() {
        let j = match joint_bounds(&mut kp, &x, &y, &z) {
            Ok(j) => j,
            Err(e) => return outcome(7, false, e.to_string(), csv),
        };
        let c = match chain_rule_gap(&mut kp, &x, &y, &z) {
            Ok(c) => c,
            Err(e) => return outcome(7, false, e.to_string(), csv),
        };
        pass &= j.holds() && c.certified;
        gaps.push(c.gap_bits);
        csv += &format!(
            "{x},{y},{z},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            j.kx,
            j.ky,
            j.kxy,
            j.kyx,
            j.c_pair,
            j.c_swap,
            j.c_proj,
            j.freeze_bits,
            j.holds(),
            c.lhs_bits,
            c.rhs_bits,
            c.gap_bits,
            c.c_chain,
            c.literal_bits,
            c.certified
        );
    }
    let (lo, hi) = (gaps.iter().min().unwrap(), gaps.iter().max().unwrap());
    outcome(7, pass, format!("10 cases, chain gap band [{lo}, {hi}] bits"), csv)
}

/// Two runs of zeros whose echo witnesses differ by exactly 30 bits.
pub fn odds_pair() -> (BitString, BitString) {
    let zeros = |n| BitString::from_bits(vec![false; n]);
    (zeros(20), zeros(25))
}

pub fn odds_arithmetic(cfg: &VerifyConfig) -> Outcome {
    let (a, b) = odds_pair();
    let mut kp = cfg.kprime();
    let r = match odds(&mut kp, &BitString::new(), &a, &b, &BitString::new()) {
        Ok(r) => r,
        Err(e) => return outcome(8, false, e.to_string(), String::new()),
    };
    let ratio = ratio_from_log2(r.ratio_log2);
    let csv = format!(
        "a,b,k_oa,k_ob,delta_bits,ratio_log2,ratio\n{},{},{},{},{},{},{}\n",
        r.a, r.b, r.k_oa.value_bits, r.k_ob.value_bits, r.delta_bits, r.ratio_label(), ratio
    );
    outcome(
        8,
        r.delta_bits == ODDS_DELTA && ratio == (1u64 << 30).to_string() && r.ratio_label() == "2^30",
        format!("delta {} bits, ratio {} = {ratio}", r.delta_bits, r.ratio_label()),
        csv,
    )
}

/// A random DAG registry: each node depends on a random subset of
/// earlier nodes.
pub fn random_dag(rng: &mut ChaCha8Rng, nodes: usize) -> Registry {
    let mut r = Registry::new();
    for i in 0..nodes {
        let deps: Vec<String> = (0..i)
            .filter(|_| rng.gen_bool(0.3))
            .map(|j| format!("d{j}"))
            .collect();
        let deps: Vec<&str> = deps.iter().map(|s| s.as_str()).collect();
        r.register_definition(Definition::audited(
            &format!("d{i}"),
            &deps,
            rng.gen_range(1..1000),
            "random",
        ))
        .expect("valid dag");
    }
    r
}

/// Closure cost by a reachability matrix, independent of the registry's
/// traversal.
#[allow(clippy::needless_range_loop)]
pub fn closure_oracle(r: &Registry, roots: &[String]) -> u64 {
    let names: Vec<&String> = r.entries.keys().collect();
    let idx: BTreeMap<&String, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let n = names.len();
    let mut reach = vec![vec![false; n]; n];
    for (i, name) in names.iter().enumerate() {
        reach[i][i] = true;
        for d in &r.get(name).expect("present").deps {
            reach[i][idx[d]] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n)
        .filter(|&j| roots.iter().any(|root| reach[idx[root]][j]))
        .map(|j| r.get(names[j]).expect("present").cost_bits)
        .sum()
}

pub fn ledger_dedup(cfg: &VerifyConfig) -> Outcome {
    let (reg, m) = crate::ledger::calculus_example();
    let b = model_complexity(&m, &reg).expect("example manifest resolves");
    let lim_once = b.definitions.iter().filter(|(n, _)| n == "lim").count() == 1
        && b.definition_bits == 1200 + 800 + 500;
    let mut csv = String::from("dag,nodes,roots,closure_bits,oracle_bits,agree\n");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut agree = 0;
    for i in 0..RANDOM_DAGS {
        let nodes = rng.gen_range(2..24);
        let reg = random_dag(&mut rng, nodes);
        let roots: Vec<String> = (0..nodes)
            .filter(|_| rng.gen_bool(0.25))
            .map(|j| format!("d{j}"))
            .collect();
        let manifest = ModelManifest {
            name: format!("m{i}"),
            problem_id: "dag".into(),
            references: roots.iter().map(|r| (r.clone(), 1)).collect(),
            ..Default::default()
        };
        let got = model_complexity(&manifest, &reg).expect("resolves").definition_bits;
        let want = closure_oracle(&reg, &roots);
        agree += (got == want) as usize;
        csv += &format!("{i},{nodes},{},{got},{want},{}\n", roots.len(), got == want);
    }
    outcome(
        9,
        lim_once && agree == RANDOM_DAGS,
        format!(
            "lim counted {}; {agree}/{RANDOM_DAGS} random DAGs agree",
            if lim_once { "once" } else { "more than once" }
        ),
        csv,
    )
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

pub fn determinism(cfg: &VerifyConfig) -> Outcome {
    let small = VerifyConfig {
        mc_samples: cfg.mc_samples.min(20_000),
        oracle_max_n: cfg.oracle_max_n.min(10),
        ..cfg.clone()
    };
    let suite = |c: &VerifyConfig| -> Vec<String> {
        [3u8, 5, 7, 9]
            .iter()
            .map(|&id| run_criterion(id, c).csv)
            .collect()
    };
    let one = with_workers(1, || suite(&small));
    let again = with_workers(1, || suite(&small));
    let many = with_workers(4, || suite(&small));
    let same_run = one == again;
    let same_workers = one == many;
    let csv = format!(
        "suites,repeat_identical,workers_1_vs_4_identical\n\"3,5,7,9\",{same_run},{same_workers}\n"
    );
    outcome(
        10,
        same_run && same_workers,
        format!("repeat identical: {same_run}; 1 vs 4 workers identical: {same_workers}"),
        csv,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_ids() {
        for (i, n) in NAMES.iter().enumerate() {
            assert_eq!(criterion_id(n), Some(i as u8 + 1));
        }
        assert_eq!(criterion_id("7"), Some(7));
        assert_eq!(criterion_id("11"), None);
    }

    #[test]
    fn band_is_the_pad_reader() {
        assert_eq!(coherence_band_bits(), 39.0);
    }

    #[test]
    fn oracle_closure_on_diamond() {
        let mut r = Registry::new();
        r.register_definition(Definition::audited("d", &[], 5, "n")).unwrap();
        r.register_definition(Definition::audited("b", &["d"], 7, "n")).unwrap();
        r.register_definition(Definition::audited("c", &["d"], 11, "n")).unwrap();
        r.register_definition(Definition::audited("a", &["b", "c"], 13, "n")).unwrap();
        assert_eq!(closure_oracle(&r, &["a".to_string()]), 36);
    }
}
