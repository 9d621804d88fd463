//! Constructive inequalities between `K'` values. Each bound is certified
//! by building and running an explicit witness, never assumed.

use serde::Serialize;

use super::constructions::{
    applied_cost, chain_literal_cost, chain_witness, ignore_witness, pair_witness,
    print_overhead, print_witness, proj_witness, swap_witness, Parts,
};
use super::search::{KPrime, SearchError};
use crate::machine::io::{encode_pair, run};
use crate::machine::{BitString, Gas};

/// Extra bits paid when both witnesses of a composition read data and one
/// is frozen: `λz d. T z LIT(data)` adds 11 bits of wrapper plus the
/// literal, minus the data it replaces.
pub fn freeze_surcharge(a: &BitString, b: &BitString) -> usize {
    let (pa, pb) = (Parts::of(a), Parts::of(b));
    if !pa.reads_data() || !pb.reads_data() {
        return 0;
    }
    let cost = |p: &Parts| 11 + crate::combinators::literal_len(&p.data) - p.data.len();
    cost(&pa).min(cost(&pb))
}

fn certified(w: &BitString, z: &BitString, x: &BitString, gas: Gas) -> bool {
    let out = run(w, z, gas);
    out.is_valid() && out.output.as_ref() == Some(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct JointBounds {
    pub x: BitString,
    pub y: BitString,
    pub z: BitString,
    pub kx: usize,
    pub ky: usize,
    /// `K'(⟨x,y⟩|z)` after offering the pairing witness.
    pub kxy: usize,
    /// `K'(⟨y,x⟩|z)` after offering the swap witness.
    pub kyx: usize,
    pub c_pair: usize,
    pub c_swap: usize,
    pub c_proj: usize,
    pub freeze_bits: usize,
    pub pair_witness: BitString,
    pub swap_witness: BitString,
    pub proj_witness: BitString,
    /// `K'(⟨x,y⟩) ≤ K'(x) + K'(y) + c_pair` (plus any freezing).
    pub pair_ok: bool,
    /// `K'(⟨y,x⟩) ≤ K'(⟨x,y⟩) + c_swap`.
    pub swap_ok: bool,
    /// `K'(x) ≤ K'(⟨x,y⟩) + c_proj`.
    pub proj_ok: bool,
}

impl JointBounds {
    pub fn holds(&self) -> bool {
        self.pair_ok && self.swap_ok && self.proj_ok
    }
}

/// Builds and runs the pair, swap and projection constructions.
pub fn joint_bounds(
    kp: &mut KPrime,
    x: &BitString,
    y: &BitString,
    z: &BitString,
) -> Result<JointBounds, SearchError> {
    let gas = kp.gas;
    let ex = kp.estimate(x, z)?;
    let ey = kp.estimate(y, z)?;
    let xy = encode_pair(x, y);
    let yx = encode_pair(y, x);
    let pw = pair_witness(&ex.witness, &ey.witness);
    let freeze_bits = freeze_surcharge(&ex.witness, &ey.witness);
    let exy = kp.estimate_with(&xy, z, &[("pair", pw.clone())])?;
    let sw = swap_witness(&exy.witness);
    let eyx = kp.estimate_with(&yx, z, &[("swap", sw.clone())])?;
    let prw = proj_witness(&exy.witness);
    let c_pair = applied_cost("PAIR", 2);
    let c_swap = applied_cost("SWAP", 1);
    let c_proj = applied_cost("PROJ", 1);
    Ok(JointBounds {
        pair_ok: certified(&pw, z, &xy, gas)
            && exy.value_bits <= ex.value_bits + ey.value_bits + c_pair + freeze_bits,
        swap_ok: certified(&sw, z, &yx, gas) && eyx.value_bits <= exy.value_bits + c_swap,
        proj_ok: certified(&prw, z, x, gas) && ex.value_bits <= exy.value_bits + c_proj,
        x: x.clone(),
        y: y.clone(),
        z: z.clone(),
        kx: ex.value_bits,
        ky: ey.value_bits,
        kxy: exy.value_bits,
        kyx: eyx.value_bits,
        c_pair,
        c_swap,
        c_proj,
        freeze_bits,
        pair_witness: pw,
        swap_witness: sw,
        proj_witness: prw,
    })
}

/// `⟨x, ⟨bin k, z⟩⟩`, the condition handed to the second half of a chain.
pub fn augmented_condition(x: &BitString, k: usize, z: &BitString) -> BitString {
    encode_pair(x, &encode_pair(&BitString::from_uint(k as u64), z))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainRuleReport {
    pub x: BitString,
    pub y: BitString,
    pub z: BitString,
    /// `K'(⟨x,y⟩|z)`.
    pub lhs_bits: usize,
    /// `K'(x|z) + K'(y|⟨x, K'(x|z), z⟩)`.
    pub rhs_bits: usize,
    pub gap_bits: i64,
    pub kx: usize,
    pub ky_given: usize,
    pub c_chain: usize,
    /// Bits of the literal `bin K'(x|z)` the composition carries.
    pub literal_bits: usize,
    pub freeze_bits: usize,
    pub composed_witness: BitString,
    /// The composed witness runs to `⟨x,y⟩` and
    /// `lhs ≤ rhs + c_chain + literal_bits + freeze_bits`.
    pub certified: bool,
}

pub fn chain_rule_gap(
    kp: &mut KPrime,
    x: &BitString,
    y: &BitString,
    z: &BitString,
) -> Result<ChainRuleReport, SearchError> {
    let ex = kp.estimate(x, z)?;
    let k = ex.value_bits;
    let aug = augmented_condition(x, k, z);
    let ey = kp.estimate(y, &aug)?;
    let w = chain_witness(&ex.witness, k as u64, &ey.witness);
    let xy = encode_pair(x, y);
    let exy = kp.estimate_with(&xy, z, &[("chain", w.clone())])?;
    let rhs = ex.value_bits + ey.value_bits;
    let c_chain = applied_cost("CHAIN", 3);
    let literal_bits = chain_literal_cost(k as u64);
    let freeze_bits = freeze_surcharge(&ex.witness, &ey.witness);
    Ok(ChainRuleReport {
        certified: certified(&w, z, &xy, kp.gas)
            && exy.value_bits <= rhs + c_chain + literal_bits + freeze_bits,
        x: x.clone(),
        y: y.clone(),
        z: z.clone(),
        lhs_bits: exy.value_bits,
        rhs_bits: rhs,
        gap_bits: exy.value_bits as i64 - rhs as i64,
        kx: ex.value_bits,
        ky_given: ey.value_bits,
        c_chain,
        literal_bits,
        freeze_bits,
        composed_witness: w,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PrintReport {
    pub program: BitString,
    pub k_program: usize,
    pub c_print: usize,
    pub print_witness: BitString,
    /// `K'(p) ≤ |p| + c_print`, certified by running the print witness.
    pub holds: bool,
}

/// The upper side of the bound on the complexity of a program: printing
/// `p` costs at most `|p|` plus the printer.
pub fn print_bound(kp: &mut KPrime, p: &BitString) -> Result<PrintReport, SearchError> {
    let empty = BitString::new();
    let w = print_witness(p);
    let c_print = print_overhead(Parts::of(p).data.len());
    let e = kp.estimate_with(p, &empty, &[("print", w.clone())])?;
    Ok(PrintReport {
        holds: certified(&w, &empty, p, kp.gas) && e.value_bits <= p.len() + c_print,
        program: p.clone(),
        k_program: e.value_bits,
        c_print,
        print_witness: w,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NeutralityReport {
    pub x: BitString,
    pub n: u64,
    pub k_n: usize,
    /// `K'(x|z)`.
    pub plain: usize,
    /// `K'(x|⟨z, ⟨bin n, bin K'(n)⟩⟩)`.
    pub augmented: usize,
    pub c_skip: usize,
    pub plain_method: String,
    pub augmented_method: String,
    /// The augmented condition lowers `K'` by more than `c_skip`.
    pub non_neutral: bool,
    /// `augmented ≤ plain + c_skip`, certified by the ignore witness.
    pub skip_ok: bool,
}

/// The condition carrying `n` and `K'(n)` alongside `z`.
pub fn neutral_condition(z: &BitString, n: u64, k_n: usize) -> BitString {
    encode_pair(
        z,
        &encode_pair(&BitString::from_uint(n), &BitString::from_uint(k_n as u64)),
    )
}

/// Whether knowing `n` and `K'(n)` helps describe each candidate.
pub fn neutrality_check(
    kp: &mut KPrime,
    n: u64,
    candidates: &[BitString],
    z: &BitString,
) -> Result<Vec<NeutralityReport>, SearchError> {
    let k_n = kp.estimate(&BitString::from_uint(n), &BitString::new())?.value_bits;
    let aug = neutral_condition(z, n, k_n);
    let c_skip = applied_cost("IGNORE", 1);
    let mut out = Vec::new();
    for x in candidates {
        let plain = kp.estimate(x, z)?;
        let skip = ignore_witness(&plain.witness);
        let augmented = kp.estimate_with(x, &aug, &[("ignore", skip.clone())])?;
        out.push(NeutralityReport {
            x: x.clone(),
            n,
            k_n,
            plain: plain.value_bits,
            augmented: augmented.value_bits,
            c_skip,
            non_neutral: augmented.value_bits + c_skip < plain.value_bits,
            skip_ok: certified(&skip, &aug, x, kp.gas)
                && augmented.value_bits <= plain.value_bits + c_skip,
            plain_method: plain.method,
            augmented_method: augmented.method,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn kp() -> KPrime {
        KPrime::new(12, Gas::new(20_000))
    }

    #[test]
    fn joint_bounds_on_small_pairs() {
        let mut kp = kp();
        for (x, y) in [("", ""), ("0", "1"), ("0110", "1"), ("11", "")] {
            let r = joint_bounds(&mut kp, &bs(x), &bs(y), &bs("")).unwrap();
            assert!(r.holds(), "{r:?}");
            assert_eq!(r.c_pair, crate::combinators::size("PAIR") + 4);
        }
    }

    #[test]
    fn chain_rule_certifies() {
        let mut kp = kp();
        for (x, y, z) in [("", "", ""), ("1", "0", ""), ("01", "01", "1")] {
            let r = chain_rule_gap(&mut kp, &bs(x), &bs(y), &bs(z)).unwrap();
            assert!(r.certified, "{r:?}");
        }
    }

    #[test]
    fn print_lemma_upper_side() {
        let mut kp = kp();
        let r = print_bound(&mut kp, &bs("0000110")).unwrap();
        assert!(r.holds);
        assert!(r.k_program <= 7 + r.c_print);
    }

    #[test]
    fn unrelated_candidates_are_neutral() {
        let mut kp = kp();
        let reports = neutrality_check(&mut kp, 5, &[bs("0"), bs("1")], &bs("")).unwrap();
        for r in reports {
            assert!(!r.non_neutral && r.skip_ok, "{r:?}");
        }
    }

    #[test]
    fn binary_expansion_of_n_is_not_neutral() {
        let mut kp = kp();
        let n = 1u64 << 60;
        let r = neutrality_check(&mut kp, n, &[BitString::from_uint(n)], &bs("")).unwrap();
        assert!(r[0].non_neutral, "{:?}", r[0]);
        assert_eq!(r[0].augmented_method, "extract:FST_SND_Z");
    }
}
