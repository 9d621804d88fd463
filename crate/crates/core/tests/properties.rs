use proptest::prelude::*;

use occam_core::enumerator::census::{vote_census, CensusConfig, OutputKey};
use occam_core::enumerator::{codes_of_len, valid_programs};
use occam_core::ledger::{model_complexity, Definition, ModelManifest, Registry};
use occam_core::machine::{
    decode_pair, decode_term, encode_pair, encode_term, run, BitString, Gas, RunStatus, Term,
};
use occam_core::verify::{closure_oracle, naive_counts};

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bits)
}

/// A term over indices 1..=4, closed by wrapping as many abstractions as
/// its deepest free index needs.
fn closed_term() -> impl Strategy<Value = Term> {
    let leaf = (1u32..=4).prop_map(Term::var);
    let open = leaf.prop_recursive(6, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Term::lam),
            (inner.clone(), inner).prop_map(|(f, a)| Term::app(f, a)),
        ]
    });
    open.prop_map(|t| {
        let mut t = t;
        while !t.is_closed() {
            t = Term::lam(t);
        }
        t
    })
}

fn short_code() -> impl Strategy<Value = BitString> {
    let codes: Vec<BitString> = (4..=12).flat_map(codes_of_len).collect();
    prop::sample::select(codes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codec_round_trip(t in closed_term(), tail in bits(8)) {
        let code = encode_term(&t);
        let (back, used) = decode_term(&code.concat(&tail)).unwrap();
        prop_assert_eq!(back, t);
        prop_assert_eq!(used, code.len());
    }

    #[test]
    fn codes_are_prefix_free(a in closed_term(), b in closed_term()) {
        let (ca, cb) = (encode_term(&a), encode_term(&b));
        if a != b {
            prop_assert!(!ca.is_prefix_of(&cb) && !cb.is_prefix_of(&ca));
        }
    }

    #[test]
    fn pairing_round_trip(x in bits(10), y in bits(10)) {
        let p = encode_pair(&x, &y);
        prop_assert_eq!(p.len(), 2 * x.len() + 1 + y.len());
        prop_assert_eq!(decode_pair(&p).unwrap(), (x, y));
    }

    #[test]
    fn hex_round_trip(x in bits(40)) {
        prop_assert_eq!(BitString::from_hex(&x.to_hex(), x.len()), Some(x));
    }

    #[test]
    fn valid_programs_do_not_extend(code in short_code(), data in bits(6), extra in bits(4)) {
        let z = BitString::new();
        let p = code.concat(&data);
        let out = run(&p, &z, Gas::new(2_000));
        if out.is_valid() && !extra.is_empty() {
            let longer = run(&p.concat(&extra), &z, Gas::new(2_000));
            prop_assert!(!longer.is_valid());
            prop_assert_eq!(longer.status, RunStatus::Halted);
            prop_assert_eq!(longer.output, out.output);
        }
    }

    #[test]
    fn more_gas_never_changes_a_halted_result(
        code in short_code(),
        data in bits(6),
        z in bits(3),
        g in 1u64..400,
        more in 0u64..5_000,
    ) {
        let p = code.concat(&data);
        let small = run(&p, &z, Gas::new(g));
        if small.status == RunStatus::Halted {
            let big = run(&p, &z, Gas::new(g + more));
            prop_assert_eq!(big, small);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn census_matches_naive_oracle(n in 0usize..=10, z in bits(2)) {
        let gas = Gas::new(2_000);
        let census = vote_census(n, &z, &CensusConfig::with_gas(gas)).unwrap();
        let naive = naive_counts(n, &z, gas);
        let counted: std::collections::BTreeMap<BitString, u64> = census
            .counts
            .iter()
            .filter_map(|(k, &v)| match k {
                OutputKey::Bits(b) => Some((b.clone(), v)),
                OutputKey::Overflow => None,
            })
            .collect();
        prop_assert_eq!(census.unresolved, 0);
        prop_assert_eq!(counted, naive);
    }

    #[test]
    fn kraft_and_prefix_freeness(z in bits(3)) {
        let pc = valid_programs(14, &z, &CensusConfig::with_gas(Gas::new(2_000))).unwrap();
        prop_assert!(pc.kraft_numerator() <= 1u128 << 14);
        prop_assert!(pc.prefix_pairs().is_empty());
    }
}

/// Dependencies of node i: a subset of earlier nodes.
fn dag() -> impl Strategy<Value = Vec<(Vec<usize>, u64)>> {
    (1usize..20).prop_flat_map(|n| {
        (0..n)
            .map(|i| {
                (
                    prop::collection::vec(0..i.max(1), 0..=i.min(4)),
                    1u64..500,
                )
                    .prop_map(move |(deps, c)| {
                        let deps = if i == 0 { vec![] } else { deps };
                        (deps, c)
                    })
            })
            .collect::<Vec<_>>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closure_cost_matches_reachability(
        nodes in dag(),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..5),
        repeat in 1u64..4,
    ) {
        let mut reg = Registry::new();
        for (i, (deps, cost)) in nodes.iter().enumerate() {
            let mut names: Vec<String> = deps.iter().map(|d| format!("n{d}")).collect();
            names.sort();
            names.dedup();
            let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            reg.register_definition(Definition::audited(&format!("n{i}"), &names, *cost, "p"))
                .unwrap();
        }
        let roots: Vec<String> = picks.iter().map(|p| format!("n{}", p.index(nodes.len()))).collect();
        let m = |count: u64| ModelManifest {
            name: "m".into(),
            problem_id: "p".into(),
            references: roots.iter().map(|r| (r.clone(), count)).collect(),
            ..Default::default()
        };
        let once = model_complexity(&m(1), &reg).unwrap();
        prop_assert_eq!(once.definition_bits, closure_oracle(&reg, &roots));
        // Repeated references add index costs only.
        let many = model_complexity(&m(repeat), &reg).unwrap();
        let distinct = once.reference_bits / reg.reference_cost();
        prop_assert_eq!(
            many.total_bits - once.total_bits,
            (repeat - 1) * distinct * reg.reference_cost()
        );
    }
}
