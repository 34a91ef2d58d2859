use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use hwfuzz_fuzz::corpus::Origin;
use hwfuzz_fuzz::mutate::{Mutator, INTERESTING_8};

/// Every byte value the flip stages can turn `b` into.
fn flip_reachable(b: u8) -> BTreeSet<u8> {
    let mut out = BTreeSet::new();
    for run in [1u32, 2, 4] {
        for start in 0..=8 - run {
            let mask = ((1u16 << run) - 1) << start;
            out.insert(b ^ mask as u8);
        }
    }
    out.insert(!b);
    out
}

#[test]
fn single_byte_stages_match_the_reference_sets() {
    let m = Mutator::new(1, 8, 16, vec![]);
    for base in [0u8, 0x5A, 0x80, 0xFF, 37] {
        let cands: Vec<(Vec<u8>, Origin)> = m.deterministic(&[base]).collect();
        let of = |o: Origin| cands.iter().filter(|c| c.1 == o).map(|c| c.0[0]).collect::<Vec<_>>();

        // 8 single, 7 double, 5 nibble flips and one byte flip
        let flips = of(Origin::Flip);
        assert_eq!(flips.len(), 21);
        assert!(flips.iter().all(|v| flip_reachable(base).contains(v)));

        let flipset = flip_reachable(base);
        let want_arith: BTreeSet<u8> = (1..=35u8)
            .flat_map(|d| [base.wrapping_add(d), base.wrapping_sub(d)])
            .filter(|v| !flipset.contains(v))
            .collect();
        let arith = of(Origin::Arith);
        assert_eq!(
            arith.iter().copied().collect::<BTreeSet<_>>(),
            want_arith,
            "base {base:#x}"
        );
        assert_eq!(arith.len(), want_arith.len());

        let want_interest: BTreeSet<u8> = INTERESTING_8
            .iter()
            .copied()
            .filter(|v| !flipset.contains(v) && !want_arith.contains(v) && *v != base)
            .collect();
        assert_eq!(of(Origin::Interest).into_iter().collect::<BTreeSet<_>>(), want_interest);
    }
}

#[test]
fn bit_flips_walk_lsb_first() {
    let m = Mutator::new(2, 16, 4, vec![]);
    let firsts: Vec<Vec<u8>> = m.deterministic(&[0, 0]).take(9).map(|c| c.0).collect();
    assert_eq!(firsts[0], vec![0x01, 0]);
    assert_eq!(firsts[7], vec![0x80, 0]);
    assert_eq!(firsts[8], vec![0, 0x01]);
}

#[test]
fn stages_skip_bits_the_codec_ignores() {
    // 3-bit frames: only the low three bits of each byte reach the design
    let m = Mutator::new(1, 3, 8, vec![]);
    let base = [0u8, 0];
    for (c, origin) in m.deterministic(&base) {
        let changed: u8 = c.iter().zip(&base).map(|(a, b)| (a ^ b) & 0x07).fold(0, |x, y| x | y);
        assert!(changed != 0, "{origin:?} candidate {c:?} changes nothing");
    }
}

#[test]
fn ineffective_bytes_skip_value_stages() {
    let m = Mutator::new(1, 8, 8, vec![b"AB".to_vec()]);
    let base = [0u8, 0, 0];
    let mut stages = m.deterministic(&base);
    let (mut rest, mut dict) = (Vec::new(), Vec::new());
    while let Some((c, o)) = stages.next() {
        if let Some(pos) = stages.last_byte_flip() {
            if pos != 1 {
                stages.mark_ineffective(pos);
            }
        }
        match o {
            Origin::Arith | Origin::Interest => rest.push(c),
            Origin::Dict => dict.push(c),
            _ => {}
        }
    }
    assert!(!rest.is_empty());
    for c in &rest {
        assert_eq!((c[0], c[2]), (0, 0), "{c:?} touches an ineffective byte");
    }
    // tokens overlapping the effective byte are still tried
    assert_eq!(dict, vec![vec![b'A', b'B', 0], vec![0, b'A', b'B']]);
}

#[test]
fn dictionary_tokens_are_placed_at_every_offset() {
    let m = Mutator::new(1, 8, 8, vec![b"XY".to_vec(), vec![]]);
    let dict: Vec<Vec<u8>> = m
        .deterministic(&[0, 0, 0])
        .filter(|c| c.1 == Origin::Dict)
        .map(|c| c.0)
        .collect();
    assert_eq!(dict, vec![b"XY\0".to_vec(), b"\0XY".to_vec()]);
}

#[test]
fn havoc_is_reproducible_from_the_seed() {
    let m = Mutator::new(2, 12, 32, vec![b"tok".to_vec()]);
    let base: Vec<u8> = (0..16).collect();
    let partner: Vec<u8> = (100..130).collect();
    let draw = |seed| {
        let mut rng = SplitMix64::seed_from_u64(seed);
        (0..50)
            .map(|_| m.havoc(&base, Some(&partner), None, &mut rng))
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(4), draw(4));
    assert_ne!(draw(4), draw(5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn havoc_keeps_frames_aligned_and_bounded(
        fb in 1usize..4,
        frames in 0usize..12,
        pframes in 0usize..12,
        seed in any::<u64>(),
    ) {
        let m = Mutator::new(fb, (fb * 8) as u32, 16, vec![]);
        let base = vec![0xAAu8; fb * frames];
        let partner = vec![0x55u8; fb * pframes];
        let mut rng = SplitMix64::seed_from_u64(seed);
        let (out, origin) = m.havoc(&base, Some(&partner), None, &mut rng);
        prop_assert!(out.len() <= m.max_len().max(base.len()));
        prop_assert_eq!(out.len() % fb, 0);
        prop_assert!(matches!(origin, Origin::Havoc | Origin::Splice));
    }

    #[test]
    fn masked_havoc_touches_only_masked_bytes(
        len in 1usize..40,
        picks in proptest::collection::btree_set(0usize..40, 1..6),
        seed in any::<u64>(),
    ) {
        let m = Mutator::new(1, 8, 64, vec![b"zz".to_vec()]);
        let base: Vec<u8> = (0..len as u8).collect();
        let mask: Vec<usize> = picks.into_iter().filter(|&p| p < len).collect();
        prop_assume!(!mask.is_empty());
        let mut rng = SplitMix64::seed_from_u64(seed);
        let (out, origin) = m.havoc(&base, Some(&[9u8; 40]), Some(&mask), &mut rng);
        prop_assert!(out.len() >= base.len() && out.len() <= 64);
        prop_assert_eq!(origin, Origin::Havoc);
        for (i, (a, b)) in out.iter().zip(&base).enumerate() {
            prop_assert!(a == b || mask.contains(&i));
        }
    }

    #[test]
    fn deterministic_candidates_differ_from_base(base in proptest::collection::vec(any::<u8>(), 0..6)) {
        let m = Mutator::new(2, 13, 8, vec![b"q".to_vec()]);
        for (c, _) in m.deterministic(&base) {
            prop_assert_eq!(c.len(), base.len());
            prop_assert_ne!(&c, &base);
        }
    }
}
