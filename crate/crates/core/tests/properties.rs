use std::collections::BTreeSet;

mod common;

use common::random_state;
use knotenum::arch_state::ArchState;
use knotenum::transfer::{Transfer, WeightedStateMap};
use knotenum::weight::Exact;
use knotenum::EnumerationOptions;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn reduction_is_confluent_and_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let pairs = rng.gen_range(0..6);
        let arches = rng.gen_range(0..5);
        let s = random_state(&mut rng, pairs, arches);
        let r = s.reduce();
        assert!(r.is_canonical(), "{s} -> {r}");
        assert_eq!(r.reduce(), r);
        for _ in 0..3 {
            let mut pick = ChaCha8Rng::seed_from_u64(rng.gen());
            let by_rules = s.reduce_by_rules(|rules| pick.gen_range(0..rules.len()));
            assert_eq!(by_rules, r, "rewriting {s} ends elsewhere");
        }
    }
}

proptest! {
    #[test]
    fn text_round_trip(seed in any::<u64>(), pairs in 0usize..6, arches in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng, pairs, arches).reduce();
        let back: ArchState = s.to_string().parse().unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn key_round_trip(seed in any::<u64>(), pairs in 0usize..12, arches in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng, pairs, arches).reduce();
        let key = s.encode_key().unwrap();
        prop_assert_eq!(ArchState::decode_key(&key).unwrap(), s);
    }

    #[test]
    fn non_canonical_keys_are_refused(seed in any::<u64>(), pairs in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng, pairs, 3);
        prop_assert_eq!(s.encode_key().is_ok(), s.is_canonical());
    }
}

fn reachable(options: EnumerationOptions) -> Vec<BTreeSet<ArchState>> {
    let t = Transfer::new(options, Exact).unwrap();
    let mut map: WeightedStateMap<_> = t.initial();
    let mut out = Vec::new();
    for _ in 0..t.total_steps() {
        map = t.step(&map);
        out.push(
            map.states
                .keys()
                .map(|k| ArchState::decode_key(k).unwrap())
                .collect(),
        );
    }
    out
}

#[test]
fn reachable_keys_round_trip() {
    let mut count = 0;
    for tadpoles in [true, false] {
        for step in reachable(knotenum::oracle::mixed_options(6, tadpoles)) {
            for s in step {
                assert!(s.is_canonical());
                let key = s.encode_key().unwrap();
                assert_eq!(ArchState::decode_key(&key).unwrap(), s);
                count += 1;
            }
        }
    }
    assert!(count > 1000, "{count}");
}

#[test]
fn line_count_tracks_second_visits() {
    let run = common::instrumented_run(8).unwrap();
    for (k, step) in run.iter().enumerate() {
        for (s, visits) in step {
            common::check_state(k + 1, s, visits).unwrap();
        }
    }
}
