mod common;

use common::*;
use kgqa::affinity::{affinity, EmbeddingStore};
use kgqa::graph::{PhraseTerm, PhraseTriplePattern};
use kgqa::planner::{enumerate_bgps, plan, score_bgp, top_k_bgps, top_k_bgps_exhaustive};
use kgqa::understanding::{encode_patterns, parse_model_output};
use proptest::prelude::*;
use std::collections::HashSet;

fn label() -> impl Strategy<Value = String> {
    "[^\\[\\s]([^\\[\\n]{0,12}[^\\[\\s])?".prop_filter("reads as a variable", |s| !s.starts_with("var:"))
}

fn term() -> impl Strategy<Value = PhraseTerm> {
    prop_oneof![(1u32..6).prop_map(PhraseTerm::variable), label().prop_map(PhraseTerm::entity)]
}

fn pattern() -> impl Strategy<Value = PhraseTriplePattern> {
    (term(), label(), term())
        .prop_filter("ends must differ", |(s, _, o)| s != o)
        .prop_map(|(s, r, o)| PhraseTriplePattern::new(s, r, o))
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            prop::sample::select(vec!["sea", "city", "flows", "danish", "straits", "outflow", "nearest", "shore"])
                .prop_map(str::to_string),
            "[a-z]{1,8}",
        ],
        1..5,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn codec_round_trip(patterns in prop::collection::vec(pattern(), 1..5)) {
        let text = encode_patterns(&patterns).unwrap();
        prop_assert_eq!(parse_model_output(&text).unwrap(), patterns);
    }

    #[test]
    fn enumeration_counts_every_combination(seed in any::<u64>()) {
        let agp = random_agp(seed);
        let all = enumerate_bgps(&agp).unwrap();
        prop_assert_eq!(all.len(), combination_count(&agp));
        let distinct: HashSet<String> = all.iter().map(triple_key).collect();
        prop_assert_eq!(distinct.len(), all.len());
    }

    #[test]
    fn lazy_top_k_matches_full_sort(seed in any::<u64>(), k in 1usize..30) {
        let agp = random_agp(seed);
        let lazy = top_k_bgps(&agp, k).unwrap();
        let full = top_k_bgps_exhaustive(&agp, k).unwrap();
        prop_assert_eq!(lazy, full);
    }

    #[test]
    fn affinity_is_symmetric_and_bounded(x in words(), y in words()) {
        let store = fixture_store();
        let a = affinity(&x, &y, &store).unwrap();
        let b = affinity(&y, &x, &store).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&a));
        prop_assert!((a - brute_force_affinity(&x, &y, &store)).abs() <= 1e-9);
    }

    #[test]
    fn affinity_ignores_case_and_punctuation(x in words(), y in words()) {
        let store = fixture_store();
        let plain = affinity(&x, &y, &store).unwrap();
        let noisy = affinity(&format!("{}!", x.to_uppercase()), &format!("\"{y}\""), &store).unwrap();
        prop_assert!((plain - noisy).abs() <= 1e-12);
    }

    #[test]
    fn word_vector_scale_does_not_matter(x in words(), y in words(), factor in 0.1f32..10.0) {
        let store = fixture_store();
        let mut scaled = EmbeddingStore::char_only(store.dimension());
        for t in store.tokens() {
            scaled.insert(t, store.get(t).unwrap().iter().map(|v| v * factor).collect()).unwrap();
        }
        let a = affinity(&x, &y, &store).unwrap();
        let b = affinity(&x, &y, &scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn bgp_scores_match_recomputation(seed in any::<u64>()) {
        let agp = random_agp(seed);
        for bgp in enumerate_bgps(&agp).unwrap() {
            prop_assert!((score_bgp(&bgp, &agp) - eq2_oracle(&bgp, &agp)).abs() <= 1e-12);
            prop_assert_eq!(bgp.score, score_bgp(&bgp, &agp));
        }
    }

    #[test]
    fn plans_are_deterministic_and_sorted(seed in any::<u64>()) {
        let agp = random_agp(seed);
        let first = plan(&agp, None, 40).unwrap();
        for _ in 0..10 {
            prop_assert_eq!(&plan(&agp, None, 40).unwrap(), &first);
        }
        for w in first.windows(2) {
            prop_assert!(w[0].bgp.score >= w[1].bgp.score);
        }
        prop_assert!(first.iter().enumerate().all(|(i, p)| p.rank == i + 1));
    }
}

#[test]
fn mixed_sources_contribute_nothing() {
    let store = fixture_store();
    // "sea" has a word vector, "qqqq" does not
    assert_eq!(affinity("sea", "qqqq", &store).unwrap(), 0.0);
    let half = affinity("sea", "sea qqqq", &store).unwrap();
    assert!((half - 0.5).abs() < 1e-12, "{half}");
}
