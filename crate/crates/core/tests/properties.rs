use defsim_core::consensus::{average_similarity, evaluate_new, EvaluationSettings, SelfExclusion};
use defsim_core::corpus::{parse_corpus_str, Corpus, Definition, DefinitionKind};
use defsim_core::embedding::{
    local_deterministic_embed, Embedder, EmbeddingVector, ProviderConfig,
};
use defsim_core::similarity::{cosine, SimilarityMatrix};
use proptest::prelude::*;

fn vector(values: Vec<f64>) -> EmbeddingVector {
    EmbeddingVector::new(values, "m", "v").unwrap()
}

fn nonzero_vec(dim: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..64).prop_flat_map(|d| (nonzero_vec(d..d + 1), nonzero_vec(d..d + 1)))
}

const WORDS: &[&str] = &[
    "smart", "city", "data", "sensors", "urban", "ict", "iot", "quality", "life", "x",
];

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..12).prop_map(|w| w.join(" "))
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    prop::collection::vec(text(), 1..8).prop_map(|texts| {
        let defs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Definition::new(format!("d{i}"), t, DefinitionKind::Individual, "").unwrap()
            })
            .collect();
        Corpus::new("p", defs).unwrap()
    })
}

proptest! {
    #[test]
    fn cosine_symmetric_bitwise((a, b) in pair()) {
        let (a, b) = (vector(a), vector(b));
        prop_assert_eq!(cosine(&a, &b).unwrap().value().to_bits(), cosine(&b, &a).unwrap().value().to_bits());
    }

    #[test]
    fn cosine_self_and_scale((a, b) in pair(), c in 1e-3f64..1e3) {
        let (a, b) = (vector(a), vector(b));
        prop_assert!((cosine(&a, &a).unwrap().value() - 1.0).abs() <= 1e-9);
        let scaled = a.scaled(c, "s").unwrap();
        prop_assert!((cosine(&scaled, &b).unwrap().value() - cosine(&a, &b).unwrap().value()).abs() <= 1e-9);
        let s = cosine(&a, &b).unwrap().value();
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn local_embedding_has_unit_norm(t in text(), dim in 1usize..512) {
        let v = local_deterministic_embed(&t, dim).unwrap();
        prop_assert!((v.norm() - 1.0).abs() <= 1e-12);
        let recomputed = v.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((recomputed - v.norm()).abs() <= 1e-9 * v.norm());
    }

    #[test]
    fn corpus_order_does_not_change_vectors(c in corpus_strategy(), seed in any::<u64>()) {
        let mut ids: Vec<&str> = c.ids();
        let n = ids.len();
        ids.rotate_left((seed as usize) % n);
        let permuted = c.subset(&ids).unwrap();
        let e1 = Embedder::from_config(&ProviderConfig::local(64)).unwrap();
        let e2 = Embedder::from_config(&ProviderConfig::local(64)).unwrap();
        let a = e1.embed_corpus(&c).unwrap();
        let b = e2.embed_corpus(&permuted).unwrap();
        for id in c.ids() {
            prop_assert_eq!(a.get(id).unwrap(), b.get(id).unwrap());
        }
    }

    #[test]
    fn jsonl_round_trip_and_full_subset(c in corpus_strategy()) {
        let back = parse_corpus_str("p", &c.to_jsonl()).unwrap();
        prop_assert!(back.same_content(&c));
        prop_assert_eq!(back.definitions(), c.definitions());
        prop_assert!(c.subset(&c.ids()).unwrap().same_content(&c));
    }

    #[test]
    fn average_lies_within_row_range(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 1..5)
    ) {
        let cands: Vec<String> = (0..rows.len()).map(|i| format!("c{i}")).collect();
        let refs: Vec<String> = (0..6).map(|i| format!("r{i}")).collect();
        let m = SimilarityMatrix::from_rows("m", cands.clone(), refs, rows).unwrap();
        for (i, id) in cands.iter().enumerate() {
            let avg = average_similarity(&m, id, &SelfExclusion::none()).unwrap().average;
            let row = m.row(i);
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= avg + 1e-15 && avg <= hi + 1e-15);
        }
    }

    #[test]
    fn including_a_perfect_self_score_raises_the_mean(
        others in prop::collection::vec(-1.0f64..0.999, 1..60)
    ) {
        let mut row = vec![1.0];
        row.extend(&others);
        let refs: Vec<String> = std::iter::once("me".to_string())
            .chain((0..others.len()).map(|i| format!("r{i}")))
            .collect();
        let m = SimilarityMatrix::from_rows("m", vec!["me".into()], refs, vec![row]).unwrap();
        let without = average_similarity(&m, "me", &SelfExclusion::by_id()).unwrap();
        let with = average_similarity(&m, "me", &SelfExclusion::none()).unwrap();
        prop_assert!(without.average < 1.0);
        prop_assert!(with.average > without.average);
        prop_assert_eq!(with.n_used, without.n_used + 1);
    }

    #[test]
    fn threshold_extremes(t in text(), c in corpus_strategy()) {
        let e = Embedder::from_config(&ProviderConfig::local(32)).unwrap();
        let cand = Definition::new("cand", &t, DefinitionKind::External, "").unwrap();
        let always = EvaluationSettings { threshold: -1.0, ..Default::default() };
        let never = EvaluationSettings { threshold: 1.0 + 1e-9, ..Default::default() };
        prop_assert!(evaluate_new(&cand, &c, None, &always, &e).unwrap().admitted);
        prop_assert!(!evaluate_new(&cand, &c, None, &never, &e).unwrap().admitted);
    }
}
