use std::path::Path;

use proptest::prelude::*;

use subjfuse_core::calibration::{self, threshold_grid, DEFAULT_THRESHOLD};
use subjfuse_core::corpus::{
    self, ColumnConfig, DatasetSplit, GoldLabel, LanguageCode, SentenceRecord, SplitName,
};
use subjfuse_core::experiments::{disagreement_sets, quantile_linear};
use subjfuse_core::files::{self, PredictionRow};
use subjfuse_core::metrics;
use subjfuse_core::model::{
    self, focal_loss, softmax, weighted_ce, ClassWeights, Embedding, ProbabilityPair, TrainingConfig,
};
use subjfuse_core::sentiment::{self, SentimentCacheEntry, SentimentVector, SIMPLEX_TOLERANCE};

fn label() -> impl Strategy<Value = GoldLabel> {
    prop_oneof![Just(GoldLabel::Obj), Just(GoldLabel::Subj)]
}

fn labels(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<GoldLabel>> {
    prop::collection::vec(label(), n)
}

fn prob() -> impl Strategy<Value = ProbabilityPair> {
    (0.0..=1.0f64).prop_map(|p| ProbabilityPair::from_subj(p).unwrap())
}

fn simplex() -> impl Strategy<Value = SentimentVector> {
    (0.001..1.0f64, 0.001..1.0f64, 0.001..1.0f64).prop_map(|(a, b, c)| {
        let t = a + b + c;
        SentimentVector::from_provider([a / t, b / t, c / t]).unwrap()
    })
}

fn records(lang: &'static str) -> impl Strategy<Value = Vec<SentenceRecord>> {
    prop::collection::vec(("[A-Za-zÀ-ÿ0-9][A-Za-zÀ-ÿ0-9 ,.!?'\"-]{0,40}", prop::option::of(label())), 1..30).prop_map(
        move |rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (text, label))| SentenceRecord {
                    id: format!("s{i}"),
                    text,
                    label,
                    language: LanguageCode::new(lang).unwrap(),
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn tsv_round_trip(mut recs in records("bg")) {
        recs.iter_mut().for_each(|r| r.label = r.label.or(Some(GoldLabel::Obj)));
        let split = DatasetSplit::new(SplitName::Dev, recs).unwrap();
        let text = corpus::serialize_tsv(&split, &ColumnConfig::default()).unwrap();
        let lang = LanguageCode::new("bg").unwrap();
        let back = corpus::parse_tsv_str(&text, Path::new("x.tsv"), &lang, SplitName::Dev, &ColumnConfig::default(), None).unwrap();
        prop_assert_eq!(back, split);
    }

    #[test]
    fn unlabeled_test_split_round_trip(recs in records("de")) {
        let recs: Vec<_> = recs.into_iter().map(|r| SentenceRecord { label: None, ..r }).collect();
        let split = DatasetSplit::new(SplitName::Test, recs).unwrap();
        let text = corpus::serialize_tsv(&split, &ColumnConfig::default()).unwrap();
        let lang = LanguageCode::new("de").unwrap();
        let back = corpus::parse_tsv_str(&text, Path::new("x.tsv"), &lang, SplitName::Test, &ColumnConfig::default(), None).unwrap();
        prop_assert_eq!(back, split);
    }

    #[test]
    fn label_distribution_counts_every_record(gold in labels(1..=100)) {
        let lang = LanguageCode::new("it").unwrap();
        let recs = gold.iter().enumerate().map(|(i, l)| SentenceRecord {
            id: i.to_string(), text: "x".into(), label: Some(*l), language: lang.clone(),
        }).collect();
        let split = DatasetSplit::new(SplitName::Train, recs).unwrap();
        let d = corpus::label_distribution(&split).unwrap();
        prop_assert_eq!(d.total(), gold.len());
        prop_assert_eq!(d.subj, gold.iter().filter(|l| **l == GoldLabel::Subj).count());

        let other = DatasetSplit::new(SplitName::Train, split.records.iter().map(|r| SentenceRecord {
            language: LanguageCode::new("en").unwrap(), ..r.clone()
        }).collect()).unwrap();
        let merged = corpus::label_distribution(&corpus::merge_splits(&[&split, &other]).unwrap()).unwrap();
        prop_assert_eq!(merged, d + d);
    }

    #[test]
    fn f1_is_symmetric_in_predictions_and_gold(pairs in prop::collection::vec((label(), label()), 1..200)) {
        let (preds, gold): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let a = metrics::evaluate(&preds, &gold).unwrap();
        let b = metrics::evaluate(&gold, &preds).unwrap();
        prop_assert!((a.subj_f1 - b.subj_f1).abs() < 1e-12);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
        prop_assert_eq!(a.subj.precision, b.subj.recall);
        for v in [a.macro_f1, a.subj_f1, a.obj.f1, a.accuracy] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(a.confusion.total(), preds.len());
    }

    #[test]
    fn calibration_never_loses_to_default(
        rows in prop::collection::vec((prob(), label()), 2..120)
    ) {
        let (probs, mut gold): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        gold[0] = GoldLabel::Subj;
        gold[1] = GoldLabel::Obj;
        let d = calibration::grid_search_threshold(&probs, &gold).unwrap();
        prop_assert!(threshold_grid().contains(&d.tau));
        prop_assert!(d.dev_macro_f1 >= calibration::macro_f1_at(&probs, &gold, DEFAULT_THRESHOLD).unwrap());
        prop_assert!(d.curve.iter().all(|c| c.macro_f1 <= d.dev_macro_f1 + calibration::TIE_EPSILON));
        d.validate().unwrap();
    }

    #[test]
    fn raising_the_threshold_never_adds_subj(probs in prop::collection::vec(prob(), 1..50), i in 0usize..80) {
        let grid = threshold_grid();
        let lo = calibration::apply_threshold_all(&probs, grid[i]);
        let hi = calibration::apply_threshold_all(&probs, grid[i + 1]);
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(!(*a == GoldLabel::Obj && *b == GoldLabel::Subj));
        }
    }

    #[test]
    fn softmax_is_a_distribution(a in -50.0..50.0f64, b in -50.0..50.0f64) {
        let p = softmax([a, b]);
        prop_assert!((p.p_obj + p.p_subj - 1.0).abs() < 1e-12);
        prop_assert!(p.p_obj >= 0.0 && p.p_subj >= 0.0);
        if a != b {
            prop_assert_eq!(p.argmax(), if b > a { GoldLabel::Subj } else { GoldLabel::Obj });
        }
    }

    #[test]
    fn losses_are_nonnegative_and_focal_discounts(p in prob(), g in label(), gamma in 0.0..5.0f64) {
        let ce = weighted_ce(&p, g, &ClassWeights::UNIT);
        let fl = focal_loss(&p, g, 1.0, gamma);
        prop_assert!(ce >= 0.0 && fl >= 0.0);
        prop_assert!(fl <= ce + 1e-12);
    }

    #[test]
    fn fusion_appends_the_sentiment_vector(
        values in prop::collection::vec(-10.0..10.0f64, 1..128),
        s in simplex(),
    ) {
        let emb = Embedding { values: values.clone(), source: "p".into() };
        let f = model::fuse(&emb, &s).unwrap();
        prop_assert_eq!(f.values.len(), values.len() + 3);
        prop_assert_eq!(&f.values[..values.len()], &values[..]);
        prop_assert_eq!(f.sentiment_suffix(), s.to_array());
    }

    #[test]
    fn stub_output_is_on_the_simplex(text in ".{0,200}") {
        let v = sentiment::stub_score(&text).to_array();
        prop_assert!(v.iter().all(|x| *x > 0.0));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE);
    }

    #[test]
    fn near_simplex_provider_output_is_renormalized(s in simplex(), eps in -5e-4..5e-4f64) {
        let [a, b, c] = s.to_array();
        let v = SentimentVector::from_provider([a + eps, b, c]);
        if a + eps >= 0.0 {
            let v = v.unwrap().to_array();
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE);
        }
    }

    #[test]
    fn schedule_stays_within_bounds(total in 1usize..500, frac in 0.0..0.5f64, lr in 1e-6..1e-1f64) {
        let config = TrainingConfig { learning_rate: lr, warmup_fraction: frac, ..TrainingConfig::default() };
        let warm = model::warmup_steps(total, frac);
        let mut prev = 0.0;
        for step in 0..=total {
            let v = lr_checked(step, total, &config);
            prop_assert!((0.0..=lr * (1.0 + 1e-12)).contains(&v));
            if step <= warm { prop_assert!(v >= prev); } else { prop_assert!(v <= prev); }
            prev = v;
        }
        prop_assert_eq!(lr_checked(total, total, &config), 0.0);
    }

    #[test]
    fn predictions_round_trip_exactly(rows in prop::collection::vec((prob(), label()), 1..50)) {
        let rows: Vec<PredictionRow> = rows.into_iter().enumerate()
            .map(|(i, (probs, predicted))| PredictionRow { id: format!("id-{i}"), probs, predicted })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        files::write_predictions(&path, &rows).unwrap();
        prop_assert_eq!(files::read_predictions(&path).unwrap(), rows);
    }

    #[test]
    fn sentiment_cache_round_trip(vs in prop::collection::vec(simplex(), 1..40)) {
        let lang = LanguageCode::new("ar").unwrap();
        let entries: Vec<_> = vs.iter().enumerate().map(|(i, v)| SentimentCacheEntry {
            sentence_id: format!("s{i}"), language: lang.clone(), vector: *v, provider_id: "p".into(),
        }).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        sentiment::write_cache(&entries, &path).unwrap();
        let back = sentiment::read_cache(&path).unwrap();
        prop_assert_eq!(back.len(), entries.len());
        for (a, b) in back.iter().zip(&entries) {
            prop_assert_eq!(&a.sentence_id, &b.sentence_id);
            for (x, y) in a.vector.to_array().iter().zip(b.vector.to_array()) {
                prop_assert!((x - y).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn head_parameters_survive_json_exactly(w in prop::collection::vec((-1e3..1e3f64, -1e-300..1e-300f64), 1..40)) {
        let head = model::ClassifierHead { weights: w.iter().map(|(a, b)| [*a, *b]).collect(), bias: [w[0].1, w[0].0] };
        let back: model::ClassifierHead = serde_json::from_str(&serde_json::to_string(&head).unwrap()).unwrap();
        prop_assert_eq!(back, head);
    }

    #[test]
    fn disagreement_sets_partition(
        triples in prop::collection::vec((label(), label(), label()), 0..100)
    ) {
        let a: Vec<_> = triples.iter().map(|t| t.0).collect();
        let b: Vec<_> = triples.iter().map(|t| t.1).collect();
        let g: Vec<_> = triples.iter().map(|t| t.2).collect();
        let s = disagreement_sets(&a, &b, &g).unwrap();
        let sizes = s.a_only_correct.len() + s.b_only_correct.len() + s.both_correct.len() + s.neither_correct.len();
        prop_assert_eq!(sizes, triples.len());
        let a_correct = a.iter().zip(&g).filter(|(x, y)| x == y).count();
        prop_assert_eq!(s.a_only_correct.len() + s.both_correct.len(), a_correct);
    }

    #[test]
    fn quantiles_are_monotone_and_bounded(mut data in prop::collection::vec(0.0..1.0f64, 1..60)) {
        data.sort_by(f64::total_cmp);
        let qs = [0.0, 0.25, 0.5, 0.75, 1.0].map(|p| quantile_linear(&data, p));
        prop_assert_eq!(qs[0], data[0]);
        prop_assert_eq!(qs[4], *data.last().unwrap());
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
    }
}

fn lr_checked(step: usize, total: usize, config: &TrainingConfig) -> f64 {
    model::lr_at_step(step, total, config).unwrap()
}
