//! Values frozen from the independent reference in `oracle/derive.py`.

use subjfuse_core::calibration;
use subjfuse_core::corpus::{GoldLabel, LabelDistribution};
use subjfuse_core::experiments::quantile_linear;
use subjfuse_core::model::{
    class_weights, focal_loss_grad, lr_at_step, weighted_ce_grad, ClassWeights, Encoder, ProbabilityPair,
    ToyHashEncoder, TrainingConfig,
};
use subjfuse_core::sentiment::{fnv1a64, stub_score};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn class_weights_for_reference_train_splits() {
    let cases = [
        ((1391, 1055), (0.8792235801581596, 1.1592417061611375)),
        ((406, 323), (0.8977832512315271, 1.1284829721362228)),
        ((532, 298), (0.7800751879699248, 1.3926174496644295)),
        ((492, 308), (0.8130081300813008, 1.2987012987012987)),
        ((1231, 382), (0.6551584077985377, 2.1112565445026177)),
    ];
    for ((obj, subj), (w_obj, w_subj)) in cases {
        let w = class_weights(&LabelDistribution { obj, subj }).unwrap();
        assert!(close(w.obj, w_obj, 1e-15) && close(w.subj, w_subj, 1e-15), "{obj}/{subj}");
    }
}

#[test]
fn fnv1a_over_utf8_words() {
    assert_eq!(fnv1a64("subjective".as_bytes()), 0x00a28d7dc87ddc0b);
    assert_eq!(fnv1a64("объективен".as_bytes()), 0xa429c53427f13993);
    assert_eq!(fnv1a64("موضوعي".as_bytes()), 0xa50eed6f97eb55e5);
    assert_eq!(fnv1a64("Zeitung".as_bytes()), 0xe64954c884a33237);
}

#[test]
fn stub_scores() {
    let cases = [
        ("The council approved the budget.", [0.375, 0.25, 0.375]),
        ("What a disgraceful decision!", [3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0]),
        ("Это ужасно, правда", [1.0 / 3.0; 3]),
        ("Die Zeitung berichtet 2025", [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]),
    ];
    for (text, want) in cases {
        let got = stub_score(text).to_array();
        assert!(got.iter().zip(want).all(|(g, w)| close(*g, w, 1e-15)), "{text}: {got:?}");
    }
}

#[test]
fn toy_encoder_embeddings() {
    let enc = ToyHashEncoder::new(64, 256).unwrap();
    let a = 0.2581988897471611;
    let hello = [(0, a), (2, 2.0 * a), (13, a), (16, a), (18, a), (24, a), (30, a), (43, a), (46, a), (52, a), (53, a), (56, a)];
    let b = 0.17407765595569785;
    let council = [
        (1, b), (12, b), (13, b), (16, b), (23, b), (25, b), (32, 2.0 * b), (34, 2.0 * b), (36, b), (39, b),
        (40, 2.0 * b), (45, 2.0 * b), (48, b), (54, b), (56, b), (59, 2.0 * b), (60, b), (62, b),
    ];
    for (text, want) in [("Hello, World!", &hello[..]), ("  the  Council   APPROVED it ", &council[..])] {
        let v = enc.encode(text).unwrap().values;
        let nonzero: Vec<(usize, f64)> = v.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
        assert_eq!(nonzero.len(), want.len(), "{text}");
        for ((i, x), (j, y)) in nonzero.iter().zip(want) {
            assert_eq!(i, j, "{text}");
            assert!(close(*x, *y, 1e-12), "{text}[{i}]: {x} vs {y}");
        }
    }
    let short = ToyHashEncoder::new(64, 2).unwrap();
    assert_eq!(short.encode("one two three four").unwrap().values, enc.encode("one two").unwrap().values);
}

#[test]
fn linear_warmup_decay_schedule() {
    let config = TrainingConfig::default();
    let cases = [
        (0, 0.0),
        (1, 1e-6),
        (5, 5e-6),
        (9, 9e-6),
        (10, 1e-5),
        (11, 9.888888888888889e-06),
        (55, 5e-6),
        (99, 1.1111111111111112e-07),
        (100, 0.0),
    ];
    for (step, want) in cases {
        let got = lr_at_step(step, 100, &config).unwrap();
        assert!((got - want).abs() <= 1e-12 * 1e-5, "step {step}: {got}");
    }
    assert!((lr_at_step(3, 7, &config).unwrap() - 6.6666666666666675e-06).abs() <= 1e-17);
}

#[test]
fn loss_values_and_gold_logit_gradients() {
    let cases = [
        ([0.3, -1.2], GoldLabel::Subj, 1.3926, 1.0, 2.0, [2.369388130918781, -1.138554215547268, 1.1372723156191766, -0.9614246874703601]),
        ([2.0, 0.5], GoldLabel::Obj, 0.7801, 0.5, 1.5, [0.15712249815434515, -0.1423101511213386, 0.007846690173965921, -0.016729842672484476]),
        ([-0.7, 0.9], GoldLabel::Obj, 2.0, 1.0, 0.0, [3.567801481776678, -1.664036770267849, 1.783900740888339, -0.8320183851339245]),
    ];
    for (logits, gold, w, alpha, gamma, [wce, dwce, focal, dfocal]) in cases {
        let (l, g) = weighted_ce_grad(logits, gold, &ClassWeights { obj: w, subj: w });
        assert!(close(l, wce, 1e-12) && close(g[gold.index()], dwce, 1e-12), "{logits:?} wce");
        assert_eq!(g[gold.other().index()], -g[gold.index()]);
        let (l, g) = focal_loss_grad(logits, gold, alpha, gamma);
        assert!(close(l, focal, 1e-12) && close(g[gold.index()], dfocal, 1e-12), "{logits:?} focal");
    }
}

#[test]
fn grid_search_on_a_noisy_dev_set() {
    use GoldLabel::{Obj as O, Subj as S};
    let p = [0.12, 0.31, 0.38, 0.42, 0.47, 0.52, 0.58, 0.61, 0.66, 0.74, 0.81, 0.93];
    let gold = [O, O, S, O, S, O, S, O, S, S, O, S];
    let probs: Vec<_> = p.iter().map(|&x| ProbabilityPair::from_subj(x).unwrap()).collect();
    let d = calibration::grid_search_threshold(&probs, &gold).unwrap();
    assert_eq!(d.tau, 0.53);
    assert!(close(d.dev_macro_f1, 0.6666666666666666, 1e-12));
    assert!(close(calibration::macro_f1_at(&probs, &gold, 0.5).unwrap(), 0.5804195804195804, 1e-12));
}

#[test]
fn quartiles_match_numpy_linear() {
    let mut data = [0.91, 0.05, 0.33, 0.47, 0.12, 0.78, 0.64];
    data.sort_by(f64::total_cmp);
    let got = [0.25, 0.5, 0.75].map(|p| quantile_linear(&data, p));
    for (g, w) in got.iter().zip([0.225, 0.47, 0.71]) {
        assert!(close(*g, w, 1e-12), "{got:?}");
    }
}
