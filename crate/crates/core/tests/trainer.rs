use std::collections::HashSet;

use negex_core::corpus::{build_vocab, generate_synthetic, split, CorpusConfig};
use negex_core::losses::{LossConfig, LossKind, BINARY_WEIGHT};
use negex_core::model::{LanguageModel, LmConfig};
use negex_core::negex::AnnotatedSentence;
use negex_core::trainer::{perplexity, schedule_margin_batches, train, TrainConfig, TrainLog};
use negex_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Data {
    train: Vec<AnnotatedSentence>,
    dev: Vec<AnnotatedSentence>,
}

fn data(n: usize) -> Data {
    let corpus = generate_synthetic(&CorpusConfig::new(n, 21)).unwrap();
    let [train, dev, _] = split(&corpus, [0.8, 0.1, 0.1], 3).unwrap();
    Data { train, dev }
}

fn model(d: &Data, seed: u64) -> LanguageModel {
    let vocab = build_vocab(&d.train, 1);
    let cfg = LmConfig {
        num_layers: 1,
        embed_dim: 16,
        hidden_dim: 24,
        ..LmConfig::desk(vocab.len())
    };
    LanguageModel::new(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn quick() -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        max_epochs: 1,
        check_interval: 10,
        clip_norm: Some(0.25),
        ..TrainConfig::default()
    }
}

/// Halving happens exactly at checks that fail to beat the best perplexity so far.
fn assert_anneal_rule(log: &TrainLog, cfg: &TrainConfig) {
    let mut best = f64::INFINITY;
    for w in log.records.windows(2) {
        let (r, next) = (&w[0], &w[1]);
        let expected = if r.dev_ppl < best {
            r.lr
        } else {
            (r.lr * cfg.anneal_factor).max(cfg.lr_floor)
        };
        assert_eq!(next.lr, expected, "after step {}", r.step);
        best = best.min(r.dev_ppl);
    }
    assert_eq!(log.best_dev_ppl, best.min(log.records.last().unwrap().dev_ppl));
}

#[test]
fn frozen_model_halves_the_rate_at_every_check() {
    let d = data(400);
    let mut m = model(&d, 1);
    // A vanishing clip norm freezes the parameters, so dev perplexity never improves.
    let cfg = TrainConfig {
        clip_norm: Some(1e-300),
        weight_decay: 0.0,
        max_epochs: 3,
        ..quick()
    };
    let log = train(&mut m, &d.train, &d.dev, &LossConfig::baseline(), &cfg).unwrap();
    let lrs: Vec<f64> = log.records.iter().map(|r| r.lr).collect();
    assert_eq!(lrs[..4], [20.0, 20.0, 10.0, 5.0]);
    assert!(log.records.windows(2).all(|w| w[0].dev_ppl == w[1].dev_ppl));
    assert_eq!(log.best_step, log.records[0].step);
}

#[test]
fn rate_stops_at_the_floor() {
    let d = data(400);
    let mut m = model(&d, 1);
    let cfg = TrainConfig {
        clip_norm: Some(1e-300),
        weight_decay: 0.0,
        initial_lr: 1e-3,
        lr_floor: 2e-4,
        check_interval: 2,
        ..quick()
    };
    let log = train(&mut m, &d.train, &d.dev, &LossConfig::baseline(), &cfg).unwrap();
    let last = log.records.last().unwrap().lr;
    assert_eq!(last, 2e-4);
    assert!(log.records.iter().all(|r| r.lr >= 2e-4));
    assert_anneal_rule(&log, &cfg);
}

#[test]
fn short_training_beats_the_uniform_model() {
    let d = data(1500);
    let mut m = model(&d, 2);
    let v = m.vocab.len() as f64;
    let before = perplexity(&m, &d.dev).unwrap();
    let cfg = TrainConfig { max_epochs: 2, ..quick() };
    let log = train(&mut m, &d.train, &d.dev, &LossConfig::baseline(), &cfg).unwrap();
    let after = perplexity(&m, &d.dev).unwrap();
    assert!(after < before && after < v / 4.0, "{before} -> {after} (V = {v})");
    // The model is left at its best checkpoint.
    assert_eq!(after, log.best_dev_ppl);
    assert_anneal_rule(&log, &cfg);
}

#[test]
fn training_is_deterministic_for_every_loss() {
    let d = data(300);
    for kind in LossKind::ALL {
        let loss = LossConfig::tuned(kind);
        let run = || {
            let mut m = model(&d, 5);
            let log = train(&mut m, &d.train, &d.dev, &loss, &quick()).unwrap();
            (log, m.params)
        };
        let (a, pa) = run();
        let (b, pb) = run();
        assert_eq!(a, b, "{kind}");
        assert!(pa == pb, "{kind}");
        assert_eq!(pa.contains(BINARY_WEIGHT), kind == LossKind::Binary);
    }
}

#[test]
fn divergence_is_reported() {
    let d = data(300);
    let mut m = model(&d, 1);
    let cfg = TrainConfig {
        initial_lr: 1e12,
        clip_norm: None,
        ..quick()
    };
    let e = train(&mut m, &d.train, &d.dev, &LossConfig::baseline(), &cfg).unwrap_err();
    assert!(matches!(e, Error::NonFiniteLoss { .. }), "{e}");
}

#[test]
fn bad_settings_are_rejected() {
    let d = data(100);
    let mut m = model(&d, 1);
    let bad = TrainConfig { anneal_factor: 1.0, ..quick() };
    assert!(matches!(
        train(&mut m, &d.train, &d.dev, &LossConfig::baseline(), &bad),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        train(&mut m, &[], &d.dev, &LossConfig::baseline(), &quick()),
        Err(Error::EmptyCorpus)
    ));
}

#[test]
fn log_csv_layout() {
    let d = data(200);
    let mut m = model(&d, 1);
    let log = train(&mut m, &d.train, &d.dev, &LossConfig::baseline(), &quick()).unwrap();
    let csv = log.to_csv();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "step,lr,lm_loss,aux_loss,dev_ppl");
    assert!(csv.starts_with("# anneal: "));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), log.records.len() + 1);
}

proptest! {
    #[test]
    fn margin_schedule_respects_its_caps(pairs in 0usize..500, batch in 2usize..64, lm in 0usize..60, seed in any::<u64>()) {
        let s = schedule_margin_batches(pairs, batch, lm, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(s.len() <= lm / 2);
        let mut seen = HashSet::new();
        for b in &s {
            prop_assert!(!b.is_empty() && b.len() <= batch / 2);
            for &i in b {
                prop_assert!(i < pairs && seen.insert(i));
            }
        }
        if pairs > 0 && lm >= 2 {
            prop_assert_eq!(s.len(), (lm / 2).min(pairs.div_ceil(batch / 2)));
        }
    }
}
