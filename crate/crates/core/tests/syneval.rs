use negex_core::corpus::{build_vocab, generate_synthetic, CorpusConfig, Lexicon};
use negex_core::model::{load_checkpoint, save_checkpoint, LanguageModel, LmConfig};
use negex_core::syneval::{
    evaluate, evaluate_with_threads, generate_suite, read_suite, score_suite, write_suite, EvalConstruction,
    Outcome,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_model(seed: u64) -> LanguageModel {
    let corpus = generate_synthetic(&CorpusConfig::new(3000, 2)).unwrap();
    let vocab = build_vocab(&corpus, 1);
    let cfg = LmConfig {
        num_layers: 1,
        embed_dim: 8,
        hidden_dim: 12,
        ..LmConfig::desk(vocab.len())
    };
    LanguageModel::new(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn suite() -> Vec<negex_core::syneval::TestCase> {
    generate_suite(&Lexicon::builtin(), &EvalConstruction::ALL, 12, 4).unwrap()
}

#[test]
fn suite_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = suite();
    assert_eq!(s.len(), 15 * 12);
    let p = dir.path().join("suite.tsv");
    write_suite(&p, &s).unwrap();
    assert_eq!(read_suite(&p).unwrap(), s);
}

#[test]
fn reloaded_checkpoint_gives_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_model(9);
    let p = dir.path().join("m.ckpt");
    save_checkpoint(&m, &p).unwrap();
    let back = load_checkpoint(&p).unwrap();
    let s = suite();
    assert_eq!(evaluate(&m, &s).unwrap(), evaluate(&back, &s).unwrap());
}

#[test]
fn scoring_is_independent_of_threads_and_order() {
    let m = small_model(1);
    let s = suite();
    let one = score_suite(&m, &s, 1).unwrap();
    assert_eq!(score_suite(&m, &s, 4).unwrap(), one);
    let reversed: Vec<_> = s.iter().rev().cloned().collect();
    let mut back = score_suite(&m, &reversed, 3).unwrap();
    back.reverse();
    assert_eq!(back, one);
    assert_eq!(evaluate_with_threads(&m, &s, 5).unwrap(), evaluate(&m, &s).unwrap());
}

#[test]
fn a_uniform_model_ties_everywhere_and_scores_zero() {
    let m = small_model(1);
    let u = LanguageModel::uniform(m.config.clone(), m.vocab.clone()).unwrap();
    let s = suite();
    assert!(score_suite(&u, &s, 1).unwrap().iter().all(|o| *o == Outcome::Tie));
    let r = evaluate(&u, &s).unwrap();
    assert!(r.rows.iter().all(|row| row.correct == 0 && row.ties == row.n));
}

#[test]
fn empty_suite_is_rejected() {
    assert!(evaluate(&small_model(1), &[]).is_err());
}
