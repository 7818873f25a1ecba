use negex_core::model::{read_checkpoint, write_checkpoint, LanguageModel, LmConfig};
use negex_core::negex::{AnnotatedSentence, Construction};
use negex_core::numcore::Mode;
use negex_core::trainer::perplexity;
use negex_core::vocab::{Vocabulary, EOS_ID};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vocab(words: usize) -> Vocabulary {
    let mut list: Vec<String> = ["<unk>", "<bos>", "<eos>"].map(String::from).to_vec();
    list.extend((0..words).map(|i| format!("w{i}")));
    Vocabulary::from_list(list, 1).unwrap()
}

fn model(words: usize, layers: usize, seed: u64) -> LanguageModel {
    let v = vocab(words);
    let cfg = LmConfig {
        num_layers: layers,
        embed_dim: 6,
        hidden_dim: 7,
        ..LmConfig::desk(v.len())
    };
    LanguageModel::new(cfg, v, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn eval_rows(m: &LanguageModel, ids: &[usize]) -> Vec<Vec<f64>> {
    m.forward(ids, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
}

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Every non-EOS sequence of length `len` over ids `0..v`.
fn sequences(v: usize, len: usize) -> Vec<Vec<usize>> {
    let symbols: Vec<usize> = (0..v).filter(|&i| i != EOS_ID).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| symbols.iter().map(move |&s| [p.clone(), vec![s]].concat()))
            .collect();
    }
    out
}

#[test]
fn short_sentence_mass_is_at_most_one() {
    // V = 4: unk, bos, eos and one word. The mass of all complete sentences
    // up to length 3 plus the mass of the unfinished length-4 prefixes must be 1.
    for seed in 0..3 {
        let m = model(1, 2, seed);
        assert_eq!(m.vocab.len(), 4);
        let mut total = 0.0;
        for len in 0..=3 {
            for s in sequences(4, len) {
                total += m.sentence_logprob(&s).unwrap().exp();
            }
        }
        assert!(total <= 1.0 + 1e-9, "mass {total}");
        let mut unfinished = 0.0;
        for s in sequences(4, 4) {
            let rows = eval_rows(&m, &s);
            unfinished += (0..4).map(|t| rows[t][s[t]]).sum::<f64>().exp();
        }
        assert!((total + unfinished - 1.0).abs() < 1e-9, "{total} + {unfinished}");
    }
}

#[test]
fn uniform_model_perplexity_is_the_vocabulary_size() {
    for words in [1, 9, 40] {
        let v = vocab(words);
        let n = v.len() as f64;
        let m = LanguageModel::uniform(LmConfig::desk(v.len()), v).unwrap();
        let corpus: Vec<AnnotatedSentence> = ["w0", "w0 w0 w0", "", "w0 zzz"]
            .iter()
            .map(|t| AnnotatedSentence::new(t.split_whitespace().map(String::from).collect(), Construction::None))
            .collect();
        // exp(log V) is only reproduced to the last bit or two of a double.
        let ppl = perplexity(&m, &corpus).unwrap();
        assert!((ppl - n).abs() <= 4.0 * f64::EPSILON * n, "{ppl} vs {n}");
    }
}

#[test]
fn predictions_do_not_see_the_future() {
    let m = model(8, 2, 7);
    let a = eval_rows(&m, &[3, 4, 5, 6]);
    let b = eval_rows(&m, &[3, 4, 9, 10]);
    assert_eq!(a[..3], b[..3]);
    assert_ne!(a[3], b[3]);
}

#[test]
fn batched_scores_match_one_at_a_time() {
    let m = model(8, 2, 3);
    let sents: Vec<Vec<usize>> = vec![vec![3], vec![4, 5, 6, 7, 8], vec![], vec![9, 3]];
    let refs: Vec<&[usize]> = sents.iter().map(Vec::as_slice).collect();
    let batched = m.sentence_logprobs(&refs).unwrap();
    for (s, b) in sents.iter().zip(batched) {
        let single = m.sentence_logprob(s).unwrap();
        assert!((single - b).abs() < 1e-12, "{single} vs {b}");
    }
}

#[test]
fn training_mode_dropout_is_seeded() {
    let m = model(8, 2, 3);
    let run = |seed| m.forward(&[3, 4, 5], Mode::Train, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));
    assert_ne!(run(1), eval_rows(&m, &[3, 4, 5]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rows_are_log_distributions(ids in prop::collection::vec(0usize..11, 0..9), seed in 0u64..50) {
        let m = model(8, 1 + (seed as usize % 2), seed);
        let rows = eval_rows(&m, &ids);
        prop_assert_eq!(rows.len(), ids.len() + 1);
        for r in &rows {
            prop_assert!(logsumexp(r).abs() < 1e-12);
        }
        let sum: f64 = ids.iter().chain(&[EOS_ID]).enumerate().map(|(t, &w)| rows[t][w]).sum();
        prop_assert!((sum - m.sentence_logprob(&ids).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip_preserves_scores(seed in 0u64..20, tie in any::<bool>()) {
        let v = vocab(5);
        let cfg = LmConfig { tie_embeddings: tie, embed_dim: 4, hidden_dim: 5, ..LmConfig::desk(v.len()) };
        let m = LanguageModel::new(cfg, v, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&m, &mut bytes).unwrap();
        let back = read_checkpoint(bytes.as_slice()).unwrap();
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        prop_assert_eq!(&bytes, &again);
        prop_assert_eq!(m.sentence_logprob(&[3, 4, 7]).unwrap(), back.sentence_logprob(&[3, 4, 7]).unwrap());
    }
}
