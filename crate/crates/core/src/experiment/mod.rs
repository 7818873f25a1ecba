//! Reproducible experiment drivers: corpus and suite generation, multi-seed
//! training, evaluation with mean/sd aggregation, margin sweeps, object-RC
//! augmentation and negative-example ablations.
//!
//! Layout under `out_dir`:
//!
//! ```text
//! corpus/{train,dev,test}.txt vocab.txt counts.csv resolved.cfg
//! suite/suite.tsv
//! runs/<run>/seed-<n>/{model.ckpt,train_log.csv,report.csv,perplexity.csv,resolved.cfg}
//! runs/<run>/{eval.csv,eval.md,resolved.cfg}
//! sweep/ augment/ ablate/<mode>/
//! ```

mod config;
mod report;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{self, Lexicon};
use crate::error::{Error, Result};
use crate::losses::{LossConfig, LossKind};
use crate::model::{load_checkpoint, save_checkpoint, LanguageModel};
use crate::negex::{
    filter_targets_by_construction, filter_targets_by_lemma, read_corpus, write_corpus,
    AnnotatedSentence, Construction, TOKEN_ABLATION_LEMMAS,
};
use crate::syneval::{self, EvalConstruction, TestCase};
use crate::trainer::{perplexity, train};
use crate::vocab::Vocabulary;

pub use config::{AblateMode, CorpusSettings, ExperimentConfig, SuiteSettings, PATTERN_TARGETS};
pub use report::{
    mean_sd, AblationReport, AblationRow, AugmentReport, AugmentRow, LikeRow, MeanSd, RunEval,
    SeedEval, SweepCheck, SweepReport, SweepRow,
};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs `f` over `items` on up to `threads` workers, keeping input order.
fn par_map<T: Sync, U: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> Result<U> + Sync,
) -> Result<Vec<U>> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<U>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

// ---------------------------------------------------------------- corpus

pub struct CorpusSplits {
    pub train: Vec<AnnotatedSentence>,
    pub dev: Vec<AnnotatedSentence>,
    pub test: Vec<AnnotatedSentence>,
    pub vocab: Vocabulary,
}

pub fn corpus_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("corpus")
}

/// Generates the corpus, splits it and writes the files plus the training vocabulary.
pub fn cmd_gen_corpus(cfg: &ExperimentConfig) -> Result<CorpusSplits> {
    let dir = corpus_dir(cfg);
    create_dir(&dir)?;
    let cc = cfg.corpus_config(cfg.lexicon()?);
    let all = corpus::generate_synthetic(&cc)?;
    let [train, dev, test] = corpus::split(&all, cfg.corpus.fractions, cc.seed)?;
    let vocab = corpus::build_vocab(&train, cfg.corpus.min_freq);
    write_corpus(&dir.join("train.txt"), &train)?;
    write_corpus(&dir.join("dev.txt"), &dev)?;
    write_corpus(&dir.join("test.txt"), &test)?;
    vocab.write_file(&dir.join("vocab.txt"))?;
    let mut counts = cfg.csv_stamp();
    counts.push_str("construction,count,share\n");
    for (c, n) in corpus::construction_counts(&all) {
        writeln!(counts, "{c},{n},{:.6}", n as f64 / all.len() as f64).unwrap();
    }
    write_file(&dir.join("counts.csv"), &counts)?;
    cfg.write_resolved(&dir)?;
    log::info!(
        "corpus: {} train / {} dev / {} test sentences, vocabulary {}",
        train.len(),
        dev.len(),
        test.len(),
        vocab.len()
    );
    Ok(CorpusSplits {
        train,
        dev,
        test,
        vocab,
    })
}

pub fn load_corpus(dir: &Path) -> Result<CorpusSplits> {
    Ok(CorpusSplits {
        train: read_corpus(&dir.join("train.txt"))?,
        dev: read_corpus(&dir.join("dev.txt"))?,
        test: read_corpus(&dir.join("test.txt"))?,
        vocab: Vocabulary::read_file(&dir.join("vocab.txt"))?,
    })
}

/// Loads the corpus when the files on disk were generated from the same
/// corpus settings, and regenerates it otherwise.
pub fn ensure_corpus(cfg: &ExperimentConfig) -> Result<CorpusSplits> {
    let dir = corpus_dir(cfg);
    let same = ExperimentConfig::load(&dir.join("resolved.cfg"))
        .map(|old| old.corpus_key() == cfg.corpus_key())
        .unwrap_or(false);
    if same {
        if let Ok(c) = load_corpus(&dir) {
            return Ok(c);
        }
    }
    cmd_gen_corpus(cfg)
}

/// Number of object-RC sentences to add so that their expected share of a
/// training split of `n` sentences grows from `share` to `multiplier · share`.
pub fn augmentation_count(n: usize, share: f64, multiplier: f64) -> Result<usize> {
    let target = multiplier * share;
    if target >= 1.0 {
        return Err(Error::Config(format!(
            "object-RC share {share} x {multiplier} leaves no room for other sentences"
        )));
    }
    Ok(((multiplier - 1.0) * share * n as f64 / (1.0 - target)).round() as usize)
}

/// The training split after object-RC augmentation and target ablation.
pub fn training_set(cfg: &ExperimentConfig, splits: &CorpusSplits) -> Result<Vec<AnnotatedSentence>> {
    let mut train = splits.train.clone();
    if cfg.corpus.orc_multiplier != 1.0 {
        let cc = cfg.corpus_config(cfg.lexicon()?);
        let share = cc.share(Construction::AcrossOrc) + cc.share(Construction::AcrossOrcNoThat);
        let extra = augmentation_count(train.len(), share, cfg.corpus.orc_multiplier)?;
        train = corpus::augment_orc(&train, extra, &cc)?;
    }
    Ok(match (cfg.ablate_mode, cfg.ablate_target) {
        (AblateMode::None, _) => train,
        (AblateMode::Token, _) => {
            let lemmas: HashSet<String> = TOKEN_ABLATION_LEMMAS.iter().map(|s| s.to_string()).collect();
            filter_targets_by_lemma(&train, &lemmas)
        }
        (AblateMode::Pattern, Some(t)) => {
            let t2 = if t == Construction::AcrossOrc {
                Construction::AcrossOrcNoThat
            } else {
                t
            };
            filter_targets_by_construction(&filter_targets_by_construction(&train, t), t2)
        }
        (AblateMode::Pattern, None) => {
            return Err(Error::Config("ablate.mode = pattern needs ablate.target".into()))
        }
    })
}

// ---------------------------------------------------------------- suite

pub fn suite_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("suite").join("suite.tsv")
}

pub fn build_suite(cfg: &ExperimentConfig) -> Result<Vec<TestCase>> {
    match &cfg.suite.path {
        Some(p) => syneval::read_suite(p),
        None => syneval::generate_suite(
            &cfg.lexicon()?,
            &EvalConstruction::ALL,
            cfg.suite.per_construction,
            cfg.suite.seed,
        ),
    }
}

pub fn cmd_gen_suite(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let suite = build_suite(cfg)?;
    let path = suite_path(cfg);
    let dir = path.parent().expect("suite path has a parent");
    create_dir(dir)?;
    syneval::write_suite(&path, &suite)?;
    cfg.write_resolved(dir)?;
    Ok(path)
}

// ---------------------------------------------------------------- runs

fn num(x: f64) -> String {
    x.to_string()
}

/// Directory name of a training configuration.
pub fn run_name(cfg: &ExperimentConfig) -> String {
    let l = &cfg.loss;
    let mut s = match l.kind {
        LossKind::None => "baseline".to_string(),
        LossKind::Binary => format!("binary-b{}", num(l.beta)),
        LossKind::Unlikelihood => format!("unlikelihood-a{}", num(l.alpha)),
        LossKind::TokenMargin => format!("token-margin-a{}-d{}", num(l.alpha), num(l.delta)),
        LossKind::SentenceMargin => format!("sentence-margin-b{}-d{}", num(l.beta), num(l.delta)),
    };
    if cfg.corpus.orc_multiplier != 1.0 {
        write!(s, "-orc-x{}", num(cfg.corpus.orc_multiplier)).unwrap();
    }
    match (cfg.ablate_mode, cfg.ablate_target) {
        (AblateMode::Token, _) => s.push_str("-minus-token"),
        (AblateMode::Pattern, Some(t)) => write!(s, "-minus-{t}").unwrap(),
        _ => {}
    }
    s
}

pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("runs").join(run_name(cfg))
}

pub fn seed_dir(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    run_dir(cfg).join(format!("seed-{seed}"))
}

fn single_seed(cfg: &ExperimentConfig, seed: u64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.seeds = vec![seed];
    c
}

fn train_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    train_set: &[AnnotatedSentence],
    splits: &CorpusSplits,
) -> Result<crate::trainer::TrainLog> {
    let dir = seed_dir(cfg, seed);
    create_dir(&dir)?;
    let mut lc = cfg.model.clone();
    lc.vocab_size = splits.vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4);
    let mut model = LanguageModel::new(lc, splits.vocab.clone(), &mut rng)?;
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    log::info!("training {} seed {seed}", run_name(cfg));
    let log = train(&mut model, train_set, &splits.dev, &cfg.loss, &tc)?;
    save_checkpoint(&model, &dir.join("model.ckpt"))?;
    let own = single_seed(cfg, seed);
    write_file(&dir.join("train_log.csv"), &(own.csv_stamp() + &log.to_csv()))?;
    own.write_resolved(&dir)?;
    Ok(log)
}

/// Trains one model per seed, each into its own `seed-<n>` directory.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<crate::trainer::TrainLog>> {
    let splits = ensure_corpus(cfg)?;
    let train_set = training_set(cfg, &splits)?;
    cfg.write_resolved(&run_dir(cfg))?;
    par_map(&cfg.seeds, cfg.threads, |&seed| train_seed(cfg, seed, &train_set, &splits))
}

fn is_trained(cfg: &ExperimentConfig, seed: u64) -> bool {
    let dir = seed_dir(cfg, seed);
    dir.join("model.ckpt").is_file()
        && ExperimentConfig::load(&dir.join("resolved.cfg"))
            .map(|old| old.training_key() == cfg.training_key())
            .unwrap_or(false)
}

/// Trains the seeds that have no checkpoint for this exact configuration yet.
pub fn ensure_trained(cfg: &ExperimentConfig) -> Result<()> {
    let missing: Vec<u64> = cfg.seeds.iter().copied().filter(|&s| !is_trained(cfg, s)).collect();
    if missing.is_empty() {
        return Ok(());
    }
    let splits = ensure_corpus(cfg)?;
    let train_set = training_set(cfg, &splits)?;
    cfg.write_resolved(&run_dir(cfg))?;
    par_map(&missing, cfg.threads, |&seed| train_seed(cfg, seed, &train_set, &splits))?;
    Ok(())
}

// ---------------------------------------------------------------- eval

/// Scores one model on the suite and the held-out test split.
pub fn evaluate_model(
    model: &LanguageModel,
    seed: u64,
    suite: &[TestCase],
    test: &[AnnotatedSentence],
    threads: usize,
) -> Result<SeedEval> {
    let outcomes = syneval::score_suite(model, suite, threads)?;
    let unknown: Vec<bool> = suite.iter().map(|c| syneval::has_unknown(model, c)).collect();
    Ok(SeedEval {
        seed,
        report: syneval::SuiteReport::from_outcomes(suite, &outcomes, &unknown),
        outcomes,
        test_ppl: perplexity(model, test)?,
    })
}

/// Evaluates every seed's checkpoint; writes per-seed CSVs and the
/// mean ± sd table of the run.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<RunEval> {
    let splits = ensure_corpus(cfg)?;
    let suite = build_suite(cfg)?;
    let mut seeds = Vec::new();
    for &seed in &cfg.seeds {
        let dir = seed_dir(cfg, seed);
        let model = load_checkpoint(&dir.join("model.ckpt"))?;
        if model.vocab != splits.vocab {
            return Err(Error::VocabMismatch(format!(
                "{} was trained with a different vocabulary than {}",
                dir.join("model.ckpt").display(),
                corpus_dir(cfg).join("vocab.txt").display()
            )));
        }
        let e = evaluate_model(&model, seed, &suite, &splits.test, cfg.threads)?;
        let stamp = single_seed(cfg, seed).csv_stamp();
        write_file(&dir.join("report.csv"), &(stamp.clone() + &e.report.to_csv()))?;
        write_file(
            &dir.join("perplexity.csv"),
            &format!("{stamp}split,perplexity\ntest,{}\n", e.test_ppl),
        )?;
        seeds.push(e);
    }
    let run = RunEval {
        name: run_name(cfg),
        suite,
        seeds,
    };
    let dir = run_dir(cfg);
    write_file(&dir.join("eval.csv"), &(cfg.csv_stamp() + &run.to_csv()))?;
    write_file(&dir.join("eval.md"), &run.to_markdown())?;
    cfg.write_resolved(&dir)?;
    Ok(run)
}

/// Trains what is missing, then evaluates.
pub fn train_and_eval(cfg: &ExperimentConfig) -> Result<RunEval> {
    ensure_trained(cfg)?;
    cmd_eval(cfg)
}

// ---------------------------------------------------------------- drivers

fn with_loss(cfg: &ExperimentConfig, loss: LossConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.loss = loss;
    c
}

fn driver_dir(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf> {
    let dir = cfg.out_dir.join(name);
    create_dir(&dir)?;
    cfg.write_resolved(&dir)?;
    Ok(dir)
}

/// Margin value vs. macro-average accuracy for each margin loss; δ = 0 is the baseline.
pub fn cmd_sweep_margin(cfg: &ExperimentConfig) -> Result<SweepReport> {
    if cfg.sweep_deltas.is_empty() || cfg.sweep_kinds.is_empty() {
        return Err(Error::Config("sweep.deltas and sweep.kinds must be nonempty".into()));
    }
    let mut rows = Vec::new();
    for &kind in &cfg.sweep_kinds {
        for &delta in &cfg.sweep_deltas {
            let loss = if delta == 0.0 {
                LossConfig::baseline()
            } else {
                LossConfig {
                    delta,
                    ..LossConfig::tuned(kind)
                }
            };
            let run = train_and_eval(&with_loss(cfg, loss))?;
            rows.push(SweepRow::from_run(kind, delta, &run));
        }
    }
    let report = SweepReport { rows };
    let dir = driver_dir(cfg, "sweep")?;
    write_file(&dir.join("sweep.csv"), &(cfg.csv_stamp() + &report.to_csv()))?;
    write_file(&dir.join("sweep_check.csv"), &(cfg.csv_stamp() + &report.checks_csv()))?;
    Ok(report)
}

/// Whether the head noun of an object-RC case is animate.
pub fn head_is_animate(case: &TestCase, lexicon: &Lexicon) -> bool {
    let head = &case.grammatical[1];
    lexicon
        .nouns
        .iter()
        .any(|n| n.animate && (&n.singular == head || &n.plural == head))
}

/// Retrains on object-RC-augmented training data for each multiplier.
pub fn cmd_augment_orc(cfg: &ExperimentConfig) -> Result<AugmentReport> {
    if cfg.augment_multipliers.is_empty() {
        return Err(Error::Config("augment.multipliers is empty".into()));
    }
    let lexicon = cfg.lexicon()?;
    let splits = ensure_corpus(cfg)?;
    let mut rows = Vec::new();
    for &m in &cfg.augment_multipliers {
        let mut c = cfg.clone();
        c.corpus.orc_multiplier = m;
        let train_set = training_set(&c, &splits)?;
        let orc = train_set.iter().filter(|s| s.construction.is_object_rc()).count();
        let run = train_and_eval(&c)?;
        rows.push(AugmentRow::from_run(m, orc, train_set.len(), &run, &lexicon));
    }
    let report = AugmentReport { rows };
    let dir = driver_dir(cfg, "augment")?;
    write_file(&dir.join("augment.csv"), &(cfg.csv_stamp() + &report.to_csv()))?;
    Ok(report)
}

/// Trains with the configured loss while withholding negative examples
/// (by verb lemma or by construction) and compares against the baseline and
/// the full model on the long-distance constructions.
pub fn cmd_ablate(cfg: &ExperimentConfig) -> Result<AblationReport> {
    if cfg.ablate_mode == AblateMode::None {
        return Err(Error::Config("ablate.mode must be `token` or `pattern`".into()));
    }
    if cfg.loss.kind == LossKind::None {
        return Err(Error::Config(
            "ablation needs a loss that uses negative examples (loss.kind)".into(),
        ));
    }
    let mut full_cfg = cfg.clone();
    full_cfg.ablate_mode = AblateMode::None;
    full_cfg.ablate_target = None;
    let base_cfg = with_loss(&full_cfg, LossConfig::baseline());
    let baseline = train_and_eval(&base_cfg)?;
    let full = train_and_eval(&full_cfg)?;
    let ablated = train_and_eval(cfg)?;
    let report = AblationReport::new(cfg.ablate_mode, cfg.ablate_target, &baseline, &full, &ablated);
    let name = match cfg.ablate_target {
        Some(t) if cfg.ablate_mode == AblateMode::Pattern => format!("pattern-{t}"),
        _ => "token".to_string(),
    };
    let dir = driver_dir(cfg, &format!("ablate/{name}"))?;
    write_file(&dir.join("ablate.csv"), &(cfg.csv_stamp() + &report.to_csv()))?;
    write_file(&dir.join("ablate_like.csv"), &(cfg.csv_stamp() + &report.like_csv()))?;
    Ok(report)
}
