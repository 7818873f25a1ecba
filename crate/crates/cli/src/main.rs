use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use negex_core::experiment::{self, AblateMode, ExperimentConfig};
use negex_core::negex::Construction;
use negex_core::Error;

/// Negative-example LM experiments: corpora, training, targeted evaluation.
#[derive(Parser, Debug)]
#[command(name = "negex", version)]
struct Cli {
    /// Experiment config (`key = value` lines); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run with this single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate train/dev/test corpus files and the vocabulary.
    GenCorpus,
    /// Write the minimal-pair test suite.
    GenSuite,
    /// Train one model per seed.
    Train,
    /// Evaluate trained checkpoints (mean and sd across seeds).
    Eval,
    /// Margin value vs. macro-average accuracy for both margin losses.
    SweepMargin {
        /// Comma-separated margins, e.g. 0,1,5,10,15.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
    },
    /// Retrain with extra object-RC sentences.
    AugmentOrc {
        /// Comma-separated object-RC share multipliers, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<f64>>,
    },
    /// Withhold negative examples by verb (token) or by construction (pattern).
    Ablate {
        #[arg(long)]
        mode: Option<String>,
        /// across-pp, across-src, across-orc or long-vp (pattern mode).
        #[arg(long)]
        target: Option<String>,
    },
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    match &cli.cmd {
        Cmd::SweepMargin { deltas: Some(d) } => cfg.sweep_deltas = d.clone(),
        Cmd::AugmentOrc { multipliers: Some(m) } => cfg.augment_multipliers = m.clone(),
        Cmd::Ablate { mode, target } => {
            if let Some(m) = mode {
                cfg.ablate_mode = m.parse()?;
            }
            if let Some(t) = target {
                cfg.ablate_target = Some(t.parse::<Construction>()?);
                if mode.is_none() {
                    cfg.ablate_mode = AblateMode::Pattern;
                }
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = resolve(cli)?;
    match cli.cmd {
        Cmd::GenCorpus => {
            let c = experiment::cmd_gen_corpus(&cfg)?;
            println!(
                "{}: {} / {} / {} sentences, {} word types",
                experiment::corpus_dir(&cfg).display(),
                c.train.len(),
                c.dev.len(),
                c.test.len(),
                c.vocab.len()
            );
        }
        Cmd::GenSuite => {
            let p = experiment::cmd_gen_suite(&cfg)?;
            println!("{}", p.display());
        }
        Cmd::Train => {
            let logs = experiment::cmd_train(&cfg)?;
            for (seed, log) in cfg.seeds.iter().zip(&logs) {
                println!(
                    "seed {seed}: best dev perplexity {:.3} at step {} -> {}",
                    log.best_dev_ppl,
                    log.best_step,
                    experiment::seed_dir(&cfg, *seed).display()
                );
            }
        }
        Cmd::Eval => {
            let r = experiment::cmd_eval(&cfg)?;
            print!("{}", r.to_markdown());
        }
        Cmd::SweepMargin { .. } => {
            let r = experiment::cmd_sweep_margin(&cfg)?;
            print!("{}", r.to_csv());
            print!("{}", r.checks_csv());
        }
        Cmd::AugmentOrc { .. } => {
            let r = experiment::cmd_augment_orc(&cfg)?;
            print!("{}", r.to_csv());
        }
        Cmd::Ablate { .. } => {
            let r = experiment::cmd_ablate(&cfg)?;
            print!("{}", r.to_csv());
            print!("{}", r.like_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
