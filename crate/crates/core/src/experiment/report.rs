use std::fmt::Write as _;

use super::config::AblateMode;
use super::head_is_animate;
use crate::corpus::Lexicon;
use crate::losses::LossKind;
use crate::negex::Construction;
use crate::syneval::{lemma_breakdown, subset_accuracy, Category, EvalConstruction, Outcome, SuiteReport, TestCase};

/// Mean and sample standard deviation (0 for a single value).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

pub fn mean_sd(xs: &[f64]) -> MeanSd {
    if xs.is_empty() {
        return MeanSd {
            mean: f64::NAN,
            sd: f64::NAN,
        };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MeanSd { mean, sd }
}

impl MeanSd {
    fn csv(&self) -> String {
        format!("{:.6},{:.6}", self.mean, self.sd)
    }

    /// Percentages, `mean (sd)`.
    fn pct(&self) -> String {
        format!("{:.1} ({:.1})", 100.0 * self.mean, 100.0 * self.sd)
    }
}

#[derive(Clone, Debug)]
pub struct SeedEval {
    pub seed: u64,
    pub report: SuiteReport,
    /// One outcome per suite case, in suite order.
    pub outcomes: Vec<Outcome>,
    pub test_ppl: f64,
}

/// All seeds of one training configuration.
#[derive(Clone, Debug)]
pub struct RunEval {
    pub name: String,
    pub suite: Vec<TestCase>,
    pub seeds: Vec<SeedEval>,
}

impl RunEval {
    fn over(&self, f: impl Fn(&SeedEval) -> Option<f64>) -> MeanSd {
        let xs: Vec<f64> = self.seeds.iter().filter_map(f).collect();
        mean_sd(&xs)
    }

    pub fn accuracy(&self, c: EvalConstruction) -> MeanSd {
        self.over(|s| s.report.accuracy(c))
    }

    pub fn macro_average(&self, cat: Category) -> MeanSd {
        self.over(|s| s.report.macro_average(cat))
    }

    pub fn perplexity(&self) -> MeanSd {
        self.over(|s| Some(s.test_ppl))
    }

    /// Accuracy over the suite cases selected by `keep`.
    pub fn subset(&self, keep: impl Fn(&TestCase) -> bool) -> MeanSd {
        self.over(|s| subset_accuracy(&self.suite, &s.outcomes, &keep))
    }

    /// Rows in report order, then the test perplexity.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("construction,category,seeds,mean,sd\n");
        let Some(first) = self.seeds.first() else {
            return s;
        };
        for r in &first.report.rows {
            let c = r.construction;
            writeln!(s, "{c},{},{},{}", c.category().as_str(), self.seeds.len(), self.accuracy(c).csv()).unwrap();
        }
        writeln!(s, "perplexity,,{},{}", self.seeds.len(), self.perplexity().csv()).unwrap();
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!(
            "{} ({} seed{}), accuracy % with sd in parentheses\n\n| | construction | accuracy |\n|---|---|---|\n",
            self.name,
            self.seeds.len(),
            if self.seeds.len() == 1 { "" } else { "s" }
        );
        let Some(first) = self.seeds.first() else {
            return s;
        };
        let mut last = None;
        for r in &first.report.rows {
            let cat = r.construction.category();
            let head = if last != Some(cat) { cat.title() } else { "" };
            last = Some(cat);
            writeln!(s, "| {head} | {} | {} |", r.construction.label(), self.accuracy(r.construction).pct()).unwrap();
        }
        let p = self.perplexity();
        writeln!(s, "| Perplexity | | {:.2} ({:.2}) |", p.mean, p.sd).unwrap();
        s
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub kind: LossKind,
    pub delta: f64,
    pub agreement: MeanSd,
    pub reflexive: MeanSd,
    pub npi: MeanSd,
    pub perplexity: MeanSd,
}

impl SweepRow {
    pub fn from_run(kind: LossKind, delta: f64, run: &RunEval) -> Self {
        SweepRow {
            kind,
            delta,
            agreement: run.macro_average(Category::Agreement),
            reflexive: run.macro_average(Category::Reflexive),
            npi: run.macro_average(Category::Npi),
            perplexity: run.perplexity(),
        }
    }
}

/// δ = 10 against δ = 1 for one margin loss.
#[derive(Clone, Debug)]
pub struct SweepCheck {
    pub kind: LossKind,
    pub agreement_at_10: f64,
    pub agreement_at_1: f64,
    pub ppl_increase_at_10: f64,
}

impl SweepCheck {
    pub fn holds(&self) -> bool {
        self.agreement_at_10 >= self.agreement_at_1
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn get(&self, kind: LossKind, delta: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.kind == kind && r.delta == delta)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "kind,delta,agreement_mean,agreement_sd,reflexive_mean,reflexive_sd,npi_mean,npi_sd,perplexity_mean,perplexity_sd\n",
        );
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                r.kind,
                r.delta,
                r.agreement.csv(),
                r.reflexive.csv(),
                r.npi.csv(),
                r.perplexity.csv()
            )
            .unwrap();
        }
        s
    }

    /// One check per kind whose sweep includes δ = 0, 1 and 10.
    pub fn checks(&self) -> Vec<SweepCheck> {
        let mut kinds: Vec<LossKind> = self.rows.iter().map(|r| r.kind).collect();
        kinds.dedup();
        kinds
            .into_iter()
            .filter_map(|k| {
                let (zero, one, ten) = (self.get(k, 0.0)?, self.get(k, 1.0)?, self.get(k, 10.0)?);
                Some(SweepCheck {
                    kind: k,
                    agreement_at_10: ten.agreement.mean,
                    agreement_at_1: one.agreement.mean,
                    ppl_increase_at_10: ten.perplexity.mean / zero.perplexity.mean - 1.0,
                })
            })
            .collect()
    }

    pub fn checks_csv(&self) -> String {
        let mut s = String::from("kind,agreement_delta10,agreement_delta1,delta10_ge_delta1,ppl_increase_delta10\n");
        for c in self.checks() {
            writeln!(
                s,
                "{},{:.6},{:.6},{},{:.6}",
                c.kind,
                c.agreement_at_10,
                c.agreement_at_1,
                c.holds(),
                c.ppl_increase_at_10
            )
            .unwrap();
        }
        s
    }
}

// ---------------------------------------------------------------- augmentation

#[derive(Clone, Debug)]
pub struct AugmentRow {
    pub multiplier: f64,
    pub orc_sentences: usize,
    pub orc_share: f64,
    pub across_orc: MeanSd,
    pub across_orc_no_that: MeanSd,
    pub across_orc_animate: MeanSd,
    pub across_orc_no_that_animate: MeanSd,
    pub across_src: MeanSd,
    pub perplexity: MeanSd,
}

impl AugmentRow {
    pub fn from_run(multiplier: f64, orc: usize, total: usize, run: &RunEval, lexicon: &Lexicon) -> Self {
        let animate = |c: EvalConstruction| {
            run.subset(|t| t.construction == c && head_is_animate(t, lexicon))
        };
        AugmentRow {
            multiplier,
            orc_sentences: orc,
            orc_share: orc as f64 / total.max(1) as f64,
            across_orc: run.accuracy(EvalConstruction::AcrossOrc),
            across_orc_no_that: run.accuracy(EvalConstruction::AcrossOrcNoThat),
            across_orc_animate: animate(EvalConstruction::AcrossOrc),
            across_orc_no_that_animate: animate(EvalConstruction::AcrossOrcNoThat),
            across_src: run.accuracy(EvalConstruction::AcrossSrc),
            perplexity: run.perplexity(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AugmentReport {
    pub rows: Vec<AugmentRow>,
}

impl AugmentReport {
    pub fn get(&self, multiplier: f64) -> Option<&AugmentRow> {
        self.rows.iter().find(|r| r.multiplier == multiplier)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "multiplier,orc_sentences,orc_share,across_orc_mean,across_orc_sd,across_orc_no_that_mean,across_orc_no_that_sd,\
             animate_only_mean,animate_only_sd,animate_only_no_that_mean,animate_only_no_that_sd,\
             across_src_mean,across_src_sd,perplexity_mean,perplexity_sd\n",
        );
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{:.6},{},{},{},{},{},{}",
                r.multiplier,
                r.orc_sentences,
                r.orc_share,
                r.across_orc.csv(),
                r.across_orc_no_that.csv(),
                r.across_orc_animate.csv(),
                r.across_orc_no_that_animate.csv(),
                r.across_src.csv(),
                r.perplexity.csv()
            )
            .unwrap();
        }
        s
    }
}

// ---------------------------------------------------------------- ablation

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub construction: EvalConstruction,
    pub baseline: MeanSd,
    pub full: MeanSd,
    pub ablated: MeanSd,
    /// Negative examples of this construction were withheld in training.
    pub ablated_in_training: bool,
}

impl AblationRow {
    /// Share of the full model's gain over the baseline that survives the
    /// ablation. `None` when the full model gains nothing.
    pub fn retained(&self) -> Option<f64> {
        let gain = self.full.mean - self.baseline.mean;
        (gain > 0.0).then(|| (self.ablated.mean - self.baseline.mean) / gain)
    }
}

/// Long-VP coordination accuracy split by whether the verb is a form of "like".
#[derive(Clone, Debug)]
pub struct LikeRow {
    pub model: String,
    pub all: MeanSd,
    pub like: MeanSd,
    pub other: MeanSd,
}

impl LikeRow {
    fn new(model: &str, run: &RunEval) -> Self {
        let parts: Vec<_> = run
            .seeds
            .iter()
            .map(|s| lemma_breakdown(&run.suite, &s.outcomes, EvalConstruction::LongVpCoord, "like"))
            .collect();
        let col = |f: fn(&crate::syneval::LemmaBreakdown) -> Option<f64>| {
            mean_sd(&parts.iter().filter_map(f).collect::<Vec<_>>())
        };
        LikeRow {
            model: model.to_string(),
            all: col(|b| b.all),
            like: col(|b| b.lemma),
            other: col(|b| b.other),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AblationReport {
    pub mode: AblateMode,
    pub target: Option<Construction>,
    pub rows: Vec<AblationRow>,
    pub like: Vec<LikeRow>,
}

fn eval_constructions(target: Option<Construction>) -> Vec<EvalConstruction> {
    match target {
        Some(Construction::AcrossPp) => vec![EvalConstruction::AcrossPp],
        Some(Construction::AcrossSrc) => vec![EvalConstruction::AcrossSrc],
        Some(Construction::LongVp) => vec![EvalConstruction::LongVpCoord],
        Some(Construction::AcrossOrc) => vec![EvalConstruction::AcrossOrc, EvalConstruction::AcrossOrcNoThat],
        _ => Vec::new(),
    }
}

impl AblationReport {
    pub fn new(
        mode: AblateMode,
        target: Option<Construction>,
        baseline: &RunEval,
        full: &RunEval,
        ablated: &RunEval,
    ) -> Self {
        let hit = if mode == AblateMode::Pattern {
            eval_constructions(target)
        } else {
            Vec::new()
        };
        let mut constructions = EvalConstruction::NON_LOCAL.to_vec();
        constructions.extend(hit.iter().filter(|c| !constructions.contains(c)).collect::<Vec<_>>());
        let rows = constructions
            .into_iter()
            .map(|c| AblationRow {
                construction: c,
                baseline: baseline.accuracy(c),
                full: full.accuracy(c),
                ablated: ablated.accuracy(c),
                ablated_in_training: mode == AblateMode::Token || hit.contains(&c),
            })
            .collect();
        let label = match (mode, target) {
            (AblateMode::Pattern, Some(t)) => format!("-pattern {t}"),
            _ => "-token".to_string(),
        };
        AblationReport {
            mode,
            target,
            rows,
            like: vec![
                LikeRow::new("baseline", baseline),
                LikeRow::new("full", full),
                LikeRow::new(&label, ablated),
            ],
        }
    }

    pub fn get(&self, c: EvalConstruction) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.construction == c)
    }

    /// Object RCs are where withholding a whole construction is expected to hurt most.
    pub fn expects_larger_degradation(&self) -> bool {
        self.mode == AblateMode::Pattern && self.target == Some(Construction::AcrossOrc)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.expects_larger_degradation() {
            s.push_str("# note: larger degradation expected on object relative clauses\n");
        }
        s.push_str(
            "construction,ablated_in_training,baseline_mean,baseline_sd,full_mean,full_sd,ablated_mean,ablated_sd,retained_gain\n",
        );
        for r in &self.rows {
            let retained = r.retained().map_or(String::new(), |x| format!("{x:.6}"));
            writeln!(
                s,
                "{},{},{},{},{},{}",
                r.construction,
                r.ablated_in_training,
                r.baseline.csv(),
                r.full.csv(),
                r.ablated.csv(),
                retained
            )
            .unwrap();
        }
        s
    }

    pub fn like_csv(&self) -> String {
        let mut s = String::from("model,all_verbs_mean,all_verbs_sd,like_mean,like_sd,other_verbs_mean,other_verbs_sd\n");
        for r in &self.like {
            writeln!(s, "{},{},{},{}", r.model, r.all.csv(), r.like.csv(), r.other.csv()).unwrap();
        }
        s
    }
}
