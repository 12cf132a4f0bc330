//! The `eval` command: BoR from qrels and a run, or from published aggregates.

use std::path::{Path, PathBuf};

use bor_core::evaluator::{self, BootstrapConfig, BorReport, EvalOptions, SuccessRule, Sweep, CLOSURE_TOLERANCE};
use bor_core::ingest::{self, Judgments, Parsed, Run};
use bor_core::Probability;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::analytic::relevant_counts;
use crate::error::{CliError, CliResult};
use crate::output::{emit, fmt_num, Cell, Format, Output, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Coverage,
    Recall,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Judgments in TREC qrels format: qid iter docid grade
    #[arg(long, required_unless_present_any = ["p_obs", "recall"])]
    pub qrels: Option<PathBuf>,
    /// Ranked results in TREC run format: qid Q0 docid rank score tag
    #[arg(long, required_unless_present_any = ["p_obs", "recall"])]
    pub run: Option<PathBuf>,
    /// Corpus size N
    #[arg(long)]
    pub n: u64,
    /// Cutoff depths, comma-separated or repeated
    #[arg(long, required = true, value_delimiter = ',')]
    pub k: Vec<u64>,
    #[arg(long, value_enum, default_value_t = RuleArg::Coverage)]
    pub rule: RuleArg,
    /// Minimum relevant hits for coverage success
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    /// Bootstrap replicates for the BoR interval; 0 disables
    #[arg(long, default_value_t = 5000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Confidence level of the bootstrap interval
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Smallest grade that counts as relevant
    #[arg(long, default_value_t = 1)]
    pub threshold: i32,
    /// Replace zero observed success by 1/(2|Q|) instead of reporting -inf
    #[arg(long)]
    pub smooth: bool,
    /// Published success rates, one per K, instead of qrels and run
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["qrels", "run", "recall"])]
    pub p_obs: Vec<f64>,
    /// Published mean recall, one per K; implies the recall rule
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["qrels", "run"])]
    pub recall: Vec<f64>,
    /// Relevant counts per query for --p-obs (repeat, comma-separate or @FILE)
    #[arg(long, value_delimiter = ',')]
    pub rq: Vec<String>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

impl EvalArgs {
    fn success_rule(&self) -> SuccessRule {
        if !self.recall.is_empty() || self.rule == RuleArg::Recall {
            SuccessRule::Recall
        } else {
            SuccessRule::Coverage { min_hits: self.m }
        }
    }

    fn depths(&self) -> CliResult<Vec<u64>> {
        let mut depths = self.k.clone();
        depths.sort_unstable();
        depths.dedup();
        if depths.len() != self.k.len() {
            return Err(CliError::usage("--k values must be distinct"));
        }
        Ok(depths)
    }
}

fn open_parsed<T>(
    path: &Path,
    parse: impl FnOnce(std::fs::File) -> bor_core::Result<Parsed<T>>,
    warnings: &mut Vec<String>,
) -> CliResult<T> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let parsed = parse(file).map_err(|e| CliError::from(e).in_file(path))?;
    warnings.extend(parsed.warnings.into_iter().map(|w| format!("{}: {w}", path.display())));
    Ok(parsed.value)
}

fn sweep_from_files(args: &EvalArgs, rule: SuccessRule, warnings: &mut Vec<String>) -> CliResult<Sweep> {
    let (Some(qrels), Some(run)) = (&args.qrels, &args.run) else {
        return Err(CliError::usage("eval needs --qrels and --run, or --p-obs/--recall"));
    };
    let judgments: Judgments = open_parsed(qrels, |f| ingest::parse_qrels(f, args.threshold), warnings)?;
    let run: Run = open_parsed(run, ingest::parse_run, warnings)?;
    let bootstrap = (args.bootstrap > 0).then_some(BootstrapConfig {
        replicates: args.bootstrap,
        seed: args.seed,
        level: args.level,
    });
    let options = EvalOptions {
        bootstrap,
        smooth_zero_success: args.smooth,
    };
    let sweep = evaluator::depth_sweep(&run, &judgments, args.n, &args.depths()?, rule, &options)?;
    let first = &sweep.reports[0];
    if first.excluded_zero_r > 0 {
        warnings.push(format!(
            "{} judged queries with fewer than {} relevant documents excluded",
            first.excluded_zero_r,
            rule.min_hits()
        ));
    }
    if first.missing_from_run > 0 {
        warnings.push(format!(
            "{} evaluable queries absent from the run scored as failures",
            first.missing_from_run
        ));
    }
    Ok(sweep)
}

fn sweep_from_aggregates(args: &EvalArgs, rule: SuccessRule, warnings: &mut Vec<String>) -> CliResult<Sweep> {
    let observed = if args.recall.is_empty() {
        &args.p_obs
    } else {
        &args.recall
    };
    let depths = args.depths()?;
    if observed.len() != depths.len() {
        return Err(CliError::usage(format!(
            "{} observed values for {} depths",
            observed.len(),
            depths.len()
        )));
    }
    let counts = if args.rq.is_empty() {
        if rule != SuccessRule::Recall {
            return Err(CliError::usage("--p-obs under the coverage rule needs --rq"));
        }
        vec![1]
    } else {
        relevant_counts(&args.rq)?
    };
    let kept: Vec<u64> = counts.iter().copied().filter(|&r| r >= rule.min_hits()).collect();
    if kept.len() < counts.len() {
        warnings.push(format!(
            "{} queries with fewer than {} relevant documents excluded",
            counts.len() - kept.len(),
            rule.min_hits()
        ));
    }
    let mut reports = Vec::with_capacity(depths.len());
    for (&k, &p) in depths.iter().zip(observed) {
        let baselines = kept
            .iter()
            .map(|&r| evaluator::query_baseline(args.n, r, k, rule))
            .collect::<bor_core::Result<Vec<Probability>>>()?;
        reports.push(evaluator::report_from_aggregate(
            p,
            &baselines,
            args.n,
            k,
            rule,
            args.smooth,
        )?);
    }
    Ok(evaluator::sweep_from_reports(reports)?)
}

const REPORT_HEADERS: [&str; 13] = [
    "k",
    "rule",
    "queries",
    "p_obs",
    "p_rand",
    "bor_bits",
    "enrichment",
    "ceiling_log_of_mean",
    "ceiling_mean_of_logs",
    "bor_opt",
    "ci_low",
    "ci_high",
    "smoothed",
];

fn report_cells(r: &BorReport) -> Vec<Cell> {
    vec![
        r.depth.into(),
        r.rule.to_string().into(),
        r.query_count.into(),
        r.p_obs.into(),
        r.mean_baseline.value().into(),
        r.bor.bits.into(),
        Cell::opt(r.enrichment),
        r.ceilings.bor_max_log_of_mean.into(),
        r.ceilings.bor_max_mean_of_logs.into(),
        r.ceilings.bor_opt.into(),
        Cell::opt(r.ci_low),
        Cell::opt(r.ci_high),
        if r.smoothed { "yes" } else { "no" }.into(),
    ]
}

const DELTA_HEADERS: [&str; 6] = [
    "k1",
    "k2",
    "gain_term",
    "baseline_term",
    "delta_bor",
    "plateau_prediction",
];

fn tables(sweep: &Sweep) -> (Table, Table, Table) {
    let mut reports = Table::new(&REPORT_HEADERS);
    for r in &sweep.reports {
        reports.push(report_cells(r));
    }
    let mut deltas = Table::new(&DELTA_HEADERS);
    for d in &sweep.deltas {
        deltas.push(vec![
            d.k1.into(),
            d.k2.into(),
            d.gain_term.into(),
            d.baseline_term.into(),
            d.total.into(),
            d.predicted_plateau.into(),
        ]);
    }
    // Long form for CSV: each row carries the step from the previous depth.
    let mut headers: Vec<&str> = REPORT_HEADERS.to_vec();
    headers.extend(["gain_term", "baseline_term", "delta_bor", "plateau_prediction"]);
    let mut long = Table::new(&headers);
    for (i, r) in sweep.reports.iter().enumerate() {
        let mut cells = report_cells(r);
        match i.checked_sub(1).map(|j| &sweep.deltas[j]) {
            Some(d) => cells.extend([
                d.gain_term.into(),
                d.baseline_term.into(),
                d.total.into(),
                d.predicted_plateau.into(),
            ]),
            None => cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
        }
        long.push(cells);
    }
    (reports, deltas, long)
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    if args.bootstrap > 0 && args.bootstrap < 100 {
        return Err(CliError::usage(
            "--bootstrap needs at least 100 replicates (or 0 to disable)",
        ));
    }
    let rule = args.success_rule();
    let mut warnings = Vec::new();
    let aggregate = !args.p_obs.is_empty() || !args.recall.is_empty();
    let sweep = if aggregate {
        sweep_from_aggregates(args, rule, &mut warnings)?
    } else {
        sweep_from_files(args, rule, &mut warnings)?
    };
    let (reports, deltas, long) = tables(&sweep);
    let mut notes = Vec::new();
    if !sweep.deltas.is_empty() {
        notes.push(format!(
            "depth identity closes to {} bits (tolerance {})",
            fmt_num(sweep.max_closure_residual),
            fmt_num(CLOSURE_TOLERANCE)
        ));
    }
    if aggregate && args.bootstrap > 0 {
        notes.push("confidence intervals need per-query data and are omitted for aggregate input".into());
    }
    let out = Output {
        payload: sweep,
        tables: if args.format == Format::Csv {
            vec![(None, long)]
        } else if deltas.rows.is_empty() {
            vec![(None, reports)]
        } else {
            vec![(None, reports), (Some("depth decomposition".into()), deltas)]
        },
        notes,
        warnings,
    };
    emit(args.format, "eval", args, out)
}
