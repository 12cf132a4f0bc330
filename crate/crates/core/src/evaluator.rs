//! Per-query success, macro aggregation against exact baselines, depth sweeps
//! and bootstrap intervals.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BorError, Result};
use crate::ingest::{Judgments, Run, ScoredDoc};
use crate::metrics::{self, BorValue, CeilingReport, DepthDelta};
use crate::numeric::mean;
use crate::probability::{p_rand_at_least_m, BaselineParams, Probability};
use crate::rng::stream_rng;

/// Closure tolerance for the depth identity, in bits.
pub const CLOSURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuccessRule {
    /// At least `min_hits` relevant documents in the top-K.
    Coverage { min_hits: u64 },
    /// Fraction of the relevant documents found in the top-K.
    Recall,
}

impl SuccessRule {
    pub fn coverage() -> Self {
        SuccessRule::Coverage { min_hits: 1 }
    }

    pub fn min_hits(&self) -> u64 {
        match *self {
            SuccessRule::Coverage { min_hits } => min_hits,
            SuccessRule::Recall => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_hits() == 0 {
            return Err(BorError::domain("coverage rule needs m >= 1"));
        }
        Ok(())
    }
}

impl std::fmt::Display for SuccessRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SuccessRule::Coverage { min_hits: 1 } => write!(f, "coverage"),
            SuccessRule::Coverage { min_hits } => write!(f, "coverage(m={min_hits})"),
            SuccessRule::Recall => write!(f, "recall"),
        }
    }
}

/// Success of one ranking at depth K. Rankings shorter than K are used as-is.
pub fn query_success(ranking: &[ScoredDoc], relevant: &BTreeSet<&str>, depth: usize, rule: SuccessRule) -> f64 {
    let hits = ranking
        .iter()
        .take(depth)
        .filter(|d| relevant.contains(d.doc_id.as_str()))
        .count();
    match rule {
        SuccessRule::Coverage { min_hits } => {
            if hits as u64 >= min_hits {
                1.0
            } else {
                0.0
            }
        }
        SuccessRule::Recall => {
            if relevant.is_empty() {
                0.0
            } else {
                hits as f64 / relevant.len() as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 5000,
            seed: 7,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub low: Option<f64>,
    pub high: Option<f64>,
    pub defined_replicates: usize,
    pub undefined_replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub bootstrap: Option<BootstrapConfig>,
    /// Replace zero observed success by 1/(2·|Q|) and mark the report.
    pub smooth_zero_success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub relevant: u64,
    pub success: f64,
    pub baseline: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorReport {
    pub depth: u64,
    pub rule: SuccessRule,
    pub query_count: usize,
    pub p_obs: f64,
    pub mean_baseline: Probability,
    pub bor: BorValue,
    pub enrichment: Option<f64>,
    pub ceilings: CeilingReport,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Bootstrap replicates whose BoR was undefined (zero resampled success).
    pub ci_undefined_replicates: usize,
    /// Judged queries skipped because R_q < m (R_q = 0 for plain coverage).
    pub excluded_zero_r: usize,
    /// Evaluable queries that the run never answered; scored as failures.
    pub missing_from_run: usize,
    /// True when `p_obs` was zero and replaced by 1/(2·|Q|).
    pub smoothed: bool,
}

/// Per-query successes and exact baselines for the evaluable queries.
///
/// Returns the outcomes (sorted by query id), the number of excluded
/// queries with too few relevant documents, and the number missing from the run.
pub fn query_outcomes(
    run: &Run,
    judgments: &Judgments,
    corpus_size: u64,
    depth: u64,
    rule: SuccessRule,
) -> Result<(Vec<QueryOutcome>, usize, usize)> {
    rule.validate()?;
    if depth == 0 || depth > corpus_size {
        return Err(BorError::domain(format!(
            "depth K={depth} must satisfy 1 <= K <= N={corpus_size}"
        )));
    }
    let m = rule.min_hits();
    let mut evaluable = Vec::new();
    let mut excluded = 0usize;
    for q in judgments.query_ids() {
        let r = judgments.relevant_count(q) as u64;
        if r > corpus_size {
            return Err(BorError::Invalid(format!(
                "query {q} has R_q={r} relevant documents, more than N={corpus_size}"
            )));
        }
        if r < m {
            excluded += 1;
        } else {
            evaluable.push((q, r));
        }
    }
    if evaluable.is_empty() {
        return Err(BorError::NoEvaluableQueries(format!(
            "{} judged queries, none with at least {m} relevant document(s)",
            judgments.entries.len()
        )));
    }

    let mut cache: HashMap<u64, Probability> = HashMap::new();
    for &(_, r) in &evaluable {
        if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(r) {
            e.insert(query_baseline(corpus_size, r, depth, rule)?);
        }
    }

    let missing = evaluable.iter().filter(|(q, _)| run.ranking(q).is_none()).count();
    let outcomes = evaluable
        .par_iter()
        .map(|&(q, r)| {
            let success = run.ranking(q).map_or(0.0, |ranking| {
                query_success(ranking, &judgments.relevant_set(q), depth as usize, rule)
            });
            QueryOutcome {
                query_id: q.to_string(),
                relevant: r,
                success,
                baseline: cache[&r],
            }
        })
        .collect();
    Ok((outcomes, excluded, missing))
}

/// Aggregate BoR for one depth.
pub fn evaluate(
    run: &Run,
    judgments: &Judgments,
    corpus_size: u64,
    depth: u64,
    rule: SuccessRule,
) -> Result<BorReport> {
    evaluate_with(run, judgments, corpus_size, depth, rule, &EvalOptions::default())
}

pub fn evaluate_with(
    run: &Run,
    judgments: &Judgments,
    corpus_size: u64,
    depth: u64,
    rule: SuccessRule,
    options: &EvalOptions,
) -> Result<BorReport> {
    let (outcomes, excluded, missing) = query_outcomes(run, judgments, corpus_size, depth, rule)?;
    report_from_outcomes(&outcomes, corpus_size, depth, rule, excluded, missing, options)
}

/// Builds a report from precomputed per-query outcomes.
pub fn report_from_outcomes(
    outcomes: &[QueryOutcome],
    corpus_size: u64,
    depth: u64,
    rule: SuccessRule,
    excluded_zero_r: usize,
    missing_from_run: usize,
    options: &EvalOptions,
) -> Result<BorReport> {
    if outcomes.is_empty() {
        return Err(BorError::NoEvaluableQueries("empty outcome list".into()));
    }
    let baselines: Vec<Probability> = outcomes.iter().map(|o| o.baseline).collect();
    let p_obs = mean(outcomes.iter().map(|o| o.success)).expect("non-empty");
    let mut report = report_from_aggregate(p_obs, &baselines, corpus_size, depth, rule, options.smooth_zero_success)?;
    if let Some(config) = options.bootstrap {
        let pairs: Vec<(f64, Probability)> = outcomes.iter().map(|o| (o.success, o.baseline)).collect();
        let ci = bootstrap_ci(&pairs, &config)?;
        report.ci_low = ci.low;
        report.ci_high = ci.high;
        report.ci_undefined_replicates = ci.undefined_replicates;
    }
    report.excluded_zero_r = excluded_zero_r;
    report.missing_from_run = missing_from_run;
    Ok(report)
}

/// Report from an aggregate success rate and per-query baselines, as when
/// only published figures are available. Agrees with
/// [`report_from_outcomes`] whenever `p_obs` is the mean per-query success.
pub fn report_from_aggregate(
    p_obs: f64,
    baselines: &[Probability],
    corpus_size: u64,
    depth: u64,
    rule: SuccessRule,
    smooth_zero_success: bool,
) -> Result<BorReport> {
    rule.validate()?;
    if baselines.is_empty() {
        return Err(BorError::NoEvaluableQueries("no baselines to aggregate".into()));
    }
    if !(0.0..=1.0).contains(&p_obs) {
        return Err(BorError::domain(format!("observed success {p_obs} outside [0, 1]")));
    }
    let smoothed = smooth_zero_success && p_obs == 0.0;
    let p_obs = if smoothed {
        metrics::smoothed_p_obs(p_obs, baselines.len())
    } else {
        p_obs
    };
    let mean_baseline = metrics::mean_probability(baselines).expect("non-empty");
    Ok(BorReport {
        depth,
        rule,
        query_count: baselines.len(),
        p_obs,
        mean_baseline,
        bor: metrics::bor(p_obs, &mean_baseline)?,
        enrichment: metrics::enrichment_factor(p_obs, &mean_baseline)?,
        ceilings: metrics::ceilings(baselines, corpus_size, depth)?,
        ci_low: None,
        ci_high: None,
        ci_undefined_replicates: 0,
        excluded_zero_r: 0,
        missing_from_run: 0,
        smoothed,
    })
}

/// Exact baseline for one query under `rule`.
pub fn query_baseline(corpus_size: u64, relevant: u64, depth: u64, rule: SuccessRule) -> Result<Probability> {
    match rule {
        SuccessRule::Coverage { min_hits } => {
            p_rand_at_least_m(&BaselineParams::with_min_hits(corpus_size, relevant, depth, min_hits)?)
        }
        SuccessRule::Recall => {
            BaselineParams::new(corpus_size, relevant, depth)?;
            Probability::from_value(depth as f64 / corpus_size as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub reports: Vec<BorReport>,
    /// One entry per consecutive pair of depths.
    pub deltas: Vec<DepthDelta>,
    /// Largest |total − (BoR(K2) − BoR(K1))| over defined deltas.
    pub max_closure_residual: f64,
}

/// Reports at each depth plus the exact decomposition between neighbours.
///
/// Panics if the decomposition fails to close to within
/// [`CLOSURE_TOLERANCE`]; that would be an arithmetic bug, not a data issue.
pub fn depth_sweep(
    run: &Run,
    judgments: &Judgments,
    corpus_size: u64,
    depths: &[u64],
    rule: SuccessRule,
    options: &EvalOptions,
) -> Result<Sweep> {
    if depths.is_empty() {
        return Err(BorError::domain("depth sweep needs at least one K"));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BorError::domain("depth list must be strictly ascending"));
    }
    let reports = depths
        .iter()
        .map(|&k| evaluate_with(run, judgments, corpus_size, k, rule, options))
        .collect::<Result<Vec<_>>>()?;
    sweep_from_reports(reports)
}

pub fn sweep_from_reports(reports: Vec<BorReport>) -> Result<Sweep> {
    let mut deltas = Vec::with_capacity(reports.len().saturating_sub(1));
    let mut max_closure_residual: f64 = 0.0;
    for pair in reports.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let delta = metrics::depth_delta(
            a.p_obs,
            b.p_obs,
            &a.mean_baseline,
            &b.mean_baseline,
            a.depth,
            b.depth,
            a.rule.min_hits(),
        )?;
        if let (Some(x), Some(y)) = (a.bor.get(), b.bor.get()) {
            let residual = (delta.total - (y - x)).abs();
            assert!(
                residual < CLOSURE_TOLERANCE,
                "depth identity failed to close: residual {residual} between K={} and K={}",
                a.depth,
                b.depth
            );
            max_closure_residual = max_closure_residual.max(residual);
        }
        deltas.push(delta);
    }
    Ok(Sweep {
        reports,
        deltas,
        max_closure_residual,
    })
}

/// Percentile bootstrap over queries.
///
/// Replicate `r` resamples with its own stream `(seed, r)`, so the interval
/// does not depend on thread count. Replicates with zero resampled success
/// are counted and left out of the percentiles.
pub fn bootstrap_ci(per_query: &[(f64, Probability)], config: &BootstrapConfig) -> Result<BootstrapInterval> {
    if per_query.is_empty() {
        return Err(BorError::domain("bootstrap needs at least one query"));
    }
    if config.replicates < 100 {
        return Err(BorError::domain(format!(
            "bootstrap needs at least 100 replicates, got {}",
            config.replicates
        )));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(BorError::domain(format!(
            "confidence level {} outside (0, 1)",
            config.level
        )));
    }
    let n = per_query.len();
    let replicate_bits: Vec<Option<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.seed, r as u64);
            let picks: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let p_obs = mean(picks.iter().map(|&i| per_query[i].0)).expect("n > 0");
            let baselines: Vec<Probability> = picks.iter().map(|&i| per_query[i].1).collect();
            let pbar = metrics::mean_probability(&baselines).expect("n > 0");
            metrics::bor(p_obs, &pbar).ok().and_then(|b| b.get())
        })
        .collect();
    let mut defined: Vec<f64> = replicate_bits.iter().flatten().copied().collect();
    let undefined_replicates = config.replicates - defined.len();
    if defined.is_empty() {
        return Ok(BootstrapInterval {
            low: None,
            high: None,
            defined_replicates: 0,
            undefined_replicates,
        });
    }
    defined.sort_by(f64::total_cmp);
    let alpha = (1.0 - config.level) / 2.0;
    Ok(BootstrapInterval {
        low: Some(quantile_sorted(&defined, alpha)),
        high: Some(quantile_sorted(&defined, 1.0 - alpha)),
        defined_replicates: defined.len(),
        undefined_replicates,
    })
}

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
