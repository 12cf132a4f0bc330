//! Commands that need only N, R_q and K: ceiling, advise, simulate, boundary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bor_core::advisor::{self, CollapseDiagnostic, Recommendation, RelevantCount, Scenario, Zone};
use bor_core::metrics::{self, CeilingReport};
use bor_core::probability::{lambda_rate, p_rand_at_least_m, p_rand_poisson};
use bor_core::simulator::{self, BoundaryRow, MonteCarloEstimate, TrialConfig};
use bor_core::{BaselineParams, Probability};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{emit, Cell, Format, Output, Table};

/// Reads relevant counts from flag values; `@FILE` expands to the
/// whitespace- or comma-separated counts in FILE.
pub fn relevant_counts(values: &[String]) -> CliResult<Vec<u64>> {
    let mut counts = Vec::new();
    for v in values {
        if let Some(path) = v.strip_prefix('@') {
            let path = Path::new(path);
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            for (i, line) in text.lines().enumerate() {
                for tok in line
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                {
                    let r = tok.parse::<u64>().map_err(|_| {
                        CliError::data(format!(
                            "{}: line {}: `{tok}` is not a relevant count",
                            path.display(),
                            i + 1
                        ))
                    })?;
                    counts.push(r);
                }
            }
        } else {
            counts.push(
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::usage(format!("--rq `{v}` is not a non-negative integer")))?,
            );
        }
    }
    if counts.is_empty() {
        return Err(CliError::usage("--rq gave no relevant counts"));
    }
    Ok(counts)
}

#[derive(Args, Debug, Serialize)]
pub struct CeilingArgs {
    /// Corpus size N
    #[arg(long)]
    pub n: u64,
    /// Relevant documents per query; repeat or comma-separate for several queries, or @FILE
    #[arg(long, required = true, value_delimiter = ',')]
    pub rq: Vec<String>,
    /// Retrieval depth K
    #[arg(long)]
    pub k: u64,
    /// Minimum relevant hits for success
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Serialize)]
struct CeilingPayload {
    corpus_size: u64,
    depth: u64,
    min_hits: u64,
    queries: usize,
    excluded_queries: usize,
    mean_relevant: f64,
    lambda: f64,
    exact_baseline: Probability,
    poisson_baseline: Probability,
    ceilings: CeilingReport,
    poisson_ceiling_bits: f64,
    zone: Zone,
}

pub fn ceiling(args: &CeilingArgs) -> CliResult<()> {
    let counts = relevant_counts(&args.rq)?;
    let mut cache: BTreeMap<u64, Probability> = BTreeMap::new();
    let mut baselines = Vec::with_capacity(counts.len());
    let mut excluded = 0;
    for &r in &counts {
        if r < args.m {
            excluded += 1;
            continue;
        }
        let b = match cache.get(&r) {
            Some(b) => *b,
            None => {
                let b = p_rand_at_least_m(&BaselineParams::with_min_hits(args.n, r, args.k, args.m)?)?;
                cache.insert(r, b);
                b
            }
        };
        baselines.push(b);
    }
    if baselines.is_empty() {
        return Err(bor_core::BorError::NoEvaluableQueries(format!(
            "no query has at least m={} relevant documents",
            args.m
        ))
        .into());
    }
    let kept: Vec<u64> = counts.iter().copied().filter(|&r| r >= args.m).collect();
    let mean_relevant = kept.iter().sum::<u64>() as f64 / kept.len() as f64;
    let lambda = lambda_rate(args.n, mean_relevant, args.k)?;
    let poisson_baseline = p_rand_poisson(lambda, args.m)?;
    let payload = CeilingPayload {
        corpus_size: args.n,
        depth: args.k,
        min_hits: args.m,
        queries: baselines.len(),
        excluded_queries: excluded,
        mean_relevant,
        lambda,
        exact_baseline: metrics::mean_probability(&baselines).expect("non-empty"),
        poisson_baseline,
        ceilings: metrics::ceilings(&baselines, args.n, args.k)?,
        poisson_ceiling_bits: poisson_baseline.neg_log2(),
        zone: Zone::from_lambda(lambda),
    };
    let table = Table::key_values(vec![
        ("n", args.n.into()),
        ("k", args.k.into()),
        ("m", args.m.into()),
        ("queries", payload.queries.into()),
        ("mean_relevant", mean_relevant.into()),
        ("lambda", lambda.into()),
        ("exact_baseline", payload.exact_baseline.value().into()),
        ("poisson_baseline", poisson_baseline.value().into()),
        ("ceiling_log_of_mean", payload.ceilings.bor_max_log_of_mean.into()),
        ("ceiling_mean_of_logs", payload.ceilings.bor_max_mean_of_logs.into()),
        ("poisson_ceiling", payload.poisson_ceiling_bits.into()),
        ("bor_opt", payload.ceilings.bor_opt.into()),
        ("zone", payload.zone.as_str().into()),
    ]);
    let mut out = Output::new(payload, table);
    if excluded > 0 {
        out.warnings.push(format!(
            "{excluded} queries with fewer than m={} relevant documents excluded",
            args.m
        ));
    }
    emit(args.format, "ceiling", args, out)
}

#[derive(Args, Debug, Serialize)]
pub struct AdviseArgs {
    /// Corpus or catalog size N
    #[arg(long, requires = "rq")]
    pub n: Option<u64>,
    /// Mean relevant items per query (may be fractional)
    #[arg(long, requires = "n")]
    pub rq: Option<f64>,
    /// Depth to diagnose
    #[arg(long, requires = "n")]
    pub k: Option<u64>,
    /// Smallest ceiling worth retrieving for, in bits
    #[arg(long, default_value_t = 0.1)]
    pub min_bits: f64,
    /// Scenario file: CSV with header name,n,rq,k or a JSON array of such records
    #[arg(long, conflicts_with_all = ["n", "rq", "k"], required_unless_present = "n")]
    pub scenarios: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Deserialize)]
struct ScenarioRecord {
    name: String,
    n: u64,
    rq: f64,
    k: u64,
}

fn read_scenarios(path: &Path) -> CliResult<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let records: Vec<ScenarioRecord> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| CliError::data(e.to_string()).in_file(path))?
    } else {
        csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::data(e.to_string()).in_file(path))?
    };
    Ok(records
        .into_iter()
        .map(|r| Scenario {
            name: r.name,
            n: r.n,
            mean_relevant: r.rq,
            k: r.k,
        })
        .collect())
}

fn relevant_note(d: &CollapseDiagnostic) -> String {
    match d.relevant_count {
        RelevantCount::Exact { .. } => String::new(),
        RelevantCount::Interpolated { lower, upper, .. } => format!("interpolated R={lower}..{upper}"),
        RelevantCount::ClampedToOne { .. } => "R clamped to 1".into(),
    }
}

fn diagnostic_cells(d: &CollapseDiagnostic) -> Vec<Cell> {
    vec![
        d.corpus_size.into(),
        d.mean_relevant.into(),
        d.depth.into(),
        d.lambda.into(),
        d.exact_ceiling_bits.into(),
        d.poisson_ceiling_bits.into(),
        d.zone.as_str().into(),
        relevant_note(d).into(),
    ]
}

const DIAGNOSTIC_HEADERS: [&str; 8] = [
    "n",
    "rq",
    "k",
    "lambda",
    "exact_ceiling_bits",
    "poisson_ceiling_bits",
    "zone",
    "note",
];

#[derive(Debug, Serialize)]
struct AdvicePayload {
    diagnostic: Option<CollapseDiagnostic>,
    recommendation: Recommendation,
}

pub fn advise(args: &AdviseArgs) -> CliResult<()> {
    if let Some(path) = &args.scenarios {
        let rows = advisor::catalog_report(&read_scenarios(path)?);
        let mut headers = vec!["scenario"];
        headers.extend(DIAGNOSTIC_HEADERS);
        let mut table = Table::new(&headers);
        let mut warnings = Vec::new();
        for row in &rows {
            let mut cells: Vec<Cell> = vec![row.scenario.name.as_str().into()];
            match &row.diagnostic {
                Some(d) => cells.extend(diagnostic_cells(d)),
                None => {
                    let s = &row.scenario;
                    cells.extend([s.n.into(), s.mean_relevant.into(), s.k.into()]);
                    cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                    cells.push(row.error.clone().unwrap_or_default().into());
                    warnings.push(format!("scenario {}: {}", s.name, row.error.as_deref().unwrap_or("")));
                }
            }
            table.push(cells);
        }
        let mut out = Output::new(rows, table);
        out.warnings = warnings;
        return emit(args.format, "advise", args, out);
    }

    let (Some(n), Some(rq)) = (args.n, args.rq) else {
        return Err(CliError::usage("advise needs --n and --rq, or --scenarios"));
    };
    let diagnostic = args.k.map(|k| advisor::diagnose(n, rq, k)).transpose()?;
    let recommendation = advisor::recommend_k(n, rq, args.min_bits)?;
    let mut headers = vec!["row"];
    headers.extend(DIAGNOSTIC_HEADERS);
    let mut table = Table::new(&headers);
    if let Some(d) = &diagnostic {
        let mut cells: Vec<Cell> = vec!["requested".into()];
        cells.extend(diagnostic_cells(d));
        table.push(cells);
    }
    let mut cells: Vec<Cell> = vec![if recommendation.saturated {
        "saturated"
    } else {
        "recommended"
    }
    .into()];
    let mut rec_cells = diagnostic_cells(&recommendation.diagnostic);
    rec_cells[2] = recommendation.depth.into();
    cells.extend(rec_cells);
    table.push(cells);
    let note = if recommendation.saturated {
        format!(
            "no depth reaches {} bits: even K=1 gives {} bits",
            args.min_bits,
            crate::output::fmt_num(recommendation.diagnostic.exact_ceiling_bits)
        )
    } else {
        format!(
            "recommended K = {} (largest K with exact ceiling >= {} bits)",
            recommendation.depth, args.min_bits
        )
    };
    let mut out = Output::new(
        AdvicePayload {
            diagnostic,
            recommendation,
        },
        table,
    );
    out.notes.push(note);
    emit(args.format, "advise", args, out)
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u64,
    /// Relevant documents R
    #[arg(long)]
    pub rq: u64,
    #[arg(long)]
    pub k: u64,
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Serialize)]
struct SimulationPayload {
    params: BaselineParams,
    estimate: MonteCarloEstimate,
    exact: Probability,
    z_score: f64,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let params = BaselineParams::with_min_hits(args.n, args.rq, args.k, args.m)?;
    let estimate = simulator::monte_carlo_p(&TrialConfig {
        params,
        trials: args.trials,
        seed: args.seed,
    })?;
    let exact = p_rand_at_least_m(&params)?;
    let z_score = estimate.z_score(exact.value());
    let table = Table::key_values(vec![
        ("trials", estimate.trials.into()),
        ("successes", estimate.successes.into()),
        ("empirical_p", estimate.p.into()),
        ("std_error", estimate.std_error.into()),
        ("exact_p", exact.value().into()),
        ("z_score", z_score.into()),
    ]);
    emit(
        args.format,
        "simulate",
        args,
        Output::new(
            SimulationPayload {
                params,
                estimate,
                exact,
                z_score,
            },
            table,
        ),
    )
}

#[derive(Args, Debug, Serialize)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub n: u64,
    /// Mean relevant documents per query
    #[arg(long)]
    pub rq: f64,
    /// Explicit ascending depths; default is a geometric grid up to --k-max
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u64>,
    /// Largest depth of the default grid (defaults to N)
    #[arg(long, conflicts_with = "k")]
    pub k_max: Option<u64>,
    /// Points in the default grid
    #[arg(long, default_value_t = 50, conflicts_with = "k")]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

pub fn boundary(args: &BoundaryArgs) -> CliResult<()> {
    let grid = if args.k.is_empty() {
        simulator::log_grid(args.k_max.unwrap_or(args.n), args.points)
    } else {
        args.k.clone()
    };
    if grid.is_empty() {
        return Err(CliError::usage("empty depth grid"));
    }
    let rows: Vec<BoundaryRow> = simulator::boundary_map(args.n, args.rq, &grid)?;
    let mut table = Table::new(&["k", "lambda", "exact_ceiling_bits", "poisson_ceiling_bits", "zone"]);
    for r in &rows {
        table.push(vec![
            r.k.into(),
            r.lambda.into(),
            r.exact_ceiling_bits.into(),
            r.poisson_ceiling_bits.into(),
            r.zone.as_str().into(),
        ]);
    }
    emit(args.format, "boundary", args, Output::new(rows, table))
}
