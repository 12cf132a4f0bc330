//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails on available inputs.
//!
//! Some checks cannot pass in this environment or cannot pass at all; they
//! print FAIL with the reason and leave the exit status alone:
//!
//! - 9 needs the 20 Newsgroups corpus as a corpus file (JSON lines with
//!   id/text/label, or TSV id/label/text) named by `BOR_20NG_CORPUS`.
//! - 2 asks every listed system to sit within 0.2 bits of bor_opt, but a
//!   recall of 0.857 is log2(0.857) = −0.223 bits from it by definition.
//!   The BoR values themselves are still gated.

mod common;

use std::time::Instant;

use bor_core::advisor::{catalog_report, diagnose, exact_ceiling, recommend_k, Scenario, Zone};
use bor_core::bm25::{build_index, run_queries, Bm25Params, Tokenizer};
use bor_core::evaluator::{
    bootstrap_ci, evaluate, BootstrapConfig, EvalOptions, SuccessRule, Sweep, CLOSURE_TOLERANCE,
};
use bor_core::ingest::{class_relevance, parse_corpus, subject_line};
use bor_core::metrics::{bor, bor_opt, bor_recall, ceilings};
use bor_core::probability::{lambda_rate, p_rand_at_least_m, p_rand_coverage, p_rand_poisson};
use bor_core::rng::stream_rng;
use bor_core::simulator::{monte_carlo_p, simulate_sweep, RelevanceModel, RetrieverModel, SyntheticSpec, TrialConfig};
use bor_core::{BaselineParams, Probability};
use common::{newsgroups_per_query_r, Pascal, NEWSGROUPS_CLASS_SIZES, NEWSGROUPS_N};
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Reported as FAIL without failing the run.
    Unattainable(String),
}

type Criterion = Box<dyn Fn() -> Outcome>;

type Check = std::result::Result<String, String>;

fn within(name: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(format!("{name}={got:.4}"))
    } else {
        Err(format!("{name}={got:.6}, expected {want} ± {tol}"))
    }
}

fn all(checks: Vec<Check>) -> Check {
    let mut ok = Vec::new();
    for c in checks {
        ok.push(c?);
    }
    Ok(ok.join(", "))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1_librarian() -> Check {
    let start = Instant::now();
    let b20 = p_rand_coverage(&BaselineParams::new(1000, 10, 20).map_err(err)?).map_err(err)?;
    let b12 = p_rand_coverage(&BaselineParams::new(1000, 10, 12).map_err(err)?).map_err(err)?;
    let bits20 = bor(1.0, &b20).map_err(err)?.bits;
    let bits12 = bor(1.0, &b12).map_err(err)?.bits;
    let elapsed = start.elapsed();
    let mut checks = vec![within("K=20", bits20, 2.45, 0.01), within("K=12", bits12, 3.13, 0.01)];
    checks.push(if elapsed.as_secs_f64() < 1e-3 {
        Ok(format!("{:.1}us", elapsed.as_secs_f64() * 1e6))
    } else {
        Err(format!("took {elapsed:?}, budget 1 ms"))
    });
    all(checks)
}

fn c2_recall_rule() -> Outcome {
    let n = 8_841_823;
    let opt = match bor_opt(n, 1000) {
        Ok(v) => v,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut checks = vec![within("bor_opt", opt, 13.11, 0.01)];
    let mut bits = Vec::new();
    for (recall, want) in [(0.857, 12.89), (0.979, 13.08), (0.985, 13.09), (0.987, 13.09)] {
        match bor_recall(recall, n, 1000) {
            Ok(b) => {
                checks.push(within(&format!("recall {recall}"), b.bits, want, 0.01));
                bits.push(b.bits);
            }
            Err(e) => return Outcome::Fail(e.to_string()),
        }
    }
    let values = match all(checks) {
        Ok(v) => v,
        Err(e) => return Outcome::Fail(e),
    };
    let worst = bits.iter().map(|b| opt - b).fold(0.0, f64::max);
    let spread = bits.iter().copied().fold(f64::MIN, f64::max) - bits.iter().copied().fold(f64::MAX, f64::min);
    if worst <= 0.2 {
        Outcome::Pass(format!("{values}, all within {worst:.3} bits of ceiling"))
    } else {
        Outcome::Unattainable(format!(
            "{values}; largest gap to ceiling {worst:.3} > 0.2 bits (unattainable: log2(0.857) = -0.223); spread between systems {spread:.3}"
        ))
    }
}

fn c3_collapse_thresholds() -> Check {
    let mut checks = Vec::new();
    for (lambda, p_want, bits_want) in [(3.0, 0.9502, 0.074), (4.6, 0.9899, 0.0146)] {
        let p = p_rand_poisson(lambda, 1).map_err(err)?;
        checks.push(within(&format!("p(λ={lambda})"), p.value(), p_want, 0.0005));
        checks.push(within(&format!("ceiling(λ={lambda})"), p.neg_log2(), bits_want, 0.002));
    }
    all(checks)
}

fn c4_tool_catalog() -> Check {
    let mut checks = Vec::new();
    for (k, want, zone) in [
        (5, 1.69, Zone::Healthy),
        (20, 0.28, Zone::Degraded),
        (58, 0.0, Zone::Collapse),
    ] {
        let d = diagnose(58, 4.0, k).map_err(err)?;
        checks.push(within(&format!("K={k}"), d.exact_ceiling_bits, want, 0.02));
        if d.zone != zone {
            checks.push(Err(format!("K={k}: zone {} expected {}", d.zone, zone)));
        }
        if k == 58 && d.exact_ceiling_bits != 0.0 {
            checks.push(Err(format!("K=N ceiling {} is not exactly 0", d.exact_ceiling_bits)));
        }
    }
    let scenarios = [
        ("rag", 10_000, 1.5, 10, 0.002, 0.0005, Zone::Healthy),
        ("tools filtered", 20, 3.0, 5, 0.75, 0.0, Zone::Healthy),
        ("tools all", 20, 3.0, 20, 3.0, 0.0, Zone::Collapse),
        ("large catalog", 100, 8.0, 50, 4.0, 0.0, Zone::Collapse),
        ("mcp", 58, 4.0, 58, 4.0, 0.0, Zone::Collapse),
    ];
    let rows = catalog_report(
        &scenarios
            .iter()
            .map(|s| Scenario {
                name: s.0.into(),
                n: s.1,
                mean_relevant: s.2,
                k: s.3,
            })
            .collect::<Vec<_>>(),
    );
    let mut lambdas = Vec::new();
    for (row, s) in rows.iter().zip(&scenarios) {
        let d = row
            .diagnostic
            .as_ref()
            .ok_or_else(|| format!("{}: {:?}", s.0, row.error))?;
        if (d.lambda - s.4).abs() > s.5 {
            checks.push(Err(format!("{}: λ={} expected {}", s.0, d.lambda, s.4)));
        }
        if d.zone != s.6 {
            checks.push(Err(format!("{}: zone {} expected {}", s.0, d.zone, s.6)));
        }
        lambdas.push(format!("{}", d.lambda));
    }
    checks.push(Ok(format!("λ=[{}]", lambdas.join(", "))));
    all(checks)
}

fn c5_newsgroups_ceilings() -> Check {
    let per_query = newsgroups_per_query_r();
    if per_query.len() as u64 != NEWSGROUPS_N || NEWSGROUPS_CLASS_SIZES.iter().sum::<u64>() != NEWSGROUPS_N {
        return Err("class sizes do not sum to N".into());
    }
    let mut checks = Vec::new();
    for (k, want) in [(10, 1.31), (100, 0.01)] {
        let baselines: Vec<Probability> = per_query
            .iter()
            .map(|&r| p_rand_coverage(&BaselineParams::new(NEWSGROUPS_N, r, k)?))
            .collect::<bor_core::Result<_>>()
            .map_err(err)?;
        let c = ceilings(&baselines, NEWSGROUPS_N, k).map_err(err)?;
        checks.push(within(&format!("K={k} log-of-mean"), c.bor_max_log_of_mean, want, 0.05));
        checks.push(within(
            &format!("K={k} mean-of-logs"),
            c.bor_max_mean_of_logs,
            want,
            0.05,
        ));
    }
    let mean_r = per_query.iter().sum::<u64>() as f64 / per_query.len() as f64;
    let lambda = lambda_rate(NEWSGROUPS_N, mean_r, 100).map_err(err)?;
    checks.push(within("λ(K=100)", lambda, 5.1, 0.2));
    all(checks)
}

fn closure_ok(label: &str, sweep: &Sweep) -> Check {
    if sweep.max_closure_residual < CLOSURE_TOLERANCE {
        Ok(format!("{label} residual {:.1e}", sweep.max_closure_residual))
    } else {
        Err(format!("{label}: closure residual {}", sweep.max_closure_residual))
    }
}

fn c6_identity_closure() -> Check {
    let spec = |n, relevance, retriever, queries| SyntheticSpec {
        corpus_size: n,
        relevance,
        query_count: queries,
        retriever,
        seed: 7,
    };
    let opts = EvalOptions::default();
    let mut checks = Vec::new();
    let closure_sweeps = [
        (
            "random",
            spec(11_314, RelevanceModel::Constant { r: 565 }, RetrieverModel::Random, 300),
            vec![1, 10, 100, 1000],
            SuccessRule::coverage(),
        ),
        (
            "noisy",
            spec(
                5000,
                RelevanceModel::Constant { r: 20 },
                RetrieverModel::Noisy { hit_prob: 0.05 },
                300,
            ),
            vec![1, 5, 20, 100],
            SuccessRule::coverage(),
        ),
        (
            "classes",
            spec(
                NEWSGROUPS_N,
                RelevanceModel::PerClass {
                    sizes: NEWSGROUPS_CLASS_SIZES.to_vec(),
                },
                RetrieverModel::Noisy { hit_prob: 0.3 },
                400,
            ),
            vec![1, 10, 100],
            SuccessRule::coverage(),
        ),
        (
            "two-hit",
            spec(
                3000,
                RelevanceModel::Constant { r: 6 },
                RetrieverModel::Noisy { hit_prob: 0.2 },
                300,
            ),
            vec![5, 50, 500],
            SuccessRule::Coverage { min_hits: 2 },
        ),
        (
            "recall",
            spec(
                3000,
                RelevanceModel::Constant { r: 6 },
                RetrieverModel::Noisy { hit_prob: 0.2 },
                300,
            ),
            vec![5, 50, 500],
            SuccessRule::Recall,
        ),
    ];
    for (label, s, depths, rule) in &closure_sweeps {
        let sweep = simulate_sweep(s, depths, *rule, &opts).map_err(err)?;
        checks.push(closure_ok(label, &sweep));
    }

    // plateau: oracle runs keep p_obs = 1, so ΔBoR is pure baseline growth
    let mut worst: f64 = 0.0;
    for (n, r, depths) in [(5183u64, 1u64, vec![1u64, 10, 100, 250]), (20_000, 2, vec![5, 50, 500])] {
        let s = spec(n, RelevanceModel::Constant { r }, RetrieverModel::Oracle, 200);
        let sweep = simulate_sweep(&s, &depths, SuccessRule::coverage(), &opts).map_err(err)?;
        checks.push(closure_ok(&format!("oracle R={r}"), &sweep));
        for (d, pair) in sweep.deltas.iter().zip(sweep.reports.windows(2)) {
            let lambda = d.k2 as f64 * r as f64 / n as f64;
            if lambda <= 0.05 && pair[0].p_obs == 1.0 && pair[1].p_obs == 1.0 {
                worst = worst.max((d.total - d.predicted_plateau).abs());
            }
        }
    }
    checks.push(if worst <= 0.02 {
        Ok(format!("plateau gap {worst:.4}"))
    } else {
        Err(format!("plateau gap {worst} > 0.02"))
    });
    all(checks)
}

fn c7_oracle_grid() -> Check {
    let start = Instant::now();
    // literal subset enumeration for N ≤ 16 validates the counting oracle
    let pascal = Pascal::new(60);
    let mut cases = 0u64;
    for n in 1..=16u64 {
        for r in 0..=n {
            let mut hist = vec![vec![0u64; (n + 1) as usize]; (n + 1) as usize];
            let low = (1u64 << r) - 1;
            for mask in 0u64..(1 << n) {
                hist[mask.count_ones() as usize][(mask & low).count_ones() as usize] += 1;
            }
            for k in 1..=n {
                for m in 1..=4u64 {
                    let fav: u64 = hist[k as usize].iter().skip(m as usize).sum();
                    let total: u64 = hist[k as usize].iter().sum();
                    let enumerated = fav as f64 / total as f64;
                    if (enumerated - pascal.at_least(n, r, k, m)).abs() > 1e-15 {
                        return Err(format!(
                            "counting oracle disagrees with enumeration at ({n},{r},{k},{m})"
                        ));
                    }
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for n in 1..=60u64 {
        for r in 0..=n {
            for k in 1..=n {
                for m in 1..=4u64 {
                    let params = BaselineParams::with_min_hits(n, r, k, m).map_err(err)?;
                    let got = p_rand_at_least_m(&params).map_err(err)?;
                    let want = pascal.at_least(n, r, k, m);
                    let diff = (got.value() - want).abs();
                    if diff > 1e-10 {
                        return Err(format!("({n},{r},{k},{m}): {} vs {want}", got.value()));
                    }
                    worst = worst.max(diff);
                    cases += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("grid took {secs:.1}s"));
    }
    Ok(format!("{cases} cases, max |Δ|={worst:.1e}, {secs:.2}s"))
}

fn mc_parameter_sets() -> Vec<BaselineParams> {
    (0..50u64)
        .map(|i| {
            let mut rng = stream_rng(2024, i);
            let n = if i % 3 == 0 {
                rng.gen_range(10..=400u64)
            } else {
                10f64.powf(rng.gen_range(1.0..5.0)).round() as u64
            };
            let k = (10f64.powf(rng.gen_range(0.0..(n.min(400) as f64).log10())))
                .round()
                .clamp(1.0, n as f64) as u64;
            let lambda = 10f64.powf(rng.gen_range(-1.3..0.9));
            let r = (lambda * n as f64 / k as f64).round().min(n as f64) as u64;
            let m = rng.gen_range(1..=4u64);
            BaselineParams::with_min_hits(n, r, k, m).expect("valid by construction")
        })
        .collect()
}

fn c8_monte_carlo() -> Check {
    let sets = mc_parameter_sets();
    let run_all = |threads: usize| -> Result<Vec<_>, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(err)?;
        pool.install(|| {
            sets.iter()
                .enumerate()
                .map(|(i, &params)| {
                    monte_carlo_p(&TrialConfig {
                        params,
                        trials: 100_000,
                        seed: 1000 + i as u64,
                    })
                    .map_err(err)
                })
                .collect()
        })
    };
    let single = run_all(1)?;
    let mut worst: f64 = 0.0;
    for (params, est) in sets.iter().zip(&single) {
        let exact = p_rand_at_least_m(params).map_err(err)?.value();
        let z = est.z_score(exact);
        if z > 4.0 {
            return Err(format!(
                "{params:?}: estimate {} ± {} vs exact {exact}",
                est.p, est.std_error
            ));
        }
        worst = worst.max(z);
    }
    if run_all(4)? != single || run_all(1)? != single {
        return Err("estimates changed across re-runs or thread counts".into());
    }
    Ok(format!(
        "50 sets, max z={worst:.2}, identical on re-run and 1/4 threads"
    ))
}

fn c9_newsgroups_end_to_end() -> Outcome {
    let Ok(path) = std::env::var("BOR_20NG_CORPUS") else {
        return Outcome::Unattainable(
            "corpus unavailable: set BOR_20NG_CORPUS to a labelled 20 Newsgroups corpus file".into(),
        );
    };
    match newsgroups_end_to_end(&path) {
        Ok(s) => Outcome::Pass(s),
        Err(e) => Outcome::Fail(e),
    }
}

fn newsgroups_end_to_end(path: &str) -> Check {
    let file = std::fs::File::open(path).map_err(|e| format!("{path}: {e}"))?;
    let corpus = parse_corpus(std::io::BufReader::new(file)).map_err(err)?.value;
    let index = build_index(&corpus, &Tokenizer::default()).map_err(err)?;
    let queries: Vec<(String, String)> = corpus
        .documents
        .iter()
        .map(|d| (d.id.clone(), subject_line(&d.text)))
        .collect();
    let run = run_queries(&index, &queries, 100, &Bm25Params::default(), true, "bm25").map_err(err)?;
    let ids: Vec<String> = queries.iter().map(|q| q.0.clone()).collect();
    let judgments = class_relevance(&corpus, &ids).map_err(err)?;
    let n = corpus.len() as u64;
    let r100 = evaluate(&run, &judgments, n, 100, SuccessRule::coverage()).map_err(err)?;
    let r10 = evaluate(&run, &judgments, n, 10, SuccessRule::coverage()).map_err(err)?;
    let mut checks = Vec::new();
    checks.push(if r100.p_obs >= 0.99 {
        Ok(format!("p_obs(100)={:.4}", r100.p_obs))
    } else {
        Err(format!("p_obs(100)={:.4} < 0.99", r100.p_obs))
    });
    checks.push(if r100.bor.bits <= 0.02 {
        Ok(format!("BoR(100)={:.4}", r100.bor.bits))
    } else {
        Err(format!("BoR(100)={:.4} > 0.02", r100.bor.bits))
    });
    let gap = r10.ceilings.bor_max_log_of_mean - r10.bor.bits;
    checks.push(if gap.abs() <= 0.15 {
        Ok(format!(
            "BoR(10)={:.4} vs ceiling {:.4}",
            r10.bor.bits, r10.ceilings.bor_max_log_of_mean
        ))
    } else {
        Err(format!("BoR(10)={:.4} is {gap:.3} bits from ceiling", r10.bor.bits))
    });
    all(checks)
}

fn c10_recall_example() -> Check {
    within("BoR", bor_recall(0.4, 1000, 20).map_err(err)?.bits, 4.32, 0.01)
}

fn c11_bootstrap() -> Check {
    let spec = SyntheticSpec {
        corpus_size: 2000,
        relevance: RelevanceModel::Constant { r: 5 },
        query_count: 250,
        retriever: RetrieverModel::Noisy { hit_prob: 0.1 },
        seed: 7,
    };
    let (run, judgments) = bor_core::simulator::synthesize(&spec, 20).map_err(err)?;
    let (outcomes, _, _) =
        bor_core::evaluator::query_outcomes(&run, &judgments, 2000, 20, SuccessRule::coverage()).map_err(err)?;
    let pairs: Vec<(f64, Probability)> = outcomes.iter().map(|o| (o.success, o.baseline)).collect();
    let config = BootstrapConfig {
        replicates: 5000,
        seed: 7,
        level: 0.95,
    };
    let with_threads = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(err)?
            .install(|| bootstrap_ci(&pairs, &config).map_err(err))
    };
    let reference = with_threads(1)?;
    for threads in [1, 2, 4, 8] {
        if with_threads(threads)? != reference {
            return Err(format!("interval changed with {threads} threads"));
        }
    }
    let baseline = p_rand_coverage(&BaselineParams::new(2000, 5, 20).map_err(err)?).map_err(err)?;
    let homogeneous = bootstrap_ci(&vec![(1.0, baseline); 250], &config).map_err(err)?;
    if homogeneous.low != homogeneous.high || homogeneous.low.is_none() {
        return Err(format!("homogeneous interval {homogeneous:?} is not zero-width"));
    }
    Ok(format!(
        "CI [{:.4}, {:.4}] stable across 1/2/4/8 threads, homogeneous width 0",
        reference.low.unwrap_or(f64::NAN),
        reference.high.unwrap_or(f64::NAN)
    ))
}

fn c12_recommend_k() -> Check {
    let mut saturated = 0;
    for i in 0..200u64 {
        let mut rng = stream_rng(12, i);
        let n = 10f64.powf(rng.gen_range(0.3..5.0)).round() as u64;
        let mean_r = if rng.gen_bool(0.5) {
            rng.gen_range(1..=n) as f64
        } else {
            1.0 + rng.gen::<f64>() * (n as f64 - 1.0)
        };
        let rec = recommend_k(n, mean_r, 0.1).map_err(err)?;
        let ceiling = |k: u64| exact_ceiling(n, mean_r, k).map(|c| c.0).map_err(err);
        if rec.saturated {
            saturated += 1;
            if ceiling(1)? >= 0.1 {
                return Err(format!(
                    "({n}, {mean_r}): flagged saturated but K=1 has {} bits",
                    ceiling(1)?
                ));
            }
            continue;
        }
        if ceiling(rec.depth)? < 0.1 {
            return Err(format!("({n}, {mean_r}): K={} below threshold", rec.depth));
        }
        if rec.depth < n && ceiling(rec.depth + 1)? >= 0.1 {
            return Err(format!("({n}, {mean_r}): K+1={} still above threshold", rec.depth + 1));
        }
    }
    Ok(format!("200 points ({saturated} saturated)"))
}

fn main() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("librarian example", Box::new(|| c1_librarian().into())),
        ("recall-rule BoR, large corpus", Box::new(c2_recall_rule)),
        ("collapse thresholds", Box::new(|| c3_collapse_thresholds().into())),
        ("tool-catalog ceilings and zones", Box::new(|| c4_tool_catalog().into())),
        ("newsgroups ceilings", Box::new(|| c5_newsgroups_ceilings().into())),
        (
            "depth identity closure and plateau",
            Box::new(|| c6_identity_closure().into()),
        ),
        ("closed form vs enumeration grid", Box::new(|| c7_oracle_grid().into())),
        ("Monte Carlo bracket", Box::new(|| c8_monte_carlo().into())),
        ("BM25 newsgroups collapse", Box::new(c9_newsgroups_end_to_end)),
        ("recall-rule example", Box::new(|| c10_recall_example().into())),
        ("bootstrap determinism", Box::new(|| c11_bootstrap().into())),
        ("recommend_k consistency", Box::new(|| c12_recommend_k().into())),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Unattainable(d) => ("FAIL", d),
        };
        println!("{status} [{:>2}] {name}: {detail} ({secs:.2}s)", i + 1);
    }
    if failed > 0 {
        // gated failures only
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

impl From<Check> for Outcome {
    fn from(c: Check) -> Self {
        match c {
            Ok(s) => Outcome::Pass(s),
            Err(s) => Outcome::Fail(s),
        }
    }
}
