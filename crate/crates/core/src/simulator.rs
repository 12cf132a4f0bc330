//! Monte Carlo estimates of the random-retrieval baseline and a synthetic
//! dataset generator for end-to-end sweeps.
//!
//! Trial `t` (or synthetic query `q`) draws from stream `(seed, t)`; see
//! [`crate::rng`]. Results are bit-identical across thread counts.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advisor::{diagnose, Zone};
use crate::error::{BorError, Result};
use crate::evaluator::{depth_sweep, EvalOptions, SuccessRule, Sweep};
use crate::ingest::{Judgments, Run, ScoredDoc};
use crate::probability::BaselineParams;
use crate::rng::{stream_rng, StreamRng};

/// Above this K/N, sampling uses a partial Fisher–Yates shuffle instead of
/// rejection.
const SHUFFLE_FRACTION: f64 = 0.1;

/// Sampler scratch is linear in N.
pub const MAX_SIMULATED_CORPUS: u64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub params: BaselineParams,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub p: f64,
    pub std_error: f64,
    pub successes: u64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    /// Distance of `exact` from the estimate in standard errors. A zero
    /// standard error gives 0 on exact agreement and infinity otherwise.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = (exact - self.p).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Scratch for partial Fisher–Yates: a permutation of 0..n restored after each trial.
struct Shuffler {
    perm: Vec<u32>,
    swaps: Vec<(usize, usize)>,
}

impl Shuffler {
    fn new(n: usize) -> Self {
        Self {
            perm: (0..n as u32).collect(),
            swaps: Vec::new(),
        }
    }

    fn count_below(&mut self, rng: &mut StreamRng, k: usize, threshold: u32) -> u64 {
        let n = self.perm.len();
        let mut hits = 0;
        for i in 0..k {
            let j = rng.gen_range(i..n);
            self.perm.swap(i, j);
            self.swaps.push((i, j));
            hits += (self.perm[i] < threshold) as u64;
        }
        while let Some((i, j)) = self.swaps.pop() {
            self.perm.swap(i, j);
        }
        hits
    }
}

/// Scratch for rejection sampling: a bitset over 0..n cleared after each trial.
struct Rejector {
    bits: Vec<u64>,
    drawn: Vec<u64>,
}

impl Rejector {
    fn new(n: u64) -> Self {
        Self {
            bits: vec![0; n.div_ceil(64) as usize],
            drawn: Vec::new(),
        }
    }

    fn count_below(&mut self, rng: &mut StreamRng, n: u64, k: usize, threshold: u64) -> u64 {
        let mut hits = 0;
        while self.drawn.len() < k {
            let x = rng.gen_range(0..n);
            let (word, mask) = ((x / 64) as usize, 1u64 << (x % 64));
            if self.bits[word] & mask == 0 {
                self.bits[word] |= mask;
                self.drawn.push(x);
                hits += (x < threshold) as u64;
            }
        }
        for x in self.drawn.drain(..) {
            self.bits[(x / 64) as usize] = 0;
        }
        hits
    }
}

/// Fraction of trials in which K uniform draws without replacement from N
/// hit at least m of the R designated relevant indices 0..R.
pub fn monte_carlo_p(config: &TrialConfig) -> Result<MonteCarloEstimate> {
    let BaselineParams {
        corpus_size: n,
        relevant: r,
        depth: k,
        min_hits: m,
    } = config.params;
    config.params.validate()?;
    if config.trials == 0 {
        return Err(BorError::domain("Monte Carlo needs at least one trial"));
    }
    let shuffle = k as f64 / n as f64 > SHUFFLE_FRACTION;
    if n > MAX_SIMULATED_CORPUS {
        return Err(BorError::domain(format!("corpus of {n} too large to simulate")));
    }
    let successes: u64 = if shuffle {
        (0..config.trials)
            .into_par_iter()
            .map_init(
                || Shuffler::new(n as usize),
                |s, t| {
                    let mut rng = stream_rng(config.seed, t);
                    (s.count_below(&mut rng, k as usize, r as u32) >= m) as u64
                },
            )
            .sum()
    } else {
        (0..config.trials)
            .into_par_iter()
            .map_init(
                || Rejector::new(n),
                |s, t| {
                    let mut rng = stream_rng(config.seed, t);
                    (s.count_below(&mut rng, n, k as usize, r) >= m) as u64
                },
            )
            .sum()
    };
    let p = successes as f64 / config.trials as f64;
    Ok(MonteCarloEstimate {
        p,
        std_error: (p * (1.0 - p) / config.trials as f64).sqrt(),
        successes,
        trials: config.trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelevanceModel {
    /// Each query gets `r` relevant documents drawn uniformly.
    Constant { r: u64 },
    /// Documents are split into consecutive classes of these sizes; each query
    /// is a document, relevant to the rest of its class, and excluded from its
    /// own ranking.
    PerClass { sizes: Vec<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetrieverModel {
    Random,
    /// All relevant documents first, then random non-relevant ones.
    Oracle,
    /// Each slot independently holds a relevant document with probability `hit_prob`.
    Noisy {
        hit_prob: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub corpus_size: u64,
    pub relevance: RelevanceModel,
    pub query_count: u64,
    pub retriever: RetrieverModel,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.corpus_size;
        if n == 0 {
            return Err(BorError::domain("synthetic corpus must be non-empty"));
        }
        if n > u32::MAX as u64 {
            return Err(BorError::domain(format!(
                "synthetic corpus of {n} documents is too large"
            )));
        }
        if self.query_count == 0 {
            return Err(BorError::domain("synthetic spec needs at least one query"));
        }
        match &self.relevance {
            RelevanceModel::Constant { r } if *r > n => {
                return Err(BorError::domain(format!("R={r} exceeds N={n}")));
            }
            RelevanceModel::PerClass { sizes } => {
                if sizes.iter().sum::<u64>() != n {
                    return Err(BorError::domain(format!(
                        "class sizes sum to {}, not N={n}",
                        sizes.iter().sum::<u64>()
                    )));
                }
                if self.query_count > n {
                    return Err(BorError::domain("more class queries than documents"));
                }
            }
            _ => {}
        }
        if let RetrieverModel::Noisy { hit_prob } = self.retriever {
            if !(0.0..=1.0).contains(&hit_prob) {
                return Err(BorError::domain(format!("hit_prob {hit_prob} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn doc_id(&self, doc: u64) -> String {
        let width = (self.corpus_size.max(2) - 1).to_string().len();
        format!("d{doc:0width$}")
    }
}

/// Draws one not-yet-taken item; `pool[..taken]` holds the items taken so far.
fn take_random<T: Copy>(rng: &mut StreamRng, pool: &mut [T], taken: &mut usize) -> Option<T> {
    if *taken >= pool.len() {
        return None;
    }
    let j = rng.gen_range(*taken..pool.len());
    pool.swap(*taken, j);
    *taken += 1;
    Some(pool[*taken - 1])
}

struct SyntheticQuery {
    id: String,
    relevant: Vec<u64>,
    ranking: Vec<u64>,
}

fn synthesize_query(spec: &SyntheticSpec, q: u64, max_depth: usize) -> SyntheticQuery {
    let n = spec.corpus_size;
    let mut rng = stream_rng(spec.seed, q);
    let (id, self_doc, mut relevant) = match &spec.relevance {
        RelevanceModel::Constant { r } => {
            let mut all: Vec<u64> = (0..n).collect();
            let mut taken = 0;
            let rel: Vec<u64> = (0..*r)
                .filter_map(|_| take_random(&mut rng, &mut all, &mut taken))
                .collect();
            (format!("q{q}"), None, rel)
        }
        RelevanceModel::PerClass { sizes } => {
            let doc = q * n / spec.query_count;
            let mut start = 0;
            let mut range = 0..0;
            for &s in sizes {
                if doc < start + s {
                    range = start..start + s;
                    break;
                }
                start += s;
            }
            (spec.doc_id(doc), Some(doc), range.filter(|&d| d != doc).collect())
        }
    };
    relevant.sort_unstable();
    let is_relevant = |d: u64| relevant.binary_search(&d).is_ok();
    let mut others: Vec<u64> = (0..n).filter(|&d| Some(d) != self_doc && !is_relevant(d)).collect();
    let mut others_taken = 0;
    let max_depth = max_depth.min(n as usize);

    let ranking = match spec.retriever {
        RetrieverModel::Random => {
            let mut pool: Vec<u64> = (0..n).filter(|&d| Some(d) != self_doc).collect();
            let mut taken = 0;
            (0..max_depth)
                .filter_map(|_| take_random(&mut rng, &mut pool, &mut taken))
                .collect()
        }
        RetrieverModel::Oracle => {
            let mut ranking: Vec<u64> = relevant.iter().copied().take(max_depth).collect();
            while ranking.len() < max_depth {
                match take_random(&mut rng, &mut others, &mut others_taken) {
                    Some(d) => ranking.push(d),
                    None => break,
                }
            }
            ranking
        }
        RetrieverModel::Noisy { hit_prob } => {
            let mut rel_pool = relevant.clone();
            let mut rel_taken = 0;
            let mut ranking = Vec::with_capacity(max_depth);
            while ranking.len() < max_depth {
                let want_hit = rng.gen_bool(hit_prob);
                let pick = if want_hit {
                    take_random(&mut rng, &mut rel_pool, &mut rel_taken)
                        .or_else(|| take_random(&mut rng, &mut others, &mut others_taken))
                } else {
                    take_random(&mut rng, &mut others, &mut others_taken)
                        .or_else(|| take_random(&mut rng, &mut rel_pool, &mut rel_taken))
                };
                match pick {
                    Some(d) => ranking.push(d),
                    None => break,
                }
            }
            ranking
        }
    };
    SyntheticQuery { id, relevant, ranking }
}

/// Builds the judgments and a run of depth `max_depth` for a synthetic spec.
pub fn synthesize(spec: &SyntheticSpec, max_depth: u64) -> Result<(Run, Judgments)> {
    spec.validate()?;
    let queries: Vec<SyntheticQuery> = (0..spec.query_count)
        .into_par_iter()
        .map(|q| synthesize_query(spec, q, max_depth as usize))
        .collect();
    let tag = match spec.retriever {
        RetrieverModel::Random => "random",
        RetrieverModel::Oracle => "oracle",
        RetrieverModel::Noisy { .. } => "noisy",
    };
    let mut run = Run::new(tag);
    let mut judgments = Judgments::new(1);
    for sq in queries {
        let grades: BTreeMap<String, i32> = sq.relevant.iter().map(|&d| (spec.doc_id(d), 1)).collect();
        judgments.entries.insert(sq.id.clone(), grades);
        let len = sq.ranking.len();
        let docs = sq
            .ranking
            .iter()
            .enumerate()
            .map(|(pos, &d)| ScoredDoc {
                doc_id: spec.doc_id(d),
                score: (len - pos) as f64,
            })
            .collect();
        run.insert(sq.id, docs)?;
    }
    Ok((run, judgments))
}

/// Synthesizes a dataset and evaluates it at each depth.
pub fn simulate_sweep(spec: &SyntheticSpec, depths: &[u64], rule: SuccessRule, options: &EvalOptions) -> Result<Sweep> {
    let max_depth = depths
        .iter()
        .copied()
        .max()
        .ok_or_else(|| BorError::domain("empty depth list"))?;
    let (run, judgments) = synthesize(spec, max_depth)?;
    depth_sweep(&run, &judgments, spec.corpus_size, depths, rule, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub k: u64,
    pub lambda: f64,
    pub exact_ceiling_bits: f64,
    pub poisson_ceiling_bits: f64,
    pub zone: Zone,
}

/// Ceilings and zone along an ascending grid of depths.
pub fn boundary_map(corpus_size: u64, mean_relevant: f64, k_grid: &[u64]) -> Result<Vec<BoundaryRow>> {
    if k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BorError::domain("K grid must be strictly ascending"));
    }
    k_grid
        .iter()
        .map(|&k| {
            let d = diagnose(corpus_size, mean_relevant, k)?;
            Ok(BoundaryRow {
                k,
                lambda: d.lambda,
                exact_ceiling_bits: d.exact_ceiling_bits,
                poisson_ceiling_bits: d.poisson_ceiling_bits,
                zone: d.zone,
            })
        })
        .collect()
}

/// Roughly geometric grid from 1 to `max_k`, at most `points` distinct values.
pub fn log_grid(max_k: u64, points: usize) -> Vec<u64> {
    if max_k == 0 || points == 0 {
        return Vec::new();
    }
    let steps = points.max(2) - 1;
    let mut grid: Vec<u64> = (0..=steps)
        .map(|i| ((max_k as f64).powf(i as f64 / steps as f64)).round() as u64)
        .map(|k| k.clamp(1, max_k))
        .collect();
    grid.dedup();
    grid
}
