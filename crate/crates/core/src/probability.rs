//! Random-baseline probabilities for "at least `m` relevant among `K` uniform
//! draws without replacement from `N` items, `R` of which are relevant".
//!
//! Every probability is carried as a [`Probability`]: the value together with
//! the natural log of its complement. Baselines near 0 (huge corpora) keep
//! their relative precision through `value`; baselines near 1 (the collapse
//! zone) keep theirs through `log_complement`.

use serde::{Deserialize, Serialize};

use crate::error::{BorError, Result};
use crate::numeric::CompensatedSum;

/// Above this many factors the miss-all product switches to log-gamma.
const PRODUCT_TERMS_LIMIT: u64 = 100_000;

/// Below this many factors `log_choose` sums logs directly.
const SMALL_CHOOSE: u64 = 64;

/// Parameters of one random-baseline computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaselineParams {
    /// N: number of retrievable units.
    pub corpus_size: u64,
    /// R: relevant units for the query.
    pub relevant: u64,
    /// K: retrieval depth.
    pub depth: u64,
    /// m: minimum relevant hits for success.
    pub min_hits: u64,
}

impl BaselineParams {
    /// Coverage parameters (`m = 1`), validated.
    pub fn new(corpus_size: u64, relevant: u64, depth: u64) -> Result<Self> {
        Self::with_min_hits(corpus_size, relevant, depth, 1)
    }

    pub fn with_min_hits(corpus_size: u64, relevant: u64, depth: u64, min_hits: u64) -> Result<Self> {
        let p = Self {
            corpus_size,
            relevant,
            depth,
            min_hits,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_size == 0 {
            return Err(BorError::domain("corpus size N must be positive"));
        }
        if self.relevant > self.corpus_size {
            return Err(BorError::domain(format!(
                "relevant count R={} exceeds corpus size N={}",
                self.relevant, self.corpus_size
            )));
        }
        if self.depth == 0 || self.depth > self.corpus_size {
            return Err(BorError::domain(format!(
                "depth K={} must satisfy 1 <= K <= N={}",
                self.depth, self.corpus_size
            )));
        }
        if self.min_hits == 0 {
            return Err(BorError::domain("min_hits m must be at least 1"));
        }
        Ok(())
    }

    /// Expected number of relevant hits, K·R/N.
    pub fn expected_hits(&self) -> f64 {
        self.depth as f64 * self.relevant as f64 / self.corpus_size as f64
    }
}

/// A probability with its log-complement retained.
///
/// Invariant: `value` in [0, 1] and `exp(log_complement) == 1 - value` up to
/// rounding. `log_complement` is `-inf` for certainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    value: f64,
    #[serde(with = "crate::probability::nonfinite")]
    log_complement: f64,
}

impl Probability {
    pub const ZERO: Probability = Probability {
        value: 0.0,
        log_complement: 0.0,
    };
    pub const ONE: Probability = Probability {
        value: 1.0,
        log_complement: f64::NEG_INFINITY,
    };

    /// Builds from a plain value. Precision near 1 is whatever `value` carries.
    pub fn from_value(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(BorError::domain(format!("probability {value} outside [0, 1]")));
        }
        Ok(Self {
            value,
            log_complement: (-value).ln_1p(),
        })
    }

    /// Builds from `ln(1 - p)`, the precise route for probabilities near 1.
    pub fn from_log_complement(log_complement: f64) -> Result<Self> {
        if log_complement.is_nan() || log_complement > 0.0 {
            return Err(BorError::domain(format!(
                "log-complement {log_complement} must be <= 0"
            )));
        }
        Ok(Self {
            value: -log_complement.exp_m1(),
            log_complement,
        })
    }

    /// Builds from both parts, e.g. after averaging them separately.
    pub(crate) fn from_parts(value: f64, complement: f64) -> Self {
        let value = value.clamp(0.0, 1.0);
        let complement = complement.clamp(0.0, 1.0);
        Self {
            value,
            log_complement: complement.ln(),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn log_complement(&self) -> f64 {
        self.log_complement
    }

    /// 1 − p, taken from whichever side is precise.
    pub fn complement(&self) -> f64 {
        if self.value > 0.5 {
            self.log_complement.exp()
        } else {
            1.0 - self.value
        }
    }

    /// −log2(p): the ceiling in bits when this is a mean baseline.
    pub fn neg_log2(&self) -> f64 {
        if self.value > 0.5 {
            // -log2(1 - q) with q = complement
            -(-self.complement()).ln_1p() / std::f64::consts::LN_2
        } else {
            -self.value.log2()
        }
    }
}

/// ln C(n, k) via direct log sums for small `min(k, n-k)` and a Stirling
/// expansion otherwise. Relative error is a few ulps over the whole u64
/// range that fits in an f64 mantissa.
pub fn log_choose(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(BorError::domain(format!("log_choose: k={k} exceeds n={n}")));
    }
    let k = k.min(n - k);
    if k == 0 {
        return Ok(0.0);
    }
    if k <= SMALL_CHOOSE {
        let sum: CompensatedSum = (0..k).map(|j| ((n - j) as f64 / (j + 1) as f64).ln()).collect();
        return Ok(sum.total());
    }
    // ln n! - ln a! - ln b! with a = k <= b = n - k; the -x terms cancel and
    // n ln n - a ln a - b ln b = a ln(n/a) - b ln(1 - a/n), both non-negative.
    let (nf, a, b) = (n as f64, k as f64, (n - k) as f64);
    let main = a * (nf / a).ln() - b * (-(a / nf)).ln_1p();
    let half_log = 0.5 * (nf / (2.0 * std::f64::consts::PI * a * b)).ln();
    Ok(main + half_log + stirling_correction(nf) - stirling_correction(a) - stirling_correction(b))
}

/// ln n! for any n; exact log sums below the Stirling cutover.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= SMALL_CHOOSE {
        let sum: CompensatedSum = (2..=n).map(|j| (j as f64).ln()).collect();
        return sum.total();
    }
    let x = n as f64;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + stirling_correction(x)
}

/// ln x! − [x ln x − x + ½ ln(2πx)], valid for x > 64.
fn stirling_correction(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// ln P(no relevant item in K draws) = ln[C(N−R, K) / C(N, K)].
///
/// The ratio equals Π_{i<K}(1 − R/(N−i)) and, by symmetry, Π_{j<R}(1 − K/(N−j)),
/// so the shorter product is summed as `ln_1p` terms. Past
/// `PRODUCT_TERMS_LIMIT` factors it falls back to log-gamma.
fn log_miss_all(n: u64, r: u64, k: u64) -> Result<f64> {
    let (draws, fixed) = if k <= r { (k, r) } else { (r, k) };
    if draws <= PRODUCT_TERMS_LIMIT {
        let sum: CompensatedSum = (0..draws).map(|i| (-(fixed as f64 / (n - i) as f64)).ln_1p()).collect();
        Ok(sum.total())
    } else {
        Ok(log_choose(n - r, k)? - log_choose(n, k)?)
    }
}

/// Exact coverage baseline P(≥1 relevant in top-K at random).
pub fn p_rand_coverage(params: &BaselineParams) -> Result<Probability> {
    params.validate()?;
    if params.min_hits != 1 {
        return Err(BorError::domain(format!(
            "coverage baseline requires m = 1, got m = {}",
            params.min_hits
        )));
    }
    coverage_unchecked(params.corpus_size, params.relevant, params.depth)
}

fn coverage_unchecked(n: u64, r: u64, k: u64) -> Result<Probability> {
    if r == 0 {
        return Ok(Probability::ZERO);
    }
    if k > n - r {
        return Ok(Probability::ONE);
    }
    Probability::from_log_complement(log_miss_all(n, r, k)?)
}

/// Hypergeometric survival P(X ≥ m).
///
/// Sums whichever tail is the smaller side of the distribution so the
/// result keeps relative precision in both the rare-hit and saturated regimes.
pub fn p_rand_at_least_m(params: &BaselineParams) -> Result<Probability> {
    params.validate()?;
    let BaselineParams {
        corpus_size: n,
        relevant: r,
        depth: k,
        min_hits: m,
    } = *params;
    if m == 1 {
        return coverage_unchecked(n, r, k);
    }
    let hi = r.min(k);
    if m > hi {
        return Ok(Probability::ZERO);
    }
    let lo = k.saturating_sub(n - r);
    if m <= lo {
        return Ok(Probability::ONE);
    }

    let log_total = log_choose(n, k)?;
    let log_pmf = |i: u64| -> Result<f64> { Ok(log_choose(r, i)? + log_choose(n - r, k - i)? - log_total) };
    let mean = params.expected_hits();

    if m as f64 > mean {
        let mut upper = CompensatedSum::new();
        for i in m..=hi {
            let term = log_pmf(i)?.exp();
            upper.add(term);
            if i as f64 > mean && term <= upper.total() * 1e-18 {
                break;
            }
        }
        let u = upper.total().clamp(0.0, 1.0);
        Probability::from_value(u)
    } else {
        let lower: CompensatedSum = (lo..m)
            .map(|i| log_pmf(i).map(f64::exp))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .collect();
        let l = lower.total().clamp(0.0, 1.0);
        Probability::from_log_complement(l.ln())
    }
}

/// Expected random hits λ = K·R̄/N.
pub fn lambda_rate(corpus_size: u64, mean_relevant: f64, depth: u64) -> Result<f64> {
    if corpus_size == 0 || depth == 0 {
        return Err(BorError::domain("lambda requires positive N and K"));
    }
    if !(mean_relevant.is_finite() && mean_relevant > 0.0) {
        return Err(BorError::domain(format!(
            "lambda requires a positive mean relevant count, got {mean_relevant}"
        )));
    }
    Ok(depth as f64 * mean_relevant / corpus_size as f64)
}

/// Poisson survival P(X ≥ m) for X ~ Poisson(λ).
pub fn p_rand_poisson(lambda: f64, min_hits: u64) -> Result<Probability> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(BorError::domain(format!("Poisson rate {lambda} must be >= 0")));
    }
    if min_hits == 0 {
        return Err(BorError::domain("min_hits m must be at least 1"));
    }
    if lambda == 0.0 {
        return Ok(Probability::ZERO);
    }
    if min_hits == 1 {
        return Probability::from_log_complement(-lambda);
    }
    let ln_lambda = lambda.ln();
    let log_term = |i: u64| -lambda + i as f64 * ln_lambda - ln_factorial(i);
    if min_hits as f64 > lambda {
        let mut upper = CompensatedSum::new();
        let mut i = min_hits;
        loop {
            let term = log_term(i).exp();
            upper.add(term);
            if term <= upper.total() * 1e-18 || term == 0.0 {
                break;
            }
            i += 1;
        }
        let u = upper.total().clamp(0.0, 1.0);
        Probability::from_value(u)
    } else {
        let lower: CompensatedSum = (0..min_hits).map(|i| log_term(i).exp()).collect();
        Probability::from_log_complement(lower.total().clamp(0.0, 1.0).ln())
    }
}

/// Independent-draw approximation 1 − (1 − R/N)^K.
pub fn p_rand_binomial(params: &BaselineParams) -> Result<Probability> {
    params.validate()?;
    if params.min_hits != 1 {
        return Err(BorError::domain("binomial approximation is defined for m = 1"));
    }
    if params.relevant == 0 {
        return Ok(Probability::ZERO);
    }
    let q = params.relevant as f64 / params.corpus_size as f64;
    Probability::from_log_complement(params.depth as f64 * (-q).ln_1p())
}

/// Miss-all probability as a plain iterative product, for N ≤ 10⁴.
///
/// Used as a cross-check on the log-space routes; `None` above the size cap.
pub fn coverage_miss_product(params: &BaselineParams) -> Option<f64> {
    if params.corpus_size > 10_000 || params.validate().is_err() {
        return None;
    }
    let (n, r, k) = (params.corpus_size, params.relevant, params.depth);
    if k > n - r {
        return Some(0.0);
    }
    Some((0..k).fold(1.0, |acc, i| acc * (n - r - i) as f64 / (n - i) as f64))
}

pub(crate) mod nonfinite {
    //! f64 fields that may be ±inf serialize as JSON strings.
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            Repr::Num(*x).serialize(s)
        } else if x.is_nan() {
            Repr::Text("NaN".into()).serialize(s)
        } else if *x > 0.0 {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Text("-inf".into()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}
