//! Collapse-zone diagnostics and depth recommendations.

use serde::{Deserialize, Serialize};

use crate::error::{BorError, Result};
use crate::probability::{lambda_rate, p_rand_coverage, p_rand_poisson, BaselineParams};

/// Zone boundaries on λ = K·R̄/N.
pub const DEGRADED_LAMBDA: f64 = 1.0;
pub const COLLAPSE_LAMBDA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Healthy,
    Degraded,
    Collapse,
}

impl Zone {
    pub fn from_lambda(lambda: f64) -> Self {
        if lambda < DEGRADED_LAMBDA {
            Zone::Healthy
        } else if lambda < COLLAPSE_LAMBDA {
            Zone::Degraded
        } else {
            Zone::Collapse
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Healthy => "healthy",
            Zone::Degraded => "degraded",
            Zone::Collapse => "collapse",
        }
    }
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a fractional R̄ was turned into integer hypergeometric parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelevantCount {
    Exact {
        r: u64,
    },
    /// Ceiling interpolated linearly in bits between `lower` and `upper`.
    Interpolated {
        lower: u64,
        upper: u64,
        weight: f64,
    },
    /// R̄ below one, evaluated at R = 1.
    ClampedToOne {
        requested: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseDiagnostic {
    pub corpus_size: u64,
    pub mean_relevant: f64,
    pub depth: u64,
    pub lambda: f64,
    pub exact_ceiling_bits: f64,
    pub poisson_ceiling_bits: f64,
    pub zone: Zone,
    pub relevant_count: RelevantCount,
}

fn ceiling_at(corpus_size: u64, r: u64, depth: u64) -> Result<f64> {
    Ok(p_rand_coverage(&BaselineParams::new(corpus_size, r, depth)?)?.neg_log2())
}

/// Exact single-query ceiling −log2 p_rand for a possibly fractional R̄.
pub fn exact_ceiling(corpus_size: u64, mean_relevant: f64, depth: u64) -> Result<(f64, RelevantCount)> {
    if !(mean_relevant > 0.0 && mean_relevant.is_finite()) {
        return Err(BorError::domain(format!(
            "mean relevant count must be positive, got {mean_relevant}"
        )));
    }
    if mean_relevant > corpus_size as f64 {
        return Err(BorError::domain(format!(
            "mean relevant count {mean_relevant} exceeds corpus size {corpus_size}"
        )));
    }
    if mean_relevant < 1.0 {
        return Ok((
            ceiling_at(corpus_size, 1, depth)?,
            RelevantCount::ClampedToOne {
                requested: mean_relevant,
            },
        ));
    }
    let lower = mean_relevant.floor() as u64;
    let weight = mean_relevant - lower as f64;
    if weight == 0.0 {
        return Ok((
            ceiling_at(corpus_size, lower, depth)?,
            RelevantCount::Exact { r: lower },
        ));
    }
    let upper = lower + 1;
    let bits =
        (1.0 - weight) * ceiling_at(corpus_size, lower, depth)? + weight * ceiling_at(corpus_size, upper, depth)?;
    Ok((bits, RelevantCount::Interpolated { lower, upper, weight }))
}

pub fn diagnose(corpus_size: u64, mean_relevant: f64, depth: u64) -> Result<CollapseDiagnostic> {
    if depth == 0 || depth > corpus_size {
        return Err(BorError::domain(format!(
            "depth K={depth} must satisfy 1 <= K <= N={corpus_size}"
        )));
    }
    let lambda = lambda_rate(corpus_size, mean_relevant, depth)?;
    let (exact_ceiling_bits, relevant_count) = exact_ceiling(corpus_size, mean_relevant, depth)?;
    Ok(CollapseDiagnostic {
        corpus_size,
        mean_relevant,
        depth,
        lambda,
        exact_ceiling_bits,
        poisson_ceiling_bits: p_rand_poisson(lambda, 1)?.neg_log2(),
        zone: Zone::from_lambda(lambda),
        relevant_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// Largest K whose exact ceiling is at least `min_bits`; 0 when saturated.
    pub depth: u64,
    pub saturated: bool,
    pub min_bits: f64,
    /// Diagnostic at `depth`, or at K = 1 when saturated.
    pub diagnostic: CollapseDiagnostic,
}

/// Bisection over the non-increasing exact ceiling.
pub fn recommend_k(corpus_size: u64, mean_relevant: f64, min_bits: f64) -> Result<Recommendation> {
    if !(min_bits > 0.0 && min_bits.is_finite()) {
        return Err(BorError::domain(format!("min_bits must be positive, got {min_bits}")));
    }
    let bits = |k: u64| exact_ceiling(corpus_size, mean_relevant, k).map(|c| c.0);
    if bits(1)? < min_bits {
        return Ok(Recommendation {
            depth: 0,
            saturated: true,
            min_bits,
            diagnostic: diagnose(corpus_size, mean_relevant, 1)?,
        });
    }
    // invariant: bits(lo) >= min_bits, and bits(hi) < min_bits unless hi = N
    let (mut lo, mut hi) = (1u64, corpus_size);
    if bits(hi)? >= min_bits {
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bits(mid)? >= min_bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Recommendation {
        depth: lo,
        saturated: false,
        min_bits,
        diagnostic: diagnose(corpus_size, mean_relevant, lo)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub n: u64,
    pub mean_relevant: f64,
    pub k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRow {
    pub scenario: Scenario,
    pub diagnostic: Option<CollapseDiagnostic>,
    pub error: Option<String>,
}

/// One row per scenario; a failing row records its error and leaves the others intact.
pub fn catalog_report(scenarios: &[Scenario]) -> Vec<CatalogRow> {
    scenarios
        .iter()
        .map(|s| match diagnose(s.n, s.mean_relevant, s.k) {
            Ok(d) => CatalogRow {
                scenario: s.clone(),
                diagnostic: Some(d),
                error: None,
            },
            Err(e) => CatalogRow {
                scenario: s.clone(),
                diagnostic: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}
