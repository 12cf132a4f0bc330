//! BoR, enrichment factor, selectivity ceilings and the depth decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{BorError, Result};
use crate::numeric::{mean, CompensatedSum};
use crate::probability::Probability;

/// Selectivity in bits.
///
/// `defined` is false when the ratio has no finite value: zero observed
/// success (`bits = -inf`) or a zero baseline with positive success
/// (`bits = +inf`, which signals a query with no relevant items slipped in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorValue {
    #[serde(with = "crate::probability::nonfinite")]
    pub bits: f64,
    pub defined: bool,
}

impl BorValue {
    pub fn new(bits: f64) -> Self {
        Self {
            bits,
            defined: bits.is_finite(),
        }
    }

    pub fn no_success() -> Self {
        Self {
            bits: f64::NEG_INFINITY,
            defined: false,
        }
    }

    pub fn zero_baseline() -> Self {
        Self {
            bits: f64::INFINITY,
            defined: false,
        }
    }

    pub fn get(&self) -> Option<f64> {
        self.defined.then_some(self.bits)
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(BorError::domain(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// BoR = log2(p_obs / p_rand).
///
/// The baseline contributes through [`Probability::neg_log2`], so a baseline
/// near 1 is read from its log-complement and `bor(1.0, p)` is exactly the
/// ceiling `-log2(p)`.
pub fn bor(p_obs: f64, p_rand: &Probability) -> Result<BorValue> {
    check_unit("observed success", p_obs)?;
    if p_obs == 0.0 {
        return Ok(BorValue::no_success());
    }
    if p_rand.value() == 0.0 {
        return Ok(BorValue::zero_baseline());
    }
    Ok(BorValue::new(p_obs.log2() + p_rand.neg_log2()))
}

/// EF = p_obs / p_rand; `None` when the baseline is zero.
pub fn enrichment_factor(p_obs: f64, p_rand: &Probability) -> Result<Option<f64>> {
    check_unit("observed success", p_obs)?;
    if p_rand.value() == 0.0 {
        return Ok(None);
    }
    Ok(Some(p_obs / p_rand.value()))
}

/// Substitute for zero observed success: 1 / (2·|Q|).
pub fn smoothed_p_obs(p_obs: f64, query_count: usize) -> f64 {
    if p_obs == 0.0 && query_count > 0 {
        1.0 / (2.0 * query_count as f64)
    } else {
        p_obs
    }
}

/// Optimistic ceiling log2(N/K), i.e. every query has exactly one relevant item.
pub fn bor_opt(corpus_size: u64, depth: u64) -> Result<f64> {
    if corpus_size == 0 || depth == 0 || depth > corpus_size {
        return Err(BorError::domain(format!(
            "bor_opt needs 1 <= K <= N, got K={depth}, N={corpus_size}"
        )));
    }
    Ok((corpus_size as f64 / depth as f64).log2())
}

/// Macro mean of baselines, averaging values and complements separately so
/// that a mean near 1 keeps its complement.
pub fn mean_probability(baselines: &[Probability]) -> Option<Probability> {
    let value = mean(baselines.iter().map(Probability::value))?;
    let complement = mean(baselines.iter().map(Probability::complement))?;
    Some(Probability::from_parts(value, complement))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CeilingReport {
    /// −log2 of the mean baseline.
    pub bor_max_log_of_mean: f64,
    /// Mean over queries of −log2 of each baseline (headline convention).
    pub bor_max_mean_of_logs: f64,
    /// log2(N/K).
    pub bor_opt: f64,
}

/// Both macro-averaged ceilings plus the optimistic bound.
pub fn ceilings(per_query: &[Probability], corpus_size: u64, depth: u64) -> Result<CeilingReport> {
    if per_query.is_empty() {
        return Err(BorError::domain("ceilings need at least one query baseline"));
    }
    if let Some(bad) = per_query.iter().find(|p| p.value() <= 0.0) {
        return Err(BorError::domain(format!(
            "ceiling baselines must be in (0, 1], got {}",
            bad.value()
        )));
    }
    let mean_baseline = mean_probability(per_query).expect("non-empty");
    let logs: CompensatedSum = per_query.iter().map(Probability::neg_log2).collect();
    Ok(CeilingReport {
        bor_max_log_of_mean: mean_baseline.neg_log2(),
        bor_max_mean_of_logs: logs.total() / per_query.len() as f64,
        bor_opt: bor_opt(corpus_size, depth)?,
    })
}

/// BoR change between two depths, split into success gain and baseline growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthDelta {
    pub k1: u64,
    pub k2: u64,
    /// log2(P2 / P1).
    #[serde(with = "crate::probability::nonfinite")]
    pub gain_term: f64,
    /// log2(P̄rand(K2) / P̄rand(K1)).
    pub baseline_term: f64,
    /// gain_term − baseline_term.
    #[serde(with = "crate::probability::nonfinite")]
    pub total: f64,
    /// −m·log2(K2/K1), the plateau prediction in the rare-hit regime.
    pub predicted_plateau: f64,
    /// False when P1 or P2 is zero and the gain term is not finite.
    pub defined: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn depth_delta(
    p1: f64,
    p2: f64,
    pbar1: &Probability,
    pbar2: &Probability,
    k1: u64,
    k2: u64,
    min_hits: u64,
) -> Result<DepthDelta> {
    check_unit("P1", p1)?;
    check_unit("P2", p2)?;
    if k1 == 0 || k1 >= k2 {
        return Err(BorError::domain(format!(
            "depth delta needs 1 <= K1 < K2, got {k1}, {k2}"
        )));
    }
    if min_hits == 0 {
        return Err(BorError::domain("min_hits m must be at least 1"));
    }
    if pbar1.value() == 0.0 || pbar2.value() == 0.0 {
        return Err(BorError::domain("depth delta needs non-zero baselines"));
    }
    let gain_term = p2.log2() - p1.log2();
    // log2(pbar2/pbar1) = (−log2 pbar1) − (−log2 pbar2)
    let baseline_term = pbar1.neg_log2() - pbar2.neg_log2();
    let total = gain_term - baseline_term;
    Ok(DepthDelta {
        k1,
        k2,
        gain_term,
        baseline_term,
        total,
        predicted_plateau: -(min_hits as f64) * (k2 as f64 / k1 as f64).log2(),
        defined: gain_term.is_finite(),
    })
}

/// Recall-rule BoR: log2(recall / (K/N)).
///
/// Under uniform sampling without replacement each relevant item lands in the
/// top-K with probability exactly K/N, so the baseline here is exact.
pub fn bor_recall(observed_recall: f64, corpus_size: u64, depth: u64) -> Result<BorValue> {
    check_unit("observed recall", observed_recall)?;
    let opt = bor_opt(corpus_size, depth)?;
    if observed_recall == 0.0 {
        return Ok(BorValue::no_success());
    }
    Ok(BorValue::new(observed_recall.log2() + opt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{p_rand_at_least_m, p_rand_coverage, BaselineParams};
    use proptest::prelude::*;

    fn prob(x: f64) -> Probability {
        Probability::from_value(x).unwrap()
    }

    #[test]
    fn bor_examples() {
        let librarian = p_rand_coverage(&BaselineParams::new(1000, 10, 20).unwrap()).unwrap();
        assert!((bor(1.0, &librarian).unwrap().bits - 2.45).abs() < 0.01);
        assert_eq!(bor(0.3, &prob(0.3)).unwrap().bits, 0.0);
        let marco = prob(1000.0 / 8_841_823.0);
        assert!((bor(0.857, &marco).unwrap().bits - 12.89).abs() < 0.005);
    }

    #[test]
    fn bor_sentinels() {
        let none = bor(0.0, &prob(0.2)).unwrap();
        assert!(!none.defined && none.bits == f64::NEG_INFINITY);
        let zero_base = bor(0.5, &Probability::ZERO).unwrap();
        assert!(!zero_base.defined && zero_base.get().is_none());
        assert!(bor(1.2, &prob(0.2)).is_err());
    }

    #[test]
    fn enrichment_examples() {
        let ef = enrichment_factor(1.0, &prob(0.125)).unwrap().unwrap();
        assert_eq!(ef, 8.0);
        assert_eq!(bor(1.0, &prob(0.125)).unwrap().bits, 3.0);
        assert_eq!(enrichment_factor(0.4, &prob(0.4)).unwrap(), Some(1.0));
        assert_eq!(enrichment_factor(0.5, &prob(0.25)).unwrap(), Some(2.0));
        assert_eq!(enrichment_factor(0.5, &Probability::ZERO).unwrap(), None);
    }

    #[test]
    fn bor_opt_examples() {
        assert!((bor_opt(8_841_823, 1000).unwrap() - 13.11).abs() < 0.005);
        assert_eq!(bor_opt(77, 77).unwrap(), 0.0);
        assert_eq!(bor_opt(1024, 1).unwrap(), 10.0);
        assert!(bor_opt(10, 11).is_err());
    }

    #[test]
    fn ceilings_single_query_conventions_match() {
        let p = p_rand_coverage(&BaselineParams::new(1000, 10, 20).unwrap()).unwrap();
        let c = ceilings(&[p], 1000, 20).unwrap();
        assert_eq!(c.bor_max_log_of_mean, c.bor_max_mean_of_logs);
        assert!(ceilings(&[], 1000, 20).is_err());
        assert!(ceilings(&[Probability::ZERO], 1000, 20).is_err());
    }

    #[test]
    fn ceilings_with_equal_rq_agree() {
        let p = p_rand_coverage(&BaselineParams::new(5000, 7, 40).unwrap()).unwrap();
        let c = ceilings(&vec![p; 333], 5000, 40).unwrap();
        assert!((c.bor_max_log_of_mean - c.bor_max_mean_of_logs).abs() < 1e-9);
        assert!(c.bor_opt >= c.bor_max_log_of_mean);
    }

    #[test]
    fn ceiling_near_one_uses_complement() {
        // both baselines round to 1.0 in value; complements differ
        let a = Probability::from_log_complement(-60.0).unwrap();
        let b = Probability::from_log_complement(-50.0).unwrap();
        let c = ceilings(&[a, b], 1000, 500).unwrap();
        let want = ((-60f64).exp() + (-50f64).exp()) / 2.0 / std::f64::consts::LN_2;
        assert!(((c.bor_max_log_of_mean - want) / want).abs() < 1e-12);
    }

    #[test]
    fn depth_delta_examples() {
        // baselines chosen so that the two BoR values are 8.53 and 5.41 bits
        let pbar1 = prob(0.81 / 2f64.powf(8.53));
        let pbar2 = prob(0.93 / 2f64.powf(5.41));
        let d = depth_delta(0.81, 0.93, &pbar1, &pbar2, 10, 100, 1).unwrap();
        assert!((d.total - (-3.12)).abs() < 1e-9);

        let d = depth_delta(0.6, 0.6, &prob(0.01), &prob(0.02), 10, 20, 1).unwrap();
        assert!((d.total - (-1.0)).abs() < 1e-15);
        assert_eq!(d.predicted_plateau, -1.0);

        let d = depth_delta(0.6, 0.6, &prob(0.01), &prob(0.01), 10, 20, 1).unwrap();
        assert_eq!(d.total, 0.0);
        assert!(depth_delta(0.6, 0.6, &prob(0.01), &prob(0.01), 10, 10, 1).is_err());

        let undefined = depth_delta(0.0, 0.5, &prob(0.01), &prob(0.02), 10, 20, 1).unwrap();
        assert!(!undefined.defined);
    }

    #[test]
    fn bor_recall_examples() {
        assert!((bor_recall(0.4, 1000, 20).unwrap().bits - 20f64.log2()).abs() < 1e-12);
        assert!((bor_recall(0.4, 1000, 20).unwrap().bits - 4.32).abs() < 0.005);
        assert!(bor_recall(20.0 / 1000.0, 1000, 20).unwrap().bits.abs() < 1e-12);
        assert!((bor_recall(0.979, 8_841_823, 1000).unwrap().bits - 13.08).abs() < 0.005);
        assert!(!bor_recall(0.0, 1000, 20).unwrap().defined);
    }

    #[test]
    fn ceiling_attainment_is_exact() {
        for &(n, r, k) in &[(1000u64, 10u64, 20u64), (58, 4, 20), (11_314, 565, 100)] {
            let p = p_rand_coverage(&BaselineParams::new(n, r, k).unwrap()).unwrap();
            assert_eq!(bor(1.0, &p).unwrap().bits, p.neg_log2());
        }
    }

    proptest! {
        #[test]
        fn identity_closure(
            p1 in 0.01f64..1.0, p2 in 0.01f64..1.0,
            b1 in 1e-6f64..1.0, b2 in 1e-6f64..1.0,
            k1 in 1u64..1000, dk in 1u64..1000,
        ) {
            let (pb1, pb2) = (prob(b1), prob(b2));
            let d = depth_delta(p1, p2, &pb1, &pb2, k1, k1 + dk, 1).unwrap();
            let direct = bor(p2, &pb2).unwrap().bits - bor(p1, &pb1).unwrap().bits;
            prop_assert!((d.total - direct).abs() <= 1e-12);
            prop_assert_eq!(d.total, d.gain_term - d.baseline_term);
        }

        #[test]
        fn additivity_of_enrichment(a in 0.01f64..1.0, x in 0.01f64..1.0, y in 0.01f64..1.0) {
            // EF1 = a/x, EF2 = 1/y; composed EF = a/(x·y)
            let composed = bor(a, &prob(x * y)).unwrap().bits;
            let parts = bor(a, &prob(x)).unwrap().bits + bor(1.0, &prob(y)).unwrap().bits;
            prop_assert!((composed - parts).abs() <= 1e-12 * composed.abs().max(1.0));
        }

        #[test]
        fn plateau_limit_in_linear_regime(
            n in 20_000u64..2_000_000,
            r in 1u64..=2,
            k1 in 1u64..50,
            ratio in 2u64..20,
        ) {
            let k2 = k1 * ratio;
            prop_assume!(k2 as f64 * r as f64 / n as f64 <= 0.05);
            let b1 = p_rand_coverage(&BaselineParams::new(n, r, k1).unwrap()).unwrap();
            let b2 = p_rand_coverage(&BaselineParams::new(n, r, k2).unwrap()).unwrap();
            let d = depth_delta(0.7, 0.7, &b1, &b2, k1, k2, 1).unwrap();
            prop_assert!((d.total - d.predicted_plateau).abs() <= 0.02,
                "total {} plateau {}", d.total, d.predicted_plateau);
        }

        #[test]
        fn two_hit_plateau_costs_two_bits_per_doubling(
            n in 1_000_000u64..20_000_000,
            r in 2u64..6,
            k1 in 200u64..2000,
        ) {
            // P(X ≥ 2) ∝ K(K−1): the K² law needs K large
            let k2 = 2 * k1;
            prop_assume!(k2 as f64 * r as f64 / n as f64 <= 0.05);
            let b1 = p_rand_at_least_m(&BaselineParams::with_min_hits(n, r, k1, 2).unwrap()).unwrap();
            let b2 = p_rand_at_least_m(&BaselineParams::with_min_hits(n, r, k2, 2).unwrap()).unwrap();
            let d = depth_delta(0.7, 0.7, &b1, &b2, k1, k2, 2).unwrap();
            prop_assert!((d.predicted_plateau + 2.0).abs() < 1e-15);
            prop_assert!((d.total - d.predicted_plateau).abs() <= 0.02,
                "total {} plateau {}", d.total, d.predicted_plateau);
        }

        #[test]
        fn ceiling_ordering(n in 100u64..100_000, k_frac in 0.0f64..0.5, rs in proptest::collection::vec(1u64..50, 1..20)) {
            let k = ((n as f64 * k_frac) as u64).max(1);
            let baselines: Vec<_> = rs.iter()
                .map(|&r| p_rand_coverage(&BaselineParams::new(n, r.min(n), k).unwrap()).unwrap())
                .collect();
            let c = ceilings(&baselines, n, k).unwrap();
            prop_assert!(c.bor_opt >= c.bor_max_log_of_mean - 1e-12);
            prop_assert!(c.bor_max_log_of_mean >= 0.0 && c.bor_max_mean_of_logs >= 0.0);
            // Jensen: mean of −log ≥ −log of mean
            prop_assert!(c.bor_max_mean_of_logs >= c.bor_max_log_of_mean - 1e-12);
        }
    }
}
