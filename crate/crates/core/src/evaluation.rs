//! Drives an emitter against a dataset with a known ground truth, recording
//! the recall curve and the area-under-curve progressiveness metrics.
//!
//! Initialization time is the wall-clock time to the first emission,
//! including every pre-processing step. From the second emission on, pull
//! time accumulates separately from match-function time, since emission is
//! typically orders of magnitude cheaper than matching.

use std::collections::HashSet;
use std::io::Write;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::emit::{EmitError, ProgressiveEmitter};
use crate::matching::{oracle_match, Matcher};
use crate::model::{Comparison, GroundTruth, ProfileCollection, ProfileId};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("the ground truth is empty")]
    EmptyGroundTruth,
    #[error("budget must be positive, got {0}")]
    InvalidBudget(f64),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// How many comparisons to pull, expressed against the ground-truth size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Unlimited,
    /// Stop after `ceil(max_ec_star * |ground truth|)` emissions.
    MaxEcStar(f64),
}

impl Budget {
    pub fn max_ec_star(value: f64) -> Result<Self, EvalError> {
        if value > 0.0 {
            Ok(Budget::MaxEcStar(value))
        } else {
            Err(EvalError::InvalidBudget(value))
        }
    }

    fn emission_limit(&self, ground_truth_size: usize) -> usize {
        match self {
            Budget::Unlimited => usize::MAX,
            Budget::MaxEcStar(star) => (star * ground_truth_size as f64).ceil() as usize,
        }
    }
}

/// One emission as recorded by the harness. `is_match` flags first-time
/// matches only: every emission counts toward the comparison budget, but a
/// pair never counts twice toward recall.
#[derive(Debug, Clone, Copy)]
pub struct EmissionRecord {
    /// 1-based emission index.
    pub k: usize,
    pub comparison: Comparison,
    pub is_match: bool,
    pub cumulative_matches: usize,
    pub cumulative_match_time: Duration,
    pub cumulative_emit_time: Duration,
}

#[derive(Debug, Clone)]
pub struct RecallCurve {
    pub records: Vec<EmissionRecord>,
    pub ground_truth_size: usize,
    /// Time to the first emission, pre-processing included.
    pub init_time: Duration,
}

impl RecallCurve {
    pub fn final_recall(&self) -> f64 {
        self.records
            .last()
            .map_or(0.0, |r| r.cumulative_matches as f64 / self.ground_truth_size as f64)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Pulls emissions from a freshly built emitter until the budget or
/// exhaustion. The builder runs inside the timed region so that
/// initialization cost lands in `init_time`.
pub fn run_experiment<F>(
    collection: &ProfileCollection,
    build: F,
    gt: &GroundTruth,
    matcher: Matcher,
    budget: Budget,
) -> Result<RecallCurve, EvalError>
where
    F: FnOnce() -> Result<Box<dyn ProgressiveEmitter>, EmitError>,
{
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let limit = budget.emission_limit(gt.size());

    let started = Instant::now();
    let mut emitter = build()?;
    let mut init_time = Duration::ZERO;
    let mut records = Vec::new();
    let mut matched: HashSet<(ProfileId, ProfileId)> = HashSet::new();
    let mut cumulative_match_time = Duration::ZERO;
    let mut cumulative_emit_time = Duration::ZERO;

    for k in 1..=limit {
        let pull_started = Instant::now();
        let Some(comparison) = emitter.next_comparison() else {
            break;
        };
        if k == 1 {
            init_time = started.elapsed();
        } else {
            cumulative_emit_time += pull_started.elapsed();
        }

        let verdict = matcher.apply(
            collection.profile(comparison.i),
            collection.profile(comparison.j),
        );
        cumulative_match_time += verdict.elapsed;

        let is_match = oracle_match(&comparison, gt) && matched.insert(comparison.pair());
        records.push(EmissionRecord {
            k,
            comparison,
            is_match,
            cumulative_matches: matched.len(),
            cumulative_match_time,
            cumulative_emit_time,
        });
    }

    Ok(RecallCurve { records, ground_truth_size: gt.size(), init_time })
}

/// Area under the recall-vs-ec* step curve up to `ec_star`; emissions beyond
/// the curve end contribute the final recall.
pub fn auc_at(curve: &RecallCurve, ec_star: f64) -> f64 {
    debug_assert!(ec_star > 0.0);
    let d_p = curve.ground_truth_size;
    let ec = (ec_star * d_p as f64).floor() as usize;
    let mut sum = 0.0;
    for record in curve.records.iter().take(ec) {
        sum += record.cumulative_matches as f64 / d_p as f64;
    }
    if ec > curve.records.len() {
        sum += (ec - curve.records.len()) as f64 * curve.final_recall();
    }
    sum / d_p as f64
}

/// The same step integral applied to the ideal emitter, which reaches full
/// recall after exactly `d_p` emissions.
pub fn ideal_auc(ec_star: f64, d_p: usize) -> f64 {
    debug_assert!(ec_star > 0.0 && d_p >= 1);
    let ec = (ec_star * d_p as f64).floor() as usize;
    let d = d_p as f64;
    if ec <= d_p {
        // sum_{k=1..ec} k / d_p^2
        (ec as f64 * (ec as f64 + 1.0) / 2.0) / (d * d)
    } else {
        (d + 1.0) / (2.0 * d) + (ec - d_p) as f64 / d
    }
}

/// `auc_at` normalized by the ideal emitter's area; 1.0 means the first
/// `min(ec, d_p)` emissions were all matches.
pub fn normalized_auc(curve: &RecallCurve, ec_star: f64) -> f64 {
    let ideal = ideal_auc(ec_star, curve.ground_truth_size);
    if ideal == 0.0 {
        return 0.0;
    }
    auc_at(curve, ec_star) / ideal
}

/// The ec* checkpoints reported by the summary output.
pub const SUMMARY_EC_STARS: [f64; 4] = [1.0, 5.0, 10.0, 20.0];

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub method: String,
    pub dataset: String,
    pub init_time_ns: u128,
    /// Normalized AUC at each of [`SUMMARY_EC_STARS`].
    pub auc_stars: [f64; 4],
}

pub fn summarize(method: &str, dataset: &str, curve: &RecallCurve) -> SummaryRow {
    let mut auc_stars = [0.0; 4];
    for (slot, &ec_star) in auc_stars.iter_mut().zip(SUMMARY_EC_STARS.iter()) {
        *slot = normalized_auc(curve, ec_star);
    }
    SummaryRow {
        method: method.to_string(),
        dataset: dataset.to_string(),
        init_time_ns: curve.init_time.as_nanos(),
        auc_stars,
    }
}

/// Writes the per-emission curve:
/// `k,ec_star,i,j,weight,is_match,recall,cum_match_time_ns,cum_emit_time_ns`.
pub fn write_curve_csv<W: Write>(curve: &RecallCurve, writer: W) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "k",
        "ec_star",
        "i",
        "j",
        "weight",
        "is_match",
        "recall",
        "cum_match_time_ns",
        "cum_emit_time_ns",
    ])?;
    let d_p = curve.ground_truth_size as f64;
    for record in &curve.records {
        out.write_record([
            record.k.to_string(),
            (record.k as f64 / d_p).to_string(),
            record.comparison.i.to_string(),
            record.comparison.j.to_string(),
            record.comparison.weight.to_string(),
            record.is_match.to_string(),
            (record.cumulative_matches as f64 / d_p).to_string(),
            record.cumulative_match_time.as_nanos().to_string(),
            record.cumulative_emit_time.as_nanos().to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes one row per run:
/// `method,dataset,init_time_ns,auc_star@1,auc_star@5,auc_star@10,auc_star@20`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "method",
        "dataset",
        "init_time_ns",
        "auc_star@1",
        "auc_star@5",
        "auc_star@10",
        "auc_star@20",
    ])?;
    for row in rows {
        out.write_record([
            row.method.clone(),
            row.dataset.clone(),
            row.init_time_ns.to_string(),
            row.auc_stars[0].to_string(),
            row.auc_stars[1].to_string(),
            row.auc_stars[2].to_string(),
            row.auc_stars[3].to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::WorkflowParams;
    use crate::emit::equality::Pbs;
    use crate::model::ErMode;
    use crate::testutil::{collection_from_values, dirty_fixture};

    fn fixture_gt(c: &ProfileCollection) -> GroundTruth {
        GroundTruth::from_pairs([(0, 1), (2, 3)], c).unwrap()
    }

    fn pbs_builder(
        c: &ProfileCollection,
    ) -> impl FnOnce() -> Result<Box<dyn ProgressiveEmitter>, EmitError> + '_ {
        move || Ok(Box::new(Pbs::new(c, &WorkflowParams::default())?) as Box<dyn ProgressiveEmitter>)
    }

    #[test]
    fn fixture_pbs_curve() {
        let c = dirty_fixture();
        let gt = fixture_gt(&c);
        let curve =
            run_experiment(&c, pbs_builder(&c), &gt, Matcher::None, Budget::Unlimited).unwrap();
        assert_eq!(curve.len(), 4);
        let matches: Vec<_> = curve.records.iter().map(|r| r.is_match).collect();
        assert_eq!(matches, vec![true, true, false, false]);
        let recalls: Vec<_> =
            curve.records.iter().map(|r| r.cumulative_matches as f64 / 2.0).collect();
        assert_eq!(recalls, vec![0.5, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn budget_caps_emissions() {
        let c = dirty_fixture();
        let gt = fixture_gt(&c);
        let budget = Budget::max_ec_star(1.0).unwrap();
        let curve = run_experiment(&c, pbs_builder(&c), &gt, Matcher::None, budget).unwrap();
        assert_eq!(curve.len(), 2);
    }

    #[test]
    fn exhaustion_ends_curve_before_budget() {
        let c = dirty_fixture();
        let gt = fixture_gt(&c);
        let budget = Budget::max_ec_star(100.0).unwrap();
        let curve = run_experiment(&c, pbs_builder(&c), &gt, Matcher::None, budget).unwrap();
        assert_eq!(curve.len(), 4);
    }

    #[test]
    fn empty_ground_truth_is_an_error() {
        let c = dirty_fixture();
        let gt = GroundTruth::from_pairs([], &c).unwrap();
        let result = run_experiment(&c, pbs_builder(&c), &gt, Matcher::None, Budget::Unlimited);
        assert!(matches!(result, Err(EvalError::EmptyGroundTruth)));
    }

    #[test]
    fn invalid_budget_rejected() {
        assert!(Budget::max_ec_star(0.0).is_err());
        assert!(Budget::max_ec_star(-1.0).is_err());
    }

    #[test]
    fn auc_on_fixture_curve() {
        let c = dirty_fixture();
        let gt = fixture_gt(&c);
        let curve =
            run_experiment(&c, pbs_builder(&c), &gt, Matcher::None, Budget::Unlimited).unwrap();
        assert!((auc_at(&curve, 1.0) - 0.75).abs() < 1e-15);
        assert_eq!(normalized_auc(&curve, 1.0), 1.0);
    }

    #[test]
    fn auc_of_all_misses_is_zero() {
        let curve = RecallCurve {
            records: (1..=6)
                .map(|k| EmissionRecord {
                    k,
                    comparison: Comparison::new(0, k as u32, 1.0),
                    is_match: false,
                    cumulative_matches: 0,
                    cumulative_match_time: Duration::ZERO,
                    cumulative_emit_time: Duration::ZERO,
                })
                .collect(),
            ground_truth_size: 3,
            init_time: Duration::ZERO,
        };
        assert_eq!(auc_at(&curve, 2.0), 0.0);
        assert_eq!(normalized_auc(&curve, 2.0), 0.0);
    }

    #[test]
    fn ideal_auc_examples() {
        assert_eq!(ideal_auc(1.0, 2), 0.75);
        assert_eq!(ideal_auc(1.0, 1), 1.0);
        assert_eq!(ideal_auc(2.0, 2), 1.75);
    }

    #[test]
    fn ideal_auc_matches_direct_summation() {
        for d_p in [1usize, 2, 3, 7, 20] {
            for ec_star in [0.5, 1.0, 2.5, 5.0, 20.0] {
                let ec = (ec_star * d_p as f64).floor() as usize;
                let direct: f64 = (1..=ec)
                    .map(|k| k.min(d_p) as f64 / d_p as f64)
                    .sum::<f64>()
                    / d_p as f64;
                let closed = ideal_auc(ec_star, d_p);
                assert!(
                    (closed - direct).abs() < 1e-12,
                    "d_p={d_p} ec*={ec_star}: {closed} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn auc_monotone_in_ec_star() {
        let c = dirty_fixture();
        let gt = fixture_gt(&c);
        let curve =
            run_experiment(&c, pbs_builder(&c), &gt, Matcher::None, Budget::Unlimited).unwrap();
        let mut previous = 0.0;
        for step in 1..40 {
            let value = auc_at(&curve, step as f64 * 0.25);
            assert!(value >= previous);
            previous = value;
        }
    }

    #[test]
    fn final_recall_matches_batch_resolution_of_blocks() {
        // Exhaustive PBS must end at exactly the recall batch ER over the
        // same blocks would reach.
        let c = collection_from_values(
            ErMode::Dirty,
            &[(0, "a b"), (0, "a b"), (0, "c d"), (0, "c d"), (0, "e lone"), (0, "f only")],
        );
        let gt = GroundTruth::from_pairs([(0, 1), (2, 3), (4, 5)], &c).unwrap();
        let curve =
            run_experiment(&c, pbs_builder(&c), &gt, Matcher::None, Budget::Unlimited).unwrap();
        let blocks = crate::blocking::token_blocking_workflow(&c, &WorkflowParams::default());
        let batch_matches = gt
            .iter()
            .filter(|&(i, j)| {
                blocks.blocks.iter().any(|b| {
                    b.members.binary_search(&i).is_ok() && b.members.binary_search(&j).is_ok()
                })
            })
            .count();
        assert_eq!(curve.final_recall(), batch_matches as f64 / gt.size() as f64);
        // Profiles 4 and 5 share no token, so recall must end below 1.
        assert!(curve.final_recall() < 1.0);
    }

    #[test]
    fn curve_csv_shape() {
        let c = dirty_fixture();
        let gt = fixture_gt(&c);
        let curve =
            run_experiment(&c, pbs_builder(&c), &gt, Matcher::Jaccard { threshold: None }, Budget::Unlimited)
                .unwrap();
        let mut buffer = Vec::new();
        write_curve_csv(&curve, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("k,ec_star,i,j,weight,is_match,recall,"));
        assert!(lines[1].starts_with("1,0.5,0,1,"));
    }
}
