use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Outcome, Verdict};
use crate::registry::RequirementRegistry;

use super::stats::{histogram, lower_median, nearest_rank_percentile, population_std, Histogram, HISTOGRAM_BINS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryFlags {
    pub unvalidated_metric: bool,
    /// Score scale defined by this tool rather than an external reference.
    pub harness_defined_metric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub requirement_id: String,
    pub model_id: String,
    pub dialogs_evaluated: u64,
    pub dialogs_failed: u64,
    pub failed_fraction: Option<f64>,
    pub failures_p75: Option<f64>,
    pub failures_std: Option<f64>,
    pub failures_median: Option<f64>,
    pub score_histogram: Histogram,
    pub flags: SummaryFlags,
}

fn failure_count(v: &Verdict) -> u64 {
    v.evidence.get("failure_count").and_then(|x| x.as_u64()).unwrap_or(1)
}

fn reply_scores(v: &Verdict) -> Option<Vec<f64>> {
    v.evidence
        .get("reply_scores")
        .and_then(|x| x.as_array())
        .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
}

/// Values plotted for a requirement: per-reply scores where recorded,
/// otherwise the verdict score.
fn histogram_values<'a>(verdicts: impl Iterator<Item = &'a Verdict>) -> Vec<f64> {
    let mut out = Vec::new();
    for v in verdicts.filter(|v| v.outcome != Outcome::Skip) {
        match reply_scores(v) {
            Some(s) => out.extend(s),
            None => out.extend(v.score),
        }
    }
    out
}

/// Per-dialog failure counts for failing dialogs, plus evaluated and failed
/// dialog totals. Skips do not count as evaluated.
pub fn dialog_failures<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> (u64, Vec<u64>) {
    let mut per: BTreeMap<&str, Option<u64>> = BTreeMap::new();
    for v in verdicts {
        match v.outcome {
            Outcome::Skip => {}
            Outcome::Pass => {
                per.entry(&v.dialog_id).or_insert(None);
            }
            Outcome::Fail => {
                let e = per.entry(&v.dialog_id).or_insert(None);
                *e = Some(e.unwrap_or(0) + failure_count(v));
            }
        }
    }
    let failing = per.values().filter_map(|c| *c).collect();
    (per.len() as u64, failing)
}

/// Aggregates verdicts of one requirement and model. Verdicts of other
/// requirements or models are ignored.
pub fn summarize(verdicts: &[Verdict], requirement_id: &str, model_id: &str) -> MetricSummary {
    let registry = RequirementRegistry::default();
    let mine = || {
        verdicts
            .iter()
            .filter(move |v| v.requirement_id == requirement_id && v.model_id == model_id)
    };
    let (evaluated, failing) = dialog_failures(mine());
    let counts: Vec<f64> = failing.iter().map(|c| *c as f64).collect();
    MetricSummary {
        requirement_id: requirement_id.to_string(),
        model_id: model_id.to_string(),
        dialogs_evaluated: evaluated,
        dialogs_failed: failing.len() as u64,
        failed_fraction: (evaluated > 0).then(|| failing.len() as f64 / evaluated as f64),
        failures_p75: nearest_rank_percentile(&counts, 0.75),
        failures_std: population_std(&counts),
        failures_median: lower_median(&counts),
        score_histogram: histogram(&histogram_values(mine()), HISTOGRAM_BINS),
        flags: SummaryFlags {
            unvalidated_metric: registry.lookup(requirement_id).is_some_and(|r| !r.validated),
            harness_defined_metric: requirement_id == "A4",
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NagStatistics {
    pub dialogs_evaluated: u64,
    pub nagging_dialog_fraction: Option<f64>,
    pub total_nags: u64,
    /// Lower median over dialogs that nag at least once.
    pub median_nags_among_nagging: Option<f64>,
}

/// Nagging statistics from A3 verdicts.
pub fn nag_statistics(verdicts: &[Verdict]) -> NagStatistics {
    let (evaluated, failing) = dialog_failures(verdicts.iter().filter(|v| v.requirement_id == "A3"));
    let counts: Vec<f64> = failing.iter().map(|c| *c as f64).collect();
    NagStatistics {
        dialogs_evaluated: evaluated,
        nagging_dialog_fraction: (evaluated > 0).then(|| failing.len() as f64 / evaluated as f64),
        total_nags: failing.iter().sum(),
        median_nags_among_nagging: lower_median(&counts),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityStatistics {
    pub replies: u64,
    pub toxic_replies: u64,
    pub toxic_fraction: Option<f64>,
    /// Over per-reply maximum category scores.
    pub p75_max_category_score: Option<f64>,
    pub std_max_category_score: Option<f64>,
}

/// Statistics over per-reply maximum category scores; a reply is toxic when
/// its maximum strictly exceeds `threshold`.
pub fn toxicity_statistics(reply_max: &[f64], threshold: f64) -> ToxicityStatistics {
    let toxic = reply_max.iter().filter(|v| **v > threshold).count() as u64;
    let n = reply_max.len() as u64;
    ToxicityStatistics {
        replies: n,
        toxic_replies: toxic,
        toxic_fraction: (n > 0).then(|| toxic as f64 / n as f64),
        p75_max_category_score: nearest_rank_percentile(reply_max, 0.75),
        std_max_category_score: population_std(reply_max),
    }
}

/// Toxicity statistics from P2 verdicts, counting toxic replies from the
/// recorded per-dialog failure counts.
pub fn toxicity_statistics_from_verdicts(verdicts: &[Verdict]) -> ToxicityStatistics {
    let p2: Vec<&Verdict> = verdicts
        .iter()
        .filter(|v| v.requirement_id == "P2" && v.outcome != Outcome::Skip)
        .collect();
    let scores: Vec<f64> = p2.iter().flat_map(|v| reply_scores(v).unwrap_or_default()).collect();
    let toxic: u64 = p2
        .iter()
        .filter(|v| v.outcome == Outcome::Fail)
        .map(|v| failure_count(v))
        .sum();
    let mut s = toxicity_statistics(&scores, f64::INFINITY);
    s.toxic_replies = toxic;
    s.toxic_fraction = (s.replies > 0).then(|| toxic as f64 / s.replies as f64);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dialog;

    fn v(dialog: &str, req: &str, outcome: Outcome, failures: u64) -> Verdict {
        let d = Dialog::new(dialog, 0, "m");
        let mut v = Verdict::new(&d, req, "dialog", outcome);
        if outcome == Outcome::Fail {
            v = v.with("failure_count", failures).with("turns", [1]);
        }
        v
    }

    #[test]
    fn table_shapes() {
        let mut vs: Vec<Verdict> = (0..79).map(|i| v(&format!("d{i:03}"), "I2", Outcome::Fail, 1)).collect();
        vs.extend((79..200).map(|i| v(&format!("d{i:03}"), "I2", Outcome::Pass, 0)));
        vs.push(v("d999", "I2", Outcome::Skip, 0));
        let s = summarize(&vs, "I2", "m");
        assert_eq!((s.dialogs_evaluated, s.dialogs_failed), (200, 79));
        assert_eq!(s.failed_fraction, Some(0.395));
    }

    #[test]
    fn nag_examples() {
        let vs = vec![
            v("a", "A3", Outcome::Fail, 2),
            v("b", "A3", Outcome::Fail, 3),
            v("c", "A3", Outcome::Fail, 2),
        ];
        let s = nag_statistics(&vs);
        assert_eq!(s.median_nags_among_nagging, Some(2.0));
        assert_eq!(s.total_nags, 7);
        let s = nag_statistics(&[v("a", "A3", Outcome::Pass, 0)]);
        assert_eq!((s.nagging_dialog_fraction, s.median_nags_among_nagging), (Some(0.0), None));
    }

    #[test]
    fn toxicity_examples() {
        let mut scores = vec![0.0; 10_000];
        for s in scores.iter_mut().take(526) {
            *s = 0.9;
        }
        assert_eq!(toxicity_statistics(&scores, 0.1).toxic_fraction, Some(0.0526));
        let s = toxicity_statistics(&[0.0; 20], 0.1);
        assert_eq!((s.toxic_fraction, s.p75_max_category_score), (Some(0.0), Some(0.0)));
    }
}
