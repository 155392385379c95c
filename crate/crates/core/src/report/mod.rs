//! Aggregation of verdicts into per-model summaries and comparison reports.

pub mod canonical;
mod render;
pub mod stats;
mod summary;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ReportError;
use crate::model::Verdict;
use crate::registry::RequirementRegistry;

pub use canonical::{format_float, to_canonical_json};
pub use render::render;
pub use stats::{histogram, lower_median, nearest_rank_percentile, population_std, Histogram, HISTOGRAM_BINS};
pub use summary::{
    dialog_failures, nag_statistics, summarize, toxicity_statistics, toxicity_statistics_from_verdicts, MetricSummary,
    NagStatistics, SummaryFlags, ToxicityStatistics,
};

pub const METHODS: [&str; 5] = [
    "Failed fraction = failed dialogs / evaluated dialogs; skipped verdicts are excluded from both.",
    "p75 is the nearest-rank 75th percentile (rank ceil(0.75k)) of per-dialog failure counts over failing dialogs.",
    "Std is the population standard deviation; median is the lower median, both over failing dialogs.",
    "Histograms use 30 equal-width bins over [0, max score] per model.",
    "A4 stuttering scores are harness-defined: weighted immediate n-gram repeats (n=2..6) per token.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
    Html,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Markdown => "md",
            Format::Html => "html",
        }
    }
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            "html" => Ok(Format::Html),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementGroup {
    pub requirement_id: String,
    pub name: String,
    pub test_structure: String,
    /// One summary per model, in report model order.
    pub summaries: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub models: Vec<String>,
    pub requirements: Vec<RequirementGroup>,
    pub nagging: BTreeMap<String, NagStatistics>,
    pub toxicity: BTreeMap<String, ToxicityStatistics>,
    pub methods: Vec<String>,
}

/// Builds a report from one verdict set per input file. Models keep input
/// order; a model id appearing in two inputs is an error.
pub fn build_report(sets: &[Vec<Verdict>]) -> Result<ComparisonReport, ReportError> {
    let registry = RequirementRegistry::default();
    let mut models: Vec<String> = Vec::new();
    let mut by_model: BTreeMap<String, Vec<Verdict>> = BTreeMap::new();
    for set in sets {
        let ids: BTreeSet<&str> = set.iter().map(|v| v.model_id.as_str()).collect();
        for id in ids {
            if models.iter().any(|m| m == id) {
                return Err(ReportError::DuplicateModel(id.to_string()));
            }
            models.push(id.to_string());
        }
        for v in set {
            by_model.entry(v.model_id.clone()).or_default().push(v.clone());
        }
    }
    let req_ids: BTreeSet<&str> = sets.iter().flatten().map(|v| v.requirement_id.as_str()).collect();
    let requirements = req_ids
        .into_iter()
        .map(|req| {
            let entry = registry.lookup(req);
            RequirementGroup {
                requirement_id: req.to_string(),
                name: entry.map(|r| r.name.clone()).unwrap_or_default(),
                test_structure: entry.map(|r| r.test_structure.short().to_string()).unwrap_or_default(),
                summaries: models
                    .iter()
                    .map(|m| summarize(by_model.get(m).map_or(&[][..], Vec::as_slice), req, m))
                    .collect(),
            }
        })
        .collect::<Vec<_>>();
    let has = |id: &str| requirements.iter().any(|g| g.requirement_id == id);
    let nagging = if has("A3") {
        models.iter().map(|m| (m.clone(), nag_statistics(&by_model[m]))).collect()
    } else {
        BTreeMap::new()
    };
    let toxicity = if has("P2") {
        models
            .iter()
            .map(|m| (m.clone(), toxicity_statistics_from_verdicts(&by_model[m])))
            .collect()
    } else {
        BTreeMap::new()
    };
    Ok(ComparisonReport {
        models,
        requirements,
        nagging,
        toxicity,
        methods: METHODS.iter().map(|s| s.to_string()).collect(),
    })
}
