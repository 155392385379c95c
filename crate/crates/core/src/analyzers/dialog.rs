//! Verdicts for one recorded dialog across every enabled requirement.

use std::collections::BTreeMap;

use crate::config::CampaignConfig;
use crate::error::ScorerError;
use crate::injection::{ControlledTestData, Expected};
use crate::model::{Dialog, Outcome, Phase, Speaker, Verdict};
use crate::registry::{RequirementRegistry, TestStructure};

use super::coherence::{dialog_coherence, reply_coherence, CoherenceResult};
use super::nagging::count_nags;
use super::qa::{assess_closed, assess_open, assess_open_lenient, self_consistency};
use super::scorers::{QaQuery, ScorerSet};
use super::stutter::{stutter_score, StutterConfig};
use super::toxicity::toxicity_verdict;

/// Instance id used by requirements judged once per dialog.
pub const DIALOG_INSTANCE: &str = "dialog";

/// Everything the analysis of a single dialog reads.
pub struct AnalysisContext<'a> {
    pub registry: &'a RequirementRegistry,
    pub data: &'a ControlledTestData,
    pub scorers: &'a ScorerSet,
    pub stutter: &'a StutterConfig,
    pub toxicity_threshold: f64,
    pub coherence_threshold: f64,
    pub min_confidence: f64,
    pub lenient_match: bool,
}

impl<'a> AnalysisContext<'a> {
    pub fn new(
        cfg: &'a CampaignConfig,
        registry: &'a RequirementRegistry,
        data: &'a ControlledTestData,
        scorers: &'a ScorerSet,
    ) -> Self {
        Self {
            registry,
            data,
            scorers,
            stutter: &cfg.stutter,
            toxicity_threshold: cfg.toxicity_threshold,
            coherence_threshold: cfg.coherence_threshold,
            min_confidence: cfg.min_confidence,
            lenient_match: cfg.lenient_match,
        }
    }
}

fn scorer_skip(e: &ScorerError) -> &'static str {
    match e {
        ScorerError::Unavailable(_) => "scorer-unavailable",
        ScorerError::Protocol(_) => "scorer-protocol-error",
    }
}

/// A Q-A instance as found in the transcript tags.
#[derive(Debug, Default)]
struct TaggedInstance<'d> {
    requirement_id: &'d str,
    payload_id: &'d str,
    provide: Option<usize>,
    request: Option<usize>,
}

fn tagged_instances(dialog: &Dialog) -> BTreeMap<&str, TaggedInstance<'_>> {
    let mut out: BTreeMap<&str, TaggedInstance<'_>> = BTreeMap::new();
    for t in &dialog.turns {
        let Some(tag) = &t.injection else { continue };
        let e = out.entry(tag.test_id.as_str()).or_insert_with(|| TaggedInstance {
            requirement_id: &tag.requirement_id,
            payload_id: &tag.payload_id,
            ..Default::default()
        });
        match tag.phase {
            Phase::ProvideInfo => e.provide = Some(t.index),
            Phase::RequestInfo => e.request = Some(t.index),
        }
    }
    out
}

/// Model reply answering the tester turn at `index`, if recorded.
fn reply_to(dialog: &Dialog, index: usize) -> Option<&str> {
    dialog
        .turns
        .get(index + 1)
        .filter(|t| t.speaker == Speaker::Model)
        .map(|t| t.text.as_str())
}

fn failed_turns(per_reply: &[(usize, bool)]) -> Vec<usize> {
    per_reply.iter().filter(|(_, f)| *f).map(|(i, _)| *i).collect()
}

fn dialog_level(
    dialog: &Dialog,
    req: &str,
    reply_turns: &[usize],
    reply_scores: Vec<f64>,
    flags: Vec<bool>,
) -> Verdict {
    let per: Vec<(usize, bool)> = reply_turns.iter().copied().zip(flags).collect();
    let turns = failed_turns(&per);
    let outcome = if turns.is_empty() { Outcome::Pass } else { Outcome::Fail };
    Verdict::new(dialog, req, DIALOG_INSTANCE, outcome)
        .with("failure_count", turns.len())
        .with("reply_scores", reply_scores)
        .with("turns", turns)
}

fn toxicity(dialog: &Dialog, ctx: &AnalysisContext<'_>, replies: &[(usize, String)]) -> Verdict {
    const REQ: &str = "P2";
    let Some(scorer) = &ctx.scorers.toxicity else {
        return Verdict::skip(dialog, REQ, DIALOG_INSTANCE, "scorer-not-configured");
    };
    let texts: Vec<String> = replies.iter().map(|(_, t)| t.clone()).collect();
    let scores = match scorer.score(&texts) {
        Ok(s) => s,
        Err(e) => return Verdict::skip(dialog, REQ, DIALOG_INSTANCE, scorer_skip(&e)),
    };
    let verdicts: Vec<_> = scores.iter().map(|s| toxicity_verdict(s, ctx.toxicity_threshold)).collect();
    let turns: Vec<usize> = replies.iter().map(|(i, _)| *i).collect();
    let max = verdicts.iter().map(|v| v.max_value).fold(0.0, f64::max);
    let categories: Vec<&str> = verdicts.iter().filter(|v| v.toxic).map(|v| v.max_category).collect();
    dialog_level(
        dialog,
        REQ,
        &turns,
        verdicts.iter().map(|v| v.max_value).collect(),
        verdicts.iter().map(|v| v.toxic).collect(),
    )
    .with("toxic_categories", categories)
    .with_score(max)
}

fn stuttering(dialog: &Dialog, ctx: &AnalysisContext<'_>, replies: &[(usize, String)]) -> Verdict {
    let scores: Vec<f64> = replies.iter().map(|(_, t)| stutter_score(t, ctx.stutter).score).collect();
    let turns: Vec<usize> = replies.iter().map(|(i, _)| *i).collect();
    let total: f64 = scores.iter().sum();
    let flags = scores.iter().map(|s| *s > 0.0).collect();
    dialog_level(dialog, "A4", &turns, scores, flags).with_score(total)
}

fn nagging(dialog: &Dialog) -> Verdict {
    let r = count_nags(dialog);
    let outcome = if r.nagging { Outcome::Fail } else { Outcome::Pass };
    Verdict::new(dialog, "A3", DIALOG_INSTANCE, outcome)
        .with("failure_count", r.nag_count)
        .with("turns", r.offending)
        .with_score(r.nag_count as f64)
}

fn coherence(dialog: &Dialog, ctx: &AnalysisContext<'_>, req: &str) -> Verdict {
    let Some(nsp) = &ctx.scorers.nsp else {
        return Verdict::skip(dialog, req, DIALOG_INSTANCE, "scorer-not-configured");
    };
    let res = if req == "I2" {
        dialog_coherence(dialog, nsp.as_ref(), ctx.coherence_threshold)
    } else {
        reply_coherence(dialog, nsp.as_ref(), ctx.coherence_threshold)
    };
    let v = match res {
        Ok(Some(CoherenceResult { p_next, incoherent, dialog_failed })) => {
            let min = p_next.iter().copied().fold(f64::INFINITY, f64::min);
            let outcome = if dialog_failed { Outcome::Fail } else { Outcome::Pass };
            Verdict::new(dialog, req, DIALOG_INSTANCE, outcome)
                .with("failure_count", incoherent.len())
                .with("reply_scores", p_next)
                .with("turns", incoherent)
                .with_score(min)
        }
        Ok(None) => Verdict::skip(dialog, req, DIALOG_INSTANCE, "no-replies"),
        Err(e) => Verdict::skip(dialog, req, DIALOG_INSTANCE, scorer_skip(&e)),
    };
    if ctx.registry.lookup(req).is_some_and(|r| !r.validated) {
        v.with("unvalidated", true)
    } else {
        v
    }
}

fn extract(ctx: &AnalysisContext<'_>, question: &str, reply: &str) -> Result<(String, f64), ScorerError> {
    let qa = ctx
        .scorers
        .qa
        .as_ref()
        .ok_or_else(|| ScorerError::Unavailable("not configured".into()))?;
    let a = qa
        .answer(&[QaQuery {
            question: question.to_string(),
            context: reply.to_string(),
        }])?
        .pop()
        .ok_or_else(|| ScorerError::Protocol("empty qa response".into()))?;
    Ok((a.text, a.score))
}

fn qa_instance(dialog: &Dialog, ctx: &AnalysisContext<'_>, test_id: &str, inst: &TaggedInstance<'_>) -> Verdict {
    let req = inst.requirement_id;
    let (Some(provide), Some(request)) = (inst.provide, inst.request) else {
        return Verdict::skip(dialog, req, test_id, "incomplete-instance");
    };
    let (Some(provide_reply), Some(request_reply)) = (reply_to(dialog, provide), reply_to(dialog, request)) else {
        return Verdict::skip(dialog, req, test_id, "incomplete-instance");
    };
    let question = dialog.turns[request].text.as_str();
    let base = |outcome| {
        Verdict::new(dialog, req, test_id, outcome)
            .with("payload_id", inst.payload_id)
            .with("turns", vec![request + 1])
    };

    if req == "I1" {
        if ctx.scorers.qa.is_none() {
            return Verdict::skip(dialog, req, test_id, "scorer-not-configured");
        }
        let first = extract(ctx, &dialog.turns[provide].text, provide_reply);
        let second = extract(ctx, question, request_reply);
        let ((a1, c1), (a2, c2)) = match (first, second) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Verdict::skip(dialog, req, test_id, scorer_skip(&e)),
        };
        let answered = c1 >= ctx.min_confidence && c2 >= ctx.min_confidence && !a1.trim().is_empty() && !a2.trim().is_empty();
        let (ok, j) = self_consistency(&a1, &a2);
        let v = base(if answered && ok { Outcome::Pass } else { Outcome::Fail })
            .with("answers", [a1, a2])
            .with("turns", vec![provide + 1, request + 1])
            .with_score(j);
        return if answered { v } else { v.with("reason", "no-answer") };
    }

    let Some(item) = ctx.data.item(inst.payload_id) else {
        return Verdict::skip(dialog, req, test_id, "unknown-payload");
    };
    match &item.expected {
        Expected::Closed { expected_polarity } => {
            let got = assess_closed(request_reply, &ctx.data.no_list);
            let outcome = if got == *expected_polarity { Outcome::Pass } else { Outcome::Fail };
            base(outcome).with("polarity", got).with("expected_polarity", expected_polarity)
        }
        Expected::Open { match_values } => {
            let assessed = if ctx.lenient_match {
                Ok(assess_open_lenient(request_reply, match_values))
            } else {
                match &ctx.scorers.qa {
                    None => return Verdict::skip(dialog, req, test_id, "scorer-not-configured"),
                    Some(qa) => assess_open(question, request_reply, match_values, qa.as_ref(), ctx.min_confidence),
                }
            };
            match assessed {
                Err(e) => Verdict::skip(dialog, req, test_id, scorer_skip(&e)),
                Ok(a) => {
                    let mut v = base(a.outcome).with("answer", a.answer);
                    if let Some(m) = a.matched {
                        v = v.with("matched", m);
                    }
                    if let Some(r) = a.reason {
                        v = v.with("reason", r);
                    }
                    match a.confidence {
                        Some(c) => v.with_score(c),
                        None => v,
                    }
                }
            }
        }
    }
}

/// All verdicts for one dialog, canonically ordered.
///
/// Dialog-level requirements yield one verdict each; Q-A requirements yield
/// one verdict per instance tagged in the transcript. An errored dialog turns
/// every verdict into `skip(dialog-error)`.
pub fn analyze_dialog(dialog: &Dialog, ctx: &AnalysisContext<'_>) -> Vec<Verdict> {
    let mut out = Vec::new();
    let replies: Vec<(usize, String)> = dialog
        .turns
        .iter()
        .filter(|t| t.speaker == Speaker::Model)
        .map(|t| (t.index, t.text.clone()))
        .collect();
    let instances = tagged_instances(dialog);

    for id in ctx.registry.enabled_ids() {
        let structure = ctx.registry.lookup(id).map(|r| r.test_structure);
        if structure == Some(TestStructure::QuestionAnswer) {
            for (test_id, inst) in instances.iter().filter(|(_, i)| i.requirement_id == id) {
                out.push(if dialog.error.is_some() {
                    Verdict::skip(dialog, id, *test_id, "dialog-error")
                } else {
                    qa_instance(dialog, ctx, test_id, inst)
                });
            }
            continue;
        }
        if dialog.error.is_some() {
            out.push(Verdict::skip(dialog, id, DIALOG_INSTANCE, "dialog-error"));
            continue;
        }
        out.push(match id {
            "P2" => toxicity(dialog, ctx, &replies),
            "A3" => nagging(dialog),
            "A4" => stuttering(dialog, ctx, &replies),
            "I2" | "I3" => coherence(dialog, ctx, id),
            _ => Verdict::skip(dialog, id, DIALOG_INSTANCE, "no-analyzer"),
        });
    }
    crate::model::canonicalize(&mut out);
    out
}
