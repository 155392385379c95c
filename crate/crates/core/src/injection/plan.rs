use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{ControlledTestData, SynonymLexicon};
use super::noise;
use crate::config::CampaignConfig;
use crate::error::InjectionError;
use crate::model::{DroppedInstance, InjectionTag, NoiseKind, NoiseSpec, Phase};
use crate::registry::RequirementRegistry;
use crate::seed;

/// One planned Q-A test inside a dialog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestInstance {
    pub test_instance_id: String,
    pub requirement_id: String,
    pub payload_id: String,
    pub provide_slot: usize,
    pub request_slot: usize,
    pub noise: Option<NoiseSpec>,
    pub variant_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SlotAction {
    Generator,
    Inject { instance: usize, phase: Phase },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogPlan {
    pub slots: Vec<SlotAction>,
    pub test_instances: Vec<TestInstance>,
    /// Instances drawn for inclusion that did not fit.
    pub dropped: Vec<DroppedInstance>,
}

pub fn noise_kind_for(requirement_id: &str) -> Option<NoiseKind> {
    match requirement_id {
        "U3" => Some(NoiseKind::Typo),
        "U4" => Some(NoiseKind::WordSwap),
        "U5" => Some(NoiseKind::WordDrop),
        "U6" => Some(NoiseKind::Synonym),
        _ => None,
    }
}

fn pick<'a, T>(items: &'a [T], rng: &mut ChaCha8Rng) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

/// Plans the tester slots of one dialog.
///
/// Each enabled Q-A requirement is included with its own Bernoulli draw.
/// Included tests are placed in requirement-id order at the earliest slot `s`
/// where both `s` and `s + qa_gap + 1` are free.
pub fn plan_dialog(
    config: &CampaignConfig,
    registry: &RequirementRegistry,
    data: &ControlledTestData,
    dialog_seed: u64,
) -> Result<DialogPlan, InjectionError> {
    let n = config.prompts_per_dialog;
    let gap = config.qa_gap;
    let mut slots = vec![SlotAction::Generator; n];
    let mut test_instances = Vec::new();
    let mut dropped = Vec::new();

    for req in registry.enabled_qa() {
        let p = config.probability_for(req);
        let mut include = ChaCha8Rng::seed_from_u64(seed::derive_str(dialog_seed, &format!("include:{req}")));
        if p <= 0.0 || !include.gen_bool(p.min(1.0)) {
            continue;
        }
        let test_instance_id = format!("{req}#0");
        let mut payload_rng = ChaCha8Rng::seed_from_u64(seed::derive_str(dialog_seed, &format!("payload:{req}")));
        let payload_id = if req == "I1" {
            if data.self_questions.is_empty() {
                return Err(InjectionError::NoItems(req.to_string()));
            }
            pick(&data.self_questions, &mut payload_rng).payload_id.clone()
        } else {
            let items: Vec<_> = data.items_for(req).collect();
            if items.is_empty() {
                return Err(InjectionError::NoItems(req.to_string()));
            }
            pick(&items, &mut payload_rng).payload_id.clone()
        };
        let free = |s: usize| matches!(slots[s], SlotAction::Generator);
        let place = (0..n).find(|&s| s + gap + 1 < n && free(s) && free(s + gap + 1));
        let Some(provide_slot) = place else {
            tracing::debug!(req, "plan overflow, instance dropped");
            dropped.push(DroppedInstance {
                test_id: test_instance_id,
                requirement_id: req.to_string(),
                reason: "plan-overflow".into(),
            });
            continue;
        };
        let request_slot = provide_slot + gap + 1;
        let noise = noise_kind_for(req).map(|kind| NoiseSpec {
            kind,
            fraction: if kind == NoiseKind::Typo { config.f_char } else { config.f_word },
            rng_stream: seed::derive_str(dialog_seed, &format!("noise:{test_instance_id}")),
        });
        let idx = test_instances.len();
        slots[provide_slot] = SlotAction::Inject { instance: idx, phase: Phase::ProvideInfo };
        slots[request_slot] = SlotAction::Inject { instance: idx, phase: Phase::RequestInfo };
        test_instances.push(TestInstance {
            variant_seed: seed::derive_str(dialog_seed, &format!("variant:{test_instance_id}")),
            test_instance_id,
            requirement_id: req.to_string(),
            payload_id,
            provide_slot,
            request_slot,
            noise,
        });
    }
    Ok(DialogPlan {
        slots,
        test_instances,
        dropped,
    })
}

fn apply_noise(text: &str, spec: &NoiseSpec, synonyms: &SynonymLexicon) -> Result<String, InjectionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_stream);
    let out = match spec.kind {
        NoiseKind::Typo => noise::inject_typos(text, spec.fraction, &mut rng),
        NoiseKind::WordSwap => noise::swap_words(text, spec.fraction, &mut rng),
        NoiseKind::WordDrop => noise::drop_words(text, spec.fraction, &mut rng),
        NoiseKind::Synonym => noise::replace_synonyms(text, spec.fraction, synonyms, &mut rng)?,
    };
    // A prompt must stay non-empty; fall back to the clean text.
    if out.trim().is_empty() {
        Ok(text.to_string())
    } else {
        Ok(out)
    }
}

/// Renders the prompt for one phase of a planned instance.
pub fn realize_prompt(
    instance: &TestInstance,
    phase: Phase,
    data: &ControlledTestData,
    synonyms: &SynonymLexicon,
) -> Result<(String, InjectionTag), InjectionError> {
    let salt = match phase {
        Phase::ProvideInfo => 1,
        Phase::RequestInfo => 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(instance.variant_seed, salt));
    let req = instance.requirement_id.as_str();
    let missing = || InjectionError::MissingVariant {
        requirement_id: req.to_string(),
        payload_id: instance.payload_id.clone(),
    };
    let clean = if req == "I1" {
        let q = data
            .self_question(&instance.payload_id)
            .ok_or_else(|| InjectionError::Data(format!("unknown payload {}", instance.payload_id)))?;
        pick(&q.prompts, &mut rng).clone()
    } else {
        let item = data
            .item(&instance.payload_id)
            .ok_or_else(|| InjectionError::Data(format!("unknown payload {}", instance.payload_id)))?;
        let ctx = item.context_variants.as_ref();
        let variants = match (phase, req) {
            (Phase::ProvideInfo, "I9") => ctx.map(|c| &c.info).filter(|v| !v.is_empty()).ok_or_else(missing)?,
            (Phase::RequestInfo, "I11") => ctx.map(|c| &c.request).filter(|v| !v.is_empty()).ok_or_else(missing)?,
            (Phase::ProvideInfo, _) => &item.info_prompts,
            (Phase::RequestInfo, _) => &item.request_prompts,
        };
        pick(variants, &mut rng).clone()
    };
    let (text, noise_applied) = match (&instance.noise, phase) {
        (Some(spec), Phase::RequestInfo) => (apply_noise(&clean, spec, synonyms)?, Some(spec.clone())),
        _ => (clean, None),
    };
    Ok((
        text,
        InjectionTag {
            test_id: instance.test_instance_id.clone(),
            requirement_id: instance.requirement_id.clone(),
            phase,
            payload_id: instance.payload_id.clone(),
            noise_applied,
        },
    ))
}
