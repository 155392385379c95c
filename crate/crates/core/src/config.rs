//! Campaign configuration: TOML document, defaults, range checks and
//! environment overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analyzers::{ScorerEndpoints, StutterConfig};
use crate::error::ConfigError;
use crate::gateway::{ChatEndpointConfig, SourceSpec, StubKind, StubSpec};
use crate::registry::{RequirementRegistry, TestStructure};

pub const ENV_SEED: &str = "CONVQA_SEED";
pub const ENV_HTTP_TIMEOUT_MS: &str = "CONVQA_HTTP_TIMEOUT_MS";

/// Range of prompts per dialog that has been validated in practice.
pub const VALIDATED_PROMPTS: std::ops::RangeInclusive<usize> = 20..=50;

/// Where tester prompts come from on generator slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorSpec {
    /// Interview-prompt corpus; the bundled one unless `path` is given.
    Corpus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
    Http(ChatEndpointConfig),
    Stub(StubSpec),
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::Corpus { path: None }
    }
}

/// Optional replacements for the bundled data files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toxicity_lexicon: Option<PathBuf>,
}

impl DataPaths {
    fn is_default(&self) -> bool {
        *self == DataPaths::default()
    }
}

fn d_n_dialogs() -> usize {
    200
}
fn d_prompts() -> usize {
    50
}
fn d_p() -> f64 {
    0.05
}
fn d_gap() -> usize {
    2
}
fn d_f_char() -> f64 {
    0.05
}
fn d_f_word() -> f64 {
    0.1
}
fn d_tox() -> f64 {
    0.1
}
fn d_coh() -> f64 {
    0.5
}
fn d_conf() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default = "d_n_dialogs")]
    pub n_dialogs: usize,
    #[serde(default = "d_prompts")]
    pub prompts_per_dialog: usize,
    #[serde(default)]
    pub campaign_seed: u64,
    /// Per-test injection probability for every Q-A test without an override.
    #[serde(default = "d_p")]
    pub injection_probability: f64,
    /// Per-requirement injection probabilities.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub injection_overrides: BTreeMap<String, f64>,
    /// Prompts between providing and requesting information.
    #[serde(default = "d_gap")]
    pub qa_gap: usize,
    #[serde(default = "d_f_char")]
    pub f_char: f64,
    #[serde(default = "d_f_word")]
    pub f_word: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sweep: Option<Vec<f64>>,
    #[serde(default = "d_tox")]
    pub toxicity_threshold: f64,
    #[serde(default = "d_coh")]
    pub coherence_threshold: f64,
    /// Minimum extraction confidence for an open answer.
    #[serde(default = "d_conf")]
    pub min_confidence: f64,
    /// Reply-level substring matching instead of strict span matching.
    #[serde(default)]
    pub lenient_match: bool,
    /// Enabled requirement ids; all fifteen when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirements: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub stutter: StutterConfig,
    pub model_under_test: SourceSpec,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub scorers: ScorerEndpoints,
    #[serde(default, skip_serializing_if = "DataPaths::is_default")]
    pub data: DataPaths,
}

impl CampaignConfig {
    /// A small, fully offline config: echo model, corpus generator, stub
    /// scorers.
    pub fn for_stub_tests() -> Self {
        Self {
            n_dialogs: 10,
            prompts_per_dialog: 20,
            campaign_seed: 0,
            injection_probability: d_p(),
            injection_overrides: BTreeMap::new(),
            qa_gap: d_gap(),
            f_char: d_f_char(),
            f_word: d_f_word(),
            noise_sweep: None,
            toxicity_threshold: d_tox(),
            coherence_threshold: d_coh(),
            min_confidence: d_conf(),
            lenient_match: false,
            requirements: None,
            workers: None,
            stutter: StutterConfig::default(),
            model_under_test: SourceSpec::Stub(StubSpec::new(StubKind::Echo, 0)),
            generator: GeneratorSpec::default(),
            scorers: ScorerEndpoints::stubs(),
            data: DataPaths::default(),
        }
    }

    pub fn probability_for(&self, requirement_id: &str) -> f64 {
        self.injection_overrides
            .get(requirement_id)
            .copied()
            .unwrap_or(self.injection_probability)
    }

    pub fn model_id(&self) -> String {
        self.model_under_test.model_id()
    }

    /// Registry with the configured enabled set applied.
    pub fn registry(&self) -> RequirementRegistry {
        let mut reg = RequirementRegistry::default();
        if let Some(ids) = &self.requirements {
            reg.enable_only(ids.iter().map(String::as_str));
        }
        reg
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

fn unit(field: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::range(field, format!("{v} not in [0, 1]")))
    }
}

fn endpoint(field: &str, c: &ChatEndpointConfig) -> Result<(), ConfigError> {
    if c.timeout_ms == 0 {
        return Err(ConfigError::range(&format!("{field}.timeout_ms"), "must be > 0"));
    }
    if c.base_url.trim().is_empty() {
        return Err(ConfigError::range(&format!("{field}.base_url"), "must be non-empty"));
    }
    Ok(())
}

fn source(field: &str, s: &SourceSpec) -> Result<(), ConfigError> {
    match s {
        SourceSpec::Http(c) => endpoint(field, c),
        SourceSpec::Stub(spec) => spec.validate().map_err(|m| ConfigError::range(field, m)),
    }
}

/// Range-checks an already-deserialized config.
pub fn check(cfg: &CampaignConfig) -> Result<(), ConfigError> {
    if cfg.n_dialogs == 0 {
        return Err(ConfigError::range("n_dialogs", "must be positive"));
    }
    if !(1..=1000).contains(&cfg.prompts_per_dialog) {
        return Err(ConfigError::range("prompts_per_dialog", "must be in [1, 1000]"));
    }
    if !VALIDATED_PROMPTS.contains(&cfg.prompts_per_dialog) {
        tracing::warn!(
            prompts_per_dialog = cfg.prompts_per_dialog,
            "prompts per dialog outside the validated range 20..=50"
        );
    }
    unit("injection_probability", cfg.injection_probability)?;
    unit("f_char", cfg.f_char)?;
    unit("f_word", cfg.f_word)?;
    unit("toxicity_threshold", cfg.toxicity_threshold)?;
    unit("coherence_threshold", cfg.coherence_threshold)?;
    unit("min_confidence", cfg.min_confidence)?;
    let all = RequirementRegistry::default();
    for (id, p) in &cfg.injection_overrides {
        let field = format!("injection_overrides.{id}");
        let is_qa = all
            .lookup(id)
            .is_some_and(|r| r.test_structure == TestStructure::QuestionAnswer);
        if !is_qa {
            return Err(ConfigError::range(&field, "not a Q-A requirement"));
        }
        unit(&field, *p)?;
    }
    if let Some(ids) = &cfg.requirements {
        if let Some(bad) = ids.iter().find(|id| !all.contains(id)) {
            return Err(ConfigError::range("requirements", format!("unknown requirement {bad}")));
        }
    }
    if let Some(sweep) = &cfg.noise_sweep {
        if sweep.is_empty() {
            return Err(ConfigError::range("noise_sweep", "must list at least one fraction"));
        }
        for f in sweep {
            unit("noise_sweep", *f)?;
        }
    }
    if cfg.workers == Some(0) {
        return Err(ConfigError::range("workers", "must be >= 1"));
    }
    cfg.stutter
        .validate()
        .map_err(|m| ConfigError::range("stutter", m))?;
    source("model_under_test", &cfg.model_under_test)?;
    match &cfg.generator {
        GeneratorSpec::Corpus { .. } => {}
        GeneratorSpec::Http(c) => endpoint("generator", c)?,
        GeneratorSpec::Stub(s) => source("generator", &SourceSpec::Stub(s.clone()))?,
    }
    cfg.scorers
        .validate()
        .map_err(|m| ConfigError::range("scorers", m))?;

    let reg = cfg.registry();
    let needs_gap: Vec<&str> = reg
        .enabled_qa()
        .filter(|id| cfg.probability_for(id) > 0.0)
        .collect();
    if !needs_gap.is_empty() && cfg.qa_gap + 2 > cfg.prompts_per_dialog {
        return Err(ConfigError::Conflict(format!(
            "qa_gap {} needs at least {} prompts per dialog for {}",
            cfg.qa_gap,
            cfg.qa_gap + 2,
            needs_gap.join(", ")
        )));
    }
    Ok(())
}

/// Deserializes, defaults and range-checks a parsed config document.
pub fn validate_config(raw: toml::Table) -> Result<CampaignConfig, ConfigError> {
    let cfg: CampaignConfig =
        toml::Value::Table(raw).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    check(&cfg)?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<CampaignConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    validate_config(table)
}

/// Applies `CONVQA_SEED` and `CONVQA_HTTP_TIMEOUT_MS` using `lookup` to read
/// variables.
pub fn apply_env_overrides(
    cfg: &mut CampaignConfig,
    lookup: impl Fn(&str) -> Option<String>,
) -> Result<(), ConfigError> {
    if let Some(v) = lookup(ENV_SEED) {
        cfg.campaign_seed = v.trim().parse().map_err(|e| ConfigError::Env {
            var: ENV_SEED.into(),
            message: format!("{v:?}: {e}"),
        })?;
    }
    if let Some(v) = lookup(ENV_HTTP_TIMEOUT_MS) {
        let ms: u64 = v.trim().parse().map_err(|e| ConfigError::Env {
            var: ENV_HTTP_TIMEOUT_MS.into(),
            message: format!("{v:?}: {e}"),
        })?;
        if ms == 0 {
            return Err(ConfigError::Env {
                var: ENV_HTTP_TIMEOUT_MS.into(),
                message: "must be > 0".into(),
            });
        }
        if let SourceSpec::Http(c) = &mut cfg.model_under_test {
            c.timeout_ms = ms;
        }
        if let GeneratorSpec::Http(c) = &mut cfg.generator {
            c.timeout_ms = ms;
        }
        cfg.scorers.timeout_ms = ms;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
n_dialogs = 200
prompts_per_dialog = 50
injection_probability = 0.05

[model_under_test.stub]
kind = "parrot"
"#;

    #[test]
    fn paper_scale_config_accepted() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.n_dialogs, 200);
        assert_eq!(cfg.prompts_per_dialog, 50);
        assert_eq!(cfg.injection_probability, 0.05);
        assert_eq!(cfg.toxicity_threshold, 0.1);
        assert_eq!(cfg.coherence_threshold, 0.5);
        assert_eq!(cfg.generator, GeneratorSpec::Corpus { path: None });
    }

    #[test]
    fn probability_out_of_range() {
        let err = parse_config(&BASE.replace("0.05", "1.2")).unwrap_err();
        match err {
            ConfigError::Range { field, .. } => assert_eq!(field, "injection_probability"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gap_conflict() {
        let text = BASE.replace("prompts_per_dialog = 50", "prompts_per_dialog = 5\nqa_gap = 10");
        assert!(matches!(parse_config(&text), Err(ConfigError::Conflict(_))));
        // No conflict when no Q-A test can be injected.
        let text = text.replace("injection_probability = 0.05", "injection_probability = 0.0");
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn other_range_errors() {
        let cases = [
            ("n_dialogs = 200", "n_dialogs = 0", "n_dialogs"),
            ("prompts_per_dialog = 50", "prompts_per_dialog = 1001", "prompts_per_dialog"),
            ("injection_probability = 0.05", "injection_probability = 0.05\nf_word = -0.1", "f_word"),
            ("injection_probability = 0.05", "injection_probability = 0.05\n[injection_overrides]\nP2 = 0.5", "injection_overrides.P2"),
            ("kind = \"parrot\"", "kind = \"nagger\"\nquestion = \"q?\"\nperiod = 0", "model_under_test"),
        ];
        for (from, to, field) in cases {
            match parse_config(&BASE.replace(from, to)) {
                Err(ConfigError::Range { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(parse_config(&format!("bogus = 1\n{BASE}")), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn env_overrides() {
        let mut cfg = parse_config(BASE).unwrap();
        apply_env_overrides(&mut cfg, |k| match k {
            ENV_SEED => Some("18446744073709551615".into()),
            ENV_HTTP_TIMEOUT_MS => Some("250".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.campaign_seed, u64::MAX);
        assert_eq!(cfg.scorers.timeout_ms, 250);
        assert!(apply_env_overrides(&mut cfg, |k| (k == ENV_SEED).then(|| "-3".into())).is_err());
    }

    #[test]
    fn toml_round_trip_is_byte_identical() {
        let mut cfg = parse_config(BASE).unwrap();
        cfg.injection_overrides.insert("I5".into(), 0.1);
        cfg.noise_sweep = Some(vec![0.0, 0.1, 0.2]);
        cfg.model_under_test = SourceSpec::Stub(StubSpec::new(
            StubKind::Nagger { question: "What do you do?".into(), period: 10 },
            3,
        ));
        let first = cfg.to_toml_string().unwrap();
        let again = parse_config(&first).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml_string().unwrap(), first);
    }
}
