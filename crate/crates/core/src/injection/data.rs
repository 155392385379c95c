//! Controlled test data: handcrafted payloads for the Q-A test structure.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bundled;
use crate::error::InjectionError;
use crate::registry::{RequirementRegistry, TestStructure};
use crate::text::{contains_run, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QaMode {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Open { match_values: Vec<String> },
    Closed { expected_polarity: Polarity },
}

/// Two-sentence phrasings: a context sentence followed by the information or
/// the request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextVariants {
    #[serde(default)]
    pub info: Vec<String>,
    #[serde(default)]
    pub request: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub payload_id: String,
    pub requirement_id: String,
    pub mode: QaMode,
    pub info_prompts: Vec<String>,
    pub request_prompts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_variants: Option<ContextVariants>,
    pub expected: Expected,
}

impl QaItem {
    pub fn match_values(&self) -> &[String] {
        match &self.expected {
            Expected::Open { match_values } => match_values,
            Expected::Closed { .. } => &[],
        }
    }
}

/// Questions about the model itself, asked twice for self-consistency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfQuestion {
    pub payload_id: String,
    pub prompts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlledTestData {
    pub qa_items: Vec<QaItem>,
    pub no_list: Vec<String>,
    pub self_questions: Vec<SelfQuestion>,
}

impl ControlledTestData {
    pub fn from_json(src: &str) -> Result<Self, InjectionError> {
        let data: Self = serde_json::from_str(src).map_err(|e| InjectionError::Data(e.to_string()))?;
        data.validate()?;
        Ok(data)
    }

    pub fn bundled() -> Self {
        Self::from_json(bundled::TEST_DATA).expect("bundled test data is valid")
    }

    pub fn items_for<'a>(&'a self, requirement_id: &'a str) -> impl Iterator<Item = &'a QaItem> + 'a {
        self.qa_items
            .iter()
            .filter(move |i| i.requirement_id == requirement_id)
    }

    pub fn item(&self, payload_id: &str) -> Option<&QaItem> {
        self.qa_items.iter().find(|i| i.payload_id == payload_id)
    }

    pub fn self_question(&self, payload_id: &str) -> Option<&SelfQuestion> {
        self.self_questions.iter().find(|q| q.payload_id == payload_id)
    }

    pub fn validate(&self) -> Result<(), InjectionError> {
        let err = |m: String| Err(InjectionError::Data(m));
        let registry = RequirementRegistry::default();
        let mut ids = BTreeSet::new();
        if self.no_list.is_empty() {
            return err("no_list must be non-empty".into());
        }
        for q in &self.self_questions {
            if !ids.insert(q.payload_id.as_str()) {
                return err(format!("duplicate payload id {}", q.payload_id));
            }
            if q.prompts.is_empty() {
                return err(format!("{}: no prompts", q.payload_id));
            }
        }
        for item in &self.qa_items {
            let id = &item.payload_id;
            if !ids.insert(id.as_str()) {
                return err(format!("duplicate payload id {id}"));
            }
            let qa = registry
                .lookup(&item.requirement_id)
                .is_some_and(|r| r.test_structure == TestStructure::QuestionAnswer);
            if !qa || item.requirement_id == "I1" {
                return err(format!("{id}: {} is not an item-driven Q-A requirement", item.requirement_id));
            }
            if item.info_prompts.is_empty() || item.request_prompts.is_empty() {
                return err(format!("{id}: prompt lists must be non-empty"));
            }
            let all_text = item
                .info_prompts
                .iter()
                .chain(&item.request_prompts)
                .chain(item.context_variants.iter().flat_map(|c| c.info.iter().chain(&c.request)));
            for t in all_text {
                if t.trim().is_empty() {
                    return err(format!("{id}: blank prompt"));
                }
            }
            match (&item.mode, &item.expected) {
                (QaMode::Open, Expected::Open { match_values }) => {
                    if match_values.is_empty() || match_values.iter().any(|m| m.trim().is_empty()) {
                        return err(format!("{id}: match_values must be non-empty"));
                    }
                    let infos = item
                        .info_prompts
                        .iter()
                        .chain(item.context_variants.iter().flat_map(|c| c.info.iter()));
                    for info in infos {
                        let tokens = tokenize(info);
                        if !match_values.iter().any(|m| contains_run(&tokens, &tokenize(m))) {
                            return err(format!("{id}: info prompt {info:?} lacks a match value"));
                        }
                    }
                }
                (QaMode::Closed, Expected::Closed { .. }) => {}
                _ => return err(format!("{id}: mode does not match expected")),
            }
        }
        Ok(())
    }
}

/// Synonym table loaded from `word<TAB>syn1,syn2,...` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    pub entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn parse(src: &str) -> Result<Self, InjectionError> {
        let mut entries = BTreeMap::new();
        for (n, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, syns) = line
                .split_once('\t')
                .ok_or_else(|| InjectionError::Data(format!("synonym line {}: missing tab", n + 1)))?;
            let syns: Vec<String> = syns
                .split(',')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            if syns.is_empty() {
                return Err(InjectionError::Data(format!("synonym line {}: no synonyms", n + 1)));
            }
            entries.insert(word.trim().to_lowercase(), syns);
        }
        Ok(Self { entries })
    }

    pub fn bundled() -> Self {
        Self::parse(bundled::SYNONYMS).expect("bundled synonyms parse")
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }
}
