//! The fifteen quality requirements that ship with test designs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    Personality,
    Answering,
    Intelligence,
    Understanding,
}

/// The five test structures a requirement can be checked with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestStructure {
    /// Provide information, request it later, compare.
    #[serde(rename = "QA")]
    QuestionAnswer,
    /// N-gram repetition count.
    #[serde(rename = "NC")]
    NgramCount,
    /// Coherence check.
    #[serde(rename = "CC")]
    CoherenceCheck,
    /// Toxicity assessment.
    #[serde(rename = "TA")]
    ToxicityAssessment,
    /// Simple count.
    #[serde(rename = "SC")]
    SimpleCount,
}

impl TestStructure {
    pub fn short(self) -> &'static str {
        match self {
            TestStructure::QuestionAnswer => "QA",
            TestStructure::NgramCount => "NC",
            TestStructure::CoherenceCheck => "CC",
            TestStructure::ToxicityAssessment => "TA",
            TestStructure::SimpleCount => "SC",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub name: String,
    pub category: Category,
    pub test_structure: TestStructure,
    pub enabled: bool,
    pub validated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementRegistry {
    pub entries: BTreeMap<String, Requirement>,
}

const DEFAULTS: &[(&str, &str, Category, TestStructure)] = {
    use Category::*;
    use TestStructure::*;
    &[
        ("P2", "Toxicity", Personality, ToxicityAssessment),
        ("A3", "Nagging", Answering, SimpleCount),
        ("A4", "Stuttering", Answering, NgramCount),
        ("I1", "Self consistency", Intelligence, QuestionAnswer),
        ("I2", "Dialog coherency", Intelligence, CoherenceCheck),
        ("I3", "Reply coherency", Intelligence, CoherenceCheck),
        ("I5", "Memory assessment", Intelligence, QuestionAnswer),
        ("I8", "Diverse information", Intelligence, QuestionAnswer),
        ("I9", "Contextual information", Intelligence, QuestionAnswer),
        ("I10", "Diverse questions", Intelligence, QuestionAnswer),
        ("I11", "Contextual questions", Intelligence, QuestionAnswer),
        ("U3", "Typo robustness", Understanding, QuestionAnswer),
        ("U4", "Word order robustness", Understanding, QuestionAnswer),
        ("U5", "Omitted word robustness", Understanding, QuestionAnswer),
        ("U6", "Synonymy robustness", Understanding, QuestionAnswer),
    ]
};

/// The default registry. Reply coherency (I3) ships unvalidated.
pub fn registry_defaults() -> RequirementRegistry {
    let entries = DEFAULTS
        .iter()
        .map(|&(id, name, category, test_structure)| {
            (
                id.to_string(),
                Requirement {
                    name: name.to_string(),
                    category,
                    test_structure,
                    enabled: true,
                    validated: id != "I3",
                },
            )
        })
        .collect();
    RequirementRegistry { entries }
}

impl Default for RequirementRegistry {
    fn default() -> Self {
        registry_defaults()
    }
}

impl RequirementRegistry {
    pub fn lookup(&self, id: &str) -> Option<&Requirement> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn is_enabled(&self, id: &str) -> bool {
        self.lookup(id).is_some_and(|r| r.enabled)
    }

    /// Enabled requirement ids in lexicographic order.
    pub fn enabled_ids(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|(_, r)| r.enabled)
            .map(|(id, _)| id.as_str())
    }

    /// Enabled Q-A requirement ids in lexicographic order.
    pub fn enabled_qa(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|(_, r)| r.enabled && r.test_structure == TestStructure::QuestionAnswer)
            .map(|(id, _)| id.as_str())
    }

    /// Restricts the enabled set to `ids`.
    pub fn enable_only<'a>(&mut self, ids: impl IntoIterator<Item = &'a str>) {
        let keep: std::collections::BTreeSet<&str> = ids.into_iter().collect();
        for (id, r) in self.entries.iter_mut() {
            r.enabled = keep.contains(id.as_str());
        }
    }
}
