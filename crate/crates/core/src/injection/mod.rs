//! Probabilistic replacement of generator prompts by Q-A test payloads.

pub mod data;
pub mod noise;
mod plan;

pub use data::{ContextVariants, ControlledTestData, Expected, Polarity, QaItem, QaMode, SelfQuestion, SynonymLexicon};
pub use noise::{drop_words, inject_typos, inject_typos_counted, replace_synonyms, swap_words};
pub use plan::{noise_kind_for, plan_dialog, realize_prompt, DialogPlan, SlotAction, TestInstance};
