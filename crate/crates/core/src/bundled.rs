//! Data files compiled into the library.

pub const INTERVIEW_PROMPTS: &str = include_str!("../data/interview_prompts.txt");
pub const FILLERS: &str = include_str!("../data/fillers.txt");
pub const TOXICITY_LEXICON: &str = include_str!("../data/toxicity_lexicon.tsv");
pub const SYNONYMS: &str = include_str!("../data/synonyms.tsv");
pub const TEST_DATA: &str = include_str!("../data/test_data.json");

/// Non-empty, non-comment lines.
pub fn lines(src: &str) -> Vec<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn interview_prompts() -> Vec<String> {
    lines(INTERVIEW_PROMPTS)
}

pub fn fillers() -> Vec<String> {
    lines(FILLERS)
}

/// Phrases of the bundled toxicity lexicon, in file order.
pub fn toxic_phrases() -> Vec<String> {
    lines(TOXICITY_LEXICON)
        .into_iter()
        .filter_map(|l| l.split('\t').next().map(str::to_string))
        .collect()
}
