//! The overlap QA stub plus strict matching agrees with a plain
//! case-insensitive substring search over the bundled test data.

use convqa_core::analyzers::{assess_open, OverlapQa};
use convqa_core::injection::{ControlledTestData, QaMode};
use convqa_core::model::Outcome;

fn substring_oracle(reply: &str, match_values: &[String]) -> bool {
    let reply = reply.to_lowercase();
    match_values.iter().any(|m| reply.contains(&m.to_lowercase()))
}

#[test]
fn overlap_stub_matches_substring_search() {
    let data = ControlledTestData::bundled();
    let replies: Vec<&String> = data
        .qa_items
        .iter()
        .flat_map(|i| i.info_prompts.iter().chain(i.context_variants.iter().flat_map(|c| c.info.iter())))
        .collect();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for item in data.qa_items.iter().filter(|i| i.mode == QaMode::Open) {
        let questions = item
            .request_prompts
            .iter()
            .chain(item.context_variants.iter().flat_map(|c| c.request.iter()));
        for q in questions {
            for reply in &replies {
                let got = assess_open(q, reply, item.match_values(), &OverlapQa, 0.1).unwrap();
                let want = substring_oracle(reply, item.match_values());
                checked += 1;
                if (got.outcome == Outcome::Pass) != want {
                    mismatches.push(format!("{} | {q:?} | {reply:?} | stub={:?}", item.payload_id, got.outcome));
                }
            }
        }
    }
    assert!(checked > 1000, "only {checked} cases");
    assert!(mismatches.is_empty(), "{} mismatches:\n{}", mismatches.len(), mismatches.join("\n"));
}
