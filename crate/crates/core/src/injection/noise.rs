//! Fault-injection operators for the robustness tests.
//!
//! Every operator is the identity at fraction 0 and deterministic in
//! `(text, fraction, rng state)`.

use rand::seq::index;
use rand::Rng;

use super::data::SynonymLexicon;
use crate::error::InjectionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edit {
    Keep,
    Substitute(char),
    Delete,
    Duplicate,
    TransposeNext,
}

/// Character-level typos. Each alphabetic character is independently mutated
/// with probability `f_char` by one of substitute, delete, duplicate or
/// transpose-with-next, chosen uniformly among the edits applicable at that
/// position. Returns the new text and the number of mutated characters.
pub fn inject_typos_counted<R: Rng + ?Sized>(text: &str, f_char: f64, rng: &mut R) -> (String, usize) {
    if f_char <= 0.0 {
        return (text.to_string(), 0);
    }
    let chars: Vec<char> = text.chars().collect();
    let mut edits = Vec::with_capacity(chars.len());
    let mut mutated = 0;
    for (i, c) in chars.iter().enumerate() {
        if !c.is_alphabetic() || !rng.gen_bool(f_char) {
            edits.push(Edit::Keep);
            continue;
        }
        mutated += 1;
        let ops = if i + 1 < chars.len() { 4 } else { 3 };
        edits.push(match rng.gen_range(0..ops) {
            0 => Edit::Substitute(rng.gen_range(b'a'..=b'z') as char),
            1 => Edit::Delete,
            2 => Edit::Duplicate,
            _ => Edit::TransposeNext,
        });
    }
    let mut pieces: Vec<Vec<char>> = chars
        .iter()
        .zip(&edits)
        .map(|(&c, e)| match *e {
            Edit::Keep | Edit::TransposeNext => vec![c],
            Edit::Substitute(s) => vec![s],
            Edit::Delete => vec![],
            Edit::Duplicate => vec![c, c],
        })
        .collect();
    for (i, e) in edits.iter().enumerate() {
        if *e == Edit::TransposeNext {
            pieces.swap(i, i + 1);
        }
    }
    (pieces.into_iter().flatten().collect(), mutated)
}

pub fn inject_typos<R: Rng + ?Sized>(text: &str, f_char: f64, rng: &mut R) -> String {
    inject_typos_counted(text, f_char, rng).0
}

/// Swaps `ceil(f_word * (W - 1))` distinct, non-overlapping adjacent word
/// pairs, capped at `floor(W / 2)`. The set of pairs is uniform over all
/// non-overlapping sets of that size.
pub fn swap_words<R: Rng + ?Sized>(text: &str, f_word: f64, rng: &mut R) -> String {
    let mut words: Vec<&str> = text.split_whitespace().collect();
    let w = words.len();
    if f_word <= 0.0 || w < 2 {
        return text.to_string();
    }
    let wanted = (f_word * (w - 1) as f64).ceil() as usize;
    let k = wanted.min(w / 2);
    // k non-overlapping pairs among w-1 adjacent slots <-> k-subsets of w-k.
    let mut picks = index::sample(rng, w - k, k).into_vec();
    picks.sort_unstable();
    for (j, b) in picks.into_iter().enumerate() {
        let a = b + j;
        words.swap(a, a + 1);
    }
    words.join(" ")
}

/// Drops each word with probability `f_word`, always retaining at least one.
pub fn drop_words<R: Rng + ?Sized>(text: &str, f_word: f64, rng: &mut R) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if f_word <= 0.0 || words.is_empty() {
        return text.to_string();
    }
    let keep: Vec<bool> = words.iter().map(|_| !rng.gen_bool(f_word)).collect();
    if keep.iter().any(|k| *k) {
        words
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(w, _)| *w)
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        words[rng.gen_range(0..words.len())].to_string()
    }
}

/// Replaces each lexicon word with probability `f_word` by a uniformly chosen
/// synonym. Punctuation around the word is preserved.
pub fn replace_synonyms<R: Rng + ?Sized>(
    text: &str,
    f_word: f64,
    lexicon: &SynonymLexicon,
    rng: &mut R,
) -> Result<String, InjectionError> {
    if lexicon.is_empty() {
        return Err(InjectionError::EmptyLexicon);
    }
    if f_word <= 0.0 {
        return Ok(text.to_string());
    }
    let out: Vec<String> = text
        .split_whitespace()
        .map(|raw| {
            let start = raw.find(|c: char| c.is_alphanumeric());
            let Some(start) = start else {
                return raw.to_string();
            };
            let end = raw
                .char_indices()
                .rev()
                .find(|(_, c)| c.is_alphanumeric())
                .map(|(i, c)| i + c.len_utf8())
                .unwrap_or(raw.len());
            let core = raw[start..end].to_lowercase();
            match lexicon.get(&core) {
                Some(syns) if rng.gen_bool(f_word) => {
                    let pick = &syns[rng.gen_range(0..syns.len())];
                    format!("{}{}{}", &raw[..start], pick, &raw[end..])
                }
                _ => raw.to_string(),
            }
        })
        .collect();
    Ok(out.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    /// Independent replay of the typo operator: walks the same rng draws and
    /// applies edits with an explicit output cursor instead of piece swapping.
    fn typo_oracle(text: &str, f: f64, r: &mut ChaCha8Rng) -> String {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut plan: Vec<(u8, char)> = vec![(9, ' '); n];
        for i in 0..n {
            if chars[i].is_alphabetic() && r.gen_bool(f) {
                let ops = if i + 1 < n { 4 } else { 3 };
                let op = r.gen_range(0..ops) as u8;
                let sub = if op == 0 { r.gen_range(b'a'..=b'z') as char } else { ' ' };
                plan[i] = (op, sub);
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        for (i, p) in plan.iter().enumerate() {
            if p.0 == 3 {
                order.swap(i, i + 1);
            }
        }
        let mut out = String::new();
        for &src in &order {
            match plan[src].0 {
                0 => out.push(plan[src].1),
                1 => {}
                2 => {
                    out.push(chars[src]);
                    out.push(chars[src]);
                }
                _ => out.push(chars[src]),
            }
        }
        out
    }

    #[test]
    fn typos_identity_at_zero() {
        assert_eq!(inject_typos("Where did I study?", 0.0, &mut rng(1)), "Where did I study?");
    }

    #[test]
    fn typos_match_replay_oracle() {
        for s in 0..200 {
            let (out, mutated) = inject_typos_counted("abc", 1.0, &mut rng(s));
            assert_eq!(mutated, 3);
            assert_eq!(out, typo_oracle("abc", 1.0, &mut rng(s)), "seed {s}");
        }
        for s in 0..200 {
            let t = "Where did I study, and when?";
            assert_eq!(inject_typos(t, 0.3, &mut rng(s)), typo_oracle(t, 0.3, &mut rng(s)));
        }
    }

    #[test]
    fn typo_rate_is_binomial() {
        let text: String = "abcdefghij".repeat(10);
        let mut r = rng(42);
        let total: usize = (0..1000).map(|_| inject_typos_counted(&text, 0.2, &mut r).1).sum();
        let mean = total as f64 / 1000.0;
        assert!((17.0..=23.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn drop_all_keeps_one() {
        let out = drop_words("where did i study", 1.0, &mut rng(3));
        assert_eq!(out.split_whitespace().count(), 1);
        assert_eq!(out, drop_words("where did i study", 1.0, &mut rng(3)));
    }

    #[test]
    fn swap_two_words() {
        assert_eq!(swap_words("hello world", 0.3, &mut rng(0)), "world hello");
        assert_eq!(swap_words("hello", 1.0, &mut rng(0)), "hello");
    }

    #[test]
    fn swap_count_matches_fraction() {
        let text = "one two three four five six seven eight nine ten";
        for s in 0..50 {
            // ceil(0.2 * 9) = 2 pairs; each moves two words.
            let out = swap_words(text, 0.2, &mut rng(s));
            let moved = out
                .split_whitespace()
                .zip(text.split_whitespace())
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(moved, 4, "{out}");
        }
    }

    #[test]
    fn synonym_forced_mapping() {
        let lex = SynonymLexicon::parse("study\tlearn\n").unwrap();
        assert_eq!(replace_synonyms("i study", 1.0, &lex, &mut rng(0)).unwrap(), "i learn");
        assert_eq!(replace_synonyms("Where did I study?", 1.0, &lex, &mut rng(0)).unwrap(), "Where did I learn?");
        assert!(matches!(
            replace_synonyms("i study", 1.0, &SynonymLexicon::default(), &mut rng(0)),
            Err(InjectionError::EmptyLexicon)
        ));
    }

    proptest::proptest! {
        #[test]
        fn operators_identity_at_zero(text in "[a-zA-Z ,.?]{0,60}", s in 0u64..1000) {
            let lex = SynonymLexicon::bundled();
            proptest::prop_assert_eq!(inject_typos(&text, 0.0, &mut rng(s)), text.clone());
            proptest::prop_assert_eq!(swap_words(&text, 0.0, &mut rng(s)), text.clone());
            proptest::prop_assert_eq!(drop_words(&text, 0.0, &mut rng(s)), text.clone());
            proptest::prop_assert_eq!(replace_synonyms(&text, 0.0, &lex, &mut rng(s)).unwrap(), text.clone());
        }

        #[test]
        fn operators_deterministic(text in "[a-z ]{0,60}", f in 0.0f64..=1.0, s in 0u64..1000) {
            let lex = SynonymLexicon::bundled();
            proptest::prop_assert_eq!(inject_typos(&text, f, &mut rng(s)), inject_typos(&text, f, &mut rng(s)));
            proptest::prop_assert_eq!(swap_words(&text, f, &mut rng(s)), swap_words(&text, f, &mut rng(s)));
            proptest::prop_assert_eq!(drop_words(&text, f, &mut rng(s)), drop_words(&text, f, &mut rng(s)));
            proptest::prop_assert_eq!(
                replace_synonyms(&text, f, &lex, &mut rng(s)).unwrap(),
                replace_synonyms(&text, f, &lex, &mut rng(s)).unwrap()
            );
        }

        #[test]
        fn swap_preserves_multiset(text in "[a-z]{1,5}( [a-z]{1,5}){0,12}", f in 0.0f64..=1.0, s in 0u64..1000) {
            let out = swap_words(&text, f, &mut rng(s));
            let mut a: Vec<&str> = text.split_whitespace().collect();
            let mut b: Vec<&str> = out.split_whitespace().collect();
            a.sort();
            b.sort();
            proptest::prop_assert_eq!(a, b);
        }
    }
}
