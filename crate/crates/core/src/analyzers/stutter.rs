//! Immediate n-gram repetition ("stuttering") score.
//!
//! For each n in `n_min..=n_max`, `c_n` counts start positions `i` whose
//! n-gram re-occurs at some `j` with `i + n <= j <= i + n + gap`. The score is
//! `sum(w_n * c_n)`, divided by the token count when `normalize_by_length`.
//! This is a harness-defined metric; absolute values are not comparable with
//! other stuttering scores.

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StutterConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// One weight per n, starting at `n_min`.
    pub weights: Vec<f64>,
    /// Maximum number of tokens allowed between two occurrences.
    pub gap: usize,
    pub normalize_by_length: bool,
}

impl Default for StutterConfig {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 6,
            weights: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            gap: 1,
            normalize_by_length: true,
        }
    }
}

impl StutterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(format!("need 1 <= n_min <= n_max, got {}..{}", self.n_min, self.n_max));
        }
        if self.weights.len() != self.n_max - self.n_min + 1 {
            return Err(format!(
                "expected {} weights, got {}",
                self.n_max - self.n_min + 1,
                self.weights.len()
            ));
        }
        if self.weights.windows(2).any(|w| w[1] <= w[0]) {
            return Err("weights must be strictly increasing in n".into());
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err("weights must be finite and non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StutterScore {
    pub score: f64,
    pub n_min: usize,
    /// `counts[k]` is `c_n` for `n = n_min + k`.
    pub counts: Vec<usize>,
}

impl StutterScore {
    pub fn count(&self, n: usize) -> usize {
        n.checked_sub(self.n_min)
            .and_then(|k| self.counts.get(k))
            .copied()
            .unwrap_or(0)
    }
}

/// Per-n repetition counts over a token sequence.
pub fn ngram_repeat_counts<T: PartialEq>(tokens: &[T], cfg: &StutterConfig) -> Vec<usize> {
    let len = tokens.len();
    (cfg.n_min..=cfg.n_max)
        .map(|n| {
            if 2 * n > len {
                return 0;
            }
            (0..=len - 2 * n)
                .filter(|&i| {
                    let gram = &tokens[i..i + n];
                    let last_j = (i + n + cfg.gap).min(len - n);
                    (i + n..=last_j).any(|j| &tokens[j..j + n] == gram)
                })
                .count()
        })
        .collect()
}

pub fn stutter_score(reply: &str, cfg: &StutterConfig) -> StutterScore {
    let tokens = tokenize(reply);
    let counts = ngram_repeat_counts(&tokens, cfg);
    let raw: f64 = counts.iter().zip(&cfg.weights).map(|(c, w)| *c as f64 * w).sum();
    let score = if cfg.normalize_by_length && !tokens.is_empty() {
        raw / tokens.len() as f64
    } else {
        raw
    };
    StutterScore {
        score,
        n_min: cfg.n_min,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_repetition_scores_zero() {
        assert_eq!(stutter_score("hello there", &StutterConfig::default()).score, 0.0);
        assert_eq!(stutter_score("", &StutterConfig::default()).score, 0.0);
    }

    #[test]
    fn always_sunny() {
        let s = stutter_score("It is always sunny and always sunny.", &StutterConfig::default());
        // Hand enumeration: only (always, sunny) at i=2 re-occurs, at j=5.
        assert_eq!(s.counts, vec![1, 0, 0, 0, 0]);
        assert!((s.score - 1.0 / 7.0).abs() < 1e-12);
        let strict = StutterConfig { gap: 0, ..StutterConfig::default() };
        assert_eq!(stutter_score("It is always sunny and always sunny.", &strict).score, 0.0);
    }

    #[test]
    fn sixty_four_zs() {
        let reply = vec!["z"; 64].join(" ");
        let s = stutter_score(&reply, &StutterConfig::default());
        assert_eq!(s.count(2), 61);
        assert_eq!(s.counts, vec![61, 59, 57, 55, 53]);
        assert!((s.score - 1695.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(StutterConfig::default().validate().is_ok());
        let bad = StutterConfig { weights: vec![1.0, 1.0, 4.0, 8.0, 16.0], ..StutterConfig::default() };
        assert!(bad.validate().is_err());
        let bad = StutterConfig { n_min: 4, n_max: 3, ..StutterConfig::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn distinct_tokens_score_zero(n in 0usize..40) {
            let reply: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
            prop_assert_eq!(stutter_score(&reply.join(" "), &StutterConfig::default()).score, 0.0);
        }

        #[test]
        fn duplicating_never_decreases_counts(tokens in proptest::collection::vec(0u8..4, 0..20)) {
            let cfg = StutterConfig::default();
            let doubled: Vec<u8> = tokens.iter().chain(tokens.iter()).copied().collect();
            let a = ngram_repeat_counts(&tokens, &cfg);
            let b = ngram_repeat_counts(&doubled, &cfg);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(y >= x);
            }
        }
    }
}
