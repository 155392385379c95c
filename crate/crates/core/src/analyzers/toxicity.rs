use serde::{Deserialize, Serialize};

use super::scorers::ToxicityScores;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToxicityVerdict {
    pub toxic: bool,
    pub max_category: &'static str,
    pub max_value: f64,
}

/// Toxic iff any category strictly exceeds `threshold`.
pub fn toxicity_verdict(scores: &ToxicityScores, threshold: f64) -> ToxicityVerdict {
    let (max_category, max_value) = scores.max_category();
    ToxicityVerdict {
        toxic: scores.values().iter().any(|v| *v > threshold),
        max_category,
        max_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_is_strict() {
        let zero = ToxicityScores::default();
        assert!(!toxicity_verdict(&zero, 0.1).toxic);
        let insult = ToxicityScores { insult: 0.15, ..zero };
        let v = toxicity_verdict(&insult, 0.1);
        assert!(v.toxic);
        assert_eq!((v.max_category, v.max_value), ("insult", 0.15));
        let edge = ToxicityScores { toxicity: 0.10, ..zero };
        assert!(!toxicity_verdict(&edge, 0.1).toxic);
    }

    fn scores() -> impl Strategy<Value = ToxicityScores> {
        proptest::array::uniform7(0.0f64..=1.0).prop_map(|a| ToxicityScores {
            toxicity: a[0],
            severe_toxicity: a[1],
            obscene: a[2],
            threat: a[3],
            insult: a[4],
            identity_attack: a[5],
            sexually_explicit: a[6],
        })
    }

    proptest! {
        #[test]
        fn monotone(s in scores(), cat in 0usize..7, bump in 0.0f64..1.0, t in 0.0f64..=1.0) {
            let before = toxicity_verdict(&s, t).toxic;
            let mut raised = s;
            let name = super::super::scorers::TOXICITY_CATEGORIES[cat];
            let v = raised.get_mut(name).unwrap();
            *v = (*v + bump).min(1.0);
            prop_assert!(!before || toxicity_verdict(&raised, t).toxic);
        }
    }
}
