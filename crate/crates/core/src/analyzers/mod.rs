//! After-the-fact verdict computation over recorded dialogs.

pub mod coherence;
pub mod dialog;
pub mod nagging;
pub mod qa;
pub mod scorers;
pub mod stutter;
pub mod toxicity;

pub use coherence::{coherence_from_scores, dialog_coherence, reply_coherence, CoherenceResult};
pub use dialog::{analyze_dialog, AnalysisContext, DIALOG_INSTANCE};
pub use nagging::{count_nags, question_sentences, NagReport};
pub use qa::{assess_closed, assess_open, assess_open_lenient, self_consistency, OpenAssessment};
pub use scorers::{
    score_toxicity_stub, ConstNsp, HttpScorer, LexiconToxicity, NspPair, NspScorer, OverlapNsp, OverlapQa, QaAnswer,
    QaQuery, QaScorer, ScorerEndpoints, ScorerSet, ToxicityLexicon, ToxicityScorer, ToxicityScores,
};
pub use stutter::{ngram_repeat_counts, stutter_score, StutterConfig, StutterScore};
pub use toxicity::{toxicity_verdict, ToxicityVerdict};
