//! Scorer clients: HTTP implementations of the scorer wire protocol and
//! deterministic offline stand-ins.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bundled;
use crate::error::ScorerError;
use crate::gateway::http::{build_client, join_url, post_json, PostError};
use crate::text::{content_tokens, contains_run, sentences, tokenize};

pub const TOXICITY_CATEGORIES: [&str; 7] = [
    "toxicity",
    "severe_toxicity",
    "obscene",
    "threat",
    "insult",
    "identity_attack",
    "sexually_explicit",
];

/// Seven normalized toxicity categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToxicityScores {
    pub toxicity: f64,
    pub severe_toxicity: f64,
    pub obscene: f64,
    pub threat: f64,
    pub insult: f64,
    pub identity_attack: f64,
    pub sexually_explicit: f64,
}

impl ToxicityScores {
    pub fn values(&self) -> [f64; 7] {
        [
            self.toxicity,
            self.severe_toxicity,
            self.obscene,
            self.threat,
            self.insult,
            self.identity_attack,
            self.sexually_explicit,
        ]
    }

    pub fn get_mut(&mut self, category: &str) -> Option<&mut f64> {
        Some(match category {
            "toxicity" => &mut self.toxicity,
            "severe_toxicity" => &mut self.severe_toxicity,
            "obscene" => &mut self.obscene,
            "threat" => &mut self.threat,
            "insult" => &mut self.insult,
            "identity_attack" => &mut self.identity_attack,
            "sexually_explicit" => &mut self.sexually_explicit,
            _ => return None,
        })
    }

    /// Highest category; the first in canonical order wins ties.
    pub fn max_category(&self) -> (&'static str, f64) {
        let mut best = (TOXICITY_CATEGORIES[0], self.toxicity);
        for (name, v) in TOXICITY_CATEGORIES.iter().zip(self.values()) {
            if v > best.1 {
                best = (name, v);
            }
        }
        best
    }

    pub fn is_valid(&self) -> bool {
        self.values().iter().all(|v| (0.0..=1.0).contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NspPair {
    pub context: String,
    pub candidate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaQuery {
    pub question: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaAnswer {
    pub text: String,
    pub score: f64,
}

pub trait ToxicityScorer: Send + Sync {
    fn score(&self, texts: &[String]) -> Result<Vec<ToxicityScores>, ScorerError>;
}

pub trait NspScorer: Send + Sync {
    fn p_next(&self, pairs: &[NspPair]) -> Result<Vec<f64>, ScorerError>;
}

pub trait QaScorer: Send + Sync {
    fn answer(&self, items: &[QaQuery]) -> Result<Vec<QaAnswer>, ScorerError>;
}

// ---- wire bodies ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToxicityResponse {
    pub scores: Vec<ToxicityScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NspRequest {
    pub pairs: Vec<NspPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NspResponse {
    pub p_next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRequest {
    pub items: Vec<QaQuery>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaResponse {
    pub answers: Vec<QaAnswer>,
}

// ---- HTTP clients ----

/// One scorer endpoint; `path` is appended to the configured base URL.
#[derive(Debug, Clone)]
pub struct HttpScorer {
    client: reqwest::blocking::Client,
    url: String,
    max_retries: u32,
}

impl HttpScorer {
    pub fn new(base_url: &str, path: &str, timeout_ms: u64, max_retries: u32) -> Result<Self, ScorerError> {
        Ok(Self {
            client: build_client(timeout_ms).map_err(ScorerError::Unavailable)?,
            url: join_url(base_url, path),
            max_retries,
        })
    }

    fn call<B: Serialize, R: serde::de::DeserializeOwned>(&self, body: &B) -> Result<R, ScorerError> {
        post_json(&self.client, &self.url, body, self.max_retries).map_err(|e| match e {
            PostError::Unavailable(m) => ScorerError::Unavailable(format!("{}: {m}", self.url)),
            PostError::Protocol(m) => ScorerError::Protocol(m),
        })
    }
}

fn check_len(url: &str, got: usize, want: usize) -> Result<(), ScorerError> {
    if got == want {
        Ok(())
    } else {
        Err(ScorerError::Protocol(format!("{url}: {got} results for {want} inputs")))
    }
}

impl ToxicityScorer for HttpScorer {
    fn score(&self, texts: &[String]) -> Result<Vec<ToxicityScores>, ScorerError> {
        let resp: ToxicityResponse = self.call(&ToxicityRequest { texts: texts.to_vec() })?;
        check_len(&self.url, resp.scores.len(), texts.len())?;
        if let Some(bad) = resp.scores.iter().find(|s| !s.is_valid()) {
            return Err(ScorerError::Protocol(format!("{}: score out of [0,1]: {bad:?}", self.url)));
        }
        Ok(resp.scores)
    }
}

impl NspScorer for HttpScorer {
    fn p_next(&self, pairs: &[NspPair]) -> Result<Vec<f64>, ScorerError> {
        let resp: NspResponse = self.call(&NspRequest { pairs: pairs.to_vec() })?;
        check_len(&self.url, resp.p_next.len(), pairs.len())?;
        Ok(resp.p_next)
    }
}

impl QaScorer for HttpScorer {
    fn answer(&self, items: &[QaQuery]) -> Result<Vec<QaAnswer>, ScorerError> {
        let resp: QaResponse = self.call(&QaRequest { items: items.to_vec() })?;
        check_len(&self.url, resp.answers.len(), items.len())?;
        Ok(resp.answers)
    }
}

// ---- offline stubs ----

/// Phrase to category table for the lexicon toxicity stub.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToxicityLexicon {
    pub entries: Vec<(Vec<String>, String)>,
}

impl ToxicityLexicon {
    /// Parses `phrase<TAB>category` lines.
    pub fn parse(src: &str) -> Result<Self, ScorerError> {
        let mut entries = Vec::new();
        for (n, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (phrase, cat) = line
                .split_once('\t')
                .ok_or_else(|| ScorerError::Protocol(format!("lexicon line {}: missing tab", n + 1)))?;
            let cat = cat.trim();
            if !TOXICITY_CATEGORIES.contains(&cat) {
                return Err(ScorerError::Protocol(format!("lexicon line {}: unknown category {cat}", n + 1)));
            }
            let tokens = tokenize(phrase);
            if tokens.is_empty() {
                return Err(ScorerError::Protocol(format!("lexicon line {}: empty phrase", n + 1)));
            }
            entries.push((tokens, cat.to_string()));
        }
        Ok(Self { entries })
    }

    pub fn bundled() -> Self {
        Self::parse(bundled::TOXICITY_LEXICON).expect("bundled lexicon parses")
    }
}

/// Value assigned to a category when one of its phrases occurs.
pub const LEXICON_HIT: f64 = 0.9;

pub fn score_toxicity_stub(texts: &[String], lexicon: &ToxicityLexicon) -> Vec<ToxicityScores> {
    texts
        .iter()
        .map(|t| {
            let tokens = tokenize(t);
            let mut s = ToxicityScores::default();
            for (phrase, cat) in &lexicon.entries {
                if contains_run(&tokens, phrase) {
                    if let Some(v) = s.get_mut(cat) {
                        *v = LEXICON_HIT;
                    }
                }
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LexiconToxicity(pub ToxicityLexicon);

impl ToxicityScorer for LexiconToxicity {
    fn score(&self, texts: &[String]) -> Result<Vec<ToxicityScores>, ScorerError> {
        Ok(score_toxicity_stub(texts, &self.0))
    }
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Jaccard similarity of normalized token sets.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let a: BTreeSet<String> = tokenize(a).into_iter().collect();
    let b: BTreeSet<String> = tokenize(b).into_iter().collect();
    jaccard(&a, &b)
}

/// NSP stand-in: token-set Jaccard between candidate and context.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapNsp;

impl NspScorer for OverlapNsp {
    fn p_next(&self, pairs: &[NspPair]) -> Result<Vec<f64>, ScorerError> {
        Ok(pairs.iter().map(|p| token_jaccard(&p.context, &p.candidate)).collect())
    }
}

/// NSP stand-in returning a fixed probability.
#[derive(Debug, Clone, Copy)]
pub struct ConstNsp(pub f64);

impl NspScorer for ConstNsp {
    fn p_next(&self, pairs: &[NspPair]) -> Result<Vec<f64>, ScorerError> {
        Ok(vec![self.0; pairs.len()])
    }
}

/// Extractive QA stand-in.
///
/// The answer is the stretch of the context from the first to the last
/// sentence that shares a content token with the question (confidence 1.0),
/// or empty with confidence 0.0 when no sentence does.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapQa;

pub fn extract_answer_stub(question: &str, context: &str) -> QaAnswer {
    let wanted: BTreeSet<String> = content_tokens(question).into_iter().collect();
    let base = context.as_ptr() as usize;
    let mut first: Option<usize> = None;
    let mut last_end = 0;
    for s in sentences(context) {
        let shares = content_tokens(s.text).iter().any(|t| wanted.contains(t));
        if shares {
            let start = s.text.as_ptr() as usize - base;
            let end = start + s.text.len() + s.terminator.map_or(0, char::len_utf8);
            first.get_or_insert(start);
            last_end = end;
        }
    }
    match first {
        Some(start) => QaAnswer {
            text: context[start..last_end.min(context.len())].to_string(),
            score: 1.0,
        },
        None => QaAnswer {
            text: String::new(),
            score: 0.0,
        },
    }
}

impl QaScorer for OverlapQa {
    fn answer(&self, items: &[QaQuery]) -> Result<Vec<QaAnswer>, ScorerError> {
        Ok(items
            .iter()
            .map(|q| extract_answer_stub(&q.question, &q.context))
            .collect())
    }
}

// ---- configuration ----

fn d_timeout() -> u64 {
    30_000
}

fn d_retries() -> u32 {
    2
}

/// Scorer locations: an `http(s)://` base URL or `stub:<name>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerEndpoints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toxicity_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nsp_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa_url: Option<String>,
    #[serde(default = "d_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "d_retries")]
    pub max_retries: u32,
}

impl Default for ScorerEndpoints {
    fn default() -> Self {
        Self {
            toxicity_url: None,
            nsp_url: None,
            qa_url: None,
            timeout_ms: d_timeout(),
            max_retries: d_retries(),
        }
    }
}

enum Location<'a> {
    Stub(&'a str),
    Http(&'a str),
}

fn locate(v: &str) -> Result<Location<'_>, String> {
    if let Some(name) = v.strip_prefix("stub:") {
        Ok(Location::Stub(name))
    } else if v.starts_with("http://") || v.starts_with("https://") {
        Ok(Location::Http(v))
    } else {
        Err(format!("{v:?} is neither stub:<name> nor an http(s) URL"))
    }
}

fn parse_const(name: &str) -> Option<f64> {
    name.strip_prefix("const=")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| (0.0..=1.0).contains(v))
}

impl ScorerEndpoints {
    /// All three scorers backed by offline stubs.
    pub fn stubs() -> Self {
        Self {
            toxicity_url: Some("stub:lexicon".into()),
            nsp_url: Some("stub:overlap".into()),
            qa_url: Some("stub:overlap".into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.timeout_ms == 0 {
            return Err("timeout_ms must be > 0".into());
        }
        if let Some(v) = &self.toxicity_url {
            if let Location::Stub(n) = locate(v)? {
                if n != "lexicon" {
                    return Err(format!("unknown toxicity stub {n:?}"));
                }
            }
        }
        if let Some(v) = &self.nsp_url {
            if let Location::Stub(n) = locate(v)? {
                if n != "overlap" && parse_const(n).is_none() {
                    return Err(format!("unknown nsp stub {n:?}"));
                }
            }
        }
        if let Some(v) = &self.qa_url {
            if let Location::Stub(n) = locate(v)? {
                if n != "overlap" {
                    return Err(format!("unknown qa stub {n:?}"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, lexicon: &ToxicityLexicon) -> Result<ScorerSet, ScorerError> {
        self.validate().map_err(ScorerError::Protocol)?;
        let http = |url: &str, path: &str| HttpScorer::new(url, path, self.timeout_ms, self.max_retries);
        let toxicity: Option<Box<dyn ToxicityScorer>> = match self.toxicity_url.as_deref().map(locate) {
            None => None,
            Some(Ok(Location::Stub(_))) => Some(Box::new(LexiconToxicity(lexicon.clone()))),
            Some(Ok(Location::Http(u))) => Some(Box::new(http(u, "/v1/score/toxicity")?)),
            Some(Err(e)) => return Err(ScorerError::Protocol(e)),
        };
        let nsp: Option<Box<dyn NspScorer>> = match self.nsp_url.as_deref().map(locate) {
            None => None,
            Some(Ok(Location::Stub(n))) => match parse_const(n) {
                Some(v) => Some(Box::new(ConstNsp(v))),
                None => Some(Box::new(OverlapNsp)),
            },
            Some(Ok(Location::Http(u))) => Some(Box::new(http(u, "/v1/score/nsp")?)),
            Some(Err(e)) => return Err(ScorerError::Protocol(e)),
        };
        let qa: Option<Box<dyn QaScorer>> = match self.qa_url.as_deref().map(locate) {
            None => None,
            Some(Ok(Location::Stub(_))) => Some(Box::new(OverlapQa)),
            Some(Ok(Location::Http(u))) => Some(Box::new(http(u, "/v1/score/qa")?)),
            Some(Err(e)) => return Err(ScorerError::Protocol(e)),
        };
        Ok(ScorerSet { toxicity, nsp, qa })
    }
}

/// Built scorer clients; `None` means not configured.
#[derive(Default)]
pub struct ScorerSet {
    pub toxicity: Option<Box<dyn ToxicityScorer>>,
    pub nsp: Option<Box<dyn NspScorer>>,
    pub qa: Option<Box<dyn QaScorer>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_stub() {
        let lex = ToxicityLexicon::parse("you idiot\tinsult\nshut up\ttoxicity\n").unwrap();
        let s = score_toxicity_stub(
            &["Well, you idiot.".into(), "A clean reply".into(), "Shut up, you idiot!".into()],
            &lex,
        );
        assert_eq!(s[0].insult, LEXICON_HIT);
        assert_eq!(s[0].toxicity, 0.0);
        assert_eq!(s[1], ToxicityScores::default());
        assert_eq!((s[2].insult, s[2].toxicity), (LEXICON_HIT, LEXICON_HIT));
        assert!(ToxicityLexicon::parse("x\tbogus").is_err());
        assert_eq!(ToxicityLexicon::bundled().entries.len(), 10);
    }

    #[test]
    fn qa_stub_extracts_overlapping_sentences() {
        let a = extract_answer_stub("Where did I study?", "I studied at Shiraz University");
        assert_eq!(a.text, "I studied at Shiraz University");
        assert_eq!(a.score, 1.0);
        let a = extract_answer_stub("Where did I study?", "Hello! I studied at Shiraz. Nice day.");
        assert_eq!(a.text, "I studied at Shiraz.");
        let a = extract_answer_stub("Where did I study?", "Nice weather today.");
        assert_eq!(a, QaAnswer { text: String::new(), score: 0.0 });
    }

    #[test]
    fn nsp_stubs() {
        let pairs = vec![NspPair { context: "a b c".into(), candidate: "a b".into() }];
        assert!((OverlapNsp.p_next(&pairs).unwrap()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(ConstNsp(0.9).p_next(&pairs).unwrap(), vec![0.9]);
    }

    #[test]
    fn endpoints_validation() {
        assert!(ScorerEndpoints::stubs().validate().is_ok());
        let mut e = ScorerEndpoints::stubs();
        e.nsp_url = Some("stub:const=0.2".into());
        assert!(e.validate().is_ok());
        e.nsp_url = Some("stub:const=2".into());
        assert!(e.validate().is_err());
        e.nsp_url = Some("ftp://x".into());
        assert!(e.validate().is_err());
        let set = ScorerEndpoints::default().build(&ToxicityLexicon::bundled()).unwrap();
        assert!(set.toxicity.is_none() && set.nsp.is_none() && set.qa.is_none());
    }

    #[test]
    fn wire_shapes() {
        let req = NspRequest { pairs: vec![NspPair { context: "c".into(), candidate: "x".into() }] };
        assert_eq!(serde_json::to_string(&req).unwrap(), r#"{"pairs":[{"context":"c","candidate":"x"}]}"#);
        let req = QaRequest { items: vec![QaQuery { question: "q".into(), context: "c".into() }] };
        assert_eq!(serde_json::to_string(&req).unwrap(), r#"{"items":[{"question":"q","context":"c"}]}"#);
        let resp: ToxicityResponse = serde_json::from_str(
            r#"{"scores":[{"toxicity":0.2,"severe_toxicity":0,"obscene":0,"threat":0,"insult":0.5,"identity_attack":0,"sexually_explicit":0}]}"#,
        )
        .unwrap();
        assert_eq!(resp.scores[0].max_category(), ("insult", 0.5));
        assert!(serde_json::from_str::<ToxicityResponse>(r#"{"scores":[{"toxicity":0.2}]}"#).is_err());
    }
}
