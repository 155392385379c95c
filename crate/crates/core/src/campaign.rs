//! Generation and analysis phases, transcript and verdict persistence, and
//! noise sweeps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyzers::{analyze_dialog, AnalysisContext, ScorerSet, ToxicityLexicon};
use crate::bundled;
use crate::config::{CampaignConfig, GeneratorSpec};
use crate::error::{ConfigError, Error, GatewayError, Result};
use crate::exec::Executor;
use crate::gateway::{generator_prompt, next_reply, ChatGenerator, ChatSource, CorpusGenerator, PromptGenerator};
use crate::injection::{noise_kind_for, plan_dialog, realize_prompt, ControlledTestData, SlotAction, SynonymLexicon};
use crate::model::{canonicalize, Dialog, Outcome, Speaker, Verdict};
use crate::registry::RequirementRegistry;
use crate::seed;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_or(path: Option<&Path>, fallback: &str) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(io_err(p)),
        None => Ok(fallback.to_string()),
    }
}

/// Controlled test data, synonym and toxicity lexicons, loaded from the
/// configured paths or the bundled defaults.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub test_data: ControlledTestData,
    pub synonyms: SynonymLexicon,
    pub toxicity_lexicon: ToxicityLexicon,
}

impl DataSet {
    pub fn load(cfg: &CampaignConfig) -> Result<Self> {
        let d = &cfg.data;
        Ok(Self {
            test_data: ControlledTestData::from_json(&read_or(d.test_data.as_deref(), bundled::TEST_DATA)?)?,
            synonyms: SynonymLexicon::parse(&read_or(d.synonyms.as_deref(), bundled::SYNONYMS)?)?,
            toxicity_lexicon: ToxicityLexicon::parse(&read_or(
                d.toxicity_lexicon.as_deref(),
                bundled::TOXICITY_LEXICON,
            )?)?,
        })
    }
}

pub fn build_generator(spec: &GeneratorSpec) -> Result<Box<dyn PromptGenerator>> {
    Ok(match spec {
        GeneratorSpec::Corpus { path: None } => Box::new(CorpusGenerator::bundled()),
        GeneratorSpec::Corpus { path: Some(p) } => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            Box::new(CorpusGenerator::new(bundled::lines(&text))?)
        }
        GeneratorSpec::Http(c) => Box::new(ChatGenerator::new(crate::gateway::SourceSpec::Http(c.clone()).build()?)),
        GeneratorSpec::Stub(s) => Box::new(ChatGenerator::new(crate::gateway::SourceSpec::Stub(s.clone()).build()?)),
    })
}

pub fn dialog_id(index: usize) -> String {
    format!("d{index:05}")
}

/// Everything the generation phase needs, built once per campaign.
pub struct Generation<'a> {
    pub config: &'a CampaignConfig,
    pub registry: RequirementRegistry,
    pub data: &'a DataSet,
    pub model: Box<dyn ChatSource>,
    pub generator: Box<dyn PromptGenerator>,
    pub model_id: String,
}

impl<'a> Generation<'a> {
    pub fn new(config: &'a CampaignConfig, data: &'a DataSet) -> Result<Self> {
        Ok(Self {
            config,
            registry: config.registry(),
            data,
            model: config.model_under_test.build()?,
            generator: build_generator(&config.generator)?,
            model_id: config.model_id(),
        })
    }

    /// Runs one dialog. Gateway failures end the dialog early and are
    /// recorded in `Dialog::error`; anything else is a campaign error.
    pub fn dialog(&self, index: usize) -> Result<Dialog> {
        let cfg = self.config;
        let dseed = seed::dialog_seed(cfg.campaign_seed, index as u64);
        let id = dialog_id(index);
        let plan = plan_dialog(cfg, &self.registry, &self.data.test_data, dseed)?;
        let mut dialog = Dialog::new(id.clone(), dseed, self.model_id.clone());
        dialog.dropped = plan.dropped.clone();
        for action in &plan.slots {
            let (prompt, tag) = match action {
                SlotAction::Generator => match generator_prompt(&id, dseed, &dialog.turns, self.generator.as_ref()) {
                    Ok(p) => (p, None),
                    Err(e) => return Ok(abort(dialog, "generator", &e)),
                },
                SlotAction::Inject { instance, phase } => {
                    let inst = &plan.test_instances[*instance];
                    let (p, tag) = realize_prompt(inst, *phase, &self.data.test_data, &self.data.synonyms)?;
                    (p, Some(tag))
                }
            };
            dialog.push(Speaker::Tester, prompt, tag);
            match next_reply(&id, &dialog.turns, self.model.as_ref()) {
                Ok(r) => dialog.push(Speaker::Model, r, None),
                Err(e) => {
                    dialog.turns.pop();
                    return Ok(abort(dialog, "model", &e));
                }
            }
        }
        Ok(dialog)
    }
}

fn abort(mut dialog: Dialog, side: &str, e: &GatewayError) -> Dialog {
    tracing::warn!(dialog_id = %dialog.dialog_id, "{side} failed: {e}");
    dialog.error = Some(format!("{side}: {e}"));
    dialog
}

/// Generation phase. Dialogs are handed to `sink` in index order as they
/// complete; the full set is returned as well.
pub fn run_campaign_with(
    cfg: &CampaignConfig,
    data: &DataSet,
    exec: &Executor,
    mut sink: impl FnMut(&Dialog) -> Result<()>,
) -> Result<Vec<Dialog>> {
    let generation = Generation::new(cfg, data)?;
    let mut out = Vec::with_capacity(cfg.n_dialogs);
    exec.for_each_ordered(
        cfg.n_dialogs,
        |i| generation.dialog(i),
        |_, d| {
            let d = d?;
            sink(&d)?;
            out.push(d);
            Ok::<_, Error>(())
        },
    )?;
    let errored = out.iter().filter(|d| d.error.is_some()).count();
    tracing::info!(dialogs = out.len(), errored, "generation finished");
    Ok(out)
}

pub fn run_campaign(cfg: &CampaignConfig, data: &DataSet, exec: &Executor) -> Result<Vec<Dialog>> {
    run_campaign_with(cfg, data, exec, |_| Ok(()))
}

/// Analysis phase over recorded dialogs; verdicts come back canonically
/// ordered.
pub fn analyze(dialogs: &[Dialog], cfg: &CampaignConfig, data: &DataSet, exec: &Executor) -> Result<Vec<Verdict>> {
    let registry = cfg.registry();
    let scorers: ScorerSet = cfg.scorers.build(&data.toxicity_lexicon)?;
    let ctx = AnalysisContext::new(cfg, &registry, &data.test_data, &scorers);
    let mut out: Vec<Verdict> = exec.map(dialogs.len(), |i| analyze_dialog(&dialogs[i], &ctx)).into_iter().flatten().collect();
    canonicalize(&mut out);
    Ok(out)
}

/// Writes one JSON object per line with LF endings.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = JsonlWriter::create(path)?;
    for item in items {
        w.write(item)?;
    }
    w.finish()
}

/// Single appending writer for JSON-lines files.
pub struct JsonlWriter {
    path: std::path::PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(File::create(path).map_err(io_err(path))?),
        })
    }

    pub fn write<T: Serialize>(&mut self, item: &T) -> Result<()> {
        let line = serde_json::to_string(item).map_err(|e| Error::Parse {
            path: self.path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        self.out.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        self.out.write_all(b"\n").map_err(io_err(&self.path))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(io_err(&self.path))
    }
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Reads and validates a transcript file.
pub fn read_transcripts(path: &Path) -> Result<Vec<Dialog>> {
    let dialogs: Vec<Dialog> = read_jsonl(path)?;
    for d in &dialogs {
        d.validate()?;
    }
    Ok(dialogs)
}

/// Reads a verdict file and checks every requirement id and evidence rule.
pub fn read_verdicts(path: &Path) -> Result<Vec<Verdict>> {
    let verdicts: Vec<Verdict> = read_jsonl(path)?;
    let registry = RequirementRegistry::default();
    for v in &verdicts {
        if !registry.contains(&v.requirement_id) {
            return Err(crate::error::ModelError::InvalidVerdict {
                dialog_id: v.dialog_id.clone(),
                requirement_id: v.requirement_id.clone(),
                reason: "unknown requirement".into(),
            }
            .into());
        }
        v.validate()?;
    }
    Ok(verdicts)
}

/// Share of passing verdicts among non-skipped ones.
pub fn success_rate<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Option<f64> {
    let (mut pass, mut total) = (0usize, 0usize);
    for v in verdicts {
        match v.outcome {
            Outcome::Pass => {
                pass += 1;
                total += 1;
            }
            Outcome::Fail => total += 1,
            Outcome::Skip => {}
        }
    }
    (total > 0).then(|| pass as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub fraction: f64,
    /// Q-A success rate per noise requirement; `None` when nothing was
    /// evaluated.
    pub success_rate: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub fraction: f64,
    pub dialogs: Vec<Dialog>,
    pub verdicts: Vec<Verdict>,
}

/// One campaign per fraction with the same campaign seed; both `f_char` and
/// `f_word` are set to the fraction.
pub fn sweep_noise(
    cfg: &CampaignConfig,
    fractions: &[f64],
    data: &DataSet,
    exec: &Executor,
) -> Result<(Vec<SweepRun>, Vec<SweepPoint>)> {
    if fractions.is_empty() {
        return Err(ConfigError::range("noise_sweep", "fraction list is empty").into());
    }
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(ConfigError::range("noise_sweep", format!("{f} not in [0, 1]")).into());
    }
    let noisy: Vec<String> = cfg
        .registry()
        .enabled_qa()
        .filter(|id| noise_kind_for(id).is_some())
        .map(str::to_string)
        .collect();
    if noisy.is_empty() {
        return Err(ConfigError::range("requirements", "a sweep needs at least one of U3-U6 enabled").into());
    }
    let mut runs = Vec::new();
    let mut points = Vec::new();
    for &fraction in fractions {
        let mut c = cfg.clone();
        c.f_char = fraction;
        c.f_word = fraction;
        let dialogs = run_campaign(&c, data, exec)?;
        let verdicts = analyze(&dialogs, &c, data, exec)?;
        let success_rate = noisy
            .iter()
            .map(|id| (id.clone(), success_rate(verdicts.iter().filter(|v| &v.requirement_id == id))))
            .collect();
        points.push(SweepPoint { fraction, success_rate });
        runs.push(SweepRun { fraction, dialogs, verdicts });
    }
    Ok((runs, points))
}
