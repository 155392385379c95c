use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use convqa_core::campaign::{
    analyze, read_transcripts, read_verdicts, run_campaign_with, sweep_noise, write_jsonl, DataSet, JsonlWriter,
};
use convqa_core::config::{apply_env_overrides, parse_config, CampaignConfig};
use convqa_core::exec::{Execution, Executor};
use convqa_core::model::{Dialog, Verdict};
use convqa_core::report::{build_report, format_float, render, to_canonical_json, Format};

#[derive(Parser, Debug)]
#[command(name = "convqa", version, about = "Soak testing for generative dialog models")]
struct Cli {
    #[command(flatten)]
    exec: ExecArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ExecArgs {
    /// Maximum number of dialogs processed concurrently.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Process dialogs one at a time on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the generation phase and write transcripts.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze recorded transcripts and write verdicts.
    Analyze {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate one or more verdict files into a report.
    Report {
        #[arg(long, required = true)]
        verdicts: Vec<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// generate, analyze and report in one go; writes transcripts.jsonl,
    /// verdicts.jsonl and report.{json,md,html} into `--out`.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One campaign per noise fraction with shared seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated fractions; defaults to `noise_sweep` from the config.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Path, exec: &ExecArgs) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("config {}", path.display()))?;
    apply_env_overrides(&mut cfg, |k| std::env::var(k).ok())?;
    if let Some(w) = exec.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn executor(cfg: &CampaignConfig, exec: &ExecArgs) -> Executor {
    let mode = if exec.sequential { Execution::Sequential } else { Execution::Parallel };
    Executor::new(mode, cfg.workers)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn generate(cfg: &CampaignConfig, data: &DataSet, exec: &Executor, out: &Path) -> Result<Vec<Dialog>> {
    let mut writer = JsonlWriter::create(out)?;
    let dialogs = run_campaign_with(cfg, data, exec, |d| writer.write(d))?;
    writer.finish()?;
    tracing::info!(path = %out.display(), dialogs = dialogs.len(), "transcripts written");
    Ok(dialogs)
}

fn analyze_to(dialogs: &[Dialog], cfg: &CampaignConfig, data: &DataSet, exec: &Executor, out: &Path) -> Result<Vec<Verdict>> {
    let verdicts = analyze(dialogs, cfg, data, exec)?;
    write_jsonl(out, &verdicts)?;
    tracing::info!(path = %out.display(), verdicts = verdicts.len(), "verdicts written");
    Ok(verdicts)
}

fn report_to(sets: &[Vec<Verdict>], format: Format, out: &Path) -> Result<()> {
    let report = build_report(sets)?;
    write_file(out, &render(&report, format))?;
    tracing::info!(path = %out.display(), "report written");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out } => {
            let cfg = load_config(&config, &cli.exec)?;
            let data = DataSet::load(&cfg)?;
            generate(&cfg, &data, &executor(&cfg, &cli.exec), &out)?;
        }
        Command::Analyze { transcripts, config, out } => {
            let cfg = load_config(&config, &cli.exec)?;
            let data = DataSet::load(&cfg)?;
            let dialogs = read_transcripts(&transcripts)?;
            analyze_to(&dialogs, &cfg, &data, &executor(&cfg, &cli.exec), &out)?;
        }
        Command::Report { verdicts, format, out } => {
            let format: Format = format.parse()?;
            let sets = verdicts.iter().map(|p| read_verdicts(p)).collect::<Result<Vec<_>, _>>()?;
            report_to(&sets, format, &out)?;
        }
        Command::Run { config, out } => {
            let cfg = load_config(&config, &cli.exec)?;
            let data = DataSet::load(&cfg)?;
            let exec = executor(&cfg, &cli.exec);
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let dialogs = generate(&cfg, &data, &exec, &out.join("transcripts.jsonl"))?;
            let verdicts = analyze_to(&dialogs, &cfg, &data, &exec, &out.join("verdicts.jsonl"))?;
            let sets = [verdicts];
            for format in [Format::Json, Format::Markdown, Format::Html] {
                report_to(&sets, format, &out.join(format!("report.{}", format.extension())))?;
            }
        }
        Command::Sweep { config, fractions, out } => {
            let cfg = load_config(&config, &cli.exec)?;
            let fractions = fractions.or_else(|| cfg.noise_sweep.clone()).unwrap_or_default();
            let data = DataSet::load(&cfg)?;
            let exec = executor(&cfg, &cli.exec);
            let (runs, points) = sweep_noise(&cfg, &fractions, &data, &exec)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for r in &runs {
                let dir = out.join(format!("f{}", format_float(r.fraction)));
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                write_jsonl(&dir.join("transcripts.jsonl"), &r.dialogs)?;
                write_jsonl(&dir.join("verdicts.jsonl"), &r.verdicts)?;
            }
            let mut doc = to_canonical_json(&serde_json::to_value(&points)?);
            doc.push('\n');
            write_file(&out.join("sweep.json"), &doc)?;
            for p in &points {
                for (req, rate) in &p.success_rate {
                    let rate = rate.map_or_else(|| "n/a".into(), format_float);
                    tracing::info!("fraction {} {req}: success rate {rate}", format_float(p.fraction));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
