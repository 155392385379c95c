use std::fmt::Write;

use super::canonical::{format_float, to_canonical_json};
use super::{ComparisonReport, Format, Histogram, MetricSummary};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), format_float)
}

const ROWS: [&str; 6] = ["evaluated", "failed", "failed fraction", "p75 failures", "std failures", "median failures"];

fn row_values(s: &MetricSummary) -> [String; 6] {
    [
        s.dialogs_evaluated.to_string(),
        s.dialogs_failed.to_string(),
        opt(s.failed_fraction),
        opt(s.failures_p75),
        opt(s.failures_std),
        opt(s.failures_median),
    ]
}

fn flag_text(s: &MetricSummary) -> Vec<&'static str> {
    let mut out = Vec::new();
    if s.flags.unvalidated_metric {
        out.push("UNVALIDATED METRIC");
    }
    if s.flags.harness_defined_metric {
        out.push("harness-defined metric");
    }
    out
}

fn bar(count: u64, max: u64, width: usize) -> String {
    if max == 0 {
        return String::new();
    }
    "#".repeat(((count as f64 / max as f64) * width as f64).ceil() as usize)
}

fn text_histogram(h: &Histogram) -> String {
    let max = h.counts.iter().copied().max().unwrap_or(0);
    let mut out = String::new();
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(
            out,
            "[{:>9}, {:>9}) {:>6} {}",
            format_float(h.bin_edges[k]),
            format_float(h.bin_edges[k + 1]),
            c,
            bar(*c, max, 40)
        );
    }
    out
}

fn markdown(r: &ComparisonReport) -> String {
    let mut out = String::from("# Soak test report\n\n");
    let _ = writeln!(out, "Models: {}\n", r.models.join(", "));
    for g in &r.requirements {
        let _ = writeln!(out, "## {} {} [{}]\n", g.requirement_id, g.name, g.test_structure);
        let flags: Vec<&str> = g.summaries.first().map(flag_text).unwrap_or_default();
        if !flags.is_empty() {
            let _ = writeln!(out, "**{}**\n", flags.join("; "));
        }
        let _ = writeln!(out, "| metric | {} |", r.models.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(r.models.len()));
        let values: Vec<[String; 6]> = g.summaries.iter().map(row_values).collect();
        for (k, name) in ROWS.iter().enumerate() {
            let cells: Vec<&str> = values.iter().map(|v| v[k].as_str()).collect();
            let _ = writeln!(out, "| {name} | {} |", cells.join(" | "));
        }
        out.push('\n');
        for s in &g.summaries {
            let _ = writeln!(out, "Score distribution, {}:\n\n```\n{}```\n", s.model_id, text_histogram(&s.score_histogram));
        }
    }
    if !r.nagging.is_empty() {
        out.push_str("## Nagging\n\n| model | nagging dialog fraction | total nags | median nags (nagging dialogs) |\n|---|---|---|---|\n");
        for (m, s) in &r.nagging {
            let _ = writeln!(out, "| {m} | {} | {} | {} |", opt(s.nagging_dialog_fraction), s.total_nags, opt(s.median_nags_among_nagging));
        }
        out.push('\n');
    }
    if !r.toxicity.is_empty() {
        out.push_str("## Toxicity\n\n| model | replies | toxic | toxic fraction | p75 max category | std max category |\n|---|---|---|---|---|---|\n");
        for (m, s) in &r.toxicity {
            let _ = writeln!(
                out,
                "| {m} | {} | {} | {} | {} | {} |",
                s.replies,
                s.toxic_replies,
                opt(s.toxic_fraction),
                opt(s.p75_max_category_score),
                opt(s.std_max_category_score)
            );
        }
        out.push('\n');
    }
    out.push_str("## Methods\n\n");
    for m in &r.methods {
        let _ = writeln!(out, "- {m}");
    }
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn html_histogram(h: &Histogram) -> String {
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1);
    let mut out = String::from("<table class=\"hist\">");
    for (k, c) in h.counts.iter().enumerate() {
        let _ = write!(
            out,
            "<tr><td>{}</td><td>{c}</td><td><div class=\"bar\" style=\"width:{}px\"></div></td></tr>",
            esc(&format!("{}-{}", format_float(h.bin_edges[k]), format_float(h.bin_edges[k + 1]))),
            c * 200 / max
        );
    }
    out.push_str("</table>");
    out
}

fn html(r: &ComparisonReport) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Soak test report</title>\n<style>\
         table{border-collapse:collapse}td,th{border:1px solid #999;padding:2px 6px}\
         .flag{color:#b00;font-weight:bold}.bar{background:#48c;height:8px}.hist td{border:none;font-size:80%}\
         </style></head><body>\n<h1>Soak test report</h1>\n",
    );
    let _ = writeln!(out, "<p>Models: {}</p>", esc(&r.models.join(", ")));
    for g in &r.requirements {
        let _ = writeln!(out, "<h2>{} {} [{}]</h2>", esc(&g.requirement_id), esc(&g.name), esc(&g.test_structure));
        let flags: Vec<&str> = g.summaries.first().map(flag_text).unwrap_or_default();
        if !flags.is_empty() {
            let _ = writeln!(out, "<p class=\"flag\">{}</p>", esc(&flags.join("; ")));
        }
        out.push_str("<table><tr><th>metric</th>");
        for m in &r.models {
            let _ = write!(out, "<th>{}</th>", esc(m));
        }
        out.push_str("</tr>\n");
        let values: Vec<[String; 6]> = g.summaries.iter().map(row_values).collect();
        for (k, name) in ROWS.iter().enumerate() {
            let _ = write!(out, "<tr><td>{name}</td>");
            for v in &values {
                let _ = write!(out, "<td>{}</td>", esc(&v[k]));
            }
            out.push_str("</tr>\n");
        }
        out.push_str("<tr><td>distribution</td>");
        for s in &g.summaries {
            let _ = write!(out, "<td>{}</td>", html_histogram(&s.score_histogram));
        }
        out.push_str("</tr></table>\n");
    }
    if !r.nagging.is_empty() {
        out.push_str("<h2>Nagging</h2>\n<table><tr><th>model</th><th>nagging dialog fraction</th><th>total nags</th><th>median nags (nagging dialogs)</th></tr>\n");
        for (m, s) in &r.nagging {
            let _ = writeln!(
                out,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                esc(m),
                opt(s.nagging_dialog_fraction),
                s.total_nags,
                opt(s.median_nags_among_nagging)
            );
        }
        out.push_str("</table>\n");
    }
    if !r.toxicity.is_empty() {
        out.push_str("<h2>Toxicity</h2>\n<table><tr><th>model</th><th>replies</th><th>toxic</th><th>toxic fraction</th><th>p75 max category</th><th>std max category</th></tr>\n");
        for (m, s) in &r.toxicity {
            let _ = writeln!(
                out,
                "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                esc(m),
                s.replies,
                s.toxic_replies,
                opt(s.toxic_fraction),
                opt(s.p75_max_category_score),
                opt(s.std_max_category_score)
            );
        }
        out.push_str("</table>\n");
    }
    out.push_str("<h2>Methods</h2>\n<ul>\n");
    for m in &r.methods {
        let _ = writeln!(out, "<li>{}</li>", esc(m));
    }
    out.push_str("</ul>\n</body></html>\n");
    out
}

pub fn render(report: &ComparisonReport, format: Format) -> String {
    match format {
        Format::Json => {
            let v = serde_json::to_value(report).expect("report serializes");
            let mut s = to_canonical_json(&v);
            s.push('\n');
            s
        }
        Format::Markdown => markdown(report),
        Format::Html => html(report),
    }
}
