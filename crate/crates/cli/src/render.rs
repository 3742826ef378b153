//! Text, CSV and Markdown renderings of an [`AnalysisReport`].

use std::fmt::Write as _;

use crate::analysis::{AnalysisReport, GroupSummary, OmnibusStatus};

/// Summary rows grouped by size: ascending `n`, then descending mean.
fn grouped_rows(report: &AnalysisReport) -> Vec<&GroupSummary> {
    let mut rows: Vec<&GroupSummary> = report.summaries.iter().collect();
    rows.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(b.bootstrap.mean.total_cmp(&a.bootstrap.mean))
            .then(a.backend.cmp(&b.backend))
    });
    rows
}

fn csv_string(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Plot-ready data: one row per `(backend, n)` with the bootstrap mean and bounds.
pub fn plot_data(report: &AnalysisReport) -> Result<String, csv::Error> {
    csv_string(
        &["n", "backend", "mean", "lo", "hi"],
        report.summaries.iter().map(|s| {
            vec![
                s.n.to_string(),
                s.backend.clone(),
                format!("{:e}", s.bootstrap.mean),
                format!("{:e}", s.bootstrap.lo),
                format!("{:e}", s.bootstrap.hi),
            ]
        }),
    )
}

/// Summary table as CSV, grouped by size.
pub fn summary_csv(report: &AnalysisReport) -> Result<String, csv::Error> {
    csv_string(
        &["n", "backend", "trials", "mean", "lo", "hi", "std"],
        grouped_rows(report).into_iter().map(|s| {
            vec![
                s.n.to_string(),
                s.backend.clone(),
                s.trials.to_string(),
                format!("{:e}", s.bootstrap.mean),
                format!("{:e}", s.bootstrap.lo),
                format!("{:e}", s.bootstrap.hi),
                s.sample_std.map(|v| format!("{v:e}")).unwrap_or_default(),
            ]
        }),
    )
}

pub fn json(report: &AnalysisReport) -> serde_json::Result<String> {
    serde_json::to_string_pretty(report).map(|s| s + "\n")
}

fn flops(v: f64) -> String {
    format!("{:.4e}", v)
}

/// Plain-text report for a terminal.
pub fn table(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let pct = report.level * 100.0;
    let name_w = report
        .summaries
        .iter()
        .map(|s| s.backend.len())
        .max()
        .unwrap_or(0)
        .max("backend".len());

    for size in &report.sizes {
        let _ = writeln!(out, "n = {}", size.n);
        let _ = writeln!(
            out,
            "  {:<name_w$}  {:>6}  {:>11}  {:>11}  {:>11}",
            "backend", "trials", "mean FLOPS", format!("{pct}% lo"), format!("{pct}% hi"),
        );
        for s in grouped_rows(report).into_iter().filter(|s| s.n == size.n) {
            let _ = writeln!(
                out,
                "  {:<name_w$}  {:>6}  {:>11}  {:>11}  {:>11}",
                s.backend,
                s.trials,
                flops(s.bootstrap.mean),
                flops(s.bootstrap.lo),
                flops(s.bootstrap.hi),
            );
        }
        match (&size.status, &size.omnibus) {
            (OmnibusStatus::Tested, Some(a)) => {
                let verdict = if size.reject { "reject" } else { "fail to reject" };
                let _ = writeln!(
                    out,
                    "  Welch ANOVA: F* = {:.4}, df = ({}, {:.2}), p = {}  ({verdict} at alpha = {})",
                    a.f_star,
                    a.df1,
                    a.df2,
                    tilebench::stats::format_p(a.p),
                    report.alpha,
                );
            }
            _ => {
                let _ = writeln!(out, "  omnibus skipped: {}", size.note.as_deref().unwrap_or("-"));
            }
        }
        if let Some(pairs) = &size.posthoc {
            let _ = writeln!(out, "  Games-Howell:");
            for p in pairs {
                let r = &p.result;
                let _ = writeln!(
                    out,
                    "    {:<name_w$} vs {:<name_w$}  q = {:>9.3}  df = {:>7.2}  p = {:>10}{}",
                    r.a,
                    r.b,
                    r.q,
                    r.df,
                    p.p_display,
                    if r.significant { "  *" } else { "" },
                );
            }
        }
        out.push('\n');
    }

    let _ = writeln!(out, "ranking (bootstrap mean FLOPS at largest n):");
    for r in &report.ranking {
        let _ = writeln!(
            out,
            "  {:>2}. {:<name_w$}  {}  [{}, {}]  n = {}",
            r.rank,
            r.backend,
            flops(r.mean),
            flops(r.lo),
            flops(r.hi),
            r.n,
        );
    }
    out
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

/// Markdown report: the summary table grouped by size, the ranking, and the
/// significance results for each size.
pub fn markdown(report: &AnalysisReport) -> String {
    let pct = report.level * 100.0;
    let mut out = String::from("## Performance by matrix size\n\n");
    out += &md_row(&[
        "n".into(),
        "backend".into(),
        "trials".into(),
        "mean FLOPS".into(),
        format!("{pct}% CI lo"),
        format!("{pct}% CI hi"),
    ]);
    out += "| ---: | --- | ---: | ---: | ---: | ---: |\n";
    for s in grouped_rows(report) {
        out += &md_row(&[
            s.n.to_string(),
            s.backend.clone(),
            s.trials.to_string(),
            flops(s.bootstrap.mean),
            flops(s.bootstrap.lo),
            flops(s.bootstrap.hi),
        ]);
    }

    out += "\n## Ranking\n\n";
    out += "| rank | backend | n | mean FLOPS |\n| ---: | --- | ---: | ---: |\n";
    for r in &report.ranking {
        out += &md_row(&[r.rank.to_string(), r.backend.clone(), r.n.to_string(), flops(r.mean)]);
    }

    out += "\n## Significance\n\n";
    for size in &report.sizes {
        match &size.omnibus {
            Some(a) => {
                let _ = writeln!(
                    out,
                    "- n = {}: Welch F* = {:.4}, p = {}{}",
                    size.n,
                    a.f_star,
                    tilebench::stats::format_p(a.p),
                    if size.reject { " (reject)" } else { "" },
                );
            }
            None => {
                let _ = writeln!(out, "- n = {}: {}", size.n, size.note.as_deref().unwrap_or("not tested"));
            }
        }
        for p in size.posthoc.iter().flatten() {
            let _ = writeln!(
                out,
                "  - {} vs {}: p = {}{}",
                p.result.a,
                p.result.b,
                p.p_display,
                if p.result.significant { " (significant)" } else { "" },
            );
        }
    }
    out
}
