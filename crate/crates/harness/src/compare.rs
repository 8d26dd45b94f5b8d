//! Side-by-side tables of finished experiments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fedsim_core::Result;

use crate::experiment::{RunSummary, Summary};

/// Reads every summary and renders the comparison; rows are sorted by
/// strategy name, then by run id and input order.
pub fn compare(paths: &[PathBuf]) -> Result<String> {
    let mut rows: Vec<(usize, &Path, RunSummary, Vec<String>)> = Vec::new();
    let summaries = paths
        .iter()
        .map(|p| Summary::read(p))
        .collect::<Result<Vec<_>>>()?;
    for (i, (path, summary)) in paths.iter().zip(&summaries).enumerate() {
        for run in &summary.runs {
            rows.push((i, path, run.clone(), summary.clients.clone()));
        }
    }
    rows.sort_by(|a, b| (&a.2.strategy, &a.2.id, a.0).cmp(&(&b.2.strategy, &b.2.id, b.0)));
    Ok(render(&rows.iter().map(|r| (&r.2, r.3.as_slice())).collect::<Vec<_>>()))
}

fn render(rows: &[(&RunSummary, &[String])]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<12} {:>8} {:>6} {:>5} {:>8} {:>8} {:>8} {:>10} {:>8}",
        "run", "strategy", "lr", "gamma", "R", "acc", "macroF1", "wF1", "transfers", "r@thr"
    );
    for (r, _) in rows {
        let thr = r.rounds_to_threshold.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{:<28} {:<12} {:>8} {:>6} {:>5} {:>8.2} {:>8.2} {:>8.2} {:>10} {:>8}",
            r.id, r.strategy, r.lr, r.gamma, r.rounds, r.global_acc, r.macro_f1, r.weighted_f1, r.transfers, thr
        );
    }
    // per-client test accuracy of each run's final model(s)
    let _ = writeln!(out);
    let width = rows.iter().map(|(r, _)| r.client_accs.len()).max().unwrap_or(0);
    let _ = write!(out, "{:<28}", "per-client acc");
    for k in 0..width {
        let name = rows
            .iter()
            .find_map(|(_, clients)| clients.get(k).cloned())
            .unwrap_or_else(|| format!("#{k}"));
        let _ = write!(out, " {name:>10}");
    }
    let _ = writeln!(out);
    for (r, _) in rows {
        let _ = write!(out, "{:<28}", r.id);
        for acc in &r.client_accs {
            let _ = write!(out, " {acc:>10.2}");
        }
        let _ = writeln!(out);
    }
    out
}
