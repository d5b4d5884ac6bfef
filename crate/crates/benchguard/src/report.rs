//! Canonical report serialization.
//!
//! JSON output is canonical: object keys sorted, floats fixed at 6 decimals,
//! so identical reports serialize to identical bytes and golden-file tests
//! are stable across platforms. Markdown emitters render report-ready
//! tables; figure CSV carries (modality, mean_shift, ci_low, ci_high).

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{BgError, Result};
use crate::loso::LosoReport;
use crate::rankaudit::AssociationReport;
use crate::stress::StressSummary;
use crate::transfer::TransferReport;

/// Serialize any report to canonical JSON (sorted keys, 6-decimal floats,
/// trailing newline).
pub fn to_canonical_json<T: Serialize>(report: &T) -> Result<String> {
    let value =
        serde_json::to_value(report).map_err(|e| BgError::Schema(format!("serialize: {e}")))?;
    let mut out = String::new();
    write_canonical(&value, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{:.6}", n.as_f64().unwrap());
            }
        }
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:", Value::String((*key).clone()));
                write_canonical(&map[*key], out);
            }
            out.push('}');
        }
    }
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt3_opt(v: Option<f64>) -> String {
    v.map(fmt3).unwrap_or_else(|| "undefined".into())
}

/// LOSO report as a one-row table: Config | Macro-F1 | AUROC | AP |
/// TN / FP / FN / TP, plus a cutoff-stability line.
pub fn loso_markdown(config_name: &str, report: &LosoReport) -> String {
    let c = &report.pooled_confusion;
    let s = &report.cutoff_stats;
    let mut out = String::new();
    out.push_str("| Config | Macro-F1 | AUROC | AP | TN / FP / FN / TP |\n");
    out.push_str("|---|---|---|---|---|\n");
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} / {} / {} / {} |",
        config_name,
        fmt3(report.metrics.macro_f1),
        fmt3(report.auroc),
        fmt3(report.ap),
        c.tn,
        c.fp,
        c.fn_,
        c.tp
    );
    let _ = writeln!(
        out,
        "\nSelected cutoffs: mean = {}, sd = {}; median = {}; range = {}-{}",
        fmt3(s.mean),
        fmt3(s.sd),
        fmt3(s.median),
        fmt3(s.min),
        fmt3(s.max)
    );
    out
}

/// Transfer report as a Dataset | N | Macro-F1 | AUROC grid.
pub fn transfer_markdown(report: &TransferReport) -> String {
    let mut out = String::new();
    out.push_str("| Dataset | N | Macro-F1 | AUROC |\n");
    out.push_str("|---|---|---|---|\n");
    for row in &report.rows {
        let name = match row.cutoff {
            Some(c) => format!("{} >= {c}", row.target_name),
            None => row.target_name.clone(),
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            name,
            row.n,
            fmt3_opt(row.macro_f1),
            fmt3_opt(row.auroc)
        );
    }
    for flag in &report.flags {
        let _ = writeln!(out, "\n> {flag}");
    }
    out
}

/// Association report as a Statistic | Value table.
pub fn association_markdown(report: &AssociationReport) -> String {
    let mut out = String::new();
    out.push_str("| Statistic | Value |\n|---|---|\n");
    let mut push = |name: &str, value: String| {
        let _ = writeln!(out, "| {name} | {value} |");
    };
    push("Pearson correlation (CV vs official test)", format!("{:.4}", report.pearson));
    push("Spearman correlation (CV vs official test)", format!("{:.4}", report.spearman));
    push("Kendall tau", format!("{:.4}", report.kendall_tau));
    push("Discordance rate", format!("{:.4}", report.discordance_rate));
    push("Best-CV config test rank", report.best_cv_test_rank.to_string());
    push("Best-test config CV rank", report.best_test_cv_rank.to_string());
    push("Top-3 overlap", report.topk_overlap.get(&3).copied().unwrap_or(0).to_string());
    push("Top-5 overlap", report.topk_overlap.get(&5).copied().unwrap_or(0).to_string());
    push("Median absolute rank shift", format!("{}", report.median_abs_rank_shift));
    out
}

/// Figure-data CSV: one bar per modality.
pub fn stress_figure_csv(summary: &StressSummary) -> String {
    let mut out = String::from("modality,mean_shift,ci_low,ci_high\n");
    for (modality, m) in &summary.per_modality {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            modality, m.mean_shift, m.ci_low, m.ci_high
        );
    }
    out
}

/// Atomic write: temp file in the destination directory, then rename, so a
/// failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, contents)?;
    tmp.persist(path).map_err(|e| BgError::Io(e.error))?;
    Ok(())
}
