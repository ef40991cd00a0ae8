//! CSV outputs. Every file starts with a `# config_hash: <hash>` comment
//! line followed by a header row.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::wire::write_atomic;
use crate::distill::SweepRow;
use crate::error::{Error, FormatError, Result};
use crate::eval::EvalReport;
use crate::ppo::CurvePoint;

/// One line of an evaluation CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub env: String,
    pub agent: String,
    pub episodes: usize,
    pub mean: f64,
    pub std: f64,
    pub high: f64,
}

impl EvalRow {
    pub fn from_report(env: &str, agent: &str, report: &EvalReport) -> Self {
        Self {
            env: env.to_string(),
            agent: agent.to_string(),
            episodes: report.episodes,
            mean: report.mean,
            std: report.std,
            high: report.high,
        }
    }
}

fn render<R: Serialize>(config_hash: &str, header: Option<&[&str]>, rows: &[R]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header.is_none())
        .from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h).expect("writing to memory");
    }
    for r in rows {
        w.serialize(r).expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8");
    format!("# config_hash: {config_hash}\n{body}")
}

pub fn learning_curve_csv(curve: &[CurvePoint], config_hash: &str) -> String {
    let rows: Vec<_> = curve
        .iter()
        .map(|p| (p.env_steps, p.mean_return, p.std_return, p.episodes))
        .collect();
    render(
        config_hash,
        Some(&["env_steps", "mean_return", "std_return", "episodes"]),
        &rows,
    )
}

pub fn loss_curve_csv(losses: &[f64], config_hash: &str) -> String {
    let rows: Vec<_> = losses.iter().enumerate().map(|(i, l)| (i + 1, l)).collect();
    render(config_hash, Some(&["epoch", "loss"]), &rows)
}

pub fn eval_csv(rows: &[EvalRow], config_hash: &str) -> String {
    render(config_hash, None, rows)
}

pub fn sweep_csv(rows: &[SweepRow], config_hash: &str) -> String {
    let rows: Vec<_> = rows
        .iter()
        .map(|r| {
            let hidden: Vec<String> = r.tier.hidden.iter().map(|w| w.to_string()).collect();
            (
                r.tier.tier.as_str(),
                hidden.join("x"),
                r.epochs,
                r.final_loss,
                r.report.episodes,
                r.report.mean,
                r.report.std,
                r.report.high,
                r.report.standard_error(),
            )
        })
        .collect();
    render(
        config_hash,
        Some(&[
            "tier", "hidden", "epochs", "final_loss", "episodes", "mean", "std", "high", "std_error",
        ]),
        &rows,
    )
}

/// Reads an evaluation CSV, skipping `#` comment lines.
pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalRow>> {
    let malformed = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, FormatError::Malformed(format!("{other:?}"))),
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(malformed)?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<EvalRow>, _>>()
        .map_err(malformed)?;
    if rows.is_empty() {
        return Err(Error::format(path, FormatError::Malformed("no rows".into())));
    }
    Ok(rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}
