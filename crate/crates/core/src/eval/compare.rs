//! Cross-environment score summaries: geometric-mean ratios and the
//! comparison tables built from them.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `100 * geomean(a) / geomean(b)`, computed in log space.
pub fn geometric_mean_ratio(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.is_empty() || scores_a.len() != scores_b.len() {
        return Err(Error::Domain(format!(
            "geometric mean ratio needs two equal, non-empty lists (got {} and {})",
            scores_a.len(),
            scores_b.len()
        )));
    }
    let mean_log = |xs: &[f64], which: &str| -> Result<f64> {
        let mut sum = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Domain(format!(
                    "score {i} of list {which} is {x}; geometric means need positive scores"
                )));
            }
            sum += x.ln();
        }
        Ok(sum / xs.len() as f64)
    };
    Ok(100.0 * (mean_log(scores_a, "a")? - mean_log(scores_b, "b")?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreCell {
    pub mean: f64,
    pub std: f64,
    pub high: f64,
}

/// One agent's scores, keyed by environment (row) name.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreColumn {
    pub name: String,
    pub cells: Vec<(String, ScoreCell)>,
}

impl ScoreColumn {
    pub fn get(&self, row: &str) -> Option<&ScoreCell> {
        self.cells.iter().find(|(r, _)| r == row).map(|(_, c)| c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<String>,
    pub columns: Vec<ScoreColumn>,
    pub teacher: String,
    /// Per column, percent of the teacher column's geometric mean.
    pub pct_of_teacher: Vec<f64>,
    pub baseline: Option<String>,
    pub pct_of_baseline: Option<Vec<f64>>,
}

/// Builds the comparison of `columns` against `teacher` (and optionally a
/// second reference column). Rows follow the first column's order; every
/// column must cover exactly that row set.
pub fn comparison_report(
    columns: Vec<ScoreColumn>,
    teacher: &str,
    baseline: Option<&str>,
) -> Result<ComparisonTable> {
    let first = columns
        .first()
        .ok_or_else(|| Error::Config("comparison needs at least one column".into()))?;
    let rows: Vec<String> = first.cells.iter().map(|(r, _)| r.clone()).collect();
    for col in &columns {
        for row in &rows {
            if col.get(row).is_none() {
                return Err(Error::Config(format!("column {:?} has no row {row:?}", col.name)));
            }
        }
        for (row, _) in &col.cells {
            if !rows.contains(row) {
                return Err(Error::Config(format!(
                    "row {row:?} of column {:?} is missing from column {:?}",
                    col.name, first.name
                )));
            }
        }
    }
    let means = |name: &str| -> Result<Vec<f64>> {
        let col = columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Config(format!("no column named {name:?}")))?;
        Ok(rows.iter().map(|r| col.get(r).expect("checked").mean).collect())
    };
    let percent_of = |reference: &str| -> Result<Vec<f64>> {
        let reference = means(reference)?;
        columns
            .iter()
            .map(|c| geometric_mean_ratio(&means(&c.name)?, &reference))
            .collect()
    };
    let pct_of_teacher = percent_of(teacher)?;
    let pct_of_baseline = baseline.map(percent_of).transpose()?;
    Ok(ComparisonTable {
        rows,
        teacher: teacher.to_string(),
        baseline: baseline.map(str::to_string),
        pct_of_teacher,
        pct_of_baseline,
        columns,
    })
}

fn fmt_score(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

impl ComparisonTable {
    fn summary_rows(&self) -> Vec<(String, &Vec<f64>)> {
        let mut out = vec![(format!("% of {}", self.teacher), &self.pct_of_teacher)];
        if let (Some(name), Some(pct)) = (&self.baseline, &self.pct_of_baseline) {
            out.push((format!("% of {name}"), pct));
        }
        out
    }

    /// Aligned plain-text table: each cell shows `high` and `mean ± std`.
    pub fn render_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = Vec::new();
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        grid.push(header);
        for row in &self.rows {
            let mut line = vec![row.clone()];
            for col in &self.columns {
                let c = col.get(row).expect("checked at construction");
                line.push(format!(
                    "{} | {} ± {}",
                    fmt_score(c.high),
                    fmt_score(c.mean),
                    fmt_score(c.std)
                ));
            }
            grid.push(line);
        }
        for (label, pct) in self.summary_rows() {
            let mut line = vec![label];
            line.extend(pct.iter().map(|p| format!("{}%", p.round())));
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|i| grid.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &grid {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (cell, w))| {
                    let pad = w - cell.chars().count();
                    if i == 0 {
                        format!("{cell}{}", " ".repeat(pad))
                    } else {
                        format!("{}{cell}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }

    /// Long-form CSV: `row,agent,mean,std,high` per cell, then one
    /// `% of <ref>,agent,percent,,` line per summary row.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("row,agent,mean,std,high\n");
        for row in &self.rows {
            for col in &self.columns {
                let c = col.get(row).expect("checked at construction");
                let _ = writeln!(out, "{row},{},{},{},{}", col.name, c.mean, c.std, c.high);
            }
        }
        for (label, pct) in self.summary_rows() {
            for (col, p) in self.columns.iter().zip(pct.iter()) {
                let _ = writeln!(out, "{label},{},{p},,", col.name);
            }
        }
        out
    }
}
