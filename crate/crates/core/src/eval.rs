//! Per-category precision/recall for shaded and unshaded pipelines, plus CSV
//! and HTML report emitters.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Index;
use crate::search::rank_excluding;

/// Default retrieval depth.
pub const DEFAULT_K: usize = 12;

pub fn precision(relevant_retrieved: usize, retrieved: usize) -> Result<f64> {
    if retrieved == 0 {
        return Err(Error::UndefinedPrecision);
    }
    if relevant_retrieved > retrieved {
        return Err(Error::InvalidParameter(format!(
            "relevant_retrieved {relevant_retrieved} exceeds retrieved {retrieved}"
        )));
    }
    Ok(relevant_retrieved as f64 / retrieved as f64)
}

pub fn recall(relevant_retrieved: usize, relevant_in_db: usize) -> Result<f64> {
    if relevant_in_db == 0 {
        return Err(Error::UndefinedRecall);
    }
    if relevant_retrieved > relevant_in_db {
        return Err(Error::InvalidParameter(format!(
            "relevant_retrieved {relevant_retrieved} exceeds relevant_in_db {relevant_in_db}"
        )));
    }
    Ok(relevant_retrieved as f64 / relevant_in_db as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub category: String,
    pub relevant_retrieved: usize,
    pub retrieved: usize,
    pub relevant_in_db: usize,
    pub precision: f64,
    pub recall: f64,
}

impl EvalRow {
    pub fn from_counts(
        category: impl Into<String>,
        relevant_retrieved: usize,
        retrieved: usize,
        relevant_in_db: usize,
    ) -> Result<Self> {
        Ok(Self {
            category: category.into(),
            relevant_retrieved,
            retrieved,
            relevant_in_db,
            precision: precision(relevant_retrieved, retrieved)?,
            recall: recall(relevant_retrieved, relevant_in_db)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadingMode {
    Shaded,
    Unshaded,
}

impl ShadingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ShadingMode::Shaded => "shaded",
            ShadingMode::Unshaded => "unshaded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// One query per category: its lexicographically first image.
    PerCategoryFirst,
    /// Every image is a query; counts are summed over the category's queries.
    AllQueriesAveraged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub k: usize,
    pub mode: ShadingMode,
    pub rows: Vec<EvalRow>,
}

impl EvalResult {
    pub fn mean_precision(&self) -> f64 {
        self.rows.iter().map(|r| r.precision).sum::<f64>() / self.rows.len() as f64
    }

    pub fn mean_recall(&self) -> f64 {
        self.rows.iter().map(|r| r.recall).sum::<f64>() / self.rows.len() as f64
    }
}

/// Queries the index with its own images, excluding each query from its result
/// list. Relevant means same category; `relevant_in_db` is the full category
/// size. In [`QueryMode::AllQueriesAveraged`] the row's counts are totals over
/// all queries, so the ratios equal the per-query means.
pub fn run_experiment(index: &Index, k: usize, query_mode: QueryMode) -> Result<EvalResult> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut by_category: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in index.entries.iter().enumerate() {
        by_category.entry(e.category.as_str()).or_default().push(i);
    }

    let mut rows = Vec::with_capacity(by_category.len());
    for (category, members) in &by_category {
        // entries are path-sorted, so members[0] is the lexicographically first
        let queries: &[usize] = match query_mode {
            QueryMode::PerCategoryFirst => &members[..1],
            QueryMode::AllQueriesAveraged => members,
        };
        let (mut rel_ret, mut ret, mut rel_db) = (0, 0, 0);
        for &q in queries {
            let entry = &index.entries[q];
            let results = rank_excluding(&entry.features, index, k, Some(&entry.path))?;
            rel_ret += results.iter().filter(|r| r.category == *category).count();
            ret += results.len();
            rel_db += members.len();
        }
        rows.push(EvalRow::from_counts(*category, rel_ret, ret, rel_db)?);
    }
    Ok(EvalResult {
        k,
        mode: if index.phong.is_some() {
            ShadingMode::Shaded
        } else {
            ShadingMode::Unshaded
        },
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub html: PathBuf,
}

fn percent(r: f64) -> String {
    format!("{:.1}%", r * 100.0)
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn render_csv(shaded: &EvalResult, unshaded: &EvalResult) -> Result<String> {
    check_comparable(shaded, unshaded)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let write_err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
    w.write_record([
        "category",
        "mode",
        "relevant_retrieved",
        "retrieved",
        "relevant_in_db",
        "precision",
        "recall",
    ])
    .map_err(write_err)?;
    for (s, u) in shaded.rows.iter().zip(&unshaded.rows) {
        for (row, mode) in [(s, ShadingMode::Shaded), (u, ShadingMode::Unshaded)] {
            w.write_record([
                row.category.clone(),
                mode.as_str().to_string(),
                row.relevant_retrieved.to_string(),
                row.retrieved.to_string(),
                row.relevant_in_db.to_string(),
                row.precision.to_string(),
                row.recall.to_string(),
            ])
            .map_err(write_err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn table_html(out: &mut String, title: &str, r: &EvalResult) {
    let _ = writeln!(out, "<div class=\"table\"><h2>{}</h2>", escape_html(title));
    out.push_str(
        "<table><tr><th>Category</th><th>Relevant retrieved</th><th>Retrieved</th>\
         <th>Relevant in DB</th><th>Precision</th><th>Recall</th></tr>\n",
    );
    for row in &r.rows {
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            escape_html(&row.category),
            row.relevant_retrieved,
            row.retrieved,
            row.relevant_in_db,
            percent(row.precision),
            percent(row.recall)
        );
    }
    let _ = writeln!(
        out,
        "<tr class=\"mean\"><td>mean</td><td></td><td></td><td></td><td>{}</td><td>{}</td></tr>",
        percent(r.mean_precision()),
        percent(r.mean_recall())
    );
    out.push_str("</table></div>\n");
}

fn bars_html(
    out: &mut String,
    title: &str,
    shaded: &EvalResult,
    unshaded: &EvalResult,
    pick: fn(&EvalRow) -> f64,
) {
    let _ = writeln!(out, "<h2>{}</h2>\n<div class=\"bars\">", escape_html(title));
    for (s, u) in shaded.rows.iter().zip(&unshaded.rows) {
        let _ = writeln!(
            out,
            "<div class=\"group\"><div class=\"label\">{}</div>",
            escape_html(&s.category)
        );
        for (row, class) in [(s, "shaded"), (u, "unshaded")] {
            let v = pick(row);
            let _ = writeln!(
                out,
                "<div class=\"bar {class}\" style=\"width:{:.1}%\">{}</div>",
                v * 100.0,
                percent(v)
            );
        }
        out.push_str("</div>\n");
    }
    out.push_str("</div>\n");
}

pub fn render_html(shaded: &EvalResult, unshaded: &EvalResult) -> Result<String> {
    check_comparable(shaded, unshaded)?;
    let mut out = String::new();
    out.push_str(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\
         <title>Retrieval precision and recall</title>\n<style>\n\
         body{font-family:sans-serif;margin:2em}\n\
         .tables{display:flex;gap:2em}\n\
         table{border-collapse:collapse}\n\
         td,th{border:1px solid #999;padding:4px 8px;text-align:right}\n\
         tr.mean td{font-weight:bold}\n\
         .group{margin:6px 0}\n\
         .label{font-weight:bold}\n\
         .bar{color:#fff;padding:2px 4px;margin:1px 0;white-space:nowrap;min-width:3em}\n\
         .bar.shaded{background:#c0392b}\n\
         .bar.unshaded{background:#2c3e50}\n\
         </style></head><body>\n",
    );
    let _ = writeln!(out, "<h1>Retrieval results (top {})</h1>", shaded.k);
    out.push_str("<div class=\"tables\">\n");
    table_html(&mut out, "With Phong shading", shaded);
    table_html(&mut out, "Without Phong shading", unshaded);
    out.push_str("</div>\n");
    bars_html(
        &mut out,
        "Precision: shaded vs unshaded",
        shaded,
        unshaded,
        |r| r.precision,
    );
    bars_html(
        &mut out,
        "Recall: shaded vs unshaded",
        shaded,
        unshaded,
        |r| r.recall,
    );
    out.push_str("</body></html>\n");
    Ok(out)
}

fn check_comparable(shaded: &EvalResult, unshaded: &EvalResult) -> Result<()> {
    if shaded.rows.is_empty() || unshaded.rows.is_empty() {
        return Err(Error::InvalidParameter("no categories to report".into()));
    }
    if shaded.mode != ShadingMode::Shaded || unshaded.mode != ShadingMode::Unshaded {
        return Err(Error::InvalidParameter(format!(
            "expected shaded then unshaded results, got {} then {}",
            shaded.mode.as_str(),
            unshaded.mode.as_str()
        )));
    }
    if shaded.k != unshaded.k {
        return Err(Error::InvalidParameter(format!(
            "results use different k ({} vs {})",
            shaded.k, unshaded.k
        )));
    }
    let cats = |r: &EvalResult| {
        r.rows
            .iter()
            .map(|row| row.category.clone())
            .collect::<Vec<_>>()
    };
    if cats(shaded) != cats(unshaded) {
        return Err(Error::CorpusMismatch(
            "shaded and unshaded results cover different categories".into(),
        ));
    }
    Ok(())
}

/// Writes `report.csv` and `report.html` into `out_dir`.
pub fn emit_report(
    shaded: &EvalResult,
    unshaded: &EvalResult,
    out_dir: impl AsRef<Path>,
) -> Result<ReportFiles> {
    let out_dir = out_dir.as_ref();
    let csv_text = render_csv(shaded, unshaded)?;
    let html_text = render_html(shaded, unshaded)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = ReportFiles {
        csv: out_dir.join("report.csv"),
        html: out_dir.join("report.html"),
    };
    std::fs::write(&files.csv, csv_text).map_err(|e| Error::io(&files.csv, e))?;
    std::fs::write(&files.html, html_text).map_err(|e| Error::io(&files.html, e))?;
    Ok(files)
}
