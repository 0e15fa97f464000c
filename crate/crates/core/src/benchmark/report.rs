use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{BenchmarkError, GroupResult};
use crate::subjects::SubjectGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(BenchmarkError::UnsupportedFormat(other.to_owned())),
        }
    }
}

/// A rendered report file: name relative to the output directory, contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Metric {
    QueerBench,
    Afinn,
    Hurtlex,
    Perspective,
}

impl Metric {
    const ALL: [Metric; 4] = [Metric::QueerBench, Metric::Afinn, Metric::Hurtlex, Metric::Perspective];

    fn key(self) -> &'static str {
        match self {
            Metric::QueerBench => "qb",
            Metric::Afinn => "afinn",
            Metric::Hurtlex => "hurtlex",
            Metric::Perspective => "perspective",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Metric::QueerBench => "QueerBench",
            Metric::Afinn => "AFINN",
            Metric::Hurtlex => "HurtLex",
            Metric::Perspective => "Perspective",
        }
    }

    fn value(self, r: &GroupResult) -> Option<f64> {
        match self {
            Metric::QueerBench => Some(r.qb),
            Metric::Afinn => r.scores.a_s,
            Metric::Hurtlex => r.scores.h_s,
            Metric::Perspective => r.scores.p_s,
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}", round2(x))).unwrap_or_default()
}

#[derive(Serialize)]
struct MatrixRow<'a> {
    model: &'a str,
    values: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct Matrix<'a> {
    metric: &'static str,
    k: usize,
    canonical: bool,
    columns: Vec<&'static str>,
    rows: Vec<MatrixRow<'a>>,
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    k: usize,
    model: &'a str,
    group: &'static str,
    tool: &'static str,
    category: String,
    count: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    matrices: Vec<Matrix<'a>>,
    histograms: Vec<HistogramRow<'a>>,
}

fn build(results: &[GroupResult]) -> Report<'_> {
    let index: BTreeMap<(usize, &str, SubjectGroup), &GroupResult> = results
        .iter()
        .map(|r| ((r.k, r.model_id.as_str(), r.scores.subject_group), r))
        .collect();
    let ks: BTreeSet<usize> = results.iter().map(|r| r.k).collect();
    let models: BTreeSet<&str> = results.iter().map(|r| r.model_id.as_str()).collect();
    let columns: Vec<&'static str> = SubjectGroup::ALL.iter().map(|g| g.as_str()).collect();

    let mut matrices = Vec::new();
    for &k in &ks {
        let canonical = results.iter().filter(|r| r.k == k).all(|r| r.canonical);
        for metric in Metric::ALL {
            let rows: Vec<MatrixRow<'_>> = models
                .iter()
                .filter(|m| results.iter().any(|r| r.k == k && r.model_id == **m))
                .map(|&model| MatrixRow {
                    model,
                    values: SubjectGroup::ALL
                        .iter()
                        .map(|g| index.get(&(k, model, *g)).and_then(|r| metric.value(r)).map(round2))
                        .collect(),
                })
                .collect();
            if metric != Metric::QueerBench && rows.iter().all(|r| r.values.iter().all(Option::is_none)) {
                continue;
            }
            matrices.push(Matrix {
                metric: metric.key(),
                k,
                canonical: metric != Metric::QueerBench || canonical,
                columns: columns.clone(),
                rows,
            });
        }
    }

    let mut histograms = Vec::new();
    for ((k, model, group), r) in &index {
        for (cat, count) in &r.scores.hurtlex_histogram {
            histograms.push(HistogramRow {
                k: *k,
                model,
                group: group.as_str(),
                tool: "hurtlex",
                category: cat.label().to_owned(),
                count: *count,
            });
        }
        for (cat, count) in &r.scores.perspective_histogram {
            histograms.push(HistogramRow {
                k: *k,
                model,
                group: group.as_str(),
                tool: "perspective",
                category: cat.label().to_owned(),
                count: *count,
            });
        }
    }
    Report { matrices, histograms }
}

fn render_csv(report: &Report<'_>) -> Vec<ReportFile> {
    let mut matrix = String::from("metric,k,model");
    for g in SubjectGroup::ALL {
        let _ = write!(matrix, ",{}", g.as_str());
    }
    matrix.push('\n');
    for m in &report.matrices {
        for row in &m.rows {
            let _ = write!(matrix, "{},{},{}", m.metric, m.k, csv_field(row.model));
            for v in &row.values {
                let _ = write!(matrix, ",{}", cell(*v));
            }
            matrix.push('\n');
        }
    }
    let mut hist = String::from("k,model,group,tool,category,count\n");
    for h in &report.histograms {
        let _ = writeln!(
            hist,
            "{},{},{},{},{},{}",
            h.k,
            csv_field(h.model),
            h.group,
            h.tool,
            h.category,
            h.count
        );
    }
    vec![
        ReportFile {
            name: "report.csv".into(),
            contents: matrix,
        },
        ReportFile {
            name: "histograms.csv".into(),
            contents: hist,
        },
    ]
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn render_markdown(report: &Report<'_>) -> Vec<ReportFile> {
    let mut md = String::from("# QueerBench report\n");
    let mut current_k = None;
    for m in &report.matrices {
        if current_k != Some(m.k) {
            let _ = write!(md, "\n## Top-{}\n", m.k);
            current_k = Some(m.k);
        }
        let title = Metric::ALL
            .into_iter()
            .find(|x| x.key() == m.metric)
            .map(Metric::title)
            .unwrap_or(m.metric);
        let label = if m.canonical { "" } else { " (non-canonical: partial tool selection)" };
        let _ = write!(md, "\n### {title}{label}\n\n| Model |");
        for c in &m.columns {
            let _ = write!(md, " {c} |");
        }
        md.push_str("\n|---|");
        for _ in &m.columns {
            md.push_str("---:|");
        }
        md.push('\n');
        for row in &m.rows {
            let _ = write!(md, "| {} |", row.model);
            for v in &row.values {
                let c = cell(*v);
                let _ = write!(md, " {} |", if c.is_empty() { "-" } else { &c });
            }
            md.push('\n');
        }
    }
    if !report.histograms.is_empty() {
        md.push_str("\n## Category histograms\n\n| k | Model | Group | Tool | Category | Count |\n|---:|---|---|---|---|---:|\n");
        for h in &report.histograms {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                h.k, h.model, h.group, h.tool, h.category, h.count
            );
        }
    }
    vec![ReportFile {
        name: "report.md".into(),
        contents: md,
    }]
}

fn render_json(report: &Report<'_>) -> Vec<ReportFile> {
    let mut contents = serde_json::to_string_pretty(report).expect("report serializes");
    contents.push('\n');
    vec![ReportFile {
        name: "report.json".into(),
        contents,
    }]
}

/// Renders model × group matrices (one per metric and top-k) plus category
/// histogram data. Output depends only on the set of results, not their order.
pub fn export_report(results: &[GroupResult], format: ReportFormat) -> Result<Vec<ReportFile>, BenchmarkError> {
    if results.is_empty() {
        return Err(BenchmarkError::EmptyResults);
    }
    let report = build(results);
    Ok(match format {
        ReportFormat::Csv => render_csv(&report),
        ReportFormat::Json => render_json(&report),
        ReportFormat::Markdown => render_markdown(&report),
    })
}

/// Writes results as JSON lines sorted by `(model, k, group)`.
pub fn write_results(path: &Path, results: &[GroupResult]) -> Result<(), BenchmarkError> {
    let io = |source| BenchmarkError::Io {
        path: path.to_owned(),
        source,
    };
    let mut sorted: Vec<&GroupResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.model_id, a.k, a.scores.subject_group).cmp(&(&b.model_id, b.k, b.scores.subject_group))
    });
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for r in sorted {
        serde_json::to_writer(&mut out, r).map_err(|e| io(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_results(path: &Path) -> Result<Vec<GroupResult>, BenchmarkError> {
    let io = |source| BenchmarkError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| BenchmarkError::Record {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
