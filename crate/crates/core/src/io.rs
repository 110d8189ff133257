//! File formats: dense CSV/TSV and Matrix Market designs, plain-text
//! responses, JSON screening results and ranking tables.
//!
//! Row and column numbers in diagnostics are 1-based, as seen in an editor.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineResult;
use crate::bits::ScreeningResult;
use crate::linalg::{CscMatrix, DenseMatrix, StandardizedDesign};
use crate::{Error, Result};

/// Supported design file layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignFormat {
    Csv,
    Tsv,
    MatrixMarket,
}

impl DesignFormat {
    /// `.mtx` is Matrix Market, `.tsv`/`.tab` tab-separated, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("mtx") => DesignFormat::MatrixMarket,
            Some("tsv") | Some("tab") => DesignFormat::Tsv,
            _ => DesignFormat::Csv,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn parse_number(field: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        Error::Input(format!(
            "{}: row {row}, column {col}: `{}` is not a number",
            path.display(),
            field.trim()
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::Input(format!(
            "{}: row {row}, column {col}: non-finite value",
            path.display()
        )));
    }
    Ok(v)
}

/// Reads a delimited dense matrix. The first line is taken as a header of
/// column names when any of its fields fails to parse as a number.
pub fn read_dense(path: &Path, delimiter: u8) -> Result<(DenseMatrix, Option<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut names = None;
    let mut width = None;
    for (line, rec) in reader.records().enumerate() {
        let row = line + 1;
        let rec = rec.map_err(|e| Error::Input(format!("{}: row {row}: {e}", path.display())))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if line == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            names = Some(rec.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(rec.len());
            continue;
        }
        match width {
            Some(w) if w != rec.len() => {
                return Err(Error::Input(format!(
                    "{}: row {row} has {} fields, expected {w}",
                    path.display(),
                    rec.len()
                )))
            }
            _ => width = Some(rec.len()),
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(c, f)| parse_number(f, path, row, c + 1))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("{}: no data rows", path.display())));
    }
    Ok((DenseMatrix::from_rows(&rows)?, names))
}

pub fn write_dense(path: &Path, z: &DenseMatrix, names: Option<&[String]>, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(create(path)?);
    let err = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
    if let Some(names) = names {
        w.write_record(names).map_err(err)?;
    }
    for i in 0..z.nrows() {
        w.write_record((0..z.ncols()).map(|j| format!("{:e}", z.get(i, j)))).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a Matrix Market `coordinate` file (`real`, `integer` or `pattern`,
/// `general` symmetry). Indices are 1-based; duplicates are summed.
pub fn read_matrix_market(path: &Path) -> Result<CscMatrix> {
    let reader = open(path)?;
    let mut lines = reader.lines().enumerate();
    let bad = |row: usize, msg: String| Error::Input(format!("{}: line {row}: {msg}", path.display()));

    let (_, banner) = lines
        .next()
        .ok_or_else(|| Error::Input(format!("{}: empty file", path.display())))?;
    let banner = banner.map_err(|e| Error::io(path, e))?.to_ascii_lowercase();
    let tokens: Vec<&str> = banner.split_whitespace().collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(bad(1, "missing `%%MatrixMarket matrix` banner".into()));
    }
    if tokens[2] != "coordinate" {
        return Err(bad(1, format!("only coordinate storage is supported, got `{}`", tokens[2])));
    }
    let pattern = match tokens[3] {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(bad(1, format!("unsupported field type `{other}`"))),
    };
    if tokens[4] != "general" {
        return Err(bad(1, format!("unsupported symmetry `{}`", tokens[4])));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if f.len() != 3 {
                    return Err(bad(row, "size line needs `rows cols entries`".into()));
                }
                let parse = |s: &str, c: usize| {
                    s.parse::<usize>()
                        .map_err(|_| bad(row, format!("column {c}: `{s}` is not a count")))
                };
                let dims = (parse(f[0], 1)?, parse(f[1], 2)?, parse(f[2], 3)?);
                triplets.reserve(dims.2);
                size = Some(dims);
            }
            Some((nr, nc, _)) => {
                let want = if pattern { 2 } else { 3 };
                if f.len() != want {
                    return Err(bad(row, format!("expected {want} fields, found {}", f.len())));
                }
                let index = |s: &str, c: usize, max: usize| -> Result<usize> {
                    match s.parse::<usize>() {
                        Ok(v) if (1..=max).contains(&v) => Ok(v - 1),
                        _ => Err(bad(row, format!("column {c}: index `{s}` outside 1..={max}"))),
                    }
                };
                let i = index(f[0], 1, nr)?;
                let j = index(f[1], 2, nc)?;
                let v = if pattern { 1.0 } else { parse_number(f[2], path, row, 3)? };
                triplets.push((i, j, v));
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| Error::Input(format!("{}: missing size line", path.display())))?;
    if triplets.len() != nnz {
        return Err(Error::Input(format!(
            "{}: header declares {nnz} entries, found {}",
            path.display(),
            triplets.len()
        )));
    }
    CscMatrix::from_triplets(nr, nc, &triplets)
}

pub fn write_matrix_market(path: &Path, z: &CscMatrix) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "%%MatrixMarket matrix coordinate real general").map_err(io)?;
    writeln!(w, "{} {} {}", z.nrows(), z.ncols(), z.nnz()).map_err(io)?;
    for j in 0..z.ncols() {
        let (rows, vals) = z.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Reads and standardizes a design, picking the format from the extension.
pub fn read_design(path: &Path) -> Result<StandardizedDesign> {
    match DesignFormat::from_path(path) {
        DesignFormat::MatrixMarket => StandardizedDesign::sparse(read_matrix_market(path)?),
        fmt => {
            let delim = if fmt == DesignFormat::Tsv { b'\t' } else { b',' };
            let (z, names) = read_dense(path, delim)?;
            let d = StandardizedDesign::dense(z)?;
            match names {
                Some(n) => d.with_names(n),
                None => Ok(d),
            }
        }
    }
}

/// One value per line; blank lines and `#` comments are skipped.
pub fn read_response(path: &Path) -> Result<Vec<f64>> {
    let mut y = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        y.push(parse_number(t, path, idx + 1, 1)?);
    }
    if y.is_empty() {
        return Err(Error::Input(format!("{}: no response values", path.display())));
    }
    Ok(y)
}

pub fn write_response(path: &Path, y: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    for v in y {
        writeln!(w, "{v:e}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rounds to 12 significant digits so that JSON output is stable across
/// platforms with different last-bit floating point behaviour.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Serialized result of one `screen` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w: Option<f64>,
    pub stop_rule: String,
    /// Selection order (ranking for SIS / HOLP).
    pub path: Vec<usize>,
    /// Log posterior after each step; empty for the baselines.
    pub pi_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub null_log_posterior: Option<f64>,
    /// Baseline scores aligned with `path`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub scores: Vec<f64>,
    pub selected: Vec<usize>,
    pub stop_reason: String,
    /// Seconds per step.
    pub timings: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub column_names: Option<Vec<String>>,
}

impl ScreenReport {
    pub fn from_bits(result: &ScreeningResult, lambda: f64, w: f64, stop_rule: &str) -> Self {
        Self {
            method: "bits".into(),
            lambda: Some(lambda),
            w: Some(w),
            stop_rule: stop_rule.into(),
            path: result.path.clone(),
            pi_trace: result.pi_trace.clone(),
            null_log_posterior: Some(result.null_log_posterior),
            scores: Vec::new(),
            selected: result.selected.clone(),
            stop_reason: result.stop_reason.to_string(),
            timings: result.timings.iter().map(|d| d.as_secs_f64()).collect(),
            column_names: None,
        }
    }

    pub fn from_baseline(result: &BaselineResult, selected: usize, stop_rule: &str, stop_reason: &str, seconds: f64) -> Self {
        let method = serde_json::to_value(result.method).ok().and_then(|v| v.as_str().map(str::to_string));
        Self {
            method: method.unwrap_or_default(),
            lambda: None,
            w: None,
            stop_rule: stop_rule.into(),
            path: result.ranking.clone(),
            pi_trace: Vec::new(),
            null_log_posterior: None,
            scores: result.scores.clone(),
            selected: result.ranking[..selected.min(result.ranking.len())].to_vec(),
            stop_reason: stop_reason.into(),
            timings: vec![seconds],
            column_names: None,
        }
    }

    pub fn with_names(mut self, names: Option<&[String]>) -> Self {
        self.column_names = names.map(|n| self.path.iter().map(|&j| n[j].clone()).collect());
        self
    }

    fn rounded(&self) -> Self {
        let r = |v: &[f64]| v.iter().copied().map(round_sig12).collect::<Vec<_>>();
        Self {
            lambda: self.lambda.map(round_sig12),
            w: self.w.map(round_sig12),
            pi_trace: r(&self.pi_trace),
            null_log_posterior: self.null_log_posterior.map(round_sig12),
            scores: r(&self.scores),
            timings: r(&self.timings),
            ..self.clone()
        }
    }

    /// Pretty JSON with floats rounded to 12 significant digits.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    /// CSV of `rank, column_index, column_name, log_posterior` (the value
    /// column is `score` for the baselines) over the selected indices.
    pub fn write_ranking_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(create(path)?);
        let err = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
        let bits = !self.pi_trace.is_empty() || self.scores.is_empty();
        let value_name = if bits { "log_posterior" } else { "score" };
        w.write_record(["rank", "column_index", "column_name", value_name]).map_err(err)?;
        for (k, &j) in self.selected.iter().enumerate() {
            let name = self.column_names.as_ref().map_or(String::new(), |n| n[k].clone());
            let value = if bits { self.pi_trace.get(k) } else { self.scores.get(k) };
            let value = value.map_or(String::new(), |v| format!("{}", round_sig12(*v)));
            w.write_record([(k + 1).to_string(), j.to_string(), name, value]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
