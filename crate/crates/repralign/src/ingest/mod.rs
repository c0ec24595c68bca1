//! Data ingestion and featurization: dense matrix formats for precomputed
//! embeddings, labeled-text corpora, the sparse term-frequency featurizer,
//! and artifact persistence.
//!
//! Every artifact written by this module starts with a
//! `#repralign-format: <name>/<version>` tag (first line for text formats,
//! header field for binary ones) and round-trips byte-stably: loading a file
//! and saving it again reproduces the original bytes.

mod npy;

pub use npy::{load_npy, save_npy};

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::core::CurveSeries;
use crate::hierclust::{Dendrogram, Merge};
use crate::stats::CorrelationReport;
use crate::{Error, Result};

/// Dense matrix file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Npy,
}

impl MatrixFormat {
    /// Infers the format from the file extension (`.npy` vs anything else).
    pub fn from_path(path: &Path) -> MatrixFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("npy") => MatrixFormat::Npy,
            _ => MatrixFormat::Csv,
        }
    }
}

/// Loads an n×d matrix from CSV (optional header, `#` comments) or NPY
/// (v1.0/2.0, little-endian float32/float64, C-order, 2-D). All values are
/// widened to 64-bit and must be finite.
pub fn load_dense_matrix(path: &Path, format: MatrixFormat) -> Result<Array2<f64>> {
    let matrix = match format {
        MatrixFormat::Npy => load_npy(path)?,
        MatrixFormat::Csv => load_csv_matrix(path)?,
    };
    for ((row, col), &v) in matrix.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(matrix)
}

fn load_csv_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut header_allowed = true;
    for (line, offset) in lines_with_offsets(&text) {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(Error::FormatError {
                            offset,
                            reason: format!("row has {} fields, expected {w}", values.len()),
                        });
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
                header_allowed = false;
            }
            Err(_) if header_allowed => {
                // a single leading non-numeric line is treated as a header
                header_allowed = false;
            }
            Err(e) => {
                return Err(Error::FormatError {
                    offset,
                    reason: format!("unparsable numeric row: {e}"),
                });
            }
        }
    }
    let width = match (width, rows.len()) {
        (Some(w), n) if n > 0 => {
            let _ = n;
            w
        }
        _ => {
            return Err(Error::EmptyFile(path.display().to_string()));
        }
    };
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let n = flat.len() / width;
    Array2::from_shape_vec((n, width), flat).map_err(|e| Error::ShapeMismatch(e.to_string()))
}

/// Loads labels: either one label string per line, or two-column CSV
/// `id,label`. The vocabulary is built in first-occurrence order.
pub fn load_labels(path: &Path) -> Result<(Vec<usize>, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    let data: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .collect();
    if data.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    // two-column mode when every line is "<integer>,<label>"
    let two_col = data.iter().all(|l| {
        l.split_once(',')
            .is_some_and(|(id, _)| id.trim().parse::<usize>().is_ok())
    });
    let mut vocab: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(data.len());
    for line in data {
        let name = if two_col {
            line.split_once(',').unwrap().1.trim()
        } else {
            line.trim()
        };
        let id = *index.entry(name.to_string()).or_insert_with(|| {
            vocab.push(name.to_string());
            vocab.len() - 1
        });
        labels.push(id);
    }
    Ok((labels, vocab))
}

/// Verifies that a matrix and a label column describe the same points.
pub fn check_row_count(matrix_rows: usize, label_rows: usize) -> Result<()> {
    if matrix_rows != label_rows {
        return Err(Error::RowCountMismatch {
            matrix_rows,
            label_rows,
        });
    }
    Ok(())
}

/// Labeled text fragments prior to featurization.
#[derive(Debug, Clone)]
pub struct TextCorpus {
    pub documents: Vec<(String, usize)>,
    pub label_vocab: Vec<String>,
    pub positive_class: usize,
}

impl TextCorpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Resolves a class name against the vocabulary and records it as the
    /// positive class.
    pub fn set_positive_class(&mut self, name: &str) -> Result<()> {
        match self.label_vocab.iter().position(|v| v == name) {
            Some(id) => {
                self.positive_class = id;
                Ok(())
            }
            None => Err(Error::DegenerateLabels(format!(
                "class '{name}' not present in label vocabulary"
            ))),
        }
    }

    /// Stable content fingerprint (FNV-1a over texts and label ids).
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        for (text, label) in &self.documents {
            h.update(text.as_bytes());
            h.update(&label.to_le_bytes());
            h.update(&[0xff]);
        }
        h.finish()
    }
}

/// Loads one JSON object per line, pulling text and label from the named
/// fields. Labels may be JSON strings or integers; the vocabulary is built
/// in first-occurrence order. Line numbers are 1-based in errors.
pub fn load_jsonl_corpus(path: &Path, text_field: &str, label_field: &str) -> Result<TextCorpus> {
    let text = fs::read_to_string(path)?;
    let mut documents = Vec::new();
    let mut vocab: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Error::BadJson {
                line: lineno,
                reason: e.to_string(),
            })?;
        let doc_text = value
            .get(text_field)
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::MissingField {
                field: text_field.to_string(),
                line: lineno,
            })?;
        let label_value = value.get(label_field).ok_or_else(|| Error::MissingField {
            field: label_field.to_string(),
            line: lineno,
        })?;
        let label_name = match label_value {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            _ => {
                return Err(Error::MissingField {
                    field: label_field.to_string(),
                    line: lineno,
                })
            }
        };
        let id = *index.entry(label_name.clone()).or_insert_with(|| {
            vocab.push(label_name);
            vocab.len() - 1
        });
        documents.push((doc_text.to_string(), id));
    }
    if documents.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    Ok(TextCorpus {
        documents,
        label_vocab: vocab,
        positive_class: 0,
    })
}

/// Writes a corpus back out as JSONL with the given field names.
pub fn save_jsonl_corpus(
    path: &Path,
    corpus: &TextCorpus,
    text_field: &str,
    label_field: &str,
) -> Result<()> {
    let mut out = String::new();
    for (text, label) in &corpus.documents {
        let record = serde_json::json!({
            text_field: text,
            label_field: corpus.label_vocab[*label],
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Term-to-column mapping for the bag-of-words featurizer. Columns are
/// lexicographic over terms, so the mapping is independent of corpus order.
#[derive(Debug, Clone)]
pub struct BowVocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    pub min_count: usize,
    /// Fingerprint of the corpus this vocabulary was fit on.
    pub built_from: u64,
}

impl BowVocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Tokenization rule shared by fit and transform: lowercase, split on any
/// run of non-alphanumeric characters (Unicode categories), drop empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Term-frequency featurization. With `vocab = None` (fit mode) the
/// vocabulary is built from the corpus, keeping terms whose total count
/// reaches `min_count`. With a vocabulary supplied (transform mode) it is
/// reused and out-of-vocabulary terms are dropped. Cells are raw counts.
pub fn bow_featurize(
    corpus: &TextCorpus,
    min_count: usize,
    vocab: Option<&BowVocabulary>,
) -> Result<(Array2<f64>, BowVocabulary)> {
    use rayon::prelude::*;

    let vocab = match vocab {
        Some(v) => v.clone(),
        None => {
            let mut counts: HashMap<String, usize> = HashMap::new();
            for (text, _) in &corpus.documents {
                for token in tokenize(text) {
                    *counts.entry(token).or_insert(0) += 1;
                }
            }
            let mut terms: Vec<String> = counts
                .into_iter()
                .filter(|(_, c)| *c >= min_count)
                .map(|(t, _)| t)
                .collect();
            if terms.is_empty() {
                return Err(Error::EmptyVocabulary { min_count });
            }
            terms.sort();
            let index = terms
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i))
                .collect();
            BowVocabulary {
                terms,
                index,
                min_count,
                built_from: corpus.fingerprint(),
            }
        }
    };

    let v = vocab.len();
    let rows: Vec<Vec<f64>> = corpus
        .documents
        .par_iter()
        .map(|(text, _)| {
            let mut row = vec![0.0; v];
            for token in tokenize(text) {
                if let Some(col) = vocab.column(&token) {
                    row[col] += 1.0;
                }
            }
            row
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let matrix = Array2::from_shape_vec((corpus.documents.len(), v), flat)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok((matrix, vocab))
}

// ---------------------------------------------------------------------------
// Artifact persistence
// ---------------------------------------------------------------------------

const FORMAT_PREFIX: &str = "#repralign-format: ";
const DENDROGRAM_FORMAT: &str = "dendrogram/1";
const CURVE_FORMAT: &str = "curve/1";
const PAIRS_FORMAT: &str = "pairs/1";

/// Free-form `key: value` metadata carried in artifact headers; preserved
/// byte-for-byte across a load/save cycle.
pub type Metadata = Vec<(String, String)>;

fn render_header(format: &str, metadata: &Metadata) -> String {
    let mut out = format!("{FORMAT_PREFIX}{format}\n");
    for (key, value) in metadata {
        out.push_str(&format!("#{key}: {value}\n"));
    }
    out
}

/// Splits an artifact into (metadata, data lines) after validating the
/// format tag.
fn parse_header<'a>(
    text: &'a str,
    expected_format: &str,
) -> Result<(Metadata, Vec<(&'a str, usize)>)> {
    let mut lines = lines_with_offsets(text);
    let (first, _) = lines.next().ok_or_else(|| Error::FormatError {
        offset: 0,
        reason: "empty artifact".into(),
    })?;
    let found = first
        .strip_prefix(FORMAT_PREFIX)
        .ok_or_else(|| Error::FormatError {
            offset: 0,
            reason: format!("missing '{FORMAT_PREFIX}' tag"),
        })?;
    if found != expected_format {
        return Err(Error::VersionMismatch {
            expected: expected_format.to_string(),
            found: found.to_string(),
        });
    }
    let mut metadata = Vec::new();
    let mut data = Vec::new();
    let mut in_header = true;
    for (line, offset) in lines {
        if in_header {
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest.split_once(": ").ok_or_else(|| Error::FormatError {
                    offset,
                    reason: "malformed metadata line (expected '#key: value')".into(),
                })?;
                metadata.push((key.to_string(), value.to_string()));
                continue;
            }
            in_header = false;
        }
        if !line.is_empty() {
            data.push((line, offset));
        }
    }
    Ok((metadata, data))
}

fn lines_with_offsets(text: &str) -> impl Iterator<Item = (&str, usize)> {
    let mut offset = 0;
    text.split('\n').filter_map(move |line| {
        let this = offset;
        offset += line.len() + 1;
        if this >= text.len() {
            None
        } else {
            Some((line, this))
        }
    })
}

fn parse_field<T: std::str::FromStr>(field: &str, offset: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::FormatError {
        offset,
        reason: format!("unparsable {what}: '{field}'"),
    })
}

/// Saves a dendrogram as tagged CSV: `left,right,cost,size` per merge.
pub fn save_dendrogram(path: &Path, dn: &Dendrogram, metadata: &Metadata) -> Result<()> {
    let mut out = render_header(DENDROGRAM_FORMAT, metadata);
    out.push_str(&format!("#leaves: {}\n", dn.num_leaves()));
    out.push_str("step,left_id,right_id,cost,size\n");
    for (step, m) in dn.merges().iter().enumerate() {
        out.push_str(&format!(
            "{step},{},{},{},{}\n",
            m.left, m.right, m.cost, m.size
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a dendrogram saved by [`save_dendrogram`], re-running all
/// structural validation.
pub fn load_dendrogram(path: &Path) -> Result<(Dendrogram, Metadata)> {
    let text = fs::read_to_string(path)?;
    let (mut metadata, data) = parse_header(&text, DENDROGRAM_FORMAT)?;
    let leaves_pos = metadata
        .iter()
        .position(|(k, _)| k == "leaves")
        .ok_or_else(|| Error::FormatError {
            offset: 0,
            reason: "missing '#leaves:' header".into(),
        })?;
    let (_, leaves_value) = metadata.remove(leaves_pos);
    let n: usize = parse_field(&leaves_value, 0, "leaf count")?;
    let mut merges = Vec::new();
    for (line, offset) in data {
        if line == "step,left_id,right_id,cost,size" {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::FormatError {
                offset,
                reason: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let step: usize = parse_field(fields[0], offset, "step")?;
        if step != merges.len() {
            return Err(Error::FormatError {
                offset,
                reason: format!("step {step} out of order (expected {})", merges.len()),
            });
        }
        merges.push(Merge {
            left: parse_field(fields[1], offset, "merge id")?,
            right: parse_field(fields[2], offset, "merge id")?,
            cost: parse_field(fields[3], offset, "merge cost")?,
            size: parse_field(fields[4], offset, "merge size")?,
        });
    }
    let dn = Dendrogram::from_parts(n, merges)?;
    Ok((dn, metadata))
}

/// Saves a curve as tagged CSV with the area aggregate in the header.
/// `columns` names the two CSV columns (e.g. `("k", "alignment")`).
pub fn save_curve(
    path: &Path,
    curve: &CurveSeries,
    columns: (&str, &str),
    metadata: &Metadata,
) -> Result<()> {
    let mut out = render_header(CURVE_FORMAT, metadata);
    out.push_str(&format!("#area: {}\n", curve.area()));
    out.push_str(&format!("{},{}\n", columns.0, columns.1));
    for (k, v) in curve.points() {
        out.push_str(&format!("{k},{v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a curve saved by [`save_curve`], returning the column names so a
/// re-save reproduces the file byte-for-byte.
pub fn load_curve(path: &Path) -> Result<(CurveSeries, (String, String), Metadata)> {
    let text = fs::read_to_string(path)?;
    let (mut metadata, data) = parse_header(&text, CURVE_FORMAT)?;
    let area_pos = metadata
        .iter()
        .position(|(k, _)| k == "area")
        .ok_or_else(|| Error::FormatError {
            offset: 0,
            reason: "missing '#area:' header".into(),
        })?;
    let (_, area_value) = metadata.remove(area_pos);
    let area: f64 = parse_field(&area_value, 0, "area")?;
    let mut columns = ("index".to_string(), "value".to_string());
    let mut index = Vec::new();
    let mut values = Vec::new();
    for (line, offset) in data {
        let (k, v) = line.split_once(',').ok_or_else(|| Error::FormatError {
            offset,
            reason: "expected 2 fields".into(),
        })?;
        if index.is_empty() && k.parse::<usize>().is_err() {
            columns = (k.to_string(), v.to_string());
            continue;
        }
        index.push(parse_field(k, offset, "curve index")?);
        values.push(parse_field(v, offset, "curve value")?);
    }
    let curve = CurveSeries::new(index, values, area)?;
    Ok((curve, columns, metadata))
}

/// Saves correlation scatter data as tagged CSV `x,y,tag`, with the
/// coefficients in the header.
pub fn save_pairs(path: &Path, report: &CorrelationReport, metadata: &Metadata) -> Result<()> {
    let mut out = render_header(PAIRS_FORMAT, metadata);
    out.push_str(&format!("#pearson_r: {}\n", report.pearson_r));
    out.push_str(&format!("#pearson_p: {}\n", report.pearson_p));
    out.push_str(&format!("#spearman_r: {}\n", report.spearman_r));
    out.push_str(&format!("#spearman_p: {}\n", report.spearman_p));
    out.push_str("x,y,tag\n");
    for (x, y, tag) in &report.pairs {
        out.push_str(&format!("{x},{y},{tag}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads `x,y,tag` pairs from CSV. Accepts both tagged artifacts written by
/// [`save_pairs`] and plain CSV with an optional `x,y,tag` header; comment
/// lines are skipped.
pub fn load_pairs(path: &Path) -> Result<Vec<(f64, f64, String)>> {
    let text = fs::read_to_string(path)?;
    if let Some(first) = text.lines().next() {
        if let Some(found) = first.strip_prefix(FORMAT_PREFIX) {
            if found != PAIRS_FORMAT {
                return Err(Error::VersionMismatch {
                    expected: PAIRS_FORMAT.to_string(),
                    found: found.to_string(),
                });
            }
        }
    }
    let mut pairs = Vec::new();
    for (line, offset) in lines_with_offsets(&text) {
        if line.is_empty() || line.starts_with('#') || line == "x,y,tag" {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, ',').collect();
        if fields.len() < 2 {
            return Err(Error::FormatError {
                offset,
                reason: "expected at least 2 fields (x,y[,tag])".into(),
            });
        }
        let x: f64 = parse_field(fields[0], offset, "x value")?;
        let y: f64 = parse_field(fields[1], offset, "y value")?;
        let tag = fields.get(2).map(|t| t.to_string()).unwrap_or_default();
        pairs.push((x, y, tag));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    Ok(pairs)
}

// Minimal FNV-1a, used only for vocabulary fingerprints.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }

    fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
