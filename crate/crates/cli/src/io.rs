//! CSV readers and writers for the supported input layouts.
//!
//! * vectors: one sample per row, numeric columns, optional header;
//! * SPD matrices: `p` followed by the `p^2` row-major entries;
//! * quantile grids: one sample per row, header `q1..qm`;
//! * distance matrices: `n` rows of `n` entries, no header;
//! * covariate: a single numeric column, optional header.
//!
//! Writers emit the shortest representation that parses back to the same
//! `f64`, so a write followed by a read is the identity.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use profassoc::distance::DistanceMatrix;
use profassoc::metrics::{MetricId, SPHERE_INPUT_TOL};
use profassoc::objects::{MetricObject, ObjectKind, SpdMatrix};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

type Result<T> = std::result::Result<T, InputError>;

/// Size and content hash of one input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub path: String,
    pub rows: usize,
    pub sha256: String,
}

/// Numeric rows of a CSV file with their 1-based line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub header: Option<Vec<String>>,
    pub rows: Vec<(u64, Vec<f64>)>,
    pub sha256: String,
}

impl Table {
    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint { path: self.path.display().to_string(), rows: self.rows.len(), sha256: self.sha256.clone() }
    }

    fn parse_err(&self, line: u64, message: impl Into<String>) -> InputError {
        InputError::Parse { path: self.path.clone(), line, message: message.into() }
    }

    fn invalid(&self, message: impl Into<String>) -> InputError {
        InputError::Invalid { path: self.path.clone(), message: message.into() }
    }
}

fn parse_field(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Reads a CSV of numbers. A first record containing a non-numeric field is
/// taken as the header; any later non-numeric field is an error naming its
/// line.
pub fn read_table(path: &Path) -> Result<Table> {
    let io_err = |source| InputError::Io { path: path.to_path_buf(), source };
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io_err)?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut header = None;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| InputError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match record.iter().map(parse_field).collect::<Option<Vec<f64>>>() {
            Some(values) => {
                if let Some(col) = values.iter().position(|v| !v.is_finite()) {
                    return Err(InputError::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("column {} is not finite", col + 1),
                    });
                }
                rows.push((line, values));
            }
            None if idx == 0 => header = Some(record.iter().map(str::to_string).collect()),
            None => {
                let col = record.iter().position(|f| parse_field(f).is_none()).unwrap_or(0);
                return Err(InputError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("column {}: '{}' is not a number", col + 1, &record[col]),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(InputError::Invalid { path: path.to_path_buf(), message: "no data rows".into() });
    }
    Ok(Table { path: path.to_path_buf(), header, rows, sha256 })
}

fn same_width(table: &Table) -> Result<usize> {
    let width = table.rows[0].1.len();
    for (line, row) in &table.rows {
        if row.len() != width {
            return Err(table.parse_err(*line, format!("expected {width} columns, found {}", row.len())));
        }
    }
    Ok(width)
}

/// Parses the rows of `table` as objects of the kind `metric` acts on.
pub fn objects_from_table(table: &Table, metric: &MetricId) -> Result<Vec<MetricObject>> {
    let kind = metric.native_kind();
    if kind != ObjectKind::SpdMatrix {
        same_width(table)?;
    }
    table
        .rows
        .iter()
        .map(|(line, row)| {
            let obj = match kind {
                ObjectKind::Vector => MetricObject::vector(row.clone()),
                ObjectKind::UnitVector => {
                    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if (norm - 1.0).abs() > SPHERE_INPUT_TOL {
                        return Err(table.parse_err(*line, format!("expected a unit vector, norm is {norm}")));
                    }
                    // exact unit vectors are kept bit for bit; near ones are projected
                    MetricObject::unit_vector(row.clone()).or_else(|_| MetricObject::unit_vector_normalized(row.clone()))
                }
                ObjectKind::SpdMatrix => parse_spd_row(row),
                ObjectKind::QuantileGrid => MetricObject::quantile_grid(row.clone()),
            };
            obj.map_err(|e| table.parse_err(*line, e.to_string()))
        })
        .collect()
}

fn parse_spd_row(row: &[f64]) -> profassoc::Result<MetricObject> {
    let p = row[0];
    if !(p >= 1.0 && p.fract() == 0.0) {
        return Err(profassoc::Error::InvalidObject(format!("first column must be the matrix size, got {p}")));
    }
    let p = p as usize;
    if row.len() != 1 + p * p {
        return Err(profassoc::Error::InvalidObject(format!(
            "a {p}x{p} matrix needs {} entries, found {}",
            p * p,
            row.len() - 1
        )));
    }
    Ok(MetricObject::spd(SpdMatrix::from_row_major(p, &row[1..])?))
}

pub fn read_objects(path: &Path, metric: &MetricId) -> Result<(Vec<MetricObject>, Fingerprint)> {
    let table = read_table(path)?;
    Ok((objects_from_table(&table, metric)?, table.fingerprint()))
}

pub fn read_distance_matrix(path: &Path) -> Result<(DistanceMatrix, Fingerprint)> {
    let table = read_table(path)?;
    let n = table.rows.len();
    let width = same_width(&table)?;
    if width != n {
        return Err(table.invalid(format!("distance matrix must be square, found {n} rows of {width} columns")));
    }
    let entries = table.rows.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    let d = DistanceMatrix::from_row_major(n, entries).map_err(|e| table.invalid(e.to_string()))?;
    Ok((d, table.fingerprint()))
}

pub fn read_covariate(path: &Path) -> Result<(Vec<f64>, Fingerprint)> {
    let table = read_table(path)?;
    let width = same_width(&table)?;
    if width != 1 {
        return Err(table.invalid(format!(
            "covariate file has {width} columns; only a scalar covariate is supported \
             (multivariate Z would need a single-index reduction, which is out of scope)"
        )));
    }
    Ok((table.rows.iter().map(|(_, r)| r[0]).collect(), table.fingerprint()))
}

fn create(path: &Path) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_rows<W: Write>(mut out: W, header: Option<Vec<String>>, rows: impl Iterator<Item = Vec<f64>>) -> std::io::Result<()> {
    if let Some(h) = header {
        writeln!(out, "{}", h.join(","))?;
    }
    for row in rows {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()
}

/// Writes objects in the layout their kind reads from: plain rows for
/// vectors, `p` plus entries for matrices, and a `q1..qm` header for grids.
pub fn write_objects(path: &Path, objects: &[MetricObject]) -> std::io::Result<()> {
    let header = match objects.first() {
        Some(MetricObject::QuantileGrid(g)) => Some((1..=g.len()).map(|k| format!("q{k}")).collect()),
        _ => None,
    };
    let rows = objects.iter().map(|o| match o {
        MetricObject::Vector(v) | MetricObject::UnitVector(v) | MetricObject::QuantileGrid(v) => v.clone(),
        MetricObject::Spd(m) => {
            let mut row = vec![m.dim() as f64];
            row.extend(m.to_row_major());
            row
        }
    });
    write_rows(create(path)?, header, rows)
}

pub fn write_distance_matrix(path: &Path, d: &DistanceMatrix) -> std::io::Result<()> {
    write_rows(create(path)?, None, (0..d.n()).map(|i| d.row(i).to_vec()))
}

pub fn write_covariate(path: &Path, z: &[f64]) -> std::io::Result<()> {
    write_rows(create(path)?, Some(vec!["z".into()]), z.iter().map(|&v| vec![v]))
}
