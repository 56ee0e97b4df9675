//! Datasets: CSV ingestion with positivity preprocessing, and synthetic
//! generators with corner-block or random grid-like missing values.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::distributions::Open01;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MaskMatrix};

/// Default tokens that mark a missing cell, in addition to an empty cell.
pub const DEFAULT_MISSING_TOKENS: [&str; 4] = ["", "NA", "NaN", "?"];

/// Offset added to generated uniform(0, 1) values.
pub const GEN_OFFSET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Csv,
    SyntheticCorner,
    SyntheticGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    /// Data; entries at missing positions are NaN.
    pub t: DenseMatrix,
    pub phi: MaskMatrix,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub missing_tokens: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            missing_tokens: DEFAULT_MISSING_TOKENS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, &name, opts).map_err(|e| relabel(e, path))
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: path.display().to_string(),
            line,
            msg,
        },
        other => other,
    }
}

/// Parses a rectangular numeric CSV without a header row, then
/// 1. marks missing cells,
/// 2. replaces negatives by their absolute value,
/// 3. replaces zeros by the mean of the observed nonzero absolute values.
pub fn parse_csv(text: &str, name: &str, opts: &CsvOptions) -> Result<Dataset> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: name.to_string(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(opts.delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut cells: Vec<Option<f64>> = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_err(
                    line,
                    format!("expected {c} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for field in record.iter() {
            let field = field.trim();
            if opts.missing_tokens.iter().any(|tok| tok == field) {
                cells.push(None);
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => cells.push(Some(v)),
                _ => return Err(parse_err(line, format!("non-numeric value {field:?}"))),
            }
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);

    let nonzero: Vec<f64> = cells
        .iter()
        .flatten()
        .map(|v| v.abs())
        .filter(|&v| v > 0.0)
        .collect();
    if cells.iter().all(Option::is_none) {
        return Err(parse_err(0, "no observed values".into()));
    }
    let fill = if nonzero.is_empty() {
        return Err(parse_err(0, "every observed value is zero".into()));
    } else {
        nonzero.iter().sum::<f64>() / nonzero.len() as f64
    };

    let phi = MaskMatrix::from_fn(rows, cols, |i, j| cells[i * cols + j].is_some());
    let t = DenseMatrix::from_fn(rows, cols, |i, j| match cells[i * cols + j] {
        None => f64::NAN,
        Some(0.0) => fill,
        Some(v) => v.abs(),
    });
    Ok(Dataset {
        name: name.to_string(),
        t,
        phi,
        provenance: Provenance::Csv,
    })
}

/// Writes observed values with round-trip precision and missing cells empty.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let mut out = File::create(path)?;
    out.write_all(to_csv_string(ds, delimiter).as_bytes())?;
    Ok(())
}

pub fn to_csv_string(ds: &Dataset, delimiter: u8) -> String {
    let sep = delimiter as char;
    let mut s = String::new();
    for i in 0..ds.t.rows() {
        for j in 0..ds.t.cols() {
            if j > 0 {
                s.push(sep);
            }
            if ds.phi.is_observed(i, j) {
                s.push_str(&format!("{:?}", ds.t.get(i, j)));
            }
        }
        s.push('\n');
    }
    s
}

/// Side of the square missing block for a target missing fraction, rounded up.
pub fn block_side(n: usize, frac_missing: f64) -> usize {
    // slack keeps exact products such as 10·√0.04 from rounding up to 3
    ((n as f64 * frac_missing.sqrt()) - 1e-9).ceil().max(0.0) as usize
}

fn check_fraction(n: usize, frac_missing: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&frac_missing) {
        return Err(Error::InvalidArgument(format!(
            "missing fraction must be in [0, 1), got {frac_missing}"
        )));
    }
    let k = block_side(n, frac_missing);
    if k >= n && n > 0 {
        return Err(Error::InvalidArgument(format!(
            "a {k}x{k} missing block leaves no observed rows in a {n}x{n} matrix"
        )));
    }
    Ok(k)
}

fn uniform_matrix(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(Open01) + GEN_OFFSET)
}

/// `n×n` positive matrix whose missing entries form a `k×k` bottom-right
/// block, `k = ⌈n √frac⌉`.
pub fn gen_corner_missing(n: usize, frac_missing: f64, seed: u64) -> Result<Dataset> {
    let k = check_fraction(n, frac_missing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = uniform_matrix(n, &mut rng);
    let phi = MaskMatrix::from_fn(n, n, |i, j| !(i >= n - k && j >= n - k));
    Ok(Dataset {
        name: format!("corner-n{n}-f{frac_missing}-s{seed}"),
        t,
        phi,
        provenance: Provenance::SyntheticCorner,
    })
}

/// `n×n` positive matrix with missing entries at `S1 × S2` for random row and
/// column subsets of size `⌈n √frac⌉`.
pub fn gen_grid_missing(n: usize, frac_missing: f64, seed: u64) -> Result<Dataset> {
    let k = check_fraction(n, frac_missing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = uniform_matrix(n, &mut rng);
    let mut row_in = vec![false; n];
    let mut col_in = vec![false; n];
    sample(&mut rng, n, k)
        .into_iter()
        .for_each(|r| row_in[r] = true);
    sample(&mut rng, n, k)
        .into_iter()
        .for_each(|c| col_in[c] = true);
    let phi = MaskMatrix::from_fn(n, n, |i, j| !(row_in[i] && col_in[j]));
    Ok(Dataset {
        name: format!("grid-n{n}-f{frac_missing}-s{seed}"),
        t,
        phi,
        provenance: Provenance::SyntheticGrid,
    })
}
