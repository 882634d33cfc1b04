//! Ingestion of the UCI Multiple Features files, positional label
//! assignment, and the 1000/1000 train/test split.
//!
//! The source files are plain ASCII matrices, 2000 rows of
//! whitespace-separated numbers, ordered in blocks of 200 consecutive rows
//! per digit, digits ascending 0–9. The files carry no label column; labels
//! come from row position. Row `i` refers to the same numeral in every
//! file, so one [`SplitSpec`] must be reused across all six.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MFEAT_ROWS: usize = 2000;
pub const MFEAT_CLASSES: usize = 10;
pub const MFEAT_BLOCK: usize = 200;

/// The six feature representations of the handwritten numerals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSetName {
    Fourier,
    ProfileCorrelations,
    KarhunenLoeve,
    Pixel,
    Zernike,
    Morphological,
}

impl FeatureSetName {
    pub const ALL: [FeatureSetName; 6] = [
        FeatureSetName::Fourier,
        FeatureSetName::ProfileCorrelations,
        FeatureSetName::KarhunenLoeve,
        FeatureSetName::Pixel,
        FeatureSetName::Zernike,
        FeatureSetName::Morphological,
    ];

    /// Feature dimension of this representation.
    pub fn dim(self) -> usize {
        match self {
            FeatureSetName::Fourier => 76,
            FeatureSetName::ProfileCorrelations => 216,
            FeatureSetName::KarhunenLoeve => 64,
            FeatureSetName::Pixel => 240,
            FeatureSetName::Zernike => 47,
            FeatureSetName::Morphological => 6,
        }
    }

    /// Canonical UCI file name.
    pub fn canonical_file(self) -> &'static str {
        match self {
            FeatureSetName::Fourier => "mfeat-fou",
            FeatureSetName::ProfileCorrelations => "mfeat-fac",
            FeatureSetName::KarhunenLoeve => "mfeat-kar",
            FeatureSetName::Pixel => "mfeat-pix",
            FeatureSetName::Zernike => "mfeat-zer",
            FeatureSetName::Morphological => "mfeat-mor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fourier" | "mfeat-fou" => Some(FeatureSetName::Fourier),
            "profile-correlations" | "mfeat-fac" => Some(FeatureSetName::ProfileCorrelations),
            "karhunen-loeve" | "mfeat-kar" => Some(FeatureSetName::KarhunenLoeve),
            "pixel" | "mfeat-pix" => Some(FeatureSetName::Pixel),
            "zernike" | "mfeat-zer" => Some(FeatureSetName::Zernike),
            "morphological" | "mfeat-mor" => Some(FeatureSetName::Morphological),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetName::Fourier => "fourier",
            FeatureSetName::ProfileCorrelations => "profile-correlations",
            FeatureSetName::KarhunenLoeve => "karhunen-loeve",
            FeatureSetName::Pixel => "pixel",
            FeatureSetName::Zernike => "zernike",
            FeatureSetName::Morphological => "morphological",
        }
    }
}

impl fmt::Display for FeatureSetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One loaded feature representation: a 2000 × d matrix.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub name: FeatureSetName,
    matrix: Matrix,
}

impl FeatureSet {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Attaches the positional digit labels.
    pub fn into_labeled(self) -> LabeledDataset {
        LabeledDataset {
            features: self.matrix,
            labels: mfeat_labels(),
            class_count: MFEAT_CLASSES,
        }
    }
}

/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::domain("ragged rows in matrix"));
        }
        Ok(Matrix {
            data: rows.into_iter().flatten().collect(),
            rows: nrows,
            cols: ncols,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Feature matrix plus class labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dimension {
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&l| l >= class_count) {
            return Err(Error::domain("label out of range"));
        }
        Ok(LabeledDataset {
            features,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    fn take_rows(&self, idx: &[usize]) -> LabeledDataset {
        let mut data = Vec::with_capacity(idx.len() * self.dim());
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            data.extend_from_slice(self.features.row(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset {
            features: Matrix {
                data,
                rows: idx.len(),
                cols: self.dim(),
            },
            labels,
            class_count: self.class_count,
        }
    }
}

/// Digit labels by row position: blocks of 200, digits 0–9 ascending.
pub fn mfeat_labels() -> Vec<usize> {
    (0..MFEAT_ROWS).map(|i| i / MFEAT_BLOCK).collect()
}

/// Parses one mfeat file into a validated 2000 × `expected_dim` matrix.
///
/// Accepts arbitrary run-length whitespace and scientific notation. Parse
/// failures report the 1-based line and column of the offending token.
pub fn load_feature_file(path: &Path, expected_dim: usize) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(MFEAT_ROWS);
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(expected_dim);
        for (col, token) in tokens_with_columns(line) {
            let value: f64 = token.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no + 1,
                column: col,
                message: format!("unparseable number {token:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no + 1,
                    column: col,
                    message: format!("non-finite value {token:?}"),
                });
            }
            row.push(value);
        }
        if row.len() != expected_dim {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no + 1,
                column: 1,
                message: format!("expected {expected_dim} columns, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.len() != MFEAT_ROWS {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: rows.len(),
            column: 1,
            message: format!("expected {MFEAT_ROWS} rows, found {}", rows.len()),
        });
    }
    Matrix::from_rows(rows)
}

/// Loads and labels one named feature set.
pub fn load_feature_set(name: FeatureSetName, path: &Path) -> Result<FeatureSet> {
    let matrix = load_feature_file(path, name.dim())?;
    Ok(FeatureSet { name, matrix })
}

fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let bytes = line.as_bytes();
    let mut pos = 0usize;
    std::iter::from_fn(move || {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return None;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        Some((start + 1, &line[start..pos]))
    })
}

/// How the 2000 rows are divided into 1000 train / 1000 test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Rows 0–99 of each 200-row block train, rows 100–199 test.
    FirstHalf,
    /// Seeded permutation within each block, then the same 100/100 rule.
    Shuffle,
}

/// Split specification; the seed only matters in shuffle mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seed: u64,
}

impl SplitSpec {
    pub const FIRST_HALF: SplitSpec = SplitSpec {
        mode: SplitMode::FirstHalf,
        seed: 0,
    };

    pub fn shuffle(seed: u64) -> SplitSpec {
        SplitSpec {
            mode: SplitMode::Shuffle,
            seed,
        }
    }

    /// Train/test row indices into the 2000-row source order.
    pub fn indices(&self) -> (Vec<usize>, Vec<usize>) {
        let half = MFEAT_BLOCK / 2;
        let mut train = Vec::with_capacity(MFEAT_ROWS / 2);
        let mut test = Vec::with_capacity(MFEAT_ROWS / 2);
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        for block in 0..MFEAT_CLASSES {
            let mut idx: Vec<usize> = (block * MFEAT_BLOCK..(block + 1) * MFEAT_BLOCK).collect();
            if self.mode == SplitMode::Shuffle {
                shuffle(&mut idx, &mut rng);
            }
            train.extend_from_slice(&idx[..half]);
            test.extend_from_slice(&idx[half..]);
        }
        (train, test)
    }
}

/// Fisher–Yates with a widening-multiply index map, so the permutation is a
/// pure function of the ChaCha stream and stays stable across dependency
/// upgrades.
fn shuffle(idx: &mut [usize], rng: &mut ChaCha20Rng) {
    for i in (1..idx.len()).rev() {
        let j = ((rng.next_u32() as u64 * (i as u64 + 1)) >> 32) as usize;
        idx.swap(i, j);
    }
}

/// Applies the split, preserving values and block stratification.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    if ds.len() != MFEAT_ROWS {
        return Err(Error::domain(format!(
            "split expects the {MFEAT_ROWS}-row source layout, got {} rows",
            ds.len()
        )));
    }
    let (train_idx, test_idx) = spec.indices();
    Ok((ds.take_rows(&train_idx), ds.take_rows(&test_idx)))
}

/// Manifest mapping feature-set names to file paths.
///
/// Plain text, one entry per line: `<name> <path> [dim]`, `#` comments.
/// The optional third token overrides the expected dimension.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub name: FeatureSetName,
    pub path: PathBuf,
    pub dim: usize,
}

impl Manifest {
    pub fn parse(text: &str, origin: &Path) -> Result<Manifest> {
        let base = origin.parent().unwrap_or_else(|| Path::new(""));
        let mut entries = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let name_tok = parts.next().unwrap();
            let name = FeatureSetName::parse(name_tok).ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no + 1,
                column: 1,
                message: format!("unknown feature set {name_tok:?}"),
            })?;
            let path_tok = parts.next().ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no + 1,
                column: 1,
                message: "missing path".into(),
            })?;
            let dim = match parts.next() {
                Some(d) => d.parse().map_err(|_| Error::Parse {
                    path: origin.to_path_buf(),
                    line: line_no + 1,
                    column: 1,
                    message: format!("bad dimension {d:?}"),
                })?,
                None => name.dim(),
            };
            let mut path = PathBuf::from(path_tok);
            if path.is_relative() {
                path = base.join(path);
            }
            entries.push(ManifestEntry { name, path, dim });
        }
        if entries.is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                column: 1,
                message: "manifest has no entries".into(),
            });
        }
        Ok(Manifest { entries })
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text, path)
    }
}
