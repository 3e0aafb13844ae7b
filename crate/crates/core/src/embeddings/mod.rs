//! Dense embedding tables for words and entities.
//!
//! A table holds `len` rows of `dim` finite `f32` values in one contiguous
//! buffer, addressed by a byte-string label. Labels are kept as raw bytes so
//! that binary files with non-UTF-8 labels survive a round trip; they are only
//! decoded (lossily) for display.

mod binary;
mod text;

use std::borrow::Cow;
use std::collections::HashMap;

pub use binary::{load_binary, read_binary, save_binary, write_binary};
pub use text::{load_text, read_text, save_text, write_text};

use crate::error::{Error, Result};

/// A borrowed row of an [`EmbeddingTable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VectorRef<'a> {
    pub label: &'a [u8],
    pub values: &'a [f32],
}

impl VectorRef<'_> {
    pub fn label_str(&self) -> Cow<'_, str> {
        String::from_utf8_lossy(self.label)
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    labels: Vec<Box<[u8]>>,
    index: HashMap<Box<[u8]>, usize>,
    data: Vec<f32>,
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        // Bitwise comparison so that -0.0 and 0.0 are distinguished.
        self.dim == other.dim
            && self.labels == other.labels
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_capacity(dim, 0)
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Value("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dim,
            labels: Vec::with_capacity(rows),
            index: HashMap::with_capacity(rows),
            data: Vec::with_capacity(rows * dim),
        })
    }

    /// Builds a table from `(label, vector)` pairs, validating every row.
    pub fn from_rows<L, I>(dim: usize, rows: I) -> Result<Self>
    where
        L: AsRef<[u8]>,
        I: IntoIterator<Item = (L, Vec<f32>)>,
    {
        let mut table = Self::new(dim)?;
        for (label, values) in rows {
            table.push(label, &values)?;
        }
        Ok(table)
    }

    /// Appends a row. Labels must be non-empty, unique and free of
    /// space/newline bytes; values must be finite and of length `dim`.
    pub fn push(&mut self, label: impl AsRef<[u8]>, values: &[f32]) -> Result<()> {
        let label = label.as_ref();
        validate_label(label)?;
        if values.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite component {bad} for `{}`",
                String::from_utf8_lossy(label)
            )));
        }
        self.push_unchecked_values(label.into(), values)
    }

    /// Label uniqueness is still enforced; value checks are the caller's job.
    pub(crate) fn push_unchecked_values(&mut self, label: Box<[u8]>, values: &[f32]) -> Result<()> {
        let idx = self.labels.len();
        if self.index.contains_key(&label) {
            return Err(Error::DuplicateLabel(
                String::from_utf8_lossy(&label).into_owned(),
            ));
        }
        self.index.insert(label.clone(), idx);
        self.labels.push(label);
        self.data.extend_from_slice(values);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: impl AsRef<[u8]>) -> bool {
        self.index.contains_key(label.as_ref())
    }

    pub fn position(&self, label: impl AsRef<[u8]>) -> Option<usize> {
        self.index.get(label.as_ref()).copied()
    }

    /// Exact-match lookup; an absent label is not an error.
    pub fn lookup(&self, label: impl AsRef<[u8]>) -> Option<VectorRef<'_>> {
        self.position(label).map(|i| self.row(i))
    }

    pub fn vector(&self, label: impl AsRef<[u8]>) -> Option<&[f32]> {
        self.lookup(label).map(|r| r.values)
    }

    /// Panics if `i >= len()`.
    pub fn row(&self, i: usize) -> VectorRef<'_> {
        VectorRef {
            label: &self.labels[i],
            values: &self.data[i * self.dim..(i + 1) * self.dim],
        }
    }

    pub fn label(&self, i: usize) -> &[u8] {
        &self.labels[i]
    }

    pub fn label_str(&self, i: usize) -> Cow<'_, str> {
        String::from_utf8_lossy(&self.labels[i])
    }

    pub fn labels(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.labels.iter().map(|l| &**l)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = VectorRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// The raw row-major buffer.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Copy with every non-zero row scaled to unit L2 norm.
    pub fn normalized(&self) -> EmbeddingTable {
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.dim) {
            let norm = row
                .iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt();
            if norm > 0.0 {
                for v in row.iter_mut() {
                    *v = (f64::from(*v) / norm) as f32;
                }
            }
        }
        out
    }
}

pub(crate) fn validate_label(label: &[u8]) -> Result<()> {
    if label.is_empty() {
        return Err(Error::Value("empty label".into()));
    }
    if label.iter().any(|&b| b == b' ' || b == b'\n') {
        return Err(Error::Value(format!(
            "label `{}` contains a space or newline",
            String::from_utf8_lossy(label)
        )));
    }
    Ok(())
}
