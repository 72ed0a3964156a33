//! Flat parameter vectors with an explicit layout descriptor.
//!
//! Every trainable model in the crate can be packed into a [`ParamVector`].
//! Models built from the same architecture produce identical layouts, so
//! deltas, averages and distances across models are plain vector arithmetic.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One named tensor inside a [`Layout`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Ordered, contiguous description of a flat parameter array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    entries: Vec<LayoutEntry>,
    total: usize,
}

impl Layout {
    pub fn builder() -> LayoutBuilder {
        LayoutBuilder::default()
    }

    /// Rebuilds a layout from raw entries, checking that offsets are
    /// contiguous and start at zero.
    pub fn from_entries(entries: Vec<LayoutEntry>) -> Result<Self> {
        let mut next = 0;
        for e in &entries {
            if e.offset != next {
                return Err(Error::LayoutMismatch(format!(
                    "entry `{}` starts at {} but previous entry ends at {}",
                    e.name, e.offset, next
                )));
            }
            next += e.len();
        }
        Ok(Layout {
            entries,
            total: next,
        })
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn entry(&self, name: &str) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Keeps the leading entries accepted by `keep`. Used to carve the
    /// encoder half out of an autoencoder layout.
    pub fn prefix_while(&self, mut keep: impl FnMut(&LayoutEntry) -> bool) -> Layout {
        let entries: Vec<_> = self.entries.iter().take_while(|e| keep(e)).cloned().collect();
        let total = entries.iter().map(LayoutEntry::len).sum();
        Layout { entries, total }
    }

    /// 64-bit digest of the descriptor (names, shapes, offsets).
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        for e in &self.entries {
            hasher.update(e.name.as_bytes());
            hasher.update([0u8]);
            for &d in &e.shape {
                hasher.update((d as u64).to_le_bytes());
            }
            hasher.update((e.offset as u64).to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(head)
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}{:?}@{}", e.name, e.shape, e.offset)?;
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct LayoutBuilder {
    entries: Vec<LayoutEntry>,
    next: usize,
}

impl LayoutBuilder {
    pub fn push(mut self, name: impl Into<String>, shape: &[usize]) -> Self {
        self.add(name, shape);
        self
    }

    pub fn add(&mut self, name: impl Into<String>, shape: &[usize]) {
        let entry = LayoutEntry {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.next,
        };
        self.next += entry.len();
        self.entries.push(entry);
    }

    pub fn build(self) -> Layout {
        Layout {
            entries: self.entries,
            total: self.next,
        }
    }
}

/// Flat `f64` parameters plus the layout that gives them meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layout: Arc<Layout>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if layout.len() != values.len() {
            return Err(Error::shape("ParamVector::new", layout.len(), values.len()));
        }
        Ok(ParamVector { layout, values })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        let values = vec![0.0; layout.len()];
        ParamVector { layout, values }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values of a single named tensor.
    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout.entry(name).map(|e| &self.values[e.range()])
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub fn ensure_same_layout(&self, other: &ParamVector) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::LayoutMismatch(format!(
                "[{}] vs [{}]",
                self.layout, other.layout
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.ensure_same_layout(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ParamVector {
            layout: self.layout.clone(),
            values,
        })
    }

    /// `self += scale * other`, elementwise.
    pub fn axpy(&mut self, scale: f64, other: &ParamVector) -> Result<()> {
        self.ensure_same_layout(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ParamVector) -> Result<f64> {
        self.ensure_same_layout(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> Result<f64> {
        self.ensure_same_layout(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Models whose trainable state packs into a canonical [`ParamVector`].
pub trait Parameterized {
    fn layout(&self) -> Arc<Layout>;

    fn params(&self) -> ParamVector;

    fn set_params(&mut self, params: &ParamVector) -> Result<()>;
}
