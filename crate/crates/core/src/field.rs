//! Multi-source complex fields stored column-major, one column per source.

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    rows: usize,
    cols: usize,
    data: Vec<c64>,
}

impl FieldSet {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldSet {
            rows,
            cols,
            data: vec![c64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: Vec<Vec<c64>>) -> Result<Self> {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for (j, c) in columns.into_iter().enumerate() {
            if c.len() != rows {
                return Err(Error::shape(format!(
                    "column {j} has {} rows, expected {rows}",
                    c.len()
                )));
            }
            data.extend(c);
        }
        Ok(FieldSet { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> c64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        FieldSet { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[c64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[c64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [c64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[c64]> {
        (0..self.cols).map(move |j| self.col(j))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: c64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn check_same(&self, other: &FieldSet) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "field shapes differ: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: c64, other: &FieldSet) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldSet) -> Result<FieldSet> {
        self.check_same(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(FieldSet {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &FieldSet) -> Result<FieldSet> {
        self.check_same(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(FieldSet {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, alpha: c64) -> FieldSet {
        FieldSet {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Rows at `idx`, in order.
    pub fn gather_rows(&self, idx: &[usize]) -> FieldSet {
        let mut out = FieldSet::zeros(idx.len(), self.cols);
        for j in 0..self.cols {
            let src = self.col(j);
            for (dst, &i) in out.col_mut(j).iter_mut().zip(idx) {
                *dst = src[i];
            }
        }
        out
    }

    /// Writes `values` into rows `idx`.
    pub fn scatter_rows(&mut self, idx: &[usize], values: &FieldSet) -> Result<()> {
        if values.rows != idx.len() || values.cols != self.cols {
            return Err(Error::shape(format!(
                "scatter of {}x{} into {} rows of a {}-column field",
                values.rows,
                values.cols,
                idx.len(),
                self.cols
            )));
        }
        for j in 0..self.cols {
            let src = values.col(j).to_vec();
            let dst = self.col_mut(j);
            for (&i, v) in idx.iter().zip(src) {
                dst[i] = v;
            }
        }
        Ok(())
    }

    /// Inverse of two `gather_rows` calls over complementary index sets.
    pub fn merge_rows(
        rows: usize,
        idx_a: &[usize],
        a: &FieldSet,
        idx_b: &[usize],
        b: &FieldSet,
    ) -> Result<FieldSet> {
        if idx_a.len() + idx_b.len() != rows {
            return Err(Error::shape(
                "index sets do not cover the field".to_string(),
            ));
        }
        let mut out = FieldSet::zeros(rows, a.cols.max(b.cols));
        out.scatter_rows(idx_a, a)?;
        out.scatter_rows(idx_b, b)?;
        Ok(out)
    }
}

/// Relative Frobenius distance `||a - b|| / ||b||`.
pub fn relative_distance(a: &FieldSet, b: &FieldSet) -> f64 {
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    diff.sqrt() / b.norm_fro().max(f64::MIN_POSITIVE)
}
