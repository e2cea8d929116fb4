//! Compressed sparse row matrices over complex doubles.
//!
//! Duplicate triplets are summed in insertion order, so assembly is bitwise
//! reproducible for identical inputs.

use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::field::FieldSet;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<c64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, c64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::shape(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: equal (row, col) keep insertion order
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<c64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![c64::new(1.0, 0.0); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[c64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> c64 {
        let (idx, val) = self.row(r);
        idx.iter()
            .position(|&k| k == c)
            .map(|p| val[p])
            .unwrap_or_default()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, c64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            out.extend(idx.iter().zip(val).map(|(&c, &v)| (r, c, v)));
        }
        out
    }

    pub fn matvec(&self, x: &[c64]) -> Result<Vec<c64>> {
        if x.len() != self.ncols {
            return Err(Error::shape(format!(
                "matvec: {} columns vs vector of {}",
                self.ncols,
                x.len()
            )));
        }
        Ok((0..self.nrows)
            .map(|r| {
                let (idx, val) = self.row(r);
                idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect())
    }

    /// `self^H x`.
    pub fn adjoint_matvec(&self, x: &[c64]) -> Result<Vec<c64>> {
        if x.len() != self.nrows {
            return Err(Error::shape(format!(
                "adjoint matvec: {} rows vs vector of {}",
                self.nrows,
                x.len()
            )));
        }
        let mut out = vec![c64::new(0.0, 0.0); self.ncols];
        for (r, xr) in x.iter().enumerate() {
            let (idx, val) = self.row(r);
            for (&c, v) in idx.iter().zip(val) {
                out[c] += v.conj() * xr;
            }
        }
        Ok(out)
    }

    pub fn mul_fields(&self, u: &FieldSet) -> Result<FieldSet> {
        let cols = u
            .columns()
            .map(|c| self.matvec(c))
            .collect::<Result<Vec<_>>>()?;
        FieldSet::from_columns(self.nrows, cols)
    }

    pub fn adjoint_mul_fields(&self, u: &FieldSet) -> Result<FieldSet> {
        let cols = u
            .columns()
            .map(|c| self.adjoint_matvec(c))
            .collect::<Result<Vec<_>>>()?;
        FieldSet::from_columns(self.ncols, cols)
    }

    /// Columns `cols` in the given order, as an `nrows x cols.len()` matrix.
    pub fn select_columns(&self, cols: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            local[c] = k;
        }
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut entries: Vec<(usize, c64)> = Vec::new();
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            entries.clear();
            entries.extend(
                idx.iter()
                    .zip(val)
                    .filter(|(c, _)| local[**c] != usize::MAX)
                    .map(|(c, v)| (local[*c], *v)),
            );
            entries.sort_by_key(|e| e.0);
            for &(c, v) in &entries {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: cols.len(),
            indptr,
            indices,
            values,
        }
    }

    /// Gram matrix `self^H self`, accumulated row by row in a fixed order.
    pub fn gram(&self) -> CsrMatrix {
        let mut trip = Vec::new();
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            for (&ci, vi) in idx.iter().zip(val) {
                for (&cj, vj) in idx.iter().zip(val) {
                    trip.push((ci, cj, vi.conj() * vj));
                }
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.ncols, &trip).expect("gram indices in range")
    }

    pub fn scaled(&self, alpha: c64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// `self + other`, both of the same shape.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::shape("matrix sum of different shapes".to_string()));
        }
        let mut trip = self.triplets();
        trip.extend(other.triplets());
        CsrMatrix::from_triplets(self.nrows, self.ncols, &trip)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let trip: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (c, r, v))
            .collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, &trip).expect("transpose indices in range")
    }

    pub fn to_dense(&self) -> Vec<Vec<c64>> {
        let mut out = vec![vec![c64::new(0.0, 0.0); self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, c64>> {
        let trip: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::Solver(format!("sparse conversion failed: {e:?}")))
    }

    pub(crate) fn lower_triangle(&self) -> CsrMatrix {
        let trip: Vec<_> = self
            .triplets()
            .into_iter()
            .filter(|(r, c, _)| c <= r)
            .collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &trip).expect("triangle indices in range")
    }
}
