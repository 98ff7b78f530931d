//! Complex sparse (CSR) and dense matrices.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Read access shared by the sparse and dense representations.
pub trait MatrixView {
    fn shape(&self) -> (usize, usize);

    /// Visits every stored entry; zeros may or may not be visited.
    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, C64));

    fn is_real(&self) -> bool {
        let mut real = true;
        self.for_each_entry(&mut |_, _, v| real &= v.im == 0.0);
        real
    }

    fn to_dense(&self) -> DenseMatrix {
        let (r, c) = self.shape();
        let mut out = DenseMatrix::zeros(r, c);
        self.for_each_entry(&mut |i, j, v| out.data[i * c + j] += v);
        out
    }

    /// Row-major real parts; callers check `is_real` when it matters.
    fn to_real_dense(&self) -> Vec<f64> {
        let (r, c) = self.shape();
        let mut out = vec![0.0; r * c];
        self.for_each_entry(&mut |i, j, v| out[i * c + j] += v.re);
        out
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    fn max_asymmetry(&self) -> f64 {
        self.to_dense().max_asymmetry()
    }

    fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        self.for_each_entry(&mut |_, _, v| m = m.max(v.norm()));
        m
    }

    fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        self.for_each_entry(&mut |_, _, v| s += v.norm_sqr());
        s.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> SparseMatrix {
        SparseMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix::diagonal(vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(diag: Vec<C64>) -> SparseMatrix {
        let n = diag.len();
        SparseMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag,
        }
        .pruned()
    }

    /// Builds from 0-based triplets; duplicates are summed, explicit zeros
    /// are kept out.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
    ) -> Result<SparseMatrix> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({i},{j}) in a {nrows}x{ncols} matrix"
            )));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            indptr[i + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for k in 0..nrows {
            indptr[k + 1] += indptr[k];
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
        .pruned())
    }

    /// Rows given as (column, value) lists, columns strictly increasing.
    pub(crate) fn from_sorted_rows(ncols: usize, rows: Vec<Vec<(usize, C64)>>) -> SparseMatrix {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in rows {
            for (j, v) in row {
                debug_assert!(indices.len() == *indptr.last().unwrap() || *indices.last().unwrap() < j);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
        .pruned()
    }

    fn pruned(self) -> SparseMatrix {
        if self.values.iter().all(|v| *v != ZERO) {
            return self;
        }
        let mut indptr = vec![0; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.values[k] != ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
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

    /// `(column, value)` pairs of row `i`, columns increasing.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => ZERO,
        }
    }

    /// 0-based `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            out.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        out
    }

    pub fn diagonal_values(&self) -> Option<Vec<C64>> {
        if self.nrows != self.ncols {
            return None;
        }
        let mut d = vec![ZERO; self.nrows];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if i != j {
                    return None;
                }
                d[i] = v;
            }
        }
        Some(d)
    }

    pub fn scale(&self, alpha: C64) -> SparseMatrix {
        SparseMatrix {
            values: self.values.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
        .pruned()
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> SparseMatrix {
        SparseMatrix {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
        .pruned()
    }

    /// `alpha * self + beta * other`.
    pub fn axpby(&self, alpha: C64, other: &SparseMatrix, beta: C64) -> Result<SparseMatrix> {
        self.same_shape(other)?;
        let rows = (0..self.nrows)
            .map(|i| {
                let mut a = self.row(i).peekable();
                let mut b = other.row(i).peekable();
                let mut row = Vec::new();
                loop {
                    match (a.peek().copied(), b.peek().copied()) {
                        (None, None) => break,
                        (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                            row.push((ja, alpha * va + beta * vb));
                            a.next();
                            b.next();
                        }
                        (Some((ja, va)), Some((jb, _))) if ja < jb => {
                            row.push((ja, alpha * va));
                            a.next();
                        }
                        (Some((ja, va)), None) => {
                            row.push((ja, alpha * va));
                            a.next();
                        }
                        (_, Some((jb, vb))) => {
                            row.push((jb, beta * vb));
                            b.next();
                        }
                    }
                }
                row
            })
            .collect();
        Ok(SparseMatrix::from_sorted_rows(self.ncols, rows))
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.axpby(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.axpby(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::SizeMismatch {
                expected: (self.ncols, other.ncols),
                found: (other.nrows, other.ncols),
            });
        }
        let mut acc = vec![ZERO; other.ncols];
        let mut used = vec![false; other.ncols];
        let mut cols = Vec::new();
        let rows = (0..self.nrows)
            .map(|i| {
                cols.clear();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        if !used[j] {
                            used[j] = true;
                            cols.push(j);
                        }
                        acc[j] += a * b;
                    }
                }
                cols.sort_unstable();
                cols.iter()
                    .map(|&j| {
                        used[j] = false;
                        (j, std::mem::replace(&mut acc[j], ZERO))
                    })
                    .collect()
            })
            .collect();
        Ok(SparseMatrix::from_sorted_rows(other.ncols, rows))
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for k in 0..self.ncols {
            counts[k + 1] += counts[k];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![ZERO; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let slot = next[j];
                next[j] += 1;
                indices[slot] = i;
                values[slot] = v.conj();
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    /// `(A + A^H) / 2`.
    pub fn hermitian_part(&self) -> Result<SparseMatrix> {
        self.axpby(C64::new(0.5, 0.0), &self.adjoint(), C64::new(0.5, 0.0))
    }

    /// `(A - A^H) / (2i)`, so that `A = Re + i Im` with both Hermitian.
    pub fn skew_part(&self) -> Result<SparseMatrix> {
        self.axpby(C64::new(0.0, -0.5), &self.adjoint(), C64::new(0.0, 0.5))
    }

    /// Principal submatrix on the given 0-based, strictly increasing indices.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Result<SparseMatrix> {
        if self.nrows != self.ncols {
            return Err(Error::SizeMismatch {
                expected: (self.nrows, self.nrows),
                found: (self.nrows, self.ncols),
            });
        }
        let mut pos = vec![usize::MAX; self.ncols];
        for (k, &j) in keep.iter().enumerate() {
            if j >= self.ncols {
                return Err(Error::IndexOutOfRange(format!("index {j} of {}", self.ncols)));
            }
            pos[j] = k;
        }
        let rows = keep
            .iter()
            .map(|&i| {
                self.row(i)
                    .filter_map(|(j, v)| (pos[j] != usize::MAX).then(|| (pos[j], v)))
                    .collect()
            })
            .collect();
        Ok(SparseMatrix::from_sorted_rows(keep.len(), rows))
    }

    fn same_shape(&self, other: &SparseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::SizeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }
}

impl MatrixView for SparseMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, C64)) {
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                f(i, j, v);
            }
        }
    }

    fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Row-major complex dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> DenseMatrix {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![ZERO; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<C64>) -> Result<DenseMatrix> {
        if data.len() != nrows * ncols {
            return Err(Error::SizeMismatch {
                expected: (nrows, ncols),
                found: (data.len(), 1),
            });
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn from_real(nrows: usize, ncols: usize, data: &[f64]) -> Result<DenseMatrix> {
        DenseMatrix::from_row_major(nrows, ncols, data.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> DenseMatrix {
        let ncols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        DenseMatrix::from_real(rows.len(), ncols, &data).expect("ragged rows")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.data[j * self.nrows + i] = self.data[i * self.ncols + j].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::SizeMismatch {
                expected: (self.ncols, other.ncols),
                found: (other.nrows, other.ncols),
            });
        }
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            let orow = &mut out.data[i * other.ncols..(i + 1) * other.ncols];
            for k in 0..self.ncols {
                let a = self.data[i * self.ncols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.ncols..(k + 1) * other.ncols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn axpby(&self, alpha: C64, other: &DenseMatrix, beta: C64) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::SizeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.axpby(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let n = self.nrows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.ncols)
            .map(|j| (0..self.nrows).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.data[i * self.ncols..(i + 1) * self.ncols].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let rows = (0..self.nrows)
            .map(|i| {
                (0..self.ncols)
                    .filter_map(|j| {
                        let v = self.get(i, j);
                        (v != ZERO).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        SparseMatrix::from_sorted_rows(self.ncols, rows)
    }
}

impl MatrixView for DenseMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, C64)) {
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                f(i, j, self.data[i * self.ncols + j]);
            }
        }
    }

    fn is_real(&self) -> bool {
        self.data.iter().all(|v| v.im == 0.0)
    }

    fn to_dense(&self) -> DenseMatrix {
        self.clone()
    }

    fn max_asymmetry(&self) -> f64 {
        DenseMatrix::max_asymmetry(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            vec![(1, 2, c(1.0)), (0, 0, c(2.0)), (1, 2, c(3.0)), (0, 1, c(0.0))],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), c(4.0));
        assert_eq!(m.get(0, 1), ZERO);
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, c(1.0))]).is_err());
    }

    #[test]
    fn products_and_adjoint() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab, DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![4.0, 3.0]]));
        let sab = a.to_sparse().matmul(&b.to_sparse()).unwrap();
        assert_eq!(sab.to_dense(), ab);
        let z = DenseMatrix::from_row_major(1, 2, vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0)])
            .unwrap();
        assert_eq!(z.to_sparse().adjoint().to_dense(), z.adjoint());
        assert_eq!(z.adjoint().get(0, 0), C64::new(1.0, -2.0));
    }

    #[test]
    fn hermitian_and_skew_parts_recombine() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, C64::new(1.0, 1.0)), (1, 0, c(3.0)), (1, 1, c(2.0))],
        )
        .unwrap();
        let re = a.hermitian_part().unwrap();
        let im = a.skew_part().unwrap();
        assert_eq!(re.max_asymmetry(), 0.0);
        assert_eq!(im.max_asymmetry(), 0.0);
        let back = re.axpby(c(1.0), &im, C64::new(0.0, 1.0)).unwrap();
        assert_eq!(back.to_dense(), a.to_dense());
    }

    #[test]
    fn submatrix_selection() {
        let a = DenseMatrix::from_rows(&[
            vec![11.0, 12.0, 13.0],
            vec![21.0, 22.0, 23.0],
            vec![31.0, 32.0, 33.0],
        ]);
        let r = a.to_sparse().principal_submatrix(&[0, 2]).unwrap();
        assert_eq!(r.to_dense(), DenseMatrix::from_rows(&[vec![11.0, 13.0], vec![31.0, 33.0]]));
    }

    #[test]
    fn norms() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]);
        assert_eq!(a.norm_1(), 6.0);
        assert_eq!(a.norm_inf(), 7.0);
        assert_eq!(a.frobenius(), 30f64.sqrt());
    }
}
