//! Dense eigenvalues, singular values, pseudoinverse and Hermitian matrix
//! functions.
//!
//! Complex inputs go through the real representation `[[X, -Y], [Y, X]]` of
//! `X + iY`, which maps products, adjoints and Hermitian matrices to their
//! real counterparts and doubles every eigenvalue and singular value.
//! Sparse inputs are split into the connected components of their sparsity
//! graph first, so block-diagonal matrices never get assembled densely.

pub mod general;
pub mod svd;
pub mod symmetric;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixView};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    EigHermitian,
    Singular,
    EigGeneralRealPart,
    EigGeneralModulus,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SizeMeta {
    pub matrix_size: usize,
    /// Number of grid points kept by the domain, when the matrix is reduced.
    pub d_omega: Option<usize>,
    /// Full grid size `N(n)`.
    pub grid_total: Option<usize>,
}

/// Sorted (ascending) eigenvalues or singular values of one matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSample {
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
    pub meta: SizeMeta,
}

impl SpectralSample {
    fn new(mut values: Vec<f64>, kind: SpectrumKind) -> SpectralSample {
        values.sort_by(f64::total_cmp);
        let meta = SizeMeta {
            matrix_size: values.len(),
            ..SizeMeta::default()
        };
        SpectralSample { values, kind, meta }
    }

    pub fn with_sizes(mut self, d_omega: Option<usize>, grid_total: Option<usize>) -> Self {
        self.meta.d_omega = d_omega;
        self.meta.grid_total = grid_total;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Relative asymmetry allowed for "Hermitian" input.
const HERMITIAN_TOL: f64 = 1e-12;

fn check_square(a: &dyn MatrixView) -> Result<usize> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::SizeMismatch {
            expected: (r, r),
            found: (r, c),
        });
    }
    Ok(r)
}

fn check_hermitian(a: &dyn MatrixView) -> Result<()> {
    let asym = a.max_asymmetry();
    if asym > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Index sets of the connected components of the graph with an edge `i-j`
/// for every stored entry, each sorted ascending.
fn components(a: &dyn MatrixView, n: usize) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    a.for_each_entry(&mut |i, j, v| {
        if v != C64::new(0.0, 0.0) {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    });
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(i);
    }
    out
}

/// Dense blocks of a square matrix, one per component: `(indices, block)`.
fn blocks(a: &dyn MatrixView, n: usize) -> Vec<(Vec<usize>, Vec<C64>)> {
    let comps = components(a, n);
    let mut which = vec![(0usize, 0usize); n];
    for (c, idx) in comps.iter().enumerate() {
        for (k, &i) in idx.iter().enumerate() {
            which[i] = (c, k);
        }
    }
    let mut out: Vec<(Vec<usize>, Vec<C64>)> = comps
        .into_iter()
        .map(|idx| {
            let m = idx.len();
            (idx, vec![C64::new(0.0, 0.0); m * m])
        })
        .collect();
    a.for_each_entry(&mut |i, j, v| {
        let (c, ki) = which[i];
        let (_, kj) = which[j];
        let m = out[c].0.len();
        out[c].1[ki * m + kj] += v;
    });
    out
}

/// `[[X, -Y], [Y, X]]` for the row-major complex `m x n` block.
fn real_embedding(z: &[C64], m: usize, n: usize) -> Vec<f64> {
    let w = 2 * n;
    let mut out = vec![0.0; 4 * m * n];
    for i in 0..m {
        for j in 0..n {
            let v = z[i * n + j];
            out[i * w + j] = v.re;
            out[i * w + n + j] = -v.im;
            out[(m + i) * w + j] = v.im;
            out[(m + i) * w + n + j] = v.re;
        }
    }
    out
}

/// Drops one copy of each doubled value from an ascending list.
fn undouble(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().step_by(2).collect()
}

fn hermitian_block_eigenvalues(block: &[C64], m: usize) -> Result<Vec<f64>> {
    if m == 1 {
        return Ok(vec![block[0].re]);
    }
    if block.iter().all(|v| v.im == 0.0) {
        let mut real: Vec<f64> = block.iter().map(|v| v.re).collect();
        symmetric::symmetric_eigenvalues(&mut real, m)
    } else {
        let mut emb = real_embedding(block, m, m);
        Ok(undouble(symmetric::symmetric_eigenvalues(&mut emb, 2 * m)?))
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvals_hermitian(a: &dyn MatrixView) -> Result<SpectralSample> {
    let n = check_square(a)?;
    check_hermitian(a)?;
    let mut values = Vec::with_capacity(n);
    for (idx, block) in blocks(a, n) {
        values.extend(hermitian_block_eigenvalues(&block, idx.len())?);
    }
    Ok(SpectralSample::new(values, SpectrumKind::EigHermitian))
}

/// Eigenvalues of a general square matrix, in no particular order.
pub fn eigvals_general(a: &dyn MatrixView) -> Result<Vec<C64>> {
    let n = check_square(a)?;
    let mut out = Vec::with_capacity(n);
    for (idx, block) in blocks(a, n) {
        if idx.len() == 1 {
            out.push(block[0]);
        } else {
            out.extend(general::eigenvalues(&block, idx.len())?);
        }
    }
    Ok(out)
}

/// Real parts or moduli of complex eigenvalues as a sorted sample.
pub fn general_sample(eigs: &[C64], kind: SpectrumKind) -> SpectralSample {
    let values = match kind {
        SpectrumKind::EigGeneralModulus => eigs.iter().map(|z| z.norm()).collect(),
        _ => eigs.iter().map(|z| z.re).collect(),
    };
    SpectralSample::new(values, kind)
}

fn block_singular_values(block: &[C64], m: usize, n: usize) -> Result<Vec<f64>> {
    if m == 1 && n == 1 {
        return Ok(vec![block[0].norm()]);
    }
    if block.iter().all(|v| v.im == 0.0) {
        let real: Vec<f64> = block.iter().map(|v| v.re).collect();
        svd::real_singular_values(&real, m, n)
    } else {
        let emb = real_embedding(block, m, n);
        Ok(undouble(svd::real_singular_values(&emb, 2 * m, 2 * n)?))
    }
}

/// Singular values, ascending; `min(rows, cols)` of them.
pub fn singvals(a: &dyn MatrixView) -> Result<SpectralSample> {
    let (m, n) = a.shape();
    let values = if m == n {
        let mut v = Vec::with_capacity(n);
        for (idx, block) in blocks(a, n) {
            let k = idx.len();
            v.extend(block_singular_values(&block, k, k)?);
        }
        v
    } else {
        block_singular_values(a.to_dense().data(), m, n)?
    };
    Ok(SpectralSample::new(values, SpectrumKind::Singular))
}

/// Largest singular value.
pub fn spectral_norm(a: &dyn MatrixView) -> Result<f64> {
    Ok(singvals(a)?.values.last().copied().unwrap_or(0.0))
}

/// Moore-Penrose pseudoinverse with cutoff `1e-12 σ_max`.
pub fn pseudoinverse(a: &dyn MatrixView) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    let dense = a.to_dense();
    if a.is_real() {
        let real: Vec<f64> = dense.data().iter().map(|v| v.re).collect();
        let p = svd::real_pseudoinverse(&real, m, n, 1e-12)?;
        return DenseMatrix::from_real(n, m, &p);
    }
    let emb = real_embedding(dense.data(), m, n);
    let p = svd::real_pseudoinverse(&emb, 2 * m, 2 * n, 1e-12)?; // 2n x 2m
    let w = 2 * m;
    let data = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| C64::new(p[i * w + j], p[(n + i) * w + j]))
        .collect();
    DenseMatrix::from_row_major(n, m, data)
}

/// `V f(Λ) V^H` for Hermitian `A`.
pub fn matrix_function(a: &dyn MatrixView, f: &dyn Fn(f64) -> f64) -> Result<DenseMatrix> {
    let n = check_square(a)?;
    check_hermitian(a)?;
    let dense = a.to_dense();
    let real = a.is_real();
    let (work, size) = if real {
        (dense.data().iter().map(|v| v.re).collect::<Vec<f64>>(), n)
    } else {
        (real_embedding(dense.data(), n, n), 2 * n)
    };
    let (vals, vecs) = symmetric::symmetric_eigen(&work, size)?;
    let fv: Vec<f64> = vals.iter().map(|&l| f(l)).collect();
    let mut out = vec![0.0; size * size];
    for i in 0..size {
        for k in 0..size {
            let w = vecs[i * size + k] * fv[k];
            if w == 0.0 {
                continue;
            }
            let row = &mut out[i * size..(i + 1) * size];
            for j in 0..size {
                row[j] += w * vecs[j * size + k];
            }
        }
    }
    if real {
        return DenseMatrix::from_real(n, n, &out);
    }
    let data = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| C64::new(out[i * size + j], out[(n + i) * size + j]))
        .collect();
    DenseMatrix::from_row_major(n, n, data)
}
