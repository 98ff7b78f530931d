//! Row/column selection of grid points inside a domain: the projector and
//! the zero-out, restrict and expand operators built on it.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{mask, Domain, GridMask};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixView, SparseMatrix};
use crate::multiindex::GridSize;
use crate::spectra;
use crate::symbols::{compare_samples, trend_verdict, TrendVerdict};

/// The selection `Π` as the increasing list of kept flat indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projector {
    mask: GridMask,
    kept: Vec<usize>,
}

impl Projector {
    pub fn new(mask: GridMask) -> Projector {
        let kept = mask
            .bits()
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect();
        Projector { mask, kept }
    }

    pub fn from_domain(domain: &Domain, n: &GridSize, closure: bool) -> Result<Projector> {
        Ok(Projector::new(mask(domain, n, closure)?))
    }

    pub fn mask(&self) -> &GridMask {
        &self.mask
    }

    pub fn grid(&self) -> &GridSize {
        self.mask.grid()
    }

    /// 0-based kept indices, increasing.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Kept indices as 1-based linear grid indices.
    pub fn kept_one_based(&self) -> Vec<usize> {
        self.kept.iter().map(|k| k + 1).collect()
    }

    /// `d`, the number of kept indices.
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn full_size(&self) -> usize {
        self.mask.bits().len()
    }

    fn check(&self, shape: (usize, usize), want: usize) -> Result<()> {
        if shape != (want, want) {
            return Err(Error::SizeMismatch {
                expected: (want, want),
                found: shape,
            });
        }
        Ok(())
    }

    /// `I(χ) A I(χ)`: rows and columns outside the mask are zeroed.
    pub fn zero_out(&self, a: &SparseMatrix) -> Result<SparseMatrix> {
        let n = self.full_size();
        self.check(a.shape(), n)?;
        let bits = self.mask.bits();
        let rows = (0..n)
            .map(|i| {
                if !bits[i] {
                    return Vec::new();
                }
                a.row(i).filter(|&(j, _)| bits[j]).collect()
            })
            .collect();
        Ok(SparseMatrix::from_sorted_rows(n, rows))
    }

    /// `Π A Π^T`, the principal submatrix on the kept indices.
    pub fn restrict(&self, a: &SparseMatrix) -> Result<SparseMatrix> {
        self.check(a.shape(), self.full_size())?;
        a.principal_submatrix(&self.kept)
    }

    /// `Π^T S Π`: scatters a `d x d` matrix back to full size.
    pub fn expand(&self, s: &SparseMatrix) -> Result<SparseMatrix> {
        let d = self.len();
        self.check(s.shape(), d)?;
        let n = self.full_size();
        let mut rows = vec![Vec::new(); n];
        for (k, &i) in self.kept.iter().enumerate() {
            rows[i] = s.row(k).map(|(j, v)| (self.kept[j], v)).collect();
        }
        Ok(SparseMatrix::from_sorted_rows(n, rows))
    }

    pub fn zero_out_dense(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.full_size();
        self.check(a.shape(), n)?;
        let bits = self.mask.bits();
        let mut out = a.clone();
        for i in 0..n {
            for j in 0..n {
                if !(bits[i] && bits[j]) {
                    out.set(i, j, C64::new(0.0, 0.0));
                }
            }
        }
        Ok(out)
    }

    pub fn restrict_dense(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(a.shape(), self.full_size())?;
        let d = self.len();
        let mut out = DenseMatrix::zeros(d, d);
        for (r, &i) in self.kept.iter().enumerate() {
            for (c, &j) in self.kept.iter().enumerate() {
                out.set(r, c, a.get(i, j));
            }
        }
        Ok(out)
    }

    pub fn expand_dense(&self, s: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(s.shape(), self.len())?;
        let n = self.full_size();
        let mut out = DenseMatrix::zeros(n, n);
        for (r, &i) in self.kept.iter().enumerate() {
            for (c, &j) in self.kept.iter().enumerate() {
                out.set(i, j, s.get(r, c));
            }
        }
        Ok(out)
    }

    /// Verifies `Π^T Π = I(χ)` and `Π Π^T = I_d` with integer arithmetic.
    pub fn gram_checks(&self) -> GramReport {
        let n = self.full_size();
        let d = self.len();
        // Π as 0/1 entries: row k has its single one at column kept[k].
        let pi_rows: Vec<Vec<usize>> = self.kept.iter().map(|&c| vec![c]).collect();
        let mut pi_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, row) in pi_rows.iter().enumerate() {
            for &c in row {
                pi_cols[c].push(k);
            }
        }
        // (Π^T Π)_{ij} = Σ_k Π_{ki} Π_{kj}
        for i in 0..n {
            let mut row = vec![0u64; 0];
            let mut cols = Vec::new();
            for &k in &pi_cols[i] {
                for &j in &pi_rows[k] {
                    cols.push(j);
                    row.push(1);
                }
            }
            let want_diag = u64::from(self.mask.get(i));
            let diag: u64 = cols.iter().zip(&row).filter(|(j, _)| **j == i).map(|(_, v)| v).sum();
            if diag != want_diag {
                return GramReport::fail(d, "Pi^T Pi", i, i);
            }
            if let Some(&j) = cols.iter().find(|&&j| j != i) {
                return GramReport::fail(d, "Pi^T Pi", i, j);
            }
        }
        // (Π Π^T)_{kl} = Σ_c Π_{kc} Π_{lc}
        for k in 0..d {
            let mut hits = Vec::new();
            for &c in &pi_rows[k] {
                hits.extend(pi_cols[c].iter().copied());
            }
            let diag = hits.iter().filter(|&&l| l == k).count();
            if diag != 1 {
                return GramReport::fail(d, "Pi Pi^T", k, k);
            }
            if let Some(&l) = hits.iter().find(|&&l| l != k) {
                return GramReport::fail(d, "Pi Pi^T", k, l);
            }
        }
        GramReport {
            passed: true,
            d,
            first_failure: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GramFailure {
    pub product: &'static str,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GramReport {
    pub passed: bool,
    pub d: usize,
    pub first_failure: Option<GramFailure>,
}

impl GramReport {
    fn fail(d: usize, product: &'static str, row: usize, col: usize) -> GramReport {
        GramReport {
            passed: false,
            d,
            first_failure: Some(GramFailure { product, row, col }),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridEquivalenceLevel {
    pub n: GridSize,
    pub symmetric_difference: usize,
    pub difference_ratio: f64,
    pub wasserstein1: f64,
    pub cdf_sup: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridEquivalenceReport {
    pub levels: Vec<GridEquivalenceLevel>,
    pub trend: TrendVerdict,
}

/// Compares the spectra of `A_n` restricted by `domain` and by an
/// alternative mask per level. Eigenvalues are used for Hermitian `A_n`,
/// singular values otherwise.
pub fn restricted_grid_equivalence(
    builder: &(dyn Fn(&GridSize) -> Result<SparseMatrix> + Sync),
    domain: &Domain,
    other_mask: &(dyn Fn(&GridSize) -> Result<GridMask> + Sync),
    sweep: &[GridSize],
) -> Result<GridEquivalenceReport> {
    let levels = sweep
        .par_iter()
        .map(|n| {
            let a = builder(n)?;
            let p1 = Projector::from_domain(domain, n, false)?;
            let p2 = Projector::new(other_mask(n)?);
            let (r1, r2) = (p1.restrict(&a)?, p2.restrict(&a)?);
            let spectrum = |m: &SparseMatrix| -> Result<Vec<f64>> {
                if m.max_asymmetry() <= 1e-12 * m.max_abs().max(1.0) {
                    Ok(spectra::eigvals_hermitian(m)?.values)
                } else {
                    Ok(spectra::singvals(m)?.values)
                }
            };
            let (s1, s2) = (spectrum(&r1)?, spectrum(&r2)?);
            let sym = p1.mask().symmetric_difference(p2.mask());
            let (w1, cdf) = if s1.is_empty() && s2.is_empty() {
                (0.0, 0.0)
            } else {
                let r = compare_samples(&s1, &s2)?;
                (r.0, r.1)
            };
            Ok(GridEquivalenceLevel {
                n: n.clone(),
                symmetric_difference: sym,
                difference_ratio: sym as f64 / n.total() as f64,
                wasserstein1: w1,
                cdf_sup: cdf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let trend = trend_verdict(&levels.iter().map(|l| l.wasserstein1).collect::<Vec<_>>());
    Ok(GridEquivalenceReport { levels, trend })
}
