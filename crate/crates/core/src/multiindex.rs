//! Multi-indices, grid sizes and the lexicographic linearization between
//! d-indices and flat matrix positions.
//!
//! All public indices are 1-based: a grid of size `n` has multi-indices
//! `1..=n` (componentwise) and flat indices `1..=N(n)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of `d >= 1` integers. Used for grid positions, grid sizes and
/// (possibly negative) stencil offsets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(components: Vec<i64>) -> Self {
        assert!(!components.is_empty(), "multi-index must have d >= 1");
        MultiIndex(components)
    }

    pub fn filled(d: usize, value: i64) -> Self {
        Self::new(vec![value; d])
    }

    /// The unit multi-index `e_axis` (0-based axis).
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut c = vec![0; d];
        c[axis] = 1;
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> i64 {
        self.0[axis]
    }

    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        same_dim(self, other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Result<MultiIndex> {
        same_dim(self, other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn neg(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }

    /// Componentwise `self <= other`.
    pub fn le_all(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex::new(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn same_dim(a: &MultiIndex, b: &MultiIndex) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Grid size `n` with all components `>= 1`. The grid points are
/// `i / (n + 1)` for `i = 1..=n`, so the per-axis step is `1 / (n_i + 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct GridSize {
    n: MultiIndex,
    total: usize,
}

impl GridSize {
    pub fn new(n: MultiIndex) -> Result<Self> {
        let mut total: usize = 1;
        for &c in n.components() {
            if c < 1 {
                return Err(Error::InvalidGrid(format!("component {c} < 1 in {n}")));
            }
            total = total
                .checked_mul(c as usize)
                .ok_or(Error::Overflow("N(n)"))?;
        }
        if u64::try_from(total).is_err() {
            return Err(Error::Overflow("N(n)"));
        }
        Ok(GridSize { n, total })
    }

    pub fn from_slice(n: &[i64]) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::InvalidGrid("empty grid size".into()));
        }
        Self::new(MultiIndex::new(n.to_vec()))
    }

    /// `n = (m, m, ..., m)`.
    pub fn cubic(d: usize, m: usize) -> Result<Self> {
        Self::new(MultiIndex::filled(d, m as i64))
    }

    pub fn dim(&self) -> usize {
        self.n.dim()
    }

    pub fn index(&self) -> &MultiIndex {
        &self.n
    }

    pub fn axis(&self, axis: usize) -> usize {
        self.n.get(axis) as usize
    }

    /// `N(n)`, the product of the components.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn min_component(&self) -> usize {
        self.n.components().iter().copied().min().unwrap_or(1) as usize
    }

    pub fn step(&self, axis: usize) -> f64 {
        1.0 / (self.n.get(axis) as f64 + 1.0)
    }

    pub fn steps(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.step(a)).collect()
    }

    pub fn max_step(&self) -> f64 {
        self.steps().into_iter().fold(0.0, f64::max)
    }

    /// Grid point `i / (n + 1)` of a 1-based multi-index.
    pub fn point(&self, i: &MultiIndex) -> Vec<f64> {
        i.components()
            .iter()
            .enumerate()
            .map(|(a, &c)| c as f64 * self.step(a))
            .collect()
    }

    /// Grid point for a 0-based flat position (no range check).
    pub(crate) fn point_of_flat(&self, flat0: usize, out: &mut [f64]) {
        let mut rest = flat0;
        for a in (0..self.dim()).rev() {
            let na = self.axis(a);
            out[a] = ((rest % na) + 1) as f64 * self.step(a);
            rest /= na;
        }
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.axis(a + 1);
        }
        s
    }
}

impl TryFrom<Vec<i64>> for GridSize {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        GridSize::from_slice(&v)
    }
}

impl From<GridSize> for Vec<i64> {
    fn from(g: GridSize) -> Vec<i64> {
        g.n.0
    }
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.n.fmt(f)
    }
}

pub fn lex_compare(a: &MultiIndex, b: &MultiIndex) -> Result<Ordering> {
    same_dim(a, b)?;
    Ok(a.0.cmp(&b.0))
}

/// `|h| = h_d + sum_{i<d} (h_i - 1) prod_{j>i} n_j`, in `1..=N(n)`.
pub fn linearize(h: &MultiIndex, n: &GridSize) -> Result<usize> {
    same_dim(h, n.index())?;
    let mut flat = 0usize;
    for (a, &c) in h.components().iter().enumerate() {
        let na = n.axis(a);
        if c < 1 || c as usize > na {
            return Err(Error::IndexOutOfRange(format!("{h} not in 1..={n}")));
        }
        flat = flat * na + (c as usize - 1);
    }
    Ok(flat + 1)
}

pub fn delinearize(k: usize, n: &GridSize) -> Result<MultiIndex> {
    if k < 1 || k > n.total() {
        return Err(Error::IndexOutOfRange(format!(
            "flat index {k} not in 1..={}",
            n.total()
        )));
    }
    let mut rest = k - 1;
    let mut c = vec![0i64; n.dim()];
    for a in (0..n.dim()).rev() {
        let na = n.axis(a);
        c[a] = (rest % na) as i64 + 1;
        rest /= na;
    }
    Ok(MultiIndex(c))
}

/// Lexicographic walk over `lo..=hi`. Empty when `lo` is not `<= hi`.
pub fn iter_range(lo: &MultiIndex, hi: &MultiIndex) -> RangeIter {
    assert_eq!(lo.dim(), hi.dim(), "range bounds must share dimension");
    let next = if lo.le_all(hi) { Some(lo.clone()) } else { None };
    RangeIter {
        lo: lo.clone(),
        hi: hi.clone(),
        next,
    }
}

#[derive(Clone, Debug)]
pub struct RangeIter {
    lo: MultiIndex,
    hi: MultiIndex,
    next: Option<MultiIndex>,
}

impl Iterator for RangeIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut axis = succ.dim();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            if succ.0[axis] < self.hi.0[axis] {
                succ.0[axis] += 1;
                self.next = Some(succ);
                break;
            }
            succ.0[axis] = self.lo.0[axis];
        }
        Some(current)
    }
}
