//! Toeplitz and diagonal-sampling generators and the expression tree built
//! from them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::domain::{mask, Domain};
use crate::error::{Error, Result};
use crate::exprlang::{self, Context, Expr};
use crate::matrix::SparseMatrix;
use crate::multiindex::{GridSize, MultiIndex};
use crate::reduction::Projector;
use crate::symbols::SeparableSymbol;

/// Finite Fourier coefficients `k -> f_k` of `f(θ) = Σ f_k e^{i k·θ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    dim: usize,
    coeffs: BTreeMap<Vec<i64>, C64>,
}

impl Stencil {
    pub fn new(dim: usize) -> Stencil {
        Stencil {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_entries(dim: usize, entries: &[(&[i64], f64)]) -> Result<Stencil> {
        let mut s = Stencil::new(dim);
        for (k, v) in entries {
            s.add(k, C64::new(*v, 0.0))?;
        }
        Ok(s)
    }

    pub fn constant(dim: usize, c: C64) -> Stencil {
        let mut s = Stencil::new(dim);
        s.add(&vec![0; dim], c).unwrap();
        s
    }

    /// `2 - 2cos(θ_axis)`.
    pub fn laplacian_1d(dim: usize, axis: usize) -> Stencil {
        let mut s = Stencil::constant(dim, C64::new(2.0, 0.0));
        for sign in [1, -1] {
            let mut k = vec![0; dim];
            k[axis] = sign;
            s.add(&k, C64::new(-1.0, 0.0)).unwrap();
        }
        s
    }

    /// `2d - Σ 2cos(θ_i)`, the (2d+1)-point Laplacian.
    pub fn laplacian(dim: usize) -> Stencil {
        (0..dim).fold(Stencil::new(dim), |acc, a| acc.plus(&Stencil::laplacian_1d(dim, a)))
    }

    pub fn add(&mut self, offset: &[i64], value: C64) -> Result<()> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: offset.len(),
            });
        }
        let slot = self.coeffs.entry(offset.to_vec()).or_default();
        *slot += value;
        if *slot == C64::new(0.0, 0.0) {
            self.coeffs.remove(offset);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, offset: &[i64]) -> C64 {
        self.coeffs.get(offset).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], C64)> {
        self.coeffs.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, theta: &[f64]) -> C64 {
        self.iter()
            .map(|(k, v)| {
                let phase: f64 = k.iter().zip(theta).map(|(&a, t)| a as f64 * t).sum();
                v * C64::from_polar(1.0, phase)
            })
            .sum()
    }

    pub fn is_hermitian(&self) -> bool {
        self.iter().all(|(k, v)| {
            let neg: Vec<i64> = k.iter().map(|a| -a).collect();
            self.get(&neg) == v.conj()
        })
    }

    pub fn scaled(&self, c: C64) -> Stencil {
        let mut s = Stencil::new(self.dim);
        for (k, v) in self.iter() {
            s.add(k, v * c).unwrap();
        }
        s
    }

    pub fn plus(&self, other: &Stencil) -> Stencil {
        let mut s = self.clone();
        for (k, v) in other.iter() {
            s.add(k, v).unwrap();
        }
        s
    }

    /// Coefficients of the product of the two trigonometric polynomials.
    pub fn convolve(&self, other: &Stencil) -> Stencil {
        let mut s = Stencil::new(self.dim);
        for (a, va) in self.iter() {
            for (b, vb) in other.iter() {
                let k: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                s.add(&k, va * vb).unwrap();
            }
        }
        s
    }

    /// Coefficients of `conj(f(θ))`.
    pub fn conjugate(&self) -> Stencil {
        let mut s = Stencil::new(self.dim);
        for (k, v) in self.iter() {
            let neg: Vec<i64> = k.iter().map(|a| -a).collect();
            s.add(&neg, v.conj()).unwrap();
        }
        s
    }
}

impl Serialize for Stencil {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.coeffs.len()))?;
        for (k, v) in &self.coeffs {
            map.serialize_entry(&MultiIndex::new(k.clone()).to_string(), &[v.re, v.im])?;
        }
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StencilValue {
    Real(f64),
    Pair([f64; 2]),
}

/// Accepts keys `"(1,-1)"`, `"1,-1"` or `"1"`, and values `x` or `[re, im]`.
impl<'de> Deserialize<'de> for Stencil {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Stencil;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from offsets like \"(1,0)\" to numbers or [re, im] pairs")
            }

            fn visit_map<M: MapAccess<'de>>(self, mut m: M) -> std::result::Result<Stencil, M::Error> {
                let mut stencil: Option<Stencil> = None;
                while let Some((key, value)) = m.next_entry::<String, StencilValue>()? {
                    let offset = parse_offset(&key).map_err(de::Error::custom)?;
                    let s = stencil.get_or_insert_with(|| Stencil::new(offset.len()));
                    let v = match value {
                        StencilValue::Real(r) => C64::new(r, 0.0),
                        StencilValue::Pair([re, im]) => C64::new(re, im),
                    };
                    s.add(&offset, v).map_err(de::Error::custom)?;
                }
                stencil.ok_or_else(|| de::Error::custom("empty stencil"))
            }
        }
        d.deserialize_map(V)
    }
}

fn parse_offset(key: &str) -> std::result::Result<Vec<i64>, String> {
    let inner = key.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: std::result::Result<Vec<i64>, _> =
        inner.split(',').map(|p| p.trim().parse::<i64>()).collect();
    match parts {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("malformed stencil offset '{key}'")),
    }
}

type PointFn = dyn Fn(&[f64]) -> Result<C64> + Send + Sync;

/// A coefficient function `a : [0,1]^d -> C`.
#[derive(Clone)]
pub enum CoefficientFn {
    Const(C64),
    Expr { source: String, expr: Arc<Expr> },
    /// Characteristic function of the interior of a domain.
    Indicator(Arc<Domain>),
    Native { name: String, f: Arc<PointFn> },
    Product(Vec<CoefficientFn>),
    /// `Σ w_k a_k`
    Sum(Vec<(C64, CoefficientFn)>),
    Conj(Box<CoefficientFn>),
}

impl CoefficientFn {
    pub fn constant(v: f64) -> CoefficientFn {
        CoefficientFn::Const(C64::new(v, 0.0))
    }

    pub fn parse(src: &str) -> Result<CoefficientFn> {
        let expr = exprlang::parse(src, Context::Scalar)?;
        Ok(CoefficientFn::Expr {
            source: src.to_string(),
            expr: Arc::new(expr),
        })
    }

    pub fn native(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> CoefficientFn {
        CoefficientFn::Native {
            name: name.to_string(),
            f: Arc::new(move |x| Ok(C64::new(f(x), 0.0))),
        }
    }

    pub fn native_complex(
        name: &str,
        f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static,
    ) -> CoefficientFn {
        CoefficientFn::Native {
            name: name.to_string(),
            f: Arc::new(move |x| Ok(f(x))),
        }
    }

    /// A native evaluator that may fail at some points.
    pub fn native_fallible(
        name: &str,
        f: impl Fn(&[f64]) -> Result<C64> + Send + Sync + 'static,
    ) -> CoefficientFn {
        CoefficientFn::Native {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }

    /// `Σ w_k a_k`, dropping zero weights.
    pub fn linear_combination(terms: Vec<(C64, CoefficientFn)>) -> CoefficientFn {
        let terms: Vec<_> = terms.into_iter().filter(|(w, _)| *w != C64::new(0.0, 0.0)).collect();
        if terms.is_empty() {
            return CoefficientFn::constant(0.0);
        }
        CoefficientFn::Sum(terms)
    }

    pub fn indicator(domain: &Domain) -> CoefficientFn {
        CoefficientFn::Indicator(Arc::new(domain.clone()))
    }

    pub fn eval(&self, x: &[f64]) -> Result<C64> {
        Ok(match self {
            CoefficientFn::Const(c) => *c,
            CoefficientFn::Expr { expr, .. } => C64::new(expr.eval_num(x)?, 0.0),
            CoefficientFn::Indicator(d) => C64::new(if d.is_inside(x) { 1.0 } else { 0.0 }, 0.0),
            CoefficientFn::Native { f, .. } => f(x)?,
            CoefficientFn::Sum(ts) => {
                let mut acc = C64::new(0.0, 0.0);
                for (w, f) in ts {
                    acc += w * f.eval(x)?;
                }
                acc
            }
            CoefficientFn::Product(fs) => {
                let mut acc = C64::new(1.0, 0.0);
                for f in fs {
                    acc *= f.eval(x)?;
                }
                acc
            }
            CoefficientFn::Conj(f) => f.eval(x)?.conj(),
        })
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?.re)
    }

    pub fn times(&self, other: &CoefficientFn) -> CoefficientFn {
        match (self, other) {
            (CoefficientFn::Const(a), CoefficientFn::Const(b)) => CoefficientFn::Const(a * b),
            (CoefficientFn::Const(a), f) | (f, CoefficientFn::Const(a))
                if *a == C64::new(1.0, 0.0) =>
            {
                f.clone()
            }
            (CoefficientFn::Product(a), CoefficientFn::Product(b)) => {
                CoefficientFn::Product(a.iter().chain(b).cloned().collect())
            }
            (CoefficientFn::Product(a), f) => {
                CoefficientFn::Product(a.iter().cloned().chain([f.clone()]).collect())
            }
            (f, CoefficientFn::Product(b)) => {
                CoefficientFn::Product([f.clone()].into_iter().chain(b.iter().cloned()).collect())
            }
            (a, b) => CoefficientFn::Product(vec![a.clone(), b.clone()]),
        }
    }

    pub fn conj(&self) -> CoefficientFn {
        match self {
            CoefficientFn::Const(c) => CoefficientFn::Const(c.conj()),
            CoefficientFn::Expr { .. } | CoefficientFn::Indicator(_) => self.clone(),
            CoefficientFn::Conj(f) => (**f).clone(),
            CoefficientFn::Sum(ts) => CoefficientFn::Sum(ts.iter().map(|(w, f)| (w.conj(), f.conj())).collect()),
            f => CoefficientFn::Conj(Box::new(f.clone())),
        }
    }

    /// Largest variable index an expression refers to.
    fn max_var(&self) -> usize {
        match self {
            CoefficientFn::Expr { expr, .. } => expr.max_var(),
            CoefficientFn::Product(fs) => fs.iter().map(CoefficientFn::max_var).max().unwrap_or(0),
            CoefficientFn::Sum(ts) => ts.iter().map(|(_, f)| f.max_var()).max().unwrap_or(0),
            CoefficientFn::Conj(f) => f.max_var(),
            _ => 0,
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if let CoefficientFn::Indicator(dom) = self {
            if dom.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: dom.dim(),
                });
            }
        }
        if let CoefficientFn::Product(fs) = self {
            for f in fs {
                f.check_dim(d)?;
            }
        }
        if let CoefficientFn::Sum(ts) = self {
            for (_, f) in ts {
                f.check_dim(d)?;
            }
        }
        if self.max_var() > d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.max_var(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientFn::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            CoefficientFn::Const(c) => write!(f, "({}+{}i)", c.re, c.im),
            CoefficientFn::Expr { source, .. } => write!(f, "{source}"),
            CoefficientFn::Indicator(_) => write!(f, "chi"),
            CoefficientFn::Native { name, .. } => write!(f, "{name}"),
            CoefficientFn::Product(fs) => {
                for (k, g) in fs.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{g}")?;
                }
                Ok(())
            }
            CoefficientFn::Sum(ts) => {
                write!(f, "(")?;
                for (k, (w, g)) in ts.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{}*{g}", CoefficientFn::Const(*w))?;
                }
                write!(f, ")")
            }
            CoefficientFn::Conj(g) => write!(f, "conj({g})"),
        }
    }
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefficientFn({self})")
    }
}

#[derive(Clone, Debug)]
pub enum GltExpr {
    Toeplitz(Stencil),
    /// Samples at `i/n`.
    DiagD(CoefficientFn),
    /// Samples at `i/(n+1)`.
    DiagI(CoefficientFn),
    Zero,
    Sum(Vec<GltExpr>),
    Product(Vec<GltExpr>),
    Scalar(C64, Box<GltExpr>),
    ConjTranspose(Box<GltExpr>),
    Reduce(Arc<Domain>, Box<GltExpr>),
}

impl GltExpr {
    pub fn toeplitz(s: Stencil) -> GltExpr {
        GltExpr::Toeplitz(s)
    }

    pub fn diag_d(a: CoefficientFn) -> GltExpr {
        GltExpr::DiagD(a)
    }

    pub fn diag_i(a: CoefficientFn) -> GltExpr {
        GltExpr::DiagI(a)
    }

    pub fn scalar(c: f64, e: GltExpr) -> GltExpr {
        GltExpr::Scalar(C64::new(c, 0.0), Box::new(e))
    }

    pub fn adjoint(e: GltExpr) -> GltExpr {
        GltExpr::ConjTranspose(Box::new(e))
    }

    pub fn reduce(domain: &Domain, e: GltExpr) -> GltExpr {
        GltExpr::Reduce(Arc::new(domain.clone()), Box::new(e))
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            GltExpr::Toeplitz(s) if s.dim() != d => Err(Error::DimensionMismatch {
                expected: d,
                found: s.dim(),
            }),
            GltExpr::DiagD(a) | GltExpr::DiagI(a) => a.check_dim(d),
            GltExpr::Sum(es) | GltExpr::Product(es) => es.iter().try_for_each(|e| e.check_dim(d)),
            GltExpr::Scalar(_, e) | GltExpr::ConjTranspose(e) => e.check_dim(d),
            GltExpr::Reduce(dom, e) => {
                if dom.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: dom.dim(),
                    });
                }
                e.check_dim(d)
            }
            _ => Ok(()),
        }
    }
}

/// Multilevel Toeplitz matrix with entry `(i, j) = f_{i-j}`.
pub fn toeplitz(stencil: &Stencil, n: &GridSize) -> Result<SparseMatrix> {
    if stencil.dim() != n.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.dim(),
            found: stencil.dim(),
        });
    }
    let d = n.dim();
    let strides = n.strides();
    let dims: Vec<i64> = (0..d).map(|a| n.axis(a) as i64).collect();
    let total = n.total();
    let entries: Vec<(&[i64], C64)> = stencil.iter().collect();
    let mut idx = vec![0i64; d];
    let rows = (0..total)
        .map(|flat| {
            let mut rem = flat;
            for a in 0..d {
                idx[a] = (rem / strides[a]) as i64;
                rem %= strides[a];
            }
            let mut row: Vec<(usize, C64)> = entries
                .iter()
                .filter_map(|(k, v)| {
                    let mut j = 0usize;
                    for a in 0..d {
                        let c = idx[a] - k[a];
                        if c < 0 || c >= dims[a] {
                            return None;
                        }
                        j += c as usize * strides[a];
                    }
                    Some((j, *v))
                })
                .collect();
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    Ok(SparseMatrix::from_sorted_rows(total, rows))
}

fn sample_diag(a: &CoefficientFn, n: &GridSize, shift: i64) -> Result<SparseMatrix> {
    a.check_dim(n.dim())?;
    let d = n.dim();
    let mut p = vec![0.0; d];
    let strides = n.strides();
    let diag = (0..n.total())
        .map(|flat| {
            let mut rem = flat;
            for ax in 0..d {
                let i = (rem / strides[ax]) as f64 + 1.0;
                rem %= strides[ax];
                p[ax] = i / (n.axis(ax) as i64 + shift) as f64;
            }
            a.eval(&p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix::diagonal(diag))
}

/// `D_n(a) = diag(a(i/n))`.
pub fn diag_sampling_d(a: &CoefficientFn, n: &GridSize) -> Result<SparseMatrix> {
    sample_diag(a, n, 0)
}

/// `I_n(a) = diag(a(i/(n+1)))`.
pub fn diag_sampling_i(a: &CoefficientFn, n: &GridSize) -> Result<SparseMatrix> {
    sample_diag(a, n, 1)
}

/// Materializes the expression at full size `N(n) x N(n)`. A `Reduce` node
/// zeroes the rows and columns of grid points outside the domain interior.
pub fn build_matrix(expr: &GltExpr, n: &GridSize) -> Result<SparseMatrix> {
    expr.check_dim(n.dim())?;
    build(expr, n)
}

fn build(expr: &GltExpr, n: &GridSize) -> Result<SparseMatrix> {
    let total = n.total();
    match expr {
        GltExpr::Toeplitz(s) => toeplitz(s, n),
        GltExpr::DiagD(a) => diag_sampling_d(a, n),
        GltExpr::DiagI(a) => diag_sampling_i(a, n),
        GltExpr::Zero => Ok(SparseMatrix::zeros(total, total)),
        GltExpr::Sum(es) => es.iter().try_fold(SparseMatrix::zeros(total, total), |acc, e| {
            acc.add(&build(e, n)?)
        }),
        GltExpr::Product(es) => es
            .iter()
            .try_fold(SparseMatrix::identity(total), |acc, e| acc.matmul(&build(e, n)?)),
        GltExpr::Scalar(c, e) => Ok(build(e, n)?.scale(*c)),
        GltExpr::ConjTranspose(e) => Ok(build(e, n)?.adjoint()),
        GltExpr::Reduce(dom, e) => {
            let p = Projector::new(mask(dom, n, false)?);
            p.zero_out(&build(e, n)?)
        }
    }
}

/// The GLT symbol of the expression, kept in separable form
/// `Σ a_j(x) f_j(θ)` as long as products stay small.
pub fn derive_symbol(expr: &GltExpr, dim: usize) -> Result<SeparableSymbol> {
    expr.check_dim(dim)?;
    Ok(symbol(expr, dim))
}

fn symbol(expr: &GltExpr, d: usize) -> SeparableSymbol {
    match expr {
        GltExpr::Toeplitz(s) => SeparableSymbol::from_stencil(s.clone()),
        GltExpr::DiagD(a) | GltExpr::DiagI(a) => SeparableSymbol::from_coefficient(d, a.clone()),
        GltExpr::Zero => SeparableSymbol::zero(d),
        GltExpr::Sum(es) => es
            .iter()
            .fold(SeparableSymbol::zero(d), |acc, e| acc.plus(&symbol(e, d))),
        GltExpr::Product(es) => es
            .iter()
            .fold(SeparableSymbol::one(d), |acc, e| acc.times(&symbol(e, d))),
        GltExpr::Scalar(c, e) => symbol(e, d).scaled(*c),
        GltExpr::ConjTranspose(e) => symbol(e, d).conjugate(),
        GltExpr::Reduce(dom, e) => symbol(e, d).times_coefficient(&CoefficientFn::Indicator(dom.clone())),
    }
}
