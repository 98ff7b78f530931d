//! Symbols `κ(x, θ) = Σ a_j(x) f_j(θ)`, their sampling over `Ω × [-π, π]^d`,
//! and finite-n evidence for distribution, a.c.s. and measure statements.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::glt::{CoefficientFn, Stencil};
use crate::matrix::{MatrixView, SparseMatrix};
use crate::multiindex::{iter_range, GridSize, MultiIndex};
use crate::spectra;

type GenericFn = dyn Fn(&[f64], &[f64]) -> Result<C64> + Send + Sync;

/// Products whose term count would pass this are evaluated lazily.
const MAX_TERMS: usize = 4096;

/// A matrix-sequence generator `n -> A_n`.
pub type Sequence<'a> = &'a (dyn Fn(&GridSize) -> Result<SparseMatrix> + Sync);

#[derive(Clone)]
enum Body {
    Terms(Vec<(CoefficientFn, Stencil)>),
    Generic(Arc<GenericFn>),
}

/// `κ(x, θ) = Σ_j a_j(x) f_j(θ)`, optionally restricted to `x ∈ Ω`.
#[derive(Clone)]
pub struct SeparableSymbol {
    dim: usize,
    domain: Option<Arc<Domain>>,
    body: Body,
}

impl SeparableSymbol {
    pub fn from_terms(dim: usize, terms: Vec<(CoefficientFn, Stencil)>) -> Result<SeparableSymbol> {
        for (_, s) in &terms {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
        }
        Ok(SeparableSymbol {
            dim,
            domain: None,
            body: Body::Terms(terms),
        })
    }

    /// A non-separable symbol given by an evaluator.
    pub fn generic(
        dim: usize,
        f: impl Fn(&[f64], &[f64]) -> Result<C64> + Send + Sync + 'static,
    ) -> SeparableSymbol {
        SeparableSymbol {
            dim,
            domain: None,
            body: Body::Generic(Arc::new(f)),
        }
    }

    pub fn from_stencil(s: Stencil) -> SeparableSymbol {
        SeparableSymbol {
            dim: s.dim(),
            domain: None,
            body: Body::Terms(vec![(CoefficientFn::constant(1.0), s)]),
        }
    }

    pub fn from_coefficient(dim: usize, a: CoefficientFn) -> SeparableSymbol {
        SeparableSymbol {
            dim,
            domain: None,
            body: Body::Terms(vec![(a, Stencil::constant(dim, C64::new(1.0, 0.0)))]),
        }
    }

    pub fn zero(dim: usize) -> SeparableSymbol {
        SeparableSymbol {
            dim,
            domain: None,
            body: Body::Terms(Vec::new()),
        }
    }

    pub fn one(dim: usize) -> SeparableSymbol {
        SeparableSymbol::from_coefficient(dim, CoefficientFn::constant(1.0))
    }

    /// The same formula, evaluated only for `x ∈ Ω`.
    pub fn restricted_to(mut self, domain: &Domain) -> SeparableSymbol {
        self.domain = Some(Arc::new(domain.clone()));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_deref()
    }

    /// The separable terms, or `None` for a generic evaluator.
    pub fn terms(&self) -> Option<&[(CoefficientFn, Stencil)]> {
        match &self.body {
            Body::Terms(t) => Some(t),
            Body::Generic(_) => None,
        }
    }

    fn joined_domain(&self, other: &SeparableSymbol) -> Option<Arc<Domain>> {
        self.domain.clone().or_else(|| other.domain.clone())
    }

    fn raw_eval(body: &Body, x: &[f64], theta: &[f64]) -> Result<C64> {
        match body {
            Body::Terms(terms) => {
                let mut acc = C64::new(0.0, 0.0);
                for (a, s) in terms {
                    let av = a.eval(x)?;
                    if av != C64::new(0.0, 0.0) {
                        acc += av * s.eval(theta);
                    }
                }
                Ok(acc)
            }
            Body::Generic(f) => f(x, theta),
        }
    }

    fn lazily(&self) -> Arc<GenericFn> {
        match &self.body {
            Body::Generic(f) => f.clone(),
            body => {
                let body = body.clone();
                Arc::new(move |x: &[f64], t: &[f64]| SeparableSymbol::raw_eval(&body, x, t))
            }
        }
    }

    /// Sum of two symbols. The left domain is kept, or the right one when
    /// the left is unrestricted.
    pub fn plus(&self, other: &SeparableSymbol) -> SeparableSymbol {
        let domain = self.joined_domain(other);
        let body = match (&self.body, &other.body) {
            (Body::Terms(a), Body::Terms(b)) => Body::Terms(a.iter().chain(b).cloned().collect()),
            _ => {
                let (f, g) = (self.lazily(), other.lazily());
                Body::Generic(Arc::new(move |x: &[f64], t: &[f64]| Ok(f(x, t)? + g(x, t)?)))
            }
        };
        SeparableSymbol {
            dim: self.dim,
            domain,
            body,
        }
    }

    pub fn times(&self, other: &SeparableSymbol) -> SeparableSymbol {
        let domain = self.joined_domain(other);
        let body = match (&self.body, &other.body) {
            (Body::Terms(a), Body::Terms(b)) if a.len() * b.len() <= MAX_TERMS => Body::Terms(
                a.iter()
                    .flat_map(|(ca, sa)| b.iter().map(move |(cb, sb)| (ca.times(cb), sa.convolve(sb))))
                    .collect(),
            ),
            _ => {
                let (f, g) = (self.lazily(), other.lazily());
                Body::Generic(Arc::new(move |x: &[f64], t: &[f64]| Ok(f(x, t)? * g(x, t)?)))
            }
        };
        SeparableSymbol {
            dim: self.dim,
            domain,
            body,
        }
    }

    pub fn scaled(&self, c: C64) -> SeparableSymbol {
        self.times_coefficient(&CoefficientFn::Const(c))
    }

    pub fn times_coefficient(&self, a: &CoefficientFn) -> SeparableSymbol {
        let body = match &self.body {
            Body::Terms(t) => Body::Terms(t.iter().map(|(c, s)| (a.times(c), s.clone())).collect()),
            Body::Generic(f) => {
                let (f, a) = (f.clone(), a.clone());
                Body::Generic(Arc::new(move |x: &[f64], t: &[f64]| Ok(a.eval(x)? * f(x, t)?)))
            }
        };
        SeparableSymbol {
            dim: self.dim,
            domain: self.domain.clone(),
            body,
        }
    }

    /// `conj(κ(x, θ))`, the symbol of the conjugate transpose.
    pub fn conjugate(&self) -> SeparableSymbol {
        let body = match &self.body {
            Body::Terms(t) => Body::Terms(t.iter().map(|(c, s)| (c.conj(), s.conjugate())).collect()),
            Body::Generic(f) => {
                let f = f.clone();
                Body::Generic(Arc::new(move |x: &[f64], t: &[f64]| Ok(f(x, t)?.conj())))
            }
        };
        SeparableSymbol {
            dim: self.dim,
            domain: self.domain.clone(),
            body,
        }
    }

    /// `κ(x, θ)`; fails for `x` outside the symbol's domain.
    pub fn eval(&self, x: &[f64], theta: &[f64]) -> Result<C64> {
        if x.len() != self.dim || theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: if x.len() != self.dim { x.len() } else { theta.len() },
            });
        }
        if let Some(d) = &self.domain {
            if !d.is_inside(x) {
                return Err(Error::NotInterior { point: x.to_vec() });
            }
        }
        SeparableSymbol::raw_eval(&self.body, x, theta)
    }

    /// Formula value ignoring the domain, zero-extended outside it.
    fn eval_extended(&self, x: &[f64], theta: &[f64]) -> Result<C64> {
        match &self.domain {
            Some(d) if !d.is_inside(x) => Ok(C64::new(0.0, 0.0)),
            _ => SeparableSymbol::raw_eval(&self.body, x, theta),
        }
    }
}

impl fmt::Display for SeparableSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            Body::Generic(_) => write!(f, "<generic symbol>")?,
            Body::Terms(t) if t.is_empty() => write!(f, "0")?,
            Body::Terms(t) => {
                for (k, (a, s)) in t.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    let stencil = serde_json::to_string(s).map_err(|_| fmt::Error)?;
                    write!(f, "{a} * {stencil}")?;
                }
            }
        }
        if self.domain.is_some() {
            write!(f, " on the domain")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SeparableSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SeparableSymbol({self})")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// `|κ|`, for singular values.
    Modulus,
    /// `Re κ`, for eigenvalues of Hermitian (parts of) matrices.
    Real,
}

/// Which `x` values the sample ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleRegion {
    /// `x ∈ Ω` only: the reduced normalization by `d_n^Ω`.
    Domain,
    /// All of `[0,1]^d`, with `κ = 0` outside `Ω`: normalization by `N(n)`.
    ExtendByZero,
}

fn axis_points(m: usize) -> Vec<f64> {
    (1..=m).map(|i| i as f64 / (m + 1) as f64).collect()
}

fn theta_points(m: usize) -> Vec<f64> {
    (0..m).map(|k| -PI + 2.0 * PI * k as f64 / m as f64).collect()
}

fn tensor(points: &[f64], d: usize) -> Vec<Vec<f64>> {
    let m = points.len() as i64;
    iter_range(&MultiIndex::filled(d, 1), &MultiIndex::filled(d, m))
        .map(|i| i.components().iter().map(|&k| points[k as usize - 1]).collect())
        .collect()
}

fn x_points(sym: &SeparableSymbol, nx: usize, region: SampleRegion) -> Vec<Vec<f64>> {
    let all = tensor(&axis_points(nx), sym.dim);
    match (&sym.domain, region) {
        (Some(d), SampleRegion::Domain) => all.into_iter().filter(|x| d.is_inside(x)).collect(),
        _ => all,
    }
}

/// `κ` on `{x_i = i/(nx+1)} × {θ_k = -π + 2πk/ntheta}` (per axis), keeping
/// only the `x` inside the symbol's domain. Complex values, unsorted.
pub fn sample_symbol_complex(
    sym: &SeparableSymbol,
    nx: usize,
    ntheta: usize,
    region: SampleRegion,
) -> Result<Vec<C64>> {
    if nx == 0 || ntheta == 0 {
        return Err(Error::Empty("symbol sampling grid"));
    }
    let xs = x_points(sym, nx, region);
    if xs.is_empty() {
        return Err(Error::Empty("admissible x points for symbol sampling"));
    }
    let thetas = tensor(&theta_points(ntheta), sym.dim);
    let chunks: Vec<Vec<C64>> = xs
        .par_iter()
        .map(|x| {
            thetas
                .iter()
                .map(|t| sym.eval_extended(x, t))
                .collect::<Result<Vec<C64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Sorted real samples of `|κ|` or `Re κ`.
pub fn sample_symbol(sym: &SeparableSymbol, nx: usize, ntheta: usize, mode: SampleMode) -> Result<Vec<f64>> {
    sample_symbol_in(sym, nx, ntheta, mode, SampleRegion::Domain)
}

pub fn sample_symbol_in(
    sym: &SeparableSymbol,
    nx: usize,
    ntheta: usize,
    mode: SampleMode,
    region: SampleRegion,
) -> Result<Vec<f64>> {
    let z = sample_symbol_complex(sym, nx, ntheta, region)?;
    let mut v: Vec<f64> = match mode {
        SampleMode::Modulus => z.iter().map(|c| c.norm()).collect(),
        SampleMode::Real => z.iter().map(|c| c.re).collect(),
    };
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Smallest common per-axis resolution `r` (used for both `x` and `θ`)
/// giving at least `target` samples.
pub fn resolution_for(sym: &SeparableSymbol, target: usize, region: SampleRegion) -> Result<usize> {
    let d = sym.dim as u32;
    let mut r = 1usize;
    loop {
        let inside = x_points(sym, r, region).len();
        if inside * r.pow(d) >= target {
            return Ok(r);
        }
        if r > 4096 {
            return Err(Error::Empty("admissible x points for symbol sampling"));
        }
        r += 1;
    }
}

/// Quantile function of the empirical law of `v` (sorted), on `(0, 1]`.
#[cfg(test)]
fn quantile(v: &[f64], t: f64) -> f64 {
    let n = v.len();
    let k = ((t * n as f64).ceil() as usize).clamp(1, n);
    v[k - 1]
}

/// Exact Wasserstein-1 distance between the empirical laws of two sorted
/// samples: `∫_0^1 |F_a^{-1}(t) - F_b^{-1}(t)| dt`.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut t = 0.0;
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        let ta = (i + 1) as f64 / na;
        let tb = (j + 1) as f64 / nb;
        let next = ta.min(tb);
        acc += (next - t) * (a[i] - b[j]).abs();
        t = next;
        if ta <= tb {
            i += 1;
        }
        if tb <= ta {
            j += 1;
        }
    }
    acc
}

/// `sup_t |F_a(t) - F_b(t)|` over the merged support of two sorted samples.
pub fn cdf_sup(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0.0f64;
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// The fixed test-function family on the range `[lo, hi]`.
fn test_functions(lo: f64, hi: f64) -> Vec<(&'static str, Box<dyn Fn(f64) -> f64 + Sync>)> {
    let width = if hi > lo { hi - lo } else { 1.0 };
    let unit = move |x: f64| ((x - lo) / width).clamp(0.0, 1.0);
    let bump = move |c: f64| {
        let center = lo + c * width;
        let radius = width / 4.0;
        move |x: f64| {
            let r = (x - center) / radius;
            if r.abs() < 1.0 {
                (1.0 - 1.0 / (1.0 - r * r)).exp()
            } else {
                0.0
            }
        }
    };
    vec![
        ("clamped_x", Box::new(unit)),
        ("clamped_x2", Box::new(move |x| unit(x).powi(2))),
        ("bump_q1", Box::new(bump(0.25))),
        ("bump_q2", Box::new(bump(0.5))),
        ("bump_q3", Box::new(bump(0.75))),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionReport {
    pub wasserstein1: f64,
    pub cdf_sup: f64,
    /// (spectrum count, symbol sample count)
    pub sample_sizes: (usize, usize),
    pub test_functional_gaps: Vec<(String, f64)>,
}

/// W1 and CDF sup distance of two sorted samples.
pub fn compare_samples(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("distribution sample"));
    }
    Ok((wasserstein1(a, b), cdf_sup(a, b)))
}

/// Compares a sorted spectrum with sorted symbol samples. The test
/// functions are placed on the range of the symbol samples.
pub fn compare_distributions(spectrum: &[f64], symbol: &[f64]) -> Result<DistributionReport> {
    let (w, c) = compare_samples(spectrum, symbol)?;
    let (lo, hi) = (symbol[0], symbol[symbol.len() - 1]);
    let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|&x| f(x)).sum::<f64>() / v.len() as f64;
    let gaps = test_functions(lo, hi)
        .into_iter()
        .map(|(name, f)| (name.to_string(), (mean(spectrum, &*f) - mean(symbol, &*f)).abs()))
        .collect();
    Ok(DistributionReport {
        wasserstein1: w,
        cdf_sup: c,
        sample_sizes: (spectrum.len(), symbol.len()),
        test_functional_gaps: gaps,
    })
}

/// Finite-sweep surrogate of a limit: each value may exceed its
/// predecessor by at most 10%.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendVerdict {
    pub values: Vec<f64>,
    pub non_increasing: bool,
    pub strictly_decreasing: bool,
}

pub const TREND_SLACK: f64 = 0.1;

pub fn trend_verdict(values: &[f64]) -> TrendVerdict {
    let pairs = values.windows(2);
    TrendVerdict {
        values: values.to_vec(),
        non_increasing: pairs.clone().all(|w| w[1] <= w[0] * (1.0 + TREND_SLACK)),
        strictly_decreasing: pairs.clone().all(|w| w[1] < w[0]),
    }
}

/// `p(C) = min_{i=1..N+1} {(i-1)/N + σ_i}` from singular values in any
/// order, with `σ_{N+1} = 0`.
pub fn acs_p_from_singvals(sv: &[f64]) -> f64 {
    let n = sv.len();
    if n == 0 {
        return 0.0;
    }
    let mut desc = sv.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let nf = n as f64;
    let mut best = 1.0; // i = N + 1
    for (k, &s) in desc.iter().enumerate() {
        best = f64::min(best, k as f64 / nf + s);
    }
    best
}

pub fn acs_p(c: &dyn MatrixView) -> Result<f64> {
    Ok(acs_p_from_singvals(&spectra::singvals(c)?.values))
}

#[derive(Clone, Debug, Serialize)]
pub struct DacsReport {
    pub per_n: Vec<(GridSize, f64)>,
    /// `p(A_n - B_n)` at the largest `n`, standing in for the limsup.
    pub estimate: f64,
}

pub fn dacs_estimate(seq_a: Sequence, seq_b: Sequence, sweep: &[GridSize]) -> Result<DacsReport> {
    let per_n = sweep
        .par_iter()
        .map(|n| {
            let (a, b) = (seq_a(n)?, seq_b(n)?);
            if a.shape() != b.shape() {
                return Err(Error::SizeMismatch {
                    expected: a.shape(),
                    found: b.shape(),
                });
            }
            Ok((n.clone(), acs_p(&a.sub(&b)?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = per_n.last().map(|p| p.1).ok_or(Error::Empty("sweep"))?;
    Ok(DacsReport { per_n, estimate })
}

/// `min_{L ≥ 0} (#{|f| > L} / M + L)` over the empirical measure of the
/// samples; the minimum is attained at `0` or at a sample modulus.
pub fn pmea(samples: &[C64]) -> Result<f64> {
    let mut m: Vec<f64> = samples.iter().map(|z| z.norm()).collect();
    pmea_of_moduli(&mut m)
}

pub fn pmea_real(samples: &[f64]) -> Result<f64> {
    let mut m: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    pmea_of_moduli(&mut m)
}

fn pmea_of_moduli(m: &mut [f64]) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::Empty("pmea samples"));
    }
    m.sort_by(f64::total_cmp);
    let total = m.len() as f64;
    let above = |l: f64| m.len() - m.partition_point(|&v| v <= l);
    let mut best = above(0.0) as f64 / total;
    let mut k = 0;
    while k < m.len() {
        let l = m[k];
        // skip ties: the count above l is the same for all of them
        while k < m.len() && m[k] == l {
            k += 1;
        }
        best = best.min((m.len() - k) as f64 / total + l);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerifyOptions {
    /// Minimum symbol sample count; at least 50 samples per spectral value
    /// are taken regardless.
    pub min_symbol_samples: usize,
    pub region: SampleRegion,
    /// Multiplies the matrix before its spectrum is taken (e.g. `n^-2`
    /// for finite differences), as a function of `n`.
    #[serde(skip)]
    pub scale: Option<fn(&GridSize) -> f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            min_symbol_samples: 10_000,
            region: SampleRegion::Domain,
            scale: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub n: GridSize,
    pub matrix_size: usize,
    pub report: DistributionReport,
    /// `‖(A - A^H)/2‖_F / sqrt(size)`, eigenvalue checks only.
    pub skew_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelReport>,
    pub trend: TrendVerdict,
}

impl ConvergenceReport {
    pub fn distances(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.report.wasserstein1).collect()
    }
}

fn symbol_samples_for(sym: &SeparableSymbol, count: usize, opts: &VerifyOptions, mode: SampleMode) -> Result<Vec<f64>> {
    let target = opts.min_symbol_samples.max(50 * count);
    let r = resolution_for(sym, target, opts.region)?;
    sample_symbol_in(sym, r, r, mode, opts.region)
}

fn scaled(a: SparseMatrix, n: &GridSize, opts: &VerifyOptions) -> SparseMatrix {
    match opts.scale {
        Some(s) => a.scale(C64::new(s(n), 0.0)),
        None => a,
    }
}

fn finish(levels: Vec<LevelReport>) -> ConvergenceReport {
    let trend = trend_verdict(&levels.iter().map(|l| l.report.wasserstein1).collect::<Vec<_>>());
    ConvergenceReport { levels, trend }
}

/// Singular values of `A_n` against `|κ|` per level of the sweep.
pub fn verify_sigma(
    seq: Sequence,
    sym: &SeparableSymbol,
    sweep: &[GridSize],
    opts: &VerifyOptions,
) -> Result<ConvergenceReport> {
    let levels = sweep
        .par_iter()
        .map(|n| {
            let a = scaled(seq(n)?, n, opts);
            let sv = spectra::singvals(&a)?.values;
            let samples = symbol_samples_for(sym, sv.len(), opts, SampleMode::Modulus)?;
            Ok(LevelReport {
                n: n.clone(),
                matrix_size: sv.len(),
                report: compare_distributions(&sv, &samples)?,
                skew_ratio: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(levels))
}

/// Eigenvalues of `A_n` (or of its Hermitian part) against `Re κ`.
pub fn verify_lambda(
    seq: Sequence,
    sym: &SeparableSymbol,
    sweep: &[GridSize],
    hermitian_part: bool,
    opts: &VerifyOptions,
) -> Result<ConvergenceReport> {
    let levels = sweep
        .par_iter()
        .map(|n| {
            let a = scaled(seq(n)?, n, opts);
            let size = a.nrows();
            let skew = a.skew_part()?.frobenius() / (size.max(1) as f64).sqrt();
            let h = if hermitian_part { a.hermitian_part()? } else { a };
            let ev = spectra::eigvals_hermitian(&h)?.values;
            let samples = symbol_samples_for(sym, ev.len(), opts, SampleMode::Real)?;
            Ok(LevelReport {
                n: n.clone(),
                matrix_size: size,
                report: compare_distributions(&ev, &samples)?,
                skew_ratio: Some(skew),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(levels))
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroScore {
    pub n: GridSize,
    pub matrix_size: usize,
    /// `#{σ_i > 1e-6 σ_max} / size`
    pub fraction_above: f64,
    pub mean_singular_value: f64,
}

pub fn zero_distribution_score(seq: Sequence, sweep: &[GridSize]) -> Result<Vec<ZeroScore>> {
    sweep
        .par_iter()
        .map(|n| {
            let sv = spectra::singvals(&seq(n)?)?.values;
            let size = sv.len().max(1) as f64;
            let max = sv.last().copied().unwrap_or(0.0);
            let eps = 1e-6 * max;
            let above = if max > 0.0 { sv.iter().filter(|&&s| s > eps).count() } else { 0 };
            Ok(ZeroScore {
                n: n.clone(),
                matrix_size: sv.len(),
                fraction_above: above as f64 / size,
                mean_singular_value: sv.iter().sum::<f64>() / size,
            })
        })
        .collect()
}
