//! Subdomains of the unit hypercube and the grid quantities attached to them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprlang::{self, Context, Expr};
use crate::multiindex::{iter_range, GridSize, MultiIndex};

/// Samples taken along a segment before refinement.
const SEGMENT_SAMPLES: usize = 64;
const BISECTION_STEPS: usize = 40;
/// Recursion cap when certifying a sampled interval with the signed distance.
const CERTIFY_DEPTH: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Serializable description of a domain, as found in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Axis-aligned box; defaults to the whole unit hypercube.
    Hypercube {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<Vec<f64>>,
    },
    /// Euclidean ball; the dimension is the length of `center`.
    Disk { center: Vec<f64>, radius: f64 },
    Annulus {
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
    Triangle {
        #[serde(default = "unit_triangle")]
        vertices: [[f64; 2]; 3],
    },
    LShape,
    Polygon { vertices: Vec<[f64; 2]> },
    /// Open set `{x : predicate(x)}`. Without `distance_probe` there is no
    /// way to measure distances to the boundary.
    Implicit {
        dim: usize,
        predicate: String,
        #[serde(default)]
        distance_probe: bool,
    },
    /// Image `{M y + t : y in base}` of another domain.
    Mapped {
        base: Box<DomainSpec>,
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
}

fn unit_triangle() -> [[f64; 2]; 3] {
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
}

const L_SHAPE: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [1.0, 1.0],
    [0.5, 1.0],
    [0.5, 0.5],
    [0.0, 0.5],
];

#[derive(Clone, Debug)]
enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
    Implicit { expr: Expr, probe: bool },
    Mapped(Box<Mapped>),
}

#[derive(Clone, Debug)]
struct Mapped {
    base: Domain,
    inverse: Vec<f64>,
    offset: Vec<f64>,
    det: f64,
    /// Scale factor when the linear part is a similarity.
    similarity: Option<f64>,
}

/// A Peano-Jordan measurable subset of `[0,1]^d`.
#[derive(Clone, Debug)]
pub struct Domain {
    dim: usize,
    shape: Shape,
    spec: DomainSpec,
}

impl Serialize for Domain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl Domain {
    pub fn hypercube(dim: usize) -> Domain {
        Domain::from_spec(&DomainSpec::Hypercube {
            dim,
            lo: None,
            hi: None,
        })
        .expect("unit hypercube is always valid")
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Hypercube {
            dim: lo.len(),
            lo: Some(lo),
            hi: Some(hi),
        })
    }

    pub fn disk(center: Vec<f64>, radius: f64) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Disk { center, radius })
    }

    pub fn annulus(center: [f64; 2], inner: f64, outer: f64) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Annulus {
            center,
            inner,
            outer,
        })
    }

    pub fn triangle(vertices: [[f64; 2]; 3]) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Triangle { vertices })
    }

    pub fn l_shape() -> Domain {
        Domain::from_spec(&DomainSpec::LShape).expect("L-shape is always valid")
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Polygon { vertices })
    }

    pub fn implicit(dim: usize, predicate: &str, distance_probe: bool) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Implicit {
            dim,
            predicate: predicate.to_string(),
            distance_probe,
        })
    }

    pub fn mapped(base: &Domain, matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Domain> {
        Domain::from_spec(&DomainSpec::Mapped {
            base: Box::new(base.spec.clone()),
            matrix,
            offset,
        })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Domain> {
        let bad = |m: String| Err(Error::Domain(m));
        let (dim, shape) = match spec {
            DomainSpec::Hypercube { dim, lo, hi } => {
                if *dim == 0 {
                    return bad("hypercube dimension must be at least 1".into());
                }
                let lo = lo.clone().unwrap_or_else(|| vec![0.0; *dim]);
                let hi = hi.clone().unwrap_or_else(|| vec![1.0; *dim]);
                if lo.len() != *dim || hi.len() != *dim {
                    return bad("hypercube bounds must have `dim` entries".into());
                }
                if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
                    return bad("hypercube needs lo < hi on every axis".into());
                }
                (*dim, Shape::Box { lo, hi })
            }
            DomainSpec::Disk { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return bad("disk needs a nonempty center and a positive radius".into());
                }
                (
                    center.len(),
                    Shape::Ball {
                        center: center.clone(),
                        radius: *radius,
                    },
                )
            }
            DomainSpec::Annulus {
                center,
                inner,
                outer,
            } => {
                if !(*inner >= 0.0 && inner < outer) {
                    return bad("annulus needs 0 <= inner < outer".into());
                }
                (
                    2,
                    Shape::Annulus {
                        center: *center,
                        inner: *inner,
                        outer: *outer,
                    },
                )
            }
            DomainSpec::Triangle { vertices } => {
                if polygon_area(vertices) == 0.0 {
                    return bad("degenerate triangle".into());
                }
                (
                    2,
                    Shape::Polygon {
                        vertices: vertices.to_vec(),
                    },
                )
            }
            DomainSpec::LShape => (
                2,
                Shape::Polygon {
                    vertices: L_SHAPE.to_vec(),
                },
            ),
            DomainSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return bad("polygon needs at least 3 vertices".into());
                }
                (
                    2,
                    Shape::Polygon {
                        vertices: vertices.clone(),
                    },
                )
            }
            DomainSpec::Implicit {
                dim,
                predicate,
                distance_probe,
            } => {
                let expr = exprlang::parse(predicate, Context::Predicate)?;
                if *dim == 0 || expr.max_var() > *dim {
                    return bad(format!(
                        "predicate uses x{} but the domain has dimension {dim}",
                        expr.max_var()
                    ));
                }
                (
                    *dim,
                    Shape::Implicit {
                        expr,
                        probe: *distance_probe,
                    },
                )
            }
            DomainSpec::Mapped {
                base,
                matrix,
                offset,
            } => {
                let base = Domain::from_spec(base)?;
                let d = base.dim;
                if matrix.len() != d || matrix.iter().any(|r| r.len() != d) || offset.len() != d {
                    return bad(format!("mapped domain needs a {d}x{d} matrix and offset"));
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                let (inverse, det) = invert(&flat, d)
                    .ok_or_else(|| Error::Domain("mapped domain matrix is singular".into()))?;
                (
                    d,
                    Shape::Mapped(Box::new(Mapped {
                        similarity: similarity_scale(&flat, d),
                        base,
                        inverse,
                        offset: offset.clone(),
                        det,
                    })),
                )
            }
        };
        Ok(Domain {
            dim,
            shape,
            spec: spec.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn is_full_hypercube(&self) -> bool {
        match &self.shape {
            Shape::Box { lo, hi } => {
                lo.iter().all(|&v| v <= 0.0) && hi.iter().all(|&v| v >= 1.0)
            }
            _ => false,
        }
    }

    /// Implicit domains never report `Boundary`: the predicate describes the
    /// open set and everything else is outside. Predicates that fail to
    /// evaluate at a point (e.g. `sqrt` of a negative) also count as outside.
    pub fn membership(&self, p: &[f64]) -> Membership {
        debug_assert_eq!(p.len(), self.dim);
        match &self.shape {
            Shape::Implicit { expr, .. } => match expr.eval_bool(p) {
                Ok(true) => Membership::Inside,
                _ => Membership::Outside,
            },
            Shape::Polygon { vertices } => polygon_membership(vertices, p).0,
            Shape::Mapped(m) => m.base.membership(&m.pull_back(p)),
            _ => {
                let sd = self.signed_distance(p).expect("builtin shape");
                if sd < 0.0 {
                    Membership::Inside
                } else if sd == 0.0 {
                    Membership::Boundary
                } else {
                    Membership::Outside
                }
            }
        }
    }

    pub fn is_inside(&self, p: &[f64]) -> bool {
        self.membership(p) == Membership::Inside
    }

    pub fn in_closure(&self, p: &[f64]) -> bool {
        self.membership(p) != Membership::Outside
    }

    /// Exact signed distance to the boundary, negative inside. `None` for
    /// implicit domains and for mapped domains whose map is not a similarity.
    pub fn signed_distance(&self, p: &[f64]) -> Option<f64> {
        match &self.shape {
            Shape::Box { lo, hi } => {
                let mut outside = 0.0f64;
                let mut inside = f64::NEG_INFINITY;
                for k in 0..p.len() {
                    let c = 0.5 * (lo[k] + hi[k]);
                    let q = (p[k] - c).abs() - 0.5 * (hi[k] - lo[k]);
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                Some(if inside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                })
            }
            Shape::Ball { center, radius } => Some(dist(p, center) - radius),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let rho = dist(p, center);
                Some((rho - outer).max(inner - rho))
            }
            Shape::Polygon { vertices } => {
                let (m, d) = polygon_membership(vertices, p);
                Some(match m {
                    Membership::Inside => -d,
                    Membership::Boundary => 0.0,
                    Membership::Outside => d,
                })
            }
            Shape::Implicit { .. } => None,
            Shape::Mapped(m) => {
                let s = m.similarity?;
                m.base.signed_distance(&m.pull_back(p)).map(|d| s * d)
            }
        }
    }

    pub fn has_distance(&self) -> bool {
        match &self.shape {
            Shape::Implicit { probe, .. } => *probe,
            Shape::Mapped(m) => m.similarity.is_some() || m.base.has_distance(),
            _ => true,
        }
    }

    /// Lebesgue measure when it is known in closed form. Shapes are assumed
    /// to lie in the unit hypercube, except boxes, which are clipped to it.
    pub fn analytic_measure(&self) -> Option<f64> {
        match &self.shape {
            Shape::Box { lo, hi } => Some(
                lo.iter()
                    .zip(hi)
                    .map(|(a, b)| (b.min(1.0) - a.max(0.0)).max(0.0))
                    .product(),
            ),
            Shape::Ball { center, radius } => Some(ball_volume(center.len(), *radius)),
            Shape::Annulus { inner, outer, .. } => {
                Some(std::f64::consts::PI * (outer * outer - inner * inner))
            }
            Shape::Polygon { vertices } => Some(polygon_area(vertices).abs()),
            Shape::Implicit { .. } => None,
            Shape::Mapped(m) => m.base.analytic_measure().map(|v| v * m.det.abs()),
        }
    }

    /// Whether `p` lies within distance `c` of the boundary.
    ///
    /// Uses the exact signed distance when there is one. Otherwise the
    /// membership of `p` is compared against the `2^d` probes `p + c s/sqrt(d)`,
    /// `s` in `{-1,1}^d`, which is only an estimate.
    pub fn within_boundary_distance(&self, p: &[f64], c: f64) -> Result<bool> {
        if let Some(sd) = self.signed_distance(p) {
            return Ok(sd.abs() <= c);
        }
        if !self.has_distance() {
            return Err(Error::Domain(
                "boundary distance needs a signed distance or a configured distance probe".into(),
            ));
        }
        let here = self.is_inside(p);
        let d = self.dim;
        let r = c / (d as f64).sqrt();
        let mut q = vec![0.0; d];
        for corner in 0..(1usize << d) {
            for k in 0..d {
                let s = if corner >> k & 1 == 1 { 1.0 } else { -1.0 };
                q[k] = p[k] + s * r;
            }
            if self.is_inside(&q) != here {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Parameter `t` in `(0, len)` where the segment `p + t e` (`e` = unit
    /// vector along `axis` with the given sign) first leaves the open set, or
    /// `None` when the half-open segment `[p, p + len e)` stays inside.
    ///
    /// The segment is sampled at 64 equispaced interior parameters. Any
    /// sample outside the open set is refined by 40 bisection steps. With a
    /// signed distance, gaps between consecutive inside samples are also
    /// certified: two balls of radius |sd| cover the gap or it is split.
    pub fn segment_exit(&self, p: &[f64], axis: usize, sign: f64, len: f64) -> Option<f64> {
        let at = |t: f64| {
            let mut q = p.to_vec();
            q[axis] += sign * t;
            q
        };
        let exact = self.signed_distance(p).is_some();
        if exact {
            let sd0 = self.signed_distance(p).unwrap();
            if sd0 < -len {
                return None;
            }
        }
        let bisect = |mut lo: f64, mut hi: f64| {
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if self.is_inside(&at(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let step = len / (SEGMENT_SAMPLES + 1) as f64;
        let mut prev = 0.0;
        for m in 1..=SEGMENT_SAMPLES + 1 {
            let t = if m == SEGMENT_SAMPLES + 1 {
                len
            } else {
                m as f64 * step
            };
            let q = at(t);
            if m <= SEGMENT_SAMPLES && !self.is_inside(&q) {
                return Some(bisect(prev, t));
            }
            if exact {
                if let Some(hit) = self.certify(&at, prev, t, 0) {
                    return Some(bisect(hit.0, hit.1));
                }
            }
            prev = t;
        }
        None
    }

    /// Searches `(a, b)` for a point outside the open set, using the signed
    /// distance to skip covered pieces. Returns an (inside, outside) bracket.
    fn certify(
        &self,
        at: &dyn Fn(f64) -> Vec<f64>,
        a: f64,
        b: f64,
        depth: usize,
    ) -> Option<(f64, f64)> {
        let ra = -self.signed_distance(&at(a)).unwrap();
        let rb = self.signed_distance(&at(b)).unwrap();
        // `a` is always inside; `b` may be the segment end, which can lie on
        // or beyond the boundary.
        let reach = if rb < 0.0 { ra - rb } else { ra };
        if reach >= b - a || depth == CERTIFY_DEPTH {
            return None;
        }
        let mid = 0.5 * (a + b);
        if !self.is_inside(&at(mid)) {
            return Some((a, mid));
        }
        self.certify(at, a, mid, depth + 1)
            .or_else(|| self.certify(at, mid, b, depth + 1))
    }

    /// Fraction `s` in `(0,1]` of the step `h` along `axis` (direction `sign`)
    /// that stays in the open set.
    pub fn neighbor_fraction(&self, p: &[f64], axis: usize, sign: f64, h: f64) -> Result<f64> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.len(),
            });
        }
        if !self.is_inside(p) {
            return Err(Error::NotInterior { point: p.to_vec() });
        }
        Ok(match self.segment_exit(p, axis, sign, h) {
            Some(t) => (t / h).clamp(f64::MIN_POSITIVE, 1.0),
            None => 1.0,
        })
    }

    fn check_dim(&self, n: &GridSize) -> Result<()> {
        if n.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: n.dim(),
            });
        }
        Ok(())
    }
}

impl Mapped {
    fn pull_back(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| self.inverse[r * d + c] * (x[c] - self.offset[c]))
                    .sum()
            })
            .collect()
    }
}

fn dist(p: &[f64], c: &[f64]) -> f64 {
    p.iter()
        .zip(c)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn ball_volume(d: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    let unit = match d {
        0 => 1.0,
        1 => 2.0,
        _ => {
            let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
            let mut k = if d % 2 == 0 { 2 } else { 3 };
            while k <= d {
                v *= 2.0 * PI / k as f64;
                k += 2;
            }
            v
        }
    };
    unit * r.powi(d as i32)
}

fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|k| {
            let (a, b) = (v[k], v[(k + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Even-odd membership plus the unsigned distance to the nearest edge.
fn polygon_membership(v: &[[f64; 2]], p: &[f64]) -> (Membership, f64) {
    let (x, y) = (p[0], p[1]);
    let n = v.len();
    let mut inside = false;
    let mut best = f64::INFINITY;
    for k in 0..n {
        let (a, b) = (v[k], v[(k + 1) % n]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (px, py) = (x - a[0], y - a[1]);
        let cross = ex * py - ey * px;
        let within = x >= a[0].min(b[0])
            && x <= a[0].max(b[0])
            && y >= a[1].min(b[1])
            && y <= a[1].max(b[1]);
        if cross == 0.0 && within {
            return (Membership::Boundary, 0.0);
        }
        let len2 = ex * ex + ey * ey;
        let t = ((px * ex + py * ey) / len2).clamp(0.0, 1.0);
        let (dx, dy) = (px - t * ex, py - t * ey);
        best = best.min((dx * dx + dy * dy).sqrt());
        if (a[1] > y) != (b[1] > y) {
            let xc = a[0] + (y - a[1]) * ex / ey;
            if x < xc {
                inside = !inside;
            }
        }
    }
    if best == 0.0 {
        return (Membership::Boundary, 0.0);
    }
    (
        if inside {
            Membership::Inside
        } else {
            Membership::Outside
        },
        best,
    )
}

/// Gauss-Jordan inverse with partial pivoting; returns the determinant too.
fn invert(a: &[f64], d: usize) -> Option<(Vec<f64>, f64)> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; d * d];
    for k in 0..d {
        inv[k * d + k] = 1.0;
    }
    let mut det = 1.0;
    for col in 0..d {
        let piv = (col..d).max_by(|&r, &s| m[r * d + col].abs().total_cmp(&m[s * d + col].abs()))?;
        if m[piv * d + col] == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..d {
                m.swap(piv * d + c, col * d + c);
                inv.swap(piv * d + c, col * d + c);
            }
            det = -det;
        }
        let pv = m[col * d + col];
        det *= pv;
        for c in 0..d {
            m[col * d + c] /= pv;
            inv[col * d + c] /= pv;
        }
        for r in 0..d {
            if r != col {
                let f = m[r * d + col];
                if f != 0.0 {
                    for c in 0..d {
                        m[r * d + c] -= f * m[col * d + c];
                        inv[r * d + c] -= f * inv[col * d + c];
                    }
                }
            }
        }
    }
    Some((inv, det))
}

/// `s` when `M^T M = s^2 I` (up to rounding).
fn similarity_scale(m: &[f64], d: usize) -> Option<f64> {
    let mut g = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            g[r * d + c] = (0..d).map(|k| m[k * d + r] * m[k * d + c]).sum();
        }
    }
    let s2 = g[0];
    let ok = (0..d).all(|r| {
        (0..d).all(|c| {
            let want = if r == c { s2 } else { 0.0 };
            (g[r * d + c] - want).abs() <= 1e-12 * s2
        })
    });
    ok.then(|| s2.sqrt())
}

/// Membership bits of the grid `i/(n+1)`, `i = 1..n`, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMask {
    n: GridSize,
    bits: Vec<bool>,
    count: usize,
}

impl GridMask {
    pub fn from_bits(n: GridSize, bits: Vec<bool>) -> Result<GridMask> {
        if bits.len() != n.total() {
            return Err(Error::SizeMismatch {
                expected: (n.total(), 1),
                found: (bits.len(), 1),
            });
        }
        let count = bits.iter().filter(|&&b| b).count();
        Ok(GridMask { n, bits, count })
    }

    pub fn full(n: GridSize) -> GridMask {
        let bits = vec![true; n.total()];
        GridMask::from_bits(n, bits).unwrap()
    }

    pub fn grid(&self) -> &GridSize {
        &self.n
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// 0-based flat index.
    pub fn get(&self, flat0: usize) -> bool {
        self.bits[flat0]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn toggled(&self, flat0: &[usize]) -> GridMask {
        let mut bits = self.bits.clone();
        for &k in flat0 {
            bits[k] = !bits[k];
        }
        GridMask::from_bits(self.n.clone(), bits).unwrap()
    }

    pub fn symmetric_difference(&self, other: &GridMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Grid points `i/(n+1)` for `i = 1..n` in lexicographic order.
pub fn grid_points(n: &GridSize) -> impl Iterator<Item = (MultiIndex, Vec<f64>)> + '_ {
    let lo = MultiIndex::filled(n.dim(), 1);
    iter_range(&lo, n.index()).map(move |i| {
        let p = n.point(&i);
        (i, p)
    })
}

fn flat_points<T: Send>(n: &GridSize, f: impl Fn(&[f64]) -> T + Sync + Send) -> Vec<T> {
    (0..n.total())
        .into_par_iter()
        .map_init(
            || vec![0.0; n.dim()],
            |p, k| {
                n.point_of_flat(k, p);
                f(p)
            },
        )
        .collect()
}

/// Bit `k` is set iff grid point `k` lies in the interior (or, with
/// `closure`, in the closure) of the domain.
pub fn mask(domain: &Domain, n: &GridSize, closure: bool) -> Result<GridMask> {
    domain.check_dim(n)?;
    let bits = flat_points(n, |p| match domain.membership(p) {
        Membership::Inside => true,
        Membership::Boundary => closure,
        Membership::Outside => false,
    });
    GridMask::from_bits(n.clone(), bits)
}

/// Number of grid points within distance `c` of the boundary.
pub fn boundary_band_count(domain: &Domain, n: &GridSize, c: f64) -> Result<usize> {
    domain.check_dim(n)?;
    if !domain.has_distance() {
        return Err(Error::Domain(format!(
            "no boundary distance available for {:?}",
            domain.spec()
        )));
    }
    let hits = flat_points(n, |p| domain.within_boundary_distance(p, c));
    hits.into_iter()
        .try_fold(0, |acc, h| Ok(acc + usize::from(h?)))
}

/// 0-based flat indices of interior grid points `x_j` for which some open
/// segment `(x_j - k h_i e_i, x_j + k h_i e_i)` leaves the open set.
pub fn near_boundary_flat(domain: &Domain, n: &GridSize, k: usize) -> Result<Vec<usize>> {
    domain.check_dim(n)?;
    let steps = n.steps();
    let flags = flat_points(n, |p| {
        domain.is_inside(p)
            && (0..n.dim()).any(|axis| {
                let len = k as f64 * steps[axis];
                domain.segment_exit(p, axis, 1.0, len).is_some()
                    || domain.segment_exit(p, axis, -1.0, len).is_some()
            })
    });
    Ok(flags
        .into_iter()
        .enumerate()
        .filter_map(|(j, f)| f.then_some(j))
        .collect())
}

pub fn near_boundary_points(domain: &Domain, n: &GridSize, k: usize) -> Result<Vec<MultiIndex>> {
    let strides = n.strides();
    Ok(near_boundary_flat(domain, n, k)?
        .into_iter()
        .map(|j| {
            let mut rem = j;
            MultiIndex::new(
                strides
                    .iter()
                    .map(|s| {
                        let q = rem / s;
                        rem %= s;
                        q as i64 + 1
                    })
                    .collect(),
            )
        })
        .collect())
}

/// `d_n / N(n)`, the share of grid points in the interior.
pub fn measure_estimate(domain: &Domain, n: &GridSize) -> Result<f64> {
    Ok(mask(domain, n, false)?.count() as f64 / n.total() as f64)
}
