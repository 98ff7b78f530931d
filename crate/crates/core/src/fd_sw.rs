//! Shortley-Weller finite differences for
//! `-Σ ∂_i(a_i ∂_i u) + Σ b_i ∂_i u + c u = f` with `u = 0` on the boundary
//! of a general domain.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{mask, Domain, GridMask};
use crate::error::{Error, Result};
use crate::glt::{CoefficientFn, Stencil};
use crate::matrix::{MatrixView, SparseMatrix};
use crate::multiindex::GridSize;
use crate::reduction::Projector;
use crate::symbols::SeparableSymbol;

/// Fractions below this drop the grid point for the level.
pub const MIN_FRACTION: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SWProblem {
    pub domain: Domain,
    pub diffusion: Vec<CoefficientFn>,
    pub convection: Vec<CoefficientFn>,
    pub reaction: CoefficientFn,
    pub rhs: CoefficientFn,
}

impl SWProblem {
    /// `-Δu = f` with `f = 1`.
    pub fn laplacian(domain: Domain) -> SWProblem {
        let d = domain.dim();
        SWProblem {
            domain,
            diffusion: vec![CoefficientFn::constant(1.0); d],
            convection: vec![CoefficientFn::constant(0.0); d],
            reaction: CoefficientFn::constant(0.0),
            rhs: CoefficientFn::constant(1.0),
        }
    }

    fn check(&self, n: &GridSize) -> Result<()> {
        let d = self.domain.dim();
        for (what, len) in [("diffusion", self.diffusion.len()), ("convection", self.convection.len())] {
            if len != d {
                return Err(Error::Config(format!("{what} needs {d} coefficients, got {len}")));
            }
        }
        if n.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: n.dim(),
            });
        }
        Ok(())
    }
}

/// `s_i^±` at one interior grid point, per axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborFractions {
    pub s_plus: Vec<f64>,
    pub s_minus: Vec<f64>,
}

pub fn neighbor_fraction(domain: &Domain, x: &[f64], axis: usize, sign: f64, h: f64) -> Result<f64> {
    domain.neighbor_fraction(x, axis, sign, h)
}

pub fn neighbor_fractions(domain: &Domain, x: &[f64], n: &GridSize) -> Result<NeighborFractions> {
    let steps = n.steps();
    let mut out = NeighborFractions {
        s_plus: Vec::with_capacity(n.dim()),
        s_minus: Vec::with_capacity(n.dim()),
    };
    for (axis, &h) in steps.iter().enumerate() {
        out.s_plus.push(domain.neighbor_fraction(x, axis, 1.0, h)?);
        out.s_minus.push(domain.neighbor_fraction(x, axis, -1.0, h)?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SWSystem {
    /// `d x d`, rows and columns in lexicographic order of the kept points.
    pub matrix: SparseMatrix,
    pub projector: Projector,
    pub rhs: Vec<f64>,
    /// 0-based flat indices of interior points dropped for tiny fractions.
    pub dropped: Vec<usize>,
}

fn shifted(x: &[f64], axis: usize, t: f64) -> Vec<f64> {
    let mut q = x.to_vec();
    q[axis] += t;
    q
}

fn real(f: &CoefficientFn, x: &[f64]) -> Result<f64> {
    f.eval_real(x)
}

pub fn assemble_sw(prob: &SWProblem, n: &GridSize) -> Result<SWSystem> {
    prob.check(n)?;
    let interior = mask(&prob.domain, n, false)?;
    let candidates: Vec<usize> = (0..n.total()).filter(|&k| interior.get(k)).collect();
    let fractions: Vec<NeighborFractions> = candidates
        .par_iter()
        .map_init(
            || vec![0.0; n.dim()],
            |x, &k| {
                n.point_of_flat(k, x);
                neighbor_fractions(&prob.domain, x, n)
            },
        )
        .collect::<Result<_>>()?;
    let mut bits = interior.bits().to_vec();
    let mut dropped = Vec::new();
    for (&k, s) in candidates.iter().zip(&fractions) {
        if s.s_plus.iter().chain(&s.s_minus).any(|&v| v < MIN_FRACTION) {
            bits[k] = false;
            dropped.push(k);
        }
    }
    if !dropped.is_empty() {
        log::warn!(
            "dropped {} grid point(s) closer than {MIN_FRACTION} steps to the boundary at n = {}",
            dropped.len(),
            n.index()
        );
    }
    let kept_mask = GridMask::from_bits(n.clone(), bits)?;
    let projector = Projector::new(kept_mask);
    if projector.is_empty() {
        return Err(Error::Empty("interior grid points"));
    }
    let mut row_of = vec![usize::MAX; n.total()];
    for (r, &k) in projector.kept().iter().enumerate() {
        row_of[k] = r;
    }
    let frac_of: std::collections::HashMap<usize, &NeighborFractions> =
        candidates.iter().copied().zip(&fractions).collect();
    let steps = n.steps();
    let strides = n.strides();
    let rows: Vec<(Vec<(usize, C64)>, f64)> = projector
        .kept()
        .par_iter()
        .map(|&k| {
            let mut x = vec![0.0; n.dim()];
            n.point_of_flat(k, &mut x);
            let s = frac_of[&k];
            let mut diag = real(&prob.reaction, &x)?;
            let mut entries = Vec::with_capacity(2 * n.dim() + 1);
            for axis in 0..n.dim() {
                let h = steps[axis];
                let (sp, sm) = (s.s_plus[axis], s.s_minus[axis]);
                let a = &prob.diffusion[axis];
                let ap = real(a, &shifted(&x, axis, sp * h / 2.0))?;
                let am = real(a, &shifted(&x, axis, -sm * h / 2.0))?;
                diag += ap / (0.5 * sp * (sp + sm) * h * h) + am / (0.5 * sm * (sp + sm) * h * h);
                let b = real(&prob.convection[axis], &x)?;
                for (sign, frac) in [(1.0, sp), (-1.0, sm)] {
                    if frac < 1.0 {
                        continue;
                    }
                    let pos = (k / strides[axis]) % n.axis(axis) + 1;
                    let neighbor = if sign > 0.0 {
                        (pos < n.axis(axis)).then(|| k + strides[axis])
                    } else {
                        (pos > 1).then(|| k - strides[axis])
                    };
                    let Some(j) = neighbor else { continue };
                    if row_of[j] == usize::MAX {
                        continue;
                    }
                    let aj = real(a, &shifted(&x, axis, sign * h / 2.0))?;
                    let v = -aj / (0.5 * (sp + sm) * h * h) + sign * b / ((sp + sm) * h);
                    entries.push((row_of[j], C64::new(v, 0.0)));
                }
            }
            entries.push((row_of[k], C64::new(diag, 0.0)));
            entries.sort_by_key(|e| e.0);
            Ok((entries, real(&prob.rhs, &x)?))
        })
        .collect::<Result<_>>()?;
    let d = projector.len();
    let (rows, rhs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let matrix = SparseMatrix::from_sorted_rows(d, rows);
    Ok(SWSystem {
        matrix,
        projector,
        rhs,
        dropped,
    })
}

/// The `n^-2` factor applied before symbol comparisons, `n` the smallest
/// component of the grid size.
pub fn sw_scale(n: &GridSize) -> f64 {
    let m = n.min_component() as f64;
    1.0 / (m * m)
}

/// `Σ_i a_i(x) (2 - 2 cos θ_i)` on the interior of the domain.
pub fn sw_symbol(prob: &SWProblem) -> SeparableSymbol {
    let d = prob.domain.dim();
    let terms = prob
        .diffusion
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), Stencil::laplacian_1d(d, i)))
        .collect();
    SeparableSymbol::from_terms(d, terms)
        .expect("laplacian stencils have the problem dimension")
        .restricted_to(&prob.domain)
}

#[derive(Clone, Debug, Serialize)]
pub struct SkewLevel {
    pub n: GridSize,
    pub d_omega: usize,
    /// `‖skew(n^-2 A)‖_F^2 / d`
    pub ratio: f64,
}

pub fn sw_skew_norm_report(prob: &SWProblem, sweep: &[GridSize]) -> Result<Vec<SkewLevel>> {
    sweep
        .par_iter()
        .map(|n| {
            let sys = assemble_sw(prob, n)?;
            let a = sys.matrix.scale(C64::new(sw_scale(n), 0.0));
            let im = a.skew_part()?.frobenius();
            let d = sys.projector.len();
            Ok(SkewLevel {
                n: n.clone(),
                d_omega: d,
                ratio: im * im / d as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::near_boundary_flat;
    use crate::glt::{build_matrix, GltExpr};
    use crate::matrix::DenseMatrix;
    use crate::spectra;

    fn g(n: &[i64]) -> GridSize {
        GridSize::from_slice(n).unwrap()
    }

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn fraction_examples() {
        let unit = Domain::hypercube(1);
        assert_eq!(neighbor_fraction(&unit, &[0.5], 0, 1.0, 0.25).unwrap(), 1.0);
        let short = Domain::cuboid(vec![0.0], vec![0.6]).unwrap();
        let s = neighbor_fraction(&short, &[0.5], 0, 1.0, 0.25).unwrap();
        assert!((s - 0.4).abs() < 1e-10, "{s}");
        let disk = Domain::disk(vec![0.5, 0.5], 0.5).unwrap();
        assert_eq!(neighbor_fraction(&disk, &[0.5, 0.9], 1, 1.0, 1.0 / 16.0).unwrap(), 1.0);
        assert!(neighbor_fraction(&short, &[0.7], 0, 1.0, 0.25).is_err());
    }

    #[test]
    fn one_dimensional_examples() {
        let mut p = SWProblem::laplacian(Domain::hypercube(1));
        let a = assemble_sw(&p, &g(&[3])).unwrap().matrix.to_dense();
        let want = DenseMatrix::from_rows(&[
            vec![32.0, -16.0, 0.0],
            vec![-16.0, 32.0, -16.0],
            vec![0.0, -16.0, 32.0],
        ]);
        assert_eq!(a, want);
        p.reaction = CoefficientFn::constant(5.0);
        let a = assemble_sw(&p, &g(&[3])).unwrap().matrix;
        assert!((0..3).all(|i| a.get(i, i) == re(37.0)));
        let short = SWProblem::laplacian(Domain::cuboid(vec![0.0], vec![0.6]).unwrap());
        let sys = assemble_sw(&short, &g(&[3])).unwrap();
        assert_eq!(sys.projector.kept(), &[0, 1]);
        let a = sys.matrix;
        assert!((a.get(1, 1).re - 80.0).abs() < 1e-7, "{}", a.get(1, 1));
        assert_eq!(a.get(0, 1), re(-16.0));
        // the left neighbour of x = 0.5 is a unit step: table value 2/(1+0.4) * (-16)
        assert!((a.get(1, 0).re + 16.0 / 0.7).abs() < 1e-7);
    }

    #[test]
    fn square_matches_classical_central_differences() {
        for (d, m) in [(1usize, 7i64), (2, 5), (3, 3)] {
            let n = GridSize::cubic(d, m as usize).unwrap();
            let h = 1.0 / (m + 1) as f64;
            let (a, b, c) = (1.7, [0.3, -1.1, 0.6], 2.5);
            let prob = SWProblem {
                domain: Domain::hypercube(d),
                diffusion: vec![CoefficientFn::constant(a); d],
                convection: (0..d).map(|i| CoefficientFn::constant(b[i])).collect(),
                reaction: CoefficientFn::constant(c),
                rhs: CoefficientFn::constant(0.0),
            };
            let sw = assemble_sw(&prob, &n).unwrap().matrix;
            let mut terms = vec![GltExpr::toeplitz(Stencil::constant(d, re(c)))];
            for i in 0..d {
                terms.push(GltExpr::scalar(a / (h * h), GltExpr::toeplitz(Stencil::laplacian_1d(d, i))));
                // entry (j, j + e_i) = f_{-e_i}
                let mut conv = Stencil::new(d);
                let mut e = vec![0i64; d];
                e[i] = -1;
                conv.add(&e, re(b[i] / (2.0 * h))).unwrap();
                e[i] = 1;
                conv.add(&e, re(-b[i] / (2.0 * h))).unwrap();
                terms.push(GltExpr::toeplitz(conv));
            }
            let classical = build_matrix(&GltExpr::Sum(terms), &n).unwrap();
            let diff = sw.sub(&classical).unwrap();
            assert!(diff.max_abs() <= 1e-12 * classical.max_abs(), "d={d}");
        }
    }

    fn variable_problem(domain: Domain) -> SWProblem {
        SWProblem {
            domain,
            diffusion: vec![
                CoefficientFn::parse("1 + x1").unwrap(),
                CoefficientFn::parse("2 + sin(x2)").unwrap(),
            ],
            convection: vec![CoefficientFn::constant(0.0); 2],
            reaction: CoefficientFn::parse("x1*x2").unwrap(),
            rhs: CoefficientFn::constant(1.0),
        }
    }

    #[test]
    fn interior_rows_match_restricted_square_assembly() {
        let disk = Domain::disk(vec![0.5, 0.5], 0.4).unwrap();
        let n = g(&[31, 31]);
        let on_disk = assemble_sw(&variable_problem(disk.clone()), &n).unwrap();
        let chi = CoefficientFn::indicator(&disk);
        let mut sq = variable_problem(Domain::hypercube(2));
        for a in &mut sq.diffusion {
            *a = a.times(&chi);
        }
        sq.reaction = sq.reaction.times(&chi);
        let square = assemble_sw(&sq, &n).unwrap();
        let restricted = on_disk.projector.restrict(&on_disk.projector.expand(&on_disk.matrix).unwrap()).unwrap();
        assert_eq!(restricted, on_disk.matrix);
        let square_on_disk = on_disk.projector.restrict(&square.matrix).unwrap();
        let near: std::collections::HashSet<usize> = near_boundary_flat(&disk, &n, 2).unwrap().into_iter().collect();
        let mut checked = 0;
        for (r, &k) in on_disk.projector.kept().iter().enumerate() {
            if near.contains(&k) {
                continue;
            }
            let lhs: Vec<_> = on_disk.matrix.row(r).collect();
            let rhs: Vec<_> = square_on_disk.row(r).collect();
            assert_eq!(lhs, rhs, "row {r}");
            checked += 1;
        }
        assert!(checked > 300);
    }

    #[test]
    fn symmetric_away_from_boundary_with_positive_diagonal() {
        let disk = Domain::disk(vec![0.5, 0.5], 0.4).unwrap();
        let n = g(&[31, 31]);
        let sys = assemble_sw(&variable_problem(disk.clone()), &n).unwrap();
        let near: std::collections::HashSet<usize> = near_boundary_flat(&disk, &n, 2).unwrap().into_iter().collect();
        let keep: Vec<usize> = sys
            .projector
            .kept()
            .iter()
            .enumerate()
            .filter(|(_, k)| !near.contains(k))
            .map(|(r, _)| r)
            .collect();
        let inner = sys.matrix.principal_submatrix(&keep).unwrap();
        assert!(inner.max_asymmetry() <= 1e-12 * inner.max_abs());
        assert!((0..sys.matrix.nrows()).all(|i| sys.matrix.get(i, i).re > 0.0));
    }

    #[test]
    fn symbol_examples() {
        let one = sw_symbol(&SWProblem::laplacian(Domain::hypercube(1)));
        for th in [-2.0, 0.3, 3.0] {
            assert!((one.eval(&[0.4], &[th]).unwrap() - re(2.0 - 2.0 * f64::cos(th))).norm() < 1e-14);
        }
        let two = sw_symbol(&SWProblem::laplacian(Domain::hypercube(2)));
        let v = two.eval(&[0.2, 0.7], &[0.5, -1.0]).unwrap();
        assert!((v.re - (4.0 - 2.0 * f64::cos(0.5) - 2.0 * f64::cos(1.0))).abs() < 1e-14);
        let mut p = SWProblem::laplacian(Domain::hypercube(2));
        p.diffusion = vec![CoefficientFn::parse("x1").unwrap(), CoefficientFn::constant(0.0)];
        let v = sw_symbol(&p).eval(&[0.3, 0.6], &[1.2, 0.4]).unwrap();
        assert!((v.re - 0.3 * (2.0 - 2.0 * f64::cos(1.2))).abs() < 1e-14);
    }

    #[test]
    fn spectrum_of_full_square_is_kronecker_sum() {
        let n = g(&[3, 3]);
        let a = assemble_sw(&SWProblem::laplacian(Domain::hypercube(2)), &n).unwrap().matrix;
        let ev = spectra::eigvals_hermitian(&a).unwrap().values;
        let mut want = Vec::new();
        for j in 1..=3 {
            for k in 1..=3 {
                let l = |i: i32| 2.0 - 2.0 * (i as f64 * std::f64::consts::PI / 4.0).cos();
                want.push(16.0 * (l(j) + l(k)));
            }
        }
        want.sort_by(f64::total_cmp);
        assert!(ev.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn skew_report_examples() {
        let sweep = [g(&[7, 7]), g(&[15, 15])];
        let sq = SWProblem::laplacian(Domain::hypercube(2));
        assert!(sw_skew_norm_report(&sq, &sweep).unwrap().iter().all(|l| l.ratio == 0.0));
        let disk = SWProblem::laplacian(Domain::disk(vec![0.5, 0.5], 0.4).unwrap());
        let sweep = [g(&[15, 15]), g(&[31, 31]), g(&[63, 63])];
        let r: Vec<f64> = sw_skew_norm_report(&disk, &sweep).unwrap().iter().map(|l| l.ratio).collect();
        assert!(r[0] > 0.0 && r[2] < r[0], "{r:?}");
        let mut conv = SWProblem::laplacian(Domain::hypercube(2));
        conv.convection = vec![CoefficientFn::constant(1.0); 2];
        let r: Vec<f64> = sw_skew_norm_report(&conv, &sweep).unwrap().iter().map(|l| l.ratio).collect();
        // O(n^-2): halving h quarters the ratio
        assert!(r[1] < r[0] / 3.0 && r[2] < r[1] / 3.0, "{r:?}");
    }

    #[test]
    fn dimension_errors() {
        let p = SWProblem::laplacian(Domain::hypercube(2));
        assert!(assemble_sw(&p, &g(&[3])).is_err());
        let tiny = SWProblem::laplacian(Domain::disk(vec![0.4, 0.4], 0.01).unwrap());
        assert!(matches!(assemble_sw(&tiny, &g(&[3, 3])), Err(Error::Empty(_))));
    }
}
