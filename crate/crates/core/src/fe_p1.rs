//! P1 finite elements on the structured triangulation of `[0,1]^2`, masked
//! by a domain.
//!
//! Grid nodes are `p = (i, j) h` with `h = 1/(n+1)`. Each cell is cut by
//! its diagonal from `(i+1, j)` to `(i, j+1)`, so the six triangles around
//! `p` have the neighbour offsets `(1,0), (0,1), (-1,1), (-1,0), (0,-1),
//! (1,-1)` in this cyclic order.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::glt::{CoefficientFn, Stencil};
use crate::matrix::SparseMatrix;
use crate::multiindex::{GridSize, MultiIndex};
use crate::symbols::SeparableSymbol;

pub type CoefficientMatrix = [[CoefficientFn; 2]; 2];

#[derive(Clone, Debug)]
pub struct P1Problem {
    pub domain: Domain,
    pub diffusion: CoefficientMatrix,
    pub convection: [CoefficientFn; 2],
    pub reaction: CoefficientFn,
}

impl P1Problem {
    pub fn new(domain: Domain, diffusion: CoefficientMatrix) -> P1Problem {
        P1Problem {
            domain,
            diffusion,
            convection: [CoefficientFn::constant(0.0), CoefficientFn::constant(0.0)],
            reaction: CoefficientFn::constant(0.0),
        }
    }

    pub fn laplacian(domain: Domain) -> P1Problem {
        P1Problem::new(domain, identity())
    }

    /// Every coefficient multiplied by the indicator of `domain`.
    pub fn zero_extended(&self, square: Domain) -> P1Problem {
        let chi = CoefficientFn::indicator(&self.domain);
        let ext = |f: &CoefficientFn| f.times(&chi);
        P1Problem {
            domain: square,
            diffusion: [
                [ext(&self.diffusion[0][0]), ext(&self.diffusion[0][1])],
                [ext(&self.diffusion[1][0]), ext(&self.diffusion[1][1])],
            ],
            convection: [ext(&self.convection[0]), ext(&self.convection[1])],
            reaction: ext(&self.reaction),
        }
    }
}

pub fn identity() -> CoefficientMatrix {
    [
        [CoefficientFn::constant(1.0), CoefficientFn::constant(0.0)],
        [CoefficientFn::constant(0.0), CoefficientFn::constant(1.0)],
    ]
}

type Vertex = (i64, i64);

/// Triangles of cell `(ci, cj)`, `0 <= ci, cj <= n`: lower then upper.
fn cell_triangles(ci: i64, cj: i64) -> [[Vertex; 3]; 2] {
    [
        [(ci, cj), (ci + 1, cj), (ci, cj + 1)],
        [(ci + 1, cj), (ci + 1, cj + 1), (ci, cj + 1)],
    ]
}

/// The six triangles around node `p`, as (cell, lower/upper).
fn star(p: Vertex) -> [(Vertex, usize); 6] {
    let (i, j) = p;
    [
        ((i, j), 0),
        ((i - 1, j), 1),
        ((i - 1, j), 0),
        ((i - 1, j - 1), 1),
        ((i, j - 1), 0),
        ((i, j - 1), 1),
    ]
}

fn coords(v: Vertex, h: f64) -> [f64; 2] {
    [v.0 as f64 * h, v.1 as f64 * h]
}

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Vertices, edge midpoints and centroid in the closed domain; with
/// `refine`, the same test on the four halved sub-triangles.
fn triangle_inside(domain: &Domain, t: [[f64; 2]; 3], refine: bool) -> bool {
    let [a, b, c] = t;
    let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
    let probes = [a, b, c, mid(a, b), mid(b, c), mid(c, a), centroid];
    if !probes.iter().all(|p| domain.in_closure(p)) {
        return false;
    }
    if !refine {
        return true;
    }
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        .into_iter()
        .all(|s| triangle_inside(domain, s, false))
}

fn grid(n: usize) -> Result<GridSize> {
    if n == 0 {
        return Err(Error::InvalidGrid("n must be at least 1".into()));
    }
    GridSize::cubic(2, n)
}

fn check_domain(domain: &Domain) -> Result<()> {
    if domain.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: domain.dim(),
        });
    }
    Ok(())
}

fn flat(v: Vertex, n: usize) -> usize {
    (v.0 as usize - 1) * n + (v.1 as usize - 1)
}

/// 0-based flat indices of the nodes `p` with `T_p ⊆ Ω`, ascending.
pub fn masked_flat(domain: &Domain, n: usize, refine: bool) -> Result<Vec<usize>> {
    check_domain(domain)?;
    grid(n)?;
    let h = 1.0 / (n + 1) as f64;
    let cells = n + 1;
    let inside: Vec<[bool; 2]> = (0..cells * cells)
        .into_par_iter()
        .map(|k| {
            let (ci, cj) = ((k / cells) as i64, (k % cells) as i64);
            cell_triangles(ci, cj).map(|t| triangle_inside(domain, t.map(|v| coords(v, h)), refine))
        })
        .collect();
    let ok = |c: Vertex, which: usize| inside[c.0 as usize * cells + c.1 as usize][which];
    let m = n as i64;
    let mut out = Vec::new();
    for i in 1..=m {
        for j in 1..=m {
            if star((i, j)).iter().all(|&(c, w)| ok(c, w)) {
                out.push(flat((i, j), n));
            }
        }
    }
    Ok(out)
}

/// `Ξ_n(Ω)` in lexicographic order, as 1-based grid indices.
pub fn masked_nodes(domain: &Domain, n: usize) -> Result<Vec<MultiIndex>> {
    Ok(masked_flat(domain, n, false)?
        .into_iter()
        .map(|k| MultiIndex::new(vec![(k / n) as i64 + 1, (k % n) as i64 + 1]))
        .collect())
}

#[derive(Clone, Debug)]
pub struct P1System {
    pub matrix: SparseMatrix,
    /// 0-based flat grid index of each row, ascending.
    pub nodes: Vec<usize>,
    pub grid: GridSize,
}

/// Gradients of the barycentric coordinates and the area.
fn element_geometry(t: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = t;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let grads = [
        [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
        [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
        [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
    ];
    (grads, 0.5 * det.abs())
}

/// Local matrix `m[q][p] = ∫_T ∇λ_p^T A ∇λ_q + ∇λ_p^T b λ_q + c λ_p λ_q`
/// by the edge-midpoint rule.
fn element_matrix(prob: &P1Problem, t: [[f64; 2]; 3]) -> Result<[[C64; 3]; 3]> {
    let (g, area) = element_geometry(t);
    let [a, b, c] = t;
    // midpoint of edge (k, k+1) and the barycentric values there
    let quad = [
        (mid(a, b), [0.5, 0.5, 0.0]),
        (mid(b, c), [0.0, 0.5, 0.5]),
        (mid(c, a), [0.5, 0.0, 0.5]),
    ];
    let mut m = [[C64::new(0.0, 0.0); 3]; 3];
    let w = area / 3.0;
    for (x, lam) in quad {
        let mut am = [[C64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                am[r][s] = prob.diffusion[r][s].eval(&x)?;
            }
        }
        let bv = [prob.convection[0].eval(&x)?, prob.convection[1].eval(&x)?];
        let cv = prob.reaction.eval(&x)?;
        for q in 0..3 {
            for p in 0..3 {
                let mut v = C64::new(0.0, 0.0);
                for r in 0..2 {
                    for s in 0..2 {
                        v += g[p][r] * am[r][s] * g[q][s];
                    }
                    v += g[p][r] * bv[r] * lam[q];
                }
                v += cv * lam[p] * lam[q];
                m[q][p] += w * v;
            }
        }
    }
    Ok(m)
}

pub fn assemble_p1(prob: &P1Problem, n: usize) -> Result<P1System> {
    let nodes = masked_flat(&prob.domain, n, false)?;
    assemble_on_nodes(prob, n, nodes)
}

/// Stiffness matrix restricted to the given nodes (0-based flat indices,
/// ascending), integrating over every triangle both nodes share.
pub fn assemble_on_nodes(prob: &P1Problem, n: usize, nodes: Vec<usize>) -> Result<P1System> {
    check_domain(&prob.domain)?;
    let grid = grid(n)?;
    if nodes.is_empty() {
        return Err(Error::Empty("P1 nodes with their star inside the domain"));
    }
    let mut row_of = vec![usize::MAX; n * n];
    for (r, &k) in nodes.iter().enumerate() {
        row_of[k] = r;
    }
    let h = 1.0 / (n + 1) as f64;
    let m = n as i64;
    let row = |v: Vertex| {
        if v.0 < 1 || v.1 < 1 || v.0 > m || v.1 > m {
            None
        } else {
            Some(row_of[flat(v, n)]).filter(|&r| r != usize::MAX)
        }
    };
    let cells = n + 1;
    let triplets: Vec<Vec<(usize, usize, C64)>> = (0..cells * cells)
        .into_par_iter()
        .map(|k| {
            let (ci, cj) = ((k / cells) as i64, (k % cells) as i64);
            let mut out = Vec::new();
            for t in cell_triangles(ci, cj) {
                let rows = t.map(row);
                if rows.iter().all(Option::is_none) {
                    continue;
                }
                let local = element_matrix(prob, t.map(|v| coords(v, h)))?;
                for q in 0..3 {
                    for p in 0..3 {
                        if let (Some(rq), Some(rp)) = (rows[q], rows[p]) {
                            out.push((rq, rp, local[q][p]));
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let d = nodes.len();
    let matrix = SparseMatrix::from_triplets(d, d, triplets.into_iter().flatten().collect())?;
    Ok(P1System { matrix, nodes, grid })
}

const B: [[f64; 2]; 3] = [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];

/// `B_k A B_l^T` as a coefficient function.
fn bab(a: &CoefficientMatrix, k: usize, l: usize) -> Vec<(C64, CoefficientFn)> {
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            out.push((C64::new(B[k][i] * B[l][j], 0.0), a[i][j].clone()));
        }
    }
    out
}

fn combo(parts: &[(f64, Vec<(C64, CoefficientFn)>)]) -> CoefficientFn {
    CoefficientFn::linear_combination(
        parts
            .iter()
            .flat_map(|(w, ts)| ts.iter().map(move |(c, f)| (c * *w, f.clone())))
            .collect(),
    )
}

/// `Σ r_{a,b}(x) e^{-i(a θ_1 + b θ_2)}` over the seven neighbour offsets.
pub fn fe_symbol_square(a: &CoefficientMatrix) -> SeparableSymbol {
    let r00 = combo(&[(1.0, bab(a, 0, 0)), (1.0, bab(a, 1, 1)), (1.0, bab(a, 2, 2))]);
    let r0 = combo(&[(-0.5, bab(a, 2, 0)), (-0.5, bab(a, 0, 2))]);
    let r1 = combo(&[(-0.5, bab(a, 0, 1)), (-0.5, bab(a, 1, 0))]);
    let rd = combo(&[(0.5, bab(a, 1, 2)), (0.5, bab(a, 2, 1))]);
    let one = C64::new(1.0, 0.0);
    // e^{-i(aθ1 + bθ2)} is stencil offset (-a, -b)
    let at = |o: [i64; 2]| {
        let mut s = Stencil::new(2);
        s.add(&o, one).expect("two-dimensional offset");
        s
    };
    let terms = vec![
        (r00, at([0, 0])),
        (r0.clone(), at([0, -1])),
        (r0, at([0, 1])),
        (r1.clone(), at([-1, 0])),
        (r1, at([1, 0])),
        (rd.clone(), at([-1, 1])),
        (rd, at([1, -1])),
    ];
    SeparableSymbol::from_terms(2, terms).expect("two-dimensional stencils")
}

/// The square symbol of the zero-extended diffusion, restricted to `Ω`.
pub fn fe_symbol_subdomain(prob: &P1Problem) -> SeparableSymbol {
    let ext = prob.zero_extended(Domain::hypercube(2));
    fe_symbol_square(&ext.diffusion).restricted_to(&prob.domain)
}

/// A differentiable map `φ : D -> Ω` with its Jacobian, as expressions.
#[derive(Clone, Debug)]
pub struct Mapping {
    pub phi: [CoefficientFn; 2],
    pub jacobian: CoefficientMatrix,
}

impl Mapping {
    pub fn identity() -> Mapping {
        Mapping {
            phi: [CoefficientFn::parse("x1").unwrap(), CoefficientFn::parse("x2").unwrap()],
            jacobian: identity(),
        }
    }

    /// `φ(x) = M x + t`.
    pub fn affine(m: [[f64; 2]; 2], t: [f64; 2]) -> Mapping {
        let lin = |r: usize| {
            CoefficientFn::native(&format!("affine{r}"), move |x: &[f64]| {
                m[r][0] * x[0] + m[r][1] * x[1] + t[r]
            })
        };
        let c = CoefficientFn::constant;
        Mapping {
            phi: [lin(0), lin(1)],
            jacobian: [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]],
        }
    }

    fn at(&self, x: &[f64]) -> Result<([f64; 2], [[f64; 2]; 2], f64)> {
        let y = [self.phi[0].eval_real(x)?, self.phi[1].eval_real(x)?];
        let mut j = [[0.0; 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                j[r][s] = self.jacobian[r][s].eval_real(x)?;
            }
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let scale = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if det == 0.0 || det.abs() <= 1e-14 * scale * scale || !det.is_finite() {
            return Err(Error::SingularJacobian { point: x.to_vec() });
        }
        let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        Ok((y, inv, det))
    }
}

#[derive(Clone, Debug)]
pub struct MappedCoefficients {
    pub diffusion: CoefficientMatrix,
    pub convection: [CoefficientFn; 2],
    pub reaction: CoefficientFn,
}

/// `Ã = J^-1 A(φ) J^-T |det J|`, `b̃ = J^-1 b(φ) |det J|`,
/// `c̃ = c(φ) |det J|`, evaluated pointwise on `D`.
pub fn map_coefficients(
    a: &CoefficientMatrix,
    b: &[CoefficientFn; 2],
    c: &CoefficientFn,
    map: &Mapping,
) -> MappedCoefficients {
    let diff = |r: usize, s: usize| {
        let (a, map) = (a.clone(), map.clone());
        CoefficientFn::native_fallible(&format!("mapped_a{}{}", r + 1, s + 1), move |x| {
            let (y, inv, det) = map.at(x)?;
            let mut v = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    v += inv[r][k] * a[k][l].eval(&y)? * inv[s][l];
                }
            }
            Ok(v * det.abs())
        })
    };
    let conv = |r: usize| {
        let (b, map) = (b.clone(), map.clone());
        CoefficientFn::native_fallible(&format!("mapped_b{}", r + 1), move |x| {
            let (y, inv, det) = map.at(x)?;
            Ok((inv[r][0] * b[0].eval(&y)? + inv[r][1] * b[1].eval(&y)?) * det.abs())
        })
    };
    let react = {
        let (c, map) = (c.clone(), map.clone());
        CoefficientFn::native_fallible("mapped_c", move |x| {
            let (y, _, det) = map.at(x)?;
            Ok(c.eval(&y)? * det.abs())
        })
    };
    MappedCoefficients {
        diffusion: [[diff(0, 0), diff(0, 1)], [diff(1, 0), diff(1, 1)]],
        convection: [conv(0), conv(1)],
        reaction: react,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixView;
    use crate::symbols::{verify_lambda, VerifyOptions};

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn cf(s: &str) -> CoefficientFn {
        CoefficientFn::parse(s).unwrap()
    }

    fn constant_matrix(m: [[f64; 2]; 2]) -> CoefficientMatrix {
        let c = CoefficientFn::constant;
        [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]]
    }

    #[test]
    fn masked_node_examples() {
        assert_eq!(masked_nodes(&Domain::hypercube(2), 3).unwrap().len(), 9);
        let tri = Domain::triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let nodes = masked_nodes(&tri, 3).unwrap();
        let want: Vec<MultiIndex> = [[1, 1], [1, 2], [2, 1]].iter().map(|v| MultiIndex::new(v.to_vec())).collect();
        assert_eq!(nodes, want);
        let small = Domain::disk(vec![0.5, 0.5], 0.15).unwrap();
        assert!(masked_nodes(&small, 3).unwrap().is_empty());
        assert!(assemble_p1(&P1Problem::laplacian(small), 3).is_err());
    }

    #[test]
    fn refinement_only_removes_nodes() {
        let l = Domain::l_shape();
        for n in [7, 15] {
            let coarse = masked_flat(&l, n, false).unwrap();
            let fine = masked_flat(&l, n, true).unwrap();
            assert!(fine.iter().all(|k| coarse.contains(k)));
        }
    }

    #[test]
    fn hat_function_table() {
        // gradient of ψ_p on each star triangle, in units of 1/h: -B1, -B3,
        // B2, B1, B3, -B2 going counterclockwise from the (1,0)-(0,1) one
        let want = [[-1.0, -1.0], [0.0, -1.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [-1.0, 0.0]];
        let h = 0.25;
        let p = (2, 2);
        for (k, (cell, which)) in star(p).iter().enumerate() {
            let t = cell_triangles(cell.0, cell.1)[*which];
            let at = t.iter().position(|&v| v == p).expect("p is a vertex");
            let (g, area) = element_geometry(t.map(|v| coords(v, h)));
            assert!((area - h * h / 2.0).abs() < 1e-15);
            for r in 0..2 {
                assert!((g[at][r] * h - want[k][r]).abs() < 1e-12, "triangle {k}");
            }
        }
    }

    #[test]
    fn identity_rows_are_five_point() {
        let n = 7;
        let sys = assemble_p1(&P1Problem::laplacian(Domain::hypercube(2)), n).unwrap();
        assert_eq!(sys.nodes.len(), 49);
        let a = &sys.matrix;
        let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
        for i in 2..n {
            for j in 2..n {
                let r = idx(i, j);
                assert!((a.get(r, r).re - 4.0).abs() < 1e-12);
                for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let c = idx((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    assert!((a.get(r, c).re + 1.0).abs() < 1e-12);
                }
                for (di, dj) in [(1i64, -1i64), (-1, 1)] {
                    let c = idx((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    assert!(a.get(r, c).norm() < 1e-12);
                }
                assert_eq!(a.row(r).count(), 5);
            }
        }
    }

    #[test]
    fn mass_and_anisotropic_diagonals() {
        let n = 7;
        let h = 1.0 / 8.0;
        let mut p = P1Problem::new(Domain::hypercube(2), constant_matrix([[0.0, 0.0], [0.0, 0.0]]));
        p.reaction = CoefficientFn::constant(1.0);
        let m = assemble_p1(&p, n).unwrap().matrix;
        assert!((m.get(24, 24).re - h * h / 2.0).abs() < 1e-15);
        let (al, be) = (2.0, 0.5);
        let p = P1Problem::new(Domain::hypercube(2), constant_matrix([[al, 0.0], [0.0, be]]));
        let m = assemble_p1(&p, n).unwrap().matrix;
        assert!((m.get(24, 24).re - (2.0 * al + 2.0 * be)).abs() < 1e-12);
    }

    #[test]
    fn matrix_rows_match_symbol_coefficients() {
        let a = constant_matrix([[1.3, 0.4], [0.4, 0.9]]);
        let n = 9;
        let sys = assemble_p1(&P1Problem::new(Domain::hypercube(2), a.clone()), n).unwrap();
        let sym = fe_symbol_square(&a);
        let terms = sym.terms().unwrap();
        // row p, column p + o carries the Toeplitz coefficient f_{-o}
        let r = 4 * n + 4;
        for (coef, st) in terms {
            for (o, _) in st.iter() {
                let c = ((4 - o[0]) as usize) * n + (4 - o[1]) as usize;
                let v = coef.eval(&[0.5, 0.5]).unwrap();
                assert!((sys.matrix.get(r, c) - v).norm() < 1e-12, "offset {o:?}");
            }
        }
    }

    #[test]
    fn symbol_examples() {
        let th = [0.7f64, -1.9];
        let (c1, c2, c12) = (th[0].cos(), th[1].cos(), (th[0] - th[1]).cos());
        let k = fe_symbol_square(&identity()).eval(&[0.3, 0.3], &th).unwrap();
        assert!((k - re(4.0 - 2.0 * c1 - 2.0 * c2)).norm() < 1e-14);
        let k = fe_symbol_square(&constant_matrix([[0.0; 2]; 2])).eval(&[0.3, 0.3], &th).unwrap();
        assert_eq!(k, re(0.0));
        let k = fe_symbol_square(&constant_matrix([[1.0; 2]; 2])).eval(&[0.3, 0.3], &th).unwrap();
        assert!((k - re(6.0 - 4.0 * c1 - 4.0 * c2 + 2.0 * c12)).norm() < 1e-14);
        let disk = Domain::disk(vec![0.5, 0.5], 0.4).unwrap();
        let s = fe_symbol_subdomain(&P1Problem::laplacian(disk.clone()));
        assert!((s.eval(&[0.5, 0.6], &th).unwrap() - re(4.0 - 2.0 * c1 - 2.0 * c2)).norm() < 1e-14);
        assert!(s.eval(&[0.05, 0.05], &th).is_err());
        let x1 = cf("x1");
        let zero = CoefficientFn::constant(0.0);
        let p = P1Problem::new(disk, [[x1.clone(), zero.clone()], [zero, x1]]);
        let v = fe_symbol_subdomain(&p).eval(&[0.45, 0.6], &th).unwrap();
        assert!((v - re(0.45 * (4.0 - 2.0 * c1 - 2.0 * c2))).norm() < 1e-14);
        let sq = fe_symbol_subdomain(&P1Problem::laplacian(Domain::hypercube(2)));
        assert!((sq.eval(&[0.1, 0.9], &th).unwrap() - re(4.0 - 2.0 * c1 - 2.0 * c2)).norm() < 1e-14);
    }

    #[test]
    fn hermitian_assembly() {
        let a = [[cf("1 + x1"), cf("0.3*x2")], [cf("0.3*x2"), cf("2 + x1*x2")]];
        let mut p = P1Problem::new(Domain::disk(vec![0.5, 0.5], 0.45).unwrap(), a);
        p.reaction = cf("x1");
        let m = assemble_p1(&p, 15).unwrap().matrix;
        assert!(m.max_asymmetry() <= 1e-12);
    }

    #[test]
    fn square_distribution_improves_with_n() {
        let sweep: Vec<GridSize> = [15, 31, 63].iter().map(|&m| GridSize::cubic(2, m).unwrap()).collect();
        let seq = |n: &GridSize| Ok(assemble_p1(&P1Problem::laplacian(Domain::hypercube(2)), n.axis(0))?.matrix);
        let sym = fe_symbol_square(&identity());
        let r = verify_lambda(&seq, &sym, &sweep, false, &VerifyOptions::default()).unwrap();
        assert!(r.trend.strictly_decreasing, "{:?}", r.distances());
    }

    #[test]
    fn mask_difference_shrinks_on_disk() {
        let disk = Domain::disk(vec![0.5, 0.5], 0.4).unwrap();
        let mut last = f64::INFINITY;
        for n in [15usize, 31, 63] {
            let g = GridSize::cubic(2, n).unwrap();
            let interior = crate::domain::mask(&disk, &g, false).unwrap();
            let xi = masked_flat(&disk, n, false).unwrap();
            let missing = interior.count() - xi.iter().filter(|&&k| interior.get(k)).count();
            let ratio = missing as f64 / g.total() as f64;
            assert!(ratio < last, "n={n}: {ratio}");
            last = ratio;
        }
    }

    #[test]
    fn map_coefficient_examples() {
        let a = [[cf("1 + x1"), cf("x2")], [cf("x2"), cf("2")]];
        let b = [cf("x1"), cf("-1")];
        let c = cf("x1*x2");
        let id = map_coefficients(&a, &b, &c, &Mapping::identity());
        let x = [0.3, 0.8];
        for r in 0..2 {
            for s in 0..2 {
                assert_eq!(id.diffusion[r][s].eval(&x).unwrap(), a[r][s].eval(&x).unwrap());
            }
            assert_eq!(id.convection[r].eval(&x).unwrap(), b[r].eval(&x).unwrap());
        }
        assert_eq!(id.reaction.eval(&x).unwrap(), c.eval(&x).unwrap());
        let zero = [CoefficientFn::constant(0.0), CoefficientFn::constant(0.0)];
        let scaled = map_coefficients(&identity(), &zero, &CoefficientFn::constant(1.0), &Mapping::affine([[2.0, 0.0], [0.0, 1.0]], [0.0, 0.0]));
        let want = [[0.5, 0.0], [0.0, 2.0]];
        for r in 0..2 {
            for s in 0..2 {
                assert!((scaled.diffusion[r][s].eval(&x).unwrap() - re(want[r][s])).norm() < 1e-15);
            }
        }
        let al: f64 = 0.7;
        let rot = Mapping::affine([[al.cos(), -al.sin()], [al.sin(), al.cos()]], [0.1, 0.2]);
        let r = map_coefficients(&identity(), &zero, &CoefficientFn::constant(1.0), &rot);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r.diffusion[i][j].eval(&x).unwrap() - re(want)).norm() < 1e-14);
            }
        }
        let flat = map_coefficients(&identity(), &zero, &CoefficientFn::constant(1.0), &Mapping::affine([[1.0, 2.0], [2.0, 4.0]], [0.0, 0.0]));
        match flat.reaction.eval(&x) {
            Err(Error::SingularJacobian { point }) => assert_eq!(point, x.to_vec()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mapped_assembly_matches_pulled_back_form() {
        let m = [[0.8, 0.15], [-0.1, 0.7]];
        let t = [0.05, 0.2];
        let map = Mapping::affine(m, t);
        let a = [[cf("1 + x1"), cf("0.2")], [cf("0.2"), cf("2 + x2")]];
        let b = [cf("x2"), cf("1")];
        let c = cf("x1");
        let mc = map_coefficients(&a, &b, &c, &map);
        let n = 7;
        let prob = P1Problem {
            domain: Domain::hypercube(2),
            diffusion: mc.diffusion,
            convection: mc.convection,
            reaction: mc.reaction,
        };
        let sys = assemble_p1(&prob, n).unwrap();
        // direct quadrature of the bilinear form on the image triangles
        let h = 1.0 / (n + 1) as f64;
        let phi = |x: [f64; 2]| [m[0][0] * x[0] + m[0][1] * x[1] + t[0], m[1][0] * x[0] + m[1][1] * x[1] + t[1]];
        let mut oracle = vec![vec![C64::new(0.0, 0.0); n * n]; n * n];
        for ci in 0..=n as i64 {
            for cj in 0..=n as i64 {
                for tri in cell_triangles(ci, cj) {
                    let y = tri.map(|v| phi(coords(v, h)));
                    let (g, area) = element_geometry(y);
                    for (k, l) in [(0, 1), (1, 2), (2, 0)] {
                        let q = mid(y[k], y[l]);
                        let mut lam = [0.0; 3];
                        lam[k] = 0.5;
                        lam[l] = 0.5;
                        for (qi, vq) in tri.iter().enumerate() {
                            for (pi, vp) in tri.iter().enumerate() {
                                let inside = |v: &Vertex| v.0 >= 1 && v.1 >= 1 && v.0 <= n as i64 && v.1 <= n as i64;
                                if !inside(vq) || !inside(vp) {
                                    continue;
                                }
                                let mut v = C64::new(0.0, 0.0);
                                for r in 0..2 {
                                    for s in 0..2 {
                                        v += g[pi][r] * a[r][s].eval(&q).unwrap() * g[qi][s];
                                    }
                                    v += g[pi][r] * b[r].eval(&q).unwrap() * lam[qi];
                                }
                                v += c.eval(&q).unwrap() * lam[pi] * lam[qi];
                                oracle[flat(*vq, n)][flat(*vp, n)] += v * area / 3.0;
                            }
                        }
                    }
                }
            }
        }
        for (r, row) in oracle.iter().enumerate() {
            for (s, v) in row.iter().enumerate() {
                assert!((sys.matrix.get(r, s) - v).norm() <= 1e-10, "({r},{s})");
            }
        }
    }
}
