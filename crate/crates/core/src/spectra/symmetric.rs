//! Real symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL.

use crate::error::{Error, Result};

/// Reduces the symmetric matrix `a` (row-major, only the lower triangle is
/// read) to tridiagonal form. Returns `(diag, offdiag)` where `offdiag[i]`
/// couples `i-1` and `i` and `offdiag[0] = 0`.
///
/// With `vectors`, `a` is overwritten by the orthogonal `Q` whose columns
/// carry the tridiagonal basis, ready for [`tridiagonal_ql`].
pub fn tridiagonalize(a: &mut [f64], n: usize, vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let (head, rest) = a.split_at_mut(i * n);
        let row_i = &mut rest[..i];
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = row_i.iter().map(|v| v.abs()).sum();
            if scale == 0.0 {
                e[i] = row_i[l];
            } else {
                for v in row_i.iter_mut() {
                    *v /= scale;
                    h += *v * *v;
                }
                let f = row_i[l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                row_i[l] = f - g;
                let u = &*row_i;
                // p = A u / h over the leading i x i block, from the lower
                // triangle: row part plus transposed axpy part.
                p[..i].iter_mut().for_each(|v| *v = 0.0);
                for j in 0..i {
                    let row_j = &head[j * n..j * n + j + 1];
                    let uj = u[j];
                    let mut s = 0.0;
                    for k in 0..j {
                        s += row_j[k] * u[k];
                        p[k] += row_j[k] * uj;
                    }
                    p[j] += s + row_j[j] * uj;
                }
                let mut f = 0.0;
                for j in 0..i {
                    p[j] /= h;
                    f += p[j] * u[j];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    p[j] -= hh * u[j];
                }
                for j in 0..i {
                    let (uj, qj) = (u[j], p[j]);
                    let row_j = &mut head[j * n..j * n + j + 1];
                    for k in 0..=j {
                        row_j[k] -= uj * p[k] + qj * u[k];
                    }
                }
                if vectors {
                    // column i above the diagonal keeps u / h
                    for j in 0..i {
                        head[j * n + i] = u[j] / h;
                    }
                }
            }
        } else {
            e[i] = row_i[l];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    if !vectors {
        for i in 0..n {
            d[i] = a[i * n + i];
        }
        return (d, e);
    }
    d[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
    (d, e)
}

/// Eigenvalues of the symmetric tridiagonal matrix in place of `d`
/// (unsorted). `e[i]` couples `i-1` and `i`. When `z` is given (row-major
/// `n x n`), its columns are rotated along, turning the tridiagonal basis
/// into eigenvectors.
pub fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let cap = 30 * n.max(1);
    let mut total = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total += 1;
            if total > cap {
                return Err(Error::NoConvergence {
                    what: "tridiagonal QL",
                    iterations: total,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zk = &mut z[k * n..(k + 1) * n];
                        let f = zk[i + 1];
                        zk[i + 1] = s * zk[i] + c * f;
                        zk[i] = c * zk[i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Ascending eigenvalues of a real symmetric matrix; `a` is clobbered.
pub fn symmetric_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    let (mut d, mut e) = tridiagonalize(a, n, false);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Ascending eigenvalues and the matching eigenvectors as columns of the
/// returned row-major matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut z = a.to_vec();
    let (mut d, mut e) = tridiagonalize(&mut z, n, true);
    tridiagonal_ql(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = order.iter().map(|&k| d[k]).collect();
    let mut vecs = vec![0.0; n * n];
    for r in 0..n {
        for (c, &k) in order.iter().enumerate() {
            vecs[r * n + c] = z[r * n + k];
        }
    }
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    #[test]
    fn two_by_two() {
        let mut a = vec![2.0, -1.0, -1.0, 2.0];
        let ev = symmetric_eigenvalues(&mut a, 2).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigenpairs_have_small_residuals() {
        for &n in &[1usize, 2, 3, 7, 40] {
            let a = random_symmetric(n, n as u64);
            let (vals, vecs) = symmetric_eigen(&a, n).unwrap();
            let mut a2 = a.clone();
            let only = symmetric_eigenvalues(&mut a2, n).unwrap();
            for k in 0..n {
                assert!((vals[k] - only[k]).abs() < 1e-12);
                let mut res = 0.0f64;
                for i in 0..n {
                    let av: f64 = (0..n).map(|j| a[i * n + j] * vecs[j * n + k]).sum();
                    res = res.max((av - vals[k] * vecs[i * n + k]).abs());
                }
                assert!(res < 1e-12, "n={n} k={k} res={res}");
            }
            let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
            assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn already_diagonal_and_zero() {
        let mut a = vec![3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0];
        assert_eq!(symmetric_eigenvalues(&mut a, 3).unwrap(), vec![-1.0, 2.0, 3.0]);
        let mut z = vec![0.0; 16];
        assert_eq!(symmetric_eigenvalues(&mut z, 4).unwrap(), vec![0.0; 4]);
    }
}
