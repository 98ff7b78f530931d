//! Singular values through Golub-Kahan bidiagonalization, and a one-sided
//! Jacobi SVD for the pseudoinverse.

use super::symmetric::tridiagonal_ql;
use crate::error::{Error, Result};

/// Householder vector for `x`: returns `(beta, alpha)` with `x` overwritten
/// by `v` (`v[0]` implicit 1 not assumed) such that
/// `(I - beta v v^T) x = alpha e_1`.
fn householder(x: &mut [f64]) -> (f64, f64) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (0.0, 0.0);
    }
    let alpha = if x[0] > 0.0 { -norm } else { norm };
    x[0] -= alpha;
    let vv: f64 = x.iter().map(|v| v * v).sum();
    (if vv == 0.0 { 0.0 } else { 2.0 / vv }, alpha)
}

/// Upper bidiagonal form of a row-major `m x n` matrix with `m >= n`:
/// returns the diagonal (length `n`) and superdiagonal (length `n - 1`).
fn bidiagonalize(a: &mut [f64], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; m.max(n)];
    let mut w = vec![0.0; n];
    for k in 0..n {
        // left reflector on column k, rows k..m
        let len = m - k;
        for i in 0..len {
            v[i] = a[(k + i) * n + k];
        }
        let (beta, alpha) = householder(&mut v[..len]);
        diag[k] = alpha;
        if beta != 0.0 && k + 1 < n {
            let cols = k + 1..n;
            w[cols.clone()].iter_mut().for_each(|x| *x = 0.0);
            for i in 0..len {
                let row = &a[(k + i) * n..(k + i + 1) * n];
                let vi = v[i];
                for j in cols.clone() {
                    w[j] += vi * row[j];
                }
            }
            for i in 0..len {
                let row = &mut a[(k + i) * n..(k + i + 1) * n];
                let s = beta * v[i];
                for j in cols.clone() {
                    row[j] -= s * w[j];
                }
            }
        }
        if k + 2 > n {
            continue;
        }
        // right reflector on row k, columns k+1..n
        let len = n - k - 1;
        v[..len].copy_from_slice(&a[k * n + k + 1..k * n + n]);
        let (beta, alpha) = householder(&mut v[..len]);
        sup[k] = alpha;
        if beta != 0.0 {
            for i in k + 1..m {
                let row = &mut a[i * n + k + 1..i * n + n];
                let s: f64 = row.iter().zip(&v[..len]).map(|(x, y)| x * y).sum();
                let s = beta * s;
                for (x, y) in row.iter_mut().zip(&v[..len]) {
                    *x -= s * y;
                }
            }
        }
    }
    (diag, sup)
}

/// Singular values (ascending) of a real row-major `m x n` matrix.
pub fn real_singular_values(a: &[f64], m: usize, n: usize) -> Result<Vec<f64>> {
    if m == 0 || n == 0 {
        return Ok(Vec::new());
    }
    let (mut work, rows, cols) = if m >= n {
        (a.to_vec(), m, n)
    } else {
        let mut t = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                t[j * m + i] = a[i * n + j];
            }
        }
        (t, n, m)
    };
    let (diag, sup) = bidiagonalize(&mut work, rows, cols);
    // The 2k x 2k matrix [[0, B], [B^T, 0]] is, after a perfect shuffle, the
    // tridiagonal with zero diagonal and off-diagonals d1, e1, d2, e2, ...
    let k = cols;
    let mut d = vec![0.0; 2 * k];
    let mut e = vec![0.0; 2 * k];
    for i in 0..k {
        e[2 * i + 1] = diag[i];
        if i + 1 < k {
            e[2 * i + 2] = sup[i];
        }
    }
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    let mut s: Vec<f64> = d[k..].iter().map(|v| v.abs()).collect();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Thin SVD `A = U diag(s) V^T` by one-sided Jacobi, for `m >= n`.
/// Returns `(u_cols, s, v)` with `u_cols` holding the `n` left vectors as
/// rows (each of length `m`) and `v` row-major `n x n`.
fn jacobi_svd(a: &[f64], m: usize, n: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    // columns of A stored contiguously
    let mut cols = vec![0.0; n * m];
    for i in 0..m {
        for j in 0..n {
            cols[j * m + i] = a[i * n + j];
        }
    }
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }
    let tol = f64::EPSILON * m.max(n) as f64;
    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (cp, cq) = {
                    let (lo, hi) = cols.split_at(q * m);
                    (&lo[p * m..(p + 1) * m], &hi[..m])
                };
                let alpha: f64 = cp.iter().map(|x| x * x).sum();
                let beta: f64 = cq.iter().map(|x| x * x).sum();
                let gamma: f64 = cp.iter().zip(cq).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q * m);
                let cp = &mut lo[p * m..(p + 1) * m];
                let cq = &mut hi[..m];
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
                for r in 0..n {
                    let (a, b) = (v[r * n + p], v[r * n + q]);
                    v[r * n + p] = c * a - s * b;
                    v[r * n + q] = s * a + c * b;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "one-sided Jacobi SVD",
            iterations: max_sweeps,
        });
    }
    let mut s = vec![0.0; n];
    for j in 0..n {
        let c = &mut cols[j * m..(j + 1) * m];
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        s[j] = norm;
        if norm > 0.0 {
            c.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok((cols, s, v))
}

/// Moore-Penrose pseudoinverse (row-major `n x m`) of a real `m x n` matrix,
/// dropping singular values below `rcond * σ_max`.
pub fn real_pseudoinverse(a: &[f64], m: usize, n: usize, rcond: f64) -> Result<Vec<f64>> {
    if m < n {
        let mut t = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                t[j * m + i] = a[i * n + j];
            }
        }
        let pt = real_pseudoinverse(&t, n, m, rcond)?; // m x n
        let mut out = vec![0.0; n * m];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = pt[i * n + j];
            }
        }
        return Ok(out);
    }
    let mut out = vec![0.0; n * m];
    if n == 0 {
        return Ok(out);
    }
    let (u, s, v) = jacobi_svd(a, m, n)?;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cut = rcond * smax;
    for k in 0..n {
        if s[k] <= cut || s[k] == 0.0 {
            continue;
        }
        let inv = 1.0 / s[k];
        let uk = &u[k * m..(k + 1) * m];
        for i in 0..n {
            let f = v[i * n + k] * inv;
            if f == 0.0 {
                continue;
            }
            let row = &mut out[i * m..(i + 1) * m];
            for (o, x) in row.iter_mut().zip(uk) {
                *o += f * x;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let s = real_singular_values(&[1.0, 1.0, 0.0, 1.0], 2, 2).unwrap();
        let phi = (5f64.sqrt() + 1.0) / 2.0;
        assert!((s[0] - 1.0 / phi).abs() < 1e-14 && (s[1] - phi).abs() < 1e-14);
        let s = real_singular_values(&[-3.0, 0.0, 0.0, 4.0], 2, 2).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 4.0).abs() < 1e-14);
        let s = real_singular_values(&[0.0; 6], 2, 3).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        let s = real_singular_values(&[3.0, 4.0], 1, 2).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-14);
        let s = real_singular_values(&[3.0, 4.0], 2, 1).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn pseudoinverse_shapes() {
        // [1 2] -> [1;2]/5
        let p = real_pseudoinverse(&[1.0, 2.0], 1, 2, 1e-12).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15);
        let p = real_pseudoinverse(&[2.0, 0.0, 0.0, 0.0], 2, 2, 1e-12).unwrap();
        assert_eq!(p, vec![0.5, 0.0, 0.0, 0.0]);
    }
}
