//! Eigenvalues of general square matrices: Householder reduction to upper
//! Hessenberg form, then single-shift complex QR with deflation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

fn hessenberg(h: &mut [C64], n: usize) {
    let mut v = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        for i in 0..len {
            v[i] = h[(k + 1 + i) * n + k];
        }
        let norm = v[..len].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            v[0] / v[0].norm()
        };
        let alpha = -phase * norm;
        v[0] -= alpha;
        let vv: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum();
        if vv == 0.0 {
            continue;
        }
        let beta = 2.0 / vv;
        // H <- (I - beta v v^H) H on rows k+1..n
        for j in k..n {
            let mut s = ZERO;
            for i in 0..len {
                s += v[i].conj() * h[(k + 1 + i) * n + j];
            }
            let s = s * beta;
            for i in 0..len {
                h[(k + 1 + i) * n + j] -= v[i] * s;
            }
        }
        // H <- H (I - beta v v^H) on columns k+1..n
        for r in 0..n {
            let row = &mut h[r * n + k + 1..r * n + n];
            let s: C64 = row.iter().zip(&v[..len]).map(|(x, y)| x * y).sum();
            let s = s * beta;
            for (x, y) in row.iter_mut().zip(&v[..len]) {
                *x -= s * y.conj();
            }
        }
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr / 4.0 - det).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = tr / 2.0 - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex eigenvalues, in no particular order.
pub fn eigenvalues(a: &[C64], n: usize) -> Result<Vec<C64>> {
    let mut h = a.to_vec();
    hessenberg(&mut h, n);
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let cap = 50 * n;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    let mut rot = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig[0] = h[0];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let sub = h[l * n + l - 1].norm();
            let scale = h[(l - 1) * n + l - 1].norm() + h[l * n + l].norm();
            if sub <= f64::EPSILON * scale || sub < f64::MIN_POSITIVE {
                h[l * n + l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi * n + hi];
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > cap {
            return Err(Error::NoConvergence {
                what: "Hessenberg QR",
                iterations: total,
            });
        }
        let mu = if its % 11 == 10 {
            // exceptional shift to break cycles
            h[hi * n + hi] + C64::new(h[hi * n + hi - 1].norm(), 0.0) * 0.75
        } else {
            wilkinson(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };
        for k in l..=hi {
            h[k * n + k] -= mu;
        }
        // left Givens rotations: H = Q R on the active block
        rot.clear();
        for k in l..hi {
            let x = h[k * n + k];
            let y = h[(k + 1) * n + k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (C64::new(1.0, 0.0), ZERO)
            } else {
                (x / r, y / r)
            };
            // G = [[conj c, conj s], [-s, c]] maps (x, y) to (r, 0)
            for j in k..=hi {
                let (a, b) = (h[k * n + j], h[(k + 1) * n + j]);
                h[k * n + j] = c.conj() * a + s.conj() * b;
                h[(k + 1) * n + j] = -s * a + c * b;
            }
            rot.push((c, s));
        }
        // H = R Q
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            for i in l..=(k + 1).min(hi) {
                let (a, b) = (h[i * n + k], h[i * n + k + 1]);
                h[i * n + k] = a * c + b * s;
                h[i * n + k + 1] = -a * s.conj() + b * c.conj();
            }
        }
        for k in l..=hi {
            h[k * n + k] += mu;
        }
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let ev = sorted(eigenvalues(&[re(0.0), re(1.0), re(-1.0), re(0.0)], 2).unwrap());
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn triangular_spectrum_is_diagonal() {
        let n = 6;
        let mut a = vec![ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                a[i * n + j] = re(((i * 7 + j * 3) % 5) as f64 - 2.0);
            }
            a[i * n + i] = re(i as f64 + 1.0);
        }
        let ev = sorted(eigenvalues(&a, n).unwrap());
        for (k, v) in ev.iter().enumerate() {
            assert!((v - re(k as f64 + 1.0)).norm() < 1e-10, "{v}");
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = [
            re(6.0), re(-11.0), re(6.0),
            re(1.0), re(0.0), re(0.0),
            re(0.0), re(1.0), re(0.0),
        ];
        let ev = sorted(eigenvalues(&a, 3).unwrap());
        for (k, v) in ev.iter().enumerate() {
            assert!((v - re(k as f64 + 1.0)).norm() < 1e-10);
        }
    }
}
