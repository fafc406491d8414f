//! Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square matrix stored 1-based so the indices follow the classical
/// formulation of the algorithm.
pub(crate) struct Hessenberg {
    n: usize,
    data: Vec<f64>,
}

impl Hessenberg {
    pub(crate) fn zeros(n: usize) -> Self {
        Hessenberg {
            n,
            data: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    /// 0-based setter.
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i + 1, j + 1);
        self.data[k] = v;
    }
}

pub(crate) struct QrOutcome {
    pub eigenvalues: Vec<Complex64>,
    pub iterations: usize,
}

/// All eigenvalues of the Hessenberg matrix `h`; entries below the
/// subdiagonal are ignored. `abs_tol` deflates subdiagonals below it.
pub(crate) fn hqr(mut h: Hessenberg, abs_tol: f64) -> Result<QrOutcome> {
    let n = h.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let cap = 30 * n.max(1);
    let mut total = 0usize;

    macro_rules! a {
        ($i:expr, $j:expr) => {
            h.data[($i) * (n + 1) + ($j)]
        };
    }

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a!(i, j).abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a!(l - 1, l - 1).abs() + a!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                let sub = a!(l, l - 1).abs();
                if sub + s == s || sub <= abs_tol {
                    a!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a!(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a!(nn - 1, nn - 1);
            let mut w = a!(nn, nn - 1) * a!(nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            if total >= cap {
                return Err(Error::Convergence {
                    iterations: total,
                    deflated: n - nn,
                    size: n,
                });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a!(i, i) -= x;
                }
                let s = a!(nn, nn - 1).abs() + a!(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            let (mut p, mut q, mut r, mut z);
            let mut m = nn - 2;
            loop {
                z = a!(m, m);
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / a!(m + 1, m) + a!(m, m + 1);
                q = a!(m + 1, m + 1) - z - r - s0;
                r = a!(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a!(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (a!(m - 1, m - 1).abs() + z.abs() + a!(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a!(i, i - 2) = 0.0;
                if i != m + 2 {
                    a!(i, i - 3) = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a!(k, k - 1);
                    q = a!(k + 1, k - 1);
                    r = if k != nn - 1 { a!(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a!(k, k - 1) = -a!(k, k - 1);
                        }
                    } else {
                        a!(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = a!(k, j) + q * a!(k + 1, j);
                        if k != nn - 1 {
                            p += r * a!(k + 2, j);
                            a!(k + 2, j) -= p * z;
                        }
                        a!(k + 1, j) -= p * y;
                        a!(k, j) -= p * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        p = x * a!(i, k) + y * a!(i, k + 1);
                        if k != nn - 1 {
                            p += z * a!(i, k + 2);
                            a!(i, k + 2) -= p * r;
                        }
                        a!(i, k + 1) -= p * q;
                        a!(i, k) -= p;
                    }
                }
                k += 1;
            }
            if l + 1 >= nn {
                break;
            }
        }
    }

    let eigenvalues = (1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect();
    Ok(QrOutcome {
        eigenvalues,
        iterations: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn rotation_block() {
        let mut h = Hessenberg::zeros(2);
        h.set(0, 1, 1.0);
        h.set(1, 0, -1.0);
        let ev = sorted(hqr(h, 0.0).unwrap().eigenvalues);
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn companion_of_known_polynomial() {
        // roots 1, 2, 5, 3 +- i
        let coeffs = [1.0f64, -14.0, 75.0, -192.0, 230.0, -100.0];
        let n = 5;
        let mut h = Hessenberg::zeros(n);
        for j in 0..n {
            h.set(0, j, -coeffs[j + 1] / coeffs[0]);
        }
        for i in 1..n {
            h.set(i, i - 1, 1.0);
        }
        let ev = sorted(hqr(h, 0.0).unwrap().eigenvalues);
        let want = sorted(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(5.0, 0.0),
            Complex64::new(3.0, -1.0),
            Complex64::new(3.0, 1.0),
        ]);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }
}
