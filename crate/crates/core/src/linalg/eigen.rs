//! Eigenvalues of small real nonsymmetric matrices.
//!
//! Balancing, reduction to upper Hessenberg form by stabilized elementary
//! similarity transforms, then the Francis implicit double-shift QR iteration.
//! Iteration matrices of the splitting analysis are strongly graded (nearly
//! nilpotent for large `x`), so balancing is not optional here.

use alloc::vec::Vec;

use super::Matrix;
use crate::float::sqrt;
use crate::{Error, Result};

/// Largest order accepted by [`eigenvalues_small`].
pub const MAX_ORDER: usize = 16;

/// Minimal complex number for eigenvalue output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    /// Real part.
    pub re: f64,
    /// Imaginary part.
    pub im: f64,
}

impl Complex {
    /// Modulus.
    pub fn abs(self) -> f64 {
        crate::float::hypot(self.re, self.im)
    }
}

/// All eigenvalues of a square matrix of order at most 16.
///
/// Complex eigenvalues come in exactly conjugate pairs. No ordering is
/// guaranteed.
pub fn eigenvalues_small(a: &Matrix) -> Result<Vec<Complex>> {
    if !a.is_square() {
        return Err(Error::Dimension {
            what: "eigenvalues",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    if n > MAX_ORDER {
        return Err(Error::Config(alloc::format!(
            "eigenvalues_small supports order ≤ {MAX_ORDER}, got {n}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::Domain("non-finite matrix entry"));
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(&mut h)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues_small(a)?
        .into_iter()
        .fold(0.0, |r, z| r.max(z.abs())))
}

fn balance(a: &mut Matrix) {
    const RADIX: f64 = 2.0;
    const RADIX2: f64 = RADIX * RADIX;
    let n = a.rows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX2;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX2;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

fn hessenberg(a: &mut Matrix) {
    let n = a.rows();
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0_f64;
        let mut piv = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                piv = j;
            }
        }
        if piv != m {
            for j in m - 1..n {
                let t = a[(piv, j)];
                a[(piv, j)] = a[(m, j)];
                a[(m, j)] = t;
            }
            for j in 0..n {
                let t = a[(j, piv)];
                a[(j, piv)] = a[(j, m)];
                a[(j, m)] = t;
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        a[(i, j)] -= y * a[(m, j)];
                    }
                    for j in 0..n {
                        a[(j, m)] += y * a[(j, i)];
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..i - 1 {
            a[(i, j)] = 0.0;
        }
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hqr(a: &mut Matrix) -> Result<Vec<Complex>> {
    let n = a.rows() as isize;
    let mut wr = alloc::vec![0.0; n as usize];
    let mut wi = alloc::vec![0.0; n as usize];
    let max_sweeps = 30 * n.max(1) as usize;
    let mut sweeps = 0usize;

    macro_rules! at {
        ($i:expr, $j:expr) => {
            a[(($i) as usize, ($j) as usize)]
        };
    }

    let mut anorm = 0.0;
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += at!(i, j).abs();
        }
    }

    let mut nn = n - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let mut s = at!(l - 1, l - 1).abs() + at!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at!(l, l - 1).abs() + s == s {
                    at!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = at!(nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
            } else {
                let mut y = at!(nn - 1, nn - 1);
                let mut w = at!(nn, nn - 1) * at!(nn - 1, nn);
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = sqrt(q.abs());
                    x += t;
                    let (i1, i2) = ((nn - 1) as usize, nn as usize);
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[i1] = x + z;
                        wr[i2] = x + z;
                        if z != 0.0 {
                            wr[i2] = x - w / z;
                        }
                        wi[i1] = 0.0;
                        wi[i2] = 0.0;
                    } else {
                        wr[i1] = x + p;
                        wr[i2] = x + p;
                        wi[i1] = -z;
                        wi[i2] = z;
                    }
                    nn -= 2;
                } else {
                    if its == 30 || sweeps >= max_sweeps {
                        return Err(Error::Eigen);
                    }
                    if its == 10 || its == 20 {
                        // exceptional shift
                        t += x;
                        for i in 0..=nn {
                            at!(i, i) -= x;
                        }
                        let s = at!(nn, nn - 1).abs() + at!(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    sweeps += 1;

                    let (mut p, mut q, mut r);
                    let mut m = nn - 2;
                    loop {
                        let z = at!(m, m);
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / at!(m + 1, m) + at!(m, m + 1);
                        q = at!(m + 1, m + 1) - z - rr - ss;
                        r = at!(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = at!(m, m - 1).abs() * (q.abs() + r.abs());
                        let v =
                            p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        at!(i, i - 2) = 0.0;
                        if i != m + 2 {
                            at!(i, i - 3) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = at!(k, k - 1);
                            q = at!(k + 1, k - 1);
                            r = 0.0;
                            if k != nn - 1 {
                                r = at!(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign(sqrt(p * p + q * q + r * r), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    at!(k, k - 1) = -at!(k, k - 1);
                                }
                            } else {
                                at!(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = at!(k, j) + q * at!(k + 1, j);
                                if k != nn - 1 {
                                    pp += r * at!(k + 2, j);
                                    at!(k + 2, j) -= pp * z;
                                }
                                at!(k + 1, j) -= pp * y;
                                at!(k, j) -= pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * at!(i, k) + y * at!(i, k + 1);
                                if k != nn - 1 {
                                    pp += z * at!(i, k + 2);
                                    at!(i, k + 2) -= pp * r;
                                }
                                at!(i, k + 1) -= pp * q;
                                at!(i, k) -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex { re, im })
        .collect())
}
