//! Dense solves for the tiny normal-equation systems used by the fitters.

#![allow(clippy::needless_range_loop)]

pub(crate) const MAX_DIM: usize = 3;

pub(crate) type Mat = [[f64; MAX_DIM]; MAX_DIM];
pub(crate) type Vector = [f64; MAX_DIM];

/// Solves the leading `n`×`n` block of `a x = b` by Gaussian elimination
/// with partial pivoting. Returns `None` for a numerically singular system.
pub(crate) fn solve(a: &Mat, b: &Vector, n: usize) -> Option<Vector> {
    let mut m = *a;
    let mut x = *b;
    let scale =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(0.0_f64, |acc, (i, j)| acc.max(libm::fabs(a[i][j])));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| libm::fabs(m[p][col]).total_cmp(&libm::fabs(m[q][col]))).unwrap_or(col);
        if libm::fabs(m[pivot][col]) <= scale * 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x[..n].iter().all(|v| v.is_finite()).then_some(x)
}

pub(crate) fn invert(a: &Mat, n: usize) -> Option<Mat> {
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    for col in 0..n {
        let mut e = [0.0; MAX_DIM];
        e[col] = 1.0;
        let x = solve(a, &e, n)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Reciprocal condition estimate of a symmetric positive semidefinite
/// matrix after unit-diagonal scaling: smallest over largest Jacobi
/// eigenvalue of the correlation matrix.
pub(crate) fn correlation_rcond(a: &Mat, n: usize) -> f64 {
    let mut c = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            let d = libm::sqrt(a[i][i] * a[j][j]);
            c[i][j] = if d > 0.0 { a[i][j] / d } else { 0.0 };
        }
    }
    let eig = symmetric_eigenvalues(c, n);
    let (lo, hi) = eig[..n].iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi > 0.0 {
        (lo / hi).max(0.0)
    } else {
        0.0
    }
}

fn symmetric_eigenvalues(mut a: Mat, n: usize) -> Vector {
    for _ in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut out = [0.0; MAX_DIM];
    for i in 0..n {
        out[i] = a[i][i];
    }
    out
}
