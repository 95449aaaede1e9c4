//! Singular values with high relative accuracy for column-graded matrices.
//!
//! For `M = K D` with `K` moderately conditioned and `D` diagonal of arbitrary
//! spread, dense eigensolvers on `M M*` only resolve eigenvalues down to
//! `eps * |M|^2`. Sorting the rows of `M*` by norm, a column-pivoted Householder QR
//! and a one-sided Jacobi sweep on the triangular factor keep every singular value
//! to a few ulps relative error.

use super::{CMatrix, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Singular values (ascending) and matching left singular vectors of a wide
/// `n x m` matrix `M`, `m >= n`.
pub fn graded_left_svd(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (n, cols) = m.shape();
    if n == 0 {
        return Err(Error::Empty);
    }
    if cols < n {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: 0.0 });
    }
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Overflow {
            exponent: f64::INFINITY,
        });
    }

    // A = M*, rows sorted by decreasing norm.
    let mut a = m.adjoint();
    let mut rows: Vec<(f64, usize)> = (0..cols).map(|i| (a.row(i).norm(), i)).collect();
    rows.sort_by(|x, y| y.0.total_cmp(&x.0));
    a = CMatrix::from_fn(cols, n, |i, j| a[(rows[i].1, j)]);

    let (r, perm) = householder_qrcp(a);

    // One-sided Jacobi on X = R*: columns of X become orthogonal.
    let mut x = r.adjoint();
    let mut norms: Vec<f64> = (0..n).map(|j| x.column(j).norm_squared()).collect();
    let tol = (n as f64).sqrt() * f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let g: C64 = x.column(p).dotc(&x.column(q));
                let gabs = g.norm();
                if gabs == 0.0 || gabs <= tol * (norms[p].sqrt() * norms[q].sqrt()) {
                    continue;
                }
                rotated = true;
                let phase = g / gabs;
                let zeta = (norms[q] - norms[p]) / (2.0 * gabs);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + zeta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                let ph = phase.conj();
                for i in 0..n {
                    let xp = x[(i, p)];
                    let xq = x[(i, q)] * ph;
                    x[(i, p)] = xp * c - xq * s;
                    x[(i, q)] = xp * s + xq * c;
                }
                norms[p] = x.column(p).norm_squared();
                norms[q] = x.column(q).norm_squared();
            }
        }
        if !rotated {
            break;
        }
    }

    // M = P Y Sigma^{-1} Sigma (Q J)*, left vectors are the normalized, un-permuted columns.
    let mut out: Vec<(f64, usize)> = (0..n).map(|j| (x.column(j).norm(), j)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut left = CMatrix::zeros(n, n);
    let mut sig = Vec::with_capacity(n);
    for (k, &(s, j)) in out.iter().enumerate() {
        sig.push(s);
        if s > 0.0 {
            for i in 0..n {
                left[(perm[i], k)] = x[(i, j)] / s;
            }
        }
    }
    Ok((sig, left))
}

/// Householder QR with column pivoting. Returns the `n x n` triangular factor
/// and the column permutation (`A[:, perm[k]]` is column `k` of `A P`).
fn householder_qrcp(mut a: CMatrix) -> (CMatrix, Vec<usize>) {
    let (m, n) = a.shape();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n.min(m) {
        let (mut best, mut best_norm) = (k, -1.0);
        for j in k..n {
            let nj = a.view((k, j), (m - k, 1)).norm();
            if nj > best_norm {
                best = j;
                best_norm = nj;
            }
        }
        if best != k {
            a.swap_columns(k, best);
            perm.swap(k, best);
        }
        let x = a.view((k, k), (m - k, 1)).into_owned();
        let xnorm = x.norm();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v.unscale_mut(vnorm);
        for j in k..n {
            let mut col = a.view_mut((k, j), (m - k, 1));
            let d = v.dotc(&col);
            col -= &v * (d * 2.0);
        }
    }
    let r = CMatrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { C64::new(0.0, 0.0) });
    (r, perm)
}
