//! Dense hermitian forms on a fixed fiber `V = C^n`.
//!
//! A [`HermitianForm`] is the value of a metric at one parameter `t`. Vectors of
//! `V` and of the dual space `V*` are both carried as [`FiberVector`]s in the
//! fixed trivialization; the pairing between them is the plain bilinear one,
//! `<v, u> = sum_i v_i u_i`.

mod graded;
pub mod json;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use graded::graded_left_svd;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Smallest admissible eigenvalue of a validated form.
pub const PD_FLOOR: f64 = 1e-12;
/// Largest tolerated `|H - H*|` entry before symmetrization.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Default slack for [`psd_order`].
pub const PSD_TOL: f64 = 1e-9;
/// Condition number beyond which [`HermitianForm::dual`] refuses to invert.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Clone, Debug, PartialEq)]
pub struct FiberVector(CVector);

impl FiberVector {
    pub fn new(coords: CVector) -> Self {
        FiberVector(coords)
    }

    pub fn from_real(coords: &[f64]) -> Self {
        FiberVector(CVector::from_iterator(
            coords.len(),
            coords.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn from_slice(coords: &[C64]) -> Self {
        FiberVector(CVector::from_column_slice(coords))
    }

    pub fn zeros(n: usize) -> Self {
        FiberVector(CVector::zeros(n))
    }

    /// The `j`-th standard basis vector.
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = CVector::zeros(n);
        v[j] = C64::new(1.0, 0.0);
        FiberVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(FiberVector(self.0.unscale(n)))
    }
}

/// Bilinear pairing of a dual vector `v` with a vector `u`.
pub fn pairing(v: &CVector, u: &CVector) -> C64 {
    v.iter().zip(u.iter()).map(|(a, b)| a * b).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianForm {
    matrix: CMatrix,
    residual: f64,
}

impl HermitianForm {
    /// Validates and symmetrizes `entries` (make_form).
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_floor(entries, PD_FLOOR)
    }

    pub fn with_floor(entries: CMatrix, pd_floor: f64) -> Result<Self> {
        let (matrix, residual) = symmetrize(entries)?;
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let min = hermitian_eigenvalues(&matrix)[0];
        if !(min > pd_floor) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        Ok(HermitianForm { matrix, residual })
    }

    /// Wraps a matrix that is hermitian positive definite by construction
    /// (for instance `S U diag(e^phi) U* S*`). Only symmetrizes; the eigenvalue
    /// test is skipped because it is meaningless once the dynamic range of the
    /// form exceeds double precision.
    pub(crate) fn from_structure(matrix: CMatrix) -> Self {
        let n = matrix.nrows();
        let mut m = matrix;
        for i in 0..n {
            for j in 0..i {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
            m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        }
        HermitianForm {
            matrix: m,
            residual: 0.0,
        }
    }

    pub fn identity(n: usize) -> Self {
        HermitianForm {
            matrix: CMatrix::identity(n, n),
            residual: 0.0,
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut m = CMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = C64::new(x, 0.0);
            }
        }
        Self::new(m)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Max entrywise `|H - H*|` of the input before symmetrization.
    pub fn symmetrization_residual(&self) -> f64 {
        self.residual
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `u* H u`.
    pub fn evaluate(&self, u: &FiberVector) -> Result<f64> {
        check_dim(self.dim(), u.dim())?;
        Ok(quad_form(&self.matrix, u.coords()).max(0.0))
    }

    /// The dual metric on `V*`.
    ///
    /// The returned matrix is `conj(H^{-1})`, so that `dual.evaluate(v)` is the
    /// operator norm squared of `v` under the bilinear pairing. For real forms this
    /// is just the inverse.
    pub fn dual(&self) -> Result<HermitianForm> {
        let eig = self.eigenvalues();
        let (min, max) = (eig[0], eig[eig.len() - 1]);
        if !(min > 0.0) || max / min > MAX_CONDITION {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        let chol = self
            .matrix
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            })?;
        let inv = chol.inverse();
        Ok(HermitianForm::from_structure(inv.map(|c| c.conj())))
    }

    /// Lower-triangular `L` with `H = L L*`.
    pub fn cholesky_factor(&self) -> Result<CMatrix> {
        self.matrix
            .clone()
            .cholesky()
            .map(|c| c.unpack())
            .ok_or_else(|| Error::NotPositiveDefinite {
                min_eigenvalue: self.eigenvalues()[0],
            })
    }

    /// Congruence `A H A*`.
    pub fn congruence(&self, a: &CMatrix) -> HermitianForm {
        HermitianForm::from_structure(a * &self.matrix * a.adjoint())
    }

    /// `self + other`, both PD so the sum is PD.
    pub fn add(&self, other: &HermitianForm) -> Result<HermitianForm> {
        check_dim(self.dim(), other.dim())?;
        Ok(HermitianForm::from_structure(&self.matrix + &other.matrix))
    }

    pub fn scale(&self, s: f64) -> HermitianForm {
        HermitianForm::from_structure(self.matrix.scale(s))
    }

    /// Base inner product `<x, y>_H = x* H y`.
    pub fn inner(&self, x: &CVector, y: &CVector) -> C64 {
        (x.adjoint() * &self.matrix * y)[(0, 0)]
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn quad_form(m: &CMatrix, u: &CVector) -> f64 {
    (u.adjoint() * m * u)[(0, 0)].re
}

fn symmetrize(entries: CMatrix) -> Result<(CMatrix, f64)> {
    let (rows, cols) = entries.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Empty);
    }
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let adj = entries.adjoint();
    let residual = (&entries - &adj)
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if !residual.is_finite() || entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NotHermitian {
            residual: f64::INFINITY,
        });
    }
    Ok(((entries + adj).scale(0.5), residual))
}

/// `log sum exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Generalized eigendecomposition of `target` relative to `base`.
#[derive(Clone, Debug)]
pub struct RelativeEigen {
    /// Multiplicative eigenvalues `mu_j`, ascending.
    pub lambdas: Vec<f64>,
    /// Columns `e_j`: `e_j* base e_k = delta_jk`, `e_j* target e_j = mu_j`.
    pub basis: CMatrix,
}

impl RelativeEigen {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// `sum_j |<v, e_j>|^2 / mu_j`, the dual norm squared of `v` for the target form.
    pub fn dual_norm_sq(&self, v: &CVector) -> f64 {
        (0..self.dim())
            .map(|j| pairing(v, &self.basis.column(j).into_owned()).norm_sqr() / self.lambdas[j])
            .sum()
    }

    /// `(log ||v||^2, log floor)` for the dual norm of the target form. The floor is
    /// the size of the change caused by a relative perturbation `eps` of `v`;
    /// values near it carry no information.
    pub fn log_dual_norm_sq(&self, v: &CVector, eps: f64) -> (f64, f64) {
        let terms = (0..self.dim()).map(|j| {
            let p = pairing(v, &self.basis.column(j).into_owned()).norm_sqr();
            p.ln() - self.lambdas[j].ln()
        });
        let value = log_sum_exp(terms);
        let worst = (0..self.dim())
            .map(|j| self.basis.column(j).norm_squared().ln() - self.lambdas[j].ln())
            .fold(f64::NEG_INFINITY, f64::max);
        (value, 2.0 * eps.ln() + v.norm_squared().ln() + worst)
    }

    /// `log` of the dual norm restricted to the terms `|<v, e_j>|^2 / mu_j` whose
    /// pairing exceeds its rounding level `eps ||v|| ||e_j||` by `sqrt(ratio)`,
    /// with the number of discarded terms. Discarded pairings are indistinguishable
    /// from zero, so the result tracks the nearest vector with those pairings exact.
    pub fn log_resolved_dual_norm_sq(&self, v: &CVector, eps: f64, ratio: f64) -> (f64, usize) {
        let vn = v.norm_squared();
        let mut dropped = 0;
        let mut terms = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let col = self.basis.column(j);
            let p = pairing(v, &col.into_owned()).norm_sqr();
            if p < ratio * eps * eps * vn * col.norm_squared() {
                dropped += 1;
            } else {
                terms.push(p.ln() - self.lambdas[j].ln());
            }
        }
        (log_sum_exp(terms), dropped)
    }

    /// Reconstructs the target form `E^{-*} diag(mu) E^{-1}`.
    pub fn reconstruct(&self) -> Option<CMatrix> {
        let inv = self.basis.clone().try_inverse()?;
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            self.dim(),
            self.lambdas.iter().map(|&m| C64::new(m, 0.0)),
        ));
        Some(inv.adjoint() * d * inv)
    }
}

/// Dense route: whiten by the Cholesky factor of `base`, diagonalize, pull back.
pub fn relative_eigen(base: &HermitianForm, target: &HermitianForm) -> Result<RelativeEigen> {
    check_dim(base.dim(), target.dim())?;
    let l = base.cholesky_factor()?;
    let n = base.dim();
    let linv = l
        .solve_lower_triangular(&CMatrix::identity(n, n))
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    let whitened = HermitianForm::from_structure(&linv * target.matrix() * linv.adjoint());
    let eig = SymmetricEigen::new(whitened.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if !(lambdas[0] > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: lambdas[0],
        });
    }
    let mut basis = CMatrix::zeros(n, n);
    let pull = linv.adjoint();
    for (k, &i) in order.iter().enumerate() {
        basis.set_column(k, &(&pull * eig.eigenvectors.column(i)));
    }
    Ok(RelativeEigen { lambdas, basis })
}

/// Factored route for `target = F F*`: relative accuracy in every `mu_j` even when
/// the spread of the target exceeds `1/eps`. `base_factor` is the Cholesky factor
/// of the base form.
pub fn relative_eigen_factored(base_factor: &CMatrix, factor: &CMatrix) -> Result<RelativeEigen> {
    let n = base_factor.nrows();
    check_dim(n, factor.nrows())?;
    let whitened = base_factor
        .solve_lower_triangular(factor)
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    let (sigmas, left) = graded_left_svd(&whitened)?;
    let lambdas: Vec<f64> = sigmas.iter().map(|s| s * s).collect();
    if !(lambdas[0] > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: lambdas[0],
        });
    }
    let basis = base_factor
        .adjoint()
        .solve_upper_triangular(&left)
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    Ok(RelativeEigen { lambdas, basis })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdOrder {
    /// `a <= b`
    Below,
    /// `b <= a`
    Above,
    Equal,
    Incomparable,
}

/// Loewner order of two forms with absolute slack `tol`.
pub fn psd_order(a: &HermitianForm, b: &HermitianForm, tol: f64) -> Result<PsdOrder> {
    check_dim(a.dim(), b.dim())?;
    let diff = b.matrix() - a.matrix();
    let ev = hermitian_eigenvalues(&diff);
    let below = ev[0] >= -tol;
    let above = -ev[ev.len() - 1] >= -tol;
    Ok(match (below, above) {
        (true, true) => PsdOrder::Equal,
        (true, false) => PsdOrder::Below,
        (false, true) => PsdOrder::Above,
        (false, false) => PsdOrder::Incomparable,
    })
}

/// Loewner order after whitening by `b`: compares `b^{-1/2} a b^{-1/2}` with the
/// identity, so `tol` is relative to `b`.
pub fn relative_order(a: &HermitianForm, b: &HermitianForm, tol: f64) -> Result<PsdOrder> {
    let eig = relative_eigen(b, a)?;
    Ok(order_from_relative(&eig.lambdas, tol))
}

pub(crate) fn order_from_relative(mus: &[f64], tol: f64) -> PsdOrder {
    let max = mus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = mus.iter().copied().fold(f64::INFINITY, f64::min);
    let below = max - 1.0 <= tol;
    let above = 1.0 - min <= tol;
    match (below, above) {
        (true, true) => PsdOrder::Equal,
        (true, false) => PsdOrder::Below,
        (false, true) => PsdOrder::Above,
        (false, false) => PsdOrder::Incomparable,
    }
}

/// Largest principal angle between the column spans of `a` and `b`
/// (euclidean geometry of the coordinates).
pub fn subspace_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() == 0 && b.ncols() == 0 {
        return 0.0;
    }
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    let qa = orthonormal_columns(a);
    let qb = orthonormal_columns(b);
    let m = qa.adjoint() * &qb;
    let sv = m.singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    // arcsin of the residual is accurate for tiny angles, arccos is not.
    let resid = (&qb - &qa * (qa.adjoint() * &qb)).norm();
    if resid < 0.5 {
        resid.min(1.0).asin()
    } else {
        smin.acos()
    }
}

/// Euclidean orthonormal basis of the column span (modified Gram-Schmidt, two passes).
pub fn orthonormal_columns(a: &CMatrix) -> CMatrix {
    let (n, k) = a.shape();
    let mut q = CMatrix::zeros(n, k);
    let mut kept = 0;
    for j in 0..k {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..kept {
                let qi = q.column(i).into_owned();
                let c = qi.dotc(&v);
                v -= qi * c;
            }
        }
        let nv = v.norm();
        if nv > 1e-13 * a.column(j).norm().max(f64::MIN_POSITIVE) {
            q.set_column(kept, &v.unscale(nv));
            kept += 1;
        }
    }
    q.columns(0, kept).into_owned()
}

/// Euclidean orthonormal basis of the orthogonal complement of the column span of
/// `a` (assumed to have full column rank). Completes with the standard basis
/// vector of largest residual at each step.
pub fn orthogonal_complement(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let q = orthonormal_columns(a);
    let k = n - q.ncols().min(n);
    let mut basis: Vec<CVector> = (0..q.ncols()).map(|j| q.column(j).into_owned()).collect();
    let mut out = CMatrix::zeros(n, k);
    for c in 0..k {
        let mut best: Option<(f64, CVector)> = None;
        for i in 0..n {
            let mut v = CVector::zeros(n);
            v[i] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &basis {
                    let d = b.dotc(&v);
                    v -= b * d;
                }
            }
            let nv = v.norm();
            if best.as_ref().is_none_or(|(m, _)| nv > *m) {
                best = Some((nv, v));
            }
        }
        let (nv, v) = best.expect("n > 0");
        let v = v.unscale(nv);
        out.set_column(c, &v);
        basis.push(v);
    }
    out
}

/// Gram-Schmidt in the inner product of `base`, preserving the flag of `cols`.
pub fn base_orthonormalize(base: &HermitianForm, cols: &CMatrix) -> CMatrix {
    let (n, k) = cols.shape();
    let mut out = CMatrix::zeros(n, k);
    for j in 0..k {
        let mut v = cols.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                let qi = out.column(i).into_owned();
                let c = base.inner(&qi, &v);
                v -= qi * c;
            }
        }
        let nv = base.inner(&v, &v).re.max(0.0).sqrt();
        out.set_column(j, &v.unscale(nv));
    }
    out
}
