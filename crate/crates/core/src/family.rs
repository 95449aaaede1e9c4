//! One-parameter metric families `t -> h(t)` on `[0, T_max]`.
//!
//! A family is either sampled (forms on a grid, linearly interpolated) or
//! generated from closed-form profiles:
//!
//! `h(t) = S (sum_blocks U diag(e^{phi_1(t)}, ...) U*) S*`
//!
//! with isometries `U` and an optional invertible frame `S` (identity when absent).
//! Generated families are evaluated through the factor
//! `B(t) = S [U_1 diag(e^{phi/2}) | U_2 ...]`, `h(t) = B(t) B(t)*`, which keeps
//! norms and relative eigenvalues accurate far beyond the range where the
//! assembled matrix is meaningful in double precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_tail, lsq_line, TailFit};
use crate::hermitian::json::{matrix_from_json, matrix_to_json, MatrixJson};
use crate::hermitian::{
    check_dim, log_sum_exp, relative_eigen, relative_eigen_factored, CMatrix, FiberVector,
    HermitianForm, RelativeEigen, C64,
};
use crate::profile::ScalarProfile;

/// Relative size of the rounding perturbation assumed for input vectors when
/// deciding which norm samples can be trusted.
pub const ROUNDING: f64 = 1e-15;
/// Isometry tolerance for block bases.
pub const UNITARY_TOL: f64 = 1e-10;
/// Largest exponent accepted before evaluation; `e^700` is close to `f64::MAX`.
pub const MAX_EXPONENT: f64 = 700.0;
/// Verdict threshold of [`MetricFamily::check_convexity`].
pub const CONVEXITY_TOL: f64 = 1e-7;
/// Slope change allowed by [`MetricFamily::check_moderate_growth`].
pub const GROWTH_SLOPE_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub unitary: CMatrix,
    pub profiles: Vec<ScalarProfile>,
}

impl Block {
    pub fn new(unitary: CMatrix, profiles: Vec<ScalarProfile>) -> Self {
        Block { unitary, profiles }
    }

    fn exponents(&self, t: f64) -> Vec<f64> {
        self.profiles.iter().map(|p| p.eval(t)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Sampled {
        grid: Vec<f64>,
        forms: Vec<HermitianForm>,
    },
    Generated {
        frame: Option<CMatrix>,
        blocks: Vec<Block>,
    },
}

#[derive(Clone, Debug)]
pub struct MetricFamily {
    n: usize,
    repr: Representation,
    t_max: f64,
    base: HermitianForm,
    base_factor: CMatrix,
    /// Accumulated `a` of [`MetricFamily::rescaled`]; add it back to exponents.
    pub exponent_shift: f64,
}

impl MetricFamily {
    pub fn sampled(grid: Vec<f64>, forms: Vec<HermitianForm>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != forms.len() {
            return Err(Error::schema("grid", "need >= 2 grid points, one form per point"));
        }
        if grid[0] != 0.0 {
            return Err(Error::schema("grid", "grid must start at t = 0"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::schema("grid", "grid must be strictly increasing"));
        }
        let n = forms[0].dim();
        for f in &forms {
            check_dim(n, f.dim())?;
        }
        let t_max = *grid.last().unwrap();
        let base = forms[0].clone();
        let base_factor = base.cholesky_factor()?;
        Ok(MetricFamily {
            n,
            repr: Representation::Sampled { grid, forms },
            t_max,
            base,
            base_factor,
            exponent_shift: 0.0,
        })
    }

    pub fn generated(blocks: Vec<Block>, t_max: f64) -> Result<Self> {
        Self::generated_with_frame(None, blocks, t_max)
    }

    pub fn generated_with_frame(frame: Option<CMatrix>, blocks: Vec<Block>, t_max: f64) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Empty);
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::schema("t_max", "must be positive and finite"));
        }
        let n = blocks[0].unitary.nrows();
        for (b, block) in blocks.iter().enumerate() {
            check_dim(n, block.unitary.nrows())?;
            if block.unitary.ncols() != block.profiles.len() {
                return Err(Error::schema(
                    format!("blocks[{b}].profiles"),
                    format!("{} profiles for {} columns", block.profiles.len(), block.unitary.ncols()),
                ));
            }
            let gram = block.unitary.adjoint() * &block.unitary;
            let dev = (gram - CMatrix::identity(block.unitary.ncols(), block.unitary.ncols()))
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            if !(dev <= UNITARY_TOL) {
                return Err(Error::schema(
                    format!("blocks[{b}].unitary"),
                    format!("columns not orthonormal (deviation {dev:e})"),
                ));
            }
            for (j, p) in block.profiles.iter().enumerate() {
                p.validate(&format!("blocks[{b}].profiles[{j}]"))?;
            }
        }
        if let Some(s) = &frame {
            if s.shape() != (n, n) {
                return Err(Error::NotSquare { rows: s.nrows(), cols: s.ncols() });
            }
        }
        let mut fam = MetricFamily {
            n,
            repr: Representation::Generated { frame, blocks },
            t_max,
            base: HermitianForm::identity(n),
            base_factor: CMatrix::identity(n, n),
            exponent_shift: 0.0,
        };
        let h0 = HermitianForm::new(fam.assemble(0.0)?)?;
        fam.base_factor = h0.cholesky_factor()?;
        fam.base = h0;
        Ok(fam)
    }

    /// Single-block family `U diag(e^{phi_j(t)}) U*`.
    pub fn single_block(unitary: CMatrix, profiles: Vec<ScalarProfile>, t_max: f64) -> Result<Self> {
        Self::generated(vec![Block::new(unitary, profiles)], t_max)
    }

    /// `diag(e^{phi_j(t)})`.
    pub fn diagonal(profiles: Vec<ScalarProfile>, t_max: f64) -> Result<Self> {
        let n = profiles.len();
        Self::single_block(CMatrix::identity(n, n), profiles, t_max)
    }

    /// Flat diagonal family `diag(e^{alpha_j t})`.
    pub fn flat_diagonal(alphas: &[f64], t_max: f64) -> Result<Self> {
        Self::diagonal(alphas.iter().map(|&a| ScalarProfile::linear(a, 0.0)).collect(), t_max)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn kind(&self) -> &'static str {
        match self.repr {
            Representation::Sampled { .. } => "sampled",
            Representation::Generated { .. } => "generated",
        }
    }

    /// `h(0)`.
    pub fn base_form(&self) -> &HermitianForm {
        &self.base
    }

    /// Cholesky factor of `h(0)`.
    pub fn base_factor(&self) -> &CMatrix {
        &self.base_factor
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_max).contains(&t) {
            return Err(Error::OutOfRange { t, t_max: self.t_max });
        }
        Ok(())
    }

    fn frame_apply(&self, m: CMatrix) -> CMatrix {
        match &self.repr {
            Representation::Generated { frame: Some(s), .. } => s * m,
            _ => m,
        }
    }

    fn assemble(&self, t: f64) -> Result<CMatrix> {
        match &self.repr {
            Representation::Sampled { grid, forms } => {
                let k = grid.partition_point(|&g| g <= t);
                if k > 0 && grid[k - 1] == t {
                    return Ok(forms[k - 1].matrix().clone());
                }
                let k = k.clamp(1, grid.len() - 1);
                let w = (t - grid[k - 1]) / (grid[k] - grid[k - 1]);
                Ok(forms[k - 1].matrix().scale(1.0 - w) + forms[k].matrix().scale(w))
            }
            Representation::Generated { .. } => {
                let b = self.factor(t)?;
                Ok(&b * b.adjoint())
            }
        }
    }

    /// `h(t)` (eval_family).
    pub fn eval(&self, t: f64) -> Result<HermitianForm> {
        self.check_t(t)?;
        match &self.repr {
            Representation::Sampled { .. } => Ok(HermitianForm::from_structure(self.assemble(t)?)),
            Representation::Generated { .. } => Ok(HermitianForm::from_structure(self.assemble(t)?)),
        }
    }

    /// `h(t)^*`, the dual metric on `V*`.
    pub fn dual_eval(&self, t: f64) -> Result<HermitianForm> {
        self.eval(t)?.dual()
    }

    /// `(phi, C)` with `h(t) = C diag(e^{phi}) C*`. Generated families give the
    /// framed block columns and the profile values; sampled families give the
    /// Cholesky factor and zeros.
    pub fn factor_parts(&self, t: f64) -> Result<(Vec<f64>, CMatrix)> {
        self.check_t(t)?;
        match self.exponent_columns(t) {
            Some(res) => res,
            None => {
                let l = HermitianForm::from_structure(self.assemble(t)?).cholesky_factor()?;
                Ok((vec![0.0; self.n], l))
            }
        }
    }

    /// All profile values at `t` with their block columns, generated families only.
    fn exponent_columns(&self, t: f64) -> Option<Result<(Vec<f64>, CMatrix)>> {
        let Representation::Generated { blocks, .. } = &self.repr else {
            return None;
        };
        let width: usize = blocks.iter().map(|b| b.unitary.ncols()).sum();
        let mut cols = CMatrix::zeros(self.n, width);
        let mut phis = Vec::with_capacity(width);
        let mut k = 0;
        for b in blocks {
            for (j, phi) in b.exponents(t).into_iter().enumerate() {
                if !phi.is_finite() || phi.abs() > MAX_EXPONENT {
                    return Some(Err(Error::Overflow { exponent: phi }));
                }
                cols.set_column(k, &b.unitary.column(j));
                phis.push(phi);
                k += 1;
            }
        }
        Some(Ok((phis, self.frame_apply(cols))))
    }

    /// A factor `B(t)` with `h(t) = B B*`. For sampled families this is the
    /// Cholesky factor of the interpolated form.
    pub fn factor(&self, t: f64) -> Result<CMatrix> {
        self.check_t(t)?;
        match self.exponent_columns(t) {
            Some(res) => {
                let (phis, mut cols) = res?;
                for (k, phi) in phis.iter().enumerate() {
                    let s = (0.5 * phi).exp();
                    cols.column_mut(k).scale_mut(s);
                }
                Ok(cols)
            }
            None => HermitianForm::from_structure(self.assemble(t)?).cholesky_factor(),
        }
    }

    /// Eigendecomposition of `h(t)` relative to `h(0)`.
    pub fn relative_eigen_at(&self, t: f64) -> Result<RelativeEigen> {
        self.check_t(t)?;
        match &self.repr {
            Representation::Generated { .. } => relative_eigen_factored(&self.base_factor, &self.factor(t)?),
            Representation::Sampled { .. } => relative_eigen(&self.base, &self.eval(t)?),
        }
    }

    /// `(log ||u||^2_t, log floor)`; the floor is the change caused by a relative
    /// perturbation [`ROUNDING`] of `u`.
    pub fn log_norm_sq(&self, t: f64, u: &FiberVector) -> Result<(f64, f64)> {
        check_dim(self.n, u.dim())?;
        if u.is_zero() {
            return Err(Error::ZeroVector);
        }
        self.check_t(t)?;
        let unorm = u.coords().norm_squared().ln();
        match self.exponent_columns(t) {
            Some(res) => {
                let (phis, cols) = res?;
                let w = cols.adjoint() * u.coords();
                let value = log_sum_exp(phis.iter().zip(w.iter()).map(|(p, c)| p + c.norm_sqr().ln()));
                let worst = phis
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p + cols.column(k).norm_squared().ln())
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok((value, 2.0 * ROUNDING.ln() + unorm + worst))
            }
            None => {
                let h = self.assemble(t)?;
                let v = crate::hermitian::quad_form(&h, u.coords());
                Ok((v.ln(), 2.0 * ROUNDING.ln() + unorm + h.norm().ln()))
            }
        }
    }

    /// `||u||^2_t`.
    pub fn norm_sq(&self, t: f64, u: &FiberVector) -> Result<f64> {
        Ok(self.log_norm_sq(t, u)?.0.exp())
    }

    /// `(log ||v||^2_{-t}, log floor)` for a dual vector `v`.
    pub fn log_dual_norm_sq(&self, t: f64, v: &FiberVector) -> Result<(f64, f64)> {
        check_dim(self.n, v.dim())?;
        if v.is_zero() {
            return Err(Error::ZeroVector);
        }
        Ok(self.relative_eigen_at(t)?.log_dual_norm_sq(v.coords(), ROUNDING))
    }

    /// The family `e^{-a t} h(t)`, recording `a` in `exponent_shift`.
    pub fn rescaled(&self, a: f64) -> Result<MetricFamily> {
        let repr = match &self.repr {
            Representation::Sampled { grid, forms } => Representation::Sampled {
                grid: grid.clone(),
                forms: grid.iter().zip(forms).map(|(t, f)| f.scale((-a * t).exp())).collect(),
            },
            Representation::Generated { frame, blocks } => Representation::Generated {
                frame: frame.clone(),
                blocks: blocks
                    .iter()
                    .map(|b| Block::new(b.unitary.clone(), b.profiles.iter().map(|p| p.with_added_slope(-a)).collect()))
                    .collect(),
            },
        };
        Ok(MetricFamily {
            n: self.n,
            repr,
            t_max: self.t_max,
            base: self.base.clone(),
            base_factor: self.base_factor.clone(),
            exponent_shift: self.exponent_shift + a,
        })
    }

    /// Restriction to `[0, t_max]`.
    pub fn truncated(&self, t_max: f64) -> Result<MetricFamily> {
        self.check_t(t_max)?;
        let mut f = self.clone();
        f.t_max = t_max;
        Ok(f)
    }

    /// `n` evenly spaced points of `(0, T_max]`.
    pub fn default_grid(&self, n: usize) -> Vec<f64> {
        open_grid(self.t_max, n)
    }

    /// Midpoint convexity of `t -> log ||u||^2_t` on consecutive grid triples.
    pub fn check_convexity(&self, directions: &[FiberVector], grid: &[f64]) -> Result<ConvexityReport> {
        if directions.is_empty() {
            return Err(Error::Empty);
        }
        if grid.len() < 3 {
            return Err(Error::Domain("convexity check needs >= 3 grid points".into()));
        }
        let worst = directions
            .par_iter()
            .map(|u| {
                let logs = grid
                    .iter()
                    .map(|&t| self.log_norm_sq(t, u).map(|x| x.0))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(convexity_violation(grid, &logs))
            })
            .collect::<Result<Vec<f64>>>()?;
        let max = worst.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(ConvexityReport {
            worst_violation: worst,
            pass: max <= CONVEXITY_TOL,
        })
    }

    /// Five-point Laplacian of `log ||u0 + zeta u1||^2_{Re zeta}` on a stencil over
    /// `region`.
    pub fn check_negative_curvature(
        &self,
        sections: &[(FiberVector, FiberVector)],
        region: &Region,
        step: f64,
    ) -> Result<CurvatureReport> {
        if !(region.t_min > 0.0) || !(region.t_max < self.t_max) {
            return Err(Error::OutOfRange { t: region.t_max, t_max: self.t_max });
        }
        let nt = ((region.t_max - region.t_min) / step).floor() as usize + 1;
        let ny = ((region.y_max - region.y_min) / step).floor() as usize + 1;
        if nt < 5 || ny < 5 {
            return Err(Error::Domain("stencil needs at least 5x5 points".into()));
        }
        let mut worst = f64::INFINITY;
        let mut worst_point = (region.t_min, region.y_min);
        let mut threshold = 0.0;
        for (u0, u1) in sections {
            check_dim(self.n, u0.dim())?;
            check_dim(self.n, u1.dim())?;
            let mut f = vec![vec![0.0; ny]; nt];
            for (i, row) in f.iter_mut().enumerate() {
                let t = region.t_min + i as f64 * step;
                for (j, val) in row.iter_mut().enumerate() {
                    let y = region.y_min + j as f64 * step;
                    let zeta = C64::new(t, y);
                    let u = FiberVector::new(u0.coords() + u1.coords() * zeta);
                    *val = if u.is_zero() {
                        f64::NEG_INFINITY
                    } else {
                        self.log_norm_sq(t, &u)?.0
                    };
                }
            }
            let scale = f.iter().flatten().filter(|x| x.is_finite()).fold(0.0f64, |m, x| m.max(x.abs()));
            threshold = f64::max(threshold, 1e-6 * (1.0 + scale));
            for i in 1..nt - 1 {
                for j in 1..ny - 1 {
                    let s = [f[i + 1][j], f[i - 1][j], f[i][j + 1], f[i][j - 1], f[i][j]];
                    if s.iter().any(|x| !x.is_finite()) {
                        continue;
                    }
                    let lap = (s[0] + s[1] + s[2] + s[3] - 4.0 * s[4]) / (step * step);
                    if lap < worst {
                        worst = lap;
                        worst_point = (region.t_min + i as f64 * step, region.y_min + j as f64 * step);
                    }
                }
            }
        }
        let tol = threshold / (step * step);
        Ok(CurvatureReport {
            worst_laplacian: worst,
            worst_point,
            tolerance: tol,
            pass: worst >= -tol,
        })
    }

    /// Fits `||u||^2_t <= C e^{a t}` over the probes.
    pub fn check_moderate_growth(&self, probes: &[FiberVector], grid_points: usize) -> Result<GrowthFit> {
        if self.t_max < 10.0 {
            return Err(Error::OutOfRange { t: 10.0, t_max: self.t_max });
        }
        if probes.is_empty() {
            return Err(Error::Empty);
        }
        let grid = closed_grid(0.0, self.t_max, grid_points.max(16));
        let cfg = TailFit { tol: f64::INFINITY, ..TailFit::default() };
        let mut a = f64::NEG_INFINITY;
        let mut slope_change: f64 = 0.0;
        let mut curves = Vec::with_capacity(probes.len());
        for u in probes {
            let mut logs = Vec::with_capacity(grid.len());
            let mut trusted = Vec::with_capacity(grid.len());
            for &t in &grid {
                let (v, floor) = self.log_norm_sq(t, u)?;
                logs.push(v);
                trusted.push(v - floor >= cfg.trust_ratio.ln());
            }
            let est = fit_tail(&grid, &logs, Some(&trusted), &cfg)?;
            a = a.max(est.slope);
            let end = grid.partition_point(|&t| t <= est.horizon);
            let q = |f: f64| grid.partition_point(|&t| t < f * est.horizon);
            let (i1, i2) = (q(0.5), q(0.75));
            if end - i2 >= 2 && i2 - i1 >= 2 {
                let s1 = lsq_line(&grid[i1..i2], &logs[i1..i2]).0;
                let s2 = lsq_line(&grid[i2..end], &logs[i2..end]).0;
                slope_change = slope_change.max((s2 - s1).abs());
            }
            curves.push(logs);
        }
        let log_c = curves
            .iter()
            .flat_map(|logs| grid.iter().zip(logs).map(|(t, l)| l - a * t))
            .fold(f64::NEG_INFINITY, f64::max);
        let residual = curves
            .iter()
            .flat_map(|logs| grid.iter().zip(logs).map(|(t, l)| l - (log_c + a * t)))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(GrowthFit {
            a,
            c: log_c.exp(),
            residual,
            slope_change,
            moderate: slope_change < GROWTH_SLOPE_TOL,
        })
    }
}

/// Largest `f(t1) - chord(t0, t2)(t1)` over consecutive triples.
pub fn convexity_violation(ts: &[f64], fs: &[f64]) -> f64 {
    ts.windows(3)
        .zip(fs.windows(3))
        .map(|(t, f)| {
            let chord = ((t[2] - t[1]) * f[0] + (t[1] - t[0]) * f[2]) / (t[2] - t[0]);
            f[1] - chord
        })
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

/// `n` evenly spaced points of `(0, t_max]`.
pub fn open_grid(t_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

/// `n` evenly spaced points of `[a, b]`.
pub fn closed_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub t_min: f64,
    pub t_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub worst_violation: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub worst_laplacian: f64,
    pub worst_point: (f64, f64),
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub a: f64,
    pub c: f64,
    pub residual: f64,
    pub slope_change: f64,
    pub moderate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub unitary: MatrixJson,
    pub profiles: Vec<ScalarProfile>,
}

/// On-disk family layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub n: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forms: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<MatrixJson>,
    pub t_max: f64,
}

impl FamilyJson {
    pub fn build(&self) -> Result<MetricFamily> {
        let fam = match self.kind.as_str() {
            "sampled" => {
                let grid = self.grid.clone().ok_or_else(|| Error::schema("grid", "missing"))?;
                let forms = self.forms.as_ref().ok_or_else(|| Error::schema("forms", "missing"))?;
                let forms = forms
                    .iter()
                    .enumerate()
                    .map(|(i, m)| HermitianForm::new(matrix_from_json(m, &format!("forms[{i}]"))?))
                    .collect::<Result<Vec<_>>>()?;
                let fam = MetricFamily::sampled(grid, forms)?;
                if (fam.t_max - self.t_max).abs() > 0.0 {
                    fam.truncated(self.t_max)?
                } else {
                    fam
                }
            }
            "generated" => {
                let blocks = self.blocks.as_ref().ok_or_else(|| Error::schema("blocks", "missing"))?;
                let blocks = blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| Ok(Block::new(matrix_from_json(&b.unitary, &format!("blocks[{i}].unitary"))?, b.profiles.clone())))
                    .collect::<Result<Vec<_>>>()?;
                let frame = self.frame.as_ref().map(|f| matrix_from_json(f, "frame")).transpose()?;
                MetricFamily::generated_with_frame(frame, blocks, self.t_max)?
            }
            other => return Err(Error::schema("kind", format!("unknown kind {other:?}"))),
        };
        if fam.dim() != self.n {
            return Err(Error::schema("n", format!("declared {}, forms have {}", self.n, fam.dim())));
        }
        Ok(fam)
    }

    pub fn from_family(fam: &MetricFamily) -> Self {
        match fam.representation() {
            Representation::Sampled { grid, forms } => FamilyJson {
                n: fam.dim(),
                kind: "sampled".into(),
                grid: Some(grid.clone()),
                forms: Some(forms.iter().map(|f| matrix_to_json(f.matrix())).collect()),
                blocks: None,
                frame: None,
                t_max: fam.t_max(),
            },
            Representation::Generated { frame, blocks } => FamilyJson {
                n: fam.dim(),
                kind: "generated".into(),
                grid: None,
                forms: None,
                blocks: Some(
                    blocks
                        .iter()
                        .map(|b| BlockJson { unitary: matrix_to_json(&b.unitary), profiles: b.profiles.clone() })
                        .collect(),
                ),
                frame: frame.as_ref().map(matrix_to_json),
                t_max: fam.t_max(),
            },
        }
    }
}

/// Parses a family file, reporting JSON syntax errors with line and column.
pub fn family_from_json(text: &str) -> Result<MetricFamily> {
    let raw: FamilyJson = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    raw.build()
}

pub fn family_to_json(fam: &MetricFamily) -> String {
    serde_json::to_string_pretty(&FamilyJson::from_family(fam)).expect("family serializes")
}
