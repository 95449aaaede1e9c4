//! Weighted Bergman spaces on the sublevel disks `D_t = {|z|^2 < e^{-t}}` for
//! radial weights: moments, quotient norms of jets, dual jet functionals,
//! truncated kernels and the first-order jet estimate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{open_grid, MetricFamily};
use crate::filtration::build_filtration;
use crate::fit::TailFit;
use crate::flow::{flat_limit, CLUSTER_TOL};
use crate::hermitian::C64;
use crate::profile::ScalarProfile;
use crate::quad::Quadrature;
use crate::radial::RadialProfile;

pub const EXPONENT_CONVENTION: &str = "G = log|z|^2, C = 0, D_t = {|z| < e^{-t/2}}";
pub const MOMENT_REL_TOL: f64 = 1e-12;
pub const KERNEL_TAIL_TOL: f64 = 1e-10;
pub const MAX_KERNEL_TERMS: usize = 4096;
/// Step of the central difference for `d/dz log K(z, z)` at the origin.
pub const DERIVATIVE_STEP: f64 = 1e-4;

fn quad() -> Quadrature {
    Quadrature::with_rel_tol(MOMENT_REL_TOL)
}

/// `log m_k(t)`, `m_k(t) = int_{D_t} |z|^{2k} e^{-phi} dA`. With `z = R u`,
/// `R = e^{-t/2}`, this is `2 pi R^{2k+2+g} int_0^1 u^{2k+1+g} smooth(R u) du`.
pub fn log_moment(w: &RadialProfile, k: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t = {t} must be nonnegative")));
    }
    let g = w.origin_power();
    let radius = (-0.5 * t).exp();
    let power = 2.0 * k as f64 + 1.0 + g;
    let breaks: Vec<f64> = w.kinks().iter().map(|r| r / radius).collect();
    let r = quad().integrate(|u: f64| u.powf(power) * w.smooth_factor(radius * u), 0.0, 1.0, &breaks)?;
    Ok((2.0 * std::f64::consts::PI * r.value).ln() - 0.5 * t * (power + 1.0))
}

pub fn moment(w: &RadialProfile, k: usize, t: f64) -> Result<f64> {
    log_moment(w, k, t).map(f64::exp)
}

/// Moments `m_0..m_order` on a `t` grid, computed once and shared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub orders: usize,
    pub t_grid: Vec<f64>,
    /// `log_values[i][k] = log m_k(t_i)`.
    pub log_values: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn new(w: &RadialProfile, orders: usize, t_grid: &[f64]) -> Result<Self> {
        let log_values = t_grid
            .par_iter()
            .map(|&t| (0..=orders).map(|k| log_moment(w, k, t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentTable { orders, t_grid: t_grid.to_vec(), log_values })
    }

    /// Worst midpoint defect `log m(mid) - mean(log m(ends))` over consecutive
    /// grid triples and all orders; nonnegative defects mean concavity.
    pub fn midpoint_defects(&self) -> (f64, f64) {
        let mut convex_defect = f64::NEG_INFINITY;
        let mut concave_defect = f64::NEG_INFINITY;
        for k in 0..=self.orders {
            for w in self.log_values.windows(3) {
                let d = w[1][k] - 0.5 * (w[0][k] + w[2][k]);
                convex_defect = convex_defect.max(d);
                concave_defect = concave_defect.max(-d);
            }
        }
        (convex_defect, concave_defect)
    }

    /// Worst increase of `m_k` along `t` and along `k` (for `t` with `D_t` inside the unit disk).
    pub fn monotone_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for row in &self.log_values {
            for k in 1..row.len() {
                worst = worst.max(row[k] - row[k - 1]);
            }
        }
        for w in self.log_values.windows(2) {
            for k in 0..=self.orders {
                worst = worst.max(w[1][k] - w[0][k]);
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetIdealProblem {
    pub n: usize,
    pub weight: RadialProfile,
    /// `c_k` with `f^{(k)}(0) = k! c_k`, stored as `[re, im]`.
    pub jets: Vec<[f64; 2]>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
}

impl JetIdealProblem {
    pub fn new(weight: RadialProfile, jets: &[C64]) -> Result<Self> {
        if jets.is_empty() {
            return Err(Error::Empty);
        }
        let p = JetIdealProblem {
            n: jets.len() - 1,
            weight,
            jets: jets.iter().map(|c| [c.re, c.im]).collect(),
            t_grid: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        if self.jets.len() != self.n + 1 {
            return Err(Error::schema("jets", format!("expected {} coefficients, got {}", self.n + 1, self.jets.len())));
        }
        if self.jets.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::schema("jets", "non-finite coefficient"));
        }
        if self.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::schema("t_grid", "times must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Vec<C64> {
        self.jets.iter().map(|[re, im]| C64::new(*re, *im)).collect()
    }
}

pub fn problem_from_json(text: &str) -> Result<JetIdealProblem> {
    let p: JetIdealProblem = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    p.validate()?;
    Ok(p)
}

/// `sum_k |c_k|^2 m_k(t)`: monomials are orthogonal for radial weights, so the
/// jet polynomial itself is the minimal extension.
pub fn quotient_norm(p: &JetIdealProblem, t: f64) -> Result<f64> {
    p.coefficients()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(k, c)| moment(&p.weight, k, t).map(|m| c.norm_sqr() * m))
        .sum()
}

/// Gram matrix `int_{D_t} z^i conj(z^j) e^{-phi} dA`, `i, j < size`, by tensor
/// quadrature: adaptive radial rule times a trapezoid rule in the angle. No
/// orthogonality is assumed.
pub fn gram_matrix(w: &RadialProfile, size: usize, t: f64, angular_nodes: usize) -> Result<DMatrix<C64>> {
    let radius = (-0.5 * t).exp();
    let g = w.origin_power();
    let breaks: Vec<f64> = w.kinks().iter().map(|r| r / radius).collect();
    let thetas: Vec<C64> = (0..angular_nodes)
        .map(|a| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * a as f64 / angular_nodes as f64))
        .collect();
    let mut gram = DMatrix::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            let angular: C64 = thetas.iter().map(|e| e.powi(i as i32) * e.conj().powi(j as i32)).sum::<C64>()
                * (2.0 * std::f64::consts::PI / angular_nodes as f64);
            let power = (i + j) as f64 + 1.0 + g;
            let radial = quad().integrate(|u: f64| u.powf(power) * w.smooth_factor(radius * u), 0.0, 1.0, &breaks)?;
            gram[(i, j)] = angular * radial.value * radius.powf(power + 1.0);
        }
    }
    Ok(gram)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionOracle {
    pub closed_form: f64,
    pub brute_force: f64,
    pub relative_difference: f64,
    /// Norm of the optimal correction coefficients.
    pub correction_norm: f64,
}

/// Minimizes `||P + z^{n+1} Q||^2_{-t}` over `deg Q < n_trunc` with the
/// quadrature Gram matrix and compares with [`quotient_norm`].
pub fn brute_force_quotient_norm(p: &JetIdealProblem, t: f64, n_trunc: usize) -> Result<ExtensionOracle> {
    let n = p.n + 1;
    let size = n + n_trunc;
    let gram = gram_matrix(&p.weight, size, t, 2 * size + 8)?;
    // ||sum f_i z^i||^2 = f^* H f with H = G^T.
    let h = gram.transpose();
    let a = DVector::from_vec(p.coefficients());
    let g_qp = h.view((n, 0), (n_trunc, n));
    let g_qq = h.view((n, n), (n_trunc, n_trunc)).into_owned();
    // Monomial moments span many decades; scale to unit diagonal before solving.
    let scale = DVector::from_iterator(n_trunc, (0..n_trunc).map(|i| 1.0 / g_qq[(i, i)].re.sqrt()));
    let scaled = DMatrix::from_fn(n_trunc, n_trunc, |i, j| g_qq[(i, j)] * scale[i] * scale[j]);
    let rhs = -(g_qp * &a).component_mul(&scale.map(|s| C64::new(s, 0.0)));
    let y = scaled
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: f64::NAN })?
        .solve(&rhs);
    let x = y.component_mul(&scale.map(|s| C64::new(s, 0.0)));
    let mut full = DVector::zeros(size);
    full.rows_mut(0, n).copy_from(&a);
    full.rows_mut(n, n_trunc).copy_from(&x);
    let brute_force = (full.adjoint() * &h * &full)[(0, 0)].re;
    let closed_form = quotient_norm(p, t)?;
    let denom = closed_form.abs().max(f64::MIN_POSITIVE);
    Ok(ExtensionOracle {
        closed_form,
        brute_force,
        relative_difference: (brute_force - closed_form).abs() / denom,
        correction_norm: x.norm(),
    })
}

/// `log ||delta_0^{(j)}||^2_{-t} = 2 log j! - log m_j(t)`.
pub fn log_dual_jet_norm(w: &RadialProfile, j: usize, t: f64) -> Result<f64> {
    let log_fact: f64 = (1..=j).map(|i| (i as f64).ln()).sum();
    Ok(2.0 * log_fact - log_moment(w, j, t)?)
}

pub fn dual_jet_norms(p: &JetIdealProblem, j: usize, t: f64) -> Result<f64> {
    if j > p.n {
        return Err(Error::Domain(format!("jet order {j} exceeds n = {}", p.n)));
    }
    log_dual_jet_norm(&p.weight, j, t).map(f64::exp)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpingNumbers {
    pub exponents: Vec<f64>,
    pub jumps: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub exponent_convention: String,
}

/// Jumping numbers of the diagonal family `t -> diag(||delta^{(j)}||^2_{-t})`.
pub fn extension_jumping_numbers(w: &RadialProfile, n: usize, t_max: f64, grid_points: usize, fit: &TailFit) -> Result<JumpingNumbers> {
    // The top dual norm grows like e^{(n + 1 + g/2) t}; keep it inside f64 range.
    let top = (n as f64 + 1.0 + 0.5 * w.origin_power()).max(1.0);
    let t_max = t_max.min(EXPONENT_BUDGET / top);
    let mut grid = vec![0.0];
    grid.extend(open_grid(t_max, grid_points));
    let table = MomentTable::new(w, n, &grid)?;
    let log_fact = |j: usize| (1..=j).map(|i| (i as f64).ln()).sum::<f64>();
    let profiles = (0..=n)
        .map(|j| ScalarProfile::Tabulated {
            grid: grid.clone(),
            values: table.log_values.iter().map(|row| 2.0 * log_fact(j) - row[j]).collect(),
        })
        .collect();
    let fam = MetricFamily::diagonal(profiles, t_max)?;
    let flat = flat_limit(&fam, fit)?;
    let filt = build_filtration(&flat, CLUSTER_TOL);
    Ok(JumpingNumbers {
        exponents: flat.exponents.clone(),
        jumps: filt.jumps,
        multiplicities: filt.multiplicities,
        exponent_convention: EXPONENT_CONVENTION.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub beta: f64,
    /// Worst relative decrease of `quotient_norm(t) e^{beta t}` between grid neighbours.
    pub worst_decrease: f64,
    pub pass: bool,
}

/// Largest `|exponent| * t` allowed on a tabulated jet-norm family.
pub const EXPONENT_BUDGET: f64 = 600.0;

pub const MONOTONICITY_SLACK: f64 = 1e-8;

pub fn ot_monotonicity(p: &JetIdealProblem, beta: f64, grid: &[f64]) -> Result<MonotonicityReport> {
    let logs = grid
        .par_iter()
        .map(|&t| quotient_norm(p, t).map(|q| q.ln() + beta * t))
        .collect::<Result<Vec<_>>>()?;
    let worst_decrease = logs.windows(2).map(|w| -(w[1] - w[0]).exp_m1()).fold(0.0, f64::max);
    Ok(MonotonicityReport { beta, worst_decrease, pass: worst_decrease <= MONOTONICITY_SLACK })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// Truncated series `K(z, w) = sum_k z^k conj(w)^k / m_k(t)` valid for
/// `|z w| <= x_max`.
///
/// Cauchy-Schwarz makes `k -> m_k / m_{k+1}` nonincreasing, so with
/// `x = |z w|` and `q = m_N / m_{N+1}` the tail past `N` is at most
/// `x^{N+1} / m_{N+1} / (1 - x q)`.
#[derive(Clone, Debug)]
pub struct KernelSeries {
    pub t: f64,
    pub x_max: f64,
    /// `1 / m_k(t)` for `k < terms`.
    pub coefficients: Vec<f64>,
    pub tail_bound: f64,
}

impl KernelSeries {
    pub fn new(w: &RadialProfile, t: f64, x_max: f64) -> Result<Self> {
        let radius_sq = (-t).exp();
        if !(x_max < radius_sq) {
            return Err(Error::Domain(format!("points must lie in |z| < {}", radius_sq.sqrt())));
        }
        let mut coefficients = Vec::new();
        let mut log_m = log_moment(w, 0, t)?;
        let mut tail = f64::INFINITY;
        for k in 0..MAX_KERNEL_TERMS {
            coefficients.push((-log_m).exp());
            let log_next = log_moment(w, k + 1, t)?;
            let q = (log_m - log_next).exp();
            if x_max * q < 1.0 {
                tail = if x_max == 0.0 { 0.0 } else { ((k + 1) as f64 * x_max.ln() - log_next).exp() / (1.0 - x_max * q) };
                if tail < KERNEL_TAIL_TOL {
                    return Ok(KernelSeries { t, x_max, coefficients, tail_bound: tail });
                }
            }
            log_m = log_next;
        }
        Err(Error::TruncationInsufficient { n_trunc: MAX_KERNEL_TERMS, tail })
    }

    /// Horner evaluation; `|z w|` must not exceed `x_max`.
    pub fn eval(&self, z: C64, w: C64) -> KernelValue {
        let zw = z * w.conj();
        let value = self.coefficients.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * zw + c);
        KernelValue { value, terms: self.coefficients.len(), tail_bound: self.tail_bound }
    }
}

pub fn bergman_kernel(w: &RadialProfile, z: C64, wz: C64, t: f64) -> Result<KernelValue> {
    let radius = (-0.5 * t).exp();
    if !(z.norm() < radius && wz.norm() < radius) {
        return Err(Error::Domain(format!("points must lie in |z| < {radius}")));
    }
    Ok(KernelSeries::new(w, t, z.norm() * wz.norm())?.eval(z, wz))
}

/// `int_{D_t} f(z) conj(K(z, w)) e^{-phi} dA` for `f = z^j`, by adaptive radial
/// quadrature and a trapezoid rule in the angle.
pub fn reproduce_monomial(weight: &RadialProfile, j: u32, wz: C64, t: f64, angular_nodes: usize) -> Result<C64> {
    let radius = (-0.5 * t).exp();
    let thetas: Vec<C64> = (0..angular_nodes)
        .map(|a| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * a as f64 / angular_nodes as f64))
        .collect();
    let dtheta = 2.0 * std::f64::consts::PI / angular_nodes as f64;
    if !(wz.norm() < radius) {
        return Err(Error::Domain(format!("w must lie in |z| < {radius}")));
    }
    let series = KernelSeries::new(weight, t, radius * wz.norm())?;
    let breaks: Vec<f64> = weight.kinks().into_iter().filter(|&r| r < radius).collect();
    let g = weight.origin_power();
    let r = Quadrature::with_rel_tol(1e-10).integrate(
        |r: f64| {
            let acc: C64 = thetas.iter().map(|e| (e * r).powu(j) * series.eval(e * r, wz).value.conj()).sum();
            acc * (dtheta * r.powf(1.0 + g) * weight.smooth_factor(r))
        },
        0.0,
        radius,
        &breaks,
    )?;
    Ok(r.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct N1Estimate {
    pub bound: f64,
    pub exact: f64,
    /// `d/dz log K(z, z)` at the origin.
    pub log_kernel_derivative: C64,
    /// `f_0 = f(0) K(z, 0) / K(0, 0)`, a constant for radial weights.
    pub f0_component: C64,
    /// Taylor coefficients `(f_1(0), f_1'(0))` of `f_1 = f - f_0`.
    pub f1_component: [C64; 2],
}

/// The first-order jet bound `pi (|f(0)|^2 + |f'(0) - f(0) d log K|^2 / 2) e^{-phi(0)}`
/// against the exact quotient norm at `t = 0`.
pub fn n1_estimate(w: &RadialProfile, f0: C64, f1: C64) -> Result<N1Estimate> {
    if !w.is_bounded() {
        return Err(Error::Domain("the estimate needs phi(0) finite".into()));
    }
    let h = DERIVATIVE_STEP;
    let log_k = |z: C64| bergman_kernel(w, z, z, 0.0).map(|k| k.value.re.ln());
    let dx = (log_k(C64::new(h, 0.0))? - log_k(C64::new(-h, 0.0))?) / (2.0 * h);
    let dy = (log_k(C64::new(0.0, h))? - log_k(C64::new(0.0, -h))?) / (2.0 * h);
    let dlog = C64::new(0.5 * dx, -0.5 * dy);
    let k00 = bergman_kernel(w, C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0)?.value;
    let kz0 = bergman_kernel(w, C64::new(h, 0.0), C64::new(0.0, 0.0), 0.0)?.value;
    let f0_component = f0 * kz0 / k00;
    let shifted = f1 - f0 * dlog;
    let bound = std::f64::consts::PI * (f0.norm_sqr() + 0.5 * shifted.norm_sqr()) * (-w.eval(0.0)).exp();
    let exact = quotient_norm(&JetIdealProblem::new(w.clone(), &[f0, f1])?, 0.0)?;
    Ok(N1Estimate {
        bound,
        exact,
        log_kernel_derivative: dlog,
        f0_component,
        f1_component: [f0 - f0_component, f1],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BergmanReport {
    pub exponent_convention: String,
    pub n: usize,
    pub weight: RadialProfile,
    pub jumping_numbers: JumpingNumbers,
    pub quotient_norms: Vec<(f64, f64)>,
    pub monotonicity: MonotonicityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<N1Estimate>,
}

/// Full analysis of a jet problem: jumping numbers, quotient norms on the
/// problem grid, monotonicity at the measured top exponent and, for `n = 1`,
/// the first-order estimate.
pub fn analyze_problem(p: &JetIdealProblem, t_max: f64, grid_points: usize, fit: &TailFit) -> Result<BergmanReport> {
    let jumping_numbers = extension_jumping_numbers(&p.weight, p.n, t_max, grid_points, fit)?;
    let grid = if p.t_grid.is_empty() { open_grid(10.0, 40) } else { p.t_grid.clone() };
    let quotient_norms = grid
        .iter()
        .map(|&t| quotient_norm(p, t).map(|q| (t, q)))
        .collect::<Result<Vec<_>>>()?;
    let top = jumping_numbers.jumps.last().copied().unwrap_or(0.0);
    let monotonicity = ot_monotonicity(p, top + 1e-3, &grid)?;
    let n1 = if p.n == 1 && p.weight.is_bounded() {
        let c = p.coefficients();
        Some(n1_estimate(&p.weight, c[0], c[1])?)
    } else {
        None
    };
    Ok(BergmanReport {
        exponent_convention: EXPONENT_CONVENTION.into(),
        n: p.n,
        weight: p.weight.clone(),
        jumping_numbers,
        quotient_norms,
        monotonicity,
        n1,
    })
}
