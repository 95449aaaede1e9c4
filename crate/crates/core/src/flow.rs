//! Eigenvalue curves of `h(t)` relative to `h(0)`, interpolated flat metrics and
//! the flat limit `h_inf`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{MetricFamily, Representation, ROUNDING};
use crate::fit::{fit_tail, TailEstimate, TailFit};
use crate::hermitian::json::{matrix_to_json, MatrixJson};
use crate::hermitian::{
    base_orthonormalize, check_dim, graded_left_svd, log_sum_exp, order_from_relative, subspace_angle,
    CMatrix, FiberVector, HermitianForm, PsdOrder, RelativeEigen, C64,
};
use crate::profile::ScalarProfile;

/// Grid size used when callers do not supply a flow grid.
pub const DEFAULT_GRID_POINTS: usize = 400;
/// Slack of the monotonicity verdicts.
pub const MONOTONE_TOL: f64 = 1e-7;
/// Relative gap below which neighbouring exponents are flagged as a cluster.
pub const CLUSTER_FLAG_GAP: f64 = 1e-6;
/// Default merge threshold for jumping numbers.
pub const CLUSTER_TOL: f64 = 1e-2;
/// Relative slack of domination checks.
pub const DOMINATION_TOL: f64 = 1e-7;
/// Largest relative error tolerated when deciding up to which `t` a domination
/// check is numerically meaningful.
pub const DOMINATION_ACCURACY: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SpectralFlow {
    pub grid: Vec<f64>,
    /// Per grid point: `mu_j(t)` ascending and the `h(0)`-orthonormal basis.
    pub eigen: Vec<RelativeEigen>,
    /// Per grid point: `lambda_j(t) = log(mu_j(t)) / t`.
    pub lambdas: Vec<Vec<f64>>,
    /// Per grid point: index ranges `[start, end)` of flagged clusters.
    pub clusters: Vec<Vec<(usize, usize)>>,
}

impl SpectralFlow {
    pub fn dim(&self) -> usize {
        self.lambdas.first().map_or(0, |l| l.len())
    }

    /// `log mu_j(t)` along the grid.
    pub fn log_mu_curve(&self, j: usize) -> Vec<f64> {
        self.eigen.iter().map(|e| e.lambdas[j].ln()).collect()
    }

    /// `lambda_j(t)` along the grid.
    pub fn lambda_curve(&self, j: usize) -> Vec<f64> {
        self.lambdas.iter().map(|l| l[j]).collect()
    }
}

/// Relative eigendecomposition at each grid point, in parallel.
pub fn compute_flow(fam: &MetricFamily, grid: &[f64]) -> Result<SpectralFlow> {
    if grid.is_empty() {
        return Err(Error::Empty);
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("flow grid must be strictly increasing".into()));
    }
    if !(grid[0] > 0.0) {
        return Err(Error::OutOfRange { t: grid[0], t_max: fam.t_max() });
    }
    let eigen = grid
        .par_iter()
        .map(|&t| fam.relative_eigen_at(t))
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<Vec<f64>> = grid
        .iter()
        .zip(&eigen)
        .map(|(t, e)| e.lambdas.iter().map(|m| m.ln() / t).collect())
        .collect();
    let clusters = lambdas.iter().map(|l| cluster_ranges(l, CLUSTER_FLAG_GAP, true)).collect();
    Ok(SpectralFlow { grid: grid.to_vec(), eigen, lambdas, clusters })
}

/// Maximal runs of sorted values whose consecutive gaps are below `tol`
/// (relative to `1 + |x|` when `relative`). Only runs of length >= 2 are returned.
pub fn cluster_ranges(xs: &[f64], tol: f64, relative: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=xs.len() {
        let split = i == xs.len() || {
            let gap = xs[i] - xs[i - 1];
            let scale = if relative { 1.0 + xs[i].abs() } else { 1.0 };
            gap >= tol * scale
        };
        if split {
            if i - start >= 2 {
                out.push((start, i));
            }
            start = i;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub worst_violation: f64,
    pub pass: bool,
}

/// `lambda_j(s) <= lambda_j(t) + tol` for consecutive `s < t`.
pub fn check_lambda_monotone(flow: &SpectralFlow) -> MonotoneReport {
    let worst = flow
        .lambdas
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a - b))
        .fold(0.0, f64::max);
    MonotoneReport { worst_violation: worst, pass: worst <= MONOTONE_TOL }
}

/// A flat metric `||u||^2_t = sum_j |a_j|^2 e^{t alpha_j}`, `u = sum_j a_j f_j`.
#[derive(Clone, Debug)]
pub struct FlatMetric {
    pub base_form: HermitianForm,
    /// Columns `f_j`, orthonormal for `base_form`.
    pub basis: CMatrix,
    /// `alpha_j`, ascending.
    pub exponents: Vec<f64>,
}

impl FlatMetric {
    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Coordinates `a = F^{-1} u = F* h(0) u`.
    pub fn coordinates(&self, u: &FiberVector) -> Result<crate::hermitian::CVector> {
        check_dim(self.dim(), u.dim())?;
        Ok(self.basis.adjoint() * self.base_form.matrix() * u.coords())
    }

    pub fn log_norm_sq(&self, t: f64, u: &FiberVector) -> Result<f64> {
        let a = self.coordinates(u)?;
        Ok(log_sum_exp(
            a.iter().zip(&self.exponents).map(|(c, al)| c.norm_sqr().ln() + al * t),
        ))
    }

    /// `(L, U)` with `h(0) = L L*` and `U = L* F` unitary, so that
    /// `h_inf(t) = L U diag(e^{t alpha}) U* L*`.
    fn frame(&self) -> Result<(CMatrix, CMatrix)> {
        let l = self.base_form.cholesky_factor()?;
        let f = base_orthonormalize(&self.base_form, &self.basis);
        Ok((l.clone(), l.adjoint() * f))
    }

    /// The induced generated family on `[0, t_max]`.
    pub fn family(&self, t_max: f64) -> Result<MetricFamily> {
        let (l, u) = self.frame()?;
        let profiles = self.exponents.iter().map(|&a| ScalarProfile::linear(a, 0.0)).collect();
        MetricFamily::generated_with_frame(Some(l), vec![crate::family::Block::new(u, profiles)], t_max)
    }

    pub fn eval(&self, t: f64) -> Result<HermitianForm> {
        let (l, u) = self.frame()?;
        let d = CMatrix::from_diagonal(&crate::hermitian::CVector::from_iterator(
            self.dim(),
            self.exponents.iter().map(|a| C64::new((a * t).exp(), 0.0)),
        ));
        let lu = l * u;
        Ok(HermitianForm::from_structure(&lu * d * lu.adjoint()))
    }

    /// Largest `t` at which an `h <= h_inf` comparison is decidable: beyond it the
    /// rounding error of the basis, amplified by `e^{t (alpha_n - alpha_1) / 2}`,
    /// exceeds [`DOMINATION_ACCURACY`].
    pub fn comparison_horizon(&self) -> f64 {
        let spread = self.exponents.last().unwrap_or(&0.0) - self.exponents.first().unwrap_or(&0.0);
        if spread <= 0.0 {
            return f64::INFINITY;
        }
        2.0 * (DOMINATION_ACCURACY / ROUNDING).ln() / spread
    }

    pub fn report(&self) -> FlatMetricJson {
        FlatMetricJson {
            alphas: self.exponents.clone(),
            basis: matrix_to_json(&self.basis),
            base_form: matrix_to_json(self.base_form.matrix()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatMetricJson {
    pub alphas: Vec<f64>,
    pub basis: MatrixJson,
    pub base_form: MatrixJson,
}

/// Flow and flat-limit serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowJson {
    pub grid: Vec<f64>,
    pub lambdas: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub basis: MatrixJson,
    pub base_form: MatrixJson,
}

impl FlowJson {
    pub fn new(flow: &SpectralFlow, flat: &FlatMetric) -> Self {
        let f = flat.report();
        FlowJson {
            grid: flow.grid.clone(),
            lambdas: flow.lambdas.clone(),
            alphas: f.alphas,
            basis: f.basis,
            base_form: f.base_form,
        }
    }
}

/// Relative eigenvalue range `(min, max)` of `h(s)` against `flat(s)`.
/// `h(s) <= flat(s)` iff the max is at most one.
pub fn relative_range(fam: &MetricFamily, flat: &FlatMetric, s: f64) -> Result<(f64, f64)> {
    check_dim(fam.dim(), flat.dim())?;
    let (phis, cols) = fam.factor_parts(s)?;
    let (l, u) = flat.frame()?;
    let whitened = l
        .solve_lower_triangular(&cols)
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    let k = u.adjoint() * whitened;
    let m = CMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
        k[(i, j)] * (0.5 * (phis[j] - flat.exponents[i] * s)).exp()
    });
    let (sig, _) = graded_left_svd(&m)?;
    Ok((sig[0] * sig[0], sig[sig.len() - 1] * sig[sig.len() - 1]))
}

/// Whitened Loewner order of `h(s)` against `flat(s)`.
pub fn relative_order_to_flat(fam: &MetricFamily, flat: &FlatMetric, s: f64, tol: f64) -> Result<PsdOrder> {
    let (lo, hi) = relative_range(fam, flat, s)?;
    Ok(order_from_relative(&[lo, hi], tol))
}

/// The flat bridge `||u||^2_{s,t} = sum_j |c_j|^2 e^{s lambda_j(t)}` on `[0, t]`.
pub fn interpolated_metric(fam: &MetricFamily, t: f64) -> Result<MetricFamily> {
    interpolated_flat(fam, t)?.family(t)
}

fn interpolated_flat(fam: &MetricFamily, t: f64) -> Result<FlatMetric> {
    if !(t > 0.0) || t > fam.t_max() {
        return Err(Error::OutOfRange { t, t_max: fam.t_max() });
    }
    let eig = fam.relative_eigen_at(t)?;
    Ok(FlatMetric {
        base_form: fam.base_form().clone(),
        basis: eig.basis.clone(),
        exponents: eig.lambdas.iter().map(|m| m.ln() / t).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub probes: Vec<f64>,
    /// `max eig(h_upper(s)^{-1} h(s))` per probe.
    pub ratios: Vec<f64>,
    pub worst_ratio: f64,
    pub pass: bool,
}

/// `h(s) <= h_{s,t}` at each probe `s` of `(0, t)`.
pub fn check_domination(fam: &MetricFamily, t: f64, probes: &[f64]) -> Result<DominationReport> {
    let flat = interpolated_flat(fam, t)?;
    if let Some(&s) = probes.iter().find(|&&s| !(s >= 0.0 && s <= t)) {
        return Err(Error::OutOfRange { t: s, t_max: t });
    }
    dominated_by(fam, &flat, probes)
}

/// `h(s) <= flat(s)` at each probe.
pub fn dominated_by(fam: &MetricFamily, flat: &FlatMetric, probes: &[f64]) -> Result<DominationReport> {
    let ratios = probes
        .par_iter()
        .map(|&s| relative_range(fam, flat, s).map(|r| r.1))
        .collect::<Result<Vec<_>>>()?;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok(DominationReport {
        probes: probes.to_vec(),
        ratios,
        worst_ratio: worst,
        pass: worst <= 1.0 + DOMINATION_TOL,
    })
}

/// Tail slope of each `log mu_j(t)` over the flow grid.
pub fn exponent_fits(fam: &MetricFamily, flow: &SpectralFlow, fit: &TailFit) -> Result<Vec<TailEstimate>> {
    let n = flow.dim();
    (0..n)
        .map(|j| {
            let ys = flow.log_mu_curve(j);
            // The dense route behind sampled families resolves eigenvalues only down
            // to eps times the largest one.
            let trusted: Option<Vec<bool>> = match fam.representation() {
                Representation::Sampled { .. } => Some(
                    flow.eigen
                        .iter()
                        .map(|e| e.lambdas[j] >= fit.trust_ratio * f64::EPSILON * e.lambdas[n - 1])
                        .collect(),
                ),
                Representation::Generated { .. } => None,
            };
            fit_tail(&flow.grid, &ys, trusted.as_deref(), fit).map_err(|e| match e {
                Error::NonConvergent { drift, tol, .. } => Error::NonConvergent {
                    what: format!("exponent alpha_{}", j + 1),
                    drift,
                    tol,
                },
                other => other,
            })
        })
        .collect()
}

/// `h_inf` from the flow on the family's default grid.
pub fn flat_limit(fam: &MetricFamily, fit: &TailFit) -> Result<FlatMetric> {
    let flow = compute_flow(fam, &fam.default_grid(DEFAULT_GRID_POINTS))?;
    flat_limit_from_flow(fam, &flow, fit)
}

/// `h_inf` from a precomputed flow: exponents are tail slopes of `log mu_j`, the
/// basis is the diagonalizing basis at the last grid point.
pub fn flat_limit_from_flow(fam: &MetricFamily, flow: &SpectralFlow, fit: &TailFit) -> Result<FlatMetric> {
    let last = flow.grid.last().copied().unwrap_or(0.0);
    if last < fam.t_max() * 0.999 || last < 2.0 * fit.min_horizon {
        return Err(Error::OutOfRange { t: last, t_max: fam.t_max() });
    }
    let fits = exponent_fits(fam, flow, fit)?;
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| fits[a].slope.total_cmp(&fits[b].slope));
    let e = flow.eigen.last().expect("non-empty flow");
    let cols = CMatrix::from_fn(fam.dim(), fam.dim(), |i, k| e.basis[(i, order[k])]);
    Ok(FlatMetric {
        base_form: fam.base_form().clone(),
        basis: base_orthonormalize(fam.base_form(), &cols),
        exponents: order.iter().map(|&j| fits[j].slope).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatReport {
    /// Max over `j` of the spread of `lambda_j(t)` across the grid.
    pub lambda_spread: f64,
    /// Max principal angle between cluster blocks at the first and later grid points.
    pub max_angle: f64,
    /// Per direction: max deviation of `log ||u||^2_t` from its secant.
    pub direction_deviation: Vec<f64>,
    pub pass: bool,
}

/// Flatness: constant `lambda_j(t)` and a `t`-independent eigenbasis (blockwise).
pub fn check_flat(fam: &MetricFamily, directions: &[FiberVector], grid: &[f64]) -> Result<FlatReport> {
    if grid.len() < 3 {
        return Err(Error::Domain("flatness check needs >= 3 grid points".into()));
    }
    let flow = compute_flow(fam, grid)?;
    let n = flow.dim();
    let lambda_spread = (0..n)
        .map(|j| {
            let c = flow.lambda_curve(j);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max);
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let flagged = cluster_ranges(&flow.lambdas[0], CLUSTER_FLAG_GAP, true);
    let mut j = 0;
    while j < n {
        match flagged.iter().find(|r| r.0 == j) {
            Some(&r) => {
                blocks.push(r);
                j = r.1;
            }
            None => {
                blocks.push((j, j + 1));
                j += 1;
            }
        }
    }
    let first = &flow.eigen[0].basis;
    let max_angle = flow.eigen[1..]
        .iter()
        .flat_map(|e| {
            blocks.iter().map(move |&(a, b)| {
                subspace_angle(&first.columns(a, b - a).into_owned(), &e.basis.columns(a, b - a).into_owned())
            })
        })
        .fold(0.0, f64::max);
    let direction_deviation = directions
        .iter()
        .map(|u| {
            let ys = grid.iter().map(|&t| fam.log_norm_sq(t, u).map(|x| x.0)).collect::<Result<Vec<_>>>()?;
            let (t0, t1) = (grid[0], grid[grid.len() - 1]);
            let slope = (ys[ys.len() - 1] - ys[0]) / (t1 - t0);
            Ok(grid.iter().zip(&ys).map(|(t, y)| (y - ys[0] - slope * (t - t0)).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FlatReport {
        lambda_spread,
        max_angle,
        direction_deviation,
        pass: lambda_spread <= MONOTONE_TOL && max_angle < 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{closed_grid, Block};
    use crate::hermitian::psd_order;

    fn rot45() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0)])
    }

    fn hyperbolic() -> MetricFamily {
        MetricFamily::diagonal(vec![ScalarProfile::Hyperbolic { scale: 1.0, slope: 0.0, intercept: 0.0 }], 200.0).unwrap()
    }

    fn exp_asymptote() -> ScalarProfile {
        ScalarProfile::ExpAsymptote { slope: 1.0, intercept: 0.0, coeff: 1.0, rate: 1.0 }
    }

    #[test]
    fn flow_examples() {
        let fam = MetricFamily::flat_diagonal(&[0.0, 1.0], 10.0).unwrap();
        let flow = compute_flow(&fam, &[1.0, 5.0, 10.0]).unwrap();
        for l in &flow.lambdas {
            assert!(l[0].abs() < 1e-15 && (l[1] - 1.0).abs() < 1e-15);
        }

        let flow = compute_flow(&hyperbolic(), &[1.0]).unwrap();
        assert!((flow.lambdas[0][0] - (2f64.sqrt() - 1.0)).abs() < 1e-14);

        let fam = MetricFamily::single_block(rot45(), vec![ScalarProfile::linear(0.0, 0.0), ScalarProfile::linear(1.0, 0.0)], 10.0).unwrap();
        let flow = compute_flow(&fam, &[2.0]).unwrap();
        assert!(flow.lambdas[0][0].abs() < 1e-14 && (flow.lambdas[0][1] - 1.0).abs() < 1e-14);
        for j in 0..2 {
            let ang = subspace_angle(&flow.eigen[0].basis.columns(j, 1).into_owned(), &rot45().columns(j, 1).into_owned());
            assert!(ang < 1e-12);
        }
        assert!(matches!(compute_flow(&fam, &[11.0]), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn clusters_are_flagged() {
        let fam = MetricFamily::flat_diagonal(&[1.0, 1.0, 2.0], 10.0).unwrap();
        let flow = compute_flow(&fam, &[3.0]).unwrap();
        assert_eq!(flow.clusters[0], vec![(0, 2)]);
    }

    #[test]
    fn monotone_examples() {
        let fam = MetricFamily::flat_diagonal(&[-1.0, 2.0], 10.0).unwrap();
        let r = check_lambda_monotone(&compute_flow(&fam, &closed_grid(1.0, 10.0, 20)).unwrap());
        assert!(r.pass && r.worst_violation < 1e-15);

        let fam = MetricFamily::diagonal(vec![exp_asymptote()], 30.0).unwrap();
        let flow = compute_flow(&fam, &closed_grid(0.5, 30.0, 60)).unwrap();
        for (t, l) in flow.grid.iter().zip(&flow.lambdas) {
            assert!((l[0] - (1.0 + ((-t).exp() - 1.0) / t)).abs() < 1e-13);
        }
        assert!(check_lambda_monotone(&flow).pass);

        let e = std::f64::consts::E;
        let fam = MetricFamily::sampled(
            vec![0.0, 1.0, 2.0],
            vec![
                HermitianForm::identity(2),
                HermitianForm::diagonal(&[e, 1.0]).unwrap(),
                HermitianForm::identity(2),
            ],
        )
        .unwrap();
        let r = check_lambda_monotone(&compute_flow(&fam, &[1.0, 2.0]).unwrap());
        assert!(!r.pass);
        assert!((r.worst_violation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolated_metric_examples() {
        let fam = hyperbolic();
        let bridge = interpolated_metric(&fam, 1.0).unwrap();
        for s in [0.0, 0.3, 1.0] {
            let v = bridge.norm_sq(s, &FiberVector::from_real(&[1.0])).unwrap();
            assert!((v.ln() - (1.0 + s * (2f64.sqrt() - 1.0))).abs() < 1e-12);
        }
        let flat = MetricFamily::single_block(rot45(), vec![ScalarProfile::linear(0.0, 0.0), ScalarProfile::linear(1.0, 0.0)], 10.0).unwrap();
        let bridge = interpolated_metric(&flat, 4.0).unwrap();
        for s in [0.0, 2.0, 4.0] {
            let a = bridge.eval(s).unwrap();
            let b = flat.eval(s).unwrap();
            assert_eq!(crate::hermitian::relative_order(&a, &b, 1e-8).unwrap(), PsdOrder::Equal);
        }
    }

    #[test]
    fn domination_examples() {
        let flat = MetricFamily::flat_diagonal(&[0.0, 1.0], 10.0).unwrap();
        let r = check_domination(&flat, 5.0, &[1.0, 2.5, 4.0]).unwrap();
        assert!(r.pass && (r.worst_ratio - 1.0).abs() < 1e-12);

        let r = check_domination(&hyperbolic(), 1.0, &closed_grid(0.05, 0.95, 19)).unwrap();
        assert!(r.pass && r.worst_ratio < 1.0);

        let g = closed_grid(0.0, 2.0, 201);
        let concave = MetricFamily::diagonal(vec![ScalarProfile::tabulate(&g, |t| -t * t)], 2.0).unwrap();
        let r = check_domination(&concave, 2.0, &[0.5, 1.0, 1.5]).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn flat_limit_examples() {
        let fam = MetricFamily::flat_diagonal(&[0.0, 1.0], 100.0).unwrap();
        let lim = flat_limit(&fam, &TailFit::default()).unwrap();
        assert!(lim.exponents[0].abs() < 1e-12 && (lim.exponents[1] - 1.0).abs() < 1e-12);
        assert!(subspace_angle(&lim.basis.columns(0, 1).into_owned(), &CMatrix::identity(2, 2).columns(0, 1).into_owned()) < 1e-12);

        let lim = flat_limit(&hyperbolic(), &TailFit::default()).unwrap();
        assert!((lim.exponents[0] - 1.0).abs() < 1e-3);
        assert!((lim.base_form.matrix()[(0, 0)].re - std::f64::consts::E).abs() < 1e-12);
        let h = lim.eval(3.0).unwrap();
        assert!((h.matrix()[(0, 0)].re.ln() - (1.0 + 3.0 * lim.exponents[0])).abs() < 1e-12);

        // e^{0 t} P1 + e^{t + e^{-t}} P2 with orthogonal projectors
        let u = rot45();
        let fam = MetricFamily::generated(
            vec![
                Block::new(u.columns(0, 1).into_owned(), vec![ScalarProfile::linear(0.0, 0.0)]),
                Block::new(u.columns(1, 1).into_owned(), vec![exp_asymptote()]),
            ],
            200.0,
        )
        .unwrap();
        let lim = flat_limit(&fam, &TailFit::default()).unwrap();
        assert!(lim.exponents[0].abs() < 1e-9 && (lim.exponents[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_limit_dominates_and_agrees_at_zero() {
        let fam = MetricFamily::single_block(
            rot45(),
            vec![exp_asymptote().with_added_slope(-1.5), ScalarProfile::Hyperbolic { scale: 0.5, slope: 0.5, intercept: 0.0 }],
            200.0,
        )
        .unwrap();
        let lim = flat_limit(&fam, &TailFit::default()).unwrap();
        assert!((lim.exponents[0] + 0.5).abs() < 1e-6 && (lim.exponents[1] - 1.0).abs() < 2e-3);
        assert_eq!(relative_order_to_flat(&fam, &lim, 0.0, 1e-8).unwrap(), PsdOrder::Equal);
        let probes = closed_grid(0.0, lim.comparison_horizon().min(200.0), 50);
        assert!(dominated_by(&fam, &lim, &probes).unwrap().pass);
        assert_eq!(psd_order(&lim.eval(0.0).unwrap(), fam.base_form(), 1e-8).unwrap(), PsdOrder::Equal);
    }

    #[test]
    fn flat_limit_of_induced_family_is_idempotent() {
        let fam = MetricFamily::single_block(rot45(), vec![exp_asymptote().with_added_slope(-2.0), exp_asymptote()], 200.0).unwrap();
        let lim = flat_limit(&fam, &TailFit::default()).unwrap();
        let again = flat_limit(&lim.family(200.0).unwrap(), &TailFit::default()).unwrap();
        for j in 0..2 {
            assert!((lim.exponents[j] - again.exponents[j]).abs() < 1e-10);
        }
        let ang = subspace_angle(&lim.basis.columns(0, 1).into_owned(), &again.basis.columns(0, 1).into_owned());
        assert!(ang < 1e-8);
    }

    #[test]
    fn flatness_examples() {
        let grid = closed_grid(1.0, 20.0, 10);
        let dirs = [FiberVector::from_real(&[1.0, 1.0])];
        let fam = MetricFamily::flat_diagonal(&[-1.0, 2.0], 20.0).unwrap();
        assert!(check_flat(&fam, &dirs, &grid).unwrap().pass);
        let rot = MetricFamily::single_block(rot45(), vec![ScalarProfile::linear(0.0, 0.0), ScalarProfile::linear(1.0, 0.0)], 20.0).unwrap();
        assert!(check_flat(&rot, &dirs, &grid).unwrap().pass);
        let h = MetricFamily::diagonal(vec![ScalarProfile::Hyperbolic { scale: 1.0, slope: 0.0, intercept: 0.0 }], 20.0).unwrap();
        assert!(!check_flat(&h, &[FiberVector::from_real(&[1.0])], &grid).unwrap().pass);
    }
}
