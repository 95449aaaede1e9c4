//! Jumping numbers, the filtrations `V_alpha` and `F_alpha = V_alpha^perp`,
//! directional growth and decay exponents, and the equivalence between
//! annihilator membership, weighted integrability and decay.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{closed_grid, MetricFamily, ROUNDING};
use crate::fit::{fit_tail, TailEstimate, TailFit};
use crate::flow::{compute_flow, FlatMetric, SpectralFlow, DEFAULT_GRID_POINTS, MONOTONE_TOL};
use crate::hermitian::json::{vector_to_json, VectorJson};
use crate::hermitian::{log_sum_exp, orthogonal_complement, pairing, CMatrix, FiberVector, C64};

/// Pairing moduli below this (unit vectors) count as annihilation.
pub const ANNIHILATION_TOL: f64 = 1e-8;
/// Pairing moduli above this at the next level make membership unambiguous.
pub const SEPARATION_TOL: f64 = 1e-6;
/// Half-width of the borderline band of [`integrability_test`].
pub const INTEGRABILITY_MARGIN: f64 = 1e-2;
/// Agreement demanded between `beta(v)` and the predicted jump.
pub const EXPONENT_MATCH_TOL: f64 = 5e-2;

#[derive(Clone, Debug)]
pub struct Filtration {
    /// Distinct jumping numbers `alpha_1 < ... < alpha_k`.
    pub jumps: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// `V_{alpha_j}` basis columns, `j = 1..k`; nested.
    pub v_spaces: Vec<CMatrix>,
    /// `F_{alpha_j}` basis columns (unit euclidean), `j = 1..k`; `F_{alpha_k} = 0`.
    pub f_spaces: Vec<CMatrix>,
}

impl Filtration {
    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// `dim V_{alpha_j}` for `j = 1..k`.
    pub fn v_dims(&self) -> Vec<usize> {
        self.v_spaces.iter().map(|v| v.ncols()).collect()
    }

    /// Random-free dual vector in `F_{alpha_j}` (`j >= 1`) built from coefficients.
    pub fn dual_in(&self, j: usize, coeffs: &[C64]) -> Option<FiberVector> {
        if j == 0 {
            return Some(FiberVector::from_slice(coeffs));
        }
        let f = self.f_spaces.get(j - 1)?;
        if f.ncols() == 0 || coeffs.len() < f.ncols() {
            return None;
        }
        let mut v = crate::hermitian::CVector::zeros(f.nrows());
        for (c, &a) in coeffs.iter().take(f.ncols()).enumerate() {
            v += f.column(c) * a;
        }
        Some(FiberVector::new(v))
    }
}

/// Distinct jumps of the flat exponents merged at `cluster_tol`, with their
/// subspaces.
pub fn build_filtration(flat: &FlatMetric, cluster_tol: f64) -> Filtration {
    let n = flat.dim();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &a in &flat.exponents {
        match groups.last_mut() {
            Some(g) if a - g[g.len() - 1] < cluster_tol => g.push(a),
            _ => groups.push(vec![a]),
        }
    }
    let jumps: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let multiplicities: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let mut v_spaces = Vec::with_capacity(groups.len());
    let mut f_spaces = Vec::with_capacity(groups.len());
    let mut dim = 0;
    for m in &multiplicities {
        dim += m;
        let v = flat.basis.columns(0, dim).into_owned();
        let f = if dim == n {
            CMatrix::zeros(n, 0)
        } else {
            orthogonal_complement(&v).map(|c| c.conj())
        };
        v_spaces.push(v);
        f_spaces.push(f);
    }
    Filtration { jumps, multiplicities, v_spaces, f_spaces }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub vector: VectorJson,
    /// `alpha(u)` for vectors, `beta(v)` for dual vectors.
    pub exponent: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub drift: f64,
    /// Last `t` at which the norm is above the rounding floor.
    pub horizon: f64,
    /// Worst decrease of `(log ||u||^2_t - log ||u||^2_0) / t` (vectors only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quotient_violation: Option<f64>,
    /// Dual-norm terms discarded as rounding noise at the end of the grid (dual vectors only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discarded_terms: Option<usize>,
}

/// Shared state for directional fits on one family: the spectral flow on the
/// coarse grid is computed once and reused for every dual vector.
pub struct DirectionProbe<'a> {
    fam: &'a MetricFamily,
    flow: SpectralFlow,
    fit: TailFit,
}

impl<'a> DirectionProbe<'a> {
    pub fn new(fam: &'a MetricFamily, fit: TailFit) -> Result<Self> {
        let flow = compute_flow(fam, &fam.default_grid(DEFAULT_GRID_POINTS))?;
        Ok(DirectionProbe { fam, flow, fit })
    }

    pub fn with_flow(fam: &'a MetricFamily, flow: SpectralFlow, fit: TailFit) -> Self {
        DirectionProbe { fam, flow, fit }
    }

    pub fn family(&self) -> &MetricFamily {
        self.fam
    }

    pub fn flow(&self) -> &SpectralFlow {
        &self.flow
    }

    /// Tail fit of `sample(t) = (value, floor)` on the coarse grid; when the
    /// trusted range ends early the window is resampled with `fit.points` points.
    fn tail(&self, coarse: &[(f64, f64)], sample: impl Fn(f64) -> Result<(f64, f64)> + Sync) -> Result<(TailEstimate, Vec<f64>)> {
        let grid = &self.flow.grid;
        let log_ratio = self.fit.trust_ratio.ln();
        let values: Vec<f64> = coarse.iter().map(|x| x.0).collect();
        let trusted: Vec<bool> = coarse.iter().map(|(v, f)| v - f >= log_ratio).collect();
        let end = trusted.iter().position(|&ok| !ok).unwrap_or(grid.len());
        if end == grid.len() {
            return Ok((fit_tail(grid, &values, Some(&trusted), &self.fit)?, values));
        }
        let horizon = if end == 0 { grid[0] } else { grid[end - 1] };
        if horizon < self.fit.min_horizon {
            return Err(Error::NonConvergent {
                what: format!("tail fit (trusted horizon {horizon:.3} too short)"),
                drift: f64::INFINITY,
                tol: self.fit.tol,
            });
        }
        let fine = closed_grid(self.fit.start_fraction * horizon, horizon, self.fit.points.max(8));
        let samples = fine.par_iter().map(|&t| sample(t)).collect::<Result<Vec<_>>>()?;
        let ys: Vec<f64> = samples.iter().map(|x| x.0).collect();
        let ok: Vec<bool> = samples.iter().map(|(v, f)| v - f >= log_ratio).collect();
        let cfg = TailFit { start_fraction: 0.0, min_horizon: 0.0, ..self.fit };
        let mut est = fit_tail(&fine, &ys, Some(&ok), &cfg)?;
        est.horizon = est.horizon.min(horizon);
        Ok((est, values))
    }

    /// `alpha(u)`: tail slope of `log ||u||^2_t`.
    pub fn alpha_of(&self, u: &FiberVector) -> Result<DirectionReport> {
        if u.is_zero() {
            return Err(Error::ZeroVector);
        }
        let coarse = self
            .flow
            .grid
            .par_iter()
            .map(|&t| self.fam.log_norm_sq(t, u))
            .collect::<Result<Vec<_>>>()?;
        let (est, values) = self.tail(&coarse, |t| self.fam.log_norm_sq(t, u))?;
        let l0 = self.fam.log_norm_sq(0.0, u)?.0;
        let q: Vec<f64> = self
            .flow
            .grid
            .iter()
            .zip(&values)
            .take_while(|(t, _)| **t <= est.horizon)
            .map(|(t, v)| (v - l0) / t)
            .collect();
        let violation = q.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        Ok(report(u, est.slope, &est, Some(violation)))
    }

    /// Resolved `log ||v||^2_{-t}` on the flow grid, with the number of
    /// discarded terms at the last grid point.
    fn resolved_dual_curve(&self, v: &FiberVector) -> (Vec<f64>, usize) {
        let mut dropped = 0;
        let values = self
            .flow
            .eigen
            .iter()
            .map(|e| {
                let (value, d) = e.log_resolved_dual_norm_sq(v.coords(), ROUNDING, self.fit.trust_ratio);
                dropped = d;
                value
            })
            .collect();
        (values, dropped)
    }

    /// `beta(v) = -` tail slope of `log ||v||^2_{-t}`, evaluated term by term in the
    /// relative eigenbasis with pairings at rounding level discarded.
    pub fn decay_exponent(&self, v: &FiberVector) -> Result<DirectionReport> {
        if v.is_zero() {
            return Err(Error::ZeroVector);
        }
        crate::hermitian::check_dim(self.fam.dim(), v.dim())?;
        let (values, dropped) = self.resolved_dual_curve(v);
        let est = fit_tail(&self.flow.grid, &values, None, &self.fit)?;
        let mut r = report(v, -est.slope, &est, None);
        r.discarded_terms = Some(dropped);
        Ok(r)
    }

    /// `log int_0^T ||v||^2_{-t} e^{t alpha} dt` by the trapezoid rule on the grid.
    pub fn log_partial_integral(&self, v: &FiberVector, alpha: f64) -> Result<f64> {
        let mut ts = vec![0.0];
        ts.extend_from_slice(&self.flow.grid);
        let mut ys = vec![self.fam.log_dual_norm_sq(0.0, v)?.0];
        ys.extend(self.resolved_dual_curve(v).0);
        Ok(log_sum_exp(ts.windows(2).zip(ys.windows(2)).map(|(t, y)| {
            let h = t[1] - t[0];
            log_sum_exp([y[0] + alpha * t[0], y[1] + alpha * t[1]]) + (0.5 * h).ln()
        })))
    }

    pub fn integrability_test(&self, v: &FiberVector, alpha: f64) -> Result<IntegrabilityReport> {
        let beta = self.decay_exponent(v)?.exponent;
        Ok(IntegrabilityReport {
            alpha,
            beta,
            verdict: classify(alpha, beta),
            log_partial_integral: self.log_partial_integral(v, alpha)?,
        })
    }

    pub fn verify_theorem(&self, v: &FiberVector, filt: &Filtration) -> Result<TheoremReport> {
        if filt.dim() != self.fam.dim() {
            return Err(Error::MismatchedFiltration { filtration: filt.dim(), family: self.fam.dim() });
        }
        let unit = v.normalized()?;
        let k = filt.len();
        let max_pairing = |j: usize| -> f64 {
            let vj = &filt.v_spaces[j - 1];
            (0..vj.ncols())
                .map(|c| {
                    let col = vj.column(c).into_owned();
                    pairing(unit.coords(), &col.unscale(col.norm())).norm()
                })
                .fold(0.0, f64::max)
        };
        let mut j = 0;
        while j < k && max_pairing(j + 1) < ANNIHILATION_TOL {
            j += 1;
        }
        let next_pairing = if j < k { max_pairing(j + 1) } else { 0.0 };
        let verdict_a = j < k && next_pairing >= SEPARATION_TOL;
        let target_index = j.min(k - 1);
        let target = filt.jumps[target_index];
        let top = target_index == k - 1;

        let decay = self.decay_exponent(v)?;
        let beta = decay.exponent;
        let endpoint = interval_endpoint(beta);
        let lower_probe = if j == 0 { target - 1.0 } else { 0.5 * (filt.jumps[j - 1] + target) };
        let upper_probe = if top { target + 1.0 } else { 0.5 * (target + filt.jumps[target_index + 1]) };
        let lower = classify(lower_probe, beta);
        let upper = classify(upper_probe, beta);
        let matches = |x: f64| if top { x >= target - EXPONENT_MATCH_TOL } else { (x - target).abs() <= EXPONENT_MATCH_TOL };
        let verdict_b = lower == Integrability::Finite && upper == Integrability::Infinite && matches(endpoint);
        let verdict_c = beta >= target - EXPONENT_MATCH_TOL;
        let consistent = verdict_a && verdict_b && verdict_c && matches(beta);
        Ok(TheoremReport {
            direction: vector_to_json(v.coords()),
            j_index: j,
            alpha_list: filt.jumps.clone(),
            beta,
            interval_endpoint: endpoint,
            verdicts: TheoremVerdicts { a: verdict_a, b: verdict_b, c: verdict_c, consistent },
            next_pairing,
            horizon: decay.horizon,
            probes: vec![(lower_probe, lower), (upper_probe, upper)],
        })
    }

    pub fn openness_of_interval(&self, v: &FiberVector) -> Result<OpennessReport> {
        let beta = self.decay_exponent(v)?.exponent;
        let at_endpoint = classify(beta, beta);
        let inside = classify(beta - 2.0 * INTEGRABILITY_MARGIN, beta);
        Ok(OpennessReport {
            beta,
            at_endpoint,
            inside,
            pass: at_endpoint != Integrability::Finite && inside == Integrability::Finite,
        })
    }
}

fn report(v: &FiberVector, exponent: f64, est: &TailEstimate, quotient_violation: Option<f64>) -> DirectionReport {
    DirectionReport {
        vector: vector_to_json(v.coords()),
        exponent,
        window: est.window,
        residual: est.residual,
        drift: est.drift,
        horizon: est.horizon,
        quotient_violation,
        discarded_terms: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    Finite,
    Infinite,
    Borderline,
}

/// Exponent comparison: `int e^{-beta t} e^{alpha t} dt` is finite iff `alpha < beta`.
pub fn classify(alpha: f64, beta: f64) -> Integrability {
    if alpha < beta - INTEGRABILITY_MARGIN {
        Integrability::Finite
    } else if alpha > beta + INTEGRABILITY_MARGIN {
        Integrability::Infinite
    } else {
        Integrability::Borderline
    }
}

/// Midpoint between the last finite and the first infinite verdict, located by
/// bisection on [`classify`].
pub fn interval_endpoint(beta: f64) -> f64 {
    let bisect = |pred: &dyn Fn(f64) -> bool| {
        let (mut lo, mut hi) = (beta - 100.0, beta + 100.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let sup_finite = bisect(&|a| classify(a, beta) == Integrability::Finite);
    let inf_infinite = bisect(&|a| classify(a, beta) != Integrability::Infinite);
    0.5 * (sup_finite + inf_infinite)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub alpha: f64,
    pub beta: f64,
    pub verdict: Integrability,
    /// Diagnostic only: `log` of the partial integral over `[0, T_max]`.
    pub log_partial_integral: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremVerdicts {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub direction: VectorJson,
    pub j_index: usize,
    pub alpha_list: Vec<f64>,
    pub beta: f64,
    pub interval_endpoint: f64,
    pub verdicts: TheoremVerdicts,
    /// Largest pairing modulus with `V_{alpha_{j+1}}`.
    pub next_pairing: f64,
    pub horizon: f64,
    /// Integrability probes `(alpha, verdict)` below and above the endpoint.
    pub probes: Vec<(f64, Integrability)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessReport {
    pub beta: f64,
    pub at_endpoint: Integrability,
    pub inside: Integrability,
    pub pass: bool,
}

pub fn alpha_of(fam: &MetricFamily, u: &FiberVector, fit: &TailFit) -> Result<DirectionReport> {
    DirectionProbe::new(fam, *fit)?.alpha_of(u)
}

pub fn decay_exponent(fam: &MetricFamily, v: &FiberVector, fit: &TailFit) -> Result<DirectionReport> {
    DirectionProbe::new(fam, *fit)?.decay_exponent(v)
}

pub fn integrability_test(fam: &MetricFamily, v: &FiberVector, alpha: f64, fit: &TailFit) -> Result<IntegrabilityReport> {
    DirectionProbe::new(fam, *fit)?.integrability_test(v, alpha)
}

pub fn verify_theorem(fam: &MetricFamily, v: &FiberVector, filt: &Filtration, fit: &TailFit) -> Result<TheoremReport> {
    DirectionProbe::new(fam, *fit)?.verify_theorem(v, filt)
}

pub fn openness_of_interval(fam: &MetricFamily, v: &FiberVector, fit: &TailFit) -> Result<OpennessReport> {
    DirectionProbe::new(fam, *fit)?.openness_of_interval(v)
}

/// Worst decrease of `(log ||u||^2_t - log ||u||^2_0) / t` over consecutive grid
/// points, restricted to samples above the rounding floor.
pub fn quotient_violation(fam: &MetricFamily, u: &FiberVector, grid: &[f64], trust_ratio: f64) -> Result<f64> {
    let l0 = fam.log_norm_sq(0.0, u)?.0;
    let mut q = Vec::with_capacity(grid.len());
    for &t in grid {
        let (v, floor) = fam.log_norm_sq(t, u)?;
        if v - floor < trust_ratio.ln() {
            break;
        }
        q.push((v - l0) / t);
    }
    Ok(q.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max))
}

/// `quotient_violation <= MONOTONE_TOL`.
pub fn quotient_is_monotone(violation: f64) -> bool {
    violation <= MONOTONE_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{flat_limit, CLUSTER_TOL};
    use crate::profile::ScalarProfile;

    fn rot45() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0)])
    }

    fn diag01() -> MetricFamily {
        MetricFamily::flat_diagonal(&[0.0, 1.0], 200.0).unwrap()
    }

    fn fit() -> TailFit {
        TailFit::decay()
    }

    #[test]
    fn filtration_examples() {
        let flat = FlatMetric {
            base_form: crate::hermitian::HermitianForm::identity(2),
            basis: CMatrix::identity(2, 2),
            exponents: vec![0.0, 1.0],
        };
        let f = build_filtration(&flat, CLUSTER_TOL);
        assert_eq!(f.jumps, vec![0.0, 1.0]);
        assert_eq!(f.v_dims(), vec![1, 2]);
        assert_eq!(f.f_spaces[0].ncols(), 1);
        assert!((f.f_spaces[0][(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert_eq!(f.f_spaces[1].ncols(), 0);

        let one = FlatMetric { exponents: vec![1.0, 1.004], ..flat.clone() };
        let f = build_filtration(&one, CLUSTER_TOL);
        assert_eq!(f.len(), 1);
        assert_eq!(f.multiplicities, vec![2]);

        let rot = FlatMetric { basis: rot45(), ..flat };
        let f = build_filtration(&rot, CLUSTER_TOL);
        let p = pairing(&f.f_spaces[0].column(0).into_owned(), &rot45().column(0).into_owned());
        assert!(p.norm() < 1e-15);
    }

    #[test]
    fn duality_of_subspaces() {
        let fam = MetricFamily::single_block(
            rot45(),
            vec![ScalarProfile::linear(-1.0, 0.3), ScalarProfile::Hyperbolic { scale: 0.5, slope: 1.5, intercept: 0.0 }],
            200.0,
        )
        .unwrap();
        let f = build_filtration(&flat_limit(&fam, &TailFit::default()).unwrap(), CLUSTER_TOL);
        for (v, fs) in f.v_spaces.iter().zip(&f.f_spaces) {
            assert_eq!(v.ncols() + fs.ncols(), 2);
            let block = fs.transpose() * v;
            assert!(block.iter().all(|c| c.norm() < 1e-8));
        }
    }

    #[test]
    fn alpha_examples() {
        let fam = diag01();
        let a = alpha_of(&fam, &FiberVector::from_real(&[1.0, 0.0]), &fit()).unwrap();
        assert!(a.exponent.abs() < 1e-12);
        let a = alpha_of(&fam, &FiberVector::from_real(&[1.0, 1.0]), &fit()).unwrap();
        assert!((a.exponent - 1.0).abs() < 1e-9);
        assert!(a.quotient_violation.unwrap() <= MONOTONE_TOL);
        let h = MetricFamily::diagonal(vec![ScalarProfile::Hyperbolic { scale: 1.0, slope: 0.0, intercept: 0.0 }], 200.0).unwrap();
        let a = alpha_of(&h, &FiberVector::from_real(&[1.0]), &fit()).unwrap();
        assert!((a.exponent - 1.0).abs() < 1e-3);
        assert!(matches!(alpha_of(&fam, &FiberVector::zeros(2), &fit()), Err(Error::ZeroVector)));
    }

    #[test]
    fn decay_examples() {
        let fam = diag01();
        let b = decay_exponent(&fam, &FiberVector::from_real(&[0.0, 1.0]), &fit()).unwrap();
        assert!((b.exponent - 1.0).abs() < 1e-9);
        let b = decay_exponent(&fam, &FiberVector::from_real(&[1.0, 1.0]), &fit()).unwrap();
        assert!(b.exponent.abs() < 1e-9);
        let rot = MetricFamily::single_block(rot45(), vec![ScalarProfile::linear(0.0, 0.0), ScalarProfile::linear(1.0, 0.0)], 200.0).unwrap();
        let f = build_filtration(&flat_limit(&rot, &TailFit::default()).unwrap(), CLUSTER_TOL);
        let v = FiberVector::new(f.f_spaces[0].column(0).into_owned());
        let b = decay_exponent(&rot, &v, &fit()).unwrap();
        assert!((b.exponent - 1.0).abs() < 1e-3, "{b:?}");
    }

    #[test]
    fn integrability_examples() {
        let fam = diag01();
        let v = FiberVector::from_real(&[0.0, 1.0]);
        let r = integrability_test(&fam, &v, 0.5, &fit()).unwrap();
        assert_eq!(r.verdict, Integrability::Finite);
        // trapezoid sum of e^{-t/2} with step h = 1/2: (h/2)(1 + r)/(1 - r), r = e^{-h/2}
        let r_step = (-0.25f64).exp();
        let trapezoid = 0.25 * (1.0 + r_step) / (1.0 - r_step);
        assert!((r.log_partial_integral - trapezoid.ln()).abs() < 1e-9);
        assert!((r.log_partial_integral - 2f64.ln()).abs() < 1e-2);
        assert_eq!(integrability_test(&fam, &v, 1.5, &fit()).unwrap().verdict, Integrability::Infinite);
        assert_eq!(integrability_test(&fam, &v, 1.0, &fit()).unwrap().verdict, Integrability::Borderline);
    }

    #[test]
    fn theorem_examples() {
        let fam = diag01();
        let filt = build_filtration(&flat_limit(&fam, &TailFit::default()).unwrap(), CLUSTER_TOL);
        let r = verify_theorem(&fam, &FiberVector::from_real(&[0.0, 1.0]), &filt, &fit()).unwrap();
        assert_eq!(r.j_index, 1);
        assert!((r.interval_endpoint - 1.0).abs() < 1e-6);
        assert!(r.verdicts.consistent, "{r:?}");
        let r = verify_theorem(&fam, &FiberVector::from_real(&[1.0, 0.0]), &filt, &fit()).unwrap();
        assert_eq!(r.j_index, 0);
        assert!(r.beta.abs() < 1e-6);
        assert!(r.verdicts.consistent, "{r:?}");

        let rot = MetricFamily::single_block(rot45(), vec![ScalarProfile::linear(0.0, 0.0), ScalarProfile::linear(1.0, 0.0)], 200.0).unwrap();
        let filt = build_filtration(&flat_limit(&rot, &TailFit::default()).unwrap(), CLUSTER_TOL);
        // transported versions: annihilator of U e_1, and the pairing partner of U e_1
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = verify_theorem(&rot, &FiberVector::from_real(&[s, -s]), &filt, &fit()).unwrap();
        assert_eq!(r.j_index, 1);
        assert!(r.verdicts.consistent, "{r:?}");
        let r = verify_theorem(&rot, &FiberVector::from_real(&[s, s]), &filt, &fit()).unwrap();
        assert_eq!(r.j_index, 0);
        assert!(r.verdicts.consistent, "{r:?}");

        let bad = build_filtration(&flat_limit(&MetricFamily::flat_diagonal(&[0.0], 200.0).unwrap(), &TailFit::default()).unwrap(), CLUSTER_TOL);
        assert!(matches!(
            verify_theorem(&fam, &FiberVector::from_real(&[1.0, 0.0]), &bad, &fit()),
            Err(Error::MismatchedFiltration { .. })
        ));
    }

    #[test]
    fn openness_examples() {
        let fam = diag01();
        assert!(openness_of_interval(&fam, &FiberVector::from_real(&[0.0, 1.0]), &fit()).unwrap().pass);
        let p = ScalarProfile::ExpAsymptote { slope: 1.0, intercept: 0.0, coeff: 1.0, rate: 1.0 };
        let fam = MetricFamily::diagonal(vec![p], 200.0).unwrap();
        let r = openness_of_interval(&fam, &FiberVector::from_real(&[1.0]), &fit()).unwrap();
        assert!(r.pass && (r.beta - 1.0).abs() < 1e-6);
        let fam = MetricFamily::flat_diagonal(&[1.0], 200.0).unwrap();
        assert!(openness_of_interval(&fam, &FiberVector::from_real(&[1.0]), &fit()).unwrap().pass);
    }

    #[test]
    fn endpoint_is_beta() {
        for beta in [-2.0, 0.0, 0.37, 3.0] {
            assert!((interval_endpoint(beta) - beta).abs() < 1e-9);
        }
    }
}
