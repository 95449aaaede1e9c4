//! Radial model of the openness argument on the unit disk.
//!
//! For `psi = c log r` and the truncations `psi_s = max(psi + s, 0)` the dual
//! norms `N(s) = int |z|^{2m} e^{-phi - K psi_s} dA` form a scalar family whose
//! decay exponent is the integrability threshold `p_max = (2m + 2) / c`, as long
//! as the truncation strength `K` exceeds it. Integrating the calculus identity
//!
//! `int_0^inf e^{ps} e^{-K max(x+s, 0)} ds + 1/p = K / (p (K - p)) e^{-px}`
//!
//! against `|z|^{2m} e^{-phi} dA` with `x = psi(z)` gives the reduction
//!
//! `C_{p,K} int |z|^{2m} e^{-phi - p psi} dA = int_0^inf N(s) e^{ps} ds + N(0) / p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{closed_grid, MetricFamily};
use crate::filtration::{classify, DirectionProbe, Integrability};
use crate::fit::TailFit;
use crate::flow::DEFAULT_GRID_POINTS;
use crate::hermitian::FiberVector;
use crate::profile::ScalarProfile;
use crate::quad::Quadrature;
use crate::radial::RadialProfile;

/// Quadrature truncation of the identity: `e^{(p-K)(S+x)} < IDENTITY_TAIL`.
pub const IDENTITY_TAIL: f64 = 1e-12;
/// Relative error demanded from the model quadratures.
pub const MODEL_REL_TOL: f64 = 1e-11;
/// Largest truncation strength tried while searching for `p_max`.
pub const MAX_STRENGTH: f64 = 64.0;
/// A measured exponent this close to `K` is treated as capped by `K`.
pub const STRENGTH_MARGIN: f64 = 0.5;
/// Bound on `K s` over the fitted range.
const SCALAR_EXPONENT_BUDGET: f64 = 600.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelWeight {
    pub phi: RadialProfile,
    /// `psi = c log r`.
    pub c: f64,
}

impl ModelWeight {
    pub fn new(phi: RadialProfile, c: f64) -> Result<Self> {
        phi.validate()?;
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!("psi = c log r needs c > 0, got {c}")));
        }
        Ok(ModelWeight { phi, c })
    }

    pub fn log_pole(c: f64) -> Result<Self> {
        Self::new(RadialProfile::Zero, c)
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.c * r.ln()
    }

    pub fn psi_s(&self, r: f64, s: f64) -> f64 {
        (self.psi(r) + s).max(0.0)
    }

    /// `(2m + 2 + g) / c`, where `r^g` is the vanishing order of `e^{-phi}`.
    pub fn p_max(&self, m: u32) -> f64 {
        (2.0 * m as f64 + 2.0 + self.phi.origin_power()) / self.c
    }
}

/// `K / (p (K - p))`; the truncation used in the model has `K = 2`.
pub fn identity_constant(p: f64, k: f64) -> f64 {
    k / (p * (k - p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub x: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub c_p: f64,
    pub truncation: f64,
    pub relative_residual: f64,
}

pub fn lemma_identity(x: f64, p: f64, quad: &Quadrature) -> Result<IdentityCheck> {
    lemma_identity_k(x, p, 2.0, quad)
}

/// Both sides of the calculus identity with truncation strength `k`.
pub fn lemma_identity_k(x: f64, p: f64, k: f64, quad: &Quadrature) -> Result<IdentityCheck> {
    if !(x <= 0.0) || !(p > 0.0 && p < k) {
        return Err(Error::Domain(format!("identity needs x <= 0 and 0 < p < {k}, got x = {x}, p = {p}")));
    }
    let truncation = -x + (1.0 / IDENTITY_TAIL).ln() / (k - p);
    let kink = -x;
    let integral = quad.integrate(|s| (p * s - k * (x + s).max(0.0)).exp(), 0.0, truncation, &[kink])?;
    let lhs = integral.value + 1.0 / p;
    let c_p = identity_constant(p, k);
    let rhs = c_p * (-p * x).exp();
    Ok(IdentityCheck { x, p, lhs, rhs, c_p, truncation, relative_residual: (lhs - rhs).abs() / rhs })
}

/// Identity residuals over `xs x ps`.
pub fn identity_grid(xs: &[f64], ps: &[f64], quad: &Quadrature) -> Result<Vec<IdentityCheck>> {
    xs.iter()
        .flat_map(|&x| ps.iter().map(move |&p| (x, p)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(x, p)| lemma_identity(x, p, quad))
        .collect()
}

/// `log N(s)` for the monomial `z^m` and truncation strength `k`.
///
/// With `r = e^{-u}` the integrand is `e^{-(2m+2+g) u} smooth(e^{-u}) e^{-k max(s - c u, 0)}`,
/// kinked at `u = s / c`; its largest exponent is factored out before integrating.
pub fn log_model_dual_norm(w: &ModelWeight, m: u32, s: f64, k: f64, quad: &Quadrature) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("s = {s} must be nonnegative")));
    }
    let a = 2.0 * m as f64 + 2.0 + w.phi.origin_power();
    let kink = s / w.c;
    let peak = (-a * kink).max(-k * s);
    let upper = kink + 45.0 / a;
    let mut breaks = vec![kink];
    breaks.extend(w.phi.kinks().iter().filter(|&&r| r > 0.0).map(|r| -r.ln()));
    let exponent = |u: f64| -a * u - k * (s - w.c * u).max(0.0) - peak;
    let r = quad.integrate(|u| (exponent(u)).exp() * w.phi.smooth_factor((-u).exp()), 0.0, upper, &breaks)?;
    Ok((2.0 * std::f64::consts::PI * r.value).ln() + peak)
}

/// `||z^m||^2_{-s}` with the factor-2 truncation, on `s_grid`.
pub fn model_dual_norms(w: &ModelWeight, m: u32, s_grid: &[f64], quad: &Quadrature) -> Result<Vec<f64>> {
    s_grid
        .par_iter()
        .map(|&s| log_model_dual_norm(w, m, s, 2.0, quad).map(f64::exp))
        .collect()
}

/// `int |z|^{2m} e^{-phi - p psi} dA`, finite for `p < p_max`.
pub fn direct_integral(w: &ModelWeight, m: u32, p: f64, quad: &Quadrature) -> Result<f64> {
    let gamma = 2.0 * m as f64 + 1.0 + w.phi.origin_power() - p * w.c;
    let r = quad.integrate_power(gamma, |r| w.phi.smooth_factor(r), &w.phi.kinks())?;
    Ok(2.0 * std::f64::consts::PI * r.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionCheck {
    pub p: f64,
    pub strength: f64,
    /// `C_{p,K} int |z|^{2m} e^{-phi - p psi} dA`.
    pub direct: f64,
    /// `int_0^S N(s) e^{ps} ds + N(0) / p`.
    pub reduced: f64,
    pub truncation: f64,
    pub relative_residual: f64,
}

/// Both sides of the reduction identity; needs `p < min(p_max, k)`.
pub fn reduction_check(w: &ModelWeight, m: u32, p: f64, k: f64, quad: &Quadrature) -> Result<ReductionCheck> {
    let beta = w.p_max(m).min(k);
    if !(p > 0.0 && p < beta) {
        return Err(Error::Domain(format!("reduction needs 0 < p < {beta}, got {p}")));
    }
    let truncation = (1.0 / IDENTITY_TAIL).ln() / (beta - p);
    let outer = Quadrature { rel_tol: 1e-10, ..*quad };
    // The integrand behaves like e^{(p - beta) s} up to polynomial factors.
    let integral = outer.integrate(
        |s| log_model_dual_norm(w, m, s, k, quad).map(|l| (l + p * s).exp()).unwrap_or(f64::NAN),
        0.0,
        truncation,
        &[],
    )?;
    if !integral.value.is_finite() {
        return Err(Error::QuadratureFailure { estimate: f64::INFINITY, tolerance: outer.rel_tol });
    }
    let n0 = log_model_dual_norm(w, m, 0.0, k, quad)?.exp();
    let reduced = integral.value + n0 / p;
    let direct = identity_constant(p, k) * direct_integral(w, m, p, quad)?;
    Ok(ReductionCheck {
        p,
        strength: k,
        direct,
        reduced,
        truncation,
        relative_residual: (direct - reduced).abs() / direct,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub p: f64,
    pub verdict: Integrability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    /// Worst relative increase of `N(s)` between grid neighbours.
    pub monotone_violation: f64,
    /// Worst `log N(mid) - mean(log N(ends))`; positive where `log N` is not convex.
    pub log_convexity_defect: f64,
    /// Worst `mean(log N(ends)) - log N(mid)`; nonpositive when `log N` is concave.
    pub log_concavity_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessDemo {
    pub c: f64,
    pub m: u32,
    pub p_max_closed_form: f64,
    /// Decay exponent of the scalar family, measured by tail fit.
    pub p_max: f64,
    pub strength: f64,
    pub probes: Vec<Probe>,
    pub endpoint: Probe,
    pub reductions: Vec<ReductionCheck>,
    pub shape: ShapeReport,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessConfig {
    /// Length of the `s` range used for the tail fit.
    pub s_max: f64,
    pub grid_points: usize,
    /// Probes at `p_max - d` and `p_max + d` for each `d`.
    pub offsets: [f64; 3],
    /// Interior fractions of `p_max` at which the reduction identity is checked.
    pub reduction_fractions: [f64; 3],
}

impl Default for OpennessConfig {
    fn default() -> Self {
        OpennessConfig {
            s_max: 200.0,
            grid_points: DEFAULT_GRID_POINTS,
            offsets: [0.05, 0.1, 0.5],
            reduction_fractions: [0.25, 0.5, 0.75],
        }
    }
}

/// Scalar family `s -> N(s)` as a one-dimensional dual family: the metric is `1 / N`.
fn scalar_family(w: &ModelWeight, m: u32, k: f64, cfg: &OpennessConfig, quad: &Quadrature) -> Result<(MetricFamily, Vec<f64>)> {
    // Keep -log N within the exponent range accepted by generated families.
    let s_max = cfg.s_max.min(SCALAR_EXPONENT_BUDGET / k);
    let grid = closed_grid(0.0, s_max, cfg.grid_points + 1);
    let logs = grid
        .par_iter()
        .map(|&s| log_model_dual_norm(w, m, s, k, quad))
        .collect::<Result<Vec<_>>>()?;
    let profile = ScalarProfile::Tabulated { grid: grid.clone(), values: logs.iter().map(|l| -l).collect() };
    Ok((MetricFamily::diagonal(vec![profile], s_max)?, logs))
}

fn shape(logs: &[f64]) -> ShapeReport {
    let monotone_violation = logs.windows(2).map(|w| (w[1] - w[0]).exp_m1()).fold(0.0, f64::max);
    let defects: Vec<f64> = logs.windows(3).map(|w| w[1] - 0.5 * (w[0] + w[2])).collect();
    ShapeReport {
        monotone_violation,
        log_convexity_defect: defects.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        log_concavity_defect: defects.iter().map(|d| -d).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Measures `p_max` as the decay exponent of the scalar family, doubling the
/// truncation strength while the exponent is capped by it.
pub fn openness_interval(w: &ModelWeight, m: u32, cfg: &OpennessConfig, quad: &Quadrature) -> Result<OpennessDemo> {
    let mut k = 2.0;
    let one = FiberVector::from_real(&[1.0]);
    loop {
        let (fam, logs) = scalar_family(w, m, k, cfg, quad)?;
        let probe = DirectionProbe::new(&fam, TailFit::default())?;
        let measured = probe.decay_exponent(&one);
        let capped = match &measured {
            Ok(r) => r.exponent > k - STRENGTH_MARGIN,
            Err(Error::NonConvergent { .. }) => true,
            Err(e) => return Err(e.clone()),
        };
        if capped {
            if 2.0 * k > MAX_STRENGTH {
                return Err(measured.err().unwrap_or(Error::NonConvergent {
                    what: "openness threshold (capped by truncation strength)".into(),
                    drift: f64::INFINITY,
                    tol: STRENGTH_MARGIN,
                }));
            }
            k *= 2.0;
            continue;
        }
        let beta = measured?.exponent;
        let mut probes = Vec::new();
        for d in cfg.offsets {
            for p in [beta - d, beta + d] {
                probes.push(Probe { p, verdict: probe.integrability_test(&one, p)?.verdict });
            }
        }
        probes.sort_by(|a, b| a.p.total_cmp(&b.p));
        let endpoint = Probe { p: beta, verdict: classify(beta, beta) };
        let reductions = cfg
            .reduction_fractions
            .iter()
            .map(|f| reduction_check(w, m, f * beta, k, quad))
            .collect::<Result<Vec<_>>>()?;
        let pass = endpoint.verdict != Integrability::Finite
            && probes.iter().all(|pr| {
                if pr.p < beta {
                    pr.verdict == Integrability::Finite
                } else {
                    pr.verdict == Integrability::Infinite
                }
            });
        return Ok(OpennessDemo {
            c: w.c,
            m,
            p_max_closed_form: w.p_max(m),
            p_max: beta,
            strength: k,
            probes,
            endpoint,
            reductions,
            shape: shape(&logs),
            pass,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q() -> Quadrature {
        Quadrature::with_rel_tol(MODEL_REL_TOL)
    }

    #[test]
    fn identity_anchors() {
        let r = lemma_identity(0.0, 1.0, &q()).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-9 && r.c_p == 2.0);
        let r = lemma_identity(-1.0, 1.0, &q()).unwrap();
        assert!((r.lhs - 2.0 * 1f64.exp()).abs() < 1e-8);
        let scaled: Vec<f64> = [0.0, -0.5, -1.0, -2.0]
            .iter()
            .map(|&x| lemma_identity(x, 0.7, &q()).unwrap().lhs * (0.7 * x).exp())
            .collect();
        assert!(scaled.iter().all(|v| (v - scaled[0]).abs() < 1e-8 * scaled[0]));
        assert!(matches!(lemma_identity(0.5, 1.0, &q()), Err(Error::Domain(_))));
        assert!(matches!(lemma_identity(0.0, 2.0, &q()), Err(Error::Domain(_))));
    }

    #[test]
    fn generalized_constant() {
        let r = lemma_identity_k(-0.3, 3.0, 8.0, &q()).unwrap();
        assert!(r.relative_residual < 1e-10);
    }

    #[test]
    fn model_norm_examples() {
        let w = ModelWeight::log_pole(1.0).unwrap();
        let n = model_dual_norms(&w, 0, &[0.0], &q()).unwrap();
        assert!((n[0] - PI).abs() < 1e-10);
        let n = model_dual_norms(&w, 1, &[0.0], &q()).unwrap();
        assert!((n[0] - PI / 2.0).abs() < 1e-10);
        // c = 1, m = 0, K = 2: N(s) = 2 pi e^{-2s} (1/2 + s)
        for s in [0.5, 3.0, 30.0] {
            let l = log_model_dual_norm(&w, 0, s, 2.0, &q()).unwrap();
            let exact = (2.0 * PI).ln() - 2.0 * s + (0.5 + s).ln();
            assert!((l - exact).abs() < 1e-10, "s = {s}");
        }
    }

    #[test]
    fn reduction_identity() {
        let w = ModelWeight::log_pole(1.0).unwrap();
        let r = reduction_check(&w, 0, 1.0, 4.0, &q()).unwrap();
        assert!(r.relative_residual < 1e-8, "{r:?}");
        let w = ModelWeight::new(RadialProfile::Quadratic { a: 1.0 }, 1.0).unwrap();
        let r = reduction_check(&w, 1, 1.3, 2.0, &q()).unwrap();
        assert!(r.relative_residual < 1e-8, "{r:?}");
    }

    #[test]
    fn openness_examples() {
        let cfg = OpennessConfig::default();
        for (c, m, expect) in [(1.0, 0, 2.0), (1.0, 1, 4.0), (2.0, 0, 1.0)] {
            let w = ModelWeight::log_pole(c).unwrap();
            let r = openness_interval(&w, m, &cfg, &q()).unwrap();
            assert!((r.p_max - expect).abs() < 1e-2, "{r:?}");
            assert!(r.pass, "{r:?}");
            assert!(r.shape.monotone_violation <= 0.0);
            assert!(r.shape.log_concavity_defect <= 1e-12, "{:?}", r.shape);
        }
    }
}
