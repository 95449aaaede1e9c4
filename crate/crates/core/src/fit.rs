//! Asymptotic slope estimation for `t -> log ||u||^2_t` style curves.
//!
//! The estimator is a least-squares slope over the last part of the trusted range,
//! cross-checked by the median of the secant slopes in the same window and by the
//! drift between the two halves of the window. Samples can be marked untrusted
//! (their value sits at the rounding floor); the window then ends at the first
//! untrusted sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    None,
    /// Aitken extrapolation of three consecutive sub-window slopes, removing the
    /// leading geometric correction.
    Aitken,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Window is `[start_fraction * horizon, horizon]`.
    pub start_fraction: f64,
    /// Samples taken by callers that build their own grid.
    pub points: usize,
    /// Maximal tolerated drift of the slope across the window.
    pub tol: f64,
    /// A sample is trusted when its value exceeds the rounding floor by this factor.
    pub trust_ratio: f64,
    /// Shortest acceptable horizon.
    pub min_horizon: f64,
    pub refinement: Refinement,
}

impl Default for TailFit {
    fn default() -> Self {
        TailFit {
            start_fraction: 0.5,
            points: 96,
            tol: 1e-3,
            trust_ratio: 1e4,
            min_horizon: 1.0,
            refinement: Refinement::None,
        }
    }
}

impl TailFit {
    /// Settings for dual-norm decay curves, whose trusted horizon can be short.
    pub fn decay() -> Self {
        TailFit {
            tol: 5e-2,
            refinement: Refinement::Aitken,
            ..TailFit::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// `[t_start, t_end]` of the window used.
    pub window: (f64, f64),
    /// Max deviation of the samples from the fitted line in the window.
    pub residual: f64,
    pub median_slope: f64,
    /// Slope change between the halves of the window.
    pub drift: f64,
    /// Last trusted `t`.
    pub horizon: f64,
}

/// Least-squares line `(slope, intercept)`.
pub fn lsq_line(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mt)
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Tail slope of `ys` over `ts` (ascending). `trusted[i] == false` truncates the
/// usable range before index `i`.
pub fn fit_tail(ts: &[f64], ys: &[f64], trusted: Option<&[bool]>, cfg: &TailFit) -> Result<TailEstimate> {
    if ts.len() != ys.len() || ts.len() < 4 {
        return Err(Error::Domain("tail fit needs at least 4 samples".into()));
    }
    let last = match trusted {
        Some(mask) => mask.iter().position(|&ok| !ok).unwrap_or(ts.len()),
        None => ts.len(),
    };
    let finite_end = ys[..last].iter().position(|y| !y.is_finite()).unwrap_or(last);
    let end = finite_end;
    if end < 4 {
        return Err(Error::NonConvergent {
            what: "tail fit (no trusted samples)".into(),
            drift: f64::INFINITY,
            tol: cfg.tol,
        });
    }
    let horizon = ts[end - 1];
    if horizon < cfg.min_horizon {
        return Err(Error::NonConvergent {
            what: format!("tail fit (trusted horizon {horizon:.3} too short)"),
            drift: f64::INFINITY,
            tol: cfg.tol,
        });
    }
    let t_start = cfg.start_fraction * horizon;
    let begin = ts[..end].partition_point(|&t| t < t_start).min(end.saturating_sub(6));
    let (wt, wy) = (&ts[begin..end], &ys[begin..end]);
    let (slope, intercept) = lsq_line(wt, wy);
    let residual = wt
        .iter()
        .zip(wy)
        .map(|(t, y)| (y - slope * t - intercept).abs())
        .fold(0.0, f64::max);
    let mut secants: Vec<f64> = wt
        .windows(2)
        .zip(wy.windows(2))
        .map(|(t, y)| (y[1] - y[0]) / (t[1] - t[0]))
        .collect();
    let median_slope = median(&mut secants);
    let half = wt.len() / 2;
    let s1 = lsq_line(&wt[..half], &wy[..half]).0;
    let s2 = lsq_line(&wt[half..], &wy[half..]).0;

    let (estimate, drift) = match cfg.refinement {
        Refinement::None => (slope, (s2 - s1).abs()),
        Refinement::Aitken => aitken(wt, wy),
    };
    if !(drift <= cfg.tol) {
        return Err(Error::NonConvergent {
            what: "tail slope".into(),
            drift,
            tol: cfg.tol,
        });
    }
    Ok(TailEstimate {
        slope: estimate,
        intercept,
        window: (wt[0], wt[wt.len() - 1]),
        residual,
        median_slope,
        drift,
        horizon,
    })
}

/// Three-window Aitken extrapolation. Returns the estimate and the size of the
/// remaining change (the correction applied, or the raw last-window change when
/// the windows do not converge geometrically).
fn aitken(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = ts.len() / 3;
    if k < 2 {
        let s = lsq_line(ts, ys).0;
        return (s, 0.0);
    }
    let s1 = lsq_line(&ts[..k], &ys[..k]).0;
    let s2 = lsq_line(&ts[k..2 * k], &ys[k..2 * k]).0;
    let s3 = lsq_line(&ts[2 * k..], &ys[2 * k..]).0;
    let d1 = s2 - s1;
    let d2 = s3 - s2;
    // Ratios near one amplify noise instead of removing a correction.
    let geometric = d1 != 0.0 && d1.signum() == d2.signum() && d2.abs() < 0.8 * d1.abs();
    if geometric {
        let ratio = d2 / d1;
        let correction = d2 * ratio / (1.0 - ratio);
        (s3 + correction, correction.abs())
    } else {
        (s3, d2.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_line() {
        let ts = grid(0.0, 100.0, 50);
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * t + 1.0).collect();
        let est = fit_tail(&ts, &ys, None, &TailFit::default()).unwrap();
        assert!((est.slope - 2.0).abs() < 1e-12);
        assert!(est.drift < 1e-12);
        assert_eq!(est.window.1, 100.0);
    }

    #[test]
    fn log_sum_exp_converges_to_max_slope() {
        // log(1 + e^t) -> slope 1
        let ts = grid(0.0, 60.0, 200);
        let ys: Vec<f64> = ts.iter().map(|&t: &f64| t.exp().ln_1p()).collect();
        let est = fit_tail(&ts, &ys, None, &TailFit::default()).unwrap();
        assert!((est.slope - 1.0).abs() < 1e-10);
    }

    #[test]
    fn drifting_slope_is_non_convergent() {
        let ts = grid(0.0, 20.0, 100);
        let ys: Vec<f64> = ts.iter().map(|t| t * t).collect();
        assert!(matches!(
            fit_tail(&ts, &ys, None, &TailFit::default()),
            Err(Error::NonConvergent { .. })
        ));
    }

    #[test]
    fn trust_mask_cuts_the_window() {
        let ts = grid(0.0, 100.0, 101);
        let ys: Vec<f64> = ts.iter().map(|&t| if t <= 40.0 { -t } else { 5.0 * t }).collect();
        let mask: Vec<bool> = ts.iter().map(|&t| t <= 40.0).collect();
        let est = fit_tail(&ts, &ys, Some(&mask), &TailFit::default()).unwrap();
        assert!((est.slope + 1.0).abs() < 1e-12);
        assert_eq!(est.horizon, 40.0);
    }

    #[test]
    fn aitken_removes_geometric_correction() {
        // log(e^{-t} + 3 e^{-1.5 t}): slope -> -1 with correction ~ e^{-0.5 t}
        let ts = grid(0.0, 16.0, 161);
        let ys: Vec<f64> = ts.iter().map(|&t| -t + (3.0 * (-0.5 * t).exp()).ln_1p()).collect();
        let plain = fit_tail(&ts, &ys, None, &TailFit { tol: 1.0, ..TailFit::default() }).unwrap();
        let refined = fit_tail(&ts, &ys, None, &TailFit::decay()).unwrap();
        assert!((refined.slope + 1.0).abs() < (plain.slope + 1.0).abs());
        assert!((refined.slope + 1.0).abs() < 1e-3);
    }
}
