//! Radial weight profiles `phi(r)` on the closed unit disk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RadialProfile {
    Zero,
    Constant { value: f64 },
    /// `a r^2`.
    Quadratic { a: f64 },
    /// `-2 a log r`, so `e^{-phi} = r^{2a}`.
    LogPole { a: f64 },
    /// `min(-log(1 - r^2), cap)`.
    LogBoundary { cap: f64 },
    /// Natural cubic spline through `(r_i, phi_i)`; `r` must cover `[0, 1]`.
    Tabulated { r: Vec<f64>, phi: Vec<f64> },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::schema("weight", m));
        match self {
            RadialProfile::Zero => Ok(()),
            RadialProfile::Constant { value } | RadialProfile::Quadratic { a: value } if !value.is_finite() => {
                bad("parameter must be finite".into())
            }
            RadialProfile::LogPole { a } if !(a.is_finite() && *a > -1.0) => bad(format!("log pole a = {a} makes e^-phi non-integrable")),
            RadialProfile::LogBoundary { cap } if !(cap.is_finite() && *cap > 0.0) => bad(format!("cap = {cap} must be positive")),
            RadialProfile::Tabulated { r, phi } => {
                if r.len() != phi.len() || r.len() < 2 {
                    return bad("tabulated weight needs matching r and phi with at least 2 samples".into());
                }
                if r[0] != 0.0 || r[r.len() - 1] < 1.0 || r.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated r must start at 0, increase strictly and reach 1".into());
                }
                if phi.iter().any(|x| !x.is_finite()) {
                    return bad("tabulated phi must be finite".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `phi(r)`; `+inf` at the pole of [`RadialProfile::LogPole`].
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::Constant { value } => *value,
            RadialProfile::Quadratic { a } => a * r * r,
            RadialProfile::LogPole { a } => -2.0 * a * r.ln(),
            RadialProfile::LogBoundary { cap } => (-(-r * r).ln_1p()).min(*cap),
            RadialProfile::Tabulated { r: rs, phi } => spline(rs, phi, r),
        }
    }

    /// Exponent `g` with `e^{-phi(r)} = r^g * smooth(r)`.
    pub fn origin_power(&self) -> f64 {
        match self {
            RadialProfile::LogPole { a } => 2.0 * a,
            _ => 0.0,
        }
    }

    /// `e^{-phi(r)} / r^g`, bounded near the origin.
    pub fn smooth_factor(&self, r: f64) -> f64 {
        match self {
            RadialProfile::LogPole { .. } => 1.0,
            _ => (-self.eval(r)).exp(),
        }
    }

    /// Radii where `phi` is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            RadialProfile::LogBoundary { cap } => vec![(-(-cap).exp_m1()).sqrt()],
            RadialProfile::Tabulated { r, .. } => r.clone(),
            _ => Vec::new(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, RadialProfile::LogPole { a } if *a != 0.0)
    }
}

/// Natural cubic spline evaluation (second derivatives solved per call; tables are small).
fn spline(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 2 {
        let s = (x - xs[0]) / (xs[1] - xs[0]);
        return ys[0] + s * (ys[1] - ys[0]);
    }
    let mut m = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
        c[i] = h1 / diag;
        d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    let k = xs.partition_point(|&t| t <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let h = x1 - x0;
    let (a, b) = ((x1 - x) / h, (x - x0) / h);
    a * ys[k - 1] + b * ys[k] + ((a * a * a - a) * m[k - 1] + (b * b * b - b) * m[k]) * h * h / 6.0
}
