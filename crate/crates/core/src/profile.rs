//! Closed-form scalar exponent profiles `t -> phi(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probe count for [`ScalarProfile::convexity_defect`].
pub const CONVEXITY_PROBES: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ScalarProfile {
    /// `slope * t + intercept`
    Linear { slope: f64, intercept: f64 },
    /// `slope * t + intercept + coeff * exp(-rate * t)`, convex for `coeff >= 0`.
    ExpAsymptote {
        slope: f64,
        intercept: f64,
        coeff: f64,
        rate: f64,
    },
    /// `scale * sqrt(1 + t^2) + slope * t + intercept`
    Hyperbolic {
        #[serde(default = "one")]
        scale: f64,
        slope: f64,
        intercept: f64,
    },
    /// Log-sum-exp smoothing of `max(slope1 t + intercept1, slope2 t + intercept2)`.
    SmoothMax {
        slope1: f64,
        intercept1: f64,
        slope2: f64,
        intercept2: f64,
        sharpness: f64,
    },
    /// Piecewise linear through `(grid[i], values[i])`, linear extrapolation outside.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl ScalarProfile {
    pub fn linear(slope: f64, intercept: f64) -> Self {
        ScalarProfile::Linear { slope, intercept }
    }

    /// Samples `f` on `grid`.
    pub fn tabulate(grid: &[f64], f: impl Fn(f64) -> f64) -> Self {
        ScalarProfile::Tabulated {
            grid: grid.to_vec(),
            values: grid.iter().map(|&t| f(t)).collect(),
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            ScalarProfile::Linear { slope, intercept } => {
                if !finite(&[*slope, *intercept]) {
                    return Err(Error::schema(field, "non-finite parameter"));
                }
            }
            ScalarProfile::ExpAsymptote { slope, intercept, coeff, rate } => {
                if !finite(&[*slope, *intercept, *coeff, *rate]) || *rate <= 0.0 {
                    return Err(Error::schema(field, "rate must be positive and finite"));
                }
            }
            ScalarProfile::Hyperbolic { scale, slope, intercept } => {
                if !finite(&[*scale, *slope, *intercept]) {
                    return Err(Error::schema(field, "non-finite parameter"));
                }
            }
            ScalarProfile::SmoothMax { sharpness, .. } => {
                if !(*sharpness > 0.0) {
                    return Err(Error::schema(field, "sharpness must be positive"));
                }
            }
            ScalarProfile::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(Error::schema(field, "tabulated profile needs >= 2 matching samples"));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::schema(field, "tabulated grid must be strictly increasing"));
                }
                if !finite(values) {
                    return Err(Error::schema(field, "non-finite sample"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarProfile::Linear { slope, intercept } => slope * t + intercept,
            ScalarProfile::ExpAsymptote { slope, intercept, coeff, rate } => {
                slope * t + intercept + coeff * (-rate * t).exp()
            }
            ScalarProfile::Hyperbolic { scale, slope, intercept } => {
                scale * t.hypot(1.0) + slope * t + intercept
            }
            ScalarProfile::SmoothMax {
                slope1,
                intercept1,
                slope2,
                intercept2,
                sharpness,
            } => {
                let a = slope1 * t + intercept1;
                let b = slope2 * t + intercept2;
                let m = a.max(b);
                m + (-(sharpness * (a - b).abs())).exp().ln_1p() / sharpness
            }
            ScalarProfile::Tabulated { grid, values } => {
                let k = match grid.partition_point(|&g| g <= t) {
                    0 => 0,
                    i if i >= grid.len() => grid.len() - 2,
                    i => i - 1,
                };
                let w = (t - grid[k]) / (grid[k + 1] - grid[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// Largest midpoint-convexity defect `phi(mid) - (phi(a) + phi(b)) / 2` over
    /// consecutive triples of a uniform probe grid on `[0, t_max]`. Nonpositive
    /// (up to rounding) for convex profiles.
    pub fn convexity_defect(&self, t_max: f64) -> f64 {
        let n = CONVEXITY_PROBES;
        let h = t_max / (n - 1) as f64;
        let vals: Vec<f64> = (0..n).map(|i| self.eval(i as f64 * h)).collect();
        vals.windows(3)
            .map(|w| {
                let scale = 1.0 + w[1].abs();
                (w[1] - 0.5 * (w[0] + w[2])) / scale
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_convex(&self, t_max: f64) -> bool {
        self.convexity_defect(t_max) <= 1e-9
    }

    /// The profile plus `delta * t`.
    pub fn with_added_slope(&self, delta: f64) -> Self {
        let mut p = self.clone();
        match &mut p {
            ScalarProfile::Linear { slope, .. }
            | ScalarProfile::ExpAsymptote { slope, .. }
            | ScalarProfile::Hyperbolic { slope, .. } => *slope += delta,
            ScalarProfile::SmoothMax { slope1, slope2, .. } => {
                *slope1 += delta;
                *slope2 += delta;
            }
            ScalarProfile::Tabulated { grid, values } => {
                for (v, g) in values.iter_mut().zip(grid.iter()) {
                    *v += delta * g;
                }
            }
        }
        p
    }

    /// Largest `t` covered without extrapolation (infinite for closed forms).
    pub fn domain_end(&self) -> f64 {
        match self {
            ScalarProfile::Tabulated { grid, .. } => *grid.last().unwrap_or(&0.0),
            _ => f64::INFINITY,
        }
    }
}
