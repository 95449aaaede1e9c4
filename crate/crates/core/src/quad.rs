//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals with forced
//! breakpoints, for real and complex integrands.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::hermitian::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: real or complex.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    /// Target relative error.
    pub rel_tol: f64,
    /// Absolute error below which any result is accepted.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { rel_tol: 1e-12, abs_tol: 0.0, max_panels: 4000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn kronrod<T: Integrand>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> Panel<T> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        k = k + pair * WGK[i];
        if i % 2 == 1 {
            g = g + pair * WG[i / 2];
        }
    }
    Panel { a, b, value: k * h, error: ((k - g) * h).magnitude() }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Quadrature { rel_tol, ..Quadrature::default() }
    }

    /// `int_a^b f` with panel boundaries forced at `breaks` (those inside `(a, b)`).
    pub fn integrate<T: Integrand>(&self, f: impl Fn(f64) -> T, a: f64, b: f64, breaks: &[f64]) -> Result<QuadResult<T>> {
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(Error::Domain(format!("quadrature interval [{a}, {b}]")));
        }
        if a == b {
            return Ok(QuadResult { value: T::zero(), error: 0.0 });
        }
        let mut cuts = vec![a];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        cuts.extend(inner);
        cuts.push(b);
        let mut panels: Vec<Panel<T>> = cuts.windows(2).map(|w| kronrod(&f, w[0], w[1])).collect();
        loop {
            let value = panels.iter().fold(T::zero(), |s, p| s + p.value);
            let error: f64 = panels.iter().map(|p| p.error).sum();
            let target = self.abs_tol.max(self.rel_tol * value.magnitude());
            if error <= target {
                return Ok(QuadResult { value, error });
            }
            if panels.len() >= self.max_panels {
                let scale = value.magnitude();
                return Err(Error::QuadratureFailure {
                    estimate: if scale > 0.0 { error / scale } else { error },
                    tolerance: self.rel_tol,
                });
            }
            let worst = panels
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let p = panels.swap_remove(worst);
            let mid = 0.5 * (p.a + p.b);
            if mid <= p.a || mid >= p.b {
                return Err(Error::QuadratureFailure { estimate: error / value.magnitude(), tolerance: self.rel_tol });
            }
            panels.push(kronrod(&f, p.a, mid));
            panels.push(kronrod(&f, mid, p.b));
        }
    }

    /// `int_0^1 r^gamma g(r) dr` for `gamma > -1`, after the substitution
    /// `r = u^q`, `q = 1 / (gamma + 1)`, which removes the power singularity.
    pub fn integrate_power(&self, gamma: f64, g: impl Fn(f64) -> f64, breaks: &[f64]) -> Result<QuadResult<f64>> {
        if !(gamma > -1.0) {
            return Err(Error::Domain(format!("power {gamma} is not integrable at 0")));
        }
        let q = 1.0 / (gamma + 1.0);
        let ubreaks: Vec<f64> = breaks.iter().map(|&r| r.powf(1.0 / q)).collect();
        self.integrate(|u| q * g(u.powf(q)), 0.0, 1.0, &ubreaks)
    }
}
