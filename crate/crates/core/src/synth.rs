//! Seeded random generated families with known jumping numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::family::{Block, MetricFamily};
use crate::hermitian::{orthonormal_columns, CMatrix, CVector, C64};
use crate::profile::ScalarProfile;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub dims: &'static [usize],
    pub exponent_range: (f64, f64),
    pub min_separation: f64,
    pub t_max: f64,
    /// Probability of an extra rank-one block with a strictly smaller slope.
    pub extra_block_probability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dims: &[2, 3, 4],
            exponent_range: (-3.0, 3.0),
            min_separation: 0.2,
            t_max: 200.0,
            extra_block_probability: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthFamily {
    pub family: MetricFamily,
    /// Construction exponents, ascending.
    pub alphas: Vec<f64>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-distributed `n x k` isometry from the QR factor of a complex Gaussian matrix.
pub fn random_isometry<R: Rng>(rng: &mut R, n: usize, k: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, k, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    orthonormal_columns(&g)
}

/// Ascending exponents with pairwise gaps of at least `sep`, by rejection.
pub fn separated_exponents<R: Rng>(rng: &mut R, n: usize, range: (f64, f64), sep: f64) -> Vec<f64> {
    loop {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(range.0..range.1)).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[1] - w[0] >= sep) {
            return xs;
        }
    }
}

/// Convex profile with asymptotic slope `alpha`, drawn from the catalog.
pub fn random_profile<R: Rng>(rng: &mut R, alpha: f64) -> ScalarProfile {
    let intercept = rng.random_range(-1.0..1.0);
    match rng.random_range(0..4) {
        0 => ScalarProfile::linear(alpha, intercept),
        1 => ScalarProfile::ExpAsymptote {
            slope: alpha,
            intercept,
            coeff: rng.random_range(0.0..1.0),
            rate: rng.random_range(0.5..2.0),
        },
        2 => {
            let scale = rng.random_range(0.1..0.5);
            ScalarProfile::Hyperbolic { scale, slope: alpha - scale, intercept }
        }
        _ => ScalarProfile::SmoothMax {
            slope1: alpha,
            intercept1: intercept,
            slope2: alpha - rng.random_range(0.5..2.0),
            intercept2: rng.random_range(-1.0..2.0),
            sharpness: rng.random_range(1.0..3.0),
        },
    }
}

pub fn random_family<R: Rng>(rng: &mut R, cfg: &SynthConfig) -> Result<SynthFamily> {
    let n = cfg.dims[rng.random_range(0..cfg.dims.len())];
    let alphas = separated_exponents(rng, n, cfg.exponent_range, cfg.min_separation);
    let unitary = random_isometry(rng, n, n);
    let profiles = alphas.iter().map(|&a| random_profile(rng, a)).collect();
    let mut blocks = vec![Block::new(unitary, profiles)];
    // The extra slope stays within reach of double precision over [0, t_max].
    let floor = cfg.exponent_range.0 - 0.4;
    if rng.random_bool(cfg.extra_block_probability) && alphas[0] - 0.5 > floor {
        let gamma = rng.random_range((alphas[0] - 1.5).max(floor)..alphas[0] - 0.5);
        blocks.push(Block::new(random_isometry(rng, n, 1), vec![random_profile(rng, gamma)]));
    }
    Ok(SynthFamily { family: MetricFamily::generated(blocks, cfg.t_max)?, alphas })
}
