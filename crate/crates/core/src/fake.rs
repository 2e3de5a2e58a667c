//! Fake prediction errors for unrated items.
//!
//! A client summarizes the errors on its rated items as N(μ, σ), picks a bound
//! `alpha` so that the mass of N(μ, σ) on `[-alpha, alpha]` equals
//! `exp(-eps_g)`, and draws fake errors from N(μ, σ) restricted to
//! `(-alpha, alpha)` by rejection.

use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Stand-in for σ when every observed error is identical.
pub const SIGMA_FLOOR: f64 = 1e-6;
pub const DEFAULT_DELTA: f64 = 1e-6;
pub const MAX_REJECTIONS: usize = 1_000_000;
const MAX_BISECTION: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mu: f64,
    /// Population standard deviation.
    pub sigma: f64,
    pub n: usize,
}

impl ErrorStats {
    /// σ with the degenerate case replaced by [`SIGMA_FLOOR`].
    pub fn sampling_sigma(&self) -> f64 {
        if self.sigma > 0.0 {
            self.sigma
        } else {
            SIGMA_FLOOR
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.sigma > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBound {
    pub alpha: f64,
    pub eps_g_achieved: f64,
    pub alpha_max: f64,
    /// The requested budget was below what `alpha_max` allows.
    pub clamped: bool,
    /// σ was zero and [`SIGMA_FLOOR`] was used instead.
    pub sigma_floored: bool,
}

impl AlphaBound {
    /// No truncation: every draw of N(μ, σ) is accepted.
    pub fn unbounded() -> Self {
        Self {
            alpha: f64::INFINITY,
            eps_g_achieved: 0.0,
            alpha_max: f64::INFINITY,
            clamped: false,
            sigma_floored: false,
        }
    }
}

pub fn error_stats(errors: &[f64]) -> Result<ErrorStats> {
    if errors.is_empty() {
        return Err(Error::InvalidParameter("error statistics need at least one value".into()));
    }
    let n = errors.len() as f64;
    let mu = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mu).powi(2)).sum::<f64>() / n;
    Ok(ErrorStats {
        mu,
        sigma: var.sqrt(),
        n: errors.len(),
    })
}

/// Probability mass of N(μ, σ) on `[-alpha, alpha]`.
pub fn coverage(alpha: f64, mu: f64, sigma: f64) -> f64 {
    if alpha.is_infinite() {
        return 1.0;
    }
    if sigma == 0.0 {
        return if mu.abs() < alpha { 1.0 } else { 0.0 };
    }
    let scale = sigma * std::f64::consts::SQRT_2;
    let lo = (-alpha - mu) / scale;
    let hi = (alpha - mu) / scale;
    // Subtract in the tail that keeps precision.
    let mass = if lo >= 0.0 {
        0.5 * (erfc(lo) - erfc(hi))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi) - erfc(-lo))
    } else {
        0.5 * (erf(hi) - erf(lo))
    };
    mass.clamp(0.0, 1.0)
}

/// `ln(1 / coverage)`.
pub fn epsilon_g_of(alpha: f64, mu: f64, sigma: f64) -> Result<f64> {
    let c = coverage(alpha, mu, sigma);
    if c <= 0.0 {
        return Err(Error::ZeroCoverage { alpha });
    }
    Ok(-c.ln())
}

/// Bisection on `(0, alpha_max)` for the bound whose budget lies in
/// `[eps_g - delta, eps_g]`, with `alpha_max = max(|μ+2σ|, |μ-2σ|)`.
/// Budgets below what `alpha_max` achieves are clamped to `alpha_max`.
pub fn solve_alpha(eps_g: f64, mu: f64, sigma: f64, delta: f64) -> Result<AlphaBound> {
    if !(eps_g > 0.0) || !(delta > 0.0) || !(sigma >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "solve_alpha needs eps_g > 0, delta > 0, sigma >= 0 (got {eps_g}, {delta}, {sigma})"
        )));
    }
    let sigma_floored = !(sigma > 0.0);
    let sigma = if sigma_floored { SIGMA_FLOOR } else { sigma };
    let alpha_max = (mu + 2.0 * sigma).abs().max((mu - 2.0 * sigma).abs());
    let bound = |alpha, eps_g_achieved, clamped| AlphaBound {
        alpha,
        eps_g_achieved,
        alpha_max,
        clamped,
        sigma_floored,
    };

    let eps_at_max = epsilon_g_of(alpha_max, mu, sigma)?;
    if eps_at_max >= eps_g - delta {
        return Ok(bound(alpha_max, eps_at_max, eps_at_max > eps_g));
    }
    let (mut lo, mut hi) = (0.0, alpha_max);
    let mut best = (alpha_max, eps_at_max);
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let eps = epsilon_g_of(mid, mu, sigma).unwrap_or(f64::INFINITY);
        if eps <= eps_g {
            best = (mid, eps);
            if eps >= eps_g - delta {
                break;
            }
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(bound(best.0, best.1, false))
}

/// Rejection-samples N(μ, σ) until the draw falls in `(-alpha, alpha)`.
pub fn sample_fake_error(mu: f64, sigma: f64, alpha: f64, rng: &mut StreamRng) -> Result<f64> {
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        let x = mu + sigma * z;
        if x > -alpha && x < alpha {
            return Ok(x);
        }
    }
    Err(Error::DegenerateBound {
        attempts: MAX_REJECTIONS,
        alpha,
        mu,
        sigma,
    })
}
