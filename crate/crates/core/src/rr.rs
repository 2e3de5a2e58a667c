//! Two-stage randomized response over a client's rated-item bit vector.
//!
//! The permanent stage flips each bit of `B` to a coin toss with probability
//! `f`, once per client lifetime. The instantaneous stage draws a fresh send
//! set `S` from `B'` every round with `P(S_j = 1) = q` if `B'_j = 1` and `p`
//! otherwise. Composed, a rated item is sent with probability `q★` and an
//! unrated one with `p★`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Per-client privacy budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    /// Permanent randomized response.
    pub eps_p: f64,
    /// Instantaneous randomized response (composite channel).
    pub eps_i: f64,
    /// Fake gradient values. `None` means no truncation (alpha = infinity).
    pub eps_g: Option<f64>,
}

impl PrivacyBudget {
    /// Budgets with the default coupling `eps_p = 2 * eps_i`.
    pub fn new(eps_i: f64, eps_p: Option<f64>, eps_g: Option<f64>) -> Result<Self> {
        let eps_p = eps_p.unwrap_or(2.0 * eps_i);
        for (name, v) in [("eps_I", Some(eps_i)), ("eps_P", Some(eps_p)), ("eps_g", eps_g)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
                }
            }
        }
        Ok(Self { eps_p, eps_i, eps_g })
    }
}

/// Calibrated randomized-response parameters of one client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RRParams {
    pub f: f64,
    pub p: f64,
    pub q: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub h: usize,
    pub z: f64,
}

impl RRParams {
    /// Parameters given directly rather than solved from budgets (used to
    /// switch privacy off with `f = 0, p = 0, q = 1`).
    pub fn fixed(f: f64, p: f64, q: f64, h: usize, n_items: usize) -> Result<Self> {
        for (name, v) in [("f", f), ("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} not in [0, 1]")));
            }
        }
        let (p_star, q_star) = effective_probs(f, p, q);
        Ok(Self {
            f,
            p,
            q,
            p_star,
            q_star,
            h,
            z: expected_sends(h, n_items, p_star, q_star),
        })
    }

    pub fn disabled(h: usize, n_items: usize) -> Self {
        Self::fixed(0.0, 0.0, 1.0, h, n_items).expect("valid probabilities")
    }
}

/// A client's rated/unrated indicator over the whole item universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitVector(Vec<bool>);

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![false; len];
        for i in ones {
            bits[i] = true;
        }
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

impl From<Vec<bool>> for BitVector {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

/// Inverse of [`epsilon_p_of`]: `f = 2 / (1 + exp(eps_p / 2h))`.
pub fn solve_f(eps_p: f64, h: usize) -> Result<f64> {
    if h == 0 {
        return Err(Error::NoRatings);
    }
    if !(eps_p > 0.0) {
        return Err(Error::InvalidParameter(format!("eps_P = {eps_p} must be > 0")));
    }
    Ok(2.0 / (1.0 + (eps_p / (2.0 * h as f64)).exp()))
}

/// `2h ln((1 - f/2) / (f/2))`.
pub fn epsilon_p_of(f: f64, h: usize) -> Result<f64> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InfiniteBudget { name: "f", value: f });
    }
    Ok(2.0 * h as f64 * ((2.0 - f) / f).ln())
}

/// `h ln(q★(1 - p★) / (p★(1 - q★)))`.
pub fn epsilon_i_of(p_star: f64, q_star: f64, h: usize) -> Result<f64> {
    for (name, v) in [("p_star", p_star), ("q_star", q_star)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InfiniteBudget { name, value: v });
        }
    }
    let log_ratio = q_star.ln() - p_star.ln() + (-p_star).ln_1p() - (-q_star).ln_1p();
    Ok(h as f64 * log_ratio)
}

/// Composite send probabilities `(p★, q★)` for unrated and rated items.
pub fn effective_probs(f: f64, p: f64, q: f64) -> (f64, f64) {
    let half = 0.5 * f;
    let keep = 1.0 - half;
    (half * q + keep * p, keep * q + half * p)
}

/// Expected messages per round: `h q★ + (n - h) p★`.
pub fn expected_sends(h: usize, n_items: usize, p_star: f64, q_star: f64) -> f64 {
    h as f64 * q_star + (n_items - h) as f64 * p_star
}

const BISECTION_EDGE: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Solves `(f, p, q)` so the composite channel is exactly `eps_i`-private and a
/// client with `h` rated items sends `z_target` messages per round on average.
pub fn calibrate(eps_i: f64, eps_p: f64, h: usize, n_items: usize, z_target: f64) -> Result<RRParams> {
    if h == 0 {
        return Err(Error::NoRatings);
    }
    if h > n_items {
        return Err(Error::InvalidParameter(format!("h = {h} exceeds {n_items} items")));
    }
    if !(eps_i > 0.0 && eps_i.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps_I = {eps_i} must be > 0")));
    }
    if !(z_target > 0.0 && z_target < n_items as f64) {
        return Err(Error::InvalidParameter(format!(
            "z = {z_target} must lie in (0, {n_items})"
        )));
    }
    // q★ as a function of p★ at fixed likelihood ratio r = exp(eps_i / h).
    let r_minus_1 = (eps_i / h as f64).exp_m1();
    let q_of = |ps: f64| (1.0 + r_minus_1) * ps / (1.0 + r_minus_1 * ps);
    let z_of = |ps: f64| expected_sends(h, n_items, ps, q_of(ps));

    let (mut lo, mut hi) = (BISECTION_EDGE, 1.0 - BISECTION_EDGE);
    let tol = 1e-9 * n_items as f64;
    let mut p_star = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        p_star = 0.5 * (lo + hi);
        let z = z_of(p_star);
        if z == z_target || hi - lo <= f64::EPSILON * p_star {
            break;
        }
        if z < z_target {
            lo = p_star;
        } else {
            hi = p_star;
        }
    }
    let q_star = q_of(p_star);
    let z = z_of(p_star);
    if (z - z_target).abs() > tol {
        return Err(Error::InfeasibleCalibration {
            bound: format!("expected sends {z} cannot reach {z_target}"),
            p: p_star,
            q: q_star,
        });
    }

    let f = solve_f(eps_p, h)?;
    let det = 1.0 - f;
    if det <= 0.0 {
        return Err(Error::DegenerateCalibration);
    }
    let (half, keep) = (0.5 * f, 1.0 - 0.5 * f);
    let p = (keep * p_star - half * q_star) / det;
    let q = (keep * q_star - half * p_star) / det;
    const SLACK: f64 = 1e-12;
    if p < -SLACK {
        return Err(Error::InfeasibleCalibration {
            bound: "p >= 0 violated".into(),
            p,
            q,
        });
    }
    if q > 1.0 + SLACK {
        return Err(Error::InfeasibleCalibration {
            bound: "q <= 1 violated".into(),
            p,
            q,
        });
    }
    Ok(RRParams {
        f,
        p: p.clamp(0.0, 1.0),
        q: q.clamp(0.0, 1.0),
        p_star,
        q_star,
        h,
        z,
    })
}

/// Permanent stage: each bit becomes 1 w.p. f/2, 0 w.p. f/2, and is kept
/// otherwise. One uniform draw per bit.
pub fn prr(bits: &BitVector, f: f64, rng: &mut StreamRng) -> BitVector {
    let half = 0.5 * f;
    BitVector(
        bits.0
            .iter()
            .map(|&b| {
                let u: f64 = rng.random();
                if u < half {
                    true
                } else if u < f {
                    false
                } else {
                    b
                }
            })
            .collect(),
    )
}

/// Instantaneous stage: a fresh send set for this round.
pub fn irr(bits: &BitVector, p: f64, q: f64, rng: &mut StreamRng) -> BitVector {
    BitVector(
        bits.0
            .iter()
            .map(|&b| rng.random::<f64>() < if b { q } else { p })
            .collect(),
    )
}

/// Per-item send frequency over the observed rounds.
pub fn average_attack(samples: &[BitVector]) -> Vec<f64> {
    assert!(!samples.is_empty(), "the attack needs at least one round");
    let n = samples[0].len();
    let mut freq = vec![0.0; n];
    for s in samples {
        for (acc, &b) in freq.iter_mut().zip(&s.0) {
            if b {
                *acc += 1.0;
            }
        }
    }
    let t = samples.len() as f64;
    freq.iter_mut().for_each(|x| *x /= t);
    freq
}

/// Labels an item rated when its frequency is above the midpoint of p★ and q★.
pub fn classify_attack(freq: &[f64], p_star: f64, q_star: f64) -> BitVector {
    let mid = 0.5 * (p_star + q_star);
    BitVector(freq.iter().map(|&x| x > mid).collect())
}
