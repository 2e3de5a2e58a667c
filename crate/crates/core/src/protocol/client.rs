use log::warn;

use super::{FinishMessage, GradientMessage, Message};
use crate::error::{Error, Result};
use crate::fake::{self, AlphaBound, ErrorStats};
use crate::mf::{self, FactorMatrix, Hyperparams};
use crate::rng::{self, Purpose};
use crate::rr::{self, BitVector, PrivacyBudget, RRParams};

/// How a client obtains its randomized-response parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RrConfig {
    /// Solve `(f, p, q)` from budgets and a target number of sends per round.
    Calibrated { eps_i: f64, eps_p: f64, z_target: f64 },
    /// Use the given probabilities as-is.
    Fixed { f: f64, p: f64, q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyConfig {
    pub rr: RrConfig,
    /// Budget for fake error values; `None` disables truncation.
    pub eps_g: Option<f64>,
    /// Width of the acceptance band for the `alpha` search.
    pub delta: f64,
}

impl PrivacyConfig {
    pub fn from_budget(budget: &PrivacyBudget, z_target: f64) -> Self {
        Self {
            rr: RrConfig::Calibrated {
                eps_i: budget.eps_i,
                eps_p: budget.eps_p,
                z_target,
            },
            eps_g: budget.eps_g,
            delta: fake::DEFAULT_DELTA,
        }
    }

    /// Every rated item is sent every round and no fake gradient is ever built.
    pub fn disabled() -> Self {
        Self {
            rr: RrConfig::Fixed { f: 0.0, p: 0.0, q: 1.0 },
            eps_g: None,
            delta: fake::DEFAULT_DELTA,
        }
    }
}

/// Everything a client keeps locally.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub(crate) id: usize,
    pub(crate) u: Vec<f64>,
    pub(crate) ratings: Vec<(usize, f64)>,
    pub(crate) bits: BitVector,
    pub(crate) perturbed: BitVector,
    pub(crate) rr: RRParams,
    pub(crate) privacy: PrivacyConfig,
}

impl ClientState {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn user_factors(&self) -> &[f64] {
        &self.u
    }

    pub fn ratings(&self) -> &[(usize, f64)] {
        &self.ratings
    }

    pub fn rated(&self) -> &BitVector {
        &self.bits
    }

    pub fn perturbed(&self) -> &BitVector {
        &self.perturbed
    }

    pub fn rr_params(&self) -> &RRParams {
        &self.rr
    }

    pub fn privacy(&self) -> &PrivacyConfig {
        &self.privacy
    }

    pub fn h(&self) -> usize {
        self.ratings.len()
    }

    pub fn n_items(&self) -> usize {
        self.bits.len()
    }
}

/// A client's traffic for one round plus what it computed locally.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    /// Gradient messages in item order, then exactly one finish.
    pub messages: Vec<Message>,
    pub alpha: AlphaBound,
    pub stats: Option<ErrorStats>,
    /// Selected items for which no delta could be produced.
    pub skipped: usize,
}

impl RoundOutput {
    pub fn gradient_count(&self) -> usize {
        self.messages.iter().filter(|m| m.is_gradient()).count()
    }
}

/// Round-zero setup: user factors, PRR and the IRR probabilities.
pub fn client_init(
    id: usize,
    ratings: &[(usize, f64)],
    n_items: usize,
    hp: &Hyperparams,
    privacy: &PrivacyConfig,
) -> Result<ClientState> {
    let wrap = |source| Error::Client {
        client: id,
        source: Box::new(source),
    };
    let h = ratings.len();
    if h == 0 {
        return Err(wrap(Error::NoRatings));
    }
    if let Some(&(j, _)) = ratings.iter().find(|(j, _)| *j >= n_items) {
        return Err(wrap(Error::InvalidDataset(format!(
            "item {j} outside {n_items} items"
        ))));
    }
    let rr = match privacy.rr {
        RrConfig::Calibrated {
            eps_i,
            eps_p,
            z_target,
        } => rr::calibrate(eps_i, eps_p, h, n_items, z_target).map_err(wrap)?,
        RrConfig::Fixed { f, p, q } => RRParams::fixed(f, p, q, h, n_items).map_err(wrap)?,
    };
    let mut u = vec![0.0; hp.k];
    mf::init_user_row(&mut u, id, hp);
    let bits = BitVector::from_indices(n_items, ratings.iter().map(|&(j, _)| j));
    let mut prr_rng = rng::stream(hp.seed, Purpose::Prr, id as u64, 0);
    let perturbed = rr::prr(&bits, rr.f, &mut prr_rng);
    let mut ratings = ratings.to_vec();
    ratings.sort_by_key(|&(j, _)| j);
    Ok(ClientState {
        id,
        u,
        ratings,
        bits,
        perturbed,
        rr,
        privacy: *privacy,
    })
}

impl ClientState {
    /// One round: update `u` locally and emit item deltas for the send set.
    ///
    /// Deltas are computed from the `u` held at the start of the round; the
    /// averaged user delta is applied last.
    pub fn iterate(&mut self, items: &FactorMatrix, t: usize, hp: &Hyperparams) -> Result<RoundOutput> {
        if items.rows() != self.n_items() || items.k() != hp.k {
            return Err(Error::DimensionMismatch {
                expected: self.n_items() * hp.k,
                actual: items.rows() * items.k(),
            });
        }
        let eta = mf::learning_rate(t, hp);
        let mut noise_rng = rng::stream(hp.seed, Purpose::Noise, self.id as u64, t as u64);
        let mut privacy_rng = rng::stream(hp.seed, Purpose::Privacy, self.id as u64, t as u64);

        let errors: Vec<f64> = self
            .ratings
            .iter()
            .map(|&(j, r)| r - mf::dot(&self.u, items.row(j)))
            .collect();
        let mut user_sum = vec![0.0; hp.k];
        for (&(j, _), &e) in self.ratings.iter().zip(&errors) {
            let d = mf::user_step(&self.u, e, items.row(j), eta, hp, &mut noise_rng);
            mf::add_into(&mut user_sum, &d.0);
        }

        let stats = fake::error_stats(&errors)?;
        let alpha = match self.privacy.eps_g {
            Some(eps_g) => fake::solve_alpha(eps_g, stats.mu, stats.sigma, self.privacy.delta)?,
            None => AlphaBound::unbounded(),
        };
        let sigma = stats.sampling_sigma();

        let send = rr::irr(&self.perturbed, self.rr.p, self.rr.q, &mut privacy_rng);
        let mut messages = Vec::new();
        let mut skipped = 0;
        let mut rated = self.ratings.iter().zip(&errors).peekable();
        for j in 0..self.n_items() {
            while rated.peek().is_some_and(|((jr, _), _)| *jr < j) {
                rated.next();
            }
            if !send.get(j) {
                continue;
            }
            let e = match rated.peek() {
                Some(((jr, _), &e)) if *jr == j => e,
                _ => match fake::sample_fake_error(stats.mu, sigma, alpha.alpha, &mut privacy_rng) {
                    Ok(e) => e,
                    Err(err) => {
                        warn!("client {}: item {j} skipped: {err}", self.id);
                        skipped += 1;
                        continue;
                    }
                },
            };
            let delta = mf::item_step(items.row(j), e, &self.u, eta, hp, &mut noise_rng);
            messages.push(Message::Gradient(GradientMessage {
                item: j as u32,
                delta: delta.0,
            }));
        }
        messages.push(Message::Finish(FinishMessage {
            client: self.id as u32,
        }));
        mf::apply_mean(&mut self.u, &user_sum, self.ratings.len());
        Ok(RoundOutput {
            messages,
            alpha,
            stats: Some(stats),
            skipped,
        })
    }
}
