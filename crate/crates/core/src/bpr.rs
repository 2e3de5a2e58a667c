//! Pairwise ranking (BPR) for one-class feedback.
//!
//! For a user `u`, a rated item `v_j` and an unrated item `v_j'` the margin is
//! `x = u·v_j - u·v_j'` and the loss is `-ln σ(x)`.

use log::warn;
use rand::Rng;

use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::fake::AlphaBound;
use crate::mf::{self, FactorMatrix, FactorModel, Hyperparams, ItemAccumulator, ItemAveraging};
use crate::protocol::{ClientState, FinishMessage, GradientMessage, Message, RoundOutput};
use crate::rng::{self, Purpose, StreamRng};
use crate::rr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairwiseSample {
    pub user: usize,
    pub pos: usize,
    pub neg: usize,
}

pub fn bpr_margin(u: &[f64], v_pos: &[f64], v_neg: &[f64]) -> f64 {
    mf::dot(u, v_pos) - mf::dot(u, v_neg)
}

/// `e^{-x} / (1 + e^{-x})`, i.e. `1 - σ(x)`.
pub fn sigma_bar(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `(e_pos, e_neg)`; the pair always sums to zero.
pub fn bpr_errors(x: f64) -> (f64, f64) {
    let s = sigma_bar(x);
    (-s, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BprDeltas {
    pub user: Vec<f64>,
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

/// One Langevin step on `-ln σ(x)` plus the quadratic regularizers.
/// Noise is drawn for the user, then the positive, then the negative item.
pub fn bpr_step(
    u: &[f64],
    v_pos: &[f64],
    v_neg: &[f64],
    eta: f64,
    hp: &Hyperparams,
    rng: &mut StreamRng,
) -> BprDeltas {
    let s = sigma_bar(bpr_margin(u, v_pos, v_neg));
    let diff: Vec<f64> = v_pos.iter().zip(v_neg).map(|(a, b)| a - b).collect();
    let user = mf::langevin_delta(u, &diff, s, &hp.lambda_u, eta, hp.noise, rng).0;
    let pos = mf::langevin_delta(v_pos, u, s, &hp.lambda_v, eta, hp.noise, rng).0;
    let neg = mf::langevin_delta(v_neg, u, -s, &hp.lambda_v, eta, hp.noise, rng).0;
    BprDeltas { user, pos, neg }
}

/// The `r`-th item (0-based) not contained in the sorted slice `rated`.
fn nth_unrated(rated: &[(usize, f64)], r: usize) -> usize {
    let mut j = r;
    for &(i, _) in rated {
        if i <= j {
            j += 1;
        } else {
            break;
        }
    }
    j
}

/// Uniform draw from the items a user has not rated.
pub(crate) fn sample_unrated(rated: &[(usize, f64)], n_items: usize, rng: &mut StreamRng) -> Option<usize> {
    let free = n_items.checked_sub(rated.len()).filter(|&f| f > 0)?;
    Some(nth_unrated(rated, rng.random_range(0..free)))
}

pub(crate) fn sample_rated(rated: &[(usize, f64)], rng: &mut StreamRng) -> Option<usize> {
    if rated.is_empty() {
        return None;
    }
    Some(rated[rng.random_range(0..rated.len())].0)
}

/// Which item deltas a centralized round applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BprUpdates {
    /// Standard BPR: both members of every pair move.
    #[default]
    Full,
    /// Only the rated member of each pair moves, matching what a client
    /// sends when every rated item is selected and nothing else is.
    PositiveOnly,
}

/// Non-private BPR training with one pair per rated item per round.
pub fn bpr_train(
    train: &RatingDataset,
    hp: &Hyperparams,
    iterations: usize,
    updates: BprUpdates,
    averaging: ItemAveraging,
    mut on_round: impl FnMut(usize, &FactorModel),
) -> Result<FactorModel> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("at least one iteration is required".into()));
    }
    let n = train.n_items();
    let mut model = FactorModel::init(train.n_users(), n, hp);
    let mut acc = ItemAccumulator::new(n, hp.k);
    for t in 1..=iterations {
        let eta = mf::learning_rate(t, hp);
        acc.reset();
        let mut user_sums = Vec::with_capacity(train.n_users());
        for user in 0..train.n_users() {
            let rated = train.user_ratings(user);
            let mut noise = rng::stream(hp.seed, Purpose::Noise, user as u64, t as u64);
            let mut pairing = rng::stream(hp.seed, Purpose::Pairing, user as u64, t as u64);
            let u = model.users.row(user);
            let mut sum = vec![0.0; hp.k];
            let mut pairs = 0;
            for &(j, _) in rated {
                let Some(jn) = sample_unrated(rated, n, &mut pairing) else {
                    break;
                };
                let d = bpr_step(u, model.items.row(j), model.items.row(jn), eta, hp, &mut noise);
                mf::add_into(&mut sum, &d.user);
                acc.add(j, &d.pos);
                if updates == BprUpdates::Full {
                    acc.add(jn, &d.neg);
                }
                pairs += 1;
            }
            user_sums.push((sum, pairs));
        }
        for (user, (sum, pairs)) in user_sums.into_iter().enumerate() {
            if pairs > 0 {
                mf::apply_mean(model.users.row_mut(user), &sum, pairs);
            }
        }
        acc.apply(&mut model.items, averaging);
        on_round(t, &model);
    }
    Ok(model)
}

/// One SD-BPR round for a client.
///
/// Every selected item gets exactly one delta, in the role its true
/// ratedness gives it; the partner item is drawn uniformly from the
/// complementary set and never sent on its own account.
pub fn sd_bpr_client_iteration(
    state: &mut ClientState,
    items: &FactorMatrix,
    t: usize,
    hp: &Hyperparams,
) -> Result<RoundOutput> {
    let n = state.n_items();
    if items.rows() != n || items.k() != hp.k {
        return Err(Error::DimensionMismatch {
            expected: n * hp.k,
            actual: items.rows() * items.k(),
        });
    }
    let eta = mf::learning_rate(t, hp);
    let id = state.id as u64;
    let mut noise = rng::stream(hp.seed, Purpose::Noise, id, t as u64);
    let mut pairing = rng::stream(hp.seed, Purpose::Pairing, id, t as u64);
    let mut privacy = rng::stream(hp.seed, Purpose::Privacy, id, t as u64);

    let send = rr::irr(&state.perturbed, state.rr.p, state.rr.q, &mut privacy);
    let u = &state.u;
    let rated = &state.ratings;
    let mut sum = vec![0.0; hp.k];
    let mut pairs = 0;
    let mut messages = Vec::new();
    let mut skipped = 0;
    for j in send.ones() {
        let delta = if state.bits.get(j) {
            let Some(jn) = sample_unrated(rated, n, &mut pairing) else {
                warn!("client {id}: no unrated item to pair with {j}");
                skipped += 1;
                continue;
            };
            let d = bpr_step(u, items.row(j), items.row(jn), eta, hp, &mut noise);
            mf::add_into(&mut sum, &d.user);
            d.pos
        } else {
            let jp = sample_rated(rated, &mut pairing).expect("client has ratings");
            let d = bpr_step(u, items.row(jp), items.row(j), eta, hp, &mut noise);
            mf::add_into(&mut sum, &d.user);
            d.neg
        };
        pairs += 1;
        messages.push(Message::Gradient(GradientMessage {
            item: j as u32,
            delta,
        }));
    }
    messages.push(Message::Finish(FinishMessage { client: id as u32 }));
    if pairs > 0 {
        mf::apply_mean(&mut state.u, &sum, pairs);
    }
    Ok(RoundOutput {
        messages,
        alpha: AlphaBound::unbounded(),
        stats: None,
        skipped,
    })
}
