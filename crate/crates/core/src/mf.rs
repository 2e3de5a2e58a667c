//! Matrix factorization with stochastic gradient Langevin dynamics.
//!
//! All steps return *additive* deltas: `x <- x + delta`, where
//! `delta = eta_t * (e * other - lambda ∘ x) + xi` and `xi ~ N(0, eta_t I)`.
//! With the noise disabled this is a plain descent step on
//! `½e² + ½xᵀΛx`.

use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub k: usize,
    pub eta0: f64,
    pub gamma: f64,
    /// Diagonal of the user precision matrix.
    pub lambda_u: Vec<f64>,
    /// Diagonal of the item precision matrix.
    pub lambda_v: Vec<f64>,
    pub seed: u64,
    pub noise: bool,
}

impl Hyperparams {
    /// Draws both regularizer diagonals from Gamma(shape 1, rate 100).
    pub fn sample(k: usize, eta0: f64, gamma: f64, seed: u64, noise: bool) -> Result<Self> {
        let prior = Gamma::new(1.0, 0.01).expect("valid gamma");
        let draw = |which| {
            let mut rng = rng::stream(seed, Purpose::Regularizer, which, 0);
            (0..k).map(|_| prior.sample(&mut rng)).collect::<Vec<f64>>()
        };
        let lambda_u = draw(0);
        let lambda_v = draw(1);
        Self {
            k,
            eta0,
            gamma,
            lambda_u,
            lambda_v,
            seed,
            noise,
        }
        .validated()
    }

    /// Same regularization `lambda` on every coordinate.
    pub fn uniform(k: usize, eta0: f64, gamma: f64, lambda: f64, seed: u64, noise: bool) -> Result<Self> {
        Self {
            k,
            eta0,
            gamma,
            lambda_u: vec![lambda; k],
            lambda_v: vec![lambda; k],
            seed,
            noise,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta0 = {} must be > 0", self.eta0)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {} must be >= 0", self.gamma)));
        }
        for lam in [&self.lambda_u, &self.lambda_v] {
            if lam.len() != self.k {
                return Err(Error::DimensionMismatch {
                    expected: self.k,
                    actual: lam.len(),
                });
            }
            if lam.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
                return Err(Error::InvalidParameter("regularizers must be finite and >= 0".into()));
            }
        }
        Ok(self)
    }
}

/// Row-major dense matrix of latent factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    k: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, k: usize) -> Self {
        Self {
            k,
            data: vec![0.0; rows * k],
        }
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub users: FactorMatrix,
    pub items: FactorMatrix,
}

impl FactorModel {
    /// Entries drawn i.i.d. from N(0, (0.1/√K)²); each row has its own stream
    /// so a client can initialize its own user row independently.
    pub fn init(n_users: usize, n_items: usize, hp: &Hyperparams) -> Self {
        let mut users = FactorMatrix::zeros(n_users, hp.k);
        for i in 0..n_users {
            init_user_row(users.row_mut(i), i, hp);
        }
        let mut items = FactorMatrix::zeros(n_items, hp.k);
        for j in 0..n_items {
            init_item_row(items.row_mut(j), j, hp);
        }
        Self { users, items }
    }

    pub fn predict(&self, user: usize, item: usize) -> f64 {
        dot(self.users.row(user), self.items.row(item))
    }
}

fn init_dist(k: usize) -> Normal<f64> {
    Normal::new(0.0, 0.1 / (k as f64).sqrt()).expect("valid normal")
}

pub fn init_user_row(row: &mut [f64], user: usize, hp: &Hyperparams) {
    let mut rng = rng::stream(hp.seed, Purpose::UserInit, user as u64, 0);
    let dist = init_dist(hp.k);
    row.iter_mut().for_each(|x| *x = dist.sample(&mut rng));
}

pub fn init_item_row(row: &mut [f64], item: usize, hp: &Hyperparams) {
    let mut rng = rng::stream(hp.seed, Purpose::ItemInit, item as u64, 0);
    let dist = init_dist(hp.k);
    row.iter_mut().for_each(|x| *x = dist.sample(&mut rng));
}

/// Additive update to one factor row.
#[derive(Debug, Clone, PartialEq)]
pub struct GradDelta(pub Vec<f64>);

impl GradDelta {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `eta0 / t^gamma`, for iterations counted from 1.
pub fn learning_rate(t: usize, hp: &Hyperparams) -> f64 {
    assert!(t >= 1, "iterations are numbered from 1");
    hp.eta0 / (t as f64).powf(hp.gamma)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn predict(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(dot(u, v))
}

pub fn rating_error(r: f64, u: &[f64], v: &[f64]) -> Result<f64> {
    Ok(r - predict(u, v)?)
}

/// `eta * (coef * other - lambda ∘ this) + xi`.
pub(crate) fn langevin_delta(
    this: &[f64],
    other: &[f64],
    coef: f64,
    lambda: &[f64],
    eta: f64,
    noise: bool,
    rng: &mut StreamRng,
) -> GradDelta {
    let scale = eta.sqrt();
    GradDelta(
        this.iter()
            .zip(other)
            .zip(lambda)
            .map(|((&x, &o), &l)| {
                let xi = if noise {
                    let z: f64 = StandardNormal.sample(rng);
                    scale * z
                } else {
                    0.0
                };
                eta * (coef * o - l * x) + xi
            })
            .collect(),
    )
}

pub fn user_step(u: &[f64], e: f64, v: &[f64], eta: f64, hp: &Hyperparams, rng: &mut StreamRng) -> GradDelta {
    langevin_delta(u, v, e, &hp.lambda_u, eta, hp.noise, rng)
}

pub fn item_step(v: &[f64], e: f64, u: &[f64], eta: f64, hp: &Hyperparams, rng: &mut StreamRng) -> GradDelta {
    langevin_delta(v, u, e, &hp.lambda_v, eta, hp.noise, rng)
}

/// How the per-round item accumulator is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ItemAveraging {
    /// Divide every row by the total number of deltas received in the round.
    #[default]
    Global,
    /// Divide each row by the number of deltas received for that item.
    PerItem,
}

/// Sums of item deltas for one round.
#[derive(Debug, Clone)]
pub struct ItemAccumulator {
    sums: FactorMatrix,
    per_item: Vec<u64>,
    count: u64,
}

impl ItemAccumulator {
    pub fn new(n_items: usize, k: usize) -> Self {
        Self {
            sums: FactorMatrix::zeros(n_items, k),
            per_item: vec![0; n_items],
            count: 0,
        }
    }

    pub fn reset(&mut self) {
        self.sums.fill(0.0);
        self.per_item.fill(0);
        self.count = 0;
    }

    pub fn add(&mut self, item: usize, delta: &[f64]) {
        for (s, d) in self.sums.row_mut(item).iter_mut().zip(delta) {
            *s += d;
        }
        self.per_item[item] += 1;
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sums(&self) -> &FactorMatrix {
        &self.sums
    }

    /// `V <- V + sums / count`; a round with no deltas leaves `V` untouched.
    pub fn apply(&self, items: &mut FactorMatrix, averaging: ItemAveraging) {
        if self.count == 0 {
            return;
        }
        for j in 0..items.rows() {
            let denom = match averaging {
                ItemAveraging::Global => self.count,
                ItemAveraging::PerItem => self.per_item[j],
            };
            if self.per_item[j] == 0 {
                continue;
            }
            let denom = denom as f64;
            for (x, s) in items.row_mut(j).iter_mut().zip(self.sums.row(j)) {
                *x += s / denom;
            }
        }
    }
}

/// `u <- u + sum / n`.
pub(crate) fn apply_mean(row: &mut [f64], sum: &[f64], n: usize) {
    let n = n as f64;
    for (x, s) in row.iter_mut().zip(sum) {
        *x += s / n;
    }
}

pub(crate) fn add_into(acc: &mut [f64], delta: &[f64]) {
    for (a, d) in acc.iter_mut().zip(delta) {
        *a += d;
    }
}

/// Non-private SGLD training with the same round structure as the distributed
/// protocol: all deltas of a round are computed from the factors at the start
/// of the round, user deltas are averaged per user, item deltas are averaged
/// over the round.
pub fn centralized_train(train: &RatingDataset, hp: &Hyperparams, iterations: usize) -> Result<FactorModel> {
    centralized_train_with(train, hp, iterations, ItemAveraging::Global, |_, _| {})
}

/// [`centralized_train`] with a callback after every round.
pub fn centralized_train_with(
    train: &RatingDataset,
    hp: &Hyperparams,
    iterations: usize,
    averaging: ItemAveraging,
    mut on_round: impl FnMut(usize, &FactorModel),
) -> Result<FactorModel> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("at least one iteration is required".into()));
    }
    let mut model = FactorModel::init(train.n_users(), train.n_items(), hp);
    let mut acc = ItemAccumulator::new(train.n_items(), hp.k);
    for t in 1..=iterations {
        centralized_round(train, hp, t, averaging, &mut model, &mut acc);
        on_round(t, &model);
    }
    Ok(model)
}

fn centralized_round(
    train: &RatingDataset,
    hp: &Hyperparams,
    t: usize,
    averaging: ItemAveraging,
    model: &mut FactorModel,
    acc: &mut ItemAccumulator,
) {
    let eta = learning_rate(t, hp);
    acc.reset();
    let mut user_sums: Vec<Option<Vec<f64>>> = vec![None; train.n_users()];
    for (user, slot) in user_sums.iter_mut().enumerate() {
        let ratings = train.user_ratings(user);
        if ratings.is_empty() {
            continue;
        }
        let mut rng = rng::stream(hp.seed, Purpose::Noise, user as u64, t as u64);
        let u = model.users.row(user);
        let errors: Vec<f64> = ratings
            .iter()
            .map(|&(j, r)| r - dot(u, model.items.row(j)))
            .collect();
        let mut sum = vec![0.0; hp.k];
        for (&(j, _), &e) in ratings.iter().zip(&errors) {
            add_into(&mut sum, &user_step(u, e, model.items.row(j), eta, hp, &mut rng).0);
        }
        for (&(j, _), &e) in ratings.iter().zip(&errors) {
            acc.add(j, &item_step(model.items.row(j), e, u, eta, hp, &mut rng).0);
        }
        *slot = Some(sum);
    }
    for (user, sum) in user_sums.into_iter().enumerate() {
        if let Some(sum) = sum {
            let h = train.user_ratings(user).len();
            apply_mean(model.users.row_mut(user), &sum, h);
        }
    }
    acc.apply(&mut model.items, averaging);
}
