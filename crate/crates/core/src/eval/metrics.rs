use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::mf::FactorModel;

fn check_shape(ds: &RatingDataset, model: &FactorModel) -> Result<()> {
    if ds.n_users() > model.users.rows() || ds.n_items() > model.items.rows() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_users() * ds.n_items(),
            actual: model.users.rows() * model.items.rows(),
        });
    }
    Ok(())
}

pub fn rmse(test: &RatingDataset, model: &FactorModel) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_shape(test, model)?;
    let sse: f64 = test
        .triples()
        .iter()
        .map(|t| (t.rating - model.predict(t.user, t.item)).powi(2))
        .sum();
    Ok((sse / test.len() as f64).sqrt())
}

/// Leave-one-out AUC: for each test user, the fraction of items outside both
/// train and test that score strictly below the held-out item (ties count
/// half), averaged over users. Users with no candidate negatives are skipped.
pub fn auc(test: &RatingDataset, train: &RatingDataset, model: &FactorModel) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_shape(test, model)?;
    check_shape(train, model)?;
    let n = test.n_items();
    let mut seen = vec![false; n];
    let mut total = 0.0;
    let mut users = 0usize;
    for user in 0..test.n_users() {
        let held = test.user_ratings(user);
        if held.is_empty() {
            continue;
        }
        seen.fill(false);
        for &(j, _) in held.iter().chain(train.user_ratings(user)) {
            seen[j] = true;
        }
        let scores: Vec<f64> = (0..n).map(|j| model.predict(user, j)).collect();
        let negatives: Vec<f64> = (0..n).filter(|&j| !seen[j]).map(|j| scores[j]).collect();
        if negatives.is_empty() {
            continue;
        }
        let mut user_auc = 0.0;
        for &(pos, _) in held {
            let s = scores[pos];
            let wins: f64 = negatives
                .iter()
                .map(|&x| if x < s { 1.0 } else if x == s { 0.5 } else { 0.0 })
                .sum();
            user_auc += wins / negatives.len() as f64;
        }
        total += user_auc / held.len() as f64;
        users += 1;
    }
    if users == 0 {
        return Err(Error::InvalidDataset("no test user has candidate negatives".into()));
    }
    Ok(total / users as f64)
}

/// What to score after every training round.
#[derive(Debug, Clone, Copy)]
pub enum Evaluator<'a> {
    Rmse(&'a RatingDataset),
    Auc {
        test: &'a RatingDataset,
        train: &'a RatingDataset,
    },
}

impl Evaluator<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Evaluator::Rmse(_) => "rmse",
            Evaluator::Auc { .. } => "auc",
        }
    }

    pub fn evaluate(&self, model: &FactorModel) -> Result<f64> {
        match *self {
            Evaluator::Rmse(test) => rmse(test, model),
            Evaluator::Auc { test, train } => auc(test, train, model),
        }
    }
}
