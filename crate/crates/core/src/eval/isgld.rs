use rand::Rng;

use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// One draw from Laplace(0, scale) by inverting the CDF.
pub fn laplace_noise(scale: f64, rng: &mut StreamRng) -> f64 {
    // u in (-1/2, 1/2]
    let u: f64 = 0.5 - rng.random::<f64>();
    -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

/// Replaces every rating by `clamp(r + Laplace(width / eps))`, where `width`
/// is the width of `score_range`. Which (user, item) pairs exist is unchanged.
pub fn isgld_perturb(
    train: &RatingDataset,
    eps: f64,
    score_range: (f64, f64),
    rng: &mut StreamRng,
) -> Result<RatingDataset> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ISGLD epsilon must be positive, got {eps}")));
    }
    let (lo, hi) = score_range;
    let scale = (hi - lo) / eps;
    train.map_ratings(|t| (t.rating + laplace_noise(scale, rng)).clamp(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{RatingTriple, SyntheticSpec};
    use crate::rng::{stream, Purpose};

    #[test]
    fn laplace_mean_absolute_deviation() {
        let mut rng = stream(1, Purpose::Perturb, 0, 0);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| laplace_noise(2.0, &mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let median = draws[n / 2];
        let mut dev: Vec<f64> = draws.iter().map(|x| (x - median).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let mad = dev[n / 2];
        assert!((mad / (2.0 * 2f64.ln()) - 1.0).abs() < 0.05, "{mad}");
    }

    #[test]
    fn perturbation_keeps_support_and_range() {
        let ds = crate::data::synthetic(&SyntheticSpec {
            n_users: 30,
            n_items: 40,
            n_ratings: 600,
            min_per_user: 5,
            rank: 3,
            seed: 2,
        })
        .unwrap();
        let mut rng = stream(1, Purpose::Perturb, 0, 0);
        let noisy = isgld_perturb(&ds, 2.0, (1.0, 5.0), &mut rng).unwrap();
        assert_eq!(noisy.len(), ds.len());
        for (a, b) in ds.triples().iter().zip(noisy.triples()) {
            assert_eq!((a.user, a.item), (b.user, b.item));
            assert!((1.0..=5.0).contains(&b.rating));
        }
    }

    #[test]
    fn huge_budget_is_identity() {
        let ds = RatingDataset::new(
            1,
            2,
            vec![RatingTriple { user: 0, item: 0, rating: 3.0 }, RatingTriple { user: 0, item: 1, rating: 5.0 }],
            (1.0, 5.0),
        )
        .unwrap();
        let mut rng = stream(1, Purpose::Perturb, 0, 0);
        let same = isgld_perturb(&ds, 1e15, (1.0, 5.0), &mut rng).unwrap();
        for (a, b) in ds.triples().iter().zip(same.triples()) {
            assert!((a.rating - b.rating).abs() < 1e-12);
        }
        assert!(isgld_perturb(&ds, 0.0, (1.0, 5.0), &mut rng).is_err());
    }
}
