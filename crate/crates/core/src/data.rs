//! Rating datasets: parsing, splitting, subsampling and a synthetic generator.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use log::warn;
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingTriple {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
}

/// A sparse user-item rating matrix with dense 0-based ids.
///
/// `user_ids[i]` / `item_ids[j]` map internal indices back to the ids found in
/// the source file. Datasets produced by [`split`] share the dimensions and id
/// maps of their parent.
#[derive(Debug, Clone)]
pub struct RatingDataset {
    n_users: usize,
    n_items: usize,
    triples: Vec<RatingTriple>,
    per_user: Vec<Vec<(usize, f64)>>,
    score_range: (f64, f64),
    user_ids: Vec<u64>,
    item_ids: Vec<u64>,
}

impl RatingDataset {
    /// Builds a dataset with identity id maps.
    pub fn new(
        n_users: usize,
        n_items: usize,
        triples: Vec<RatingTriple>,
        score_range: (f64, f64),
    ) -> Result<Self> {
        let user_ids = (0..n_users as u64).collect();
        let item_ids = (0..n_items as u64).collect();
        Self::with_ids(triples, score_range, user_ids, item_ids)
    }

    fn with_ids(
        triples: Vec<RatingTriple>,
        score_range: (f64, f64),
        user_ids: Vec<u64>,
        item_ids: Vec<u64>,
    ) -> Result<Self> {
        let (n_users, n_items) = (user_ids.len(), item_ids.len());
        if !(score_range.0 <= score_range.1) {
            return Err(Error::InvalidDataset(format!(
                "score range {score_range:?} is empty"
            )));
        }
        let mut per_user: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_users];
        for t in &triples {
            if t.user >= n_users || t.item >= n_items {
                return Err(Error::InvalidDataset(format!(
                    "triple ({}, {}) outside {n_users} x {n_items}",
                    t.user, t.item
                )));
            }
            if !(t.rating >= score_range.0 && t.rating <= score_range.1) {
                return Err(Error::InvalidDataset(format!(
                    "rating {} outside score range {score_range:?}",
                    t.rating
                )));
            }
            per_user[t.user].push((t.item, t.rating));
        }
        for (user, row) in per_user.iter_mut().enumerate() {
            row.sort_by_key(|&(item, _)| item);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate rating for user {user} and item {}",
                    w[0].0
                )));
            }
        }
        Ok(Self {
            n_users,
            n_items,
            triples,
            per_user,
            score_range,
            user_ids,
            item_ids,
        })
    }

    /// Same dimensions and id maps, different triples.
    fn derive(&self, triples: Vec<RatingTriple>) -> Self {
        Self::with_ids(
            triples,
            self.score_range,
            self.user_ids.clone(),
            self.item_ids.clone(),
        )
        .expect("subset of a valid dataset is valid")
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[RatingTriple] {
        &self.triples
    }

    /// The (item, rating) pairs of one user, sorted by item.
    pub fn user_ratings(&self, user: usize) -> &[(usize, f64)] {
        &self.per_user[user]
    }

    pub fn score_range(&self) -> (f64, f64) {
        self.score_range
    }

    pub fn original_user_id(&self, user: usize) -> u64 {
        self.user_ids[user]
    }

    pub fn original_item_id(&self, item: usize) -> u64 {
        self.item_ids[item]
    }

    pub fn internal_user_id(&self, original: u64) -> Option<usize> {
        self.user_ids.binary_search(&original).ok()
    }

    pub fn internal_item_id(&self, original: u64) -> Option<usize> {
        self.item_ids.binary_search(&original).ok()
    }

    /// |R| / |U|, the average number of ratings per user.
    pub fn mean_ratings_per_user(&self) -> f64 {
        if self.n_users == 0 {
            0.0
        } else {
            self.triples.len() as f64 / self.n_users as f64
        }
    }

    /// Copy of the dataset with every rating passed through `map`.
    pub fn map_ratings(&self, mut map: impl FnMut(&RatingTriple) -> f64) -> Result<Self> {
        let triples = self
            .triples
            .iter()
            .map(|t| RatingTriple {
                rating: map(t),
                ..*t
            })
            .collect();
        Self::with_ids(
            triples,
            self.score_range,
            self.user_ids.clone(),
            self.item_ids.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    /// Tab if the first data line contains one, otherwise comma.
    Auto,
    Tab,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormatSpec {
    pub delimiter: Delimiter,
    pub score_range: (f64, f64),
    /// Skip the first non-empty line (CSV exports usually carry a header).
    pub has_header: bool,
}

impl Default for FormatSpec {
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Auto,
            score_range: (1.0, 5.0),
            has_header: false,
        }
    }
}

/// Parses `user item rating [timestamp]` lines.
///
/// Ids are reindexed densely in ascending order of their original value.
pub fn parse_ratings(text: &str, format: &FormatSpec) -> Result<RatingDataset> {
    let mut delimiter = match format.delimiter {
        Delimiter::Tab => Some('\t'),
        Delimiter::Comma => Some(','),
        Delimiter::Auto => None,
    };
    let mut raw: Vec<(u64, u64, f64)> = Vec::new();
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    let mut header_pending = format.has_header;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let delim = *delimiter.get_or_insert(if line.contains('\t') { '\t' } else { ',' });
        let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
        if fields.len() < 3 {
            return Err(Error::MalformedLine {
                line: lineno,
                reason: format!("expected at least 3 fields, found {}", fields.len()),
            });
        }
        let id = |s: &str, what: &str| {
            s.parse::<u64>().map_err(|_| Error::MalformedLine {
                line: lineno,
                reason: format!("{what} id {s:?} is not a non-negative integer"),
            })
        };
        let user = id(fields[0], "user")?;
        let item = id(fields[1], "item")?;
        let rating: f64 = fields[2].parse().map_err(|_| Error::MalformedLine {
            line: lineno,
            reason: format!("rating {:?} is not a number", fields[2]),
        })?;
        let (lo, hi) = format.score_range;
        if !(rating >= lo && rating <= hi) {
            return Err(Error::MalformedLine {
                line: lineno,
                reason: format!("rating {rating} outside score range [{lo}, {hi}]"),
            });
        }
        if seen.insert((user, item), lineno).is_some() {
            return Err(Error::DuplicateRating {
                user,
                item,
                line: lineno,
            });
        }
        raw.push((user, item, rating));
    }

    let user_ids: Vec<u64> = raw
        .iter()
        .map(|r| r.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let item_ids: Vec<u64> = raw
        .iter()
        .map(|r| r.1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let triples = raw
        .iter()
        .map(|&(u, i, r)| RatingTriple {
            user: user_ids.binary_search(&u).unwrap(),
            item: item_ids.binary_search(&i).unwrap(),
            rating: r,
        })
        .collect();
    RatingDataset::with_ids(triples, format.score_range, user_ids, item_ids)
}

pub fn load_ratings(path: impl AsRef<Path>, format: &FormatSpec) -> Result<RatingDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_ratings(&text, format)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitMode {
    RandomHoldout { test_fraction: f64 },
    LeaveOneOut,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seed: u64,
}

/// Partitions the triples into (train, test).
pub fn split(dataset: &RatingDataset, spec: &SplitSpec) -> Result<(RatingDataset, RatingDataset)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng::stream(spec.seed, Purpose::Split, 0, 0);
    let mut in_test = vec![false; dataset.len()];
    match spec.mode {
        SplitMode::RandomHoldout { test_fraction } => {
            if !(test_fraction > 0.0 && test_fraction < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "test fraction {test_fraction} not in (0, 1)"
                )));
            }
            let n_test = (test_fraction * dataset.len() as f64).round() as usize;
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            order.shuffle(&mut rng);
            for &i in &order[..n_test] {
                in_test[i] = true;
            }
        }
        SplitMode::LeaveOneOut => {
            let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_users()];
            for (idx, t) in dataset.triples().iter().enumerate() {
                by_user[t.user].push(idx);
            }
            let mut skipped = 0usize;
            for rows in &by_user {
                match rows.len() {
                    0 => {}
                    1 => skipped += 1,
                    _ => in_test[*rows.choose(&mut rng).unwrap()] = true,
                }
            }
            if skipped > 0 {
                warn!("leave-one-out: {skipped} users with a single rating kept in train only");
            }
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (t, &held) in dataset.triples().iter().zip(&in_test) {
        if held {
            test.push(*t);
        } else {
            train.push(*t);
        }
    }
    Ok((dataset.derive(train), dataset.derive(test)))
}

/// Keeps the `n_items` most-rated items, then uniformly samples `n_users`
/// users having at least `min_ratings` ratings on those items. The result is
/// reindexed densely; original ids are preserved.
pub fn subsample(
    dataset: &RatingDataset,
    n_users: usize,
    n_items: usize,
    min_ratings: usize,
    seed: u64,
) -> Result<RatingDataset> {
    if n_users > dataset.n_users() || n_items > dataset.n_items() {
        return Err(Error::InvalidParameter(format!(
            "cannot subsample {n_users} x {n_items} from {} x {}",
            dataset.n_users(),
            dataset.n_items()
        )));
    }
    let mut popularity = vec![0usize; dataset.n_items()];
    for t in dataset.triples() {
        popularity[t.item] += 1;
    }
    let mut items: Vec<usize> = (0..dataset.n_items()).collect();
    items.sort_by(|&a, &b| popularity[b].cmp(&popularity[a]).then(a.cmp(&b)));
    items.truncate(n_items);
    let kept_items: HashSet<usize> = items.iter().copied().collect();

    let qualifying: Vec<usize> = (0..dataset.n_users())
        .filter(|&u| {
            let degree = dataset
                .user_ratings(u)
                .iter()
                .filter(|(i, _)| kept_items.contains(i))
                .count();
            degree >= min_ratings.max(1)
        })
        .collect();
    let mut users: Vec<usize> = if qualifying.len() <= n_users {
        if qualifying.len() < n_users {
            warn!(
                "subsample: only {} users have >= {min_ratings} ratings on the top {n_items} items ({n_users} requested)",
                qualifying.len()
            );
        }
        qualifying
    } else {
        let mut rng = rng::stream(seed, Purpose::Subsample, 0, 0);
        index::sample(&mut rng, qualifying.len(), n_users)
            .into_iter()
            .map(|k| qualifying[k])
            .collect()
    };
    users.sort_unstable();

    let user_pos: HashMap<usize, usize> = users.iter().enumerate().map(|(k, &u)| (u, k)).collect();
    let mut sorted_items = items.clone();
    sorted_items.sort_unstable();
    let item_pos: HashMap<usize, usize> = sorted_items
        .iter()
        .enumerate()
        .map(|(k, &i)| (i, k))
        .collect();
    let triples = dataset
        .triples()
        .iter()
        .filter_map(|t| {
            Some(RatingTriple {
                user: *user_pos.get(&t.user)?,
                item: *item_pos.get(&t.item)?,
                rating: t.rating,
            })
        })
        .collect();
    RatingDataset::with_ids(
        triples,
        dataset.score_range,
        users.iter().map(|&u| dataset.user_ids[u]).collect(),
        sorted_items.iter().map(|&i| dataset.item_ids[i]).collect(),
    )
}

/// Shape of a synthetic explicit-feedback corpus.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub min_per_user: usize,
    pub rank: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Same user/item/rating counts as MovieLens-100K (943 / 1682 / 100000),
    /// every user with at least 20 ratings.
    pub fn movielens_100k_shape(seed: u64) -> Self {
        Self {
            n_users: 943,
            n_items: 1682,
            n_ratings: 100_000,
            min_per_user: 20,
            rank: 5,
            seed,
        }
    }
}

/// Generates integer 1-5 ratings from a biased low-rank model with heavy-tailed
/// user activity and Zipf-like item popularity.
pub fn synthetic(spec: &SyntheticSpec) -> Result<RatingDataset> {
    let (nu, ni) = (spec.n_users, spec.n_items);
    if nu == 0 || ni == 0 || spec.min_per_user > ni || spec.n_ratings < nu * spec.min_per_user {
        return Err(Error::InvalidParameter(format!(
            "cannot place {} ratings over {nu} x {ni} with {} per user",
            spec.n_ratings, spec.min_per_user
        )));
    }
    if spec.n_ratings > nu * ni {
        return Err(Error::InvalidParameter("more ratings than cells".into()));
    }
    let mut rng = rng::stream(spec.seed, Purpose::Synthetic, 0, 0);

    // Per-user degree: min_per_user plus a lognormal share of the remainder.
    let activity = LogNormal::new(0.0, 1.0).unwrap();
    let weights: Vec<f64> = (0..nu).map(|_| activity.sample(&mut rng)).collect();
    let total_w: f64 = weights.iter().sum();
    let spare = spec.n_ratings - nu * spec.min_per_user;
    let cap = ni - spec.min_per_user;
    let mut degree: Vec<usize> = weights
        .iter()
        .map(|w| spec.min_per_user + ((w / total_w * spare as f64) as usize).min(cap))
        .collect();
    let mut missing = spec.n_ratings - degree.iter().sum::<usize>();
    while missing > 0 {
        let u = rng.random_range(0..nu);
        if degree[u] < ni {
            degree[u] += 1;
            missing -= 1;
        }
    }

    let mut rank_of: Vec<usize> = (0..ni).collect();
    rank_of.shuffle(&mut rng);
    let popularity: Vec<f64> = rank_of
        .iter()
        .map(|&r| 1.0 / (r as f64 + 10.0).powf(1.1))
        .collect();

    let factor = Normal::new(0.0, 0.5).unwrap();
    let user_f: Vec<Vec<f64>> = (0..nu)
        .map(|_| (0..spec.rank).map(|_| factor.sample(&mut rng)).collect())
        .collect();
    let item_f: Vec<Vec<f64>> = (0..ni)
        .map(|_| (0..spec.rank).map(|_| factor.sample(&mut rng)).collect())
        .collect();
    let user_bias = Normal::new(0.0, 0.35).unwrap();
    let user_b: Vec<f64> = (0..nu).map(|_| user_bias.sample(&mut rng)).collect();
    // More popular items are rated a little higher, as in real catalogs.
    let item_b: Vec<f64> = rank_of
        .iter()
        .map(|&r| 0.4 - 0.8 * r as f64 / ni as f64)
        .collect();
    let noise = Normal::new(0.0, 0.6).unwrap();

    let all_items: Vec<usize> = (0..ni).collect();
    let mut triples = Vec::with_capacity(spec.n_ratings);
    for u in 0..nu {
        let chosen: BTreeMap<usize, ()> = all_items
            .choose_multiple_weighted(&mut rng, degree[u], |&i| popularity[i])
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .map(|&i| (i, ()))
            .collect();
        for &i in chosen.keys() {
            let dot: f64 = user_f[u].iter().zip(&item_f[i]).map(|(a, b)| a * b).sum();
            let raw = 3.5 + user_b[u] + item_b[i] + dot + noise.sample(&mut rng);
            triples.push(RatingTriple {
                user: u,
                item: i,
                rating: raw.round().clamp(1.0, 5.0),
            });
        }
    }
    RatingDataset::new(nu, ni, triples, (1.0, 5.0))
}
