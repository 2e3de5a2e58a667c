use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use super::config::{Baseline, DatasetSource, ExperimentConfig};
use super::isgld::isgld_perturb;
use super::metrics::Evaluator;
use crate::bpr::{self, BprUpdates};
use crate::data::{self, RatingDataset, SplitMode, SplitSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::mf::{self, Hyperparams};
use crate::protocol::{client_init, run_training, PrivacyConfig, SimulatedTransport, Task, TrainingConfig};
use crate::rng::{self, Purpose};
use crate::rr::{self, BitVector, PrivacyBudget};

/// One point of one learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub rep: usize,
    pub eps_i: Option<f64>,
    pub eps_g: Option<f64>,
    pub variant: String,
    pub t: usize,
    pub metric: &'static str,
    pub value: f64,
    pub messages: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub records: Vec<CurveRecord>,
    pub curves: PathBuf,
    pub summary: PathBuf,
}

impl ExperimentReport {
    /// Mean over repetitions of the last recorded value of `variant`,
    /// optionally restricted to one `eps_g`.
    pub fn final_mean(&self, variant: &str, eps_g: Option<f64>) -> Option<f64> {
        let keep = |r: &&CurveRecord| r.variant == variant && (eps_g.is_none() || r.eps_g == eps_g);
        let last = self.records.iter().filter(keep).map(|r| r.t).max()?;
        let vals: Vec<f64> = self
            .records
            .iter()
            .filter(keep)
            .filter(|r| r.t == last)
            .map(|r| r.value)
            .collect();
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<RatingDataset> {
    let full = match &cfg.dataset {
        DatasetSource::File(path) => data::load_ratings(path, &cfg.format)?,
        DatasetSource::SyntheticMl100k => data::synthetic(&SyntheticSpec::movielens_100k_shape(cfg.seed))?,
    };
    match cfg.subsample {
        Some((users, items)) => data::subsample(&full, users, items, cfg.subsample_min_ratings, cfg.seed),
        None => Ok(full),
    }
}

fn hyperparams(cfg: &ExperimentConfig, seed: u64) -> Result<Hyperparams> {
    match cfg.lambda {
        Some(l) => Hyperparams::uniform(cfg.k, cfg.eta0, cfg.gamma, l, seed, cfg.noise),
        None => Hyperparams::sample(cfg.k, cfg.eta0, cfg.gamma, seed, cfg.noise),
    }
}

fn split_for(cfg: &ExperimentConfig, ds: &RatingDataset, seed: u64) -> Result<(RatingDataset, RatingDataset)> {
    let mode = match cfg.task {
        Task::Numerical => SplitMode::RandomHoldout {
            test_fraction: cfg.test_fraction,
        },
        Task::OneClass => SplitMode::LeaveOneOut,
    };
    let (train, test) = data::split(ds, &SplitSpec { mode, seed })?;
    if !cfg.validation {
        return Ok((train, test));
    }
    let mode = match cfg.task {
        Task::Numerical => SplitMode::RandomHoldout { test_fraction: 0.2 },
        Task::OneClass => SplitMode::LeaveOneOut,
    };
    data::split(&train, &SplitSpec { mode, seed: seed ^ 0x5eed })
}

#[derive(Debug, Clone)]
enum Kind {
    NonPrivate,
    Isgld(f64),
    Distributed { eps_i: f64, eps_g: Option<f64> },
}

#[derive(Debug, Clone)]
struct Cell {
    variant: String,
    eps_i: Option<f64>,
    eps_g: Option<f64>,
    kind: Kind,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for b in &cfg.baselines {
        out.push(match *b {
            Baseline::NonPrivate => Cell {
                variant: match cfg.task {
                    Task::Numerical => "non-private".into(),
                    Task::OneClass => "bprmf".into(),
                },
                eps_i: None,
                eps_g: None,
                kind: Kind::NonPrivate,
            },
            Baseline::Isgld(e) => Cell {
                variant: format!("isgld-{e}"),
                eps_i: None,
                eps_g: None,
                kind: Kind::Isgld(e),
            },
        });
    }
    for &eps_i in &cfg.eps_i {
        match cfg.task {
            Task::Numerical => {
                for &g in &cfg.eps_g {
                    out.push(Cell {
                        variant: "sdmf".into(),
                        eps_i: Some(eps_i),
                        eps_g: Some(g),
                        kind: Kind::Distributed { eps_i, eps_g: Some(g) },
                    });
                }
                if cfg.alpha_inf {
                    out.push(Cell {
                        variant: "sdmf-alpha-inf".into(),
                        eps_i: Some(eps_i),
                        eps_g: Some(0.0),
                        kind: Kind::Distributed { eps_i, eps_g: None },
                    });
                }
            }
            Task::OneClass => out.push(Cell {
                variant: "sd-bprmf".into(),
                eps_i: Some(eps_i),
                eps_g: None,
                kind: Kind::Distributed { eps_i, eps_g: None },
            }),
        }
    }
    out
}

type Curve = Vec<(usize, f64, u64, f64)>;

fn run_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    train: &RatingDataset,
    test: &RatingDataset,
    hp: &Hyperparams,
    seed: u64,
) -> Result<Curve> {
    let evaluator = match cfg.task {
        Task::Numerical => Evaluator::Rmse(test),
        Task::OneClass => Evaluator::Auc { test, train },
    };
    let mut curve = Vec::with_capacity(cfg.iterations);
    let mut failure = None;
    let mut clock = Instant::now();
    let mut record = |t: usize, model: &mf::FactorModel, messages: u64| {
        if failure.is_some() {
            return;
        }
        match evaluator.evaluate(model) {
            Ok(v) => curve.push((t, v, messages, clock.elapsed().as_secs_f64())),
            Err(e) => failure = Some(e),
        }
        clock = Instant::now();
    };
    match cell.kind {
        Kind::NonPrivate | Kind::Isgld(_) => {
            let perturbed;
            let data = match cell.kind {
                Kind::Isgld(eps) => {
                    let mut rng = rng::stream(seed, Purpose::Perturb, eps.to_bits(), 0);
                    perturbed = isgld_perturb(train, eps, train.score_range(), &mut rng)?;
                    &perturbed
                }
                _ => train,
            };
            match cfg.task {
                Task::Numerical => {
                    let n = data.len() as u64;
                    mf::centralized_train_with(data, hp, cfg.iterations, cfg.averaging, |t, m| record(t, m, n))?;
                }
                Task::OneClass => {
                    let n = 2 * data.len() as u64;
                    bpr::bpr_train(data, hp, cfg.iterations, BprUpdates::Full, cfg.averaging, |t, m| {
                        record(t, m, n)
                    })?;
                }
            }
        }
        Kind::Distributed { eps_i, eps_g } => {
            let budget = PrivacyBudget::new(eps_i, cfg.eps_p, eps_g)?;
            let z = cfg.z_target.unwrap_or_else(|| train.mean_ratings_per_user());
            let tc = TrainingConfig {
                hp: hp.clone(),
                privacy: PrivacyConfig::from_budget(&budget, z),
                iterations: cfg.iterations,
                task: cfg.task,
                averaging: cfg.averaging,
            };
            let out = run_training(train, &tc, &mut SimulatedTransport::new(), Some(&evaluator))?;
            for r in out.rounds {
                curve.push((r.t, r.metric.unwrap_or(f64::NAN), r.messages, r.seconds));
            }
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(curve),
    }
}

fn summary_path(curves: &Path) -> PathBuf {
    let stem = curves.file_stem().and_then(|s| s.to_str()).unwrap_or("curves");
    curves.with_file_name(format!("{stem}_summary.csv"))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_curves(path: &Path, records: &[CurveRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["rep", "budget_eps_I", "budget_eps_g", "variant", "t", "metric", "value", "messages"])?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            opt(r.eps_i),
            opt(r.eps_g),
            r.variant.clone(),
            r.t.to_string(),
            r.metric.to_string(),
            r.value.to_string(),
            r.messages.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, records: &[CurveRecord]) -> Result<()> {
    let mut groups: BTreeMap<(String, String, String, usize), Vec<&CurveRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((opt(r.eps_i), opt(r.eps_g), r.variant.clone(), r.t))
            .or_default()
            .push(r);
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record([
        "budget_eps_I",
        "budget_eps_g",
        "variant",
        "t",
        "metric",
        "mean",
        "std",
        "messages_mean",
        "reps",
    ])?;
    for ((ei, eg, variant, t), rs) in groups {
        let n = rs.len() as f64;
        let mean = rs.iter().map(|r| r.value).sum::<f64>() / n;
        let std = if rs.len() > 1 {
            (rs.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let msgs = rs.iter().map(|r| r.messages as f64).sum::<f64>() / n;
        w.write_record([
            ei,
            eg,
            variant,
            t.to_string(),
            rs[0].metric.to_string(),
            mean.to_string(),
            std.to_string(),
            msgs.to_string(),
            rs.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every (repetition, budget, variant) cell and writes the curve CSV and
/// a per-point summary next to it.
///
/// Curves are written after each repetition, so a failure keeps the
/// repetitions already finished.
pub fn run_experiments(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let dataset = load_dataset(cfg)?;
    info!(
        "dataset: {} users, {} items, {} ratings",
        dataset.n_users(),
        dataset.n_items(),
        dataset.len()
    );
    let cells = cells(cfg);
    let metric = cfg.metric();
    let curves = cfg.output.clone();
    let summary = summary_path(&curves);
    let mut records = Vec::new();
    for rep in 0..cfg.repetitions {
        let seed = rng::derive_seed(cfg.seed, Purpose::Repetition, rep as u64, 0);
        let result = split_for(cfg, &dataset, seed).and_then(|(train, test)| {
            let hp = hyperparams(cfg, seed)?;
            cells
                .par_iter()
                .map(|cell| run_cell(cfg, cell, &train, &test, &hp, seed).map(|c| (cell, c)))
                .collect::<Result<Vec<_>>>()
        });
        let done = match result {
            Ok(done) => done,
            Err(e) => {
                if !records.is_empty() {
                    write_curves(&curves, &records)?;
                    write_summary(&summary, &records)?;
                }
                return Err(e);
            }
        };
        for (cell, curve) in done {
            if let Some(&(_, v, _, _)) = curve.last() {
                info!("rep {rep} {} eps_I={:?} eps_g={:?}: final {metric} {v:.4}", cell.variant, cell.eps_i, cell.eps_g);
            }
            records.extend(curve.into_iter().map(|(t, value, messages, seconds)| CurveRecord {
                rep,
                eps_i: cell.eps_i,
                eps_g: cell.eps_g,
                variant: cell.variant.clone(),
                t,
                metric,
                value,
                messages,
                seconds,
            }));
        }
        write_curves(&curves, &records)?;
        write_summary(&summary, &records)?;
    }
    Ok(ExperimentReport {
        records,
        curves,
        summary,
    })
}

/// Outcome of the frequency attack for one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub eps_i: f64,
    pub users: usize,
    /// Users whose calibration was infeasible.
    pub skipped: usize,
    /// Per-bit agreement between the attack's guess and `B`.
    pub accuracy: f64,
    /// Fraction of rated items the attack labels rated.
    pub rated_recall: f64,
    /// Per-bit agreement with the permanent response `B'`.
    pub prr_agreement: f64,
}

/// Replays `rounds` send sets per client and scores the frequency attack.
pub fn run_attack(cfg: &ExperimentConfig) -> Result<Vec<AttackReport>> {
    let dataset = load_dataset(cfg)?;
    let hp = hyperparams(cfg, cfg.seed)?;
    let z = cfg.z_target.unwrap_or_else(|| dataset.mean_ratings_per_user());
    if cfg.attack_rounds == 0 {
        return Err(Error::Config("attack_rounds must be at least 1".into()));
    }
    let mut reports = Vec::new();
    for &eps_i in &cfg.eps_i {
        let privacy = PrivacyConfig::from_budget(&PrivacyBudget::new(eps_i, cfg.eps_p, None)?, z);
        let per_user: Vec<Option<(f64, f64, f64)>> = (0..dataset.n_users())
            .into_par_iter()
            .map(|user| {
                let ratings = dataset.user_ratings(user);
                if ratings.is_empty() {
                    return None;
                }
                let client = match client_init(user, ratings, dataset.n_items(), &hp, &privacy) {
                    Ok(c) => c,
                    Err(e) => {
                        warn!("{e}");
                        return None;
                    }
                };
                let rr = client.rr_params();
                let sends: Vec<BitVector> = (1..=cfg.attack_rounds)
                    .map(|t| {
                        let mut g = rng::stream(hp.seed, Purpose::Privacy, user as u64, t as u64);
                        rr::irr(client.perturbed(), rr.p, rr.q, &mut g)
                    })
                    .collect();
                let guess = rr::classify_attack(&rr::average_attack(&sends), rr.p_star, rr.q_star);
                Some(score_guess(&guess, client.rated(), client.perturbed()))
            })
            .collect();
        let scored: Vec<_> = per_user.iter().flatten().collect();
        let n = scored.len().max(1) as f64;
        reports.push(AttackReport {
            eps_i,
            users: scored.len(),
            skipped: per_user.len() - scored.len(),
            accuracy: scored.iter().map(|s| s.0).sum::<f64>() / n,
            rated_recall: scored.iter().map(|s| s.1).sum::<f64>() / n,
            prr_agreement: scored.iter().map(|s| s.2).sum::<f64>() / n,
        });
    }
    Ok(reports)
}

/// (accuracy vs `B`, recall on rated bits, accuracy vs `B'`).
pub fn score_guess(guess: &BitVector, truth: &BitVector, permanent: &BitVector) -> (f64, f64, f64) {
    let n = truth.len() as f64;
    let agree = |other: &BitVector| (0..truth.len()).filter(|&j| guess.get(j) == other.get(j)).count() as f64 / n;
    let rated = truth.count_ones();
    let hit = truth.ones().filter(|&j| guess.get(j)).count();
    let recall = if rated == 0 { 1.0 } else { hit as f64 / rated as f64 };
    (agree(truth), recall, agree(permanent))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(task: Task) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(task);
        c.subsample = Some((40, 60));
        c.iterations = 3;
        c.k = 3;
        c.eta0 = 0.05;
        c.eps_i = vec![4.0];
        c.eps_g = vec![1.0];
        c.alpha_inf = true;
        c.baselines = vec![Baseline::NonPrivate, Baseline::Isgld(2.0)];
        c
    }

    #[test]
    fn cell_grid_matches_budgets() {
        let c = ExperimentConfig::new(Task::Numerical);
        let cs = cells(&c);
        assert_eq!(cs.iter().filter(|c| c.variant == "sdmf").count(), 16);
        let c = ExperimentConfig::new(Task::OneClass);
        assert_eq!(cells(&c).iter().filter(|c| c.variant == "sd-bprmf").count(), 4);
    }

    #[test]
    fn writes_curves_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(Task::Numerical);
        c.repetitions = 2;
        c.output = dir.path().join("out.csv");
        let report = run_experiments(&c).unwrap();
        // 4 variants x 3 rounds x 2 reps
        assert_eq!(report.records.len(), 24);
        let text = std::fs::read_to_string(&report.curves).unwrap();
        assert!(text.starts_with("rep,budget_eps_I,budget_eps_g,variant,t,metric,value,messages\n"));
        assert!(text.contains(",4,0,sdmf-alpha-inf,"));
        assert!(report.summary.exists());
        let again = run_experiments(&c).unwrap();
        let values = |r: &ExperimentReport| r.records.iter().map(|x| x.value).collect::<Vec<_>>();
        assert_eq!(values(&report), values(&again));
    }

    #[test]
    fn one_class_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(Task::OneClass);
        c.baselines = vec![Baseline::NonPrivate];
        c.output = dir.path().join("auc.csv");
        let report = run_experiments(&c).unwrap();
        assert!(report.records.iter().all(|r| r.metric == "auc" && (0.0..=1.0).contains(&r.value)));
        assert!(report.final_mean("sd-bprmf", None).is_some());
    }
}
