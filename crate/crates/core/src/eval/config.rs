use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{Delimiter, FormatSpec};
use crate::error::{Error, Result};
use crate::mf::ItemAveraging;
use crate::protocol::Task;

/// Where ratings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    File(PathBuf),
    /// Synthetic corpus with the MovieLens-100K shape.
    SyntheticMl100k,
}

/// Named bundles of defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Full,
    /// 200 users x 400 items.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    NonPrivate,
    Isgld(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub format: FormatSpec,
    pub task: Task,
    pub k: usize,
    pub eta0: f64,
    pub gamma: f64,
    /// Fixed regularization; `None` draws from Gamma(1, rate 100).
    pub lambda: Option<f64>,
    pub noise: bool,
    pub seed: u64,
    pub eps_i: Vec<f64>,
    pub eps_p: Option<f64>,
    pub eps_g: Vec<f64>,
    /// Also run SDMF with unbounded fake errors.
    pub alpha_inf: bool,
    pub z_target: Option<f64>,
    pub iterations: usize,
    pub repetitions: usize,
    pub baselines: Vec<Baseline>,
    pub subsample: Option<(usize, usize)>,
    pub subsample_min_ratings: usize,
    pub averaging: ItemAveraging,
    pub test_fraction: f64,
    /// Score against an 80/20 split of the training set instead of the test set.
    pub validation: bool,
    pub attack_rounds: usize,
    pub output: PathBuf,
}

pub const BUDGET_GRID: [f64; 4] = [4.0, 1.0, 0.25, 0.0625];
pub const DESK_ETA0_NUMERICAL: f64 = 5.0;
pub const DESK_ETA0_ONE_CLASS: f64 = 40.0;

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        let k = match task {
            Task::Numerical => 50,
            Task::OneClass => 10,
        };
        Self {
            dataset: DatasetSource::SyntheticMl100k,
            format: FormatSpec::default(),
            task,
            k,
            eta0: 5e-6,
            gamma: 0.6,
            lambda: None,
            noise: true,
            seed: 0,
            eps_i: BUDGET_GRID.to_vec(),
            eps_p: None,
            eps_g: match task {
                Task::Numerical => BUDGET_GRID.to_vec(),
                Task::OneClass => Vec::new(),
            },
            alpha_inf: false,
            z_target: None,
            iterations: 100,
            repetitions: 1,
            baselines: vec![Baseline::NonPrivate],
            subsample: None,
            subsample_min_ratings: 5,
            averaging: ItemAveraging::Global,
            test_fraction: 0.2,
            validation: false,
            attack_rounds: 1000,
            output: PathBuf::from("curves.csv"),
        }
    }

    /// Desk scale also switches to learning rates tuned for the smaller
    /// round size (validation split, T = 100).
    pub fn preset(&mut self, preset: Preset) {
        match preset {
            Preset::Full => self.subsample = None,
            Preset::Desk => {
                self.subsample = Some((200, 400));
                self.eta0 = match self.task {
                    Task::Numerical => DESK_ETA0_NUMERICAL,
                    Task::OneClass => DESK_ETA0_ONE_CLASS,
                };
            }
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            pairs.push((n + 1, key.trim().to_ascii_lowercase(), value.trim().to_string()));
        }
        let task = match pairs.iter().find(|(_, k, _)| k == "task") {
            Some((n, _, v)) => parse_task(v).map_err(|e| at(*n, e))?,
            None => Task::Numerical,
        };
        let mut cfg = Self::new(task);
        if let Some((n, _, v)) = pairs.iter().find(|(_, k, _)| k == "preset") {
            let preset = match v.as_str() {
                "desk" => Preset::Desk,
                "full" => Preset::Full,
                _ => return Err(at(*n, format!("unknown preset `{v}`"))),
            };
            cfg.preset(preset);
        }
        for (n, key, value) in &pairs {
            cfg.set(key, value).map_err(|e| at(*n, e))?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        if let (DatasetSource::File(p), Some(dir)) = (&cfg.dataset, path.parent()) {
            if p.is_relative() && !p.exists() {
                cfg.dataset = DatasetSource::File(dir.join(p));
            }
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "task" | "preset" => {}
            "dataset" => {
                self.dataset = if v == "synthetic" || v == "synthetic:ml100k" {
                    DatasetSource::SyntheticMl100k
                } else {
                    DatasetSource::File(PathBuf::from(v))
                }
            }
            "delimiter" => {
                self.format.delimiter = match v {
                    "auto" => Delimiter::Auto,
                    "tab" => Delimiter::Tab,
                    "comma" => Delimiter::Comma,
                    _ => return Err(format!("unknown delimiter `{v}`")),
                }
            }
            "header" => self.format.has_header = num(v)?,
            "score_min" => self.format.score_range.0 = num(v)?,
            "score_max" => self.format.score_range.1 = num(v)?,
            "k" => self.k = num(v)?,
            "eta0" => self.eta0 = num(v)?,
            "gamma" => self.gamma = num(v)?,
            "lambda" => self.lambda = if v == "gamma" { None } else { Some(num(v)?) },
            "noise" => self.noise = num(v)?,
            "seed" => self.seed = num(v)?,
            "eps_i" => self.eps_i = list(v)?,
            "eps_p" => self.eps_p = if v == "auto" { None } else { Some(num(v)?) },
            "eps_g" => self.eps_g = list(v)?,
            "alpha_inf" => self.alpha_inf = num(v)?,
            "z_target" => self.z_target = if v == "auto" { None } else { Some(num(v)?) },
            "iterations" => self.iterations = num(v)?,
            "repetitions" => self.repetitions = num(v)?,
            "baseline" => {
                self.baselines.retain(|b| *b != Baseline::NonPrivate);
                for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match name {
                        "non-private" | "nonprivate" => self.baselines.insert(0, Baseline::NonPrivate),
                        "none" => {}
                        _ => return Err(format!("unknown baseline `{name}`")),
                    }
                }
            }
            "isgld_eps" => {
                self.baselines.retain(|b| !matches!(b, Baseline::Isgld(_)));
                self.baselines.extend(list(v)?.into_iter().map(Baseline::Isgld));
            }
            "subsample_users" => self.subsample = Some((num(v)?, self.subsample.map_or(400, |s| s.1))),
            "subsample_items" => self.subsample = Some((self.subsample.map_or(200, |s| s.0), num(v)?)),
            "subsample_min_ratings" => self.subsample_min_ratings = num(v)?,
            "averaging" => {
                self.averaging = match v {
                    "global" => ItemAveraging::Global,
                    "per-item" | "per_item" => ItemAveraging::PerItem,
                    _ => return Err(format!("unknown averaging `{v}`")),
                }
            }
            "test_fraction" => self.test_fraction = num(v)?,
            "validation" => self.validation = num(v)?,
            "attack_rounds" => self.attack_rounds = num(v)?,
            "output" => self.output = PathBuf::from(v),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if let Some(x) = self
            .eps_i
            .iter()
            .chain(&self.eps_g)
            .chain(self.eps_p.iter())
            .find(|x| !(**x > 0.0 && x.is_finite()))
        {
            return bad(format!("privacy budgets must be positive and finite, got {x}"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} not in (0, 1)", self.test_fraction));
        }
        Ok(())
    }

    /// Name of the metric this task is scored with.
    pub fn metric(&self) -> &'static str {
        match self.task {
            Task::Numerical => "rmse",
            Task::OneClass => "auc",
        }
    }
}

fn at(line: usize, msg: String) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_task(v: &str) -> std::result::Result<Task, String> {
    match v {
        "numerical" => Ok(Task::Numerical),
        "one-class" | "one_class" | "oneclass" => Ok(Task::OneClass),
        _ => Err(format!("unknown task `{v}`")),
    }
}

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(num)
        .collect()
}
