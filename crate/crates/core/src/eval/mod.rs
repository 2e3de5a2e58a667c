//! Metrics, the input-perturbation baseline and experiment drivers.

mod config;
mod experiment;
mod isgld;
mod metrics;

pub use config::{
    Baseline, DatasetSource, ExperimentConfig, Preset, DESK_ETA0_NUMERICAL, DESK_ETA0_ONE_CLASS, BUDGET_GRID,
};
pub use experiment::{load_dataset, run_attack, run_experiments, score_guess, AttackReport, CurveRecord, ExperimentReport};
pub use isgld::{isgld_perturb, laplace_noise};
pub use metrics::{auc, rmse, Evaluator};
