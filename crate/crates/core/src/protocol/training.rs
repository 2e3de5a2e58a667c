use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use super::client::{client_init, ClientState, PrivacyConfig};
use super::server::ServerState;
use super::transport::Transport;
use crate::bpr;
use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::mf::{self, FactorMatrix, FactorModel, Hyperparams, ItemAveraging};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Task {
    /// Rating prediction with squared error.
    #[default]
    Numerical,
    /// Rated/unrated ranking with the pairwise loss.
    OneClass,
}

#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub hp: Hyperparams,
    pub privacy: PrivacyConfig,
    pub iterations: usize,
    pub task: Task,
    pub averaging: ItemAveraging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub t: usize,
    pub metric: Option<f64>,
    /// Gradient messages the server received this round.
    pub messages: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutput {
    pub model: FactorModel,
    pub rounds: Vec<RoundMetrics>,
    /// Users without training ratings; they never take part.
    pub excluded_clients: Vec<usize>,
}

fn assemble(users: &FactorMatrix, clients: &[ClientState], items: &FactorMatrix) -> FactorModel {
    let mut users = users.clone();
    for c in clients {
        users.row_mut(c.id).copy_from_slice(&c.u);
    }
    FactorModel {
        users,
        items: items.clone(),
    }
}

/// Runs `iterations` synchronous rounds of the client/server protocol.
pub fn run_training(
    train: &RatingDataset,
    config: &TrainingConfig,
    transport: &mut dyn Transport,
    evaluator: Option<&Evaluator>,
) -> Result<TrainingOutput> {
    if config.iterations == 0 {
        return Err(Error::InvalidParameter("at least one iteration is required".into()));
    }
    let hp = config.hp.clone().validated()?;
    let n_items = train.n_items();
    let mut excluded = Vec::new();
    let mut clients = Vec::with_capacity(train.n_users());
    for user in 0..train.n_users() {
        let ratings = train.user_ratings(user);
        if ratings.is_empty() {
            warn!("user {user} has no training ratings and is excluded");
            excluded.push(user);
            continue;
        }
        clients.push(client_init(user, ratings, n_items, &hp, &config.privacy)?);
    }
    let mut idle_users = FactorMatrix::zeros(train.n_users(), hp.k);
    for &user in &excluded {
        mf::init_user_row(idle_users.row_mut(user), user, &hp);
    }
    let mut server = ServerState::new(n_items, &hp, config.averaging);
    let ids: Vec<u32> = clients.iter().map(|c| c.id as u32).collect();

    let mut rounds = Vec::with_capacity(config.iterations);
    for t in 1..=config.iterations {
        let start = Instant::now();
        let v = server.broadcast();
        let outputs = clients
            .par_iter_mut()
            .map(|c| match config.task {
                Task::Numerical => c.iterate(v, t, &hp),
                Task::OneClass => bpr::sd_bpr_client_iteration(c, v, t, &hp),
            })
            .collect::<Result<Vec<_>>>()?;
        let outboxes = outputs.into_iter().map(|o| o.messages).collect();
        let received = transport.deliver(t, outboxes)?;
        server.begin_round(ids.iter().copied());
        for m in &received {
            server.receive(m)?;
        }
        let messages = server.end_round()?;
        let metric = match evaluator {
            Some(ev) => Some(ev.evaluate(&assemble(&idle_users, &clients, server.broadcast()))?),
            None => None,
        };
        let seconds = start.elapsed().as_secs_f64();
        if let Some(m) = metric {
            info!("round {t}: metric {m:.5}, {messages} messages");
        }
        rounds.push(RoundMetrics {
            t,
            metric,
            messages,
            seconds,
        });
    }
    let model = assemble(&idle_users, &clients, server.broadcast());
    Ok(TrainingOutput {
        model,
        rounds,
        excluded_clients: excluded,
    })
}
