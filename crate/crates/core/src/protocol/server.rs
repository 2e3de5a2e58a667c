use std::collections::BTreeSet;

use super::Message;
use crate::error::{Error, Result};
use crate::mf::{self, FactorMatrix, Hyperparams, ItemAccumulator, ItemAveraging};

/// The server's entire state: item factors and the current round's sums.
#[derive(Debug, Clone)]
pub struct ServerState {
    items: FactorMatrix,
    acc: ItemAccumulator,
    averaging: ItemAveraging,
    round: usize,
    expected: BTreeSet<u32>,
    finished: BTreeSet<u32>,
}

impl ServerState {
    pub fn new(n_items: usize, hp: &Hyperparams, averaging: ItemAveraging) -> Self {
        let mut items = FactorMatrix::zeros(n_items, hp.k);
        for j in 0..n_items {
            mf::init_item_row(items.row_mut(j), j, hp);
        }
        Self::with_items(items, averaging)
    }

    pub fn with_items(items: FactorMatrix, averaging: ItemAveraging) -> Self {
        let acc = ItemAccumulator::new(items.rows(), items.k());
        Self {
            items,
            acc,
            averaging,
            round: 0,
            expected: BTreeSet::new(),
            finished: BTreeSet::new(),
        }
    }

    /// The matrix clients download this round.
    pub fn broadcast(&self) -> &FactorMatrix {
        &self.items
    }

    pub fn into_items(self) -> FactorMatrix {
        self.items
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Messages received in the current round.
    pub fn count(&self) -> u64 {
        self.acc.count()
    }

    pub fn begin_round(&mut self, clients: impl IntoIterator<Item = u32>) {
        self.acc.reset();
        self.expected = clients.into_iter().collect();
        self.finished.clear();
    }

    pub fn receive(&mut self, msg: &Message) -> Result<()> {
        match msg {
            Message::Gradient(g) => {
                let j = g.item as usize;
                if j >= self.items.rows() {
                    return Err(Error::Protocol(format!(
                        "item {j} outside {} items",
                        self.items.rows()
                    )));
                }
                if g.delta.len() != self.items.k() {
                    return Err(Error::SessionMismatch {
                        expected: self.items.k(),
                        actual: g.delta.len(),
                    });
                }
                if g.delta.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Protocol(format!("non-finite delta for item {j}")));
                }
                self.acc.add(j, &g.delta);
            }
            Message::Finish(f) => {
                if !self.expected.contains(&f.client) {
                    return Err(Error::Protocol(format!(
                        "finish from unknown client {}",
                        f.client
                    )));
                }
                if !self.finished.insert(f.client) {
                    return Err(Error::Protocol(format!(
                        "duplicate finish from client {}",
                        f.client
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn round_complete(&self) -> bool {
        self.finished.len() == self.expected.len()
    }

    /// Applies `V <- V + sums / count` once every client has finished.
    pub fn end_round(&mut self) -> Result<u64> {
        if !self.round_complete() {
            let missing: Vec<u32> = self.expected.difference(&self.finished).copied().collect();
            return Err(Error::RoundAborted {
                round: self.round + 1,
                reason: format!("no finish from clients {missing:?}"),
            });
        }
        self.acc.apply(&mut self.items, self.averaging);
        self.round += 1;
        Ok(self.acc.count())
    }
}
