//! Comparing-the-best with an explicit score per cell.
//!
//! Each cell carries a real initial score and an integer count of duels won
//! by a winning space containing it. The first arm is the best arm of the
//! top-scoring cell; the second is the best arm of the top-scoring cell that
//! names a different best arm.

use std::sync::Arc;

use rand::RngCore;

use crate::arms::Outcome;
use crate::bayes::prior_to_scores;
use crate::cells::{pair_offset, CellTable};
use crate::error::{Error, Result};
use crate::policy::DuelPolicy;

/// How initial cell scores are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitVariant {
    /// Zero on every enumerated non-empty cell.
    Ctb1,
    /// Zero on every cell of the table, whatever its origin.
    Ctb2Explicit,
    /// Log prior mass scaled by `1 / log(q / (1 - q))`.
    Ctb3 { q: f64 },
}

/// Per-cell scores `m_i(t)`, kept as initial offset plus an exact count.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    init: Vec<f64>,
    increments: Vec<u64>,
    t: u64,
}

impl ScoreTable {
    pub fn new(table: &CellTable, variant: InitVariant) -> Result<Self> {
        let init = match variant {
            InitVariant::Ctb1 | InitVariant::Ctb2Explicit => vec![0.0; table.len()],
            InitVariant::Ctb3 { q } => {
                let prior: Vec<f64> = table.cells().iter().map(|c| c.prior_mass).collect();
                prior_to_scores(&prior, q)?
            }
        };
        Ok(Self::from_initial(init))
    }

    pub fn from_initial(init: Vec<f64>) -> Self {
        let increments = vec![0; init.len()];
        ScoreTable {
            init,
            increments,
            t: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.init.len()
    }

    pub fn is_empty(&self) -> bool {
        self.init.is_empty()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn initial(&self) -> &[f64] {
        &self.init
    }

    /// `m_i(t) - m_i(0)`.
    pub fn increments(&self) -> &[u64] {
        &self.increments
    }

    /// `m_i(t)`; stays `-inf` for excluded cells.
    pub fn score(&self, i: usize) -> f64 {
        self.init[i] + self.increments[i] as f64
    }

    /// Picks the duel. Ties in score go to the smaller best arm, then to the
    /// smaller cell index.
    pub fn select_arms(&self, table: &CellTable) -> Result<(usize, usize)> {
        let top = self
            .argmax(table, None)
            .ok_or_else(|| Error::Domain("no cell has a finite score".into()))?;
        let first = table.get(top).best_arm;
        match self.argmax(table, Some(first)) {
            Some(c) => Ok((first, table.get(c).best_arm)),
            None => Err(Error::DegenerateCandidates {
                arm: first,
                runner_up: table.get(top).runner_up(),
            }),
        }
    }

    fn argmax(&self, table: &CellTable, exclude: Option<usize>) -> Option<usize> {
        let mut best: Option<(usize, f64, usize)> = None;
        for (i, cell) in table.cells().iter().enumerate() {
            let s = self.score(i);
            if s == f64::NEG_INFINITY || Some(cell.best_arm) == exclude {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, bs, barm)) => s > bs || (s == bs && cell.best_arm < barm),
            };
            if better {
                best = Some((i, s, cell.best_arm));
            }
        }
        best.map(|(i, _, _)| i)
    }

    /// Adds one to every cell inside the winner's winning space.
    pub fn update(
        &mut self,
        table: &CellTable,
        first: usize,
        second: usize,
        outcome: Outcome,
    ) -> Result<()> {
        if first == second {
            return Err(Error::InvalidPair(first, second));
        }
        let n = table.n_arms();
        if first >= n || second >= n {
            return Err(Error::Config(format!("arm out of range for {n} arms")));
        }
        let (winner, loser) = outcome.resolve(first, second);
        let off = pair_offset(winner.min(loser), winner.max(loser), n);
        // bit 1 at the pair means the higher label wins
        let wanted = winner > loser;
        for (i, cell) in table.cells().iter().enumerate() {
            if cell.vector.position(off) == wanted {
                self.increments[i] += 1;
            }
        }
        self.t += 1;
        Ok(())
    }
}

/// Explicit CTB as a [`DuelPolicy`].
#[derive(Debug, Clone)]
pub struct ExplicitCtb {
    name: String,
    table: Arc<CellTable>,
    scores: ScoreTable,
}

impl ExplicitCtb {
    pub fn new(name: impl Into<String>, table: Arc<CellTable>, variant: InitVariant) -> Result<Self> {
        let scores = ScoreTable::new(&table, variant)?;
        Ok(ExplicitCtb {
            name: name.into(),
            table,
            scores,
        })
    }

    pub fn with_initial(name: impl Into<String>, table: Arc<CellTable>, init: Vec<f64>) -> Result<Self> {
        if init.len() != table.len() {
            return Err(Error::Config(format!(
                "{} initial scores for {} cells",
                init.len(),
                table.len()
            )));
        }
        Ok(ExplicitCtb {
            name: name.into(),
            table,
            scores: ScoreTable::from_initial(init),
        })
    }

    pub fn scores(&self) -> &ScoreTable {
        &self.scores
    }

    pub fn table(&self) -> &CellTable {
        &self.table
    }
}

impl DuelPolicy for ExplicitCtb {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, _t: usize, _rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        self.scores.select_arms(&self.table)
    }

    fn observe(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        self.scores.update(&self.table, first, second, outcome)
    }
}
