//! Baseline policies: relative upper confidence bound (RUCB) and the
//! weak-regret variant of winner-stays (WS-W).
//!
//! Both use only duel outcomes. Ties are broken uniformly at random with the
//! policy's own stream.

use rand::{Rng, RngCore};

use crate::arms::Outcome;
use crate::error::{Error, Result};
use crate::policy::DuelPolicy;

pub const DEFAULT_RUCB_ALPHA: f64 = 0.51;

fn pick_uniform(candidates: &[usize], rng: &mut dyn RngCore) -> usize {
    candidates[rng.gen_range(0..candidates.len())]
}

/// Win counts plus the hypothesized-best bookkeeping of RUCB.
#[derive(Debug, Clone, PartialEq)]
pub struct RucbState {
    n: usize,
    alpha: f64,
    wins: Vec<u64>,
    hypothesized_best: Option<usize>,
}

impl RucbState {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("RUCB needs at least two arms".into()));
        }
        if !(alpha > 0.5 && alpha.is_finite()) {
            return Err(Error::Config(format!("RUCB alpha must exceed 0.5, got {alpha}")));
        }
        Ok(RucbState {
            n,
            alpha,
            wins: vec![0; n * n],
            hypothesized_best: None,
        })
    }

    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.n + j]
    }

    pub fn total(&self) -> u64 {
        self.wins.iter().sum()
    }

    /// Optimistic estimate that `i` beats `j` at step `t`; 1 for unplayed
    /// pairs and 1/2 on the diagonal.
    pub fn upper(&self, i: usize, j: usize, t: usize) -> f64 {
        if i == j {
            return 0.5;
        }
        let (w, l) = (self.wins(i, j) as f64, self.wins(j, i) as f64);
        let total = w + l;
        if total == 0.0 {
            return 1.0;
        }
        w / total + (self.alpha * (t as f64).ln() / total).sqrt()
    }

    /// Arms whose optimistic estimate is at least 1/2 against every arm.
    pub fn candidates(&self, t: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&c| (0..self.n).all(|j| self.upper(c, j, t) >= 0.5))
            .collect()
    }

    pub fn record(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        if first == second {
            return Err(Error::InvalidPair(first, second));
        }
        let (w, l) = outcome.resolve(first, second);
        self.wins[w * self.n + l] += 1;
        Ok(())
    }

    /// One RUCB selection at step `t >= 1`.
    pub fn step(&mut self, t: usize, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        if t == 0 {
            return Err(Error::Domain("RUCB steps are 1-based".into()));
        }
        let cands = self.candidates(t);
        let first = if cands.is_empty() {
            rng.gen_range(0..self.n)
        } else {
            if self.hypothesized_best.is_some_and(|b| !cands.contains(&b)) {
                self.hypothesized_best = None;
            }
            if cands.len() == 1 {
                self.hypothesized_best = Some(cands[0]);
                cands[0]
            } else {
                match self.hypothesized_best {
                    // the hypothesized best gets half the probability
                    Some(b) if rng.gen_bool(0.5) => b,
                    Some(b) => {
                        let rest: Vec<usize> = cands.iter().copied().filter(|&c| c != b).collect();
                        pick_uniform(&rest, rng)
                    }
                    None => pick_uniform(&cands, rng),
                }
            }
        };
        let mut best = f64::NEG_INFINITY;
        let mut ties = Vec::new();
        for j in (0..self.n).filter(|&j| j != first) {
            let u = self.upper(j, first, t);
            if u > best {
                best = u;
                ties.clear();
                ties.push(j);
            } else if u == best {
                ties.push(j);
            }
        }
        Ok((first, pick_uniform(&ties, rng)))
    }
}

#[derive(Debug, Clone)]
pub struct Rucb {
    state: RucbState,
}

impl Rucb {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Ok(Rucb {
            state: RucbState::new(n, alpha)?,
        })
    }

    pub fn state(&self) -> &RucbState {
        &self.state
    }
}

impl DuelPolicy for Rucb {
    fn name(&self) -> &str {
        "rucb"
    }

    fn select(&mut self, t: usize, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        self.state.step(t, rng)
    }

    fn observe(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        self.state.record(first, second, outcome)
    }
}

/// Wins-minus-losses scores and the incumbent (last winner).
#[derive(Debug, Clone, PartialEq)]
pub struct WsState {
    scores: Vec<i64>,
    incumbent: Option<usize>,
}

impl WsState {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("WS-W needs at least two arms".into()));
        }
        Ok(WsState {
            scores: vec![0; n],
            incumbent: None,
        })
    }

    pub fn with_scores(scores: Vec<i64>, incumbent: Option<usize>) -> Self {
        WsState { scores, incumbent }
    }

    pub fn scores(&self) -> &[i64] {
        &self.scores
    }

    pub fn incumbent(&self) -> Option<usize> {
        self.incumbent
    }

    /// Incumbent (or a uniform arm) against the top-scoring other arm.
    pub fn step(&self, rng: &mut dyn RngCore) -> (usize, usize) {
        let n = self.scores.len();
        let first = match self.incumbent {
            Some(a) => a,
            None => rng.gen_range(0..n),
        };
        let top = (0..n)
            .filter(|&a| a != first)
            .map(|a| self.scores[a])
            .max()
            .expect("at least two arms");
        let ties: Vec<usize> = (0..n)
            .filter(|&a| a != first && self.scores[a] == top)
            .collect();
        (first, pick_uniform(&ties, rng))
    }

    pub fn record(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        if first == second {
            return Err(Error::InvalidPair(first, second));
        }
        let (w, l) = outcome.resolve(first, second);
        self.scores[w] += 1;
        self.scores[l] -= 1;
        self.incumbent = Some(w);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WinnerStays {
    state: WsState,
}

impl WinnerStays {
    pub fn new(n: usize) -> Result<Self> {
        Ok(WinnerStays {
            state: WsState::new(n)?,
        })
    }

    pub fn state(&self) -> &WsState {
        &self.state
    }
}

impl DuelPolicy for WinnerStays {
    fn name(&self) -> &str {
        "ws-w"
    }

    fn select(&mut self, _t: usize, rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        Ok(self.state.step(rng))
    }

    fn observe(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        self.state.record(first, second, outcome)
    }
}
