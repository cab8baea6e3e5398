//! Comparing-the-best for decomposable initial scores.
//!
//! When every cell's initial score is a sum of per-pair priors `r[i][j]`
//! over the pairs it orients, a cell's score is recoverable from the pair
//! win counts alone. The best score among cells that rank `k` first then has
//! a closed form: pairs touching `k` are forced to `k`'s side and every other
//! pair independently takes its larger orientation. Selection is `O(N^2)`.

use rand::RngCore;

use crate::arms::Outcome;
use crate::cells::CellVector;
use crate::error::{Error, Result};
use crate::policy::DuelPolicy;

/// Pairwise win counts `q[i][j]` and priors `r[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    n: usize,
    wins: Vec<u64>,
    priors: Vec<f64>,
    t: u64,
}

impl PairState {
    /// Zero counts and zero priors.
    pub fn new(n: usize) -> Self {
        PairState {
            n,
            wins: vec![0; n * n],
            priors: vec![0.0; n * n],
            t: 0,
        }
    }

    /// Zero counts with the given prior matrix (diagonal ignored).
    pub fn with_priors(priors: &[Vec<f64>]) -> Result<Self> {
        let n = priors.len();
        if n < 2 || priors.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "prior matrix must be square with at least 2 rows, got {n} rows"
            )));
        }
        let mut s = PairState::new(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let r = priors[i][j];
                    if !r.is_finite() {
                        return Err(Error::Config(format!(
                            "prior r[{}][{}] is not finite",
                            i + 1,
                            j + 1
                        )));
                    }
                    s.priors[i * n + j] = r;
                }
            }
        }
        Ok(s)
    }

    pub fn n_arms(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// `q[i][j]`: duels `i` has won against `j`.
    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.n + j]
    }

    pub fn prior(&self, i: usize, j: usize) -> f64 {
        self.priors[i * self.n + j]
    }

    /// Number of duels between `i` and `j`.
    pub fn duels(&self, i: usize, j: usize) -> u64 {
        self.wins(i, j) + self.wins(j, i)
    }

    #[inline]
    fn weight(&self, i: usize, j: usize) -> f64 {
        self.wins[i * self.n + j] as f64 + self.priors[i * self.n + j]
    }

    pub fn record_duel(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        if first == second {
            return Err(Error::InvalidPair(first, second));
        }
        if first >= self.n || second >= self.n {
            return Err(Error::Config(format!("arm out of range for {} arms", self.n)));
        }
        let (w, l) = outcome.resolve(first, second);
        self.wins[w * self.n + l] += 1;
        self.t += 1;
        Ok(())
    }

    /// `f(k, t)`: the largest reconstructed score among cells ranking `k` first.
    pub fn best_cell_value(&self, k: usize) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                total += if i == k {
                    self.weight(k, j)
                } else if j == k {
                    self.weight(k, i)
                } else {
                    self.weight(i, j).max(self.weight(j, i))
                };
            }
        }
        total
    }

    /// `f(k, t)` for every arm in one `O(N^2)` pass.
    pub fn best_cell_values(&self) -> Vec<f64> {
        let n = self.n;
        let mut forced = vec![0.0; n];
        let mut lost_max = vec![0.0; n];
        let mut all_max = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (self.weight(i, j), self.weight(j, i));
                let m = a.max(b);
                all_max += m;
                forced[i] += a;
                forced[j] += b;
                lost_max[i] += m;
                lost_max[j] += m;
            }
        }
        (0..n).map(|k| forced[k] + (all_max - lost_max[k])).collect()
    }

    /// `(argmax_k f, argmax_{k != first} f)`, lowest label on ties.
    pub fn select_arms(&self) -> (usize, usize) {
        let f = if self.priors.iter().all(|&r| r == 0.0) {
            // integer counts: the one-pass form is exact
            self.best_cell_values()
        } else {
            (0..self.n).map(|k| self.best_cell_value(k)).collect()
        };
        let first = argmax_excluding(&f, None);
        let second = argmax_excluding(&f, Some(first));
        (first, second)
    }

    /// `m(t) = m(0) + sum of q over the pairs the cell orients`.
    pub fn reconstruct_score(&self, cell: &CellVector, initial: f64) -> f64 {
        let mut s = initial;
        for (w, l) in cell.membership() {
            s += self.wins(w, l) as f64;
        }
        s
    }

    /// Initial score implied by the priors for `cell`.
    pub fn decomposed_initial(&self, cell: &CellVector) -> f64 {
        cell.membership()
            .into_iter()
            .map(|(w, l)| self.prior(w, l))
            .sum()
    }
}

fn argmax_excluding(values: &[f64], exclude: Option<usize>) -> usize {
    let mut best: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if Some(k) == exclude {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(k);
        }
    }
    best.expect("at least two arms")
}

/// Fast CTB as a [`DuelPolicy`].
#[derive(Debug, Clone)]
pub struct FastCtb {
    name: String,
    state: PairState,
}

impl FastCtb {
    pub fn new(name: impl Into<String>, state: PairState) -> Self {
        FastCtb {
            name: name.into(),
            state,
        }
    }

    pub fn state(&self) -> &PairState {
        &self.state
    }
}

impl DuelPolicy for FastCtb {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, _t: usize, _rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        Ok(self.state.select_arms())
    }

    fn observe(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        self.state.record_duel(first, second, outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::CellTable;
    use crate::explicit::{InitVariant, ScoreTable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn with_counts(n: usize, counts: &[(usize, usize, u64)]) -> PairState {
        let mut s = PairState::new(n);
        for &(w, l, c) in counts {
            for _ in 0..c {
                s.record_duel(w, l, Outcome::FirstWins).unwrap();
            }
        }
        s
    }

    #[test]
    fn record_duel_updates_one_count() {
        let mut s = PairState::new(3);
        s.record_duel(0, 1, Outcome::FirstWins).unwrap();
        assert_eq!(s.wins(0, 1), 1);
        s.record_duel(0, 1, Outcome::SecondWins).unwrap();
        assert_eq!(s.wins(1, 0), 1);
        assert_eq!(s.duels(0, 1), 2);
        assert_eq!(s.t(), 2);
        assert!(s.record_duel(1, 1, Outcome::FirstWins).is_err());
    }

    #[test]
    fn closed_form_worked_example() {
        let s = with_counts(3, &[(0, 1, 2), (1, 0, 1), (2, 0, 1), (1, 2, 3)]);
        assert_eq!(s.best_cell_value(0), 5.0);
        assert_eq!(s.best_cell_value(1), 5.0);
        assert_eq!(s.best_cell_value(2), 3.0);
        assert_eq!(s.best_cell_values(), vec![5.0, 5.0, 3.0]);
        assert_eq!(s.select_arms(), (0, 1));
    }

    #[test]
    fn zero_state() {
        let s = PairState::new(5);
        assert!(s.best_cell_values().iter().all(|&f| f == 0.0));
        assert_eq!(s.select_arms(), (0, 1));
    }

    #[test]
    fn select_sorts_values() {
        let s = with_counts(3, &[(1, 0, 4), (1, 2, 4), (2, 0, 3), (0, 1, 1)]);
        assert_eq!(s.best_cell_values(), vec![5.0, 11.0, 7.0]);
        assert_eq!(s.select_arms(), (1, 2));

        // priors chosen so that f = (1, 9, 4)
        let s = PairState::with_priors(&[
            vec![0.0, -2.0, -2.0],
            vec![2.0, 0.0, 5.0],
            vec![2.0, 0.0, 0.0],
        ])
        .unwrap();
        let f: Vec<f64> = (0..3).map(|k| s.best_cell_value(k)).collect();
        assert_eq!(f, vec![1.0, 9.0, 4.0]);
        assert_eq!(s.best_cell_values(), f);
        assert_eq!(s.select_arms(), (1, 2));
    }

    #[test]
    fn c1_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = PairState::new(4);
        for _ in 0..40 {
            let a = rng.gen_range(0..4);
            let b = (a + rng.gen_range(1..4)) % 4;
            s.record_duel(a, b, Outcome::from_bit(rng.gen_range(0..2))).unwrap();
        }
        let upper: u64 = (0..4)
            .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
            .map(|(i, j)| s.wins(i, j))
            .sum();
        assert_eq!(s.reconstruct_score(&CellVector::zeros(4), 2.5), 2.5 + upper as f64);
        assert_eq!(PairState::new(4).reconstruct_score(&CellVector::zeros(4), 0.0), 0.0);
    }

    #[test]
    fn reconstruction_matches_explicit_scores() {
        let table = CellTable::exhaustive(4).unwrap();
        let mut explicit = ScoreTable::new(&table, InitVariant::Ctb2Explicit).unwrap();
        let mut fast = PairState::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = rng.gen_range(0..4);
            let b = (a + rng.gen_range(1..4)) % 4;
            let y = Outcome::from_bit(rng.gen_range(0..2));
            explicit.update(&table, a, b, y).unwrap();
            fast.record_duel(a, b, y).unwrap();
        }
        for (i, c) in table.cells().iter().enumerate() {
            assert_eq!(fast.reconstruct_score(&c.vector, 0.0), explicit.score(i));
        }
    }
}
