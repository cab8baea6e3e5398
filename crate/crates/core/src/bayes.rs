//! Cell posterior under a per-duel likelihood, the prior-to-score map, and
//! Thompson sampling over cells.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::arms::{bradley_terry, probit, ArmSet, Outcome, UtilityKind};
use crate::cells::CellTable;
use crate::error::{Error, Result};
use crate::policy::DuelPolicy;

fn check_q(q: f64) -> Result<()> {
    if q > 0.5 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("q must lie in (0.5, 1), got {q}")))
    }
}

/// `m_i(0) = log p_0(C_i) / log(q / (1 - q))`; zero mass maps to `-inf`.
pub fn prior_to_scores(prior: &[f64], q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    let scale = (q / (1.0 - q)).ln();
    prior
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                Err(Error::Config(format!("prior mass {p} outside [0, 1]")))
            } else if p == 0.0 {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(p.ln() / scale)
            }
        })
        .collect()
}

/// Normalized `p_0(C_i) q^{inc_i} (1-q)^{t - inc_i}`, evaluated in log space.
pub fn posterior_closed_form(prior: &[f64], q: f64, t: u64, inc: &[u64]) -> Result<Vec<f64>> {
    if prior.len() != inc.len() {
        return Err(Error::Config("prior and increment lengths differ".into()));
    }
    if let Some(&bad) = inc.iter().find(|&&k| k > t) {
        return Err(Error::Domain(format!("increment {bad} exceeds t = {t}")));
    }
    let (lq, lnq) = (q.ln(), (1.0 - q).ln());
    let logs: Vec<f64> = prior
        .iter()
        .zip(inc)
        .map(|(&p, &k)| {
            if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln() + k as f64 * lq + (t - k) as f64 * lnq
            }
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::PosteriorUnderflow);
    }
    let weights: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Per-cell probability that the observed winner beats the loser.
#[derive(Debug, Clone)]
pub enum CellLikelihood {
    /// `q` on the winner's side, `1 - q` elsewhere.
    ConstantQ(f64),
    /// Bradley-Terry probability at each cell's representative point.
    BradleyTerry,
    /// Probit probability at each cell's representative point.
    Probit,
}

/// Posterior masses `p_t(C_i)` over the cells of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPosterior {
    masses: Vec<f64>,
    increments: Vec<u64>,
    t: u64,
}

impl CellPosterior {
    pub fn new(prior: Vec<f64>) -> Result<Self> {
        let total: f64 = prior.iter().sum();
        if prior.iter().any(|&p| !(p >= 0.0 && p.is_finite())) || !(total > 0.0) {
            return Err(Error::Config("prior masses must be non-negative with positive sum".into()));
        }
        let increments = vec![0; prior.len()];
        Ok(CellPosterior {
            masses: prior.into_iter().map(|p| p / total).collect(),
            increments,
            t: 0,
        })
    }

    pub fn from_table(table: &CellTable) -> Result<Self> {
        CellPosterior::new(table.cells().iter().map(|c| c.prior_mass).collect())
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Duels won by a winning space containing each cell.
    pub fn increments(&self) -> &[u64] {
        &self.increments
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Multiplies each mass by its likelihood and renormalizes.
    pub fn update(
        &mut self,
        table: &CellTable,
        first: usize,
        second: usize,
        outcome: Outcome,
        likelihoods: &[f64],
    ) -> Result<()> {
        if first == second {
            return Err(Error::InvalidPair(first, second));
        }
        if likelihoods.len() != self.masses.len() || table.len() != self.masses.len() {
            return Err(Error::Config("likelihood vector does not match the table".into()));
        }
        let (w, l) = outcome.resolve(first, second);
        let mut total = 0.0;
        for (m, &lk) in self.masses.iter_mut().zip(likelihoods) {
            *m *= lk;
            total += *m;
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::PosteriorUnderflow);
        }
        for m in &mut self.masses {
            *m /= total;
        }
        for (inc, c) in self.increments.iter_mut().zip(table.cells()) {
            if c.vector.prefers(w, l) {
                *inc += 1;
            }
        }
        self.t += 1;
        Ok(())
    }

    /// Index of a cell drawn in proportion to its mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let total: f64 = self.masses.iter().sum();
        let mut acc = 0.0;
        let target = u * total;
        let mut last_positive = 0;
        for (i, &m) in self.masses.iter().enumerate() {
            if m > 0.0 {
                last_positive = i;
                acc += m;
                if target < acc {
                    return i;
                }
            }
        }
        last_positive
    }
}

/// Winner-over-loser likelihoods for every cell of `table`.
pub fn cell_likelihoods(
    table: &CellTable,
    arms: &ArmSet,
    kind: &UtilityKind,
    model: &CellLikelihood,
    winner: usize,
    loser: usize,
) -> Result<Vec<f64>> {
    table
        .cells()
        .iter()
        .map(|c| match model {
            CellLikelihood::ConstantQ(q) => Ok(if c.vector.prefers(winner, loser) {
                *q
            } else {
                1.0 - q
            }),
            CellLikelihood::BradleyTerry | CellLikelihood::Probit => {
                let rep = c.representative.as_ref().ok_or_else(|| {
                    Error::Config("model likelihoods need cell representatives".into())
                })?;
                let uw = kind.eval(rep, arms.feature(winner))?;
                let ul = kind.eval(rep, arms.feature(loser))?;
                Ok(match model {
                    CellLikelihood::BradleyTerry => bradley_terry(uw, ul),
                    _ => probit(uw, ul),
                })
            }
        })
        .collect()
}

/// Thompson sampling: draw a cell from the posterior, duel its top two arms.
#[derive(Debug, Clone)]
pub struct Thompson {
    name: String,
    table: Arc<CellTable>,
    posterior: CellPosterior,
    // per ordered pair (winner, loser): likelihood of every cell
    likelihoods: Vec<Vec<f64>>,
}

impl Thompson {
    pub fn new(
        name: impl Into<String>,
        table: Arc<CellTable>,
        arms: &ArmSet,
        kind: &UtilityKind,
        model: CellLikelihood,
    ) -> Result<Self> {
        if let CellLikelihood::ConstantQ(q) = model {
            if !(q > 0.5 && q <= 1.0) {
                return Err(Error::Config(format!("likelihood q must lie in (0.5, 1], got {q}")));
            }
        }
        let n = table.n_arms();
        if arms.len() != n {
            return Err(Error::Config("arm count does not match cell table".into()));
        }
        let mut likelihoods = vec![Vec::new(); n * n];
        for w in 0..n {
            for l in 0..n {
                if w != l {
                    likelihoods[w * n + l] = cell_likelihoods(&table, arms, kind, &model, w, l)?;
                }
            }
        }
        let posterior = CellPosterior::from_table(&table)?;
        Ok(Thompson {
            name: name.into(),
            table,
            posterior,
            likelihoods,
        })
    }

    pub fn posterior(&self) -> &CellPosterior {
        &self.posterior
    }

    /// Top two arms of a posterior draw.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let cell = self.table.get(self.posterior.sample(rng));
        (cell.best_arm, cell.runner_up())
    }
}

impl DuelPolicy for Thompson {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, _t: usize, mut rng: &mut dyn RngCore) -> Result<(usize, usize)> {
        Ok(self.step(&mut rng))
    }

    fn observe(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()> {
        let (w, l) = outcome.resolve(first, second);
        let n = self.table.n_arms();
        let lk = &self.likelihoods[w * n + l];
        self.posterior.update(&self.table, first, second, outcome, lk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{Cell, CellVector};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(rankings: &[&[usize]], masses: &[f64]) -> CellTable {
        CellTable::from_cells(
            rankings[0].len(),
            rankings.iter().zip(masses).map(|(r, &m)| Cell {
                vector: CellVector::from_ranking(r),
                best_arm: r[0],
                representative: None,
                prior_mass: m,
            }),
        )
        .unwrap()
    }

    #[test]
    fn prior_scores() {
        let s = prior_to_scores(&[1.0, 0.5, 0.0], 0.6).unwrap();
        assert_eq!(s[0], 0.0);
        assert_abs_diff_eq!(s[1], -1.709_511_29, epsilon = 1e-8);
        assert_eq!(s[2], f64::NEG_INFINITY);
        assert!(prior_to_scores(&[0.5], 0.5).is_err());
        assert!(prior_to_scores(&[0.5], 0.4).is_err());
    }

    #[test]
    fn two_cell_update() {
        let t = table(&[&[0, 1], &[1, 0]], &[0.5, 0.5]);
        let mut p = CellPosterior::from_table(&t).unwrap();
        let lk = cell_likelihoods(
            &t,
            &ArmSet::new(vec![vec![0.0], vec![1.0]]).unwrap(),
            &UtilityKind::Linear,
            &CellLikelihood::ConstantQ(0.8),
            0,
            1,
        )
        .unwrap();
        p.update(&t, 0, 1, Outcome::FirstWins, &lk).unwrap();
        assert_abs_diff_eq!(p.masses()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(p.masses()[1], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn uninformative_and_zero_mass() {
        let t = table(&[&[0, 1, 2], &[1, 0, 2], &[2, 1, 0]], &[0.3, 0.7, 0.0]);
        let mut p = CellPosterior::from_table(&t).unwrap();
        p.update(&t, 0, 1, Outcome::SecondWins, &[0.5, 0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(p.masses()[0], 0.3, epsilon = 1e-15);
        p.update(&t, 2, 1, Outcome::FirstWins, &[0.2, 0.2, 0.8]).unwrap();
        let zero = t.find(&CellVector::from_ranking(&[2, 1, 0])).unwrap();
        assert_eq!(p.masses()[zero], 0.0);
        assert!((p.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn underflow_is_reported() {
        let t = table(&[&[0, 1], &[1, 0]], &[1.0, 0.0]);
        let mut p = CellPosterior::from_table(&t).unwrap();
        assert_eq!(
            p.update(&t, 0, 1, Outcome::SecondWins, &[0.0, 1.0]),
            Err(Error::PosteriorUnderflow)
        );
    }

    #[test]
    fn closed_form_basics() {
        let prior = [0.2, 0.3, 0.5];
        let p = posterior_closed_form(&prior, 0.7, 0, &[0, 0, 0]).unwrap();
        for (a, b) in p.iter().zip(prior) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let t = 7;
        let p = posterior_closed_form(&[0.5, 0.5], 0.6, t, &[t, 0]).unwrap();
        assert_abs_diff_eq!(p[0] / p[1], 1.5f64.powi(7), epsilon = 1e-9);
        assert!(posterior_closed_form(&[0.5, 0.5], 0.6, 1, &[2, 0]).is_err());
    }

    #[test]
    fn thompson_concentrated_posterior() {
        let t = Arc::new(table(&[&[2, 0, 1]], &[1.0]));
        let arms = ArmSet::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let th = Thompson::new("thompson", t, &arms, &UtilityKind::Linear, CellLikelihood::ConstantQ(0.8))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(th.step(&mut rng), (2, 0));
        }
    }

    #[test]
    fn thompson_frequencies_and_determinism() {
        let t = Arc::new(table(&[&[0, 1, 2], &[1, 2, 0]], &[0.5, 0.5]));
        let arms = ArmSet::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let th = Thompson::new("thompson", t, &arms, &UtilityKind::Linear, CellLikelihood::ConstantQ(0.8))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let hits = (0..n).filter(|_| th.step(&mut rng) == (0, 1)).count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.005);

        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<_> = (0..100).map(|_| th.step(&mut a)).collect();
        let ys: Vec<_> = (0..100).map(|_| th.step(&mut b)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn model_likelihood_at_representatives() {
        let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let t = crate::cells::enumerate_cells(&arms, &UtilityKind::Linear, &crate::cells::Backend::AngularSweep)
            .unwrap();
        let lk = cell_likelihoods(&t, &arms, &UtilityKind::Linear, &CellLikelihood::BradleyTerry, 0, 1)
            .unwrap();
        for (c, l) in t.cells().iter().zip(&lk) {
            assert_eq!(*l > 0.5, c.vector.prefers(0, 1));
        }
    }
}
