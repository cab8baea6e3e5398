//! The duel loop, weak-regret accounting, replication streams, aggregation,
//! the regret bound calculator and the random-walk occupation check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{ArmSet, Instance, Outcome};
use crate::error::{Error, Result};
use crate::policy::DuelPolicy;

/// How per-step regret is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretMode {
    /// 1 unless the best arm is pulled.
    BinaryWeak,
    /// Utility gap between the best arm and the better pulled arm.
    UtilityWeak,
}

impl RegretMode {
    pub fn name(self) -> &'static str {
        match self {
            RegretMode::BinaryWeak => "binary-weak",
            RegretMode::UtilityWeak => "utility-weak",
        }
    }
}

/// One duel. Arms are utility ranks (0 is the best arm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub first: usize,
    pub second: usize,
    pub outcome: Outcome,
    pub instant_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub mode: RegretMode,
    pub records: Vec<StepRecord>,
}

impl RegretSeries {
    pub fn new(mode: RegretMode) -> Self {
        RegretSeries {
            mode,
            records: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    /// Cumulative regret after `t` duels (0 at `t = 0`).
    pub fn cum_at(&self, t: usize) -> Option<f64> {
        match t {
            0 => Some(0.0),
            _ => self.records.get(t - 1).map(|r| r.cum_regret),
        }
    }

    pub fn total(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }

    fn push(&mut self, first: usize, second: usize, outcome: Outcome, instant: f64) {
        let cum = self.total() + instant;
        self.records.push(StepRecord {
            t: self.records.len() + 1,
            first,
            second,
            outcome,
            instant_regret: instant,
            cum_regret: cum,
        });
    }
}

/// An instance as seen through a fixed relabeling.
///
/// Policies work with presented labels (the input order of the arms); the
/// oracle and the regret accounting work with utility ranks.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: Instance,
    presented: ArmSet,
    to_rank: Vec<usize>,
}

impl Environment {
    pub fn new(instance: Instance) -> Self {
        let order = instance.input_order();
        let mut to_rank = vec![0; order.len()];
        for (k, &i) in order.iter().enumerate() {
            to_rank[i] = k;
        }
        Environment {
            presented: instance.input_arms(),
            instance,
            to_rank,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// Feature vectors under presented labels.
    pub fn arms(&self) -> &ArmSet {
        &self.presented
    }

    pub fn n_arms(&self) -> usize {
        self.presented.len()
    }

    /// Utility rank of a presented label.
    pub fn rank(&self, presented: usize) -> usize {
        self.to_rank[presented]
    }

    /// Presented label of the best arm.
    pub fn best_presented(&self) -> usize {
        self.instance.input_order()[0]
    }

    pub fn duel<R: Rng + ?Sized>(&self, first: usize, second: usize, rng: &mut R) -> Result<Outcome> {
        let n = self.n_arms();
        if first >= n || second >= n {
            return Err(Error::Config(format!("arm out of range for {n} arms")));
        }
        self.instance
            .oracle()
            .sample_winner(self.rank(first), self.rank(second), rng)
    }

    /// Weak regret of pulling two arms given by utility rank.
    pub fn regret(&self, first: usize, second: usize, mode: RegretMode) -> f64 {
        let best = first.min(second);
        match mode {
            RegretMode::BinaryWeak => {
                if best == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            RegretMode::UtilityWeak => {
                let u = self.instance.utilities();
                u[0] - u[best]
            }
        }
    }

    /// `u(theta, A_1) - u(theta, A_N)`, or 1 for binary regret.
    pub fn regret_range(&self, mode: RegretMode) -> f64 {
        match mode {
            RegretMode::BinaryWeak => 1.0,
            RegretMode::UtilityWeak => {
                let u = self.instance.utilities();
                u[0] - u[u.len() - 1]
            }
        }
    }
}

/// Purposes of the independent random streams of a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Instance = 0,
    Oracle = 1,
    Policy = 2,
    Table = 3,
}

const STREAMS_PER_REPLICATION: u64 = 4;

/// A stream derived from the root seed by counter, so replication `r` can be
/// reproduced without running replications `0..r`.
pub fn stream(root_seed: u64, replication: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(replication * STREAMS_PER_REPLICATION + purpose as u64);
    rng
}

/// Runs duels until `horizon`, appending to `series`. On error the steps
/// completed so far stay in `series`.
pub fn run_into(
    policy: &mut dyn DuelPolicy,
    env: &Environment,
    horizon: usize,
    oracle_rng: &mut ChaCha8Rng,
    policy_rng: &mut ChaCha8Rng,
    series: &mut RegretSeries,
) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    for t in 1..=horizon {
        let at = |e: Error| Error::AtStep {
            t,
            source: Box::new(e),
        };
        let (first, second) = match policy.select(t, policy_rng) {
            Ok(pair) => pair,
            Err(Error::DegenerateCandidates { arm, runner_up }) => (arm, runner_up),
            Err(e) => return Err(at(e)),
        };
        if first == second {
            return Err(at(Error::InvalidPair(first, second)));
        }
        let outcome = env.duel(first, second, oracle_rng).map_err(at)?;
        policy.observe(first, second, outcome).map_err(at)?;
        let (rf, rs) = (env.rank(first), env.rank(second));
        series.push(rf, rs, outcome, env.regret(rf, rs, series.mode));
    }
    Ok(())
}

/// One replication with streams derived from `(root_seed, replication)`.
pub fn run_replication(
    policy: &mut dyn DuelPolicy,
    env: &Environment,
    horizon: usize,
    mode: RegretMode,
    root_seed: u64,
    replication: u64,
) -> Result<RegretSeries> {
    let mut oracle_rng = stream(root_seed, replication, Stream::Oracle);
    let mut policy_rng = stream(root_seed, replication, Stream::Policy);
    let mut series = RegretSeries::new(mode);
    run_into(policy, env, horizon, &mut oracle_rng, &mut policy_rng, &mut series)?;
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryPoint {
    pub t: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean and standard error of cumulative regret at each checkpoint.
pub fn aggregate<'a, I>(series: I, checkpoints: &[usize]) -> Result<Vec<SummaryPoint>>
where
    I: IntoIterator<Item = &'a RegretSeries>,
{
    let series: Vec<&RegretSeries> = series.into_iter().collect();
    let Some(first) = series.first() else {
        return Err(Error::Aggregation("no series to aggregate".into()));
    };
    let horizon = first.horizon();
    if let Some(s) = series.iter().find(|s| s.horizon() != horizon) {
        return Err(Error::Aggregation(format!(
            "mixed horizons {horizon} and {}",
            s.horizon()
        )));
    }
    checkpoints
        .iter()
        .map(|&t| {
            if t == 0 || t > horizon {
                return Err(Error::Aggregation(format!(
                    "checkpoint {t} outside 1..={horizon}"
                )));
            }
            let values: Vec<f64> = series.iter().map(|s| s.records[t - 1].cum_regret).collect();
            let (mean, stderr) = mean_stderr(&values);
            Ok(SummaryPoint { t, mean, stderr })
        })
        .collect()
}

/// Sample mean and `sd / sqrt(n)` with the `n - 1` variance.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Inputs of the cumulative regret bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n_arms: usize,
    /// Number of cells with finite initial score.
    pub m_prime: usize,
    pub p: f64,
    /// `min_s (m_1(0) - m_s(0))` over those cells; never positive.
    pub delta: f64,
    /// Utility range `u(A_1) - u(A_N)`.
    pub lambda: f64,
}

impl BoundInputs {
    /// Derives `M'` and `Delta` from initial scores; `true_cell` indexes the
    /// cell containing theta.
    pub fn from_scores(
        n_arms: usize,
        p: f64,
        lambda: f64,
        initial: &[f64],
        true_cell: usize,
    ) -> Result<Self> {
        let m1 = *initial
            .get(true_cell)
            .ok_or_else(|| Error::Config("true cell out of range".into()))?;
        if !m1.is_finite() {
            return Err(Error::Domain("the true cell has an infinite initial score".into()));
        }
        let finite: Vec<f64> = initial.iter().copied().filter(|m| m.is_finite()).collect();
        let delta = finite.iter().map(|m| m1 - m).fold(0.0, f64::min);
        Ok(BoundInputs {
            n_arms,
            m_prime: finite.len(),
            p,
            delta,
            lambda,
        })
    }
}

/// `(N-1)(N-2)/2 * M' * (p - Delta(2p-1)) / (2p-1)^2 * Lambda`.
pub fn theorem1_bound(b: &BoundInputs) -> Result<f64> {
    if !(b.p > 0.5 && b.p <= 1.0) {
        return Err(Error::Domain(format!("p must lie in (0.5, 1], got {}", b.p)));
    }
    if !(b.delta <= 0.0) {
        return Err(Error::Domain(format!("delta must be <= 0, got {}", b.delta)));
    }
    if !(b.lambda > 0.0 && b.lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {}", b.lambda)));
    }
    if b.n_arms < 2 {
        return Err(Error::Domain("at least two arms are needed".into()));
    }
    let n = b.n_arms as f64;
    let pairs = (n - 1.0) * (n - 2.0) / 2.0;
    let margin = 2.0 * b.p - 1.0;
    Ok(pairs * b.m_prime as f64 * (b.p - b.delta * margin) / (margin * margin) * b.lambda)
}

/// Expected time a walk with up-probability `p` spends at or below `s`.
pub fn lemma1_closed_form(p: f64, s: u64) -> Result<f64> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::Domain(format!("p must lie in (0.5, 1], got {p}")));
    }
    let margin = 2.0 * p - 1.0;
    Ok((p + s as f64 * margin) / (margin * margin))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Check {
    pub estimate: f64,
    pub stderr: f64,
    pub closed_form: f64,
}

impl Lemma1Check {
    /// Standardized distance between estimate and closed form.
    pub fn z_score(&self) -> f64 {
        let d = self.estimate - self.closed_form;
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY * d.signum()
        }
    }
}

pub const DEFAULT_LEMMA1_HORIZON: usize = 10_000;
const WALKS_PER_CHUNK: usize = 1_000;
// walks are dropped once a return below `s` has probability < 2^-40
const MAX_RETURN_BITS: f64 = 40.0;

/// Monte-Carlo estimate of `E sum_{t=0}^{horizon} 1{Z(t) <= s}` for walks
/// started at 0, alongside the closed form.
///
/// A walk is stopped early once it sits so far above `s` that the chance of
/// ever coming back is below `2^-40`.
pub fn lemma1_mc_check(p: f64, s: u64, walks: usize, horizon: usize, seed: u64) -> Result<Lemma1Check> {
    let closed_form = lemma1_closed_form(p, s)?;
    if walks == 0 {
        return Err(Error::Config("at least one walk is needed".into()));
    }
    let ratio = (1.0 - p) / p;
    let cutoff = if ratio > 0.0 {
        (MAX_RETURN_BITS * 2f64.ln() / -ratio.ln()).ceil() as i64
    } else {
        1
    };
    let s = s as i64;
    let chunks = walks.div_ceil(WALKS_PER_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = WALKS_PER_CHUNK.min(walks - c * WALKS_PER_CHUNK);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let mut z: i64 = 0;
                let mut occ: u64 = 1; // t = 0
                for _ in 0..horizon {
                    z += if rng.gen::<f64>() < p { 1 } else { -1 };
                    if z <= s {
                        occ += 1;
                    } else if z - s >= cutoff {
                        break;
                    }
                }
                let o = occ as f64;
                sum += o;
                sq += o * o;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = walks as f64;
    let estimate = sum / n;
    let stderr = if walks > 1 {
        ((sq - n * estimate * estimate).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(Lemma1Check {
        estimate,
        stderr,
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arms::{OracleSpec, UtilityModel};
    use approx::assert_abs_diff_eq;

    fn instance(arms: Vec<Vec<f64>>, theta: Vec<f64>, oracle: OracleSpec) -> Instance {
        Instance::new(ArmSet::new(arms).unwrap(), UtilityModel::linear(theta), oracle).unwrap()
    }

    struct Fixed(usize, usize);

    impl DuelPolicy for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn select(&mut self, _t: usize, _rng: &mut dyn rand::RngCore) -> Result<(usize, usize)> {
            Ok((self.0, self.1))
        }
        fn observe(&mut self, _: usize, _: usize, _: Outcome) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn bound_examples() {
        let b = |n, delta| BoundInputs {
            n_arms: n,
            m_prime: 7,
            p: 0.8,
            delta,
            lambda: 1.0,
        };
        assert_abs_diff_eq!(theorem1_bound(&b(3, 0.0)).unwrap(), 0.8 / 0.36 * 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(theorem1_bound(&b(3, 0.0)).unwrap(), 15.5556, epsilon = 1e-4);
        assert_abs_diff_eq!(theorem1_bound(&b(3, -1.0)).unwrap(), 27.2222, epsilon = 1e-4);
        assert_eq!(theorem1_bound(&b(2, 0.0)).unwrap(), 0.0);
        let mut bad = b(3, 0.0);
        bad.p = 0.5;
        assert!(matches!(theorem1_bound(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn bound_inputs_from_scores() {
        let b = BoundInputs::from_scores(3, 0.8, 1.0, &[0.0, 2.0, f64::NEG_INFINITY, -1.0], 0).unwrap();
        assert_eq!(b.m_prime, 3);
        assert_eq!(b.delta, -2.0);
    }

    #[test]
    fn lemma1_closed_form_examples() {
        assert_abs_diff_eq!(lemma1_closed_form(0.8, 0).unwrap(), 2.2222, epsilon = 1e-4);
        assert_abs_diff_eq!(lemma1_closed_form(0.8, 1).unwrap(), 3.8889, epsilon = 1e-4);
        assert_eq!(lemma1_closed_form(1.0, 0).unwrap(), 1.0);
        assert!(lemma1_closed_form(0.5, 0).is_err());
    }

    #[test]
    fn lemma1_deterministic_walk() {
        let c = lemma1_mc_check(1.0, 0, 100, 50, 1).unwrap();
        assert_eq!(c.estimate, 1.0);
        assert_eq!(c.z_score(), 0.0);
        let c = lemma1_mc_check(1.0, 3, 10, 50, 1).unwrap();
        assert_eq!(c.estimate, 4.0);
    }

    #[test]
    fn lemma1_is_reproducible() {
        let a = lemma1_mc_check(0.7, 1, 2_500, 10_000, 9).unwrap();
        let b = lemma1_mc_check(0.7, 1, 2_500, 10_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.z_score().abs() < 5.0, "{a:?}");
    }

    #[test]
    fn aggregate_examples() {
        let mk = |vals: &[f64]| RegretSeries {
            mode: RegretMode::BinaryWeak,
            records: vals
                .iter()
                .enumerate()
                .map(|(i, &c)| StepRecord {
                    t: i + 1,
                    first: 0,
                    second: 1,
                    outcome: Outcome::FirstWins,
                    instant_regret: 0.0,
                    cum_regret: c,
                })
                .collect(),
        };
        let one = mk(&[1.0, 2.0]);
        let s = aggregate([&one], &[1, 2]).unwrap();
        assert_eq!((s[1].mean, s[1].stderr), (2.0, 0.0));

        let (a, b, c) = (mk(&[0.0, 4.0]), mk(&[0.0, 6.0]), mk(&[0.0, 11.0]));
        assert_eq!(aggregate([&a, &b], &[2]).unwrap()[0].mean, 5.0);
        // sd of (4, 6, 11) = sqrt(13), stderr = sqrt(13 / 3)
        let s = aggregate([&a, &b, &c], &[2]).unwrap()[0];
        assert_abs_diff_eq!(s.mean, 7.0);
        assert_abs_diff_eq!(s.stderr, (13.0f64 / 3.0).sqrt(), epsilon = 1e-12);

        let short = mk(&[0.0]);
        assert!(matches!(aggregate([&a, &short], &[1]), Err(Error::Aggregation(_))));
        assert!(aggregate([&a], &[3]).is_err());
        assert!(aggregate(std::iter::empty(), &[1]).is_err());
    }

    #[test]
    fn two_arms_have_no_weak_regret() {
        let inst = instance(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.2, 0.9],
            OracleSpec::BradleyTerry,
        );
        let env = Environment::new(inst);
        for mode in [RegretMode::BinaryWeak, RegretMode::UtilityWeak] {
            let s = run_replication(&mut Fixed(0, 1), &env, 50, mode, 3, 0).unwrap();
            assert_eq!(s.total(), 0.0);
        }
    }

    #[test]
    fn regret_accounting() {
        // input order: ranks 2, 0, 1
        let inst = instance(
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.6, 0.8]],
            vec![1.0, 0.0],
            OracleSpec::ConstantP { p: 0.8 },
        );
        let env = Environment::new(inst);
        assert_eq!(env.best_presented(), 1);
        assert_eq!((env.rank(0), env.rank(1), env.rank(2)), (2, 0, 1));
        let s = run_replication(&mut Fixed(0, 2), &env, 10, RegretMode::UtilityWeak, 1, 0).unwrap();
        assert_abs_diff_eq!(s.records[0].instant_regret, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.total(), 4.0, epsilon = 1e-9);
        assert_eq!((s.records[0].first, s.records[0].second), (2, 1));
        let s = run_replication(&mut Fixed(0, 2), &env, 10, RegretMode::BinaryWeak, 1, 0).unwrap();
        assert_eq!(s.total(), 10.0);
        let s = run_replication(&mut Fixed(1, 0), &env, 10, RegretMode::BinaryWeak, 1, 0).unwrap();
        assert_eq!(s.total(), 0.0);
        for (k, r) in s.records.iter().enumerate() {
            assert_eq!(r.t, k + 1);
        }
    }

    #[test]
    fn invalid_pairs_carry_the_step() {
        let inst = instance(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.2, 0.9],
            OracleSpec::BradleyTerry,
        );
        let env = Environment::new(inst);
        let err = run_replication(&mut Fixed(1, 1), &env, 5, RegretMode::BinaryWeak, 0, 0).unwrap_err();
        assert!(matches!(err, Error::AtStep { t: 1, .. }));
        assert!(run_replication(&mut Fixed(0, 1), &env, 0, RegretMode::BinaryWeak, 0, 0).is_err());
    }

    #[test]
    fn streams_are_counter_based() {
        let a: u64 = stream(5, 3, Stream::Oracle).gen();
        let b: u64 = stream(5, 3, Stream::Oracle).gen();
        let c: u64 = stream(5, 3, Stream::Policy).gen();
        let d: u64 = stream(5, 4, Stream::Oracle).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
