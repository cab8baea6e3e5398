//! Arms, utilities and the simulated preference environment.
//!
//! An [`Instance`] is always stored in utility order: arm 0 has the highest
//! utility under the hidden preference vector, arm `N-1` the lowest. Policies
//! never see this ordering directly; the harness presents arms under a
//! shuffled labeling.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Minimum utility gap between any two arms of a valid instance.
pub const UTILITY_GAP: f64 = 1e-12;

const MAX_REGENERATIONS: usize = 64;

/// Feature vectors of `N >= 2` pairwise distinct arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    features: Vec<Vec<f64>>,
    dim: usize,
}

impl ArmSet {
    pub fn new(features: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 arms, got {}",
                features.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::Config("feature vectors must be non-empty".into()));
        }
        for f in &features {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: f.len(),
                });
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("feature vectors must be finite".into()));
            }
        }
        for i in 0..features.len() {
            for j in i + 1..features.len() {
                if features[i] == features[j] {
                    return Err(Error::Config(format!(
                        "arms {} and {} share a feature vector",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(ArmSet { features, dim })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature(&self, arm: usize) -> &[f64] {
        &self.features[arm]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    /// Returns a copy whose arm `k` is this set's arm `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> ArmSet {
        ArmSet {
            features: order.iter().map(|&i| self.features[i].clone()).collect(),
            dim: self.dim,
        }
    }
}

/// Scalar utility `u(x, A)` of a feature vector `A` under preference vector `x`.
pub type UtilityFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// The known utility function shared by the environment and the policies.
#[derive(Clone)]
pub enum UtilityKind {
    /// `u(x, A) = x . A`
    Linear,
    /// Arbitrary user function; `pref_dim` is the length of `x`.
    Custom { pref_dim: usize, f: Arc<UtilityFn> },
}

impl fmt::Debug for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityKind::Linear => write!(f, "Linear"),
            UtilityKind::Custom { pref_dim, .. } => write!(f, "Custom(d'={pref_dim})"),
        }
    }
}

impl UtilityKind {
    pub fn is_linear(&self) -> bool {
        matches!(self, UtilityKind::Linear)
    }

    /// Evaluates `u(x, arm)`.
    pub fn eval(&self, x: &[f64], arm: &[f64]) -> Result<f64> {
        match self {
            UtilityKind::Linear => {
                if x.len() != arm.len() {
                    return Err(Error::DimensionMismatch {
                        expected: arm.len(),
                        found: x.len(),
                    });
                }
                Ok(x.iter().zip(arm).map(|(a, b)| a * b).sum())
            }
            UtilityKind::Custom { pref_dim, f } => {
                if x.len() != *pref_dim {
                    return Err(Error::DimensionMismatch {
                        expected: *pref_dim,
                        found: x.len(),
                    });
                }
                Ok(f(x, arm))
            }
        }
    }

    /// Utilities of every arm at `x`.
    pub fn eval_all(&self, x: &[f64], arms: &ArmSet) -> Result<Vec<f64>> {
        arms.features().iter().map(|a| self.eval(x, a)).collect()
    }
}

/// Utility function together with the hidden preference vector.
#[derive(Debug, Clone)]
pub struct UtilityModel {
    pub kind: UtilityKind,
    pub theta: Vec<f64>,
}

impl UtilityModel {
    pub fn linear(theta: Vec<f64>) -> Self {
        UtilityModel {
            kind: UtilityKind::Linear,
            theta,
        }
    }

    pub fn utility(&self, arm: &[f64]) -> Result<f64> {
        self.kind.eval(&self.theta, arm)
    }
}

/// Bradley-Terry win probability of a utility `ui` against `uj`.
pub fn bradley_terry(ui: f64, uj: f64) -> f64 {
    // logistic of the difference; stable for large gaps
    1.0 / (1.0 + (uj - ui).exp())
}

/// Probit win probability `Phi(ui - uj)`.
pub fn probit(ui: f64, uj: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.cdf(ui - uj)
}

/// How the environment turns utilities into win probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleSpec {
    /// The better arm wins with probability `p` in every pair.
    ConstantP { p: f64 },
    BradleyTerry,
    Probit,
    /// Row-major `p_{i,j}` in the arms' original labeling.
    ExplicitMatrix { matrix: Vec<Vec<f64>> },
}

impl OracleSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OracleSpec::ConstantP { .. } => "constant-p",
            OracleSpec::BradleyTerry => "bradley-terry",
            OracleSpec::Probit => "probit",
            OracleSpec::ExplicitMatrix { .. } => "explicit-matrix",
        }
    }
}

/// Outcome `Y_t` of a duel between `first` and `second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// `Y_t = 0`
    FirstWins,
    /// `Y_t = 1`
    SecondWins,
}

impl Outcome {
    pub fn bit(self) -> u8 {
        match self {
            Outcome::FirstWins => 0,
            Outcome::SecondWins => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Outcome::FirstWins
        } else {
            Outcome::SecondWins
        }
    }

    /// `(winner, loser)` of the duel.
    pub fn resolve(self, first: usize, second: usize) -> (usize, usize) {
        match self {
            Outcome::FirstWins => (first, second),
            Outcome::SecondWins => (second, first),
        }
    }
}

/// The simulated environment: a full `p_{i,j}` matrix in utility order.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceOracle {
    spec: OracleSpec,
    probs: Vec<Vec<f64>>,
}

impl PreferenceOracle {
    /// Builds the matrix for arms already sorted by decreasing utility.
    ///
    /// The upper triangle holds the winning probability of the better arm;
    /// the lower triangle is its exact complement.
    pub fn build(spec: OracleSpec, utilities: &[f64]) -> Result<Self> {
        let n = utilities.len();
        for w in utilities.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::Config(
                    "oracle construction expects utilities in strictly decreasing order".into(),
                ));
            }
        }
        let mut probs = vec![vec![0.5; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let pij = match &spec {
                    OracleSpec::ConstantP { p } => *p,
                    OracleSpec::BradleyTerry => bradley_terry(utilities[i], utilities[j]),
                    OracleSpec::Probit => probit(utilities[i], utilities[j]),
                    OracleSpec::ExplicitMatrix { matrix } => matrix[i][j],
                };
                if !(pij > 0.5 && pij <= 1.0) {
                    return Err(Error::InconsistentOracle(format!(
                        "total order: p[{}][{}] = {pij} but arm {} has the higher utility",
                        i + 1,
                        j + 1,
                        i + 1
                    )));
                }
                probs[i][j] = pij;
                probs[j][i] = 1.0 - pij;
            }
        }
        Ok(PreferenceOracle { spec, probs })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn n_arms(&self) -> usize {
        self.probs.len()
    }

    /// `p_{i,j}`, the probability that `i` beats `j`.
    pub fn win_prob(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::InvalidPair(i, j));
        }
        Ok(self.probs[i][j])
    }

    /// `p = min_{i<j} max(p_ij, p_ji)`.
    pub fn min_margin_prob(&self) -> f64 {
        let n = self.probs.len();
        let mut p = 1.0f64;
        for i in 0..n {
            for j in i + 1..n {
                p = p.min(self.probs[i][j].max(self.probs[j][i]));
            }
        }
        p
    }

    /// Draws `Y_t` using exactly one uniform from `rng`.
    pub fn sample_winner<R: Rng + ?Sized>(
        &self,
        first: usize,
        second: usize,
        rng: &mut R,
    ) -> Result<Outcome> {
        let p = self.win_prob(first, second)?;
        let u: f64 = rng.gen();
        Ok(if u < p {
            Outcome::FirstWins
        } else {
            Outcome::SecondWins
        })
    }
}

/// Which instance to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// 20 arms and theta uniform on the unit circle, constant `p = 0.8`.
    #[serde(rename = "setting-1")]
    Setting1,
    /// 19 arms on the negative-quadrant arc, one arm and theta on the
    /// positive-quadrant arc, Bradley-Terry preferences.
    #[serde(rename = "setting-2")]
    Setting2,
    /// Arms and theta either given or drawn uniformly from the unit sphere.
    Custom {
        n_arms: usize,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<Vec<f64>>,
        oracle: OracleSpec,
    },
}

/// A validated problem instance in utility order.
#[derive(Debug, Clone)]
pub struct Instance {
    arms: ArmSet,
    model: UtilityModel,
    utilities: Vec<f64>,
    oracle: PreferenceOracle,
    input_order: Vec<usize>,
}

impl Instance {
    /// Validates distinct utilities, relabels arms by decreasing utility and
    /// builds the oracle. An explicit matrix is given in the input labeling.
    pub fn new(arms: ArmSet, model: UtilityModel, oracle: OracleSpec) -> Result<Self> {
        let utilities = model.kind.eval_all(&model.theta, &arms)?;
        if utilities.iter().any(|u| !u.is_finite()) {
            return Err(Error::Config("utility is not finite".into()));
        }
        let n = arms.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| utilities[b].total_cmp(&utilities[a]));
        for w in order.windows(2) {
            if utilities[w[0]] - utilities[w[1]] <= UTILITY_GAP {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::UtilityTie(a + 1, b + 1));
            }
        }
        let oracle = match oracle {
            OracleSpec::ExplicitMatrix { matrix } => {
                check_matrix(&matrix, n)?;
                let relabeled = order
                    .iter()
                    .map(|&i| order.iter().map(|&j| matrix[i][j]).collect())
                    .collect();
                OracleSpec::ExplicitMatrix { matrix: relabeled }
            }
            OracleSpec::ConstantP { p } if !(p > 0.5 && p <= 1.0) => {
                return Err(Error::Config(format!("constant p must lie in (0.5, 1], got {p}")));
            }
            other => other,
        };
        let sorted_utils: Vec<f64> = order.iter().map(|&i| utilities[i]).collect();
        let oracle = PreferenceOracle::build(oracle, &sorted_utils)?;
        Ok(Instance {
            arms: arms.permuted(&order),
            model,
            utilities: sorted_utils,
            oracle,
            input_order: order,
        })
    }

    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    pub fn model(&self) -> &UtilityModel {
        &self.model
    }

    pub fn oracle(&self) -> &PreferenceOracle {
        &self.oracle
    }

    /// Utilities in arm order (strictly decreasing).
    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    /// `input_order()[k]` is the input position of the arm with utility rank `k`.
    pub fn input_order(&self) -> &[usize] {
        &self.input_order
    }

    /// Arms in the order they were supplied or generated.
    pub fn input_arms(&self) -> ArmSet {
        let mut inverse = vec![0; self.input_order.len()];
        for (k, &i) in self.input_order.iter().enumerate() {
            inverse[i] = k;
        }
        self.arms.permuted(&inverse)
    }
}

fn check_matrix(m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("preference matrix must be {n}x{n}")));
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (m[i][j], m[j][i]);
            if !((a + b) - 1.0).abs().le(&1e-12) {
                return Err(Error::InconsistentOracle(format!(
                    "p[{}][{}] + p[{}][{}] = 1",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1
                )));
            }
            if a == 0.5 {
                return Err(Error::InconsistentOracle(format!(
                    "p[{}][{}] != 0.5",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Evaluates `u(theta, arm)`.
pub fn utility(model: &UtilityModel, arm: &[f64]) -> Result<f64> {
    model.utility(arm)
}

fn on_arc<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Vec<f64> {
    let a = rng.gen_range(lo..hi);
    vec![a.cos(), a.sin()]
}

fn on_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    if dim == 2 {
        return on_arc(rng, 0.0, 2.0 * PI);
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn draw_once<R: Rng + ?Sized>(spec: &InstanceSpec, rng: &mut R) -> Result<Instance> {
    match spec {
        InstanceSpec::Setting1 => {
            let arms: Vec<Vec<f64>> = (0..20).map(|_| on_arc(rng, 0.0, 2.0 * PI)).collect();
            let theta = on_arc(rng, 0.0, 2.0 * PI);
            Instance::new(
                ArmSet::new(arms)?,
                UtilityModel::linear(theta),
                OracleSpec::ConstantP { p: 0.8 },
            )
        }
        InstanceSpec::Setting2 => {
            let mut arms: Vec<Vec<f64>> = (0..19).map(|_| on_arc(rng, PI, 1.5 * PI)).collect();
            arms.push(on_arc(rng, 0.0, 0.5 * PI));
            arms.shuffle(rng);
            let theta = on_arc(rng, 0.0, 0.5 * PI);
            Instance::new(
                ArmSet::new(arms)?,
                UtilityModel::linear(theta),
                OracleSpec::BradleyTerry,
            )
        }
        InstanceSpec::Custom {
            n_arms,
            dim,
            arms,
            theta,
            oracle,
        } => {
            let arms = match arms {
                Some(a) => {
                    if a.len() != *n_arms {
                        return Err(Error::Config(format!(
                            "n_arms = {n_arms} but {} arms listed",
                            a.len()
                        )));
                    }
                    a.clone()
                }
                None => (0..*n_arms).map(|_| on_sphere(rng, *dim)).collect(),
            };
            let theta = match theta {
                Some(t) => t.clone(),
                None => on_sphere(rng, *dim),
            };
            let arms = ArmSet::new(arms)?;
            if arms.dim() != *dim {
                return Err(Error::DimensionMismatch {
                    expected: *dim,
                    found: arms.dim(),
                });
            }
            Instance::new(arms, UtilityModel::linear(theta), oracle.clone())
        }
    }
}

/// Draws an instance, regenerating a bounded number of times on utility ties.
pub fn generate_instance<R: Rng + ?Sized>(spec: &InstanceSpec, rng: &mut R) -> Result<Instance> {
    let randomized = match spec {
        InstanceSpec::Custom { arms, theta, .. } => arms.is_none() || theta.is_none(),
        _ => true,
    };
    let attempts = if randomized { MAX_REGENERATIONS } else { 1 };
    let mut last = None;
    for _ in 0..attempts {
        match draw_once(spec, rng) {
            Err(e @ Error::UtilityTie(..)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_utility_examples() {
        let m = UtilityModel::linear(vec![1.0, 0.0]);
        assert_abs_diff_eq!(m.utility(&[0.6, 0.8]).unwrap(), 0.6);
        let m = UtilityModel::linear(vec![0.0, 1.0]);
        assert_abs_diff_eq!(m.utility(&[0.0, 1.0]).unwrap(), 1.0);
        let m = UtilityModel::linear(vec![0.6, 0.8]);
        assert_abs_diff_eq!(m.utility(&[0.8, 0.6]).unwrap(), 0.96, epsilon = 1e-15);
    }

    #[test]
    fn utility_dimension_mismatch() {
        let m = UtilityModel::linear(vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            m.utility(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn win_probabilities() {
        assert_abs_diff_eq!(bradley_terry(1.0, 0.0), 0.731_058_578_6, epsilon = 1e-9);
        assert_abs_diff_eq!(
            bradley_terry(1.0, 0.0),
            std::f64::consts::E / (std::f64::consts::E + 1.0),
            epsilon = 1e-15
        );
        assert_eq!(probit(0.3, 0.3), 0.5);

        let oracle =
            PreferenceOracle::build(OracleSpec::ConstantP { p: 0.8 }, &[1.0, 0.5, 0.0]).unwrap();
        assert_eq!(oracle.win_prob(0, 2).unwrap(), 0.8);
        assert_abs_diff_eq!(oracle.win_prob(2, 0).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(oracle.win_prob(1, 1), Err(Error::InvalidPair(1, 1)));
    }

    #[test]
    fn oracle_rows_are_complementary() {
        let utils = [0.9, 0.3, -0.2, -0.7];
        for spec in [OracleSpec::BradleyTerry, OracleSpec::Probit] {
            let o = PreferenceOracle::build(spec, &utils).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        let s = o.win_prob(i, j).unwrap() + o.win_prob(j, i).unwrap();
                        assert_eq!(s, 1.0);
                        assert_eq!(o.win_prob(i, j).unwrap() > 0.5, utils[i] > utils[j]);
                    }
                }
            }
            assert!(o.min_margin_prob() > 0.5);
        }
    }

    #[test]
    fn certain_winner_and_frequency() {
        let o = PreferenceOracle::build(OracleSpec::ConstantP { p: 1.0 }, &[1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(o.sample_winner(0, 1, &mut rng).unwrap(), Outcome::FirstWins);
        }

        let o = PreferenceOracle::build(OracleSpec::ConstantP { p: 0.8 }, &[1.0, 0.0]).unwrap();
        let n = 100_000;
        let wins = (0..n)
            .filter(|_| o.sample_winner(0, 1, &mut rng).unwrap() == Outcome::FirstWins)
            .count();
        let freq = wins as f64 / n as f64;
        assert!((freq - 0.8).abs() < 0.004, "freq {freq}");
        assert!(o.sample_winner(1, 1, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_uses_one_draw() {
        let o = PreferenceOracle::build(OracleSpec::ConstantP { p: 0.7 }, &[1.0, 0.0]).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<_> = (0..200).map(|_| o.sample_winner(0, 1, &mut a).unwrap()).collect();
        let ys: Vec<_> = (0..200).map(|_| o.sample_winner(0, 1, &mut b).unwrap()).collect();
        assert_eq!(xs, ys);
        // after 200 draws both streams sit at the same position as a raw stream
        let mut c = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let _: f64 = c.gen();
        }
        assert_eq!(a.gen::<u64>(), c.gen::<u64>());
    }

    #[test]
    fn setting_one_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = generate_instance(&InstanceSpec::Setting1, &mut rng).unwrap();
        assert_eq!(inst.n_arms(), 20);
        assert_eq!(inst.arms().dim(), 2);
        for a in inst.arms().features() {
            assert_abs_diff_eq!(a[0].hypot(a[1]), 1.0, epsilon = 1e-12);
        }
        for i in 0..20 {
            for j in i + 1..20 {
                assert_eq!(inst.oracle().win_prob(i, j).unwrap(), 0.8);
            }
        }
        assert!(inst.utilities().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn setting_two_best_arm_is_the_positive_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let inst = generate_instance(&InstanceSpec::Setting2, &mut rng).unwrap();
            let positive: Vec<usize> = (0..20)
                .filter(|&i| inst.arms().feature(i).iter().all(|&x| x > 0.0))
                .collect();
            assert_eq!(positive, vec![0]);
            assert!(inst.model().theta.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate_instance(&InstanceSpec::Setting1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = generate_instance(&InstanceSpec::Setting1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.arms(), b.arms());
        assert_eq!(a.model().theta, b.model().theta);
    }

    #[test]
    fn ties_are_rejected() {
        let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let err = Instance::new(
            arms,
            UtilityModel::linear(vec![1.0, 1.0]),
            OracleSpec::BradleyTerry,
        )
        .unwrap_err();
        assert_eq!(err, Error::UtilityTie(1, 2));
    }

    #[test]
    fn relabeling_and_explicit_matrix() {
        // input order: utilities 0.0, 1.0, 0.5 -> sorted order 2, 3, 1
        let arms = ArmSet::new(vec![vec![0.0], vec![1.0], vec![0.5]]).unwrap();
        let m = vec![
            vec![0.5, 0.1, 0.3],
            vec![0.9, 0.5, 0.6],
            vec![0.7, 0.4, 0.5],
        ];
        let inst = Instance::new(
            arms,
            UtilityModel::linear(vec![1.0]),
            OracleSpec::ExplicitMatrix { matrix: m },
        )
        .unwrap();
        assert_eq!(inst.arms().feature(0), &[1.0]);
        assert_abs_diff_eq!(inst.oracle().win_prob(0, 1).unwrap(), 0.6);
        assert_abs_diff_eq!(inst.oracle().win_prob(0, 2).unwrap(), 0.9);
        assert_abs_diff_eq!(inst.oracle().win_prob(1, 2).unwrap(), 0.7);
    }

    #[test]
    fn explicit_matrix_must_follow_order() {
        let arms = ArmSet::new(vec![vec![1.0], vec![0.0]]).unwrap();
        let m = vec![vec![0.5, 0.3], vec![0.7, 0.5]];
        assert!(matches!(
            Instance::new(
                arms,
                UtilityModel::linear(vec![1.0]),
                OracleSpec::ExplicitMatrix { matrix: m }
            ),
            Err(Error::InconsistentOracle(_))
        ));
    }

    #[test]
    fn duplicate_arms_rejected() {
        assert!(ArmSet::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(ArmSet::new(vec![vec![1.0, 0.0]]).is_err());
    }
}
