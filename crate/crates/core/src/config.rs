//! Experiment configuration in TOML.
//!
//! ```toml
//! name = "setting-1"
//! horizon = 500
//! replications = 200
//! seed = 7
//! regret_mode = "binary-weak"
//! output_dir = "out/setting-1"
//!
//! [instance]
//! kind = "setting-1"
//!
//! [[algorithms]]
//! id = "ctb-1"
//!
//! [[algorithms]]
//! id = "rucb"
//! alpha = 0.51
//! ```
//!
//! Unknown keys are rejected.

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::arms::{InstanceSpec, OracleSpec};
use crate::baselines::DEFAULT_RUCB_ALPHA;
use crate::error::{Error, Result};
use crate::harness::RegretMode;
use crate::record::toml_line;

pub const DEFAULT_CHECKPOINTS: [usize; 5] = [100, 200, 300, 400, 500];

fn default_alpha() -> f64 {
    DEFAULT_RUCB_ALPHA
}

/// Per-cell likelihood used by Thompson sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodKind {
    ConstantQ,
    BradleyTerry,
    Probit,
}

/// Prior over preference vectors that assigns cell masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Uniform on the unit sphere (the circle when `d = 2`).
    #[default]
    UniformSphere,
    /// Equal mass on every enumerated cell.
    UniformCells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", deny_unknown_fields)]
pub enum AlgorithmConfig {
    #[serde(rename = "ctb-1")]
    Ctb1 {},
    #[serde(rename = "ctb-2")]
    Ctb2 {
        /// Optional whitespace-separated `r[i][j]` matrix in input labels.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior_matrix: Option<PathBuf>,
    },
    #[serde(rename = "ctb-3")]
    Ctb3 {
        q: f64,
        #[serde(default)]
        prior: PriorKind,
    },
    #[serde(rename = "thompson")]
    Thompson {
        /// Defaults to the oracle's own model.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        likelihood: Option<LikelihoodKind>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
        #[serde(default)]
        prior: PriorKind,
    },
    #[serde(rename = "rucb")]
    Rucb {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    #[serde(rename = "ws-w")]
    WsW {},
}

impl AlgorithmConfig {
    pub fn id(&self) -> &'static str {
        match self {
            AlgorithmConfig::Ctb1 {} => "ctb-1",
            AlgorithmConfig::Ctb2 { .. } => "ctb-2",
            AlgorithmConfig::Ctb3 { .. } => "ctb-3",
            AlgorithmConfig::Thompson { .. } => "thompson",
            AlgorithmConfig::Rucb { .. } => "rucb",
            AlgorithmConfig::WsW {} => "ws-w",
        }
    }

    /// Whether the policy needs an enumerated cell table.
    pub fn needs_cells(&self) -> bool {
        matches!(
            self,
            AlgorithmConfig::Ctb1 {} | AlgorithmConfig::Ctb3 { .. } | AlgorithmConfig::Thompson { .. }
        )
    }
}

/// How cells are enumerated for policies that need them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CellsConfig {
    /// Angular sweep for two-dimensional linear instances, sampling otherwise.
    #[default]
    Auto,
    AngularSweep,
    PermutationSampling {
        samples: usize,
    },
    /// A cell listing file in input labels.
    Explicit {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub regret_mode: RegretMode,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub cells: CellsConfig,
    pub algorithms: Vec<AlgorithmConfig>,
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{name}: {msg}"))
}

fn check_q(name: &str, q: f64) -> Result<()> {
    if q > 0.5 && q < 1.0 {
        Ok(())
    } else {
        Err(field(name, format!("must lie in (0.5, 1), got {q}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: toml_line(text, e.span()),
            msg: e.message().trim().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(field("horizon", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(field("replications", "must be at least 1"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(field("seed", "must fit in a signed 64-bit integer"));
        }
        if self.algorithms.is_empty() {
            return Err(field("algorithms", "at least one algorithm is required"));
        }
        if let Some(cps) = &self.checkpoints {
            if cps.is_empty() {
                return Err(field("checkpoints", "must not be empty"));
            }
            for w in cps.windows(2) {
                if w[0] >= w[1] {
                    return Err(field("checkpoints", "must be strictly increasing"));
                }
            }
            if let Some(&t) = cps.iter().find(|&&t| t == 0 || t > self.horizon) {
                return Err(field(
                    "checkpoints",
                    format!("{t} outside 1..={}", self.horizon),
                ));
            }
        }
        self.validate_instance()?;
        if let CellsConfig::PermutationSampling { samples: 0 } = self.cells {
            return Err(field("cells.samples", "must be at least 1"));
        }
        let mut seen = HashSet::new();
        for (k, alg) in self.algorithms.iter().enumerate() {
            let at = |f: &str| format!("algorithms[{k}].{f}");
            if !seen.insert(alg.id()) {
                return Err(field(&at("id"), format!("duplicate algorithm {:?}", alg.id())));
            }
            match alg {
                AlgorithmConfig::Ctb3 { q, .. } => check_q(&at("q"), *q)?,
                AlgorithmConfig::Thompson { likelihood, q, .. } => {
                    if let Some(q) = q {
                        if !(*q > 0.5 && *q <= 1.0) {
                            return Err(field(&at("q"), format!("must lie in (0.5, 1], got {q}")));
                        }
                    }
                    let explicit_oracle = matches!(
                        self.instance,
                        InstanceSpec::Custom {
                            oracle: OracleSpec::ExplicitMatrix { .. },
                            ..
                        }
                    );
                    let needs_q = match likelihood {
                        Some(LikelihoodKind::ConstantQ) => true,
                        Some(_) => false,
                        None => explicit_oracle,
                    };
                    if needs_q && q.is_none() {
                        return Err(field(&at("q"), "required for a constant-q likelihood"));
                    }
                }
                AlgorithmConfig::Rucb { alpha } => {
                    if !(*alpha > 0.5 && alpha.is_finite()) {
                        return Err(field(&at("alpha"), format!("must exceed 0.5, got {alpha}")));
                    }
                }
                AlgorithmConfig::Ctb1 {} | AlgorithmConfig::Ctb2 { .. } | AlgorithmConfig::WsW {} => {}
            }
        }
        Ok(())
    }

    fn validate_instance(&self) -> Result<()> {
        if let InstanceSpec::Custom {
            n_arms,
            dim,
            arms,
            theta,
            oracle,
        } = &self.instance
        {
            if *n_arms < 2 {
                return Err(field("instance.n_arms", "must be at least 2"));
            }
            if *dim == 0 {
                return Err(field("instance.dim", "must be at least 1"));
            }
            if let Some(a) = arms {
                if a.len() != *n_arms {
                    return Err(field(
                        "instance.arms",
                        format!("{} arms listed for n_arms = {n_arms}", a.len()),
                    ));
                }
                if a.iter().any(|v| v.len() != *dim) {
                    return Err(field("instance.arms", format!("every arm must have {dim} coordinates")));
                }
            }
            if let Some(t) = theta {
                if t.len() != *dim {
                    return Err(field("instance.theta", format!("must have {dim} coordinates")));
                }
            }
            match oracle {
                OracleSpec::ConstantP { p } if !(*p > 0.5 && *p <= 1.0) => {
                    return Err(field("instance.oracle.p", format!("must lie in (0.5, 1], got {p}")));
                }
                OracleSpec::ExplicitMatrix { matrix } => {
                    if matrix.len() != *n_arms || matrix.iter().any(|r| r.len() != *n_arms) {
                        return Err(field(
                            "instance.oracle.matrix",
                            format!("must be {n_arms}x{n_arms}"),
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Configured checkpoints, or the default ticks up to the horizon.
    pub fn checkpoints(&self) -> Vec<usize> {
        match &self.checkpoints {
            Some(c) => c.clone(),
            None => {
                let mut c: Vec<usize> = DEFAULT_CHECKPOINTS
                    .iter()
                    .copied()
                    .filter(|&t| t <= self.horizon)
                    .collect();
                if c.is_empty() {
                    c.push(self.horizon);
                }
                c
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SETTING_1: &str = r#"
name = "setting-1"
horizon = 500
replications = 200
seed = 7
regret_mode = "binary-weak"
output_dir = "out/setting-1"

[instance]
kind = "setting-1"

[[algorithms]]
id = "ctb-1"

[[algorithms]]
id = "ws-w"
"#;

    #[test]
    fn parses_the_documented_shape() {
        let c = ExperimentConfig::from_toml(SETTING_1).unwrap();
        assert_eq!(c.instance, InstanceSpec::Setting1);
        assert_eq!(c.algorithms, vec![AlgorithmConfig::Ctb1 {}, AlgorithmConfig::WsW {}]);
        assert_eq!(c.cells, CellsConfig::Auto);
        assert_eq!(c.checkpoints(), DEFAULT_CHECKPOINTS.to_vec());
        assert_eq!(c.regret_mode, RegretMode::BinaryWeak);
    }

    #[test]
    fn defaults_fill_in() {
        let text = SETTING_1.replace("id = \"ws-w\"", "id = \"rucb\"");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.algorithms[1], AlgorithmConfig::Rucb { alpha: 0.51 });
        let text = SETTING_1.replace("horizon = 500", "horizon = 50");
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap().checkpoints(), vec![50]);
        let text = SETTING_1.replace("horizon = 500", "horizon = 250");
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap().checkpoints(), vec![100, 200]);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = SETTING_1.replace("seed = 7", "seed = 7\nsede = 8");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Parse { .. })));
        let text = SETTING_1.replace("id = \"ctb-1\"", "id = \"ctb-1\"\nq = 0.6");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = SETTING_1.replace("id = \"ctb-1\"", "id = \"ctb-9\"");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn field_level_validation() {
        let msg = |text: &str| match ExperimentConfig::from_toml(text) {
            Err(Error::Config(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(msg(&SETTING_1.replace("horizon = 500", "horizon = 0")).starts_with("horizon"));
        assert!(msg(&SETTING_1.replace("replications = 200", "replications = 0"))
            .starts_with("replications"));
        assert!(msg(&SETTING_1.replace("id = \"ws-w\"", "id = \"ctb-1\""))
            .starts_with("algorithms[1].id"));
        assert!(msg(&SETTING_1.replace("id = \"ws-w\"", "id = \"ctb-3\"\nq = 0.5"))
            .starts_with("algorithms[1].q"));
        assert!(msg(&SETTING_1.replace("id = \"ws-w\"", "id = \"rucb\"\nalpha = 0.4"))
            .starts_with("algorithms[1].alpha"));
        assert!(msg(&SETTING_1.replace(
            "id = \"ws-w\"",
            "id = \"thompson\"\nlikelihood = \"constant-q\""
        ))
        .starts_with("algorithms[1].q"));
        assert!(msg(&format!("checkpoints = [100, 600]\n{SETTING_1}")).starts_with("checkpoints"));
        // ctb-3 without q is a parse error
        let text = SETTING_1.replace("id = \"ws-w\"", "id = \"ctb-3\"");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn custom_instance_checks() {
        let text = r#"
name = "custom"
horizon = 10
replications = 1
seed = 0
regret_mode = "utility-weak"
output_dir = "out"

[instance]
kind = "custom"
n_arms = 3
dim = 2
arms = [[1.0, 0.0], [0.0, 1.0]]
oracle = { kind = "bradley-terry" }

[[algorithms]]
id = "ctb-2"
"#;
        match ExperimentConfig::from_toml(text) {
            Err(Error::Config(m)) => assert!(m.starts_with("instance.arms"), "{m}"),
            other => panic!("{other:?}"),
        }
        let ok = text.replace("arms = [[1.0, 0.0], [0.0, 1.0]]", "arms = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]");
        ExperimentConfig::from_toml(&ok).unwrap();
        let bad_p = ok.replace("oracle = { kind = \"bradley-terry\" }", "oracle = { kind = \"constant-p\", p = 0.4 }");
        assert!(ExperimentConfig::from_toml(&bad_p).is_err());
    }

    fn algorithm() -> impl Strategy<Value = AlgorithmConfig> {
        prop_oneof![
            Just(AlgorithmConfig::Ctb1 {}),
            proptest::option::of("[a-z]{1,8}\\.txt").prop_map(|p| AlgorithmConfig::Ctb2 {
                prior_matrix: p.map(PathBuf::from)
            }),
            (0.51f64..0.99, prop_oneof![Just(PriorKind::UniformSphere), Just(PriorKind::UniformCells)])
                .prop_map(|(q, prior)| AlgorithmConfig::Ctb3 { q, prior }),
            (
                proptest::option::of(prop_oneof![
                    Just(LikelihoodKind::BradleyTerry),
                    Just(LikelihoodKind::Probit)
                ]),
                proptest::option::of(0.51f64..1.0)
            )
                .prop_map(|(likelihood, q)| AlgorithmConfig::Thompson {
                    likelihood,
                    q,
                    prior: PriorKind::UniformSphere
                }),
            (0.51f64..4.0).prop_map(|alpha| AlgorithmConfig::Rucb { alpha }),
            Just(AlgorithmConfig::WsW {}),
        ]
    }

    fn instance() -> impl Strategy<Value = InstanceSpec> {
        prop_oneof![
            Just(InstanceSpec::Setting1),
            Just(InstanceSpec::Setting2),
            (2usize..6, 0.51f64..1.0, any::<bool>()).prop_map(|(n, p, listed)| InstanceSpec::Custom {
                n_arms: n,
                dim: 2,
                arms: listed.then(|| (0..n).map(|i| vec![i as f64, -0.5 * i as f64]).collect()),
                theta: listed.then(|| vec![0.25, -1.5]),
                oracle: OracleSpec::ConstantP { p },
            }),
        ]
    }

    prop_compose! {
        fn config()(
            name in "[a-z][a-z0-9-]{0,12}",
            horizon in 500usize..2000,
            replications in 1usize..500,
            seed in 0u64..(i64::MAX as u64),
            binary in any::<bool>(),
            checkpoints in proptest::option::of(Just(vec![100usize, 250, 500])),
            instance in instance(),
            samples in proptest::option::of(1usize..100_000),
            algorithms in proptest::sample::subsequence(
                vec!["ctb-1", "ctb-2", "ctb-3", "thompson", "rucb", "ws-w"], 1..=6),
            drawn in proptest::collection::vec(algorithm(), 64),
        ) -> ExperimentConfig {
            let algorithms = algorithms
                .into_iter()
                .map(|id| drawn.iter().find(|a| a.id() == id).cloned().unwrap_or(AlgorithmConfig::WsW {}))
                .fold(Vec::<AlgorithmConfig>::new(), |mut acc, a| {
                    if acc.iter().all(|b| b.id() != a.id()) {
                        acc.push(a);
                    }
                    acc
                });
            ExperimentConfig {
                name,
                horizon,
                replications,
                seed,
                regret_mode: if binary { RegretMode::BinaryWeak } else { RegretMode::UtilityWeak },
                output_dir: PathBuf::from("out/run"),
                checkpoints,
                instance,
                cells: samples.map_or(CellsConfig::Auto, |samples| CellsConfig::PermutationSampling { samples }),
                algorithms,
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(c in config()) {
            prop_assert!(c.validate().is_ok(), "{:?}", c.validate());
            let text = c.to_toml().unwrap();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
