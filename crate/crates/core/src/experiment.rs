//! Runs a configured experiment: instances, cell tables and policies per
//! replication, replications in parallel, CSV output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::arms::{generate_instance, InstanceSpec, OracleSpec};
use crate::baselines::{Rucb, WinnerStays};
use crate::bayes::{prior_to_scores, CellLikelihood, Thompson};
use crate::cells::{classify, default_backend, enumerate_cells, Backend, Cell, CellTable};
use crate::config::{AlgorithmConfig, CellsConfig, ExperimentConfig, LikelihoodKind, PriorKind};
use crate::error::{Error, Result};
use crate::explicit::{ExplicitCtb, InitVariant};
use crate::fast::{FastCtb, PairState};
use crate::harness::{
    aggregate, run_into, stream, Environment, RegretSeries, Stream, SummaryPoint,
};
use crate::policy::DuelPolicy;
use crate::record::{parse_cell_listing, parse_matrix};

pub const RAW_HEADER: [&str; 8] = [
    "algorithm",
    "replication",
    "t",
    "first",
    "second",
    "outcome",
    "instant_regret",
    "cum_regret",
];
pub const SUMMARY_HEADER: [&str; 4] = ["algorithm", "t", "mean_cum_regret", "stderr"];

/// Files referenced by a config, loaded once.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    prior_matrix: Option<Vec<Vec<f64>>>,
    cell_listing: Option<String>,
}

impl Resources {
    /// Reads the files named in `config`, relative to `base_dir`.
    pub fn load(config: &ExperimentConfig, base_dir: &Path) -> Result<Self> {
        let read = |p: &Path, name: &str| {
            fs::read_to_string(base_dir.join(p))
                .map_err(|e| Error::Config(format!("{name}: cannot read {}: {e}", p.display())))
        };
        let mut res = Resources::default();
        for (k, alg) in config.algorithms.iter().enumerate() {
            if let AlgorithmConfig::Ctb2 {
                prior_matrix: Some(p),
            } = alg
            {
                let name = format!("algorithms[{k}].prior_matrix");
                let text = read(p, &name)?;
                let m = parse_matrix(&text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
                res.prior_matrix = Some(m);
            }
        }
        if let CellsConfig::Explicit { path } = &config.cells {
            res.cell_listing = Some(read(path, "cells.path")?);
        }
        Ok(res)
    }
}

/// Everything a replication shares across its algorithms.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: u64,
    pub env: Environment,
    pub table: Option<Arc<CellTable>>,
}

impl Replication {
    /// Draws the instance and, if any algorithm needs it, the cell table.
    pub fn prepare(config: &ExperimentConfig, res: &Resources, index: u64) -> Result<Self> {
        let mut rng = stream(config.seed, index, Stream::Instance);
        let env = Environment::new(generate_instance(&config.instance, &mut rng)?);
        let table = if config.algorithms.iter().any(|a| a.needs_cells()) {
            Some(Arc::new(build_table(config, res, &env, index)?))
        } else {
            None
        };
        Ok(Replication { index, env, table })
    }

    /// Like [`Replication::prepare`], but always enumerates cells.
    pub fn prepare_with_cells(config: &ExperimentConfig, res: &Resources, index: u64) -> Result<Self> {
        let mut rep = Replication::prepare(config, res, index)?;
        if rep.table.is_none() {
            rep.table = Some(Arc::new(build_table(config, res, &rep.env, index)?));
        }
        Ok(rep)
    }

    /// Index of the table cell that contains theta, if enumerated.
    pub fn true_cell(&self) -> Option<usize> {
        let table = self.table.as_ref()?;
        let model = self.env.instance().model();
        let v = classify(&model.theta, self.env.arms(), &model.kind).ok()?;
        table.find(&v)
    }

    pub fn build_policies(
        &self,
        config: &ExperimentConfig,
        res: &Resources,
    ) -> Result<Vec<Box<dyn DuelPolicy>>> {
        config
            .algorithms
            .iter()
            .enumerate()
            .map(|(k, alg)| {
                self.build_policy(alg, config, res)
                    .map_err(|e| Error::Config(format!("algorithms[{k}] ({}): {e}", alg.id())))
            })
            .collect()
    }

    fn table(&self) -> Result<Arc<CellTable>> {
        self.table
            .clone()
            .ok_or_else(|| Error::Config("no cell table was enumerated".into()))
    }

    fn build_policy(
        &self,
        alg: &AlgorithmConfig,
        config: &ExperimentConfig,
        res: &Resources,
    ) -> Result<Box<dyn DuelPolicy>> {
        let n = self.env.n_arms();
        let id = alg.id();
        Ok(match alg {
            AlgorithmConfig::Ctb1 {} => Box::new(ExplicitCtb::new(id, self.table()?, InitVariant::Ctb1)?),
            AlgorithmConfig::Ctb2 { prior_matrix } => {
                let state = match (prior_matrix, &res.prior_matrix) {
                    (Some(_), Some(m)) => {
                        if m.len() != n {
                            return Err(Error::DimensionMismatch {
                                expected: n,
                                found: m.len(),
                            });
                        }
                        PairState::with_priors(m)?
                    }
                    (Some(_), None) => return Err(Error::Config("prior matrix not loaded".into())),
                    _ => PairState::new(n),
                };
                Box::new(FastCtb::new(id, state))
            }
            AlgorithmConfig::Ctb3 { q, prior } => {
                let table = with_prior(self.table()?, *prior)?;
                let masses: Vec<f64> = table.cells().iter().map(|c| c.prior_mass).collect();
                Box::new(ExplicitCtb::with_initial(id, table, prior_to_scores(&masses, *q)?)?)
            }
            AlgorithmConfig::Thompson {
                likelihood,
                q,
                prior,
            } => {
                let model = thompson_likelihood(*likelihood, *q, &config.instance_oracle())?;
                let table = with_prior(self.table()?, *prior)?;
                let kind = &self.env.instance().model().kind;
                Box::new(Thompson::new(id, table, self.env.arms(), kind, model)?)
            }
            AlgorithmConfig::Rucb { alpha } => Box::new(Rucb::new(n, *alpha)?),
            AlgorithmConfig::WsW {} => Box::new(WinnerStays::new(n)?),
        })
    }

    /// Runs every algorithm; stops at the first failure, keeping the steps
    /// already taken.
    pub fn run(
        &self,
        config: &ExperimentConfig,
        res: &Resources,
    ) -> (Vec<RegretSeries>, Option<Error>) {
        let mut out = Vec::new();
        let mut policies = match self.build_policies(config, res) {
            Ok(p) => p,
            Err(e) => return (out, Some(e)),
        };
        for policy in policies.iter_mut() {
            // every algorithm faces the same duel outcome stream
            let mut oracle_rng = stream(config.seed, self.index, Stream::Oracle);
            let mut policy_rng = stream(config.seed, self.index, Stream::Policy);
            let mut series = RegretSeries::new(config.regret_mode);
            let res = run_into(
                policy.as_mut(),
                &self.env,
                config.horizon,
                &mut oracle_rng,
                &mut policy_rng,
                &mut series,
            );
            out.push(series);
            if let Err(e) = res {
                return (out, Some(with_context(self.index, policy.name(), e)));
            }
        }
        (out, None)
    }
}

fn with_context(replication: u64, name: &str, e: Error) -> Error {
    match e {
        Error::AtStep { t, source } => Error::AtStep {
            t,
            source: Box::new(Error::Domain(format!(
                "replication {replication}, {name}: {source}"
            ))),
        },
        other => Error::Domain(format!("replication {replication}, {name}: {other}")),
    }
}

impl ExperimentConfig {
    fn instance_oracle(&self) -> OracleSpec {
        match &self.instance {
            InstanceSpec::Setting1 => OracleSpec::ConstantP { p: 0.8 },
            InstanceSpec::Setting2 => OracleSpec::BradleyTerry,
            InstanceSpec::Custom { oracle, .. } => oracle.clone(),
        }
    }
}

fn thompson_likelihood(
    kind: Option<LikelihoodKind>,
    q: Option<f64>,
    oracle: &OracleSpec,
) -> Result<CellLikelihood> {
    let need_q = || q.ok_or_else(|| Error::Config("q is required for a constant-q likelihood".into()));
    Ok(match kind {
        Some(LikelihoodKind::ConstantQ) => CellLikelihood::ConstantQ(need_q()?),
        Some(LikelihoodKind::BradleyTerry) => CellLikelihood::BradleyTerry,
        Some(LikelihoodKind::Probit) => CellLikelihood::Probit,
        None => match oracle {
            OracleSpec::ConstantP { p } => CellLikelihood::ConstantQ(q.unwrap_or(*p)),
            OracleSpec::BradleyTerry => CellLikelihood::BradleyTerry,
            OracleSpec::Probit => CellLikelihood::Probit,
            OracleSpec::ExplicitMatrix { .. } => CellLikelihood::ConstantQ(need_q()?),
        },
    })
}

fn with_prior(table: Arc<CellTable>, prior: PriorKind) -> Result<Arc<CellTable>> {
    match prior {
        PriorKind::UniformSphere => Ok(table),
        PriorKind::UniformCells => {
            let mass = 1.0 / table.len() as f64;
            let cells = table.cells().iter().map(|c| Cell {
                prior_mass: mass,
                ..c.clone()
            });
            Ok(Arc::new(CellTable::from_cells(table.n_arms(), cells)?))
        }
    }
}

fn build_table(
    config: &ExperimentConfig,
    res: &Resources,
    env: &Environment,
    index: u64,
) -> Result<CellTable> {
    let arms = env.arms();
    let kind = &env.instance().model().kind;
    let seed: u64 = stream(config.seed, index, Stream::Table).gen();
    let backend = match &config.cells {
        CellsConfig::Auto => default_backend(arms, kind, seed)?,
        CellsConfig::AngularSweep => Backend::AngularSweep,
        CellsConfig::PermutationSampling { samples } => Backend::PermutationSampling {
            samples: *samples,
            seed,
        },
        CellsConfig::Explicit { .. } => {
            let text = res
                .cell_listing
                .as_deref()
                .ok_or_else(|| Error::Config("cell listing not loaded".into()))?;
            Backend::Explicit(parse_cell_listing(arms.len(), text)?)
        }
    };
    let table = enumerate_cells(arms, kind, &backend)?;
    if table.is_empty() {
        return Err(Error::Config("the cell table is empty".into()));
    }
    Ok(table)
}

/// Results of every algorithm on every replication.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub algorithms: Vec<String>,
    /// `series[a][r]`; on failure some entries are short or missing.
    pub series: Vec<Vec<(u64, RegretSeries)>>,
    pub error: Option<Error>,
}

/// Checks that replication 0 can be prepared and every policy built.
pub fn preflight(config: &ExperimentConfig, res: &Resources) -> Result<()> {
    let rep = Replication::prepare(config, res, 0)?;
    rep.build_policies(config, res).map(|_| ())
}

pub fn run_experiment(config: &ExperimentConfig, res: &Resources) -> ExperimentOutput {
    let results: Vec<(u64, Vec<RegretSeries>, Option<Error>)> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| match Replication::prepare(config, res, r) {
            Ok(rep) => {
                let (series, err) = rep.run(config, res);
                (r, series, err)
            }
            Err(e) => (r, Vec::new(), Some(e)),
        })
        .collect();
    let mut series = vec![Vec::new(); config.algorithms.len()];
    let mut error = None;
    for (r, list, err) in results {
        for (a, s) in list.into_iter().enumerate() {
            series[a].push((r, s));
        }
        if error.is_none() {
            error = err;
        }
    }
    ExperimentOutput {
        algorithms: config.algorithms.iter().map(|a| a.id().to_string()).collect(),
        series,
        error,
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Writes `raw.csv`: one row per duel, arms as 1-based utility ranks.
pub fn write_raw<W: Write>(out: &ExperimentOutput, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(RAW_HEADER)?;
    for (name, list) in out.algorithms.iter().zip(&out.series) {
        for (r, s) in list {
            for rec in &s.records {
                w.write_record([
                    name.clone(),
                    r.to_string(),
                    rec.t.to_string(),
                    (rec.first + 1).to_string(),
                    (rec.second + 1).to_string(),
                    rec.outcome.bit().to_string(),
                    fmt_num(rec.instant_regret),
                    fmt_num(rec.cum_regret),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn summarize(out: &ExperimentOutput, checkpoints: &[usize]) -> Result<Vec<(String, Vec<SummaryPoint>)>> {
    out.algorithms
        .iter()
        .zip(&out.series)
        .map(|(name, list)| Ok((name.clone(), aggregate(list.iter().map(|(_, s)| s), checkpoints)?)))
        .collect()
}

/// Writes `summary.csv`: mean and standard error of cumulative regret.
pub fn write_summary<W: Write>(summary: &[(String, Vec<SummaryPoint>)], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(SUMMARY_HEADER)?;
    for (name, points) in summary {
        for p in points {
            w.write_record([name.clone(), p.t.to_string(), fmt_num(p.mean), fmt_num(p.stderr)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `raw.csv` and, for a complete run, `summary.csv` into `dir`.
/// Returns the paths written.
pub fn write_outputs(config: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let raw = dir.join("raw.csv");
    write_raw(out, std::io::BufWriter::new(fs::File::create(&raw)?))?;
    let mut written = vec![raw];
    if out.error.is_none() {
        let summary = summarize(out, &config.checkpoints())?;
        let path = dir.join("summary.csv");
        write_summary(&summary, std::io::BufWriter::new(fs::File::create(&path)?))?;
        written.push(path);
    }
    Ok(written)
}
