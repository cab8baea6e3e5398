//! Plain-text records: prior matrices, cell listings and instance replays.

use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::arms::{Instance, InstanceSpec, OracleSpec};
use crate::cells::{CellTable, CellVector, ExplicitCell};
use crate::error::{Error, Result};

/// Parses a whitespace-separated square matrix, one row per line. Blank lines
/// and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: k + 1,
                    msg: format!("not a number: {tok:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("entry {v} is not finite"),
            });
        }
        rows.push((k + 1, row));
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "empty matrix".into(),
        });
    }
    for (line, row) in &rows {
        if row.len() != n {
            return Err(Error::Parse {
                line: *line,
                msg: format!("expected {n} entries, found {}", row.len()),
            });
        }
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn format_matrix(m: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// One row of a cell listing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub index: String,
    pub bits: String,
    pub best_arm: usize,
    pub prior_mass: f64,
}

/// CSV listing with columns `index, bits, best_arm, prior_mass`; arms are
/// 1-based.
pub fn format_cell_listing(table: &CellTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in table.cells() {
        w.serialize(CellRow {
            index: c.vector.index().to_string(),
            bits: c.vector.to_string(),
            best_arm: c.best_arm + 1,
            prior_mass: c.prior_mass,
        })?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.error().to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Parses a listing for `n` arms, checking each row's index and best arm
/// against its bit string.
pub fn parse_cell_listing(n: usize, text: &str) -> Result<Vec<ExplicitCell>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut cells = Vec::new();
    for (k, row) in reader.deserialize::<CellRow>().enumerate() {
        let line = k + 2;
        let bad = |msg: String| Error::Parse { line, msg };
        let row = row.map_err(|e| bad(e.to_string()))?;
        let vector = CellVector::parse(n, &row.bits).map_err(|e| bad(e.to_string()))?;
        let index: BigUint = row
            .index
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", row.index)))?;
        if index != vector.index() {
            return Err(bad(format!("index {index} does not match bits {}", row.bits)));
        }
        if vector.best_arm().map(|a| a + 1) != Some(row.best_arm) {
            return Err(bad(format!("best arm {} does not match bits {}", row.best_arm, row.bits)));
        }
        if !(row.prior_mass >= 0.0 && row.prior_mass.is_finite()) {
            return Err(bad(format!("invalid prior mass {}", row.prior_mass)));
        }
        cells.push(ExplicitCell {
            vector,
            representative: None,
            prior_mass: Some(row.prior_mass),
        });
    }
    Ok(cells)
}

/// A replayable description of `instance` with arms in their input order.
pub fn instance_record(instance: &Instance) -> InstanceSpec {
    let order = instance.input_order();
    let n = order.len();
    let mut rank = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        rank[i] = k;
    }
    let oracle = match instance.oracle().spec() {
        OracleSpec::ExplicitMatrix { matrix } => OracleSpec::ExplicitMatrix {
            matrix: (0..n)
                .map(|i| (0..n).map(|j| matrix[rank[i]][rank[j]]).collect())
                .collect(),
        },
        other => other.clone(),
    };
    InstanceSpec::Custom {
        n_arms: n,
        dim: instance.arms().dim(),
        arms: Some(instance.input_arms().features().to_vec()),
        theta: Some(instance.model().theta.clone()),
        oracle,
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFile {
    instance: InstanceSpec,
}

pub fn format_instance_record(spec: &InstanceSpec) -> Result<String> {
    toml::to_string(&RecordFile {
        instance: spec.clone(),
    })
    .map_err(|e| Error::Io(e.to_string()))
}

/// Parses a record; only fully specified custom instances are accepted.
pub fn parse_instance_record(text: &str) -> Result<InstanceSpec> {
    let file: RecordFile = toml::from_str(text).map_err(|e| Error::Parse {
        line: toml_line(text, e.span()),
        msg: e.message().to_string(),
    })?;
    match &file.instance {
        InstanceSpec::Custom {
            arms: Some(_),
            theta: Some(_),
            ..
        } => Ok(file.instance),
        _ => Err(Error::Parse {
            line: 0,
            msg: "an instance record lists its arms and theta".into(),
        }),
    }
}

pub(crate) fn toml_line(text: &str, span: Option<std::ops::Range<usize>>) -> usize {
    span.map_or(0, |s| {
        text.get(..s.start.min(text.len()))
            .map_or(0, |head| head.matches('\n').count() + 1)
    })
}

/// One line per arm: 1-based rank, input position, utility and features.
pub fn describe_instance(instance: &Instance) -> String {
    let mut out = String::new();
    for (k, &i) in instance.input_order().iter().enumerate() {
        let _ = writeln!(
            out,
            "{} {} {:?} {:?}",
            k + 1,
            i + 1,
            instance.utilities()[k],
            instance.arms().feature(k)
        );
    }
    out
}
