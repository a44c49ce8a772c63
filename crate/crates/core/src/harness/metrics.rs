//! Per-tick rates computed from an event log, and their persistence.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentSpec, FocalSpec, MetricsFormat};
use crate::env::Event;
use crate::error::{Error, Result};
use crate::symbols::{normalize, SymbolSeq};

/// One row per tick. Empty cells mean "not measured".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub tick: u64,
    /// Fraction of focal-context acts equal to the convention.
    pub compliance: Option<f64>,
    pub sanction_count: Option<u64>,
    /// Compliance restricted to actors that joined after tick 0.
    pub newcomer_compliance: Option<f64>,
    pub verdict: Option<String>,
}

pub const METRICS_HEADER: &str = "tick,compliance,sanction_count,newcomer_compliance,verdict";

struct Focal {
    role: Option<String>,
    observation: SymbolSeq,
    convention: SymbolSeq,
}

impl From<&FocalSpec> for Focal {
    fn from(f: &FocalSpec) -> Self {
        Self {
            role: f.role.clone(),
            observation: normalize(&f.observation),
            convention: normalize(&f.convention),
        }
    }
}

fn rate((hit, n): (usize, usize)) -> Option<f64> {
    (n > 0).then(|| hit as f64 / n as f64)
}

/// Rows for ticks `0..ticks`, using only the log.
pub fn compute_metrics(log: &[Event], ticks: u64, spec: &ExperimentSpec) -> Vec<MetricsRow> {
    let focal = spec.focal.as_ref().map(Focal::from);
    let newcomers: BTreeSet<&str> = log
        .iter()
        .filter_map(|e| match e {
            Event::Insert { actor, .. } => Some(actor.as_str()),
            _ => None,
        })
        .collect();
    let mut observed: BTreeMap<(u64, &str), &SymbolSeq> = BTreeMap::new();
    let mut all: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    let mut fresh: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    let mut sanctions: BTreeMap<u64, u64> = BTreeMap::new();
    for e in log {
        match e {
            Event::Observe {
                tick,
                actor,
                observation,
            } => {
                observed.insert((*tick, actor.as_str()), observation);
            }
            Event::Act {
                tick,
                actor,
                role,
                action,
            } => {
                let Some(f) = &focal else { continue };
                let in_context = observed.get(&(*tick, actor.as_str())) == Some(&&f.observation);
                if !in_context || f.role.as_ref().is_some_and(|r| r != role) {
                    continue;
                }
                let hit = usize::from(*action == f.convention);
                let c = all.entry(*tick).or_default();
                c.0 += hit;
                c.1 += 1;
                if newcomers.contains(actor.as_str()) {
                    let c = fresh.entry(*tick).or_default();
                    c.0 += hit;
                    c.1 += 1;
                }
            }
            Event::Sanction { tick, .. } => *sanctions.entry(*tick).or_default() += 1,
            _ => {}
        }
    }
    (0..ticks)
        .map(|t| MetricsRow {
            tick: t,
            compliance: spec
                .wants("compliance")
                .then(|| all.get(&t).copied().and_then(rate))
                .flatten(),
            sanction_count: spec
                .wants("sanction_count")
                .then(|| sanctions.get(&t).copied().unwrap_or(0)),
            newcomer_compliance: spec
                .wants("newcomer_compliance")
                .then(|| fresh.get(&t).copied().and_then(rate))
                .flatten(),
            verdict: None,
        })
        .collect()
}

/// Mean of the present values of `field` over rows with `from <= tick < to`.
pub fn window_mean(
    rows: &[MetricsRow],
    from: u64,
    to: u64,
    field: impl Fn(&MetricsRow) -> Option<f64>,
) -> Option<f64> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| (from..to).contains(&r.tick))
        .filter_map(field)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn write_metrics<W: Write>(rows: &[MetricsRow], out: W, format: MetricsFormat) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no metrics rows to write".into()));
    }
    match format {
        MetricsFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        MetricsFormat::Jsonl => {
            let mut out = out;
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Write `rows` to `path` as CSV or JSON lines.
pub fn emit_metrics(rows: &[MetricsRow], path: &Path, format: MetricsFormat) -> Result<()> {
    write_metrics(rows, BufWriter::new(File::create(path)?), format)
}

pub fn read_metrics(path: &Path, format: MetricsFormat) -> Result<Vec<MetricsRow>> {
    let f = BufReader::new(File::open(path)?);
    match format {
        MetricsFormat::Csv => Ok(csv::Reader::from_reader(f)
            .deserialize()
            .collect::<Result<_, _>>()?),
        MetricsFormat::Jsonl => {
            let mut out = Vec::new();
            for line in f.lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    out.push(serde_json::from_str(&line)?);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<MetricsRow> {
        (0..3)
            .map(|t| MetricsRow {
                tick: t,
                compliance: Some(t as f64 / 3.0),
                sanction_count: Some(t),
                newcomer_compliance: None,
                verdict: (t == 2).then(|| "pass".into()),
            })
            .collect()
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("m.csv");
        emit_metrics(&rows(), &p, MetricsFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], METRICS_HEADER);
        assert_eq!(read_metrics(&p, MetricsFormat::Csv).unwrap(), rows());

        let q = d.path().join("n.csv");
        emit_metrics(&rows(), &q, MetricsFormat::Csv).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    }

    #[test]
    fn jsonl_round_trips() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("m.jsonl");
        emit_metrics(&rows(), &p, MetricsFormat::Jsonl).unwrap();
        assert_eq!(read_metrics(&p, MetricsFormat::Jsonl).unwrap(), rows());
    }

    #[test]
    fn empty_rows_rejected() {
        let d = tempfile::tempdir().unwrap();
        assert!(emit_metrics(&[], &d.path().join("m.csv"), MetricsFormat::Csv).is_err());
    }

    #[test]
    fn rates_from_log() {
        let o = normalize("on the path");
        let obs = |t, a: &str| Event::Observe {
            tick: t,
            actor: a.into(),
            observation: o.clone(),
        };
        let act = |t, a: &str, x: &str| Event::Act {
            tick: t,
            actor: a.into(),
            role: "walker".into(),
            action: normalize(x),
        };
        let log = vec![
            obs(0, "a"),
            obs(0, "b"),
            act(0, "a", "keep right"),
            act(0, "b", "keep left"),
            Event::Insert {
                tick: 1,
                actor: "n".into(),
            },
            obs(1, "a"),
            obs(1, "n"),
            act(1, "a", "keep right"),
            act(1, "n", "keep right"),
        ];
        let spec = ExperimentSpec {
            focal: Some(FocalSpec {
                role: Some("walker".into()),
                observation: "On the path".into(),
                convention: "keep right".into(),
            }),
            ..ExperimentSpec::default()
        };
        let m = compute_metrics(&log, 3, &spec);
        assert_eq!(m.len(), 3);
        assert_eq!(m[0].compliance, Some(0.5));
        assert_eq!(m[0].newcomer_compliance, None);
        assert_eq!(m[1].compliance, Some(1.0));
        assert_eq!(m[1].newcomer_compliance, Some(1.0));
        assert_eq!(m[2].compliance, None);
        assert_eq!(m[2].sanction_count, Some(0));
        assert_eq!(window_mean(&m, 0, 3, |r| r.compliance), Some(0.75));
    }
}
