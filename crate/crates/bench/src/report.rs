//! Machine-readable reports and their JSON, CSV and table renderings.

use std::collections::BTreeMap;
use std::io::Write;

use aidsched::{Binding, CoreTopology};
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::experiment::{Mode, ScheduleResult, SfRow};
use crate::schedule_spec::ScheduleDefaults;
use crate::sweep::{SweepParam, SweepRow};
use crate::workload::WorkloadSpec;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Effective configuration after flags and environment are resolved.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub mode: Mode,
    pub topology: CoreTopology,
    pub binding: Binding,
    pub repeats: usize,
    pub discard_first: bool,
    pub overhead_ns: u64,
    pub emulate: bool,
    pub schedule_defaults: ScheduleDefaults,
    pub prng: &'static str,
    pub workload: Vec<WorkloadSpec>,
    /// `AIDSCHED_*` variables present in the environment.
    pub env: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Body {
    Results {
        results: Vec<ScheduleResult>,
    },
    Sweep {
        parameter: SweepParam,
        schedule: String,
        rows: Vec<SweepRow>,
    },
    SfProfile {
        sf_profile: Vec<SfRow>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(flatten)]
    pub body: Body,
}

impl Report {
    pub fn new(command: &'static str, config: ConfigEcho, baseline: Option<String>, body: Body) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command,
            config,
            baseline,
            warnings: Vec::new(),
            body,
        }
    }

    pub fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| BenchError::Emit(e.to_string()))
    }

    /// Summary rows shared by the CSV and table renderings.
    pub fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        match &self.body {
            Body::Results { results } => {
                let headers = [
                    "schedule", "kind", "binding", "chunk", "major_chunk", "hybrid_fraction", "runs",
                    "mean_ns", "geomean_ns", "min_ns", "max_ns", "normalized",
                ];
                let rows = results
                    .iter()
                    .map(|r| {
                        vec![
                            r.schedule.clone(),
                            r.config.kind.name().to_string(),
                            r.binding.to_string(),
                            r.config.chunk.to_string(),
                            r.config.major_chunk.to_string(),
                            r.config.hybrid_fraction.to_string(),
                            r.stats.count.to_string(),
                            r.stats.mean_ns.to_string(),
                            r.stats.geomean_ns.to_string(),
                            r.stats.min_ns.to_string(),
                            r.stats.max_ns.to_string(),
                            opt(r.normalized),
                        ]
                    })
                    .collect();
                (headers.map(String::from).to_vec(), rows)
            }
            Body::Sweep { parameter, rows, .. } => {
                let param = serde_json::to_value(parameter).unwrap();
                let headers = [
                    "parameter", "value", "schedule", "runs", "mean_ns", "geomean_ns", "min_ns",
                    "max_ns", "baseline_geomean_ns", "normalized", "best",
                ];
                let rows = rows
                    .iter()
                    .map(|r| {
                        vec![
                            param.as_str().unwrap_or_default().to_string(),
                            r.value.to_string(),
                            r.result.schedule.clone(),
                            r.result.stats.count.to_string(),
                            r.result.stats.mean_ns.to_string(),
                            r.result.stats.geomean_ns.to_string(),
                            r.result.stats.min_ns.to_string(),
                            r.result.stats.max_ns.to_string(),
                            r.baseline.geomean_ns.to_string(),
                            opt(r.normalized),
                            r.best.to_string(),
                        ]
                    })
                    .collect();
                (headers.map(String::from).to_vec(), rows)
            }
            Body::SfProfile { sf_profile: rows } => {
                let types = self.config.topology.types();
                let mut headers = vec!["loop".to_string(), "iterations".to_string()];
                headers.extend(types.iter().map(|t| format!("sf_{}", t.name)));
                let rows = rows
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.name.clone(), r.iterations.to_string()];
                        row.extend(r.sf.iter().map(|v| opt(*v)));
                        row
                    })
                    .collect();
                (headers, rows)
            }
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let (headers, rows) = self.table();
        let mut w = csv::Writer::from_writer(Vec::new());
        let emit = |e: csv::Error| BenchError::Emit(e.to_string());
        w.write_record(&headers).map_err(emit)?;
        for r in rows {
            w.write_record(&r).map_err(emit)?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Emit(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BenchError::Emit(e.to_string()))
    }

    pub fn to_text_table(&self) -> String {
        let (headers, rows) = self.table();
        let mut widths: Vec<usize> = headers.iter().map(String::len).collect();
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            let mut out = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                out.push_str(&format!("{c:<w$}"));
            }
            out.trim_end().to_string() + "\n"
        };
        let mut out = line(&headers);
        for r in &rows {
            out.push_str(&line(r));
        }
        if let Some(b) = &self.baseline {
            out.push_str(&format!("baseline: {b}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Table => Ok(self.to_text_table()),
        }
    }

    pub fn write(&self, format: Format, out: Option<&std::path::Path>) -> Result<()> {
        let text = self.render(format)?;
        match out {
            Some(path) => std::fs::write(path, text).map_err(|source| BenchError::Io {
                path: path.to_path_buf(),
                source,
            }),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| BenchError::Emit(e.to_string())),
        }
    }
}
