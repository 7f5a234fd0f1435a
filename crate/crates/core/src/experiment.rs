//! Parameter sweeps and result files.
//!
//! A sweep is described by a TOML file with the sections `network`, `quadrature`,
//! `simulation`, `sweep` and `output`. Every sweep point yields one
//! [`ExperimentRecord`] per thinning rule, in sweep order.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    intensity, mean_interference, tail_bound, AnalysisError, QuadratureConfig, ThinningType,
};
use crate::geometry::exclusion_zone_area;
use crate::params::{NetworkParams, ParamError, PathLossModel};
use crate::simulator::{empirical_intensity, palm_interference, SimError, SimulationConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// CSV columns, in file order.
pub const CSV_COLUMNS: [&str; 22] = [
    "thinning",
    "lambda_p",
    "d",
    "r_cs",
    "r_tx",
    "alpha",
    "amplitude",
    "p_t",
    "v_o",
    "analytic_intensity",
    "emp_intensity_mean",
    "emp_intensity_ci95",
    "analytic_interference",
    "interference_tail_bound",
    "emp_interference_mean",
    "emp_interference_ci95",
    "palm_acceptance_rate",
    "n_replications",
    "seed",
    "r_max",
    "wall_time_analytic_s",
    "wall_time_sim_s",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    fn at(context: &str, e: ParamError) -> Self {
        Self::invalid(format!("{context}.{}", e.field), e.reason)
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("no records to write")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot serialize record: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep point {index}: {source}")]
    Simulation { index: usize, source: SimError },
    #[error("sweep point {index}: {source}")]
    Analysis { index: usize, source: AnalysisError },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    #[serde(rename = "jsonl")]
    JsonLines,
}

impl OutputFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Csv => "results.csv",
            Self::JsonLines => "results.jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Length unit shared by every distance in the file.
    pub unit: String,
    pub d: f64,
    pub r_cs: f64,
    pub r_tx: f64,
    pub p_t: f64,
    pub alpha: f64,
    pub amplitude: f64,
    /// Defaults to `1e-3 * d`.
    pub near_field_cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub r_max: f64,
    #[serde(default = "defaults::n_r")]
    pub n_r: usize,
    #[serde(default = "defaults::n_phi")]
    pub n_phi: usize,
    #[serde(default = "defaults::n_theta")]
    pub n_theta: usize,
    #[serde(default = "defaults::refine_levels")]
    pub refine_levels: usize,
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    /// Defaults to the smallest window allowed by `quadrature.r_max`.
    pub window_half_length: Option<f64>,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lambda_p: Vec<f64>,
    /// Overrides `network.r_cs` when present.
    pub r_cs: Option<Vec<f64>>,
    /// Overrides `network.r_tx` when present.
    pub r_tx: Option<Vec<f64>>,
    #[serde(default = "defaults::thinning")]
    pub thinning: Vec<ThinningType>,
    #[serde(default)]
    pub analytic_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "defaults::dir")]
    pub dir: PathBuf,
    /// Record wall-clock times. Off by default so that reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: OutputFormat::Csv,
            dir: defaults::dir(),
            timing: false,
        }
    }
}

mod defaults {
    use super::ThinningType;
    use std::path::PathBuf;

    pub fn n_r() -> usize {
        16
    }
    pub fn n_phi() -> usize {
        32
    }
    pub fn n_theta() -> usize {
        16
    }
    pub fn refine_levels() -> usize {
        4
    }
    pub fn rel_tol() -> f64 {
        5e-3
    }
    pub fn thinning() -> Vec<ThinningType> {
        ThinningType::ALL.to_vec()
    }
    pub fn dir() -> PathBuf {
        PathBuf::from("results")
    }
}

/// A whole experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSection,
    pub quadrature: QuadratureSection,
    pub simulation: SimulationSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// One fully resolved sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub thinning: ThinningType,
    pub params: NetworkParams<f64>,
    pub quad: QuadratureConfig<f64>,
    pub sim: Option<SimulationConfig<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.points()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Expands the sweep in order `r_cs`, `r_tx`, `lambda_p`, thinning, validating
    /// every point before anything is computed.
    pub fn points(&self) -> Result<Vec<SweepPoint>, ConfigError> {
        let net = &self.network;
        if net.unit.trim().is_empty() {
            return Err(ConfigError::invalid(
                "network.unit",
                "must name a length unit",
            ));
        }
        let sweep = &self.sweep;
        if sweep.lambda_p.is_empty() {
            return Err(ConfigError::invalid(
                "sweep.lambda_p",
                "needs at least one value",
            ));
        }
        if sweep.thinning.is_empty() {
            return Err(ConfigError::invalid(
                "sweep.thinning",
                "needs at least one value",
            ));
        }
        let path_loss = PathLossModel {
            amplitude: net.amplitude,
            exponent: net.alpha,
            near_field_cutoff: net.near_field_cutoff.unwrap_or(1e-3 * net.d),
        };
        path_loss
            .validate()
            .map_err(|e| ConfigError::at("network", e))?;
        let r_cs_values = sweep.r_cs.clone().unwrap_or_else(|| vec![net.r_cs]);
        let r_tx_values = sweep.r_tx.clone().unwrap_or_else(|| vec![net.r_tx]);
        let q = &self.quadrature;
        let quad = QuadratureConfig {
            r_max: q.r_max,
            n_r: q.n_r,
            n_phi: q.n_phi,
            n_theta: q.n_theta,
            refine_levels: q.refine_levels,
            rel_tol: q.rel_tol,
        };

        let mut points = Vec::new();
        for &r_cs in &r_cs_values {
            for &r_tx in &r_tx_values {
                for &lambda_p in &sweep.lambda_p {
                    let params = NetworkParams {
                        lambda_p,
                        d: net.d,
                        r_cs,
                        r_tx,
                        p_t: net.p_t,
                        path_loss,
                    };
                    let context = if sweep.r_cs.is_some() || sweep.r_tx.is_some() {
                        "sweep"
                    } else {
                        "network"
                    };
                    params.validate().map_err(|e| match e.field {
                        "lambda_p" => ConfigError::at("sweep", e),
                        _ => ConfigError::at(context, e),
                    })?;
                    if lambda_p <= 0.0 {
                        return Err(ConfigError::invalid(
                            "sweep.lambda_p",
                            format!("must be > 0, got {lambda_p}"),
                        ));
                    }
                    quad.validate(&params)
                        .map_err(|e| ConfigError::at("quadrature", e))?;
                    for &thinning in &sweep.thinning {
                        let sim = if sweep.analytic_only {
                            None
                        } else {
                            let s = &self.simulation;
                            let mut sim = SimulationConfig::new(
                                thinning,
                                q.r_max,
                                s.replications,
                                s.seed,
                                &params,
                            );
                            if let Some(l) = s.window_half_length {
                                sim.window_half_length = l;
                            }
                            sim.validate(&params)
                                .map_err(|e| ConfigError::at("simulation", e))?;
                            if s.replications < 2 {
                                return Err(ConfigError::invalid(
                                    "simulation.replications",
                                    "must be at least 2 for a confidence interval",
                                ));
                            }
                            Some(sim)
                        };
                        points.push(SweepPoint {
                            thinning,
                            params,
                            quad,
                            sim,
                        });
                    }
                }
            }
        }
        Ok(points)
    }
}

/// One row of output.
///
/// Empirical fields are `None` in analytic-only runs, `analytic_interference` is
/// `None` when the quadrature did not converge (its history is kept), and wall
/// times are `None` unless timing was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub thinning: ThinningType,
    pub lambda_p: f64,
    pub d: f64,
    pub r_cs: f64,
    pub r_tx: f64,
    pub alpha: f64,
    pub amplitude: f64,
    pub p_t: f64,
    pub v_o: f64,
    pub analytic_intensity: f64,
    pub emp_intensity_mean: Option<f64>,
    pub emp_intensity_ci95: Option<f64>,
    pub analytic_interference: Option<f64>,
    pub interference_tail_bound: f64,
    pub emp_interference_mean: Option<f64>,
    pub emp_interference_ci95: Option<f64>,
    pub palm_acceptance_rate: Option<f64>,
    pub n_replications: Option<usize>,
    pub seed: Option<u64>,
    pub r_max: f64,
    pub wall_time_analytic_s: Option<f64>,
    pub wall_time_sim_s: Option<f64>,
    pub near_field_cutoff: f64,
    pub quadrature: QuadratureConfig<f64>,
    pub window_half_length: Option<f64>,
    pub interference_history: Vec<f64>,
    pub converged: bool,
}

/// Evaluates one sweep point.
pub fn evaluate(point: &SweepPoint, timing: bool) -> Result<ExperimentRecord, SweepError> {
    let p = &point.params;
    let v_o = exclusion_zone_area(p).v_o;
    let started = Instant::now();
    let (analytic_interference, history, converged) =
        match mean_interference(point.thinning, p, &point.quad) {
            Ok(res) => (Some(res.mean_interference), res.grid_estimate_history, true),
            Err(AnalysisError::NotConverged { history }) => (None, history, false),
            Err(source) => return Err(SweepError::Analysis { index: 0, source }),
        };
    let wall_analytic = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let (emp_i, emp_f, palm) = match &point.sim {
        Some(sim) => {
            let emp_i = empirical_intensity(sim, p)
                .map_err(|source| SweepError::Simulation { index: 0, source })?;
            let palm = palm_interference(sim, p)
                .map_err(|source| SweepError::Simulation { index: 0, source })?;
            (
                Some(emp_i),
                Some(palm.interference),
                Some(palm.acceptance_rate()),
            )
        }
        None => (None, None, None),
    };
    let wall_sim = started.elapsed().as_secs_f64();

    Ok(ExperimentRecord {
        thinning: point.thinning,
        lambda_p: p.lambda_p,
        d: p.d,
        r_cs: p.r_cs,
        r_tx: p.r_tx,
        alpha: p.path_loss.exponent,
        amplitude: p.path_loss.amplitude,
        p_t: p.p_t,
        v_o,
        analytic_intensity: intensity(point.thinning, p.lambda_p, v_o),
        emp_intensity_mean: emp_i.map(|e| e.mean),
        emp_intensity_ci95: emp_i.map(|e| e.half_width_95),
        analytic_interference,
        interference_tail_bound: tail_bound(point.thinning, p, point.quad.r_max),
        emp_interference_mean: emp_f.map(|e| e.mean),
        emp_interference_ci95: emp_f.map(|e| e.half_width_95),
        palm_acceptance_rate: palm,
        n_replications: point.sim.map(|s| s.replications),
        seed: point.sim.map(|s| s.seed),
        r_max: point.quad.r_max,
        wall_time_analytic_s: timing.then_some(wall_analytic),
        wall_time_sim_s: (timing && point.sim.is_some()).then_some(wall_sim),
        near_field_cutoff: p.path_loss.near_field_cutoff,
        quadrature: point.quad,
        window_half_length: point.sim.map(|s| s.window_half_length),
        interference_history: history,
        converged,
    })
}

/// Runs every point on a pool of `workers` threads. Records come back in sweep order.
pub fn run_sweep(
    points: &[SweepPoint],
    timing: bool,
    workers: usize,
) -> Result<Vec<ExperimentRecord>, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, point)| {
                evaluate(point, timing).map_err(|e| match e {
                    SweepError::Simulation { source, .. } => {
                        SweepError::Simulation { index, source }
                    }
                    SweepError::Analysis { source, .. } => SweepError::Analysis { index, source },
                    other => other,
                })
            })
            .collect()
    })
}

/// Full-precision float: 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn csv_row(r: &ExperimentRecord) -> String {
    let cells = [
        r.thinning.as_str().to_owned(),
        format_float(r.lambda_p),
        format_float(r.d),
        format_float(r.r_cs),
        format_float(r.r_tx),
        format_float(r.alpha),
        format_float(r.amplitude),
        format_float(r.p_t),
        format_float(r.v_o),
        format_float(r.analytic_intensity),
        cell(r.emp_intensity_mean),
        cell(r.emp_intensity_ci95),
        cell(r.analytic_interference),
        format_float(r.interference_tail_bound),
        cell(r.emp_interference_mean),
        cell(r.emp_interference_ci95),
        cell(r.palm_acceptance_rate),
        r.n_replications.map(|n| n.to_string()).unwrap_or_default(),
        r.seed.map(|s| s.to_string()).unwrap_or_default(),
        format_float(r.r_max),
        cell(r.wall_time_analytic_s),
        cell(r.wall_time_sim_s),
    ];
    cells.join(",")
}

/// The complete CSV document: schema line, header, one row per record.
pub fn to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = format!("# schema={SCHEMA_VERSION}\n{}\n", CSV_COLUMNS.join(","));
    for r in records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// JSON formatter that writes floats with 17 significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }
}

/// One JSON object per line.
pub fn to_json_lines(records: &[ExperimentRecord]) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    for r in records {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
        r.serialize(&mut ser)?;
        buf.push(b'\n');
    }
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn parse_json_lines(text: &str) -> Result<Vec<ExperimentRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Writes `records` to `dir/results.{csv,jsonl}` and returns the file path.
pub fn emit(
    records: &[ExperimentRecord],
    format: OutputFormat,
    dir: &Path,
) -> Result<PathBuf, EmitError> {
    if records.is_empty() {
        return Err(EmitError::Empty);
    }
    let body = match format {
        OutputFormat::Csv => to_csv(records),
        OutputFormat::JsonLines => to_json_lines(records)?,
    };
    let path = dir.join(format.file_name());
    let failed = |source| EmitError::Write {
        path: path.clone(),
        source,
    };
    fs::create_dir_all(dir).map_err(failed)?;
    fs::write(&path, body).map_err(failed)?;
    Ok(path)
}
