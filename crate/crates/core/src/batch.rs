//! Identify, tune and evaluate a set of plants over several reference
//! frequencies, writing one CSV table per plant.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{identify, IdentifiedPoint, Method};
use crate::lti::TransferFunction;
use crate::relay::RelayConfig;
use crate::sim::fmt_sig;
use crate::tracking::{evaluate_tracking, TrackingConfig, TrackingStatus};
use crate::tuner::tune;

pub const DEFAULT_RATIOS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const CSV_HEADER: &str = "omega_r,xi,kp,kr1,kr2,t_s,n_s,m_o";

/// A plant given inline or as a path to a plant JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantSource {
    Inline(TransferFunction),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPlant {
    pub name: String,
    pub plant: PlantSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub plants: Vec<BatchPlant>,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    #[serde(default)]
    pub xi: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Integration step for both the relay and tracking simulations.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub relay: RelayConfig,
    /// Reference amplitude.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_ratios() -> Vec<f64> {
    DEFAULT_RATIOS.to_vec()
}

fn default_method() -> Method {
    Method::Relay
}

fn default_output() -> PathBuf {
    PathBuf::from("batch_out")
}

fn default_amplitude() -> f64 {
    1.0
}

impl BatchSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut spec: BatchSpec = serde_json::from_str(&text)?;
        if let Some(dir) = path.parent() {
            spec.resolve_relative(dir);
        }
        Ok(spec)
    }

    /// Makes relative plant paths relative to `dir`.
    pub fn resolve_relative(&mut self, dir: &Path) {
        for p in &mut self.plants {
            if let PlantSource::File(f) = &mut p.plant {
                if f.is_relative() {
                    *f = dir.join(&*f);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::InvalidBatch(format!("ratio {r} outside (0, 1)")));
        }
        let mut names: Vec<&str> = self.plants.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidBatch("plant names must be unique".into()));
        }
        if names.iter().any(|n| n.is_empty() || n.contains(['/', '\\'])) {
            return Err(Error::InvalidBatch("plant names must be plain file stems".into()));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidBatch("xi must be non-negative".into()));
        }
        if self.step.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidBatch("step must be positive".into()));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidBatch("amplitude must be positive".into()));
        }
        self.relay.validate()
    }

    fn load_plants(&self) -> Result<Vec<(String, TransferFunction)>> {
        self.plants
            .iter()
            .map(|p| {
                let tf = match &p.plant {
                    PlantSource::Inline(tf) => tf.clone(),
                    PlantSource::File(path) => load_plant(path)?,
                };
                Ok((p.name.clone(), tf))
            })
            .collect()
    }
}

pub fn load_plant(path: &Path) -> Result<TransferFunction> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Unsettled,
    Unstable,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub ratio: f64,
    pub omega_r: Option<f64>,
    pub xi: f64,
    pub kp: Option<f64>,
    pub kr1: Option<f64>,
    pub kr2: Option<f64>,
    pub t_s: Option<f64>,
    pub n_s: Option<f64>,
    pub m_o: Option<f64>,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl BatchRow {
    fn failed(ratio: f64, xi: f64, message: String) -> Self {
        Self {
            ratio,
            omega_r: None,
            xi,
            kp: None,
            kr1: None,
            kr2: None,
            t_s: None,
            n_s: None,
            m_o: None,
            status: RowStatus::Error,
            message: Some(message),
        }
    }

    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| match v {
            Some(x) => fmt_sig(x),
            None => "error".into(),
        };
        let metric = |v: Option<f64>| match (v, self.status) {
            (Some(x), _) => fmt_sig(x),
            (None, RowStatus::Unstable) => "unstable".into(),
            (None, RowStatus::Unsettled) => "unsettled".into(),
            (None, _) => "error".into(),
        };
        [
            cell(self.omega_r),
            fmt_sig(self.xi),
            cell(self.kp),
            cell(self.kr1),
            cell(self.kr2),
            metric(self.t_s),
            metric(self.n_s),
            metric(self.m_o),
        ]
        .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantReport {
    pub name: String,
    pub csv: String,
    pub point: Option<IdentifiedPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub rows: Vec<BatchRow>,
}

impl PlantReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.status != RowStatus::Ok).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub method: Method,
    pub ratios: Vec<f64>,
    pub xi: f64,
    pub plants: Vec<PlantReport>,
}

impl BatchReport {
    pub fn failed_rows(&self) -> usize {
        self.plants.iter().map(|p| p.failed_rows()).sum()
    }
}

/// Runs every plant and ratio. Per-case failures are recorded in the rows;
/// only an invalid spec or unreadable plant file is an error.
pub fn run_batch(spec: &BatchSpec) -> Result<BatchReport> {
    spec.validate()?;
    let plants = spec.load_plants()?;
    let mut relay = spec.relay.clone();
    if spec.step.is_some() {
        relay.h = spec.step;
    }
    let points: Vec<Result<IdentifiedPoint>> = plants
        .par_iter()
        .map(|(_, g)| identify(g, spec.method, &relay))
        .collect();

    let cases: Vec<(usize, f64)> = (0..plants.len())
        .flat_map(|i| spec.ratios.iter().map(move |&r| (i, r)))
        .collect();
    let rows: Vec<BatchRow> = cases
        .par_iter()
        .map(|&(i, ratio)| match &points[i] {
            Ok(point) => run_case(&plants[i].1, point, ratio, spec),
            Err(e) => BatchRow::failed(ratio, spec.xi, format!("identification failed: {e}")),
        })
        .collect();

    let mut rows = rows.into_iter();
    let reports = plants
        .iter()
        .zip(points)
        .map(|((name, _), point)| {
            let plant_rows: Vec<BatchRow> = rows.by_ref().take(spec.ratios.len()).collect();
            let (point, error) = match point {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            PlantReport {
                name: name.clone(),
                csv: format!("{name}.csv"),
                point,
                error,
                rows: plant_rows,
            }
        })
        .collect();
    Ok(BatchReport {
        method: spec.method,
        ratios: spec.ratios.clone(),
        xi: spec.xi,
        plants: reports,
    })
}

fn run_case(g: &TransferFunction, point: &IdentifiedPoint, ratio: f64, spec: &BatchSpec) -> BatchRow {
    let omega_r = ratio * point.omega_nu;
    let tuning = match tune(point, omega_r, spec.xi) {
        Ok(t) => t,
        Err(e) => return BatchRow::failed(ratio, spec.xi, e.to_string()),
    };
    let c = tuning.controller;
    let mut cfg = TrackingConfig::new(spec.amplitude, omega_r);
    cfg.h = spec.step;
    let mut row = BatchRow {
        ratio,
        omega_r: Some(omega_r),
        xi: spec.xi,
        kp: Some(c.kp),
        kr1: Some(c.kr1),
        kr2: Some(c.kr2),
        t_s: None,
        n_s: None,
        m_o: None,
        status: RowStatus::Error,
        message: None,
    };
    match evaluate_tracking(g, &c, &cfg) {
        Ok(run) => {
            let r = run.report;
            row.t_s = r.t_s;
            row.n_s = r.n_s;
            row.m_o = r.m_o;
            row.status = match r.status {
                TrackingStatus::Settled => RowStatus::Ok,
                TrackingStatus::Unsettled => RowStatus::Unsettled,
                TrackingStatus::Unstable => RowStatus::Unstable,
            };
        }
        Err(e) => row.message = Some(e.to_string()),
    }
    row
}

/// Writes `<name>.csv` per plant and `index.json` into `dir`.
pub fn write_batch(report: &BatchReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for p in &report.plants {
        fs::write(dir.join(&p.csv), p.to_csv())?;
    }
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}
