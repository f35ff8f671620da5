//! Declarative experiment runs and their CSV reports.
//!
//! A [`Manifest`] lists objects, noise levels, seeds and methods. Every
//! combination is synthesized, corrupted, filtered and scored; one CSV row is
//! produced per evaluated band plus one summary row (`band_index = -1`).

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::baselines::{baseline_average, baseline_separate, baseline_slice, AverageMode};
use super::metrics::{mean, rrmse_amp, rrmse_phase, snr_db};
use crate::ccf::{ccf_denoise_report, ccf_sliding_report, ccf_window, RunReport, WindowPlan, WindowSpec};
use crate::cdbm3d::DenoiseConfig;
use crate::cube::{uniform_grid, ComplexCube};
use crate::error::{Error, Result};
use crate::synth::{add_noise, generate_truth, DispersionModel, NoiseSpec, ObjectKind, PhaseObjectSpec};

pub const SCHEMA_VERSION: u32 = 1;
/// Default center of the single-window method, nanometers.
pub const DEFAULT_CENTER_NM: f64 = 598.0;

/// A filter and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// The noisy cube itself.
    Noisy,
    Ccf,
    CcfSliding(WindowSpec),
    /// One run on the window around `center`; only its bands are returned.
    CcfWindow(WindowSpec),
    Cdbm3dSlice,
    Separate,
    Average(AverageMode),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Noisy => "noisy",
            Method::Ccf => "ccf",
            Method::CcfSliding(_) => "ccf-sliding",
            Method::CcfWindow(_) => "ccf-window",
            Method::Cdbm3dSlice => "cdbm3d-slice",
            Method::Separate => "separate",
            Method::Average(AverageMode::Global) => "average-global",
            Method::Average(AverageMode::Pairwise) => "average-pairwise",
        }
    }
}

/// Filtered cube plus what the cube filter selected along the way.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub cube: ComplexCube,
    /// Index in the input of the first band of `cube`.
    pub band_offset: usize,
    pub runs: Vec<RunReport>,
    /// Sliding plan, one entry per run; empty for other methods.
    pub plans: Vec<WindowPlan>,
}

impl MethodOutput {
    fn plain(cube: ComplexCube) -> Self {
        Self {
            cube,
            band_offset: 0,
            runs: Vec::new(),
            plans: Vec::new(),
        }
    }

    /// Subspace dimension used for each output band, if a cube filter ran.
    pub fn p_per_band(&self) -> Vec<Option<usize>> {
        let n = self.cube.n_bands();
        if !self.plans.is_empty() {
            let mut p = vec![None; n];
            for (plan, run) in self.plans.iter().zip(&self.runs) {
                for slot in &mut p[plan.keep_lo..plan.keep_hi] {
                    *slot = Some(run.p);
                }
            }
            return p;
        }
        vec![self.runs.first().map(|r| r.p); n]
    }
}

pub fn run_method(
    method: &Method,
    noisy: &ComplexCube,
    cfg: &DenoiseConfig,
    model: Option<&DispersionModel>,
) -> Result<MethodOutput> {
    Ok(match method {
        Method::Noisy => MethodOutput::plain(noisy.clone()),
        Method::Ccf => {
            let (cube, run) = ccf_denoise_report(noisy, cfg)?;
            MethodOutput {
                runs: vec![run],
                ..MethodOutput::plain(cube)
            }
        }
        Method::CcfSliding(w) => {
            let (cube, reports) = ccf_sliding_report(noisy, cfg, w)?;
            let (plans, runs) = reports.into_iter().map(|r| (r.plan, r.run)).unzip();
            MethodOutput {
                cube,
                band_offset: 0,
                runs,
                plans,
            }
        }
        Method::CcfWindow(w) => {
            let (cube, run) = ccf_window(noisy, cfg, w)?;
            MethodOutput {
                band_offset: run.lo,
                runs: vec![run],
                ..MethodOutput::plain(cube)
            }
        }
        Method::Cdbm3dSlice => MethodOutput::plain(baseline_slice(noisy, cfg)?),
        Method::Separate => MethodOutput::plain(baseline_separate(noisy, cfg)?),
        Method::Average(mode) => MethodOutput::plain(baseline_average(noisy, model, *mode)?),
    })
}

fn default_rows() -> usize {
    64
}
fn default_bands() -> usize {
    200
}
fn default_lambda_min() -> f64 {
    400.0
}
fn default_lambda_max() -> f64 {
    798.0
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_windows() -> Vec<usize> {
    vec![WindowSpec::default().width]
}
fn default_steps() -> Vec<usize> {
    vec![WindowSpec::default().step]
}
fn default_true() -> bool {
    true
}

/// Object to synthesize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    pub kind: ObjectKind,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default = "default_rows")]
    pub cols: usize,
    #[serde(default = "default_bands")]
    pub bands: usize,
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    /// Overrides the default peak phase at 400 nm.
    #[serde(default)]
    pub max_phase_400: Option<f64>,
    /// Name in the report; defaults to the kind.
    #[serde(default)]
    pub label: Option<String>,
}

impl ObjectEntry {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.label().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Noisy,
    Ccf,
    CcfSliding,
    CcfWindow,
    Cdbm3dSlice,
    Separate,
    AverageGlobal,
    AveragePairwise,
}

/// Method entry; `windows` and `steps` expand into one run per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub method: MethodKind,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub denoise: DenoiseConfig,
    /// Window widths for `ccf-sliding` and `ccf-window`.
    #[serde(default = "default_windows")]
    pub windows: Vec<usize>,
    /// Center steps for `ccf-sliding`.
    #[serde(default = "default_steps")]
    pub steps: Vec<usize>,
    /// Center of `ccf-window`, nanometers.
    #[serde(default)]
    pub center_nm: Option<f64>,
}

impl MethodEntry {
    pub fn new(method: MethodKind) -> Self {
        Self {
            method,
            label: None,
            denoise: DenoiseConfig::default(),
            windows: default_windows(),
            steps: default_steps(),
            center_nm: None,
        }
    }

    /// Concrete methods for a cube with the given wavelengths, with the
    /// window width and step each one uses.
    fn expand(&self, cube: &ComplexCube) -> Vec<(Method, Option<usize>, Option<usize>)> {
        match self.method {
            MethodKind::Noisy => vec![(Method::Noisy, None, None)],
            MethodKind::Ccf => vec![(Method::Ccf, None, None)],
            MethodKind::Cdbm3dSlice => vec![(Method::Cdbm3dSlice, None, None)],
            MethodKind::Separate => vec![(Method::Separate, None, None)],
            MethodKind::AverageGlobal => vec![(Method::Average(AverageMode::Global), None, None)],
            MethodKind::AveragePairwise => vec![(Method::Average(AverageMode::Pairwise), None, None)],
            MethodKind::CcfSliding => self
                .windows
                .iter()
                .flat_map(|&width| {
                    self.steps.iter().map(move |&step| {
                        (
                            Method::CcfSliding(WindowSpec { center: 0, width, step }),
                            Some(width),
                            Some(step),
                        )
                    })
                })
                .collect(),
            MethodKind::CcfWindow => {
                let center = cube.nearest_band(self.center_nm.unwrap_or(DEFAULT_CENTER_NM));
                self.windows
                    .iter()
                    .map(|&width| {
                        (
                            Method::CcfWindow(WindowSpec {
                                center,
                                width,
                                step: 1,
                            }),
                            Some(width),
                            None,
                        )
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    #[serde(default)]
    pub dispersion: DispersionModel,
    #[serde(default)]
    pub objects: Vec<ObjectEntry>,
    #[serde(default)]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub methods: Vec<MethodEntry>,
    /// CSV destination, relative to the manifest file.
    #[serde(default)]
    pub output: Option<String>,
    /// Record wall-clock seconds; disable for byte-reproducible CSVs.
    #[serde(default = "default_true")]
    pub timing: bool,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidConfig(format!("sigma {s} must be finite and ≥ 0")));
        }
        for m in &self.methods {
            m.denoise.validate()?;
            if m.windows.iter().chain(&m.steps).any(|&v| v == 0) {
                return Err(Error::InvalidConfig("window widths and steps must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Scores of one (object, σ, seed, method, window, step) combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub object: String,
    pub method: String,
    pub sigma: f64,
    pub seed: u64,
    pub window: Option<usize>,
    pub step: Option<usize>,
    /// Input band index of each evaluated band.
    pub band_index: Vec<usize>,
    pub wavelengths: Vec<f64>,
    pub rrmse_phase: Vec<f64>,
    pub rrmse_amp: Vec<f64>,
    pub p_per_band: Vec<Option<usize>>,
    pub mean_rrmse_phase: f64,
    pub mean_rrmse_amp: f64,
    /// SNR of the noisy input.
    pub snr_db: f64,
    pub seconds: Option<f64>,
    pub config: MethodEntry,
}

impl MetricsReport {
    pub fn p_selected(&self) -> Option<usize> {
        self.p_per_band.iter().flatten().copied().max()
    }

    pub fn rows(&self) -> Vec<MetricsRow> {
        let row = |band_index: i64, wavelength_nm, rrmse_phase, rrmse_amp, p_selected| MetricsRow {
            object: self.object.clone(),
            method: self.method.clone(),
            sigma: self.sigma,
            seed: self.seed,
            band_index,
            wavelength_nm,
            rrmse_phase,
            rrmse_amp,
            snr_db: self.snr_db,
            p_selected,
            window: self.window,
            step: self.step,
            seconds: self.seconds,
        };
        let mut out: Vec<MetricsRow> = (0..self.band_index.len())
            .map(|i| {
                row(
                    self.band_index[i] as i64,
                    Some(self.wavelengths[i]),
                    self.rrmse_phase[i],
                    self.rrmse_amp[i],
                    self.p_per_band[i],
                )
            })
            .collect();
        out.push(row(-1, None, self.mean_rrmse_phase, self.mean_rrmse_amp, self.p_selected()));
        out
    }
}

/// Scores `est` (whose first band is input band `offset`) against `truth`.
pub fn score(
    est: &ComplexCube,
    offset: usize,
    truth: &ComplexCube,
) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let idx: Vec<usize> = (offset..offset + est.n_bands()).collect();
    let sub = if offset == 0 && est.n_bands() == truth.n_bands() {
        truth.clone()
    } else {
        truth.band_range(offset, offset + est.n_bands())?
    };
    let phase = (0..est.n_bands()).map(|b| rrmse_phase(est, &sub, b)).collect::<Result<Vec<_>>>()?;
    let amp = (0..est.n_bands()).map(|b| rrmse_amp(est, &sub, b)).collect::<Result<Vec<_>>>()?;
    Ok((idx, phase, amp))
}

/// A combination that could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub combination: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    pub reports: Vec<MetricsReport>,
    pub failures: Vec<Failure>,
}

impl ExperimentOutcome {
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.reports.iter().flat_map(|r| r.rows()).collect()
    }
}

/// Runs every combination of the manifest in declaration order.
///
/// A failing combination is recorded and the remaining ones still run.
pub fn run_experiment(manifest: &Manifest) -> Result<ExperimentOutcome> {
    manifest.validate()?;
    let mut outcome = ExperimentOutcome::default();
    if manifest.methods.is_empty() {
        return Ok(outcome);
    }
    let model = &manifest.dispersion;
    for object in &manifest.objects {
        let label = object.label();
        let truth = (|| {
            let spec = PhaseObjectSpec::build(object.kind, object.rows, object.cols, model, object.max_phase_400)?;
            let wl = uniform_grid(object.lambda_min, object.lambda_max, object.bands);
            generate_truth(&spec, model, &wl)
        })();
        let truth = match truth {
            Ok(t) => t,
            Err(e) => {
                outcome.failures.push(Failure {
                    combination: format!("object={label}"),
                    error: e.to_string(),
                });
                continue;
            }
        };
        for &sigma in &manifest.sigmas {
            for &seed in &manifest.seeds {
                let noisy = add_noise(&truth, &NoiseSpec { sigma, seed })?;
                let snr = snr_db(&noisy, &truth)?;
                for entry in &manifest.methods {
                    for (method, window, step) in entry.expand(&truth) {
                        let name = entry.label.clone().unwrap_or_else(|| method.name().to_string());
                        let started = Instant::now();
                        let result = run_method(&method, &noisy, &entry.denoise, Some(model)).and_then(|out| {
                            let seconds = started.elapsed().as_secs_f64();
                            let (band_index, phase, amp) = score(&out.cube, out.band_offset, &truth)?;
                            Ok(MetricsReport {
                                object: label.clone(),
                                method: name.clone(),
                                sigma,
                                seed,
                                window,
                                step,
                                wavelengths: band_index.iter().map(|&b| truth.wavelengths()[b]).collect(),
                                band_index,
                                mean_rrmse_phase: mean(&phase),
                                mean_rrmse_amp: mean(&amp),
                                rrmse_phase: phase,
                                rrmse_amp: amp,
                                p_per_band: out.p_per_band(),
                                snr_db: snr,
                                seconds: manifest.timing.then_some(seconds),
                                config: entry.clone(),
                            })
                        });
                        match result {
                            Ok(r) => outcome.reports.push(r),
                            Err(e) => outcome.failures.push(Failure {
                                combination: format!(
                                    "object={label} method={name} sigma={sigma} seed={seed} window={window:?} step={step:?}"
                                ),
                                error: e.to_string(),
                            }),
                        }
                    }
                }
            }
        }
    }
    Ok(outcome)
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub object: String,
    pub method: String,
    pub sigma: f64,
    pub seed: u64,
    pub band_index: i64,
    pub wavelength_nm: Option<f64>,
    pub rrmse_phase: f64,
    pub rrmse_amp: f64,
    pub snr_db: f64,
    pub p_selected: Option<usize>,
    pub window: Option<usize>,
    pub step: Option<usize>,
    pub seconds: Option<f64>,
}

pub const CSV_HEADER: [&str; 13] = [
    "object",
    "method",
    "sigma",
    "seed",
    "band_index",
    "wavelength_nm",
    "rrmse_phase",
    "rrmse_amp",
    "snr_db",
    "p_selected",
    "window",
    "step",
    "seconds",
];

/// Writes the header and `rows`; the header is written even with no rows.
pub fn write_csv<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidConfig(format!("unexpected CSV header {header:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}
