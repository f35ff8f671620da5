use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, ValueEnum};
use hscube::ccf::{RunReport, WindowPlan, WindowSpec};
use hscube::chsc;
use hscube::eval::experiment::DEFAULT_CENTER_NM;
use hscube::eval::{run_method, AverageMode, Method};
use hscube::synth::DispersionModel;
use serde::Serialize;

use crate::args::{parse_dispersion, FilterArgs};
use crate::output::{write_cube, Staged};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    /// Cube filter over all bands at once.
    Ccf,
    /// Cube filter on sliding wavelength windows.
    CcfSliding,
    /// Cube filter on one window; writes only the window's bands.
    CcfWindow,
    /// Complex block-matching filter on each band independently.
    Cdbm3dSlice,
    /// Amplitude and phase filtered as separate real images.
    Separate,
    /// Thickness averaging across bands.
    Average,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageArg {
    /// All bands.
    Global,
    /// Each band with its neighbor.
    Pairwise,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Input CHSC cube.
    pub input: PathBuf,
    /// Output CHSC cube.
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Window width in bands (ccf-sliding, ccf-window).
    #[arg(long, default_value_t = 70)]
    pub window: usize,
    /// Distance between window centers in bands (ccf-sliding).
    #[arg(long, default_value_t = 12)]
    pub step: usize,
    /// Window center wavelength in nm (ccf-window).
    #[arg(long, default_value_t = DEFAULT_CENTER_NM)]
    pub center_nm: f64,
    #[arg(long, value_enum, default_value = "global")]
    pub average_mode: AverageArg,
    /// `bk7` or Cauchy coefficients A0,B0[,C0] with λ in µm; required by average.
    #[arg(long, value_parser = parse_dispersion)]
    pub dispersion: Option<DispersionModel>,
    /// Sidecar path [default: OUTPUT with `.json` appended]
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Serialize)]
struct WindowEntry {
    /// Input bands `lo..hi` seen by the cube filter.
    lo: usize,
    hi: usize,
    /// Sliding mode only: center band and the bands `keep_lo..keep_hi` kept.
    center: Option<usize>,
    keep_lo: Option<usize>,
    keep_hi: Option<usize>,
    p: usize,
    eigen_sigmas: Vec<f64>,
}

#[derive(Serialize)]
struct Timings {
    read_seconds: f64,
    denoise_seconds: f64,
    write_seconds: f64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    method: &'static str,
    input: &'a Path,
    output: &'a Path,
    input_shape: [usize; 3],
    output_shape: [usize; 3],
    band_offset: usize,
    config: hscube::cdbm3d::DenoiseConfig,
    window: Option<WindowSpec>,
    average_mode: Option<AverageArg>,
    dispersion: Option<DispersionModel>,
    n_windows: usize,
    windows: Vec<WindowEntry>,
    timings: Timings,
}

fn shape(c: &hscube::ComplexCube) -> [usize; 3] {
    let (r, q, l) = c.shape();
    [r, q, l]
}

fn windows(runs: Vec<RunReport>, plans: Vec<WindowPlan>) -> Vec<WindowEntry> {
    let mut plans = plans.into_iter().map(Some).chain(std::iter::repeat_with(|| None));
    runs.into_iter()
        .map(|r| {
            let plan = plans.next().flatten();
            WindowEntry {
                lo: r.lo,
                hi: r.hi,
                center: plan.as_ref().map(|p| p.center),
                keep_lo: plan.as_ref().map(|p| p.keep_lo),
                keep_hi: plan.as_ref().map(|p| p.keep_hi),
                p: r.p,
                eigen_sigmas: r.eigen_sigmas,
            }
        })
        .collect()
}

pub fn run(a: DenoiseArgs) -> anyhow::Result<()> {
    let cfg = a.filter.config();
    cfg.validate()?;
    let t0 = Instant::now();
    let noisy = chsc::read_cube(&a.input).with_context(|| format!("cannot read {}", a.input.display()))?;
    let read_seconds = t0.elapsed().as_secs_f64();

    let method = match a.method {
        MethodArg::Ccf => Method::Ccf,
        MethodArg::CcfSliding => Method::CcfSliding(WindowSpec { center: 0, width: a.window, step: a.step }),
        MethodArg::CcfWindow => Method::CcfWindow(WindowSpec {
            center: noisy.nearest_band(a.center_nm),
            width: a.window,
            step: 1,
        }),
        MethodArg::Cdbm3dSlice => Method::Cdbm3dSlice,
        MethodArg::Separate => Method::Separate,
        MethodArg::Average => Method::Average(match a.average_mode {
            AverageArg::Global => AverageMode::Global,
            AverageArg::Pairwise => AverageMode::Pairwise,
        }),
    };
    let window = match method {
        Method::CcfSliding(w) | Method::CcfWindow(w) => Some(w),
        _ => None,
    };

    let t1 = Instant::now();
    let out = run_method(&method, &noisy, &cfg, a.dispersion.as_ref())?;
    let denoise_seconds = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut staged = Staged::default();
    write_cube(&out.cube, staged.file(&a.output)?)?;
    let write_seconds = t2.elapsed().as_secs_f64();

    let ws = windows(out.runs, out.plans);
    let sidecar = Sidecar {
        method: method.name(),
        input: &a.input,
        output: &a.output,
        input_shape: shape(&noisy),
        output_shape: shape(&out.cube),
        band_offset: out.band_offset,
        config: cfg,
        window,
        average_mode: matches!(a.method, MethodArg::Average).then_some(a.average_mode),
        dispersion: a.dispersion,
        n_windows: ws.len(),
        windows: ws,
        timings: Timings {
            read_seconds,
            denoise_seconds,
            write_seconds,
        },
    };
    let sidecar_path = a.sidecar.clone().unwrap_or_else(|| {
        let mut s = a.output.clone().into_os_string();
        s.push(".json");
        PathBuf::from(s)
    });
    let f = staged.file(&sidecar_path)?;
    serde_json::to_writer_pretty(&mut *f, &sidecar)?;
    writeln!(f)?;
    staged.commit()?;
    println!("{}: {} window(s), {:.2} s", method.name(), sidecar.n_windows, denoise_seconds);
    Ok(())
}
