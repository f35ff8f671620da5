use std::path::PathBuf;

use clap::Args;
use hscube::cube::uniform_grid;
use hscube::eval::snr_db;
use hscube::synth::{add_noise, generate_truth, phase_for_thickness, DispersionModel, NoiseSpec, PhaseObjectSpec, CALIBRATION_NM};

use crate::args::{parse_dispersion, ObjectArg};
use crate::output::{write_cube, Staged};
use crate::Usage;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Phase object to render.
    #[arg(long, value_enum)]
    pub object: ObjectArg,
    /// Rows, columns and bands.
    #[arg(long, num_args = 3, value_names = ["ROWS", "COLS", "BANDS"], default_values_t = [64, 64, 200])]
    pub size: Vec<usize>,
    /// First and last wavelength in nm, spaced uniformly.
    #[arg(long, num_args = 2, value_names = ["MIN_NM", "MAX_NM"], default_values_t = [400.0, 798.0])]
    pub lambda: Vec<f64>,
    /// Noise standard deviation; writes the noisy cube when given.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Peak phase delay at 400 nm in radians [default: 0.9π, or 28.9 for wrapped]
    #[arg(long)]
    pub max_phase_400: Option<f64>,
    /// `bk7` or Cauchy coefficients A0,B0[,C0] with λ in µm.
    #[arg(long, value_parser = parse_dispersion, default_value = "bk7")]
    pub dispersion: DispersionModel,
    #[arg(long, default_value = "truth.chsc")]
    pub truth: PathBuf,
    #[arg(long, default_value = "noisy.chsc")]
    pub noisy: PathBuf,
}

pub fn run(a: SynthArgs) -> anyhow::Result<()> {
    let (rows, cols, bands) = (a.size[0], a.size[1], a.size[2]);
    if rows == 0 || cols == 0 || bands == 0 {
        return Err(Usage("--size values must be positive".into()).into());
    }
    if !(a.lambda[0] > 0.0 && (a.lambda[1] > a.lambda[0] || bands == 1)) {
        return Err(Usage(format!("--lambda {} {} must be positive and increasing", a.lambda[0], a.lambda[1])).into());
    }
    let spec = PhaseObjectSpec::build(a.object.into(), rows, cols, &a.dispersion, a.max_phase_400)?;
    let truth = generate_truth(&spec, &a.dispersion, &uniform_grid(a.lambda[0], a.lambda[1], bands))?;

    let h_max = spec.thickness.iter().flat_map(|m| m.iter()).cloned().fold(0.0, f64::max);
    println!(
        "peak phase at {CALIBRATION_NM} nm: {:.6} rad",
        phase_for_thickness(&a.dispersion, h_max, CALIBRATION_NM)?
    );

    let mut staged = Staged::default();
    write_cube(&truth, staged.file(&a.truth)?)?;
    if let Some(sigma) = a.sigma {
        let noisy = add_noise(&truth, &NoiseSpec { sigma, seed: a.seed })?;
        write_cube(&noisy, staged.file(&a.noisy)?)?;
        println!("SNR: {:.4} dB", snr_db(&noisy, &truth)?);
    }
    staged.commit()
}
