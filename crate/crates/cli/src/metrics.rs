use std::io;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hscube::chsc;
use hscube::eval::experiment::{score, write_csv};
use hscube::eval::{mean, snr_db, MetricsRow};
use hscube::ComplexCube;

use crate::output::Staged;
use crate::Usage;

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Estimated cube.
    pub estimate: PathBuf,
    /// Reference cube of the same shape.
    pub truth: PathBuf,
    /// Noisy input cube; fills the snr_db column (NaN otherwise).
    #[arg(long)]
    pub noisy: Option<PathBuf>,
    /// CSV destination [default: stdout]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Value of the object column.
    #[arg(long, default_value = "object")]
    pub object: String,
    /// Value of the method column.
    #[arg(long, default_value = "estimate")]
    pub method: String,
    /// Value of the sigma column [default: NaN]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Value of the seed column.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn read(path: &PathBuf) -> anyhow::Result<ComplexCube> {
    chsc::read_cube(path).with_context(|| format!("cannot read {}", path.display()))
}

fn check_shape(what: &str, a: &ComplexCube, truth: &ComplexCube) -> anyhow::Result<()> {
    if a.shape() != truth.shape() {
        let (r, c, l) = a.shape();
        let (tr, tc, tl) = truth.shape();
        return Err(Usage(format!("shape mismatch: {what} is {r}x{c}x{l}, truth is {tr}x{tc}x{tl}")).into());
    }
    Ok(())
}

pub fn run(a: MetricsArgs) -> anyhow::Result<()> {
    let est = read(&a.estimate)?;
    let truth = read(&a.truth)?;
    check_shape("estimate", &est, &truth)?;
    let snr = match &a.noisy {
        Some(p) => {
            let noisy = read(p)?;
            check_shape("noisy cube", &noisy, &truth)?;
            snr_db(&noisy, &truth)?
        }
        None => f64::NAN,
    };
    let (bands, phase, amp) = score(&est, 0, &truth)?;
    let row = |band_index: i64, wavelength_nm, rrmse_phase, rrmse_amp| MetricsRow {
        object: a.object.clone(),
        method: a.method.clone(),
        sigma: a.sigma.unwrap_or(f64::NAN),
        seed: a.seed,
        band_index,
        wavelength_nm,
        rrmse_phase,
        rrmse_amp,
        snr_db: snr,
        p_selected: None,
        window: None,
        step: None,
        seconds: None,
    };
    let mut rows: Vec<MetricsRow> = bands
        .iter()
        .map(|&b| row(b as i64, Some(truth.wavelengths()[b]), phase[b], amp[b]))
        .collect();
    rows.push(row(-1, None, mean(&phase), mean(&amp)));

    match &a.output {
        Some(path) => {
            let mut staged = Staged::default();
            write_csv(&rows, staged.file(path)?)?;
            staged.commit()
        }
        None => Ok(write_csv(&rows, io::stdout().lock())?),
    }
}
