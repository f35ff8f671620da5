use hscube::ccf::{ccf_denoise, ccf_denoise_report, ccf_sliding, ccf_sliding_report, sliding_plan, WindowSpec};
use hscube::cdbm3d::DenoiseConfig;
use hscube::cube::uniform_grid;
use hscube::eval::mean_rrmse_phase;
use hscube::synth::{add_noise, generate_truth, DispersionModel, NoiseSpec, ObjectKind, PhaseObjectSpec};
use hscube::ComplexCube;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cnormal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Sum of `k` separable terms: spectrum × smooth image.
fn exact_rank_cube(k: usize, rows: usize, cols: usize, bands: usize, seed: u64) -> ComplexCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spectra: Vec<Vec<Complex64>> = (0..k).map(|_| (0..bands).map(|_| cnormal(&mut rng)).collect()).collect();
    let images: Vec<Array2<Complex64>> = (0..k)
        .map(|_| {
            let (a, b, c) = (cnormal(&mut rng), rng.random_range(0.05..0.3), rng.random_range(0.05..0.3));
            Array2::from_shape_fn((rows, cols), |(r, q)| a * Complex64::new((b * r as f64).sin(), (c * q as f64).cos()))
        })
        .collect();
    let data = Array3::from_shape_fn((bands, rows, cols), |(l, r, q)| (0..k).map(|i| spectra[i][l] * images[i][[r, q]]).sum());
    ComplexCube::new(data, uniform_grid(400.0, 700.0, bands)).unwrap()
}

fn rel_diff(a: &ComplexCube, b: &ComplexCube) -> f64 {
    let num: f64 = a.data().iter().zip(b.data().iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.data().iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn two_peak(bands: usize, sigma: f64, seed: u64) -> (ComplexCube, ComplexCube) {
    let model = DispersionModel::BK7;
    let spec = PhaseObjectSpec::build(ObjectKind::TwoPeak, 64, 64, &model, None).unwrap();
    let truth = generate_truth(&spec, &model, &uniform_grid(400.0, 798.0, bands)).unwrap();
    let noisy = add_noise(&truth, &NoiseSpec { sigma, seed }).unwrap();
    (truth, noisy)
}

#[test]
fn noiseless_low_rank_cube_passes_unchanged() {
    let cube = exact_rank_cube(3, 32, 32, 12, 4);
    let (out, report) = ccf_denoise_report(&cube, &DenoiseConfig::default()).unwrap();
    assert_eq!(report.p, 3);
    assert_eq!(out.shape(), cube.shape());
    let d = rel_diff(&out, &cube);
    assert!(d < 1e-6, "{d}");
}

#[test]
fn single_window_spanning_cube_matches_whole_cube_run() {
    let (_, noisy) = two_peak(16, 1.0, 3);
    let cfg = DenoiseConfig::default();
    let whole = ccf_denoise(&noisy, &cfg).unwrap();
    let sliding = ccf_sliding(&noisy, &cfg, &WindowSpec { center: 0, width: 16, step: 16 }).unwrap();
    assert_eq!(whole, sliding);
}

#[test]
fn filter_is_phase_equivariant() {
    let base = exact_rank_cube(2, 24, 24, 8, 6);
    let noisy = add_noise(&base, &NoiseSpec { sigma: 0.3, seed: 8 }).unwrap();
    let c = Complex64::from_polar(1.0, 0.7);
    let cfg = DenoiseConfig::default();
    let a = ccf_denoise(&noisy, &cfg).unwrap().map(|z| z * c).unwrap();
    let b = ccf_denoise(&noisy.map(|z| z * c).unwrap(), &cfg).unwrap();
    let d = rel_diff(&b, &a);
    assert!(d < 1e-8, "{d}");
}

#[test]
fn cube_filter_halves_noisy_error() {
    let (truth, noisy) = two_peak(60, 1.3, 11);
    let out = ccf_denoise(&noisy, &DenoiseConfig::default()).unwrap();
    assert_eq!(out.shape(), noisy.shape());
    let before = mean_rrmse_phase(&noisy, &truth).unwrap();
    let after = mean_rrmse_phase(&out, &truth).unwrap();
    assert!(after * 2.0 <= before, "{after} vs {before}");
}

#[test]
fn sliding_windows_report_bounded_dimension() {
    let (_, noisy) = two_peak(40, 1.3, 2);
    let window = WindowSpec { center: 0, width: 20, step: 8 };
    let (out, reports) = ccf_sliding_report(&noisy, &DenoiseConfig::default(), &window).unwrap();
    assert_eq!(out.shape(), noisy.shape());
    assert_eq!(reports.len(), sliding_plan(40, &window).unwrap().len());
    for r in &reports {
        assert!(r.run.p >= 1 && r.run.p <= r.plan.hi - r.plan.lo);
        assert_eq!(r.run.eigen_sigmas.len(), r.run.p);
    }
}

#[test]
fn too_few_bands_rejected() {
    let cube = exact_rank_cube(1, 16, 16, 2, 1);
    assert!(matches!(
        ccf_denoise(&cube, &DenoiseConfig::default()),
        Err(hscube::Error::TooFewBands(2))
    ));
}
