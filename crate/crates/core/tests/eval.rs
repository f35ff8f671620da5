use std::f64::consts::PI;

use hscube::cdbm3d::DenoiseConfig;
use hscube::cube::uniform_grid;
use hscube::eval::experiment::{read_csv, write_csv, ObjectEntry, CSV_HEADER};
use hscube::eval::*;
use hscube::synth::{add_noise, generate_truth, wrap_phase, DispersionModel, NoiseSpec, ObjectKind, PhaseObjectSpec};
use hscube::{ComplexCube, Error};
use ndarray::Array3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn phase_cube(phases: &Array3<f64>) -> ComplexCube {
    let bands = phases.dim().0;
    ComplexCube::new(phases.mapv(|p| Complex64::from_polar(1.0, p)), uniform_grid(400.0, 500.0, bands)).unwrap()
}

fn random_phases(seed: u64, scale: f64) -> Array3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array3::from_shape_simple_fn((3, 9, 7), || rng.random_range(-scale..scale))
}

#[test]
fn identical_cubes_have_zero_error() {
    let t = phase_cube(&random_phases(1, 2.0));
    assert_eq!(rrmse_phase(&t, &t, 1).unwrap(), 0.0);
    assert_eq!(rrmse_amp(&t, &t, 2).unwrap(), 0.0);
}

#[test]
fn doubled_small_phase_gives_unit_error() {
    let p = random_phases(2, 0.5);
    let r = rrmse_phase(&phase_cube(&(&p * 2.0)), &phase_cube(&p), 0).unwrap();
    assert!((r - 1.0).abs() < 1e-12, "{r}");
}

#[test]
fn phase_error_matches_elementwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let est = Array3::from_shape_simple_fn((2, 11, 5), || Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
    let tru = Array3::from_shape_simple_fn((2, 11, 5), || Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
    let e = ComplexCube::new(est.clone(), vec![1.0, 2.0]).unwrap();
    let t = ComplexCube::new(tru.clone(), vec![1.0, 2.0]).unwrap();
    for band in 0..2 {
        let mut num = 0.0;
        let mut den = 0.0;
        for y in 0..11 {
            for x in 0..5 {
                let pt = tru[[band, y, x]].im.atan2(tru[[band, y, x]].re);
                let pe = est[[band, y, x]].im.atan2(est[[band, y, x]].re);
                let mut d = pe - pt;
                while d >= PI {
                    d -= 2.0 * PI;
                }
                while d < -PI {
                    d += 2.0 * PI;
                }
                num += d * d;
                den += pt * pt;
            }
        }
        let oracle = (num / den).sqrt();
        assert!((rrmse_phase(&e, &t, band).unwrap() - oracle).abs() < 1e-12);
    }
}

#[test]
fn zero_phase_reference_is_an_error() {
    let t = phase_cube(&Array3::zeros((2, 4, 4)));
    assert!(matches!(rrmse_phase(&t, &t, 1), Err(Error::ZeroReference(1))));
}

#[test]
fn shape_mismatch_is_reported() {
    let a = phase_cube(&Array3::ones((2, 4, 4)));
    let b = phase_cube(&Array3::ones((3, 4, 4)));
    assert!(matches!(rrmse_phase(&a, &b, 0), Err(Error::DimensionMismatch(_))));
    assert!(matches!(snr_db(&a, &b), Err(Error::DimensionMismatch(_))));
}

#[test]
fn snr_reference_points() {
    let t = phase_cube(&random_phases(4, 1.0));
    assert_eq!(snr_db(&t, &t).unwrap(), f64::INFINITY);
    // noise of the same energy as the signal
    let doubled = t.map(|z| z * 2.0).unwrap();
    assert!(snr_db(&doubled, &t).unwrap().abs() < 1e-12);
}

#[test]
fn snr_at_highest_noise_level() {
    let model = DispersionModel::BK7;
    let spec = PhaseObjectSpec::build(ObjectKind::TwoPeak, 64, 64, &model, None).unwrap();
    let truth = generate_truth(&spec, &model, &uniform_grid(400.0, 798.0, 20)).unwrap();
    let noisy = add_noise(&truth, &NoiseSpec { sigma: 2.5, seed: 1 }).unwrap();
    let snr = snr_db(&noisy, &truth).unwrap();
    assert!((snr + 8.0).abs() <= 1.0, "{snr}");
}

proptest! {
    #[test]
    fn phase_error_scales_linearly(seed in 0u64..1000, k in 0.1f64..1.5) {
        let p = random_phases(seed, 0.5) + 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let e = Array3::from_shape_simple_fn(p.dim(), || rng.random_range(-0.5..0.5));
        let truth = phase_cube(&p);
        let r1 = rrmse_phase(&phase_cube(&(&p + &(&e * k))), &truth, 0).unwrap();
        let r2 = rrmse_phase(&phase_cube(&(&p + &(&e * (2.0 * k)))), &truth, 0).unwrap();
        prop_assert!((r2 - 2.0 * r1).abs() < 1e-9 * r2.max(1.0));
    }

    #[test]
    fn wrapped_difference_stays_bounded(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let d = wrap_phase(wrap_phase(a) - wrap_phase(b));
        prop_assert!((-PI..PI).contains(&d));
    }
}

fn noiseless_interferometric() -> (ComplexCube, DispersionModel) {
    let model = DispersionModel::BK7;
    let spec = PhaseObjectSpec::build(ObjectKind::TwoPeak, 16, 16, &model, None).unwrap();
    (generate_truth(&spec, &model, &uniform_grid(400.0, 798.0, 12)).unwrap(), model)
}

#[test]
fn averaging_is_exact_without_noise() {
    let (truth, model) = noiseless_interferometric();
    for mode in [AverageMode::Global, AverageMode::Pairwise] {
        let out = baseline_average(&truth, Some(&model), mode).unwrap();
        for (a, b) in out.data().iter().zip(truth.data().iter()) {
            assert!((a.arg() - b.arg()).abs() < 1e-10);
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }
}

#[test]
fn averaging_needs_a_dispersion_model() {
    let (truth, _) = noiseless_interferometric();
    assert!(matches!(
        baseline_average(&truth, None, AverageMode::Global),
        Err(Error::DispersionRequired)
    ));
}

#[test]
fn pairwise_averaging_uses_neighbor_bands() {
    // phases that are not band-invariant in thickness: band 1 differs
    let model = DispersionModel::BK7;
    let wl = vec![500.0, 600.0, 700.0];
    let data = Array3::from_shape_fn((3, 2, 2), |(b, _, _)| Complex64::from_polar(1.0, [0.3, 0.9, 0.3][b]));
    let cube = ComplexCube::new(data, wl.clone()).unwrap();
    let h = |p: f64, l: f64| hscube::synth::thickness_for_phase(&model, p, l).unwrap();
    let phi = |t: f64, l: f64| hscube::synth::phase_for_thickness(&model, t, l).unwrap();
    let out = baseline_average(&cube, Some(&model), AverageMode::Pairwise).unwrap();
    let expect = [
        phi((h(0.3, 500.0) + h(0.9, 600.0)) / 2.0, 500.0),
        phi((h(0.9, 600.0) + h(0.3, 700.0)) / 2.0, 600.0),
        phi((h(0.9, 600.0) + h(0.3, 700.0)) / 2.0, 700.0),
    ];
    for b in 0..3 {
        assert!((out.get(0, 0, b).arg() - expect[b]).abs() < 1e-12);
    }
}

#[test]
fn separate_filtering_identity_and_nonnegative_amplitude() {
    let (truth, _) = noiseless_interferometric();
    let noisy = add_noise(&truth, &NoiseSpec { sigma: 0.2, seed: 3 }).unwrap();
    let out = baseline_separate(&noisy, &DenoiseConfig::default().with_sigma(0.0)).unwrap();
    for (a, b) in out.data().iter().zip(noisy.data().iter()) {
        assert!((a - b).norm() < 1e-10);
    }
    let out = baseline_separate(&noisy, &DenoiseConfig::default()).unwrap();
    assert_eq!(out.shape(), noisy.shape());
    assert!(out.data().iter().all(|z| z.norm().is_finite()));
}

#[test]
fn slice_filter_identity_at_zero_sigma() {
    let (truth, _) = noiseless_interferometric();
    let out = baseline_slice(&truth, &DenoiseConfig::default().with_sigma(0.0)).unwrap();
    assert!(out.data().iter().zip(truth.data().iter()).all(|(a, b)| (a - b).norm() < 1e-10));
}

fn small_manifest(methods: Vec<MethodEntry>) -> Manifest {
    Manifest {
        schema_version: 1,
        dispersion: DispersionModel::BK7,
        objects: vec![ObjectEntry {
            kind: ObjectKind::TwoPeak,
            rows: 16,
            cols: 16,
            bands: 6,
            lambda_min: 400.0,
            lambda_max: 798.0,
            max_phase_400: None,
            label: None,
        }],
        sigmas: vec![0.5],
        seeds: vec![1, 2],
        methods,
        output: None,
        timing: false,
    }
}

#[test]
fn empty_method_list_gives_empty_report() {
    let out = run_experiment(&small_manifest(vec![])).unwrap();
    assert!(out.reports.is_empty() && out.failures.is_empty());
    let mut buf = Vec::new();
    write_csv(&out.rows(), &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_HEADER.join(","));
}

#[test]
fn unsupported_schema_version() {
    let mut m = small_manifest(vec![]);
    m.schema_version = 7;
    assert!(matches!(run_experiment(&m), Err(Error::InvalidConfig(_))));
}

#[test]
fn failing_combination_does_not_stop_the_rest() {
    let mut window = MethodEntry::new(MethodKind::CcfWindow);
    window.windows = vec![2];
    let m = small_manifest(vec![window, MethodEntry::new(MethodKind::Noisy), MethodEntry::new(MethodKind::AverageGlobal)]);
    let out = run_experiment(&m).unwrap();
    assert_eq!(out.failures.len(), 2);
    assert!(out.failures[0].combination.contains("ccf-window"));
    assert_eq!(out.reports.len(), 4);
}

#[test]
fn report_rows_round_trip_through_csv() {
    let mut sliding = MethodEntry::new(MethodKind::CcfSliding);
    sliding.windows = vec![4];
    sliding.steps = vec![2];
    let mut window = MethodEntry::new(MethodKind::CcfWindow);
    window.windows = vec![3];
    let m = small_manifest(vec![MethodEntry::new(MethodKind::Noisy), sliding, window]);
    let out = run_experiment(&m).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let rows = out.rows();
    // per band plus one summary row per report
    assert_eq!(rows.len(), 2 * (7 + 7 + 4));
    let summary: Vec<_> = rows.iter().filter(|r| r.band_index == -1).collect();
    assert_eq!(summary.len(), 6);
    assert!(summary.iter().all(|r| r.wavelength_nm.is_none()));
    let w = rows.iter().find(|r| r.method == "ccf-window" && r.band_index >= 0).unwrap();
    assert_eq!(w.window, Some(3));
    assert!(w.p_selected.is_some());
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
}

#[test]
fn noise_free_rows_survive_csv() {
    let mut m = small_manifest(vec![MethodEntry::new(MethodKind::Noisy)]);
    m.sigmas = vec![0.0];
    m.seeds = vec![1];
    m.timing = true;
    let rows = run_experiment(&m).unwrap().rows();
    assert!(rows.iter().all(|r| r.snr_db == f64::INFINITY && r.rrmse_phase == 0.0 && r.seconds.is_some()));
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
}

#[test]
fn experiment_is_deterministic() {
    let mut ccf = MethodEntry::new(MethodKind::Ccf);
    ccf.denoise.search_radius = 4;
    let m = small_manifest(vec![ccf]);
    let a = run_experiment(&m).unwrap().rows();
    let b = run_experiment(&m).unwrap().rows();
    assert_eq!(a, b);
}

#[test]
fn manifest_parses_from_toml() {
    let m: Manifest = toml::from_str(
        r#"
schema_version = 1
sigmas = [1.3]

[[objects]]
kind = "two-peak"
bands = 8

[[methods]]
method = "ccf-sliding"
windows = [30, 50]
steps = [12]
denoise = { variant = "complex3d", stages = "threshold-only" }
"#,
    )
    .unwrap();
    assert_eq!(m.seeds, vec![1]);
    assert_eq!(m.objects[0].rows, 64);
    assert_eq!(m.methods[0].windows, vec![30, 50]);
    assert_eq!(m.methods[0].denoise.stages, hscube::cdbm3d::Stages::ThresholdOnly);
    assert!(m.timing);
}

#[test]
fn error_grows_with_window_step() {
    let mut sliding = MethodEntry::new(MethodKind::CcfSliding);
    sliding.windows = vec![24];
    sliding.steps = vec![1, 6, 12, 24, 48];
    sliding.denoise.search_radius = 8;
    sliding.denoise.max_group_size = 16;
    let mut m = small_manifest(vec![sliding]);
    m.objects[0].rows = 32;
    m.objects[0].cols = 32;
    m.objects[0].bands = 80;
    m.sigmas = vec![1.3];
    let rows = run_experiment(&m).unwrap().rows();
    let curve: Vec<f64> = [1, 6, 12, 24, 48]
        .iter()
        .map(|&s| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.band_index == -1 && r.step == Some(s))
                .map(|r| r.rrmse_phase)
                .collect();
            mean(&v)
        })
        .collect();
    for w in curve.windows(2) {
        assert!(w[1] >= 0.95 * w[0], "{curve:?}");
    }
}

#[test]
fn no_method_hurts_the_easy_object() {
    let model = DispersionModel::BK7;
    let spec = PhaseObjectSpec::build(ObjectKind::TwoPeak, 40, 40, &model, None).unwrap();
    let truth = generate_truth(&spec, &model, &uniform_grid(400.0, 798.0, 20)).unwrap();
    let noisy = add_noise(&truth, &NoiseSpec { sigma: 1.3, seed: 4 }).unwrap();
    let before = mean_rrmse_phase(&noisy, &truth).unwrap();
    let cfg = DenoiseConfig::default();
    let window = hscube::ccf::WindowSpec { center: 0, width: 10, step: 4 };
    for method in [
        Method::Ccf,
        Method::CcfSliding(window),
        Method::Cdbm3dSlice,
        Method::Separate,
        Method::Average(AverageMode::Global),
        Method::Average(AverageMode::Pairwise),
    ] {
        let out = run_method(&method, &noisy, &cfg, Some(&model)).unwrap();
        let after = mean_rrmse_phase(&out.cube, &truth).unwrap();
        assert!(after <= before, "{}: {after} vs noisy {before}", method.name());
    }
}

#[test]
fn smooth_object_needs_few_components() {
    let model = DispersionModel::BK7;
    let spec = PhaseObjectSpec::build(ObjectKind::TwoPeak, 64, 64, &model, None).unwrap();
    let truth = generate_truth(&spec, &model, &uniform_grid(400.0, 798.0, 60)).unwrap();
    let noisy = add_noise(&truth, &NoiseSpec { sigma: 1.3, seed: 1 }).unwrap();
    let p = hscube::subspace::identify_subspace(&hscube::reshape_to_matrix(&noisy)).unwrap().p;
    assert!(p <= 60 / 4, "p = {p}");
}

#[test]
fn separate_filtering_trails_complex_filtering() {
    let model = DispersionModel::BK7;
    let spec = PhaseObjectSpec::build(ObjectKind::TwoPeak, 64, 64, &model, None).unwrap();
    let truth = generate_truth(&spec, &model, &[598.0]).unwrap();
    let noisy = add_noise(&truth, &NoiseSpec { sigma: 1.3, seed: 6 }).unwrap();
    let cfg = DenoiseConfig::default();
    let sep = rrmse_phase(&baseline_separate(&noisy, &cfg).unwrap(), &truth, 0).unwrap();
    let slice = rrmse_phase(&baseline_slice(&noisy, &cfg).unwrap(), &truth, 0).unwrap();
    assert!(sep > slice, "separate {sep} vs slice {slice}");
}
