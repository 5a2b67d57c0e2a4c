use nisebath::bath::{autocorrelation_from_sd, sd_from_autocorrelation};
use nisebath::nise::{run_ensemble, GeneratedNoise, Nise, SystemHamiltonian, site_state};
use nisebath::noise::SiteNoiseGenerator;
use nisebath::observables::{absorption_spectrum, align_shift, apply_shift, AbsorptionSpectrum};
use nisebath::parallel::with_workers;
use nisebath::spectral::SpectralDensity;
use nisebath::units::nyquist;
use num_complex::Complex64;
use proptest::prelude::*;

fn band_limited_table(values: &[f64], top: f64) -> SpectralDensity {
    let n = values.len();
    let omega: Vec<f64> = (0..=n + 1).map(|k| top * k as f64 / (n + 1) as f64).collect();
    let mut j = vec![0.0];
    j.extend(values);
    j.push(0.0);
    SpectralDensity::tabulated(omega, j).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_duality(values in prop::collection::vec(0.0f64..50.0, 3..20), frac in 0.2f64..0.9, dt in 1.0f64..10.0, n in 64usize..600, t in 50.0f64..400.0) {
        let top = frac * nyquist(dt);
        let model = band_limited_table(&values, top);
        let c = autocorrelation_from_sd(&model, t, dt, n).unwrap();
        let curve = sd_from_autocorrelation(&c, t).unwrap();
        let peak = curve.omega.iter().map(|&w| model.eval(w).unwrap()).fold(0.0, f64::max).max(1e-300);
        for (&w, &v) in curve.omega.iter().zip(&curve.values) {
            let exact = model.eval(w).unwrap();
            prop_assert!((v - exact).abs() <= 1e-6 * peak, "{} vs {} at {}", v, exact, w);
        }
    }

    #[test]
    fn shift_covariance(k in -20i64..=20, width in 5.0f64..40.0, center in 400.0f64..600.0) {
        let omega: Vec<f64> = (0..512).map(|i| i as f64 * 2.0).collect();
        let intensity: Vec<f64> = omega.iter().map(|w| (-((w - center) / width).powi(2)).exp()).collect();
        let spec = AbsorptionSpectrum { omega, intensity, shift: 0.0, normalized: false, imaginary_residue: 0.0 };
        let moved = apply_shift(&spec, 2.0 * k as f64);
        let back = align_shift(&moved, &spec, (0.0, 1022.0), 60.0).unwrap();
        prop_assert_eq!(back, -2.0 * k as f64);
    }
}

#[test]
fn spectrum_of_real_symmetric_response_has_no_imaginary_part() {
    let sigma: Vec<Complex64> = (0..400)
        .map(|k| {
            let t = k as f64;
            Complex64::from_polar((-t / 80.0).exp(), -0.03 * t)
        })
        .collect();
    let s = absorption_spectrum(&sigma, 1.0, false).unwrap();
    assert!(s.imaginary_residue < 1e-10);
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let sd = nisebath::presets::three_peak_sd(3).unwrap();
    let h = SystemHamiltonian::from_parts(&[100.0, 0.0], &[(0, 1, 50.0)]).unwrap();
    let generator = SiteNoiseGenerator::new(&[sd.clone(), sd], 300.0, 201, 1.0).unwrap();
    let source = GeneratedNoise { generator: &generator, seed: 9, count: 70 };
    let psi0 = site_state(2, 0).unwrap();
    let run = |w| with_workers(w, || run_ensemble(&h, &source, &Nise, false, 200, &psi0).unwrap()).unwrap();
    let (one, many) = (run(1), run(8));
    assert_eq!(one.sums, many.sums);
}
