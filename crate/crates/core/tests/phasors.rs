use std::f64::consts::PI;

use num_complex::Complex64;
use pcp_core::circuit::CircuitParams;
use pcp_core::qsss::{estimate_phasor, source_phasor, wrap_angle, Phasor};
use pcp_core::{Unit, Waveform};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const F: f64 = 60.0;
const DT: f64 = 1e-4;

fn sinusoid(m: f64, phi: f64, n: usize) -> Waveform {
    let w = 2.0 * PI * F;
    Waveform::new(
        DT,
        0.0,
        (0..n).map(|k| m * (w * k as f64 * DT + phi).sin()).collect(),
        Unit::Volt,
    )
    .unwrap()
}

fn angle_error(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Smallest window spanning a quarter cycle.
const MIN_WINDOW: usize = 43;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn exact_on_the_model_class(m in 0.01f64..1e4, phi in -PI..PI, start in 0usize..2000, window in MIN_WINDOW..1000) {
        let x = sinusoid(m, phi, 3000);
        let p = estimate_phasor(&x, F, start as f64 * DT, window).unwrap();
        prop_assert!((p.magnitude - m).abs() <= 1e-9 * m);
        prop_assert!(angle_error(p.angle, phi) <= 1e-9);
    }

    #[test]
    fn window_position_does_not_matter(m in 0.1f64..1e3, phi in -PI..PI, a in 0usize..1500, b in 0usize..1500, window in MIN_WINDOW..500) {
        let x = sinusoid(m, phi, 2000);
        let pa = estimate_phasor(&x, F, a as f64 * DT, window).unwrap();
        let pb = estimate_phasor(&x, F, b as f64 * DT, window).unwrap();
        prop_assert!((pa.magnitude - pb.magnitude).abs() <= 1e-9 * m);
        prop_assert!(angle_error(pa.angle, pb.angle) <= 1e-9);
    }

    #[test]
    fn phasors_add(m1 in 0.1f64..1e3, p1 in -PI..PI, m2 in 0.1f64..1e3, p2 in -PI..PI, window in MIN_WINDOW..500) {
        let x1 = sinusoid(m1, p1, 600);
        let x2 = sinusoid(m2, p2, 600);
        let sum = x1.try_add(&x2).unwrap();
        let e1 = estimate_phasor(&x1, F, 0.0, window).unwrap().to_complex();
        let e2 = estimate_phasor(&x2, F, 0.0, window).unwrap().to_complex();
        let es = estimate_phasor(&sum, F, 0.0, window).unwrap().to_complex();
        prop_assert!((es - e1 - e2).norm() <= 1e-9 * (m1 + m2));
    }

    #[test]
    fn source_phasor_inverts_nodal_equations(
        l in 1e-3f64..1e-1, r1 in -20.0f64..20.0, r2 in 5.0f64..500.0, c in 1e-6f64..1e-4,
        vm in 100.0f64..5000.0, va in -PI..PI, sm in 0.1f64..100.0, sa in -PI..PI,
    ) {
        let p = CircuitParams::new(l, r1, r2, c);
        let w = 2.0 * PI * F;
        let v = Complex64::from_polar(vm, va);
        let is = Complex64::from_polar(sm, sa);
        let z1 = Complex64::new(r1, w * l);
        let y2 = Complex64::new(1.0 / r2, w * c);
        let i = (v * y2 - is) / (1.0 + z1 * y2);
        let got = source_phasor(&Phasor::from_complex(v, 0.0, F), &Phasor::from_complex(i, 0.0, F), &p).unwrap();
        prop_assert!((got.to_complex() - is).norm() <= 1e-6 * sm);
    }
}

#[test]
fn noisy_single_cycle_magnitude_error() {
    let window = (1.0 / (F * DT)).round() as usize;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut within = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..window)
            .map(|k| 100.0 * (2.0 * PI * F * k as f64 * DT + 0.7).sin() + normal.sample(&mut rng))
            .collect();
        let x = Waveform::new(DT, 0.0, samples, Unit::Volt).unwrap();
        let p = estimate_phasor(&x, F, 0.0, window).unwrap();
        if (p.magnitude - 100.0).abs() < 0.5 {
            within += 1;
        }
    }
    assert!(within >= 990, "{within} of 1000 trials within 0.5");
}
