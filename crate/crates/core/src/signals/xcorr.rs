//! Circular correlation against the probe reference, plus the two circulant
//! corrections applied to its output.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result, Waveform};

/// Correlates the last full period of `y` with one period of the reference `s`:
///
/// `z[k] = dt * Σ_i y[i] * s[(i - k) mod M]`, `k = 0..M`.
///
/// With `y = h * p` in periodic steady state, `z[k]` approximates the response
/// of `h` at lag `k * dt`. The result is indexed by lag (`t_start = 0`).
pub fn circular_xcorr(y: &Waveform, s: &Waveform) -> Result<Waveform> {
    y.check_same_dt(s)?;
    let m = s.len();
    if !y.len().is_multiple_of(m) {
        return Err(Error::PartialPeriod {
            len: y.len(),
            period: m,
        });
    }
    let window = &y.samples()[y.len() - m..];
    let reference = s.samples();
    let dt = y.dt();
    let z = (0..m)
        .map(|k| {
            // s[(i - k) mod m] for i = 0..m is reference rotated right by k.
            let split = m - k;
            let head = window[..k].iter().zip(&reference[split..]);
            let tail = window[k..].iter().zip(&reference[..split]);
            head.chain(tail).map(|(a, b)| a * b).sum::<f64>() * dt
        })
        .collect();
    Waveform::new(dt, 0.0, z, y.unit().correlated_with(s.unit()))
}

/// Removes the off-peak bias of a chip-rate MLS correlation.
///
/// An `N`-chip sequence autocorrelates to `N` at lag 0 and `-1` elsewhere, so
/// chip-rate correlation returns `z = (1 + 1/N) g - Σg / N` instead of `g`.
/// That circulant map inverts exactly to `g = N (z + Σz) / (N + 1)`.
pub fn mls_unbias(z: &Waveform) -> Waveform {
    let n = z.len() as f64;
    let total: f64 = z.samples().iter().sum();
    let scale = n / (n + 1.0);
    let samples = z.samples().iter().map(|v| (v + total) * scale).collect();
    Waveform::new(z.dt(), z.t_start(), samples, z.unit().clone()).expect("same grid as input")
}

/// Undoes a known LTI filter that acted on a periodic signal before
/// correlation: circular deconvolution by the filter's frequency response
/// sampled at the `M` DFT bins of the period.
///
/// `response` maps a normalized frequency in rad/sample to the filter gain.
pub fn deembed_filter(z: &Waveform, response: impl Fn(f64) -> Complex64) -> Result<Waveform> {
    let m = z.len();
    let twiddle: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / m as f64))
        .collect();
    let x = z.samples();

    let spectrum: Vec<Complex64> = (0..m)
        .map(|k| {
            let acc = x
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (n, &v)| acc + twiddle[(k * n) % m] * v);
            let gain = response(2.0 * PI * k as f64 / m as f64);
            if gain.norm() < 1e-12 {
                return Err(Error::Numerical(alloc::format!(
                    "filter response vanishes at DFT bin {k}; cannot de-embed"
                )));
            }
            Ok(acc / gain)
        })
        .collect::<Result<_>>()?;

    let samples = (0..m)
        .map(|n| {
            let acc = spectrum
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, v)| {
                    acc + v * twiddle[(k * n) % m].conj()
                });
            acc.re / m as f64
        })
        .collect();
    Waveform::new(z.dt(), z.t_start(), samples, z.unit().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{generate_mls, reference_signal, synthesize_prbpt, ProbeConfig};
    use crate::Unit;
    use alloc::vec;

    fn probe_pair(order: u32, q: usize) -> (Waveform, Waveform) {
        let chips = generate_mls(order, None, None).unwrap();
        let mut cfg = ProbeConfig::new(order, 1e-3, 7.0);
        cfg.oversampling = q;
        cfg.periods = 2;
        (
            synthesize_prbpt(&chips, &cfg).unwrap(),
            reference_signal(&chips, &cfg).unwrap(),
        )
    }

    #[test]
    fn probe_compresses_to_unit_peak() {
        let (p, s) = probe_pair(4, 1);
        let z = circular_xcorr(&p, &s).unwrap();
        assert!((z.samples()[0] - 1.0).abs() < 1e-12);
        for v in &z.samples()[1..] {
            assert!((v + 1.0 / 15.0).abs() < 1e-12);
        }
        assert_eq!(*z.unit(), Unit::Dimensionless);
    }

    #[test]
    fn oversampled_off_peak_lags_at_chip_multiples() {
        let q = 3;
        let (p, s) = probe_pair(4, q);
        let z = circular_xcorr(&p, &s).unwrap();
        assert!((z.samples()[0] - 1.0).abs() < 1e-12);
        for chip in 1..15 {
            assert!((z.samples()[chip * q] + 1.0 / 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delayed_copy_peaks_at_its_delay() {
        let (p, s) = probe_pair(5, 1);
        let mut delayed = p.samples().to_vec();
        delayed.rotate_right(4);
        let y = Waveform::new(p.dt(), 0.0, delayed, Unit::Volt).unwrap();
        let z = circular_xcorr(&y, &s).unwrap();
        let peak = (0..z.len())
            .max_by(|&a, &b| z.samples()[a].total_cmp(&z.samples()[b]))
            .unwrap();
        assert_eq!(peak, 4);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let (p, s) = probe_pair(4, 2);
        let zero = Waveform::new(p.dt(), 0.0, vec![0.0; p.len()], Unit::Ampere).unwrap();
        assert!(circular_xcorr(&zero, &s).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn partial_periods_are_rejected() {
        let (p, s) = probe_pair(4, 1);
        let short = p.slice(0, p.len() - 1).unwrap();
        assert!(matches!(circular_xcorr(&short, &s), Err(Error::PartialPeriod { .. })));
        let other_dt = Waveform::new(2e-3, 0.0, vec![0.0; 15], Unit::Volt).unwrap();
        assert!(matches!(circular_xcorr(&other_dt, &s), Err(Error::DtMismatch { .. })));
    }

    #[test]
    fn unbias_recovers_exact_circular_response() {
        let (p, s) = probe_pair(6, 1);
        let n = 63;
        let g: Vec<f64> = (0..n).map(|k| 0.8f64.powi(k as i32) * (0.5 * k as f64).cos()).collect();
        // Periodic steady-state response to the probe: circular convolution.
        let period = &p.samples()[..n];
        let y: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| g[j] * period[(i + n - j) % n]).sum::<f64>())
            .collect();
        let y = Waveform::new(p.dt(), 0.0, y, Unit::Ampere).unwrap();
        let z = mls_unbias(&circular_xcorr(&y, &s).unwrap());
        for (a, b) in z.samples().iter().zip(&g) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn deembed_inverts_circular_filtering() {
        let m = 31;
        let x: Vec<f64> = (0..m).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
        // Two-tap FIR h = [1, -0.5] applied circularly.
        let y: Vec<f64> = (0..m).map(|n| x[n] - 0.5 * x[(n + m - 1) % m]).collect();
        let y = Waveform::new(1.0, 0.0, y, Unit::Dimensionless).unwrap();
        let back = deembed_filter(&y, |w| Complex64::new(1.0, 0.0) - Complex64::from_polar(0.5, -w)).unwrap();
        for (a, b) in back.samples().iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
