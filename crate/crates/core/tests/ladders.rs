//! Ladder plants checked against characteristic polynomials assembled from
//! the ladder's continued-fraction admittance and rooted independently.

use num_complex::Complex64;
use pcp_core::ident::build_hankel;
use pcp_core::plant::{build_ladder_plant, direct_impulse_response, LadderSection};
use proptest::prelude::*;

/// Polynomial coefficients, lowest degree first.
type Poly = Vec<f64>;

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

/// Denominator of the input admittance in the scaled variable `x = s / w`.
fn admittance_denominator(sections: &[LadderSection], w: f64) -> Poly {
    // Downstream admittance as num / den, starting from an open circuit.
    let (mut num, mut den): (Poly, Poly) = (vec![0.0], vec![1.0]);
    for s in sections.iter().rev() {
        if let Some(c) = s.shunt_c {
            // Shunt admittance (g + s C) / 1.
            let g = s.shunt_r.map_or(0.0, |r| 1.0 / r);
            let shunt = vec![g, c * w];
            num = add(&mul(&shunt, &den), &num);
        } else {
            // A section without shunt is shorted at its far end.
            num = vec![1.0];
            den = vec![0.0];
        }
        // Y_in = num / ((R + sL) num + den).
        let z = vec![s.series_r, s.series_l * w];
        let new_den = add(&mul(&z, &num), &den);
        den = new_den;
        let _ = &num;
    }
    den
}

fn eval(p: &Poly, x: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

/// Durand–Kerner simultaneous iteration.
fn roots(p: &Poly) -> Vec<Complex64> {
    let mut p = p.clone();
    while p.last().is_some_and(|c| c.abs() < 1e-300) {
        p.pop();
    }
    let lead = *p.last().unwrap();
    let monic: Poly = p.iter().map(|c| c / lead).collect();
    let n = monic.len() - 1;
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut d = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    d *= z[i] - z[j];
                }
            }
            let step = eval(&monic, z[i]) / d;
            z[i] -= step;
            delta = delta.max(step.norm() / z[i].norm().max(1e-300));
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

fn matches(eig: &[Complex64], oracle: &[Complex64], tol: f64) -> bool {
    eig.len() == oracle.len()
        && eig
            .iter()
            .all(|e| oracle.iter().any(|o| (e - o).norm() <= tol * o.norm().max(1.0)))
        && oracle
            .iter()
            .all(|o| eig.iter().any(|e| (e - o).norm() <= tol * o.norm().max(1.0)))
}

#[test]
fn two_identical_sections() {
    let s = LadderSection::with_shunt(0.3, 2e-3, 20e-6, Some(150.0));
    let sections = [s, s];
    let plant = build_ladder_plant(&sections).unwrap();
    let w = 1e4;
    let oracle: Vec<Complex64> = roots(&admittance_denominator(&sections, w))
        .iter()
        .map(|r| r * w)
        .collect();
    let eig = plant.eigenvalues();
    assert_eq!(eig.len(), 4);
    assert!(matches(&eig, &oracle, 1e-8), "{eig:?} vs {oracle:?}");
    // Conjugate pairs.
    for e in &eig {
        assert!(eig.iter().any(|f| (f - e.conj()).norm() <= 1e-9 * e.norm()));
    }
}

#[test]
fn three_sections_show_at_least_three_dominant_hankel_values() {
    let sections = [
        LadderSection::with_shunt(0.5, 3e-3, 40e-6, Some(80.0)),
        LadderSection::with_shunt(0.5, 1e-3, 10e-6, Some(120.0)),
        LadderSection::with_shunt(0.5, 0.5e-3, 5e-6, Some(200.0)),
    ];
    let plant = build_ladder_plant(&sections).unwrap();
    assert_eq!(plant.order(), 6);
    let h = direct_impulse_response(&plant, 1e-4, 402).unwrap();
    let z = pcp_core::Waveform::new(h.dt(), h.dt(), h.samples()[1..].to_vec(), h.unit().clone()).unwrap();
    let hankel = build_hankel(&z, 200).unwrap();
    let s = &hankel.singular_values;
    assert!(s[2] / s[0] > 1e-3, "{:?}", &s[..6]);
}

fn section() -> impl Strategy<Value = LadderSection> {
    (0.05f64..2.0, -3.5f64..-2.0, -5.5f64..-4.0, 1.3f64..2.7)
        .prop_map(|(r, l, c, rp)| LadderSection::with_shunt(r, 10f64.powf(l), 10f64.powf(c), Some(10f64.powf(rp))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_ladders_match_polynomial_roots(sections in prop::collection::vec(section(), 1..=3), tail in prop::option::of((0.1f64..5.0, 1e-3f64..1e-2))) {
        let mut sections = sections;
        if let Some((r, l)) = tail {
            sections.push(LadderSection::series(r, l));
        }
        let plant = build_ladder_plant(&sections).unwrap();
        let w = 1e4;
        let oracle: Vec<Complex64> = roots(&admittance_denominator(&sections, w)).iter().map(|r| r * w).collect();
        let eig = plant.eigenvalues();
        prop_assert!(matches(&eig, &oracle, 1e-6), "{:?} vs {:?}", eig, oracle);
    }
}
