use alloc::vec::Vec;

use crate::linalg::{self, Matrix};
use crate::{Error, Result, Waveform};

/// Hankel matrices of a Markov-parameter sequence and the SVD of the first.
///
/// With 1-based indexing, `H[i][j] = z_p(i + j - 1)` and
/// `H_shift[i][j] = z_p(i + j)`. Sample 0 of the source waveform is `z_p(1)`.
#[derive(Debug, Clone)]
pub struct HankelPair {
    pub h: Matrix,
    pub h_shift: Matrix,
    pub m: usize,
    /// `z_p(1..=2m+1)`.
    pub source: Vec<f64>,
    /// Sampling interval of the source sequence.
    pub dt: f64,
    /// Whether the sequence had decayed below 5% of its peak by sample `2m - 5`.
    pub settled: bool,
    /// Singular values of `H`, descending.
    pub singular_values: Vec<f64>,
    pub(crate) u: Matrix,
    pub(crate) v: Matrix,
}

/// Builds the `m × m` Hankel pair from Markov parameters `z_p(1), z_p(2), ...`.
pub fn build_hankel(z_p: &Waveform, m: usize) -> Result<HankelPair> {
    let needed = 2 * m + 1;
    if m == 0 || needed > z_p.len() {
        return Err(Error::HankelWindow {
            m,
            needed,
            available: z_p.len(),
        });
    }
    let x = &z_p.samples()[..needed];
    let h = Matrix::from_fn(m, m, |i, j| x[i + j]);
    let h_shift = Matrix::from_fn(m, m, |i, j| x[i + j + 1]);

    let peak = x.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    let tail_start = (2 * m).saturating_sub(5);
    let settled = x[tail_start..].iter().all(|v| v.abs() <= 0.05 * peak);
    if !settled {
        log::warn!(
            "Markov sequence has not settled by sample {}; consider a larger Hankel window",
            tail_start + 1
        );
    }

    // H[i][j] depends on i + j only, so H is symmetric.
    let svd = linalg::symmetric_svd(&h)?;
    Ok(HankelPair {
        h,
        h_shift,
        m,
        source: x.to_vec(),
        dt: z_p.dt(),
        settled,
        singular_values: svd.singular_values,
        u: svd.u,
        v: svd.v,
    })
}

/// Chosen model order and the spectrum it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    pub order: usize,
    pub spectrum: Vec<f64>,
    /// Fraction of the singular-value sum captured by `order` states.
    pub captured: f64,
    pub forced: bool,
}

/// Smallest `r` whose leading singular values hold `energy_threshold` of the
/// total, unless `force` pins the order.
pub fn select_order(hankel: &HankelPair, energy_threshold: f64, force: Option<usize>) -> Result<OrderSelection> {
    let spectrum = hankel.singular_values.clone();
    let total: f64 = spectrum.iter().sum();
    if total == 0.0 || spectrum[0] == 0.0 {
        return Err(Error::ZeroHankel);
    }
    if !(energy_threshold > 0.0 && energy_threshold <= 1.0) {
        return Err(Error::param("energy_threshold", "must lie in (0, 1]"));
    }
    let captured_by = |r: usize| spectrum[..r].iter().sum::<f64>() / total;
    let (order, forced) = match force {
        Some(r) if r == 0 || r > spectrum.len() => {
            return Err(Error::param(
                "forced order",
                alloc::format!("must lie in 1..={}", spectrum.len()),
            ))
        }
        Some(r) => (r, true),
        None => {
            let mut acc = 0.0;
            let r = spectrum
                .iter()
                .position(|s| {
                    acc += s;
                    acc >= energy_threshold * total * (1.0 - 1e-12)
                })
                .map_or(spectrum.len(), |i| i + 1);
            (r, false)
        }
    };
    Ok(OrderSelection {
        order,
        captured: captured_by(order),
        spectrum,
        forced,
    })
}
