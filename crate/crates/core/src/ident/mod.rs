//! Model identification from the probing output: Hankel matrices, order
//! selection, balanced realization, discrete-to-continuous conversion and the
//! second-order admittance fit.

mod hankel;
mod model;
mod reduce;
mod tf;

pub use hankel::{build_hankel, select_order, HankelPair, OrderSelection};
pub use model::{balanced_realization, to_continuous, Domain, RealizedModel};
pub use reduce::{balanced_truncation, to_second_order_tf, FitFlags, SecondOrderFit, S2_RESIDUE_TOL};
pub use tf::TransferFunction2;

/// Default Hankel window: enough samples to cover `memory_length`, capped so
/// that `2m + 1` samples fit in `available`.
pub fn default_window(memory_length: f64, dt: f64, available: usize) -> usize {
    // The small offset keeps 0.05 / 1e-4 from rounding up to 501.
    let wanted = (memory_length / dt - 1e-9).ceil().max(1.0) as usize;
    wanted.min(available.saturating_sub(1) / 2).max(1)
}
