//! Maximal-length sequences from a Fibonacci linear-feedback shift register.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MIN_ORDER: u32 = 2;
pub const MAX_ORDER: u32 = 24;

/// Feedback taps (1-based stage numbers, output stage first) of a primitive
/// polynomial for each supported register length.
const DEFAULT_TAPS: [&[u32]; 23] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 6, 2, 1],
    &[20, 17],
    &[21, 19],
    &[22, 21],
    &[23, 18],
    &[24, 23, 22, 17],
];

/// Built-in taps for `order`, if supported.
pub fn default_taps(order: u32) -> Option<&'static [u32]> {
    if (MIN_ORDER..=MAX_ORDER).contains(&order) {
        Some(DEFAULT_TAPS[(order - MIN_ORDER) as usize])
    } else {
        None
    }
}

/// One period of a ±1 maximal-length sequence together with the register
/// settings that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChipSequence {
    pub order: u32,
    pub taps: Vec<u32>,
    pub seed: u32,
    pub chips: Vec<i8>,
}

impl ChipSequence {
    /// Period in chips, `2^order - 1`.
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.chips.iter().map(|&c| f64::from(c))
    }
}

/// Runs a Fibonacci LFSR of `order` stages for one full period. Register bit
/// `b` of the output stage becomes chip `1 - 2b`.
///
/// `taps` defaults to the built-in primitive polynomial, `seed` to the all-ones
/// register. Taps that do not reach the full period `2^order - 1` are rejected.
pub fn generate_mls(order: u32, taps: Option<&[u32]>, seed: Option<u32>) -> Result<ChipSequence> {
    let default = default_taps(order).ok_or(Error::UnsupportedOrder(order))?;
    let taps = taps.unwrap_or(default);
    let full: u32 = (1u32 << order) - 1;
    let seed = seed.unwrap_or(full);
    if seed == 0 || seed > full {
        return Err(Error::InvalidSeed { order });
    }
    if taps.is_empty() || taps.iter().any(|&t| t == 0 || t > order) {
        return Err(Error::param(
            "taps",
            alloc::format!("tap positions must lie in 1..={order}"),
        ));
    }
    let mask = taps.iter().fold(0u32, |m, &t| m | (1 << (t - 1)));
    let expected = u64::from(full);
    let out_bit = order - 1;

    let mut state = seed;
    let mut chips = Vec::with_capacity(full as usize);
    for step in 1..=expected {
        let bit = (state >> out_bit) & 1;
        chips.push(1 - 2 * bit as i8);
        let feedback = (state & mask).count_ones() & 1;
        state = ((state << 1) | feedback) & full;
        if state == seed && step < expected {
            return Err(Error::NonMaximalTaps { period: step, expected });
        }
    }
    if state != seed {
        // A register without its last stage in the feedback is not invertible
        // and may never come back to the seed.
        return Err(Error::NonMaximalTaps { period: 0, expected });
    }

    let mut taps = taps.to_vec();
    taps.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ChipSequence {
        order,
        taps,
        seed,
        chips,
    })
}
