use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported LFSR order {0} (supported: 2..=24)")]
    UnsupportedOrder(u32),
    #[error("LFSR seed must be a nonzero {order}-bit state")]
    InvalidSeed { order: u32 },
    #[error("feedback taps give period {period}, a maximal-length sequence of this order has period {expected}")]
    NonMaximalTaps { period: u64, expected: u64 },
    #[error("chip sequence has order {chips}, probe configuration has order {config}")]
    OrderMismatch { chips: u32, config: u32 },
    #[error("sample interval mismatch: {left} s vs {right} s")]
    DtMismatch { left: f64, right: f64 },
    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("waveform of {len} samples is not a whole number of {period}-sample periods")]
    PartialPeriod { len: usize, period: usize },
    #[error("notch frequency {f0} Hz is at or above the Nyquist frequency {nyquist} Hz")]
    AboveNyquist { f0: f64, nyquist: f64 },
    #[error("probe response is identically zero; SNR is infinite")]
    InfiniteSnr,
    #[error("matrix dimensions are inconsistent: {0}")]
    Dimension(String),
    #[error("plant is not asymptotically stable (max eigenvalue real part {max_real})")]
    Unstable { max_real: f64 },
    #[error("Hankel window m = {m} needs {needed} samples, only {available} available")]
    HankelWindow { m: usize, needed: usize, available: usize },
    #[error("Hankel matrix is zero")]
    ZeroHankel,
    #[error("requested order {r} exceeds numerical rank (sigma_{r} / sigma_1 = {ratio:e})")]
    RankDeficient { r: usize, ratio: f64 },
    #[error("{0}")]
    LogBranch(String),
    #[error("model structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("degenerate equivalent circuit: {0}")]
    DegenerateCircuit(String),
    #[error("fit is not realizable as the equivalent circuit: {0}")]
    NotRealizable(String),
    #[error("ill-conditioned phasor regressor (condition number {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("ladder has no sections")]
    EmptyLadder,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
