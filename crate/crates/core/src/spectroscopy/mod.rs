//! Two-kick delay spectroscopy: the ground-state population after a pair of
//! kicks, recorded as a function of their delay, oscillates at the
//! transition frequencies `z_i - z_1` of the levels the first kick populated.

mod retrieve;
mod scan;
mod spectrum;

pub use retrieve::{retrieve_amplitudes, RetrievedAmplitude, Retrieval, DEFAULT_MAX_CONDITION};
pub use scan::{
    first_order_amplitudes, impulsive_scan_analytic, perturbative_scan, scan_delay, DelayGrid, DelayScan,
    KickShape, ScanConfig, SpinMode,
};
pub use spectrum::{find_peaks_and_match, spectrum, LineMatch, Peak, PeakReport, Spectrum, Window, DEFAULT_FLOOR, MIN_SAMPLES};
