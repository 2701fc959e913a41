//! Bit/waveform transceivers for SC-QPSK, OFDM/QAM and FBMC/OQAM.
//!
//! All three schemes share one sample clock, `N * nu0 * oversampling`, and
//! carry the same bit rate `N * nu0 * log2(M)`. Waveforms are normalized so
//! that every complex QAM symbol contributes unit *sample* energy.

mod fbmc;
mod ofdm;
mod qam;
mod single_carrier;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::waveforms::{rect_prototype, srrc_prototype, Prototype};

pub use fbmc::{
    fbmc_analysis, fbmc_demodulate, fbmc_modulate, oqam_destagger, oqam_stagger, take_real,
};
pub use ofdm::{ofdm_demodulate, ofdm_modulate};
pub use qam::{pam_decide, qam_demap, qam_map, QamOrder};
pub use single_carrier::{sc_demodulate, sc_matched_outputs, sc_modulate};


/// Complex baseband waveform.
///
/// `epoch_offset` counts guard samples that channel stages prepend (and
/// append, the padding is symmetric) around the transmitted frame.
/// Receivers read the frame through [`SampledSignal::payload`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    epoch_offset: usize,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        Self::with_epoch(samples, sample_rate, 0)
    }

    pub fn with_epoch(
        samples: Vec<Complex64>,
        sample_rate: f64,
        epoch_offset: usize,
    ) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid(format!("sample rate {sample_rate} must be positive")));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(invalid("signal contains non-finite samples"));
        }
        if 2 * epoch_offset > samples.len() {
            return Err(invalid("epoch offset exceeds signal length"));
        }
        Ok(SampledSignal {
            samples,
            sample_rate,
            epoch_offset,
        })
    }

    /// Internal constructor for producers whose output is finite by construction.
    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate: f64, epoch_offset: usize) -> Self {
        debug_assert!(sample_rate > 0.0);
        SampledSignal {
            samples,
            sample_rate,
            epoch_offset,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn epoch_offset(&self) -> usize {
        self.epoch_offset
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples of the transmitted frame with channel guard padding removed.
    pub fn payload(&self) -> &[Complex64] {
        &self.samples[self.epoch_offset..self.samples.len() - self.epoch_offset]
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }
}

/// `N x K` matrix of modulation symbols, stored slot by slot.
///
/// Staggered grids hold real OQAM half-symbols (imaginary parts are zero)
/// and have twice the slots of the QAM grid they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    values: Vec<Complex64>,
    n_subcarriers: usize,
    n_slots: usize,
    staggered: bool,
}

impl SymbolGrid {
    pub fn new(n_subcarriers: usize, n_slots: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != n_subcarriers * n_slots {
            return Err(invalid(format!(
                "{} values do not fill a {n_subcarriers}x{n_slots} grid",
                values.len()
            )));
        }
        Ok(SymbolGrid {
            values,
            n_subcarriers,
            n_slots,
            staggered: false,
        })
    }

    pub fn new_staggered(n_subcarriers: usize, n_slots: usize, values: Vec<f64>) -> Result<Self> {
        let mut grid = Self::new(
            n_subcarriers,
            n_slots,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )?;
        grid.staggered = true;
        Ok(grid)
    }

    pub fn zeros(n_subcarriers: usize, n_slots: usize, staggered: bool) -> Self {
        SymbolGrid {
            values: vec![Complex64::default(); n_subcarriers * n_slots],
            n_subcarriers,
            n_slots,
            staggered,
        }
    }

    /// Fills a grid slot by slot from a symbol stream.
    pub fn from_symbols(n_subcarriers: usize, symbols: Vec<Complex64>) -> Result<Self> {
        if n_subcarriers == 0 || symbols.len() % n_subcarriers != 0 {
            return Err(invalid(format!(
                "{} symbols do not fill whole slots of {n_subcarriers}",
                symbols.len()
            )));
        }
        let slots = symbols.len() / n_subcarriers;
        Self::new(n_subcarriers, slots, symbols)
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn is_staggered(&self) -> bool {
        self.staggered
    }

    pub fn get(&self, n: usize, k: usize) -> Complex64 {
        self.values[k * self.n_subcarriers + n]
    }

    pub fn set(&mut self, n: usize, k: usize, v: Complex64) {
        debug_assert!(!self.staggered || v.im == 0.0);
        self.values[k * self.n_subcarriers + n] = v;
    }

    /// Symbols of slot `k`, subcarrier-ordered.
    pub fn slot(&self, k: usize) -> &[Complex64] {
        &self.values[k * self.n_subcarriers..(k + 1) * self.n_subcarriers]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &SymbolGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Output of a demodulator: the recovered grid plus the subcarriers that a
/// zero-forcing equalizer could not invert.
#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    pub grid: SymbolGrid,
    pub erased: Vec<bool>,
}

impl Demodulated {
    pub fn erased_count(&self) -> usize {
        self.erased.iter().filter(|e| **e).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    ScQpsk,
    OfdmQam,
    FbmcOqam,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::ScQpsk, Scheme::OfdmQam, Scheme::FbmcOqam];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ScQpsk => "sc_qpsk",
            Scheme::OfdmQam => "ofdm_qam",
            Scheme::FbmcOqam => "fbmc_oqam",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sc_qpsk" => Ok(Scheme::ScQpsk),
            "ofdm_qam" => Ok(Scheme::OfdmQam),
            "fbmc_oqam" => Ok(Scheme::FbmcOqam),
            other => Err(invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Where the `N` subcarriers sit in the baseband spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// Row `n` at `n * nu0`, `n = 0..N`.
    OneSided,
    /// Row `n` at `(n - N/2) * nu0`, straddling the carrier.
    Centered,
}

impl Placement {
    pub fn name(self) -> &'static str {
        match self {
            Placement::OneSided => "one_sided",
            Placement::Centered => "centered",
        }
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_sided" => Ok(Placement::OneSided),
            "centered" => Ok(Placement::Centered),
            other => Err(invalid(format!("unknown placement `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub n_subcarriers: usize,
    /// Subcarrier spacing `nu0` in Hz.
    pub subcarrier_spacing: f64,
    pub qam_order: QamOrder,
    /// Cyclic prefix length in samples, OFDM only.
    pub cp_samples: usize,
    /// Pulse shape. Its `samples_per_symbol` equals the scheme's samples per
    /// modulation period (`N * oversampling` for the multicarrier schemes,
    /// `oversampling` for SC-QPSK).
    pub prototype: Prototype,
    pub oversampling: usize,
    pub placement: Placement,
}

pub const DEFAULT_OVERSAMPLING: usize = 2;
pub const DEFAULT_ROLLOFF: f64 = 1.0;
pub const DEFAULT_SPAN: usize = 4;

impl SchemeConfig {
    /// Defaults: QPSK, no CP, oversampling 2, centered placement, SRRC
    /// rolloff 1 spanning four periods (rectangular for OFDM).
    pub fn new(scheme: Scheme, n_subcarriers: usize, subcarrier_spacing: f64) -> Result<Self> {
        Self::build(
            scheme,
            n_subcarriers,
            subcarrier_spacing,
            DEFAULT_OVERSAMPLING,
            DEFAULT_ROLLOFF,
            DEFAULT_SPAN,
        )
    }

    pub fn build(
        scheme: Scheme,
        n_subcarriers: usize,
        subcarrier_spacing: f64,
        oversampling: usize,
        rolloff: f64,
        span_symbols: usize,
    ) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(invalid("n_subcarriers must be at least 1"));
        }
        if oversampling == 0 {
            return Err(invalid("oversampling must be at least 1"));
        }
        if !(subcarrier_spacing > 0.0 && subcarrier_spacing.is_finite()) {
            return Err(invalid("subcarrier spacing must be positive"));
        }
        let period = match scheme {
            Scheme::ScQpsk => oversampling,
            _ => n_subcarriers * oversampling,
        };
        let prototype = match scheme {
            Scheme::OfdmQam => rect_prototype(period)?,
            _ => srrc_prototype(rolloff, span_symbols, period)?,
        };
        let cfg = SchemeConfig {
            scheme,
            n_subcarriers,
            subcarrier_spacing,
            qam_order: QamOrder::Qpsk,
            cp_samples: 0,
            prototype,
            oversampling,
            placement: Placement::Centered,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_qam_order(mut self, order: QamOrder) -> Result<Self> {
        self.qam_order = order;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cp(mut self, cp_samples: usize) -> Result<Self> {
        self.cp_samples = cp_samples;
        self.validate()?;
        Ok(self)
    }

    /// Replaces the pulse shape; its samples per symbol must match the scheme.
    pub fn with_prototype(mut self, prototype: Prototype) -> Result<Self> {
        self.prototype = prototype;
        self.validate()?;
        Ok(self)
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.scheme != Scheme::OfdmQam && self.cp_samples != 0 {
            return Err(invalid("cyclic prefix is only defined for OFDM/QAM"));
        }
        if self.scheme == Scheme::ScQpsk && self.qam_order != QamOrder::Qpsk {
            return Err(invalid("SC-QPSK requires qam_order 4"));
        }
        if self.prototype.samples_per_symbol() != self.samples_per_period() {
            return Err(invalid(format!(
                "prototype has {} samples per symbol, scheme needs {}",
                self.prototype.samples_per_symbol(),
                self.samples_per_period()
            )));
        }
        if self.scheme == Scheme::FbmcOqam && self.samples_per_period() % 2 != 0 {
            return Err(invalid("FBMC/OQAM needs an even number of samples per symbol"));
        }
        Ok(())
    }

    /// Samples per OFDM/FBMC symbol duration `T`, or per SC symbol.
    pub fn samples_per_period(&self) -> usize {
        match self.scheme {
            Scheme::ScQpsk => self.oversampling,
            _ => self.n_subcarriers * self.oversampling,
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing * self.oversampling as f64
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.qam_order.bits_per_symbol()
    }

    /// `R_b = N * nu0 * log2(M)`.
    pub fn bit_rate(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing * self.bits_per_symbol() as f64
    }

    /// `T_b = 1 / R_b`.
    pub fn bit_interval(&self) -> f64 {
        1.0 / self.bit_rate()
    }

    /// Multicarrier symbol duration `T = 1 / nu0`.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Samples per complex QAM symbol on the shared clock.
    pub fn samples_per_qam_symbol(&self) -> usize {
        self.oversampling
    }

    /// Signed frequency index of grid row `n`, in units of `nu0`.
    pub fn frequency_index(&self, n: usize) -> i64 {
        match self.placement {
            Placement::OneSided => n as i64,
            Placement::Centered => n as i64 - (self.n_subcarriers / 2) as i64,
        }
    }

    /// Baseband frequency of grid row `n`, in Hz.
    pub fn subcarrier_frequency(&self, n: usize) -> f64 {
        self.frequency_index(n) as f64 * self.subcarrier_spacing
    }

    /// DFT bin of row `n` in a transform of `samples_per_period` points.
    pub(crate) fn bin(&self, n: usize) -> usize {
        let m = self.samples_per_period() as i64;
        self.frequency_index(n).rem_euclid(m) as usize
    }

    /// Frequencies the equalizer and the channel model evaluate per row.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        (0..self.n_subcarriers).map(|n| self.subcarrier_frequency(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_rates_follow_fields() {
        for scheme in Scheme::ALL {
            let cfg = SchemeConfig::new(scheme, 128, 1e8).unwrap();
            assert!((cfg.bit_rate() - 25.6e9).abs() < 1.0);
            assert!((cfg.sample_rate() - 25.6e9).abs() < 1.0);
        }
    }

    #[test]
    fn cp_is_ofdm_only() {
        let fbmc = SchemeConfig::new(Scheme::FbmcOqam, 8, 1e8).unwrap();
        assert!(fbmc.with_cp(4).is_err());
        let ofdm = SchemeConfig::new(Scheme::OfdmQam, 8, 1e8).unwrap();
        assert_eq!(ofdm.with_cp(4).unwrap().cp_samples, 4);
    }

    #[test]
    fn sc_requires_qpsk() {
        let sc = SchemeConfig::new(Scheme::ScQpsk, 8, 1e8).unwrap();
        assert!(sc.with_qam_order(QamOrder::Qam16).is_err());
    }

    #[test]
    fn centered_bins_wrap() {
        let cfg = SchemeConfig::new(Scheme::OfdmQam, 8, 1e8)
            .unwrap()
            .with_placement(Placement::Centered);
        assert_eq!(cfg.frequency_index(0), -4);
        assert_eq!(cfg.bin(0), 12);
        assert_eq!(cfg.bin(4), 0);
    }

    #[test]
    fn signal_rejects_non_finite() {
        assert!(SampledSignal::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0).is_err());
        assert!(SampledSignal::new(vec![], 0.0).is_err());
    }

    #[test]
    fn grid_shape_checked() {
        assert!(SymbolGrid::new(2, 2, vec![Complex64::default(); 3]).is_err());
    }
}
