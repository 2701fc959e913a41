//! Monte Carlo BER engine and measured PMD power penalties.
//!
//! Every frame draws its bits and noise from a ChaCha8 stream keyed by
//! `(master seed, point index, frame index, purpose)`. The DGD is not part
//! of the key, so curves for different DGDs (or splitting ratios) see the
//! same bits and the same noise, which keeps penalty differences smooth.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::modem::{
    fbmc_demodulate, fbmc_modulate, oqam_stagger, ofdm_demodulate, ofdm_modulate, pam_decide,
    qam_demap, qam_map, sc_demodulate, sc_modulate, SampledSignal, Scheme, SchemeConfig,
    SymbolGrid,
};
use crate::pmd_channel::{add_noise, apply_pmd_field, project_onto_launch, PmdState};

/// Frames simulated between stopping-rule checks.
const BATCH_FRAMES: usize = 8;
/// Roughly this many counted bits per frame, whatever the scheme.
const FRAME_BITS_TARGET: usize = 8192;

const PURPOSE_BITS: u64 = 0;
const PURPOSE_NOISE: u64 = 1;

pub const DEFAULT_MIN_ERRORS: u64 = 100;
pub const DEFAULT_MAX_BITS: u64 = 20_000_000;
pub const DEFAULT_TARGET_BER: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equalization {
    None,
    Zf,
}

impl Equalization {
    pub fn name(self) -> &'static str {
        match self {
            Equalization::None => "none",
            Equalization::Zf => "zf",
        }
    }
}

impl fmt::Display for Equalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Equalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Equalization::None),
            "zf" => Ok(Equalization::Zf),
            other => Err(invalid(format!("unknown equalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scheme_config: SchemeConfig,
    /// DGD in units of the bit interval `T_b`.
    pub dgd_norm: f64,
    pub gamma: f64,
    pub equalization: Equalization,
    pub seed: u64,
    pub min_errors: u64,
    pub max_bits: u64,
}

impl Scenario {
    pub fn new(scheme_config: SchemeConfig, dgd_norm: f64, gamma: f64) -> Self {
        Scenario {
            scheme_config,
            dgd_norm,
            gamma,
            equalization: Equalization::Zf,
            seed: 1,
            min_errors: DEFAULT_MIN_ERRORS,
            max_bits: DEFAULT_MAX_BITS,
        }
    }

    pub fn with_dgd_norm(&self, dgd_norm: f64) -> Self {
        Scenario {
            dgd_norm,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme_config.validate()?;
        if !(self.dgd_norm >= 0.0 && self.dgd_norm.is_finite()) {
            return Err(invalid(format!("dgd_norm {} must be >= 0", self.dgd_norm)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(invalid(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.min_errors == 0 {
            return Err(invalid("min_errors must be at least 1"));
        }
        if self.max_bits < self.frame_bits() as u64 {
            return Err(invalid(format!(
                "max_bits {} is less than one frame ({} bits)",
                self.max_bits,
                self.frame_bits()
            )));
        }
        Ok(())
    }

    pub fn pmd_state(&self) -> Result<PmdState> {
        PmdState::new(self.dgd_norm * self.scheme_config.bit_interval(), self.gamma)
    }

    /// Bits counted per frame (FBMC edge symbols excluded).
    pub fn frame_bits(&self) -> usize {
        let layout = FrameLayout::of(&self.scheme_config);
        layout.counted_bits
    }
}

/// Frame geometry per scheme.
#[derive(Debug, Clone, Copy)]
struct FrameLayout {
    /// SC: symbols. OFDM: slots. FBMC: complex slots before staggering.
    units: usize,
    /// FBMC half-slots skipped at each end when counting.
    edge: usize,
    counted_bits: usize,
}

impl FrameLayout {
    fn of(cfg: &SchemeConfig) -> FrameLayout {
        let bps = cfg.bits_per_symbol();
        let n = cfg.n_subcarriers;
        match cfg.scheme {
            Scheme::ScQpsk => {
                let units = FRAME_BITS_TARGET.div_ceil(bps).max(1);
                FrameLayout {
                    units,
                    edge: 0,
                    counted_bits: units * bps,
                }
            }
            Scheme::OfdmQam => {
                let units = FRAME_BITS_TARGET.div_ceil(n * bps).max(1);
                FrameLayout {
                    units,
                    edge: 0,
                    counted_bits: units * n * bps,
                }
            }
            Scheme::FbmcOqam => {
                let edge = cfg.prototype.span_symbols().saturating_sub(1);
                let counted_slots = FRAME_BITS_TARGET.div_ceil(n * bps).max(1);
                let units = counted_slots + edge;
                FrameLayout {
                    units,
                    edge,
                    counted_bits: (2 * units - 2 * edge) * n * bps / 2,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub bits: u64,
    pub errors: u64,
    /// `errors / bits`, or the rule-of-three upper bound `3 / bits` when no
    /// error was seen (then `censored` is set).
    pub ber: f64,
    /// Half-width of the 95% normal-approximation binomial interval.
    pub ci95: f64,
    pub censored: bool,
}

impl BerPoint {
    fn from_counts(ebn0_db: f64, bits: u64, errors: u64) -> BerPoint {
        let n = bits as f64;
        if errors == 0 {
            return BerPoint {
                ebn0_db,
                bits,
                errors,
                ber: 3.0 / n,
                ci95: 0.0,
                censored: true,
            };
        }
        let p = errors as f64 / n;
        BerPoint {
            ebn0_db,
            bits,
            errors,
            ber: p,
            ci95: 1.96 * (p * (1.0 - p) / n).sqrt(),
            censored: false,
        }
    }

    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub scheme: Scheme,
    pub n_subcarriers: usize,
    pub gamma: f64,
    pub dgd_norm: f64,
    pub points: Vec<BerPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyRecord {
    pub dgd_norm: f64,
    pub required_ebn0_db: f64,
    pub penalty_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyCurve {
    pub scheme: Scheme,
    pub n_subcarriers: usize,
    pub gamma: f64,
    /// `T_b` in seconds, to turn `dgd_norm` back into a DGD.
    pub bit_interval: f64,
    pub target_ber: f64,
    pub records: Vec<PenaltyRecord>,
}

fn stream(master: u64, point: u64, frame: u64, purpose: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([master, point, frame, purpose]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

struct Transmitted {
    signal: SampledSignal,
    bits: Vec<u8>,
    /// FBMC only: transmitted staggered grid.
    staggered: Option<SymbolGrid>,
}

fn transmit(cfg: &SchemeConfig, layout: &FrameLayout, rng: &mut ChaCha8Rng) -> Result<Transmitted> {
    let bps = cfg.bits_per_symbol();
    let n = cfg.n_subcarriers;
    let count = match cfg.scheme {
        Scheme::ScQpsk => layout.units * bps,
        _ => layout.units * n * bps,
    };
    let bits: Vec<u8> = (0..count).map(|_| rng.random_range(0..2u8)).collect();
    match cfg.scheme {
        Scheme::ScQpsk => Ok(Transmitted {
            signal: sc_modulate(&bits, cfg)?,
            bits,
            staggered: None,
        }),
        Scheme::OfdmQam => {
            let grid = SymbolGrid::from_symbols(n, qam_map(&bits, cfg.qam_order)?)?;
            Ok(Transmitted {
                signal: ofdm_modulate(&grid, cfg)?,
                bits,
                staggered: None,
            })
        }
        Scheme::FbmcOqam => {
            let grid = SymbolGrid::from_symbols(n, qam_map(&bits, cfg.qam_order)?)?;
            let staggered = oqam_stagger(&grid)?;
            Ok(Transmitted {
                signal: fbmc_modulate(&staggered, cfg)?,
                bits,
                staggered: Some(staggered),
            })
        }
    }
}

fn bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Per-sample complex noise variance for unit-energy QAM symbols, with the
/// cyclic prefix counted as transmitted energy.
fn sample_noise_variance(cfg: &SchemeConfig, ebn0_db: f64) -> f64 {
    let es = match cfg.scheme {
        Scheme::OfdmQam => {
            let m = cfg.samples_per_period() as f64;
            (m + cfg.cp_samples as f64) / m
        }
        _ => 1.0,
    };
    es / (cfg.bits_per_symbol() as f64 * 10f64.powf(ebn0_db / 10.0))
}

struct FrameContext<'a> {
    scenario: &'a Scenario,
    layout: FrameLayout,
    state: PmdState,
    gains: Option<Vec<Complex64>>,
    variance: f64,
    point: u64,
}

impl FrameContext<'_> {
    /// `(counted bits, bit errors)` of one frame.
    fn run(&self, frame: u64) -> Result<(u64, u64)> {
        let cfg = &self.scenario.scheme_config;
        let seed = self.scenario.seed;
        let mut bit_rng = stream(seed, self.point, frame, PURPOSE_BITS);
        let tx = transmit(cfg, &self.layout, &mut bit_rng)?;

        let received = if self.state.dgd == 0.0 {
            tx.signal.clone()
        } else {
            project_onto_launch(&apply_pmd_field(&tx.signal, &self.state), &self.state)
        };
        // Noise only touches the payload, so the guard length (which depends
        // on the DGD) does not shift the noise realisation.
        let epoch = received.epoch_offset();
        let fs = received.sample_rate();
        let mut samples = received.into_samples();
        let end = samples.len() - epoch;
        let mut noise_rng = stream(seed, self.point, frame, PURPOSE_NOISE);
        add_noise(&mut samples[epoch..end], self.variance, &mut noise_rng);
        let received = SampledSignal::from_parts(samples, fs, epoch);

        let gains = self.gains.as_deref();
        match cfg.scheme {
            Scheme::ScQpsk => {
                let rx = sc_demodulate(&received, cfg)?;
                Ok((tx.bits.len() as u64, bit_errors(&tx.bits, &rx)))
            }
            Scheme::OfdmQam => {
                let demod = ofdm_demodulate(&received, cfg, gains)?;
                let rx = qam_demap(demod.grid.values(), cfg.qam_order);
                Ok((tx.bits.len() as u64, bit_errors(&tx.bits, &rx)))
            }
            Scheme::FbmcOqam => {
                let demod = fbmc_demodulate(&received, cfg, gains)?;
                let sent = tx.staggered.as_ref().expect("fbmc frame keeps its grid");
                let order = cfg.qam_order;
                let slots = sent.n_slots();
                let mut errors = 0u64;
                let mut bits = 0u64;
                for k in self.layout.edge..slots - self.layout.edge {
                    for (a, b) in sent.slot(k).iter().zip(demod.grid.slot(k)) {
                        let want = pam_decide(a.re, order);
                        let got = pam_decide(b.re, order);
                        errors += (want ^ got).count_ones() as u64;
                        bits += order.bits_per_axis() as u64;
                    }
                }
                Ok((bits, errors))
            }
        }
    }
}

fn simulate_point(scenario: &Scenario, ebn0_db: f64, point: u64) -> Result<BerPoint> {
    scenario.validate()?;
    if ebn0_db.is_nan() || ebn0_db.is_infinite() {
        return Err(invalid("ebn0_db must be finite"));
    }
    let cfg = &scenario.scheme_config;
    let state = scenario.pmd_state()?;
    let gains = match (scenario.equalization, cfg.scheme) {
        (Equalization::Zf, Scheme::OfdmQam | Scheme::FbmcOqam) => Some(
            cfg.subcarrier_frequencies()
                .iter()
                .map(|&f| state.projected_gain(f))
                .collect(),
        ),
        _ => None,
    };
    let ctx = FrameContext {
        scenario,
        layout: FrameLayout::of(cfg),
        state,
        gains,
        variance: sample_noise_variance(cfg, ebn0_db),
        point,
    };
    let mut bits = 0u64;
    let mut errors = 0u64;
    let mut next_frame = 0u64;
    while errors < scenario.min_errors && bits < scenario.max_bits {
        let frames = next_frame..next_frame + BATCH_FRAMES as u64;
        next_frame += BATCH_FRAMES as u64;
        let counts: Vec<(u64, u64)> = frames
            .into_par_iter()
            .map(|f| ctx.run(f))
            .collect::<Result<_>>()?;
        for (b, e) in counts {
            bits += b;
            errors += e;
        }
    }
    Ok(BerPoint::from_counts(ebn0_db, bits, errors))
}

/// One BER estimate; stops at `min_errors` errors or `max_bits` bits,
/// checked after each fixed batch of frames.
pub fn simulate_ber(scenario: &Scenario, ebn0_db: f64) -> Result<BerPoint> {
    simulate_point(scenario, ebn0_db, 0)
}

/// One independent point per grid value; point `i` uses stream index `i`.
pub fn sweep_ebn0(scenario: &Scenario, grid: &[f64]) -> Result<BerCurve> {
    if grid.is_empty() {
        return Err(invalid("Eb/N0 grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("Eb/N0 grid must be strictly increasing"));
    }
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &e)| simulate_point(scenario, e, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        scheme: scenario.scheme_config.scheme,
        n_subcarriers: scenario.scheme_config.n_subcarriers,
        gamma: scenario.gamma,
        dgd_norm: scenario.dgd_norm,
        points,
    })
}

fn check_target(target_ber: f64) -> Result<()> {
    if !(target_ber > 0.0 && target_ber < 1.0) {
        return Err(invalid(format!("target BER {target_ber} outside (0, 1)")));
    }
    Ok(())
}

/// First pair of consecutive uncensored points with `a.ber >= target > b.ber`.
fn bracket(curve: &BerCurve, target_ber: f64) -> Result<(BerPoint, BerPoint)> {
    let pts: Vec<BerPoint> = curve.points.iter().filter(|p| !p.censored).copied().collect();
    if let Some(w) = pts.windows(2).find(|w| w[0].ber >= target_ber && w[1].ber < target_ber) {
        return Ok((w[0], w[1]));
    }
    if let Some(last) = pts.last().filter(|p| p.ber == target_ber) {
        return Ok((*last, *last));
    }
    Err(Error::UnbracketedTarget {
        target: target_ber,
        lowest: pts.iter().map(|p| p.ber).fold(f64::INFINITY, f64::min),
        highest: pts.iter().map(|p| p.ber).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Eb/N0 at which the curve first falls to `target_ber`, by linear
/// interpolation of dB against `log10(BER)` between bracketing points.
pub fn required_ebn0(curve: &BerCurve, target_ber: f64) -> Result<f64> {
    check_target(target_ber)?;
    let (a, b) = bracket(curve, target_ber)?;
    if a.ber == target_ber {
        return Ok(a.ebn0_db);
    }
    let (la, lb, lt) = (a.ber.log10(), b.ber.log10(), target_ber.log10());
    Ok(a.ebn0_db + (lt - la) / (lb - la) * (b.ebn0_db - a.ebn0_db))
}

/// Standard error of [`required_ebn0`], propagating the binomial errors of
/// the two bracketing points through the interpolation. NaN when the
/// target is hit exactly by the last uncensored point (no slope available).
pub fn required_ebn0_std_error(curve: &BerCurve, target_ber: f64) -> Result<f64> {
    check_target(target_ber)?;
    let (a, b) = bracket(curve, target_ber)?;
    if a == b {
        return Ok(f64::NAN);
    }
    let (la, lb, lt) = (a.ber.log10(), b.ber.log10(), target_ber.log10());
    let t = (lt - la) / (lb - la);
    let slope = (b.ebn0_db - a.ebn0_db) / (lb - la);
    let sa = a.std_error() / (a.ber * std::f64::consts::LN_10);
    let sb = b.std_error() / (b.ber * std::f64::consts::LN_10);
    Ok(slope.abs() * (((1.0 - t) * sa).powi(2) + (t * sb).powi(2)).sqrt())
}

/// Sweeps every DGD on the same grid and seeds and reports the extra
/// Eb/N0 each one needs over the zero-DGD baseline.
pub fn measure_penalty(
    base: &Scenario,
    dgd_norm_list: &[f64],
    target_ber: f64,
    grid: &[f64],
) -> Result<PenaltyCurve> {
    Ok(measure_penalty_with_curves(base, dgd_norm_list, target_ber, grid)?.0)
}

/// [`measure_penalty`] that also returns the BER curve of every DGD
/// (baseline first if it was not in the list).
pub fn measure_penalty_with_curves(
    base: &Scenario,
    dgd_norm_list: &[f64],
    target_ber: f64,
    grid: &[f64],
) -> Result<(PenaltyCurve, Vec<BerCurve>)> {
    if dgd_norm_list.is_empty() {
        return Err(invalid("dgd_norm list is empty"));
    }
    if let Some(bad) = dgd_norm_list.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(invalid(format!("dgd_norm {bad} must be >= 0")));
    }
    let mut curves = Vec::new();
    let baseline_curve = sweep_ebn0(&base.with_dgd_norm(0.0), grid)?;
    let baseline = required_ebn0(&baseline_curve, target_ber)?;
    let mut records = Vec::with_capacity(dgd_norm_list.len());
    if !dgd_norm_list.contains(&0.0) {
        curves.push(baseline_curve.clone());
    }
    for &d in dgd_norm_list {
        let curve = if d == 0.0 {
            baseline_curve.clone()
        } else {
            sweep_ebn0(&base.with_dgd_norm(d), grid)?
        };
        let required = if d == 0.0 { baseline } else { required_ebn0(&curve, target_ber)? };
        records.push(PenaltyRecord {
            dgd_norm: d,
            required_ebn0_db: required,
            penalty_db: required - baseline,
        });
        curves.push(curve);
    }
    Ok((
        PenaltyCurve {
            scheme: base.scheme_config.scheme,
            n_subcarriers: base.scheme_config.n_subcarriers,
            gamma: base.gamma,
            bit_interval: base.scheme_config.bit_interval(),
            target_ber,
            records,
        },
        curves,
    ))
}

/// Theoretical Gray-QPSK BER, `Q(sqrt(2 Eb/N0))`.
pub fn qpsk_theory_ber(ebn0_db: f64) -> f64 {
    let x = (2.0 * 10f64.powf(ebn0_db / 10.0)).sqrt();
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
