//! OQAM filter bank.
//!
//! Basis functions are `g(t - k*tau0) * exp(j*2*pi*f*nu0*t) * j^(f+k)` with
//! `tau0 = T/2`, `f` the signed frequency index of the row and `t` the
//! absolute sample time. Both banks run one `M`-point DFT per half-slot:
//! the prototype window is folded modulo `M` (polyphase form).

use num_complex::Complex64;

use super::{Demodulated, SampledSignal, Scheme, SchemeConfig, SymbolGrid};
use crate::error::{invalid, Error, Result};
use crate::fft;

/// `j^(f+k)` times the `(-1)^(f*k)` carried by the absolute time reference.
fn lattice_phase(f: i64, k: usize) -> Complex64 {
    let k = k as i64;
    let quarter = match (f + k).rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    if (f * k).rem_euclid(2) == 1 {
        -quarter
    } else {
        quarter
    }
}

/// Splits each QAM symbol into its real and imaginary parts on two
/// consecutive half-period slots.
pub fn oqam_stagger(grid: &SymbolGrid) -> Result<SymbolGrid> {
    if grid.is_staggered() {
        return Err(invalid("grid is already staggered"));
    }
    let n = grid.n_subcarriers();
    let mut values = Vec::with_capacity(2 * grid.values().len());
    for k in 0..grid.n_slots() {
        values.extend(grid.slot(k).iter().map(|a| a.re));
        values.extend(grid.slot(k).iter().map(|a| a.im));
    }
    SymbolGrid::new_staggered(n, 2 * grid.n_slots(), values)
}

/// Inverse of [`oqam_stagger`].
pub fn oqam_destagger(grid: &SymbolGrid) -> Result<SymbolGrid> {
    if !grid.is_staggered() || grid.n_slots() % 2 != 0 {
        return Err(invalid("expected a staggered grid with an even slot count"));
    }
    let n = grid.n_subcarriers();
    let mut values = Vec::with_capacity(grid.values().len() / 2);
    for k in 0..grid.n_slots() / 2 {
        let (re, im) = (grid.slot(2 * k), grid.slot(2 * k + 1));
        values.extend(re.iter().zip(im).map(|(a, b)| Complex64::new(a.re, b.re)));
    }
    SymbolGrid::new(n, grid.n_slots() / 2, values)
}

/// Synthesis filter bank. Output length is `(K - 1) * M/2 + L` for `K`
/// half-slots and a length-`L` prototype, so the filter transients at both
/// ends are included.
pub fn fbmc_modulate(grid: &SymbolGrid, cfg: &SchemeConfig) -> Result<SampledSignal> {
    if !grid.is_staggered() {
        return Err(invalid("FBMC/OQAM takes a staggered real grid"));
    }
    if grid.n_subcarriers() != cfg.n_subcarriers {
        return Err(invalid("grid and config disagree on the subcarrier count"));
    }
    if cfg.scheme != Scheme::FbmcOqam {
        return Err(invalid("configuration is not FBMC/OQAM"));
    }
    let m = cfg.samples_per_period();
    let half = m / 2;
    let taps = cfg.prototype.unit_sample_taps();
    let slots = grid.n_slots();
    if slots == 0 {
        return Ok(SampledSignal::from_parts(Vec::new(), cfg.sample_rate(), 0));
    }
    let mut out = vec![Complex64::default(); (slots - 1) * half + taps.len()];
    let mut buf = vec![Complex64::default(); m];
    for k in 0..slots {
        buf.iter_mut().for_each(|b| *b = Complex64::default());
        let mut any = false;
        for (n, a) in grid.slot(k).iter().enumerate() {
            if a.re != 0.0 {
                buf[cfg.bin(n)] = a.re * lattice_phase(cfg.frequency_index(n), k);
                any = true;
            }
        }
        if !any {
            continue;
        }
        fft::inverse(&mut buf);
        let dst = &mut out[k * half..k * half + taps.len()];
        for (i, (d, g)) in dst.iter_mut().zip(&taps).enumerate() {
            *d += buf[i % m] * *g;
        }
    }
    Ok(SampledSignal::from_parts(out, cfg.sample_rate(), 0))
}

/// Analysis filter bank up to (but excluding) real-part extraction: matched
/// filtering, derotation by `j^-(n+k)` and optional zero-forcing. The real
/// parts of the returned grid are the OQAM symbol estimates; the imaginary
/// parts hold the intrinsic interference.
pub fn fbmc_analysis(
    signal: &SampledSignal,
    cfg: &SchemeConfig,
    channel_gains: Option<&[Complex64]>,
) -> Result<Demodulated> {
    if cfg.scheme != Scheme::FbmcOqam {
        return Err(invalid("configuration is not FBMC/OQAM"));
    }
    if let Some(g) = channel_gains {
        if g.len() != cfg.n_subcarriers {
            return Err(invalid("one channel gain per subcarrier required"));
        }
    }
    let m = cfg.samples_per_period();
    let half = m / 2;
    let taps = cfg.prototype.unit_sample_taps();
    let payload = signal.payload();
    if payload.len() < taps.len() || (payload.len() - taps.len()) % half != 0 {
        return Err(Error::Framing(format!(
            "{} samples do not match a whole number of half-slots plus the {}-tap transient",
            payload.len(),
            taps.len()
        )));
    }
    let slots = (payload.len() - taps.len()) / half + 1;
    let n = cfg.n_subcarriers;
    let erased: Vec<bool> = match channel_gains {
        Some(g) => g.iter().map(|g| g.norm_sqr() == 0.0).collect(),
        None => vec![false; n],
    };
    let mut grid = SymbolGrid::zeros(n, slots, false);
    let mut buf = vec![Complex64::default(); m];
    for k in 0..slots {
        buf.iter_mut().for_each(|b| *b = Complex64::default());
        let window = &payload[k * half..k * half + taps.len()];
        for (i, (s, g)) in window.iter().zip(&taps).enumerate() {
            buf[i % m] += s * *g;
        }
        fft::forward(&mut buf);
        for row in 0..n {
            let f = cfg.frequency_index(row);
            let mut y = buf[cfg.bin(row)] * lattice_phase(f, k).conj();
            if let Some(g) = channel_gains {
                y = if erased[row] { Complex64::default() } else { y / g[row] };
            }
            grid.set(row, k, y);
        }
    }
    Ok(Demodulated { grid, erased })
}

/// Real-part extraction of the modified inner product.
pub fn take_real(analysis: &SymbolGrid) -> SymbolGrid {
    let values = analysis.values().iter().map(|v| v.re).collect();
    SymbolGrid::new_staggered(analysis.n_subcarriers(), analysis.n_slots(), values)
        .expect("shape preserved")
}

/// Full analysis bank: [`fbmc_analysis`] followed by [`take_real`].
pub fn fbmc_demodulate(
    signal: &SampledSignal,
    cfg: &SchemeConfig,
    channel_gains: Option<&[Complex64]>,
) -> Result<Demodulated> {
    let analysis = fbmc_analysis(signal, cfg, channel_gains)?;
    Ok(Demodulated {
        grid: take_real(&analysis.grid),
        erased: analysis.erased,
    })
}
