use num_complex::Complex64;

use super::{Demodulated, SampledSignal, Scheme, SchemeConfig, SymbolGrid};
use crate::error::{invalid, Error, Result};
use crate::fft;

/// One inverse DFT per slot with the rectangular prototype, cyclic prefix
/// prepended, slots concatenated.
pub fn ofdm_modulate(grid: &SymbolGrid, cfg: &SchemeConfig) -> Result<SampledSignal> {
    if grid.is_staggered() {
        return Err(invalid("OFDM/QAM takes a complex (non-staggered) grid"));
    }
    if grid.n_subcarriers() != cfg.n_subcarriers {
        return Err(invalid(format!(
            "grid has {} subcarriers, config {}",
            grid.n_subcarriers(),
            cfg.n_subcarriers
        )));
    }
    let m = cfg.samples_per_period();
    if cfg.cp_samples > m {
        return Err(invalid("cyclic prefix longer than the symbol"));
    }
    let slot_len = m + cfg.cp_samples;
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Vec::with_capacity(grid.n_slots() * slot_len);
    let mut buf = vec![Complex64::default(); m];
    for k in 0..grid.n_slots() {
        buf.iter_mut().for_each(|b| *b = Complex64::default());
        for (n, &a) in grid.slot(k).iter().enumerate() {
            buf[cfg.bin(n)] = a;
        }
        fft::inverse(&mut buf);
        out.extend(buf[m - cfg.cp_samples..].iter().map(|s| s * scale));
        out.extend(buf.iter().map(|s| s * scale));
    }
    Ok(SampledSignal::from_parts(out, cfg.sample_rate(), 0))
}

/// Strips the cyclic prefix and projects each slot onto the subcarriers.
/// With `channel_gains` the projections are zero-forced; rows whose gain is
/// exactly zero come back as `0` and are flagged in `erased`.
pub fn ofdm_demodulate(
    signal: &SampledSignal,
    cfg: &SchemeConfig,
    channel_gains: Option<&[Complex64]>,
) -> Result<Demodulated> {
    if cfg.scheme != Scheme::OfdmQam {
        return Err(invalid("configuration is not OFDM/QAM"));
    }
    if let Some(g) = channel_gains {
        if g.len() != cfg.n_subcarriers {
            return Err(invalid("one channel gain per subcarrier required"));
        }
    }
    let m = cfg.samples_per_period();
    let slot_len = m + cfg.cp_samples;
    let payload = signal.payload();
    if payload.is_empty() || payload.len() % slot_len != 0 {
        return Err(Error::Framing(format!(
            "{} samples is not a whole number of {slot_len}-sample slots",
            payload.len()
        )));
    }
    let slots = payload.len() / slot_len;
    let n = cfg.n_subcarriers;
    let scale = 1.0 / (m as f64).sqrt();
    let erased: Vec<bool> = match channel_gains {
        Some(g) => g.iter().map(|g| g.norm_sqr() == 0.0).collect(),
        None => vec![false; n],
    };
    let mut grid = SymbolGrid::zeros(n, slots, false);
    let mut buf = vec![Complex64::default(); m];
    for k in 0..slots {
        let start = k * slot_len + cfg.cp_samples;
        buf.copy_from_slice(&payload[start..start + m]);
        fft::forward(&mut buf);
        for row in 0..n {
            let mut y = buf[cfg.bin(row)] * scale;
            if let Some(g) = channel_gains {
                y = if erased[row] { Complex64::default() } else { y / g[row] };
            }
            grid.set(row, k, y);
        }
    }
    Ok(Demodulated { grid, erased })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::Placement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(n: usize, k: usize, seed: u64) -> SymbolGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * k)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SymbolGrid::new(n, k, v).unwrap()
    }

    #[test]
    fn single_subcarrier_is_a_tone() {
        let cfg = SchemeConfig::new(Scheme::OfdmQam, 16, 1e8).unwrap().with_placement(Placement::OneSided);
        let mut grid = SymbolGrid::zeros(16, 1, false);
        grid.set(1, 0, Complex64::new(1.0, 0.0));
        let sig = ofdm_modulate(&grid, &cfg).unwrap();
        let m = cfg.samples_per_period();
        let amp = 1.0 / (m as f64).sqrt();
        for (i, s) in sig.samples().iter().enumerate() {
            let t = i as f64 / cfg.sample_rate();
            let expected = Complex64::from_polar(amp, 2.0 * std::f64::consts::PI * 1e8 * t);
            assert!((s - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_grid_zero_signal() {
        let cfg = SchemeConfig::new(Scheme::OfdmQam, 8, 1e8).unwrap();
        let sig = ofdm_modulate(&SymbolGrid::zeros(8, 3, false), &cfg).unwrap();
        assert!(sig.samples().iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn round_trip_with_and_without_cp() {
        for (cp, placement) in [(0, Placement::OneSided), (5, Placement::Centered)] {
            let cfg = SchemeConfig::new(Scheme::OfdmQam, 32, 1e8)
                .unwrap()
                .with_cp(cp)
                .unwrap()
                .with_placement(placement);
            let grid = random_grid(32, 6, 9);
            let sig = ofdm_modulate(&grid, &cfg).unwrap();
            let back = ofdm_demodulate(&sig, &cfg, None).unwrap();
            assert!(back.grid.max_abs_diff(&grid) < 1e-10);
            assert_eq!(back.erased_count(), 0);
        }
    }

    #[test]
    fn parseval() {
        let cfg = SchemeConfig::new(Scheme::OfdmQam, 64, 1e8).unwrap();
        let grid = random_grid(64, 4, 1);
        let sig = ofdm_modulate(&grid, &cfg).unwrap();
        assert!((sig.energy() - grid.energy()).abs() <= 1e-9 * grid.energy());
    }

    #[test]
    fn zf_inverts_known_gain() {
        let cfg = SchemeConfig::new(Scheme::OfdmQam, 16, 1e8).unwrap();
        let grid = random_grid(16, 3, 2);
        let sig = ofdm_modulate(&grid, &cfg).unwrap();
        let halved: Vec<Complex64> = sig.samples().iter().map(|s| s * 0.5).collect();
        let halved = SampledSignal::new(halved, sig.sample_rate()).unwrap();
        let gains = vec![Complex64::new(0.5, 0.0); 16];
        let back = ofdm_demodulate(&halved, &cfg, Some(&gains)).unwrap();
        assert!(back.grid.max_abs_diff(&grid) < 1e-10);
    }

    #[test]
    fn zero_gain_is_erased() {
        let cfg = SchemeConfig::new(Scheme::OfdmQam, 8, 1e8).unwrap();
        let grid = random_grid(8, 2, 4);
        let sig = ofdm_modulate(&grid, &cfg).unwrap();
        let mut gains = vec![Complex64::new(1.0, 0.0); 8];
        gains[3] = Complex64::default();
        let back = ofdm_demodulate(&sig, &cfg, Some(&gains)).unwrap();
        assert_eq!(back.erased.iter().position(|e| *e), Some(3));
        assert_eq!(back.erased_count(), 1);
        for k in 0..2 {
            assert_eq!(back.grid.get(3, k), Complex64::default());
            for n in (0..8).filter(|n| *n != 3) {
                assert!((back.grid.get(n, k) - grid.get(n, k)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn framing_and_shape_errors() {
        let cfg = SchemeConfig::new(Scheme::OfdmQam, 8, 1e8).unwrap();
        let short = SampledSignal::new(vec![Complex64::default(); 15], cfg.sample_rate()).unwrap();
        assert!(matches!(ofdm_demodulate(&short, &cfg, None), Err(Error::Framing(_))));
        let staggered = SymbolGrid::zeros(8, 2, true);
        assert!(ofdm_modulate(&staggered, &cfg).is_err());
    }
}
