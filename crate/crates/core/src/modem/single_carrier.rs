use num_complex::Complex64;

use super::{qam_demap, qam_map, QamOrder, SampledSignal, Scheme, SchemeConfig};
use crate::error::{invalid, Error, Result};

fn check(cfg: &SchemeConfig) -> Result<()> {
    if cfg.scheme != Scheme::ScQpsk {
        return Err(invalid("configuration is not SC-QPSK"));
    }
    Ok(())
}

/// QPSK at `N * nu0` symbols per second, pulse-shaped at `oversampling`
/// samples per symbol. `K` symbols produce `(K - 1) * sps + L` samples for a
/// length-`L` pulse.
pub fn sc_modulate(bits: &[u8], cfg: &SchemeConfig) -> Result<SampledSignal> {
    check(cfg)?;
    if bits.len() % 2 != 0 {
        return Err(invalid(format!("{} bits is odd, QPSK needs pairs", bits.len())));
    }
    let symbols = qam_map(bits, QamOrder::Qpsk)?;
    let sps = cfg.oversampling;
    let taps = cfg.prototype.unit_sample_taps();
    if symbols.is_empty() {
        return Ok(SampledSignal::from_parts(Vec::new(), cfg.sample_rate(), 0));
    }
    let mut out = vec![Complex64::default(); (symbols.len() - 1) * sps + taps.len()];
    for (k, a) in symbols.iter().enumerate() {
        for (d, g) in out[k * sps..k * sps + taps.len()].iter_mut().zip(&taps) {
            *d += a * *g;
        }
    }
    Ok(SampledSignal::from_parts(out, cfg.sample_rate(), 0))
}

/// Matched-filter outputs sampled at each symbol's peak.
pub fn sc_matched_outputs(signal: &SampledSignal, cfg: &SchemeConfig) -> Result<Vec<Complex64>> {
    check(cfg)?;
    let sps = cfg.oversampling;
    let taps = cfg.prototype.unit_sample_taps();
    let payload = signal.payload();
    if payload.len() < taps.len() || (payload.len() - taps.len()) % sps != 0 {
        return Err(Error::Framing(format!(
            "{} samples do not hold a whole number of symbols plus the {}-tap pulse",
            payload.len(),
            taps.len()
        )));
    }
    let count = (payload.len() - taps.len()) / sps + 1;
    Ok((0..count)
        .map(|k| {
            payload[k * sps..k * sps + taps.len()]
                .iter()
                .zip(&taps)
                .map(|(r, g)| r * *g)
                .sum()
        })
        .collect())
}

/// Matched filter, symbol-rate sampling and hard QPSK decisions.
pub fn sc_demodulate(signal: &SampledSignal, cfg: &SchemeConfig) -> Result<Vec<u8>> {
    Ok(qam_demap(&sc_matched_outputs(signal, cfg)?, QamOrder::Qpsk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::rect_prototype;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0..2)).collect()
    }

    fn cfg_with_os(os: usize) -> SchemeConfig {
        SchemeConfig::build(Scheme::ScQpsk, 16, 1e8, os, 1.0, 4).unwrap()
    }

    #[test]
    fn rectangular_single_symbol() {
        let cfg = cfg_with_os(4).with_prototype(rect_prototype(4).unwrap()).unwrap();
        let sig = sc_modulate(&[1, 0], &cfg).unwrap();
        let point = qam_map(&[1, 0], QamOrder::Qpsk).unwrap()[0];
        // unit sample energy per symbol: each of the 4 samples is point / 2
        assert_eq!(sig.len(), 4);
        for s in sig.samples() {
            assert!((s - point * 0.5).norm() < 1e-15);
        }
    }

    #[test]
    fn sample_count() {
        let cfg = cfg_with_os(2);
        let bits = random_bits(2 * 16, 1);
        let sig = sc_modulate(&bits, &cfg).unwrap();
        assert_eq!(sig.len(), 15 * 2 + cfg.prototype.len());
    }

    #[test]
    fn round_trip() {
        for os in [2, 4, 8] {
            let cfg = cfg_with_os(os);
            let bits = random_bits(2000, os as u64);
            let sig = sc_modulate(&bits, &cfg).unwrap();
            assert_eq!(sc_demodulate(&sig, &cfg).unwrap(), bits);
        }
    }

    #[test]
    fn decisions_ignore_positive_scale() {
        let cfg = cfg_with_os(2);
        let bits = random_bits(400, 3);
        let sig = sc_modulate(&bits, &cfg).unwrap();
        let scaled: Vec<Complex64> = sig.samples().iter().map(|s| s * 7.5).collect();
        let scaled = SampledSignal::new(scaled, sig.sample_rate()).unwrap();
        assert_eq!(sc_demodulate(&scaled, &cfg).unwrap(), bits);
    }

    #[test]
    fn rotation_by_pi_inverts_bits() {
        let cfg = cfg_with_os(2);
        let bits = random_bits(400, 4);
        let sig = sc_modulate(&bits, &cfg).unwrap();
        let flipped: Vec<Complex64> = sig.samples().iter().map(|s| -s).collect();
        let flipped = SampledSignal::new(flipped, sig.sample_rate()).unwrap();
        let out = sc_demodulate(&flipped, &cfg).unwrap();
        assert!(out.iter().zip(&bits).all(|(a, b)| a ^ b == 1));
    }

    #[test]
    fn errors() {
        let cfg = cfg_with_os(2);
        assert!(sc_modulate(&[1, 0, 1], &cfg).is_err());
        let short = SampledSignal::new(vec![Complex64::default(); 3], cfg.sample_rate()).unwrap();
        assert!(matches!(sc_demodulate(&short, &cfg), Err(Error::Framing(_))));
    }
}
