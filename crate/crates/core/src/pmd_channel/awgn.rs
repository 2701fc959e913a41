use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::modem::SampledSignal;

/// `ebn0_db` value that disables noise.
pub const NOISELESS: f64 = f64::INFINITY;

/// Per-sample complex noise variance
/// `P * samples_per_symbol / (bits_per_symbol * 10^(ebn0_db / 10))`.
pub fn noise_variance(
    signal_power: f64,
    ebn0_db: f64,
    bits_per_symbol: f64,
    samples_per_symbol: f64,
) -> f64 {
    if ebn0_db == NOISELESS {
        return 0.0;
    }
    signal_power * samples_per_symbol / (bits_per_symbol * 10f64.powf(ebn0_db / 10.0))
}

/// Adds circularly-symmetric Gaussian noise of total variance `variance`
/// to every sample, guard padding included.
pub fn add_noise<R: Rng + ?Sized>(signal: &mut [Complex64], variance: f64, rng: &mut R) {
    if variance == 0.0 {
        return;
    }
    let sigma = (variance / 2.0).sqrt();
    for s in signal.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(re * sigma, im * sigma);
    }
}

/// Noise scaled to the measured mean power of the signal payload.
pub fn add_awgn(
    signal: &SampledSignal,
    ebn0_db: f64,
    bits_per_symbol: f64,
    samples_per_symbol: f64,
    seed: u64,
) -> Result<SampledSignal> {
    if ebn0_db.is_nan() || ebn0_db == f64::NEG_INFINITY {
        return Err(invalid("ebn0_db must be a number or +inf"));
    }
    if !(bits_per_symbol > 0.0 && samples_per_symbol > 0.0) {
        return Err(invalid("bits and samples per symbol must be positive"));
    }
    let payload = signal.payload();
    let power = payload.iter().map(|s| s.norm_sqr()).sum::<f64>() / payload.len().max(1) as f64;
    if !(power > 0.0) {
        return Err(invalid("signal has zero power"));
    }
    let variance = noise_variance(power, ebn0_db, bits_per_symbol, samples_per_symbol);
    let mut samples = signal.samples().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise(&mut samples, variance, &mut rng);
    SampledSignal::with_epoch(samples, signal.sample_rate(), signal.epoch_offset())
}
