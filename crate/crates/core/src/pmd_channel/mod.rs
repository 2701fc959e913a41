//! First-order PMD fiber model, coherent projection, square-law detection
//! and additive noise.
//!
//! The field model splits the launched signal over the two principal states
//! of polarization (PSPs): the fast axis carries `sqrt(gamma) * s(t + dgd/2)`,
//! the slow axis `sqrt(1 - gamma) * s(t - dgd/2)`. Delays are exact linear
//! phases applied in the frequency domain after symmetric zero padding.

mod awgn;
mod jones;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fft;
use crate::modem::SampledSignal;

pub use awgn::{add_awgn, add_noise, noise_variance, NOISELESS};
pub use jones::{jones_rotation, pmd_delay_matrix, JonesMatrix};

/// One first-order PMD realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmdState {
    /// Differential group delay in seconds.
    pub dgd: f64,
    /// Fraction of launched power on the fast PSP, `cos^2(psi)`.
    pub gamma: f64,
    /// Fast-PSP azimuth.
    pub azimuth: f64,
    /// Fast-PSP ellipticity.
    pub ellipticity: f64,
    /// Half of the Stokes-space angle between the fast PSP and the launch
    /// polarization.
    pub stokes_half_angle: f64,
    /// Static optical phases picked up on the fast and slow paths.
    pub path_phases: [f64; 2],
}

impl PmdState {
    pub fn new(dgd: f64, gamma: f64) -> Result<Self> {
        if !(dgd >= 0.0 && dgd.is_finite()) {
            return Err(invalid(format!("dgd {dgd} must be finite and nonnegative")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid(format!("gamma {gamma} outside [0, 1]")));
        }
        Ok(PmdState {
            dgd,
            gamma,
            azimuth: 0.0,
            ellipticity: 0.0,
            stokes_half_angle: gamma.sqrt().acos(),
            path_phases: [0.0; 2],
        })
    }

    /// Builds the state from its angles; `gamma = cos^2(stokes_half_angle)`.
    pub fn from_angles(
        dgd: f64,
        azimuth: f64,
        ellipticity: f64,
        stokes_half_angle: f64,
    ) -> Result<Self> {
        let gamma = stokes_half_angle.cos().powi(2).clamp(0.0, 1.0);
        let mut state = PmdState::new(dgd, gamma)?;
        state.azimuth = azimuth;
        state.ellipticity = ellipticity;
        state.stokes_half_angle = stokes_half_angle;
        Ok(state)
    }

    pub fn with_path_phases(mut self, fast: f64, slow: f64) -> Self {
        self.path_phases = [fast, slow];
        self
    }

    /// Fast-PSP amplitude `|cos psi| = sqrt(gamma)`.
    pub fn c1(&self) -> f64 {
        self.gamma.sqrt()
    }

    /// Slow-PSP amplitude `|sin psi| = sqrt(1 - gamma)`.
    pub fn c2(&self) -> f64 {
        (1.0 - self.gamma).sqrt()
    }

    /// Launch polarization expressed in the lab frame, `R [c1, c2]^T`.
    pub fn launch_jones_vector(&self) -> [Complex64; 2] {
        jones_rotation(self.azimuth, self.ellipticity)
            .apply([Complex64::new(self.c1(), 0.0), Complex64::new(self.c2(), 0.0)])
    }

    /// Per-PSP transfer at baseband frequency `f` (Hz).
    pub fn psp_gains(&self, f: f64) -> [Complex64; 2] {
        let half = PI * f * self.dgd;
        [
            Complex64::from_polar(self.c1(), half + self.path_phases[0]),
            Complex64::from_polar(self.c2(), -half + self.path_phases[1]),
        ]
    }

    /// Scalar transfer seen after projecting onto the launch polarization:
    /// `gamma e^{j pi f dgd} + (1 - gamma) e^{-j pi f dgd}` (zero path phases).
    pub fn projected_gain(&self, f: f64) -> Complex64 {
        let [g1, g2] = self.psp_gains(f);
        g1 * self.c1() + g2 * self.c2()
    }
}

/// Fiber Jones matrix `R U(w) R^-1`.
pub fn fiber_jones(omega: f64, state: &PmdState) -> JonesMatrix {
    let r = jones_rotation(state.azimuth, state.ellipticity);
    r * pmd_delay_matrix(omega, state.dgd) * r.adjoint()
}

/// Field on the fast (`[0]`) and slow (`[1]`) PSP axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedSignal {
    components: [SampledSignal; 2],
}

impl PolarizedSignal {
    pub fn new(fast: SampledSignal, slow: SampledSignal) -> Result<Self> {
        if fast.len() != slow.len()
            || fast.sample_rate() != slow.sample_rate()
            || fast.epoch_offset() != slow.epoch_offset()
        {
            return Err(invalid("PSP components differ in length, rate or epoch"));
        }
        Ok(PolarizedSignal {
            components: [fast, slow],
        })
    }

    pub fn fast(&self) -> &SampledSignal {
        &self.components[0]
    }

    pub fn slow(&self) -> &SampledSignal {
        &self.components[1]
    }

    pub fn energy(&self) -> f64 {
        self.components.iter().map(|c| c.energy()).sum()
    }
}

/// Nonnegative real waveform (optical intensity or photocurrent).
#[derive(Debug, Clone, PartialEq)]
pub struct Intensity {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub epoch_offset: usize,
}

impl Intensity {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(invalid("sample rate must be positive"));
        }
        if let Some(v) = samples.iter().find(|v| !(**v >= 0.0)) {
            return Err(invalid(format!("intensity sample {v} is negative or NaN")));
        }
        Ok(Intensity {
            samples,
            sample_rate,
            epoch_offset: 0,
        })
    }

    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.sample_rate
    }
}

fn is_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5, 7] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

/// Guard samples on each side: at least `ceil(dgd * fs)`, grown until the
/// padded length factors over small primes.
fn guard_for(len: usize, dgd: f64, sample_rate: f64) -> usize {
    if dgd == 0.0 {
        return 0;
    }
    let mut guard = (dgd * sample_rate).ceil() as usize;
    while !is_smooth(len + 2 * guard) {
        guard += 1;
    }
    guard
}

fn padded_spectrum(samples: &[Complex64], guard: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::default(); samples.len() + 2 * guard];
    buf[guard..guard + samples.len()].copy_from_slice(samples);
    fft::forward(&mut buf);
    buf
}

/// Applies `gain(f)` to a spectrum and returns the scaled inverse transform.
fn shaped(spectrum: &[Complex64], sample_rate: f64, gain: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let len = spectrum.len();
    let norm = 1.0 / len as f64;
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(k, x)| x * gain(fft::bin_frequency(k, len) * sample_rate) * norm)
        .collect();
    fft::inverse(&mut buf);
    buf
}

/// Two-path first-order PMD on a complex field.
///
/// The output is padded by the same guard on both sides (recorded in its
/// `epoch_offset`); inside the padded window the operation is unitary, so
/// total energy is conserved.
pub fn apply_pmd_field(signal: &SampledSignal, state: &PmdState) -> PolarizedSignal {
    let fs = signal.sample_rate();
    let guard = guard_for(signal.len(), state.dgd, fs);
    let spectrum = padded_spectrum(signal.samples(), guard);
    let epoch = signal.epoch_offset() + guard;
    let fast = shaped(&spectrum, fs, |f| state.psp_gains(f)[0]);
    let slow = shaped(&spectrum, fs, |f| state.psp_gains(f)[1]);
    PolarizedSignal {
        components: [
            SampledSignal::from_parts(fast, fs, epoch),
            SampledSignal::from_parts(slow, fs, epoch),
        ],
    }
}

/// Coherent single-polarization receiver aligned with the launch state:
/// projects the PSP components onto `(c1, c2)`.
pub fn project_onto_launch(field: &PolarizedSignal, state: &PmdState) -> SampledSignal {
    let (c1, c2) = (state.c1(), state.c2());
    let samples = field
        .fast()
        .samples()
        .iter()
        .zip(field.slow().samples())
        .map(|(a, b)| a * c1 + b * c2)
        .collect();
    SampledSignal::from_parts(samples, field.fast().sample_rate(), field.fast().epoch_offset())
}

/// Incoherent two-path intensity model,
/// `gamma i(t + dgd/2) + (1 - gamma) i(t - dgd/2)`.
///
/// Fractional delays use the same band-limited linear-phase shift as the
/// field model, so for inputs that are not well oversampled the output can
/// ring slightly below zero; integer-sample delays are exact shifts.
pub fn apply_pmd_intensity(input: &Intensity, dgd: f64, gamma: f64) -> Result<Intensity> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("gamma {gamma} outside [0, 1]")));
    }
    if !(dgd >= 0.0 && dgd.is_finite()) {
        return Err(invalid("dgd must be finite and nonnegative"));
    }
    if let Some(v) = input.samples.iter().find(|v| !(**v >= 0.0)) {
        return Err(invalid(format!("intensity sample {v} is negative or NaN")));
    }
    if dgd == 0.0 {
        return Ok(input.clone());
    }
    let fs = input.sample_rate;
    let guard = guard_for(input.samples.len(), dgd, fs);
    let as_complex: Vec<Complex64> = input.samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let spectrum = padded_spectrum(&as_complex, guard);
    let out = shaped(&spectrum, fs, |f| {
        let half = PI * f * dgd;
        Complex64::from_polar(gamma, half) + Complex64::from_polar(1.0 - gamma, -half)
    });
    Ok(Intensity {
        samples: out.into_iter().map(|v| v.re).collect(),
        sample_rate: fs,
        epoch_offset: input.epoch_offset + guard,
    })
}

/// Square-law photodetection, `rho * |E|^2` summed over both PSPs.
pub fn direct_detect(field: &PolarizedSignal, responsivity: f64) -> Result<Intensity> {
    if !(responsivity > 0.0) {
        return Err(invalid("responsivity must be positive"));
    }
    let samples = field
        .fast()
        .samples()
        .iter()
        .zip(field.slow().samples())
        .map(|(a, b)| responsivity * (a.norm_sqr() + b.norm_sqr()))
        .collect();
    Ok(Intensity {
        samples,
        sample_rate: field.fast().sample_rate(),
        epoch_offset: field.fast().epoch_offset(),
    })
}
