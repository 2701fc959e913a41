//! Prototype pulse shapes and filter-bank orthogonality checks.
//!
//! Taps are stored in continuous-time units: with sample period
//! `1 / samples_per_symbol` (time measured in symbol durations) every
//! prototype has unit energy, `sum(tap^2) / samples_per_symbol == 1`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Lowest value reported by [`orthogonality_defect`], in dB.
pub const DEFECT_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[non_exhaustive]
pub enum PrototypeKind {
    Rectangular,
    Srrc { rolloff: f64 },
}

impl PrototypeKind {
    pub fn name(&self) -> &'static str {
        match self {
            PrototypeKind::Rectangular => "rectangular",
            PrototypeKind::Srrc { .. } => "srrc",
        }
    }

    pub fn rolloff(&self) -> Option<f64> {
        match self {
            PrototypeKind::Srrc { rolloff } => Some(*rolloff),
            PrototypeKind::Rectangular => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    taps: Vec<f64>,
    samples_per_symbol: usize,
    span_symbols: usize,
    kind: PrototypeKind,
}

impl Prototype {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    pub fn span_symbols(&self) -> usize {
        self.span_symbols
    }

    pub fn kind(&self) -> PrototypeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Continuous-time energy, `sum(tap^2) * sample_period`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum::<f64>() / self.samples_per_symbol as f64
    }

    /// Taps scaled to unit *sample* energy (`sum(tap^2) == 1`), the scaling
    /// used by the modems when synthesizing waveforms.
    pub fn unit_sample_taps(&self) -> Vec<f64> {
        let scale = 1.0 / (self.samples_per_symbol as f64).sqrt();
        self.taps.iter().map(|t| t * scale).collect()
    }

    /// Copy with the tap order reversed.
    pub fn time_reversed(&self) -> Prototype {
        let mut taps = self.taps.clone();
        taps.reverse();
        Prototype { taps, ..self.clone() }
    }

    /// Index of the center tap. Group delay in samples.
    pub fn center(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Rescales an arbitrary tap vector to unit energy.
    fn from_raw(
        mut taps: Vec<f64>,
        samples_per_symbol: usize,
        span_symbols: usize,
        kind: PrototypeKind,
    ) -> Prototype {
        let energy = taps.iter().map(|t| t * t).sum::<f64>() / samples_per_symbol as f64;
        let scale = 1.0 / energy.sqrt();
        taps.iter_mut().for_each(|t| *t *= scale);
        Prototype {
            taps,
            samples_per_symbol,
            span_symbols,
            kind,
        }
    }
}

/// Unit-energy rectangle lasting one symbol.
pub fn rect_prototype(samples_per_symbol: usize) -> Result<Prototype> {
    if samples_per_symbol == 0 {
        return Err(invalid("samples_per_symbol must be at least 1"));
    }
    Ok(Prototype::from_raw(
        vec![1.0; samples_per_symbol],
        samples_per_symbol,
        1,
        PrototypeKind::Rectangular,
    ))
}

/// Truncated square-root raised cosine of length `span * sps + 1`, centered
/// on its middle tap.
pub fn srrc_prototype(
    rolloff: f64,
    span_symbols: usize,
    samples_per_symbol: usize,
) -> Result<Prototype> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(invalid(format!("rolloff {rolloff} outside (0, 1]")));
    }
    if span_symbols == 0 || span_symbols % 2 != 0 {
        return Err(invalid(format!(
            "span_symbols must be even and positive, got {span_symbols}"
        )));
    }
    if samples_per_symbol == 0 {
        return Err(invalid("samples_per_symbol must be at least 1"));
    }
    let len = span_symbols * samples_per_symbol + 1;
    let center = (len - 1) / 2;
    let taps = (0..len)
        .map(|i| {
            let t = (i as f64 - center as f64) / samples_per_symbol as f64;
            srrc_impulse(t, rolloff)
        })
        .collect();
    Ok(Prototype::from_raw(
        taps,
        samples_per_symbol,
        span_symbols,
        PrototypeKind::Srrc { rolloff },
    ))
}

/// SRRC impulse response at time `t` (in symbol periods), up to scale.
fn srrc_impulse(t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 1.0 + beta * (4.0 / PI - 1.0);
    }
    let x = 4.0 * beta * t;
    if (x.abs() - 1.0).abs() < 1e-12 {
        let a = PI / (4.0 * beta);
        return beta * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + x * (PI * t * (1.0 + beta)).cos();
    num / (PI * t * (1.0 - x * x))
}

/// Time-frequency lattice used when checking orthogonality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    /// `nu0 * tau0 = 1`, complex inner product (OFDM/QAM).
    Qam,
    /// `nu0 * tau0 = 1/2`, phase factor `j^(n+k)`, real inner product
    /// (FBMC/OQAM).
    Oqam,
}

/// Sampled basis function `g_{n,k}` restricted to its support.
struct Atom {
    start: i64,
    samples: Vec<Complex64>,
}

fn atom(proto: &Prototype, lattice: Lattice, n: i64, k: i64) -> Atom {
    let m = proto.samples_per_symbol() as i64;
    let (shift, phase) = match lattice {
        Lattice::Qam => (k * m, Complex64::new(1.0, 0.0)),
        Lattice::Oqam => (k * m / 2, Complex64::i().powi(((n + k).rem_euclid(4)) as i32)),
    };
    let taps = proto.unit_sample_taps();
    let samples = taps
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let t = shift + i as i64;
            let arg = 2.0 * PI * (n * t).rem_euclid(m) as f64 / m as f64;
            phase * Complex64::from_polar(g, arg)
        })
        .collect();
    Atom {
        start: shift,
        samples,
    }
}

fn inner(a: &Atom, b: &Atom) -> Complex64 {
    let lo = a.start.max(b.start);
    let hi = (a.start + a.samples.len() as i64).min(b.start + b.samples.len() as i64);
    (lo..hi)
        .map(|t| a.samples[(t - a.start) as usize].conj() * b.samples[(t - b.start) as usize])
        .sum()
}

/// Worst cross-term of the lattice inner product over all offsets
/// `0 < max(|dn|, |dk|) <= neighborhood`, in dB (amplitude, `20 log10`)
/// relative to the matched term. Values below [`DEFECT_FLOOR_DB`] are
/// clamped to it.
///
/// The lattice phase pattern depends on the parity of `(n, k)`, so the scan
/// is repeated from the four reference atoms `(0|1, 0|1)`.
pub fn orthogonality_defect(
    proto: &Prototype,
    n_subcarriers: usize,
    neighborhood: usize,
    lattice: Lattice,
) -> Result<f64> {
    check_defect_args(proto, n_subcarriers, neighborhood, lattice)?;
    let (worst, _) = scan_cross_terms(proto, n_subcarriers, neighborhood, lattice);
    Ok(to_db_floored(worst))
}

/// Worst-case aggregate interference: the largest, over reference atoms, of
/// the summed cross-term magnitudes in the neighborhood. For symbols bounded
/// by `a_max` the noiseless demodulation error is at most
/// `a_max * interference_bound(..)`. Linear scale.
pub fn interference_bound(
    proto: &Prototype,
    n_subcarriers: usize,
    neighborhood: usize,
    lattice: Lattice,
) -> Result<f64> {
    check_defect_args(proto, n_subcarriers, neighborhood, lattice)?;
    Ok(scan_cross_terms(proto, n_subcarriers, neighborhood, lattice).1)
}

fn check_defect_args(
    proto: &Prototype,
    n_subcarriers: usize,
    neighborhood: usize,
    lattice: Lattice,
) -> Result<()> {
    if neighborhood == 0 {
        return Err(invalid("neighborhood must be at least 1"));
    }
    if n_subcarriers == 0 {
        return Err(invalid("n_subcarriers must be at least 1"));
    }
    if lattice == Lattice::Oqam && proto.samples_per_symbol() % 2 != 0 {
        return Err(invalid(
            "OQAM lattice needs an even number of samples per symbol",
        ));
    }
    Ok(())
}

/// Returns (largest single cross-term, largest per-reference sum).
fn scan_cross_terms(
    proto: &Prototype,
    n_subcarriers: usize,
    neighborhood: usize,
    lattice: Lattice,
) -> (f64, f64) {
    let nb = neighborhood as i64;
    let dn_max = nb.min(n_subcarriers as i64 - 1);
    let mut worst = 0.0_f64;
    let mut worst_sum = 0.0_f64;
    for (n0, k0) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let reference = atom(proto, lattice, n0, k0);
        let norm = inner(&reference, &reference).re;
        let mut sum = 0.0;
        for dn in -dn_max..=dn_max {
            for dk in -nb..=nb {
                if dn == 0 && dk == 0 {
                    continue;
                }
                let other = atom(proto, lattice, n0 + dn, k0 + dk);
                let ip = inner(&reference, &other) / norm;
                let value = match lattice {
                    Lattice::Qam => ip.norm(),
                    Lattice::Oqam => ip.re.abs(),
                };
                worst = worst.max(value);
                sum += value;
            }
        }
        worst_sum = worst_sum.max(sum);
    }
    (worst, worst_sum)
}

/// Matched term `<g_{n,k}, g_{n,k}>` on the given lattice, normalized by the
/// prototype energy. Equals one for every unit-energy prototype.
pub fn matched_term(proto: &Prototype, lattice: Lattice, n: i64, k: i64) -> f64 {
    let a = atom(proto, lattice, n, k);
    inner(&a, &a).re
}

fn to_db_floored(amplitude: f64) -> f64 {
    if amplitude <= 0.0 {
        return DEFECT_FLOOR_DB;
    }
    (20.0 * amplitude.log10()).max(DEFECT_FLOOR_DB)
}
