//! RMS pulse broadening and analytic PMD power-penalty formulas.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::mc_harness::PenaltyCurve;

/// Which interval the multicarrier per-subcarrier formula divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeNormalization {
    BitInterval,
    SymbolDuration,
}

impl TimeNormalization {
    pub fn name(self) -> &'static str {
        match self {
            TimeNormalization::BitInterval => "bit_interval",
            TimeNormalization::SymbolDuration => "symbol_duration",
        }
    }
}

impl fmt::Display for TimeNormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimeNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bit_interval" => Ok(TimeNormalization::BitInterval),
            "symbol_duration" => Ok(TimeNormalization::SymbolDuration),
            other => Err(invalid(format!("unknown time normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyModel {
    pub coefficient_a: f64,
    pub bit_interval: f64,
    pub symbol_duration: f64,
    pub n_subcarriers: usize,
    pub gamma: f64,
    pub time_normalization: TimeNormalization,
}

impl PenaltyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.coefficient_a > 0.0) {
            return Err(invalid("coefficient A must be positive"));
        }
        if !(self.bit_interval > 0.0 && self.symbol_duration > 0.0) {
            return Err(invalid("bit interval and symbol duration must be positive"));
        }
        if self.n_subcarriers == 0 {
            return Err(invalid("n_subcarriers must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        Ok(())
    }

    fn split(&self) -> f64 {
        self.gamma * (1.0 - self.gamma)
    }

    fn time_base(&self) -> f64 {
        match self.time_normalization {
            TimeNormalization::BitInterval => self.bit_interval,
            TimeNormalization::SymbolDuration => self.symbol_duration,
        }
    }
}

/// Input and PMD-broadened RMS widths, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthPair {
    pub delta1: f64,
    pub delta2: f64,
}

impl WidthPair {
    pub fn new(delta1: f64, delta2: f64) -> Result<Self> {
        if !(delta1 >= 0.0 && delta2 >= delta1) {
            return Err(invalid(format!(
                "widths must satisfy 0 <= delta1 <= delta2, got {delta1}, {delta2}"
            )));
        }
        Ok(WidthPair { delta1, delta2 })
    }
}

/// RMS width of a sampled intensity treated as a density.
///
/// Each sample stands for a cell of constant intensity one sample period
/// wide, so the cell's own variance `dt^2 / 12` is added to the discrete
/// moment; a sampled rectangle then has exactly the width of the continuous
/// one. The result is shift-invariant.
pub fn rms_width(intensity: &[f64], sample_period: f64) -> Result<f64> {
    if !(sample_period > 0.0) {
        return Err(invalid("sample period must be positive"));
    }
    if intensity.iter().any(|v| v.is_nan()) {
        return Err(invalid("intensity contains NaN"));
    }
    let total: f64 = intensity.iter().sum();
    if !(total > 0.0) || intensity.iter().all(|v| *v <= 0.0) {
        return Err(invalid("intensity has no positive samples; width is undefined"));
    }
    let mean = intensity
        .iter()
        .enumerate()
        .map(|(i, v)| i as f64 * v)
        .sum::<f64>()
        / total;
    let variance = intensity
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64 - mean).powi(2) * v)
        .sum::<f64>()
        / total;
    Ok(((variance + 1.0 / 12.0).max(0.0)).sqrt() * sample_period)
}

/// `sqrt(delta1^2 + dgd^2 gamma (1 - gamma))`.
pub fn broadened_width(delta1: f64, dgd: f64, gamma: f64) -> Result<f64> {
    if !(delta1 >= 0.0) {
        return Err(invalid("delta1 must be nonnegative"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok((delta1 * delta1 + dgd * dgd * gamma * (1.0 - gamma)).sqrt())
}

/// `10 log10(delta2 / delta1)` in dB.
pub fn penalty_exact(widths: WidthPair) -> Result<f64> {
    if widths.delta1 == 0.0 {
        return Err(invalid("delta1 is zero; penalty undefined"));
    }
    Ok(10.0 * (widths.delta2 / widths.delta1).log10())
}

/// Single-carrier penalty `A dgd^2 gamma (1 - gamma) / T_b^2`, dB.
pub fn penalty_sc(model: &PenaltyModel, dgd: f64) -> Result<f64> {
    model.validate()?;
    Ok(model.coefficient_a * dgd * dgd * model.split() / model.bit_interval.powi(2))
}

/// Penalty of subcarrier `n` (1-based), whose period is `T / n`, dB.
pub fn penalty_subcarrier(model: &PenaltyModel, n: usize, dgd: f64) -> Result<f64> {
    model.validate()?;
    if n == 0 || n > model.n_subcarriers {
        return Err(invalid(format!(
            "subcarrier {n} outside 1..={}",
            model.n_subcarriers
        )));
    }
    let n = n as f64;
    Ok(model.coefficient_a * model.split() * n * n * dgd * dgd / model.time_base().powi(2))
}

/// Mean-power aggregation `10 log10(mean(10^(eps_n / 10)))`, dB.
pub fn penalty_multicarrier(subcarrier_penalties: &[f64]) -> Result<f64> {
    if subcarrier_penalties.is_empty() {
        return Err(invalid("no subcarrier penalties to aggregate"));
    }
    let mean = subcarrier_penalties
        .iter()
        .map(|e| 10f64.powf(e / 10.0))
        .sum::<f64>()
        / subcarrier_penalties.len() as f64;
    Ok(10.0 * mean.log10())
}

/// Aggregate multicarrier penalty over subcarriers `1..=N`, dB.
pub fn multicarrier_model_penalty(model: &PenaltyModel, dgd: f64) -> Result<f64> {
    let per: Vec<f64> = (1..=model.n_subcarriers)
        .map(|n| penalty_subcarrier(model, n, dgd))
        .collect::<Result<_>>()?;
    penalty_multicarrier(&per)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientFit {
    pub coefficient_a: f64,
    pub residual_rms_db: f64,
}

/// Least-squares fit through the origin of `penalty_db` against
/// `dgd^2 gamma (1 - gamma) / time_base^2`.
pub fn fit_coefficient_a(
    measured: &PenaltyCurve,
    gamma: f64,
    time_base: f64,
) -> Result<CoefficientFit> {
    if !(time_base > 0.0) {
        return Err(invalid("time base must be positive"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("gamma {gamma} outside [0, 1]")));
    }
    let points: Vec<(f64, f64)> = measured
        .records
        .iter()
        .map(|r| {
            let dgd = r.dgd_norm * measured.bit_interval;
            (dgd * dgd * gamma * (1.0 - gamma) / (time_base * time_base), r.penalty_db)
        })
        .collect();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if points.iter().filter(|(x, _)| *x > 0.0).count() == 0 || sxx == 0.0 {
        return Err(Error::DegenerateFit(
            "every point sits at zero DGD (or gamma is 0 or 1)".into(),
        ));
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let a = sxy / sxx;
    let residual = (points.iter().map(|(x, y)| (y - a * x).powi(2)).sum::<f64>()
        / points.len() as f64)
        .sqrt();
    Ok(CoefficientFit {
        coefficient_a: a,
        residual_rms_db: residual,
    })
}

/// DGD (seconds) at which `penalty_sc` reaches `target_db`.
pub fn sc_tolerance(model: &PenaltyModel, target_db: f64) -> Result<f64> {
    model.validate()?;
    Ok(model.bit_interval * (target_db / (model.coefficient_a * model.split())).sqrt())
}
