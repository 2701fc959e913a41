//! Gray-mapped square QAM.
//!
//! Each axis carries a Gray-labelled PAM symbol. The first axis bit selects
//! the sign (`0` is positive). For 16-QAM the second bit selects the ring:
//! `00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3` before scaling to unit average
//! symbol energy. Bits are ordered in-phase first, quadrature second.

use num_complex::Complex64;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QamOrder {
    Qpsk,
    Qam16,
}

impl QamOrder {
    pub fn from_order(m: u32) -> Result<Self> {
        match m {
            4 => Ok(QamOrder::Qpsk),
            16 => Ok(QamOrder::Qam16),
            other => Err(invalid(format!("unsupported QAM order {other}, expected 4 or 16"))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            QamOrder::Qpsk => 4,
            QamOrder::Qam16 => 16,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        2 * self.bits_per_axis()
    }

    pub fn bits_per_axis(self) -> usize {
        match self {
            QamOrder::Qpsk => 1,
            QamOrder::Qam16 => 2,
        }
    }

    fn scale(self) -> f64 {
        match self {
            QamOrder::Qpsk => 1.0 / 2f64.sqrt(),
            QamOrder::Qam16 => 1.0 / 10f64.sqrt(),
        }
    }

    /// Unscaled PAM level for an axis label, MSB first.
    fn raw_level(self, label: usize) -> f64 {
        match (self, label) {
            (QamOrder::Qpsk, 0) => 1.0,
            (QamOrder::Qpsk, _) => -1.0,
            (QamOrder::Qam16, 0b00) => 3.0,
            (QamOrder::Qam16, 0b01) => 1.0,
            (QamOrder::Qam16, 0b11) => -1.0,
            (QamOrder::Qam16, _) => -3.0,
        }
    }

    /// Scaled amplitude of one axis for the given label.
    pub fn axis_level(self, label: usize) -> f64 {
        self.raw_level(label) * self.scale()
    }
}

fn axis_label(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
}

/// Maps bits to unit-average-energy Gray QAM symbols.
pub fn qam_map(bits: &[u8], order: QamOrder) -> Result<Vec<Complex64>> {
    let bps = order.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(invalid(format!(
            "{} bits is not a multiple of {bps} bits per symbol",
            bits.len()
        )));
    }
    let half = order.bits_per_axis();
    Ok(bits
        .chunks_exact(bps)
        .map(|c| {
            Complex64::new(
                order.axis_level(axis_label(&c[..half])),
                order.axis_level(axis_label(&c[half..])),
            )
        })
        .collect())
}

/// Nearest-level decision on one axis. Equidistant levels resolve to the
/// numerically smallest label.
pub fn pam_decide(x: f64, order: QamOrder) -> usize {
    let labels = 1usize << order.bits_per_axis();
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for label in 0..labels {
        let d = (x - order.axis_level(label)).powi(2);
        if d < best_dist {
            best = label;
            best_dist = d;
        }
    }
    best
}

pub(crate) fn push_label(out: &mut Vec<u8>, label: usize, width: usize) {
    for i in (0..width).rev() {
        out.push(((label >> i) & 1) as u8);
    }
}

/// Minimum-distance hard decisions, inverse of [`qam_map`].
pub fn qam_demap(symbols: &[Complex64], order: QamOrder) -> Vec<u8> {
    let width = order.bits_per_axis();
    let mut out = Vec::with_capacity(symbols.len() * order.bits_per_symbol());
    for s in symbols {
        push_label(&mut out, pam_decide(s.re, order), width);
        push_label(&mut out, pam_decide(s.im, order), width);
    }
    out
}
