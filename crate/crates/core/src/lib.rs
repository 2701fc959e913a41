//! First-order PMD simulation for single-carrier and multicarrier optical
//! links: waveforms, modems, the two-path fiber channel, analytic penalty
//! formulas and a Monte Carlo BER harness.

pub mod analysis;
pub mod cli_io;
pub mod error;
mod fft;
pub mod mc_harness;
pub mod modem;
pub mod pmd_channel;
pub mod waveforms;

pub use analysis::{PenaltyModel, TimeNormalization, WidthPair};
pub use cli_io::{Command, RunConfig};
pub use error::{Error, Result};
pub use mc_harness::{BerCurve, BerPoint, Equalization, PenaltyCurve, PenaltyRecord, Scenario};
pub use modem::{Placement, QamOrder, SampledSignal, Scheme, SchemeConfig, SymbolGrid};
pub use pmd_channel::{Intensity, JonesMatrix, PmdState, PolarizedSignal};
pub use waveforms::{Lattice, Prototype, PrototypeKind};
