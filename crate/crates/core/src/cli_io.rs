//! Run configuration, command dispatch and CSV output.
//!
//! Configuration files are flat `key = value` lines; `#` starts a comment.
//! Every key is optional:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `schemes` | `sc_qpsk,ofdm_qam,fbmc_oqam` | schemes to run |
//! | `n_subcarriers` | 128 | N |
//! | `subcarrier_spacing_hz` | 1e8 | nu0 |
//! | `gamma` | 0.5 | power fraction on the fast PSP |
//! | `qam_order` | 4 | 4 or 16 (SC-QPSK needs 4) |
//! | `rolloff` | 1.0 | SRRC rolloff |
//! | `span` | 4 | SRRC length in periods (`L = span * N` for FBMC) |
//! | `oversampling` | 2 | samples per QAM symbol |
//! | `cp_samples` | 0 | OFDM cyclic prefix |
//! | `placement` | `centered` | `centered` or `one_sided` subcarrier map |
//! | `equalization` | `zf` | `zf` or `none` |
//! | `seed` | 1 | master seed |
//! | `min_errors` | 100 | stop after this many bit errors |
//! | `max_bits` | 20000000 | ... or this many bits |
//! | `ebn0_start_db`, `ebn0_stop_db`, `ebn0_step_db` | 0, 10, 0.5 | Eb/N0 grid |
//! | `dgd_norm` | `0,0.2,0.4,0.8,1` | DGD values in units of `T_b` |
//! | `target_ber` | 1e-3 | BER at which penalties are read |
//! | `coefficient_a` | unset | sets all three per-scheme A values |
//! | `coefficient_a_sc_qpsk` | 68 | |
//! | `coefficient_a_ofdm_qam` | 64 | |
//! | `coefficient_a_fbmc_oqam` | 60 | |
//! | `time_normalization` | `symbol_duration` | interval in the per-subcarrier formula |
//! | `ortho_neighborhood` | 3 | lattice offsets scanned by `ortho-check` |
//!
//! Floating-point CSV fields carry 9 significant digits.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{
    fit_coefficient_a, multicarrier_model_penalty, penalty_sc, PenaltyModel, TimeNormalization,
};
use crate::error::{invalid, Error, Result};
use crate::mc_harness::{
    measure_penalty, sweep_ebn0, Equalization, Scenario, DEFAULT_MAX_BITS, DEFAULT_MIN_ERRORS,
    DEFAULT_TARGET_BER,
};
use crate::modem::{Placement, QamOrder, Scheme, SchemeConfig};
use crate::waveforms::{orthogonality_defect, Lattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BerSweep,
    Penalty,
    Analytic,
    OrthoCheck,
    FitA,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::BerSweep,
        Command::Penalty,
        Command::Analytic,
        Command::OrthoCheck,
        Command::FitA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::BerSweep => "ber-sweep",
            Command::Penalty => "penalty",
            Command::Analytic => "analytic",
            Command::OrthoCheck => "ortho-check",
            Command::FitA => "fit-a",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Command::BerSweep => "scheme,n_subcarriers,gamma,dgd_norm,ebn0_db,bits,errors,ber,ber_ci95",
            Command::Penalty => "scheme,n_subcarriers,gamma,dgd_norm,required_ebn0_db,penalty_db",
            Command::Analytic => "scheme,model,coefficient_a,time_normalization,dgd_norm,penalty_db",
            Command::OrthoCheck => "prototype,rolloff,span,n_subcarriers,defect_db",
            Command::FitA => "scheme,fitted_a,residual_rms_db",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schemes: Vec<Scheme>,
    pub n_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    pub gamma: f64,
    pub qam_order: QamOrder,
    pub rolloff: f64,
    pub span: usize,
    pub oversampling: usize,
    pub cp_samples: usize,
    pub placement: Placement,
    pub equalization: Equalization,
    pub seed: u64,
    pub min_errors: u64,
    pub max_bits: u64,
    pub ebn0_start_db: f64,
    pub ebn0_stop_db: f64,
    pub ebn0_step_db: f64,
    pub dgd_norm: Vec<f64>,
    pub target_ber: f64,
    pub coefficient_a_sc_qpsk: f64,
    pub coefficient_a_ofdm_qam: f64,
    pub coefficient_a_fbmc_oqam: f64,
    pub time_normalization: TimeNormalization,
    pub ortho_neighborhood: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schemes: Scheme::ALL.to_vec(),
            n_subcarriers: 128,
            subcarrier_spacing_hz: 1e8,
            gamma: 0.5,
            qam_order: QamOrder::Qpsk,
            rolloff: 1.0,
            span: 4,
            oversampling: 2,
            cp_samples: 0,
            placement: Placement::Centered,
            equalization: Equalization::Zf,
            seed: 1,
            min_errors: DEFAULT_MIN_ERRORS,
            max_bits: DEFAULT_MAX_BITS,
            ebn0_start_db: 0.0,
            ebn0_stop_db: 10.0,
            ebn0_step_db: 0.5,
            dgd_norm: vec![0.0, 0.2, 0.4, 0.8, 1.0],
            target_ber: DEFAULT_TARGET_BER,
            coefficient_a_sc_qpsk: 68.0,
            coefficient_a_ofdm_qam: 64.0,
            coefficient_a_fbmc_oqam: 60.0,
            time_normalization: TimeNormalization::SymbolDuration,
            ortho_neighborhood: 3,
        }
    }
}

impl RunConfig {
    pub fn scheme_config(&self, scheme: Scheme) -> Result<SchemeConfig> {
        let cfg = SchemeConfig::build(
            scheme,
            self.n_subcarriers,
            self.subcarrier_spacing_hz,
            self.oversampling,
            self.rolloff,
            self.span,
        )?
        .with_placement(self.placement);
        let cfg = if scheme == Scheme::ScQpsk {
            cfg
        } else {
            cfg.with_qam_order(self.qam_order)?
        };
        if scheme == Scheme::OfdmQam {
            cfg.with_cp(self.cp_samples)
        } else {
            Ok(cfg)
        }
    }

    pub fn scenario(&self, scheme: Scheme, dgd_norm: f64) -> Result<Scenario> {
        let mut s = Scenario::new(self.scheme_config(scheme)?, dgd_norm, self.gamma);
        s.equalization = self.equalization;
        s.seed = self.seed;
        s.min_errors = self.min_errors;
        s.max_bits = self.max_bits;
        s.validate()?;
        Ok(s)
    }

    /// `start, start + step, ...` up to `stop` (inclusive within 1e-9 dB).
    pub fn ebn0_grid(&self) -> Vec<f64> {
        let count = ((self.ebn0_stop_db - self.ebn0_start_db) / self.ebn0_step_db + 1e-9).floor();
        (0..=count as usize)
            .map(|i| self.ebn0_start_db + i as f64 * self.ebn0_step_db)
            .collect()
    }

    pub fn coefficient_a(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::ScQpsk => self.coefficient_a_sc_qpsk,
            Scheme::OfdmQam => self.coefficient_a_ofdm_qam,
            Scheme::FbmcOqam => self.coefficient_a_fbmc_oqam,
        }
    }

    pub fn penalty_model(&self, scheme: Scheme) -> Result<PenaltyModel> {
        let cfg = self.scheme_config(scheme)?;
        let model = PenaltyModel {
            coefficient_a: self.coefficient_a(scheme),
            bit_interval: cfg.bit_interval(),
            symbol_duration: cfg.symbol_duration(),
            n_subcarriers: self.n_subcarriers,
            gamma: self.gamma,
            time_normalization: self.time_normalization,
        };
        model.validate().map_err(|e| config_error("gamma", 0, e.to_string()))?;
        Ok(model)
    }
}

fn config_error(key: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_value<T: FromStr>(key: &str, line: usize, raw: &str, what: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| config_error(key, line, format!("expected {what}, got `{raw}`")))
}

fn parse_list<T: FromStr>(key: &str, line: usize, raw: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = raw.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(config_error(key, line, "empty list entry"));
    }
    items.iter().map(|s| parse_value(key, line, s, what)).collect()
}

fn parse_enum<T: FromStr<Err = Error>>(key: &str, line: usize, raw: &str) -> Result<T> {
    raw.parse().map_err(|e: Error| config_error(key, line, e.to_string()))
}

fn check(ok: bool, key: &str, line: usize, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(config_error(key, line, message))
    }
}

/// Parses and validates a configuration document. Errors name the offending
/// key and its 1-based line (line 0 for cross-field checks on defaults).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(config_error(content, line, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(config_error(key, line, format!("duplicate key (first set on line {first})")));
        }
        apply_key(&mut cfg, key, value, line)?;
    }
    let line_of = |key: &str| seen.get(key).copied().unwrap_or(0);
    if cfg.cp_samples > 0 && cfg.schemes.iter().any(|s| *s != Scheme::OfdmQam) {
        return Err(config_error(
            "cp_samples",
            line_of("cp_samples"),
            "a cyclic prefix is only defined for ofdm_qam; FBMC/OQAM and SC-QPSK run without one",
        ));
    }
    if cfg.qam_order != QamOrder::Qpsk && cfg.schemes.contains(&Scheme::ScQpsk) {
        return Err(config_error("qam_order", line_of("qam_order"), "sc_qpsk requires qam_order = 4"));
    }
    check(
        cfg.ebn0_stop_db >= cfg.ebn0_start_db,
        "ebn0_stop_db",
        line_of("ebn0_stop_db"),
        "must not be below ebn0_start_db",
    )?;
    for scheme in &cfg.schemes {
        cfg.scheme_config(*scheme)
            .map_err(|e| config_error("schemes", line_of("schemes"), e.to_string()))?;
    }
    Ok(cfg)
}

fn apply_key(cfg: &mut RunConfig, key: &str, value: &str, line: usize) -> Result<()> {
    match key {
        "schemes" => {
            let list: Vec<Scheme> = value
                .split(',')
                .map(|s| parse_enum(key, line, s.trim()))
                .collect::<Result<_>>()?;
            check(!list.is_empty(), key, line, "at least one scheme required")?;
            cfg.schemes = list;
        }
        "n_subcarriers" => {
            cfg.n_subcarriers = parse_value(key, line, value, "a positive integer")?;
            check(cfg.n_subcarriers >= 1, key, line, "must be at least 1")?;
        }
        "subcarrier_spacing_hz" => {
            cfg.subcarrier_spacing_hz = parse_value(key, line, value, "a number")?;
            check(
                cfg.subcarrier_spacing_hz > 0.0 && cfg.subcarrier_spacing_hz.is_finite(),
                key,
                line,
                "must be positive",
            )?;
        }
        "gamma" => {
            cfg.gamma = parse_value(key, line, value, "a number")?;
            check((0.0..=1.0).contains(&cfg.gamma), key, line, "must lie in [0, 1]")?;
        }
        "qam_order" => {
            let m: u32 = parse_value(key, line, value, "4 or 16")?;
            cfg.qam_order =
                QamOrder::from_order(m).map_err(|e| config_error(key, line, e.to_string()))?;
        }
        "rolloff" => {
            cfg.rolloff = parse_value(key, line, value, "a number")?;
            check((0.0..=1.0).contains(&cfg.rolloff), key, line, "must lie in [0, 1]")?;
        }
        "span" => {
            cfg.span = parse_value(key, line, value, "a positive integer")?;
            check(cfg.span >= 1, key, line, "must be at least 1")?;
        }
        "oversampling" => {
            cfg.oversampling = parse_value(key, line, value, "a positive integer")?;
            check(cfg.oversampling >= 1, key, line, "must be at least 1")?;
        }
        "cp_samples" => cfg.cp_samples = parse_value(key, line, value, "a nonnegative integer")?,
        "placement" => cfg.placement = parse_enum(key, line, value)?,
        "equalization" => cfg.equalization = parse_enum(key, line, value)?,
        "seed" => cfg.seed = parse_value(key, line, value, "a nonnegative integer")?,
        "min_errors" => {
            cfg.min_errors = parse_value(key, line, value, "a positive integer")?;
            check(cfg.min_errors >= 1, key, line, "must be at least 1")?;
        }
        "max_bits" => {
            let v: f64 = parse_value(key, line, value, "a positive integer")?;
            check(v >= 1.0 && v.fract() == 0.0 && v < 1e18, key, line, "must be a positive integer")?;
            cfg.max_bits = v as u64;
        }
        "ebn0_start_db" | "ebn0_stop_db" => {
            let v: f64 = parse_value(key, line, value, "a number")?;
            check(v.is_finite(), key, line, "must be finite")?;
            if key == "ebn0_start_db" {
                cfg.ebn0_start_db = v;
            } else {
                cfg.ebn0_stop_db = v;
            }
        }
        "ebn0_step_db" => {
            cfg.ebn0_step_db = parse_value(key, line, value, "a number")?;
            check(cfg.ebn0_step_db > 0.0 && cfg.ebn0_step_db.is_finite(), key, line, "must be positive")?;
        }
        "dgd_norm" => {
            cfg.dgd_norm = parse_list(key, line, value, "a list of numbers")?;
            check(
                cfg.dgd_norm.iter().all(|d| *d >= 0.0 && d.is_finite()),
                key,
                line,
                "entries must be finite and >= 0",
            )?;
        }
        "target_ber" => {
            cfg.target_ber = parse_value(key, line, value, "a number")?;
            check(cfg.target_ber > 0.0 && cfg.target_ber < 0.5, key, line, "must lie in (0, 0.5)")?;
        }
        "coefficient_a"
        | "coefficient_a_sc_qpsk"
        | "coefficient_a_ofdm_qam"
        | "coefficient_a_fbmc_oqam" => {
            let a: f64 = parse_value(key, line, value, "a number")?;
            check(a > 0.0 && a.is_finite(), key, line, "must be positive")?;
            match key {
                "coefficient_a_sc_qpsk" => cfg.coefficient_a_sc_qpsk = a,
                "coefficient_a_ofdm_qam" => cfg.coefficient_a_ofdm_qam = a,
                "coefficient_a_fbmc_oqam" => cfg.coefficient_a_fbmc_oqam = a,
                _ => {
                    cfg.coefficient_a_sc_qpsk = a;
                    cfg.coefficient_a_ofdm_qam = a;
                    cfg.coefficient_a_fbmc_oqam = a;
                }
            }
        }
        "time_normalization" => cfg.time_normalization = parse_enum(key, line, value)?,
        "ortho_neighborhood" => {
            cfg.ortho_neighborhood = parse_value(key, line, value, "a positive integer")?;
            check(cfg.ortho_neighborhood >= 1, key, line, "must be at least 1")?;
        }
        _ => return Err(config_error(key, line, "unknown key")),
    }
    Ok(())
}

/// Formats with 9 significant digits, plain decimal for moderate magnitudes
/// and scientific notation otherwise; trailing zeros are dropped.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn unbracketed_hint(e: Error, scheme: Scheme) -> Error {
    match e {
        Error::UnbracketedTarget { target, lowest, highest } => invalid(format!(
            "{scheme}: target BER {target} not bracketed by the simulated range \
             [{lowest}, {highest}]; extend ebn0_start_db/ebn0_stop_db"
        )),
        other => other,
    }
}

/// Produces the CSV text of a command without touching the filesystem.
pub fn render_command(command: Command, cfg: &RunConfig) -> Result<String> {
    let mut out = String::new();
    out.push_str(command.header());
    out.push('\n');
    match command {
        Command::BerSweep => {
            let grid = cfg.ebn0_grid();
            for &scheme in &cfg.schemes {
                for &d in &cfg.dgd_norm {
                    let curve = sweep_ebn0(&cfg.scenario(scheme, d)?, &grid)?;
                    for p in &curve.points {
                        let _ = writeln!(
                            out,
                            "{scheme},{},{},{},{},{},{},{},{}",
                            cfg.n_subcarriers,
                            format_sig(cfg.gamma),
                            format_sig(d),
                            format_sig(p.ebn0_db),
                            p.bits,
                            p.errors,
                            format_sig(p.ber),
                            format_sig(p.ci95)
                        );
                    }
                }
            }
        }
        Command::Penalty => {
            let grid = cfg.ebn0_grid();
            for &scheme in &cfg.schemes {
                let base = cfg.scenario(scheme, 0.0)?;
                let curve = measure_penalty(&base, &cfg.dgd_norm, cfg.target_ber, &grid)
                    .map_err(|e| unbracketed_hint(e, scheme))?;
                for r in &curve.records {
                    let _ = writeln!(
                        out,
                        "{scheme},{},{},{},{},{}",
                        cfg.n_subcarriers,
                        format_sig(cfg.gamma),
                        format_sig(r.dgd_norm),
                        format_sig(r.required_ebn0_db),
                        format_sig(r.penalty_db)
                    );
                }
            }
        }
        Command::Analytic => {
            for &scheme in &cfg.schemes {
                let model = cfg.penalty_model(scheme)?;
                let (label, normalization) = match scheme {
                    Scheme::ScQpsk => ("single_carrier", TimeNormalization::BitInterval),
                    _ => ("multicarrier", cfg.time_normalization),
                };
                for &d in &cfg.dgd_norm {
                    let dgd = d * model.bit_interval;
                    let eps = match scheme {
                        Scheme::ScQpsk => penalty_sc(&model, dgd)?,
                        _ => multicarrier_model_penalty(&model, dgd)?,
                    };
                    let _ = writeln!(
                        out,
                        "{scheme},{label},{},{normalization},{},{}",
                        format_sig(model.coefficient_a),
                        format_sig(d),
                        format_sig(eps)
                    );
                }
            }
        }
        Command::OrthoCheck => {
            for &scheme in &cfg.schemes {
                let lattice = match scheme {
                    Scheme::ScQpsk => continue,
                    Scheme::OfdmQam => Lattice::Qam,
                    Scheme::FbmcOqam => Lattice::Oqam,
                };
                let sc = cfg.scheme_config(scheme)?;
                let proto = &sc.prototype;
                let defect =
                    orthogonality_defect(proto, cfg.n_subcarriers, cfg.ortho_neighborhood, lattice)?;
                let rolloff = proto.kind().rolloff().map(format_sig).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{rolloff},{},{},{}",
                    proto.kind().name(),
                    proto.span_symbols(),
                    cfg.n_subcarriers,
                    format_sig(defect)
                );
            }
        }
        Command::FitA => {
            let grid = cfg.ebn0_grid();
            for &scheme in &cfg.schemes {
                let base = cfg.scenario(scheme, 0.0)?;
                let curve = measure_penalty(&base, &cfg.dgd_norm, cfg.target_ber, &grid)
                    .map_err(|e| unbracketed_hint(e, scheme))?;
                let fit = fit_coefficient_a(&curve, cfg.gamma, curve.bit_interval)?;
                let _ = writeln!(
                    out,
                    "{scheme},{},{}",
                    format_sig(fit.coefficient_a),
                    format_sig(fit.residual_rms_db)
                );
            }
        }
    }
    Ok(out)
}

/// Runs a command and writes its CSV to `out`.
pub fn run_command(command: Command, cfg: &RunConfig, out: &Path) -> Result<()> {
    let csv = render_command(command, cfg)?;
    std::fs::write(out, csv).map_err(|source| Error::Io {
        path: PathBuf::from(out),
        source,
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })?;
    parse_config(&text)
}
