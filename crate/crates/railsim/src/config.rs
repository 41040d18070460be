//! Command-line and file configuration.
//!
//! Every option can be given as a flag or as a key of the `--config` JSON
//! object (kebab-case, same names as the flags). Flags win.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Deserialize;

use railsim_core::linear_optics::{dual_rail_bell, single_rail_bell};
use railsim_core::trajectory::PhaseLaw;
use railsim_core::{Backend, FeedbackPolicy, Matrix2, ModeIndex, PrepSpec, PulseKind, PulseShape, PureState, Truncation};

use crate::records::parse_state_csv;

/// Invalid configuration; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Parser, Debug)]
#[command(name = "railsim", version, about = "Single- and dual-rail photonic qubit simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample measurement outcomes of a named state.
    Sample {
        kind: SampleKind,
        #[command(flatten)]
        opts: Options,
    },
    /// Deterministic preparation of α|0⟩ + e^{−iφ}√(1−α²)|1⟩.
    Prep {
        #[command(flatten)]
        opts: Options,
    },
    /// Teleported single-rail gate.
    Gate {
        #[command(flatten)]
        opts: Options,
    },
    /// Dyne detection trajectories.
    Trajectory {
        #[command(flatten)]
        opts: Options,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Apm,
    Homodyne,
    Count,
}

impl SampleKind {
    pub fn name(self) -> &'static str {
        match self {
            SampleKind::Apm => "apm",
            SampleKind::Homodyne => "homodyne",
            SampleKind::Count => "count",
        }
    }
}

#[derive(Args, Deserialize, Debug, Default, Clone, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// Number of trials.
    #[arg(long)]
    pub n: Option<usize>,
    /// Master seed; trial i uses stream i of it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// analytic | trajectory
    #[arg(long)]
    pub backend: Option<String>,
    /// Integrator step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Pulse duration.
    #[arg(long)]
    pub duration: Option<f64>,
    /// flat | expdecay[:rate] | raised-cosine
    #[arg(long)]
    pub pulse: Option<String>,
    /// adaptive | homodyne[:phase] | heterodyne:rate
    #[arg(long)]
    pub policy: Option<String>,
    /// Feedback loop delay, in the same time units as the pulse.
    #[arg(long)]
    pub delay: Option<f64>,
    /// Named state or file:path.csv
    #[arg(long)]
    pub state: Option<String>,
    /// Measured mode.
    #[arg(long)]
    pub mode: Option<usize>,
    /// Comma-separated modes for photon counting.
    #[arg(long)]
    pub modes: Option<String>,
    /// Local-oscillator phase for homodyne sampling.
    #[arg(long)]
    pub lo_phase: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    /// identity | hadamard | z | x | file:u.json
    #[arg(long)]
    pub u: Option<String>,
    /// 0 | 1 | plus | minus
    #[arg(long)]
    pub input: Option<String>,
    /// JSONL output for per-trial records.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON destination; standard output when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Time-series CSV destination.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Include the Φ and I series in each trajectory record.
    #[arg(long)]
    pub full_record: bool,
    /// Write the first trial's output state as CSV.
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! merged {
    ($flags:ident, $file:ident; $($f:ident),*) => {
        Options {
            $($f: $flags.$f.or($file.$f),)*
            full_record: $flags.full_record || $file.full_record,
            config: None,
        }
    };
}

impl Options {
    /// Fill unset options from the `--config` file, if one was given.
    pub fn resolve(self) -> Result<Options, ConfigError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let file: Options = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))?;
        Ok(self.merge(file))
    }

    fn merge(self, file: Options) -> Options {
        let flags = self;
        merged!(flags, file; n, seed, backend, dt, duration, pulse, policy, delay, state, mode, modes,
            lo_phase, alpha, phi, u, input, out, summary, series, dump_state)
    }

    pub fn n(&self) -> Result<usize, ConfigError> {
        match self.n.unwrap_or(1000) {
            0 => bad("--n must be at least 1"),
            n => Ok(n),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn dt(&self) -> Result<f64, ConfigError> {
        let dt = self.dt.unwrap_or(1e-4);
        if !(dt > 0.0 && dt.is_finite()) {
            return bad("--dt must be positive");
        }
        Ok(dt)
    }

    pub fn duration(&self) -> Result<f64, ConfigError> {
        let t = self.duration.unwrap_or(1.0);
        if !(t > 0.0 && t.is_finite()) {
            return bad("--duration must be positive");
        }
        Ok(t)
    }

    pub fn pulse_name(&self) -> &str {
        self.pulse.as_deref().unwrap_or("expdecay:4")
    }

    pub fn pulse(&self) -> Result<PulseShape, ConfigError> {
        let kind = parse_pulse(self.pulse_name())?;
        PulseShape::new(kind, self.dt()?, self.duration()?).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn delay_steps(&self) -> Result<usize, ConfigError> {
        let d = self.delay.unwrap_or(0.0);
        if !(d >= 0.0 && d.is_finite()) {
            return bad("--delay must be non-negative");
        }
        Ok((d / self.dt()?).round() as usize)
    }

    pub fn backend_name(&self) -> &str {
        self.backend.as_deref().unwrap_or("analytic")
    }

    pub fn is_trajectory(&self) -> bool {
        self.backend_name() == "trajectory"
    }

    pub fn backend(&self) -> Result<Backend, ConfigError> {
        match self.backend_name() {
            "analytic" => Ok(Backend::Analytic),
            "trajectory" => Ok(Backend::Trajectory {
                pulse: self.pulse()?,
                delay_steps: self.delay_steps()?,
            }),
            other => bad(format!("unknown backend {other:?}; expected analytic or trajectory")),
        }
    }

    pub fn policy_name(&self) -> &str {
        self.policy.as_deref().unwrap_or("adaptive")
    }

    pub fn policy(&self) -> Result<FeedbackPolicy, ConfigError> {
        let law = parse_policy(self.policy_name())?;
        Ok(FeedbackPolicy {
            law,
            delay_steps: self.delay_steps()?,
        })
    }

    pub fn mode(&self) -> ModeIndex {
        ModeIndex(self.mode.unwrap_or(0))
    }

    pub fn count_modes(&self) -> Result<Vec<ModeIndex>, ConfigError> {
        match &self.modes {
            None => Ok(vec![self.mode()]),
            Some(list) => list
                .split(',')
                .map(|m| m.trim().parse::<usize>().map(ModeIndex))
                .collect::<Result<_, _>>()
                .map_err(|_| ConfigError(format!("bad mode list {list:?}"))),
        }
    }

    pub fn lo_phase(&self) -> Result<f64, ConfigError> {
        finite("--lo-phase", self.lo_phase.unwrap_or(0.0))
    }

    pub fn prep_spec(&self) -> Result<PrepSpec, ConfigError> {
        let Some(alpha) = self.alpha else {
            return bad("prep needs --alpha");
        };
        PrepSpec::new(alpha, self.phi.unwrap_or(0.0)).map_err(|e| ConfigError(format!("invalid preparation: {e}")))
    }

    pub fn unitary(&self) -> Result<(String, Matrix2), ConfigError> {
        let Some(spec) = self.u.as_deref() else {
            return bad("gate needs --u");
        };
        let u = parse_unitary(spec)?;
        u.check_unitary()
            .map_err(|e| ConfigError(format!("--u {spec}: {e}")))?;
        Ok((spec.to_string(), u))
    }

    pub fn input_name(&self) -> &str {
        self.input.as_deref().unwrap_or("0")
    }

    pub fn input(&self) -> Result<(C64, C64), ConfigError> {
        parse_input(self.input_name())
    }
}

fn finite(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        bad(format!("{name} must be finite"))
    }
}

fn number(name: &str, text: &str) -> Result<f64, ConfigError> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError(format!("{name}: {text:?} is not a number")))
}

pub fn parse_pulse(s: &str) -> Result<PulseKind, ConfigError> {
    match s.split_once(':') {
        None if s == "flat" => Ok(PulseKind::Flat),
        None if s == "raised-cosine" => Ok(PulseKind::RaisedCosine),
        None if s == "expdecay" => Ok(PulseKind::ExpDecay { rate: 4.0 }),
        Some(("expdecay", r)) => Ok(PulseKind::ExpDecay {
            rate: number("--pulse", r)?,
        }),
        _ => bad(format!("unknown pulse {s:?}; expected flat, expdecay[:rate] or raised-cosine")),
    }
}

pub fn parse_policy(s: &str) -> Result<PhaseLaw, ConfigError> {
    match s.split_once(':') {
        None if s == "adaptive" => Ok(PhaseLaw::Adaptive),
        None if s == "homodyne" => Ok(PhaseLaw::Homodyne { phase: 0.0 }),
        Some(("homodyne", p)) => Ok(PhaseLaw::Homodyne {
            phase: number("--policy", p)?,
        }),
        Some(("heterodyne", r)) => Ok(PhaseLaw::Heterodyne {
            rate: number("--policy", r)?,
        }),
        _ => bad(format!("unknown policy {s:?}; expected adaptive, homodyne[:phase] or heterodyne:rate")),
    }
}

fn from_polar(r: f64, p: f64) -> C64 {
    C64::from_polar(r, p)
}

/// Named built-in states, or `file:path.csv`.
pub fn parse_state(name: &str) -> Result<PureState, ConfigError> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = Truncation::default();
    let built = match name {
        // a photon split equally over two modes; both names denote it
        "plus-split" | "babichev" => single_rail_bell(),
        "vacuum" => PureState::vacuum(1),
        "one" => PureState::fock(&[1]),
        "plus" => PureState::from_amplitudes(1, t, [(vec![0], C64::new(h, 0.0)), (vec![1], C64::new(h, 0.0))]),
        "bell-dual" => dual_rail_bell(0),
        "bell-single" => single_rail_bell(),
        _ => {
            if let Some(p) = name.strip_prefix("phase:") {
                let phi = number("--state", p)?;
                PureState::from_amplitudes(1, t, [(vec![0], C64::new(h, 0.0)), (vec![1], from_polar(h, phi))])
            } else if let Some(path) = name.strip_prefix("file:") {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read state {path}: {e}")))?;
                return parse_state_csv(&text, t)
                    .and_then(|s| s.normalize().map_err(Into::into))
                    .map_err(|e| ConfigError(format!("state {path}: {e}")));
            } else {
                return bad(format!(
                    "unknown state {name:?}; expected plus-split, babichev, vacuum, one, plus, phase:φ, bell-dual, bell-single or file:path"
                ));
            }
        }
    };
    built.map_err(|e| ConfigError(e.to_string()))
}

/// `identity`, `hadamard`, `z`, `x`, or `file:u.json` holding
/// `[[[re, im], [re, im]], [[re, im], [re, im]]]`.
pub fn parse_unitary(spec: &str) -> Result<Matrix2, ConfigError> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    match spec {
        "identity" => Ok(Matrix2::identity()),
        "hadamard" => Ok(Matrix2::hadamard()),
        "z" => Ok(Matrix2::pauli_z()),
        "x" => Ok(Matrix2([[zero, one], [one, zero]])),
        _ => match spec.strip_prefix("file:") {
            Some(path) => load_unitary(Path::new(path)),
            None => bad(format!("unknown unitary {spec:?}; expected identity, hadamard, z, x or file:path")),
        },
    }
}

fn load_unitary(path: &Path) -> Result<Matrix2, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read unitary {}: {e}", path.display())))?;
    let m: [[[f64; 2]; 2]; 2] = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("unitary {}: {e}", path.display())))?;
    let c = |e: [f64; 2]| C64::new(e[0], e[1]);
    Ok(Matrix2([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]]))
}

pub fn parse_input(name: &str) -> Result<(C64, C64), ConfigError> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        "0" => Ok((C64::new(1.0, 0.0), C64::new(0.0, 0.0))),
        "1" => Ok((C64::new(0.0, 0.0), C64::new(1.0, 0.0))),
        "plus" => Ok((C64::new(h, 0.0), C64::new(h, 0.0))),
        "minus" => Ok((C64::new(h, 0.0), C64::new(-h, 0.0))),
        _ => bad(format!("unknown input {name:?}; expected 0, 1, plus or minus")),
    }
}
