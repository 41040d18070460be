//! File formats: state CSV, JSONL trial records, time-series CSV.

use std::io::{self, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use railsim_core::trajectory::TrajectorySeries;
use railsim_core::{PureState, Truncation};

/// Write `occupations,re,im` rows, occupations space-separated, in basis
/// order.
pub fn write_state_csv<W: Write>(s: &PureState, mut w: W) -> io::Result<()> {
    writeln!(w, "occupations,re,im")?;
    for (k, a) in s.iter() {
        let occ: Vec<String> = k.occupations().iter().map(u8::to_string).collect();
        writeln!(w, "{},{:e},{:e}", occ.join(" "), a.re, a.im)?;
    }
    Ok(())
}

pub fn state_csv(s: &PureState) -> String {
    let mut buf = Vec::new();
    write_state_csv(s, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("no amplitudes")]
    Empty,
    #[error(transparent)]
    State(#[from] railsim_core::Error),
}

/// Parse the format written by [`write_state_csv`]. The header is optional.
pub fn parse_state_csv(text: &str, truncation: Truncation) -> Result<PureState, ParseError> {
    let mut amps = Vec::new();
    let mut n_modes = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("occupations")) {
            continue;
        }
        let err = |msg: &str| ParseError::Line {
            line: i + 1,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err("expected three comma-separated fields"));
        }
        let occ: Vec<u8> = fields[0]
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| err("occupations must be small non-negative integers"))?;
        let re: f64 = fields[1].parse().map_err(|_| err("bad real part"))?;
        let im: f64 = fields[2].parse().map_err(|_| err("bad imaginary part"))?;
        match n_modes {
            None => n_modes = Some(occ.len()),
            Some(n) if n != occ.len() => return Err(err("inconsistent number of modes")),
            _ => {}
        }
        amps.push((occ, C64::new(re, im)));
    }
    let n = n_modes.ok_or(ParseError::Empty)?;
    Ok(PureState::from_amplitudes(n, truncation, amps)?)
}

/// One sampled measurement outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub kind: String,
    /// Phase or quadrature value.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    /// Photon counts.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<Vec<u8>>,
    /// Probability density of a continuous outcome, probability of a count.
    pub density: f64,
    /// `[master seed, trial index]`.
    pub seed_path: [u64; 2],
}

/// One protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRecord {
    pub protocol: String,
    pub params: serde_json::Value,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fidelity: Option<f64>,
    pub theta_values: Vec<f64>,
    pub seed: u64,
    pub trial: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    /// `I dt` per step.
    pub current: Vec<f64>,
    /// `J dt` per step.
    pub raw_current: Vec<f64>,
}

impl From<&TrajectorySeries> for SeriesRecord {
    fn from(s: &TrajectorySeries) -> Self {
        SeriesRecord {
            t: s.times.clone(),
            phi: s.phases.clone(),
            current: s.current.clone(),
            raw_current: s.raw_current.clone(),
        }
    }
}

/// One dyne trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLine {
    pub trial: u64,
    pub theta: f64,
    pub x: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub series: Option<SeriesRecord>,
}

/// Serialize each item on its own line.
pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut w: W) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// `trial,k,t,phi,current,raw_current` rows for plotting.
pub fn write_series_csv<'a, W, I>(series: I, mut w: W) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a TrajectorySeries)>,
{
    writeln!(w, "trial,k,t,phi,current,raw_current")?;
    for (trial, s) in series {
        for k in 0..s.times.len() {
            writeln!(
                w,
                "{trial},{k},{},{},{},{}",
                s.times[k], s.phases[k], s.current[k], s.raw_current[k]
            )?;
        }
    }
    Ok(())
}
