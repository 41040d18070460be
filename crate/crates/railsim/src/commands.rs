//! The four subcommands.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use railsim_core::measurement::{apm_condition, apm_density, count_distribution, photon_count, HomodyneSampler};
use railsim_core::protocols::{apply_single_rail_unitary, prepare_arbitrary, single_rail_state};
use railsim_core::trajectory::DyneSimulator;
use railsim_core::{GateOutcome, ModeIndex, OutcomeKind, PhaseLaw, PureState, QuadratureGrid, SingleRailQubit};

use crate::config::{parse_state, Cli, Command, ConfigError, Options, SampleKind};
use crate::ensemble::{map_trials, with_pool};
use crate::records::{write_jsonl, write_series_csv, write_state_csv, OutcomeRecord, ProtocolRecord, SeriesRecord, TrajectoryLine};
use crate::stats::{chi_square_counts, chi_square_gof, default_bins, equiprobable_edges, histogram, ks_pvalue, ks_statistic, moments, uniform_phase_cdf};
use crate::summary::Summary;

/// Delay fractions above this get a warning on standard error.
const DELAY_WARN: f64 = 0.01;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<railsim_core::Error> for CliError {
    fn from(e: railsim_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let job = move || match cli.command {
        Command::Sample { kind, opts } => cmd_sample(kind, &opts.resolve()?),
        Command::Prep { opts } => cmd_prep(&opts.resolve()?),
        Command::Gate { opts } => cmd_gate(&opts.resolve()?),
        Command::Trajectory { opts } => cmd_trajectory(&opts.resolve()?),
    };
    with_pool(job).map_err(|e| CliError::Config(ConfigError(e)))?
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn emit<T: Serialize>(opts: &Options, records: &[T], summary: &Summary, dump: Option<&PureState>) -> Result<(), CliError> {
    if let Some(path) = &opts.out {
        let mut w = create(path)?;
        write_jsonl(records, &mut w)?;
        w.flush()?;
    }
    if let (Some(path), Some(state)) = (&opts.dump_state, dump) {
        let mut w = create(path)?;
        write_state_csv(state, &mut w)?;
        w.flush()?;
    }
    let json = summary.to_json();
    match &opts.summary {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(json.as_bytes())?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(json.as_bytes())?,
    }
    Ok(())
}

fn base(command: &str, opts: &Options) -> Result<Summary, CliError> {
    let mut s = Summary {
        command: command.to_string(),
        n: opts.n()?,
        seed: opts.seed(),
        backend: opts.backend_name().to_string(),
        ..Summary::default()
    };
    if opts.is_trajectory() {
        s.dt = Some(opts.dt()?);
        s.pulse = Some(opts.pulse_name().to_string());
    }
    Ok(s)
}

fn fidelity_stats(f: &[f64]) -> (Option<f64>, Option<f64>) {
    if f.is_empty() {
        return (None, None);
    }
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    (Some(min), Some(mean))
}

fn warn_delay(fraction: f64) {
    if fraction > DELAY_WARN {
        eprintln!(
            "warning: feedback delay is {:.3} of the pulse duration; phase estimates will be biased",
            fraction
        );
    }
}

pub fn cmd_sample(kind: SampleKind, opts: &Options) -> Result<(), CliError> {
    let n = opts.n()?;
    let seed = opts.seed();
    let state_name = opts.state.clone().unwrap_or_else(|| "plus-split".to_string());
    let state = parse_state(&state_name)?;
    let backend = opts.backend()?;
    let mode = opts.mode();
    let mut summary = base("sample", opts)?;
    summary.kind = Some(kind.name().to_string());
    summary.state = Some(state_name);
    if let railsim_core::Backend::Trajectory { pulse, delay_steps } = &backend {
        let fraction = *delay_steps as f64 * pulse.dt() / pulse.duration();
        summary.delay_fraction = Some(fraction);
        warn_delay(fraction);
    }
    let grid = QuadratureGrid::default();
    let record = |kind: &OutcomeKind, density: f64, trial: u64| {
        let (value, values) = match kind {
            OutcomeKind::Apm { theta } => (Some(*theta), None),
            OutcomeKind::Homodyne { x, .. } => (Some(*x), None),
            OutcomeKind::PhotonCount(c) => (None, Some(c.clone())),
        };
        OutcomeRecord {
            kind: match kind {
                OutcomeKind::Apm { .. } => "apm",
                OutcomeKind::Homodyne { .. } => "homodyne",
                OutcomeKind::PhotonCount(_) => "count",
            }
            .to_string(),
            value,
            values,
            density,
            seed_path: [seed, trial],
        }
    };

    let outcomes = match kind {
        SampleKind::Apm => {
            let density = apm_density(&state, mode)?;
            let outs = map_trials(n, seed, |i, rng| {
                backend.apm(&state, mode, rng).map(|o| (record(&o.kind, o.density, i), o.posterior))
            })?;
            let thetas: Vec<f64> = outs.iter().filter_map(|(r, _)| r.value).collect();
            let d = ks_statistic(&thetas, |t| density.cdf(t));
            summary.ks_theta = Some(d);
            summary.ks_theta_p = Some(ks_pvalue(d, n));
            summary.histogram = Some(histogram(&thetas, 0.0, std::f64::consts::TAU, 32));
            summary.moments = Some(moments(&thetas));
            summary.policy = opts.is_trajectory().then(|| "adaptive".to_string());
            outs
        }
        SampleKind::Homodyne => {
            let phi = opts.lo_phase()?;
            let sampler = HomodyneSampler::new(&state, mode, phi, &grid)?;
            let outs = map_trials(n, seed, |i, rng| {
                backend
                    .homodyne(&state, mode, phi, &grid, rng)
                    .map(|o| (record(&o.kind, o.density, i), o.posterior))
            })?;
            let xs: Vec<f64> = outs.iter().filter_map(|(r, _)| r.value).collect();
            let d = ks_statistic(&xs, |x| sampler.cdf(x));
            summary.ks_x = Some(d);
            summary.ks_x_p = Some(ks_pvalue(d, n));
            let edges = equiprobable_edges(|x| sampler.cdf(x), default_bins(n), grid.x_min(), grid.x_max());
            summary.chi_square = Some(chi_square_gof(&xs, &edges, |x| sampler.cdf(x)));
            summary.histogram = Some(histogram(&xs, -6.0, 6.0, 48));
            summary.moments = Some(moments(&xs));
            summary.policy = opts.is_trajectory().then(|| format!("homodyne:{phi}"));
            outs
        }
        SampleKind::Count => {
            if opts.is_trajectory() {
                return Err(ConfigError("photon counting has no trajectory backend".into()).into());
            }
            let modes = opts.count_modes()?;
            let dist = count_distribution(&state, &modes)?;
            let outs = map_trials(n, seed, |i, rng| {
                photon_count(&state, &modes, rng).map(|o| (record(&o.kind, o.density, i), o.posterior))
            })?;
            let label = |c: &[u8]| c.iter().map(u8::to_string).collect::<Vec<_>>().join(" ");
            let mut counts: BTreeMap<String, u64> = dist.iter().map(|(c, _)| (label(c), 0)).collect();
            for (r, _) in &outs {
                *counts.entry(label(r.values.as_deref().unwrap_or(&[]))).or_default() += 1;
            }
            let observed: Vec<u64> = dist.iter().map(|(c, _)| counts[&label(c)]).collect();
            let probs: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
            summary.chi_square = Some(chi_square_counts(&observed, &probs, n as f64));
            summary.frequencies = Some(counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect());
            outs
        }
    };
    let (records, posteriors): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    emit(opts, &records, &summary, posteriors.first())
}

pub fn cmd_prep(opts: &Options) -> Result<(), CliError> {
    let spec = opts.prep_spec()?;
    let n = opts.n()?;
    let seed = opts.seed();
    let backend = opts.backend()?;
    let mut summary = base("prep", opts)?;
    let target = spec.target();
    let outs = map_trials(n, seed, |i, rng| {
        let p = prepare_arbitrary(spec, &backend, rng)?;
        let f = p.state.fidelity(&target)?;
        let rec = ProtocolRecord {
            protocol: "prep".into(),
            params: json!({ "alpha": spec.alpha(), "phi": spec.phi() }),
            outcome: "success".into(),
            fidelity: Some(f),
            theta_values: vec![p.theta],
            seed,
            trial: i,
        };
        Ok::<_, railsim_core::Error>((rec, p.state))
    })?;
    let fids: Vec<f64> = outs.iter().filter_map(|(r, _)| r.fidelity).collect();
    let thetas: Vec<f64> = outs.iter().map(|(r, _)| r.theta_values[0]).collect();
    let (min, mean) = fidelity_stats(&fids);
    summary.success_rate = Some(1.0);
    summary.min_fidelity = min;
    summary.mean_fidelity = mean;
    // the phase result is uniform whatever α is
    let d = ks_statistic(&thetas, uniform_phase_cdf);
    summary.ks_theta = Some(d);
    summary.ks_theta_p = Some(ks_pvalue(d, n));
    let (records, states): (Vec<_>, Vec<_>) = outs.into_iter().unzip();
    emit(opts, &records, &summary, states.first())
}

pub fn cmd_gate(opts: &Options) -> Result<(), CliError> {
    let (u_name, u) = opts.unitary()?;
    let (c0, c1) = opts.input()?;
    let n = opts.n()?;
    let seed = opts.seed();
    let backend = opts.backend()?;
    let mut summary = base("gate", opts)?;
    let input = single_rail_state(c0, c1)?;
    let [t0, t1] = u.apply([c0, c1]);
    let target = single_rail_state(t0, t1)?;
    let q = SingleRailQubit::new(ModeIndex(0));
    let input_name = opts.input_name().to_string();
    let outs = map_trials(n, seed, |i, rng| {
        let out = apply_single_rail_unitary(&input, q, &u, &backend, rng)?;
        let fidelity = match &out {
            GateOutcome::Success { state, .. } => Some(state.fidelity(&target)?),
            GateOutcome::Failure { .. } => None,
        };
        let mut params = json!({ "u": u_name, "input": input_name });
        if let GateOutcome::Failure { collapsed, .. } = &out {
            params["collapsed"] = json!(collapsed);
        }
        let rec = ProtocolRecord {
            protocol: "gate".into(),
            params,
            outcome: out.bsm().name().into(),
            fidelity,
            theta_values: out.thetas().to_vec(),
            seed,
            trial: i,
        };
        let state = out.is_success().then(|| out.state().clone());
        Ok::<_, railsim_core::Error>((rec, state))
    })?;
    let mut tally: BTreeMap<String, u64> = BTreeMap::new();
    for (r, _) in &outs {
        *tally.entry(r.outcome.clone()).or_default() += 1;
    }
    let freq = tally.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect();
    let fids: Vec<f64> = outs.iter().filter_map(|(r, _)| r.fidelity).collect();
    let (min, mean) = fidelity_stats(&fids);
    summary.success_rate = Some(fids.len() as f64 / n as f64);
    summary.min_fidelity = min;
    summary.mean_fidelity = mean;
    summary.frequencies = Some(freq);
    let first = outs.iter().find_map(|(_, s)| s.clone());
    let records: Vec<ProtocolRecord> = outs.into_iter().map(|(r, _)| r).collect();
    emit(opts, &records, &summary, first.as_ref())
}

pub fn cmd_trajectory(opts: &Options) -> Result<(), CliError> {
    let n = opts.n()?;
    let seed = opts.seed();
    let state_name = opts.state.clone().unwrap_or_else(|| "plus".to_string());
    let state = parse_state(&state_name)?;
    let mode = opts.mode();
    let pulse = opts.pulse()?;
    let policy = opts.policy()?;
    let fraction = policy.delay_fraction(&pulse);
    warn_delay(fraction);
    let mut summary = base("trajectory", opts)?;
    summary.backend = "trajectory".into();
    summary.dt = Some(pulse.dt());
    summary.pulse = Some(opts.pulse_name().to_string());
    summary.policy = Some(opts.policy_name().to_string());
    summary.state = Some(state_name);
    summary.delay_fraction = Some(fraction);

    let grid = QuadratureGrid::default();
    let sim = DyneSimulator::new(&state, mode, &pulse, policy)?;
    let apm = apm_density(&state, mode).ok();
    let homodyne = match policy.law {
        PhaseLaw::Homodyne { phase } => Some(HomodyneSampler::new(&state, mode, phase, &grid)?),
        _ => None,
    };
    let keep = opts.full_record || opts.series.is_some();
    let outs = map_trials(n, seed, |_, rng| {
        let (rec, posterior) = sim.run(rng, keep)?;
        // analytic conditional state at the observed outcome
        let oracle = match (policy.law, &homodyne, &apm) {
            (PhaseLaw::Adaptive, _, Some(_)) => Some(apm_condition(&state, mode, rec.theta)?.posterior),
            (PhaseLaw::Homodyne { .. }, Some(h), _) => Some(h.condition(rec.x)?.posterior),
            _ => None,
        };
        let fidelity = oracle.map(|o| posterior.fidelity(&o)).transpose()?;
        Ok::<_, railsim_core::Error>((rec, fidelity, posterior))
    })?;

    let thetas: Vec<f64> = outs.iter().map(|(r, _, _)| r.theta).collect();
    let xs: Vec<f64> = outs.iter().map(|(r, _, _)| r.x).collect();
    if let (PhaseLaw::Adaptive, Some(d)) = (policy.law, &apm) {
        let ks = ks_statistic(&thetas, |t| d.cdf(t));
        summary.ks_theta = Some(ks);
        summary.ks_theta_p = Some(ks_pvalue(ks, n));
    }
    if let Some(h) = &homodyne {
        let ks = ks_statistic(&xs, |x| h.cdf(x));
        summary.ks_x = Some(ks);
        summary.ks_x_p = Some(ks_pvalue(ks, n));
    }
    let fids: Vec<f64> = outs.iter().filter_map(|(_, f, _)| *f).collect();
    summary.mean_fidelity = fidelity_stats(&fids).1;
    summary.min_fidelity = fidelity_stats(&fids).0;
    summary.moments = Some(moments(&thetas));
    summary.x_moments = Some(moments(&xs));

    if let Some(path) = &opts.series {
        let mut w = create(path)?;
        write_series_csv(
            outs.iter().enumerate().filter_map(|(i, (r, _, _))| r.series.as_ref().map(|s| (i as u64, s))),
            &mut w,
        )?;
        w.flush()?;
    }
    let records: Vec<TrajectoryLine> = outs
        .iter()
        .enumerate()
        .map(|(i, (r, f, _))| TrajectoryLine {
            trial: i as u64,
            theta: r.theta,
            x: r.x,
            fidelity: *f,
            series: if opts.full_record { r.series.as_ref().map(SeriesRecord::from) } else { None },
        })
        .collect();
    emit(opts, &records, &summary, outs.first().map(|(_, _, p)| p))
}
