//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use railsim::ensemble::{integrated_quadrature_check, map_trials, mean_current_profile};
use railsim::stats::{chi_square_gof, equiprobable_edges, ks_statistic, ks_two_sample, ks_two_sample_pvalue, moments};
use railsim_core::linear_optics::single_rail_bell;
use railsim_core::measurement::{apm_sample, phase_effect, HomodyneSampler};
use railsim_core::protocols::{apply_single_rail_unitary, prepare_arbitrary, single_rail_state, teleport_single_to_dual};
use railsim_core::trajectory::phase_qubit;
use railsim_core::{
    Backend, BsmOutcome, FeedbackPolicy, GateOutcome, Matrix2, ModeIndex, OutcomeKind, PrepSpec,
    PulseKind, PulseShape, QuadratureGrid, SingleRailQubit,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn cis(p: f64) -> C64 {
    C64::from_polar(1.0, p)
}

fn theta_of(kind: &OutcomeKind) -> f64 {
    match kind {
        OutcomeKind::Apm { theta } => *theta,
        other => panic!("expected a phase outcome, got {other:?}"),
    }
}

fn apm_uniformity() -> Verdict {
    let s = single_rail_bell().unwrap();
    let thetas = map_trials(100_000, 1, |_, rng| apm_sample(&s, ModeIndex(0), rng).map(|o| theta_of(&o.kind))).unwrap();
    let d = ks_statistic(&thetas, |t| (t / TAU).clamp(0.0, 1.0));
    verdict(d < 0.006, format!("KS = {d:.5} (< 0.006)"))
}

fn povm_completeness() -> Verdict {
    let n = 4096;
    let w = TAU / n as f64;
    let mut sum = [[C64::new(0.0, 0.0); 2]; 2];
    for k in 0..n {
        let Matrix2(e) = phase_effect(k as f64 * w);
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += e[i][j] * w;
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((sum[i][j] - id).norm());
        }
    }
    verdict(worst < 1e-10, format!("max |Σ − I| = {worst:.2e} (< 1e-10)"))
}

fn homodyne_density() -> Verdict {
    let s = single_rail_bell().unwrap();
    let grid = QuadratureGrid::default();
    let sampler = HomodyneSampler::new(&s, ModeIndex(0), 0.0, &grid).unwrap();
    let xs = map_trials(100_000, 2, |_, rng| Ok::<_, ()>(sampler.draw(rng))).unwrap();
    let normal = Normal::standard();
    // antiderivative of e^{−x²/2}(1 + x²) / (2√(2π))
    let cdf = |x: f64| normal.cdf(x) - x * (-0.5 * x * x).exp() / (2.0 * (TAU).sqrt());
    let bins = (2.0 * (xs.len() as f64).powf(0.4)).round() as usize;
    let edges = equiprobable_edges(cdf, bins, -8.0, 8.0);
    let chi = chi_square_gof(&xs, &edges, cdf);
    let x2 = moments(&xs).second_moment;
    verdict(
        chi.p_value > 0.01 && (x2 - 2.0).abs() <= 0.05,
        format!("χ² = {:.1} on {} dof, p = {:.3} (> 0.01); E[x²] = {x2:.4} (2 ± 0.05)", chi.statistic, chi.dof, chi.p_value),
    )
}

fn deterministic_preparation() -> Verdict {
    let fids = map_trials(100, 3, |_, rng| {
        let spec = PrepSpec::new(rng.random::<f64>(), rng.random::<f64>() * TAU)?;
        let p = prepare_arbitrary(spec, &Backend::Analytic, rng)?;
        // α|0⟩ + e^{−iφ}√(1−α²)|1⟩
        let a = spec.alpha();
        let target = single_rail_state(C64::new(a, 0.0), cis(-spec.phi()) * (1.0 - a * a).sqrt())?;
        p.state.fidelity(&target)
    })
    .unwrap();
    let worst = fids.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        fids.len() == 100 && worst >= 1.0 - 1e-10,
        format!("success rate {:.1}, min fidelity 1 − {:.1e}", fids.len() as f64 / 100.0, 1.0 - worst),
    )
}

fn trajectory_equivalence() -> Verdict {
    let pulse = PulseShape::new(PulseKind::ExpDecay { rate: 4.0 }, 1e-4, 1.0).unwrap();
    let backend = Backend::Trajectory { pulse, delay_steps: 0 };
    let n = 10_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, phi0) in [0.0, PI / 3.0, PI].into_iter().enumerate() {
        let s = phase_qubit(phi0);
        let thetas = map_trials(n, 50 + i as u64, |_, rng| backend.apm(&s, ModeIndex(0), rng).map(|o| theta_of(&o.kind))).unwrap();
        // ∫₀^θ (1 + cos(s − φ₀)) ds / 2π
        let d = ks_statistic(&thetas, |t| (t + (t - phi0).sin() + phi0.sin()) / TAU);
        pass &= d < 0.03;
        parts.push(format!("KS(φ₀={phi0:.3}) = {d:.4}"));
    }
    // conditional partner state of the split photon: |1⟩ + e^{−iΘ}|0⟩
    let split = single_rail_bell().unwrap();
    let fids = map_trials(n, 60, |_, rng| {
        let out = backend.apm(&split, ModeIndex(0), rng)?;
        let theta = theta_of(&out.kind);
        out.posterior.fidelity(&single_rail_state(cis(-theta), C64::new(1.0, 0.0))?)
    })
    .unwrap();
    let mean = fids.iter().sum::<f64>() / fids.len() as f64;
    pass &= mean > 0.99;
    parts.push(format!("mean posterior fidelity {mean:.5} (> 0.99)"));
    verdict(pass, format!("{} (KS < 0.03)", parts.join(", ")))
}

fn integrated_current() -> Verdict {
    let n = 10_000;
    let exp = PulseShape::new(PulseKind::ExpDecay { rate: 4.0 }, 1e-4, 1.0).unwrap();
    let flat = PulseShape::new(PulseKind::Flat, 1e-4, 1.0).unwrap();
    let xe = integrated_quadrature_check(&exp, 0.0, n, 70).unwrap();
    let xf = integrated_quadrature_check(&flat, 0.0, n, 71).unwrap();
    let m = moments(&xe);
    let d = ks_two_sample(&xe, &xf);
    let p = ks_two_sample_pvalue(d, xe.len(), xf.len());
    verdict(
        m.mean.abs() <= 0.04 && (0.94..=1.06).contains(&m.variance) && p > 0.01,
        format!("mean {:.4} (±0.04), variance {:.4} ([0.94, 1.06]), Flat vs ExpDecay KS p = {p:.3} (> 0.01)", m.mean, m.variance),
    )
}

fn mean_current() -> Verdict {
    let rate = 4.0;
    let pulse = PulseShape::new(PulseKind::ExpDecay { rate }, 1e-3, 1.0).unwrap();
    let plus = single_rail_state(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
    let prof = mean_current_profile(&plus, ModeIndex(0), &pulse, FeedbackPolicy::homodyne(0.0), 100_000, 80).unwrap();
    // ⟨I(t)⟩ = u(t)·⟨a + a†⟩ and ⟨a + a†⟩ = 1 for this input
    let u = |t: f64| rate * (-rate * t).exp() / (1.0 - (-rate).exp());
    let mut worst = 0.0f64;
    let mut outside = 0;
    for ((t, m), se) in prof.t.iter().zip(&prof.mean).zip(&prof.std_err) {
        let z = (m - u(*t)).abs() / se;
        worst = worst.max(z);
        if z > 4.0 {
            outside += 1;
        }
    }
    verdict(
        outside == 0 && !prof.t.is_empty(),
        format!("{} points, max |Ī − u|/σ = {worst:.2}, {outside} beyond 4σ", prof.t.len()),
    )
}

fn teleportation() -> Verdict {
    let n = 10_000;
    let rows = map_trials(n, 90, |_, rng| {
        let t = (1.0 - 2.0 * rng.random::<f64>()).acos();
        let (a, b) = (C64::new((t / 2.0).cos(), 0.0), cis(rng.random::<f64>() * TAU) * (t / 2.0).sin());
        let input = SingleRailQubit::encode(a, b)?;
        let out = teleport_single_to_dual(&input, SingleRailQubit::new(ModeIndex(0)), &Backend::Analytic, rng)?;
        let fid = match &out {
            GateOutcome::Success { state, qubit, .. } => {
                // rail1 carries the photon for logical 0
                let mut amps = Vec::new();
                let (r0, r1) = (qubit.rail0.0, qubit.rail1.0);
                let modes = state.n_modes();
                for (c, hot) in [(a, r1), (b, r0)] {
                    let mut occ = vec![0u8; modes];
                    occ[hot] = 1;
                    amps.push((occ, c));
                }
                let target = railsim_core::PureState::from_amplitudes(modes, state.truncation(), amps)?;
                Some(state.fidelity(&target)?)
            }
            GateOutcome::Failure { .. } => None,
        };
        Ok::<_, railsim_core::Error>((fid, out.bsm() == BsmOutcome::FailZero, a.norm_sqr() / 2.0))
    })
    .unwrap();
    let ok = rows.iter().filter(|r| r.0.is_some()).count();
    let rate = ok as f64 / n as f64;
    let worst = rows.iter().filter_map(|r| r.0).map(|f| (f - 1.0).abs()).fold(0.0, f64::max);
    let zeros = rows.iter().filter(|r| r.1).count() as f64;
    let expected: f64 = rows.iter().map(|r| r.2).sum();
    let sigma = rows.iter().map(|r| r.2 * (1.0 - r.2)).sum::<f64>().sqrt();
    let z = (zeros - expected) / sigma;
    verdict(
        (0.485..=0.515).contains(&rate) && worst <= 1e-12 && z.abs() <= 3.0,
        format!("rate {rate:.4} ([0.485, 0.515]), max |F − 1| = {worst:.1e}, FailZero {zeros} vs {expected:.1} ({z:+.2}σ)"),
    )
}

fn gate_pipeline() -> Verdict {
    let n = 10_000;
    let h = Matrix2::hadamard();
    let zero = single_rail_state(C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap();
    let target = single_rail_state(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)).unwrap();
    let q = SingleRailQubit::new(ModeIndex(0));
    let fids = map_trials(n, 100, |_, rng| match apply_single_rail_unitary(&zero, q, &h, &Backend::Analytic, rng)? {
        GateOutcome::Success { state, .. } => state.fidelity(&target).map(Some),
        GateOutcome::Failure { .. } => Ok(None),
    })
    .unwrap();
    let ok: Vec<f64> = fids.into_iter().flatten().collect();
    let rate = ok.len() as f64 / n as f64;
    let worst = ok.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max);

    // V·U applied in two teleported steps equals one step of VU
    let u = Matrix2::rotation_y(0.9) * Matrix2::phase(0.4);
    let v = Matrix2::phase(-1.3) * Matrix2::hadamard();
    let input = single_rail_state(C64::new(0.6, 0.0), cis(2.1) * 0.8).unwrap();
    let [c0, c1] = (v * u).apply([C64::new(0.6, 0.0), cis(2.1) * 0.8]);
    let direct = single_rail_state(c0, c1).unwrap();
    let mut rng = railsim::ensemble::trial_rng(101, 0);
    let mut succeed = |s: &railsim_core::PureState, m: &Matrix2| loop {
        if let GateOutcome::Success { state, .. } = apply_single_rail_unitary(s, q, m, &Backend::Analytic, &mut rng).unwrap() {
            break state;
        }
    };
    let first = succeed(&input, &u);
    let twice = succeed(&first, &v);
    let once = succeed(&input, &(v * u));
    let comp = (twice.fidelity(&once).unwrap() - 1.0).abs().max((once.fidelity(&direct).unwrap() - 1.0).abs());
    verdict(
        (0.485..=0.515).contains(&rate) && worst <= 1e-12 && comp <= 1e-10,
        format!("rate {rate:.4} ([0.485, 0.515]), max |F − 1| = {worst:.1e}, composition |F − 1| = {comp:.1e}"),
    )
}

fn jsonl(args: &[&str], threads: &str, dir: &std::path::Path) -> Vec<u8> {
    let out = dir.join(format!("run-{threads}.jsonl"));
    let status = Command::new(env!("CARGO_BIN_EXE_railsim"))
        .args(args)
        .args(["--out", out.to_str().unwrap(), "--summary", dir.join("summary.json").to_str().unwrap()])
        .env("RAILSIM_THREADS", threads)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?} failed");
    std::fs::read(out).unwrap()
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["sample", "apm", "--state", "plus-split", "--n", "20000", "--seed", "7"],
        &["sample", "homodyne", "--state", "babichev", "--n", "20000", "--seed", "7"],
        &["sample", "count", "--state", "bell-dual", "--modes", "0,2", "--n", "5000", "--seed", "3"],
        &["prep", "--alpha", "0.6", "--phi", "0.785", "--n", "2000", "--seed", "5"],
        &["gate", "--u", "hadamard", "--input", "0", "--n", "2000", "--seed", "9"],
        &["trajectory", "--state", "plus", "--n", "600", "--dt", "1e-3", "--seed", "11"],
        &["sample", "apm", "--state", "plus-split", "--backend", "trajectory", "--dt", "1e-3", "--n", "600", "--seed", "12"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let a = jsonl(args, "1", dir.path());
        let b = jsonl(args, "4", dir.path());
        if a != b || a.is_empty() {
            differing.push(args[..2].join(" "));
        }
    }
    verdict(
        differing.is_empty(),
        format!("{} commands, RAILSIM_THREADS 1 vs 4, differing: {differing:?}", runs.len()),
    )
}

fn main() {
    let criteria: &[(&str, u64, fn() -> Verdict)] = &[
        ("APM uniformity", 10, apm_uniformity),
        ("POVM completeness", 1, povm_completeness),
        ("homodyne comparison density", 10, homodyne_density),
        ("deterministic preparation", 5, deterministic_preparation),
        ("trajectory/POVM equivalence", 600, trajectory_equivalence),
        ("integrated-current identity", 300, integrated_current),
        ("mean-current profile", 600, mean_current),
        ("teleportation statistics", 30, teleportation),
        ("gate pipeline", 60, gate_pipeline),
        ("determinism", 600, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} [{:.1}s of {}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget,
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
