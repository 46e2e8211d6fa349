//! Acceptance criteria 1-10; one PASS/FAIL line each, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use serde_json::json;

use dqm_core::collapse::{collapse_trials, expected_collapse_steps, mean_collapse_time, summarize, TwoLevelCollapseState};
use dqm_core::constants::{log_log_slope, minimum_measurable_length, PhysicalConstants};
use dqm_core::experiment::{config_from_value, execute, run_double_slit, run_experiment, DoubleSlitConfig, ExperimentParams};
use dqm_core::grid::{gaussian_packet, inner_product, plane_wave, plane_wave_momentum, well_eigenstate, Grid1D, Units};
use dqm_core::measure::{continuity_residual, position_density, to_momentum, to_position};
use dqm_core::propagator::{analytic_free_gaussian, evolve, evolve_steps, steps_for, Hamiltonian1D};
use dqm_core::protective::{exact_region_averages, protective_shift_an, protective_shift_bn, ProtectiveSetup, RegionPartition};
use dqm_core::sampler::{binned_density, discontinuity_statistic, histogram, simulate_trajectory, DensitySampler, SeededRng};


type Outcome = Result<(bool, String), dqm_core::DqmError>;

fn unitarity() -> Outcome {
    let u = Units::default();
    let g = Grid1D::periodic(-40.0, 40.0, 1024, 0.005)?;
    let psi = gaussian_packet(&g, -10.0, 1.0, 2.0, u)?;
    let h = Hamiltonian1D::free(g, u);
    let e0 = h.energy(&psi, 0.0)?;
    let mut norm_drift: f64 = 0.0;
    let last = evolve_steps(&psi, &h, 0, 10_000, |_, p| norm_drift = norm_drift.max((p.norm_sq() - 1.0).abs()))?;
    let e_drift = ((h.energy(&last, 0.0)? - e0) / e0).abs();
    Ok((
        norm_drift < 1e-10 && e_drift < 1e-8,
        format!("10^4 steps: max norm drift {norm_drift:.2e}, relative <H> drift {e_drift:.2e}"),
    ))
}

fn continuity() -> Outcome {
    let u = Units::default();
    let mut hs = Vec::new();
    let mut rs = Vec::new();
    for (n, dt) in [(512usize, 0.01), (1024, 0.005), (2048, 0.0025)] {
        let g = Grid1D::periodic(-20.0, 20.0, n, dt)?;
        let psi = gaussian_packet(&g, -2.0, 1.0, 2.0, u)?;
        let h = Hamiltonian1D::free(g, u);
        let mut before = psi.clone();
        let mut worst: f64 = 0.0;
        let mut failure = None;
        evolve(&psi, &h, 1.0, |_, p| {
            match continuity_residual(&before, p, dt, u) {
                Ok(r) => worst = worst.max(r),
                Err(e) => failure = Some(e),
            }
            before = p.clone();
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        hs.push(g.dx());
        rs.push(worst);
    }
    let order = log_log_slope(&hs, &rs);
    Ok((
        (1.8..=2.2).contains(&order),
        format!("max residuals {:.2e}, {:.2e}, {:.2e}; order {order:.3}", rs[0], rs[1], rs[2]),
    ))
}

fn momentum_relation() -> Outcome {
    let u = Units::default();
    let g = Grid1D::periodic(-30.0, 30.0, 1024, 0.01)?;
    let sigma = 1.3;
    let psi = gaussian_packet(&g, 2.0, sigma, -1.5, u)?;
    let ms = to_momentum(&psi, u)?;
    let back = to_position(&ms, 0.0, u)?;
    let round_trip = psi
        .amplitudes()
        .iter()
        .zip(back.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let parseval = (ms.norm_sq() - psi.norm_sq()).abs();
    let width = ms.momentum_width();
    let expected = u.hbar / (2.0 * sigma);
    let rel = (width / expected - 1.0).abs();
    Ok((
        round_trip < 1e-12 && parseval < 1e-12 && rel < 0.02,
        format!("round trip {round_trip:.2e}, Parseval {parseval:.2e}, sigma_p {width:.6} vs hbar/2sigma {expected:.6} ({:.3}%)", rel * 100.0),
    ))
}

fn free_particle() -> Outcome {
    let u = Units::default();
    let g = Grid1D::periodic(-30.0, 30.0, 8192, 0.005)?;
    let psi = gaussian_packet(&g, -3.0, 1.0, 1.0, u)?;
    let h = Hamiltonian1D::free(g, u);
    let t = steps_for(2.0 * 3f64.sqrt(), g.dt())? as f64 * g.dt();
    let num = evolve(&psi, &h, t, |_, _| {})?;
    let exact = analytic_free_gaussian(&g, -3.0, 1.0, 1.0, t, u)?;
    let overlap = inner_product(&exact, &num)?.norm();
    Ok((
        overlap > 1.0 - 1e-5,
        format!("overlap {overlap:.10} at t = {t:.3} (width {:.4})", num.position_width()),
    ))
}

fn protective() -> Outcome {
    let u = Units::default();
    let g = Grid1D::hard_wall(0.0, 1.0, 127, 2e-3)?;
    let (psi, _) = well_eigenstate(&g, 1, u)?;
    let h = Hamiltonian1D::free(g, u);
    let part = RegionPartition::uniform(g, 10)?;
    let exact = exact_region_averages(&psi, &part, u.hbar, u.mass)?;

    let mut errors = Vec::new();
    let mut worst_rel: f64 = 0.0;
    let mut min_overlap: f64 = 1.0;
    for (i, t) in [4.0, 8.0, 16.0, 32.0].into_iter().enumerate() {
        let setup = ProtectiveSetup::new(psi.clone(), h.clone(), t, 0.2, None)?;
        let mut err: f64 = 0.0;
        for n in 0..part.len() {
            let m = protective_shift_an(&setup, &part, n)?;
            err = err.max((m.shift - exact[n].0).abs());
            if i == 0 {
                worst_rel = worst_rel.max(((m.shift - exact[n].0) / exact[n].0).abs());
            }
            min_overlap = min_overlap.min(m.final_overlap);
        }
        errors.push(err);
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);

    let ring = Grid1D::periodic(0.0, 1.0, 128, 2e-3)?;
    let wave = plane_wave(&ring, 2)?;
    let current = plane_wave_momentum(&ring, 2, u) / u.mass / ring.length();
    let ring_setup = ProtectiveSetup::new(wave, Hamiltonian1D::free(ring, u), 16.0, 0.2, None)?;
    let ring_part = RegionPartition::uniform(ring, 10)?;
    let mut worst_b: f64 = 0.0;
    for n in 0..ring_part.len() {
        let m = protective_shift_bn(&ring_setup, &ring_part, n)?;
        worst_b = worst_b.max(((m.shift - current) / current).abs());
    }
    Ok((
        worst_rel < 0.01 && monotone && min_overlap > 0.99 && worst_b < 0.01,
        format!(
            "A_n worst rel error {worst_rel:.2e}; adiabatic error over T = 4..32: {}; min overlap {min_overlap:.8}; ring B_n worst rel error {worst_b:.2e}",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" > ")
        ),
    ))
}

fn collapse() -> Outcome {
    let k = PhysicalConstants::natural();
    let mut ok = true;
    let mut worst_z: f64 = 0.0;
    let mut worst_born: f64 = 0.0;
    for rho in [0.25, 0.5, 0.75] {
        for s in [0.1, 0.01] {
            let state = TwoLevelCollapseState::new(rho, s, k)?;
            let records = collapse_trials(&state, 10_000, 2024, 10_000_000)?;
            let st = summarize(&records, k.planck_time())?;
            let z = (st.mean_steps - expected_collapse_steps(rho, s)).abs() / st.steps_stderr;
            let born = (st.branch1_fraction - rho).abs() / (rho * (1.0 - rho) / st.trials as f64).sqrt();
            worst_z = worst_z.max(z);
            worst_born = worst_born.max(born);
            ok &= z < 3.0 && born < 3.0;
        }
    }
    let gaps: Vec<f64> = (2..=6).rev().map(|e| 2f64.powi(-e)).collect();
    let mut taus = Vec::new();
    for &d in &gaps {
        taus.push(mean_collapse_time(d, 0.5, 10_000, &k, 77)?.tau_c);
    }
    let slope = log_log_slope(&gaps, &taus);
    ok &= (slope + 2.0).abs() <= 0.1;
    Ok((
        ok,
        format!("worst |mean - closed form| {worst_z:.2} SE; worst Born deviation {worst_born:.2} sigma; exponent {slope:.4}"),
    ))
}

fn planck() -> Outcome {
    let k = PhysicalConstants::natural();
    let ls: Vec<f64> = (0..=24).map(|i| 10f64.powf(i as f64 / 4.0)).collect();
    let mut mins = Vec::new();
    let mut worst: f64 = 1.0;
    for &l in &ls {
        let m = minimum_measurable_length(l, &k)?.min_uncertainty;
        let ratio = m / (l * k.planck_length().powi(2)).cbrt();
        if ratio.ln().abs() > worst.ln().abs() {
            worst = ratio;
        }
        mins.push(m);
    }
    let slope = log_log_slope(&ls, &mins);
    Ok((
        (slope - 1.0 / 3.0).abs() < 1e-3 && (0.5..=2.0).contains(&worst),
        format!("slope {slope:.6} over 6 decades; min / (L Lp^2)^(1/3) = {worst:.6}"),
    ))
}

fn double_slit() -> Outcome {
    let cfg = config_from_value(&json!({"experiment": "double_slit", "seed": 8}))?;
    let ExperimentParams::DoubleSlit(p) = &cfg.params else {
        unreachable!("double slit config")
    };
    assert_eq!(p.grid, DoubleSlitConfig::DEFAULT_GRID);
    let r = run_double_slit(p, cfg.seed, &cfg.hash())?;
    let heavy: Vec<_> = r.fringes.iter().filter(|(m, _)| *m > 1e-3).collect();
    let all_visited = heavy.iter().all(|(_, c)| *c > 0);
    let (l, rr) = r.lobe_fractions;
    Ok((
        r.l1_ab_mix > 0.1 && r.visibility_ab > 0.5 && r.visibility_mix < 0.1 && l > 0.3 && rr > 0.3 && all_visited,
        format!(
            "L1 {:.3}, V_AB {:.3}, V_mix {:.3}, lobes {l:.3}/{rr:.3}, {} fringes above 1e-3 all visited: {all_visited}",
            r.l1_ab_mix,
            r.visibility_ab,
            r.visibility_mix,
            heavy.len()
        ),
    ))
}

fn sampler() -> Outcome {
    let u = Units::default();
    let g = Grid1D::hard_wall(0.0, 1.0, 127, 1e-3)?;
    let (psi, _) = well_eigenstate(&g, 1, u)?;
    let rho = position_density(&psi);
    let sampler = DensitySampler::new(&rho, &g)?;
    let mut rng = SeededRng::new(31);
    let hist = histogram((0..1_000_000).map(|_| sampler.sample(&mut rng)), &g, 50)?;
    let l1 = hist.l1_distance(&binned_density(&rho, &g, 50)?);

    let ring = Grid1D::periodic(0.0, 1.0, 64, 1e-3)?;
    let flat = plane_wave(&ring, 0)?;
    let h = Hamiltonian1D::free(ring, u);
    let jumps = 100_000u64;
    // consecutive jumps share an endpoint: Var(mean) = 1/(15 M)
    let sigma = (1.0 / (15.0 * jumps as f64)).sqrt();
    let mut ok = l1 < 0.01;
    let mut parts = Vec::new();
    for every in [1u64, 10] {
        let mut rng = SeededRng::for_trial(5, every);
        let traj = simulate_trajectory(&flat, &h, (jumps * every) as f64 * ring.dt(), every, &mut rng)?;
        let mean = discontinuity_statistic(&traj)?;
        ok &= (mean - 1.0 / 3.0).abs() < 3.0 * sigma;
        parts.push(format!("every {every}: {mean:.5}"));
    }
    Ok((
        ok,
        format!("L1 {l1:.4} (10^6 draws); uniform mean jump {} (1/3 +- {:.5})", parts.join(", "), 3.0 * sigma),
    ))
}

fn reproducibility() -> Outcome {
    let configs = [
        json!({"experiment": "double_slit", "seed": 3, "grid": {"x_min": -80.0, "x_max": 80.0, "n_points": 1024},
               "state": {"slit_separation": 8.0}, "schedule": {"screen_time": 10.0}, "sampling": {"draws": 2000}}),
        json!({"experiment": "free_packet", "seed": 3, "grid": {"n_points": 1024}}),
        json!({"experiment": "protect", "seed": 3, "grid": {"n_points": 63}, "schedule": {"duration": 1.0, "regions": 4}}),
        json!({"experiment": "collapse", "seed": 3, "state": {"delta_e": 0.05}, "schedule": {"trials": 500}}),
        json!({"experiment": "planck", "seed": 3}),
        json!({"experiment": "sample", "seed": 3, "sampling": {"draws": 10000}, "schedule": {"jumps": 500}}),
    ];
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    let mut compared = 0;
    for value in &configs {
        let cfg = config_from_value(value)?;
        let a = execute(&cfg, dirs[0].path())?;
        let b = execute(&cfg, dirs[1].path())?;
        for name in &a.files {
            let x = std::fs::read(a.output_dir.join(name))?;
            let y = std::fs::read(b.output_dir.join(name))?;
            if x != y {
                return Ok((false, format!("{} differs between runs", name)));
            }
            compared += 1;
        }
        if run_experiment(&cfg)?.artifacts.is_empty() {
            return Ok((false, format!("{} produced no artifacts", cfg.kind())));
        }
    }
    Ok((true, format!("{compared} CSV payloads byte-identical across re-runs of all 6 experiments")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("unitarity and conservation", unitarity),
        ("continuity law convergence", continuity),
        ("position-momentum relation", momentum_relation),
        ("free-particle oracle", free_particle),
        ("protective measurement", protective),
        ("collapse statistics", collapse),
        ("Planck limit", planck),
        ("double-slit non-additivity", double_slit),
        ("sampler fidelity", sampler),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<28} {}  {} [{:.1}s]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
