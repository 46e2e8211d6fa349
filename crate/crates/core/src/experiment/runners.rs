//! Experiment bodies. Each runner is pure: it returns artifacts and summary scalars and
//! leaves persistence to the caller.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::Value;

use super::config::*;
use super::table::{Artifact, CsvTable};
use crate::collapse::{collapse_trials, summarize, CollapseOutcome, TwoLevelCollapseState};
use crate::constants::{length_uncertainty_gr, length_uncertainty_qm, log_log_slope, minimum_measurable_length, ClockSpec};
use crate::error::{DqmError, Result};
use crate::grid::{gaussian_packet, inner_product, plane_wave, well_eigenstate, Grid1D, PotentialField, WaveFunction};
use crate::measure::{continuity_residual, position_density, to_momentum};
use crate::propagator::{analytic_free_gaussian, evolve, evolve_steps, free_gaussian_variance, steps_for, Hamiltonian1D};
use crate::protective::{exact_region_averages, reconstruct_measure, ProtectiveSetup, RegionPartition};
use crate::sampler::{binned_density, discontinuity_statistic, histogram, simulate_trajectory, DensitySampler, SeededRng};
use crate::spectrum::bound_state;

/// Artifacts, summary scalars and warnings of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl ExperimentOutput {
    fn scalar(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), Value::from(value));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// Summary scalars as a JSON object.
    pub fn summary_json(&self) -> String {
        serde_json::to_string(&self.summary).expect("summary serializes")
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

/// Density above this at the domain edge means the packet has wrapped around.
pub const WRAP_THRESHOLD: f64 = 1e-6;

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let hash = config.hash();
    match &config.params {
        ExperimentParams::DoubleSlit(p) => run_double_slit(p, config.seed, &hash).map(|r| r.output),
        ExperimentParams::FreePacket(p) => run_free_packet(p, &hash),
        ExperimentParams::Protect(p) => run_protect(p, &hash),
        ExperimentParams::Collapse(p) => run_collapse(p, config.seed, &hash),
        ExperimentParams::Planck(p) => run_planck(p, &hash),
        ExperimentParams::Sample(p) => run_sample(p, config.seed, &hash),
    }
}

fn dump_wavefunction(name: &str, hash: &str, psi: &WaveFunction) -> Artifact {
    let mut t = CsvTable::new(name, hash, &["x", "re", "im", "rho"]);
    let g = psi.grid();
    for (j, a) in psi.amplitudes().iter().enumerate() {
        t.row(&[g.x(j), a.re, a.im, a.norm_sqr()]);
    }
    t.finish()
}

// ---------------------------------------------------------------- double slit

/// Screen densities and derived interference measures.
#[derive(Debug, Clone)]
pub struct DoubleSlitResult {
    pub grid: Grid1D,
    pub rho_ab: Vec<f64>,
    pub rho_a: Vec<f64>,
    pub rho_b: Vec<f64>,
    pub rho_mix: Vec<f64>,
    /// Central fringe window `[-Λ/2, Λ/2]` with `Λ = 2πħt/(m d)`.
    pub window: (f64, f64),
    pub visibility_ab: f64,
    pub visibility_mix: f64,
    pub l1_ab_mix: f64,
    /// `(mass, draws)` per fringe of `ρ_AB`, split at local minima.
    pub fringes: Vec<(f64, u64)>,
    /// Fractions of trajectory points with `x < 0` and `x ≥ 0`.
    pub lobe_fractions: (f64, f64),
    pub output: ExperimentOutput,
}

pub fn visibility(rho: &[f64], grid: &Grid1D, window: (f64, f64)) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (j, &r) in rho.iter().enumerate() {
        let x = grid.x(j);
        if x >= window.0 && x <= window.1 {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if hi + lo > 0.0 {
        (hi - lo) / (hi + lo)
    } else {
        0.0
    }
}

pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// Cell ranges between successive local minima of `rho`.
pub fn fringe_segments(rho: &[f64]) -> Vec<std::ops::Range<usize>> {
    let n = rho.len();
    let mut cuts = vec![0];
    for j in 1..n - 1 {
        if rho[j] < rho[j - 1] && rho[j] <= rho[j + 1] {
            cuts.push(j);
        }
    }
    cuts.push(n);
    cuts.windows(2).map(|w| w[0]..w[1]).collect()
}

fn check_no_wrap(rho: &[f64], label: &str) -> Result<()> {
    let edge = rho[0].max(rho[rho.len() - 1]);
    if edge > WRAP_THRESHOLD {
        return Err(DqmError::Domain(format!(
            "{label} density at the domain edge is {edge:e}; the packet wraps around, widen the grid"
        )));
    }
    Ok(())
}

pub fn run_double_slit(p: &DoubleSlitConfig, seed: u64, hash: &str) -> Result<DoubleSlitResult> {
    let grid = p.grid.build()?;
    if grid.boundary() != crate::grid::Boundary::Periodic {
        return Err(DqmError::UnsupportedBoundary("double slit needs a periodic grid".into()));
    }
    let u = p.units;
    let s = &p.state;
    let a = gaussian_packet(&grid, -0.5 * s.slit_separation, s.slit_width, s.momentum, u)?;
    let b = gaussian_packet(&grid, 0.5 * s.slit_separation, s.slit_width, s.momentum, u)?;
    let ab = a
        .combine(Complex64::from(s.amplitude_a), &b, Complex64::from(s.amplitude_b))?
        .normalize()?;
    let h = Hamiltonian1D::free(grid, u);
    let t = p.schedule.screen_time;

    let (ab_t, (a_t, b_t)) = rayon::join(
        || evolve(&ab, &h, t, |_, _| {}),
        || rayon::join(|| evolve(&a, &h, t, |_, _| {}), || evolve(&b, &h, t, |_, _| {})),
    );
    let (ab_t, a_t, b_t) = (ab_t?, a_t?, b_t?);
    let rho_ab = position_density(&ab_t);
    let rho_a = position_density(&a_t);
    let rho_b = position_density(&b_t);
    check_no_wrap(&rho_ab, "superposed")?;
    check_no_wrap(&rho_a, "slit A")?;
    check_no_wrap(&rho_b, "slit B")?;
    let rho_mix: Vec<f64> = rho_a.iter().zip(&rho_b).map(|(x, y)| 0.5 * (x + y)).collect();

    let t_reached = steps_for(t, grid.dt())? as f64 * grid.dt();
    let spacing = 2.0 * std::f64::consts::PI * u.hbar * t_reached / (u.mass * s.slit_separation);
    let centre = s.momentum / u.mass * t_reached;
    let window = (centre - 0.5 * spacing, centre + 0.5 * spacing);
    let visibility_ab = visibility(&rho_ab, &grid, window);
    let visibility_mix = visibility(&rho_mix, &grid, window);
    let l1_ab_mix = l1_distance(&rho_ab, &rho_mix, grid.dx());

    // iid draws from the screen density, tallied per fringe
    let sampler = DensitySampler::new(&rho_ab, &grid)?;
    let mut rng = SeededRng::for_trial(seed, 0);
    let draws: Vec<f64> = (0..p.sampling.draws).map(|_| sampler.sample(&mut rng)).collect();
    let segments = fringe_segments(&rho_ab);
    let mut fringe_counts = vec![0u64; segments.len()];
    for &x in &draws {
        let cell = grid.cell_of(x).unwrap_or(0);
        let k = segments.partition_point(|r| r.end <= cell).min(segments.len() - 1);
        fringe_counts[k] += 1;
    }
    let fringes: Vec<(f64, u64)> = segments
        .iter()
        .zip(&fringe_counts)
        .map(|(r, &c)| (rho_ab[r.clone()].iter().sum::<f64>() * grid.dx(), c))
        .collect();

    let mut traj_rng = SeededRng::for_trial(seed, 1);
    let traj = simulate_trajectory(&ab, &h, t, p.schedule.sample_every, &mut traj_rng)?;
    let left = traj.positions().filter(|&x| x < 0.0).count() as f64 / traj.len() as f64;
    let lobe_fractions = (left, 1.0 - left);

    let mut out = ExperimentOutput::default();
    let mut screen = CsvTable::new("screen.csv", hash, &["x", "rho_ab", "rho_a", "rho_b", "rho_mix"]);
    for j in 0..grid.len() {
        screen.row(&[grid.x(j), rho_ab[j], rho_a[j], rho_b[j], rho_mix[j]]);
    }
    out.artifacts.push(screen.finish());
    out.artifacts.push(dump_wavefunction("psi_ab.csv", hash, &ab_t));
    let hist = histogram(draws.iter().copied(), &grid, p.sampling.bins as usize)?;
    let mut ht = CsvTable::new("histogram.csv", hash, &["x_center", "density"]);
    for (i, d) in hist.density.iter().enumerate() {
        ht.row(&[hist.bin_center(i), *d]);
    }
    out.artifacts.push(ht.finish());
    let half = 0.5 * grid.dx();
    let mut ft = CsvTable::new("fringes.csv", hash, &["x_lo", "x_hi", "mass", "draws"]);
    for (r, (m, c)) in segments.iter().zip(&fringes) {
        ft.raw_row(&[
            super::table::format_number(grid.x(r.start) - half),
            super::table::format_number(grid.x(r.end - 1) + half),
            super::table::format_number(*m),
            c.to_string(),
        ]);
    }
    out.artifacts.push(ft.finish());
    let mut tt = CsvTable::new("trajectory.csv", hash, &["t", "x"]);
    for &(t, x) in traj.samples() {
        tt.row(&[t, x]);
    }
    out.artifacts.push(tt.finish());

    let weighty: Vec<&(f64, u64)> = fringes.iter().filter(|(m, _)| *m > 1e-3).collect();
    out.scalar("screen_time", t_reached);
    out.scalar("fringe_spacing", spacing);
    out.scalar("visibility_ab", visibility_ab);
    out.scalar("visibility_mix", visibility_mix);
    out.scalar("l1_ab_mix", l1_ab_mix);
    out.scalar("fringes_above_1e-3", weighty.len() as f64);
    out.scalar("min_draws_in_fringe", weighty.iter().map(|(_, c)| *c).min().unwrap_or(0) as f64);
    out.scalar("lobe_left", lobe_fractions.0);
    out.scalar("lobe_right", lobe_fractions.1);

    Ok(DoubleSlitResult {
        grid,
        rho_ab,
        rho_a,
        rho_b,
        rho_mix,
        window,
        visibility_ab,
        visibility_mix,
        l1_ab_mix,
        fringes,
        lobe_fractions,
        output: out,
    })
}

// ---------------------------------------------------------------- free packet

pub fn run_free_packet(p: &FreePacketConfig, hash: &str) -> Result<ExperimentOutput> {
    let grid = p.grid.build()?;
    let u = p.units;
    let s = &p.state;
    let psi0 = gaussian_packet(&grid, s.x0, s.sigma, s.p0, u)?;
    let h = Hamiltonian1D::free(grid, u);
    let n_steps = steps_for(p.schedule.t_final, grid.dt())?;
    let e0 = h.energy(&psi0, 0.0)?;

    let mut obs = CsvTable::new(
        "observables.csv",
        hash,
        &["t", "norm", "energy", "mean_x", "width_x", "width_analytic"],
    );
    let mut record = |t: f64, psi: &WaveFunction| -> Result<()> {
        obs.row(&[
            t,
            psi.norm_sq(),
            h.energy(psi, t)?,
            psi.mean_position(),
            psi.position_width(),
            free_gaussian_variance(s.sigma, t, u).sqrt(),
        ]);
        Ok(())
    };
    record(0.0, &psi0)?;
    let mut failure = None;
    let mut max_norm_drift: f64 = 0.0;
    let mut max_residual: f64 = 0.0;
    let mut previous = psi0.clone();
    let mut k = 0u64;
    let last = evolve_steps(&psi0, &h, 0, n_steps, |t, psi| {
        k += 1;
        max_norm_drift = max_norm_drift.max((psi.norm_sq() - 1.0).abs());
        match continuity_residual(&previous, psi, grid.dt(), u) {
            Ok(r) => max_residual = max_residual.max(r),
            Err(e) => failure = Some(e),
        }
        previous = psi.clone();
        if k % p.schedule.record_every == 0 || k == n_steps {
            if let Err(e) = record(t, psi) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let t_final = n_steps as f64 * grid.dt();
    let exact = analytic_free_gaussian(&grid, s.x0, s.sigma, s.p0, t_final, u)?;
    let overlap = inner_product(&exact, &last)?.norm();
    let e1 = h.energy(&last, t_final)?;

    let mut out = ExperimentOutput::default();
    out.artifacts.push(obs.finish());
    out.artifacts.push(dump_wavefunction("psi_final.csv", hash, &last));
    let ms = to_momentum(&last, u)?;
    let mut mt = CsvTable::new("momentum.csv", hash, &["p", "re_phi", "im_phi", "f"]);
    for ((pk, phi), f) in ms.momenta().iter().zip(ms.amplitudes()).zip(ms.density()) {
        mt.row(&[*pk, phi.re, phi.im, *f]);
    }
    out.artifacts.push(mt.finish());
    out.scalar("t_final", t_final);
    out.scalar("steps", n_steps as f64);
    out.scalar("analytic_overlap", overlap);
    out.scalar("max_norm_drift", max_norm_drift);
    out.scalar("energy_drift", ((e1 - e0) / e0).abs());
    out.scalar("max_continuity_residual", max_residual);
    out.scalar("final_width", last.position_width());
    out.scalar("final_width_analytic", free_gaussian_variance(s.sigma, t_final, u).sqrt());
    out.scalar("mean_momentum", ms.mean_momentum());
    Ok(out)
}

// ---------------------------------------------------------------- protective tomography

/// Hard-wall double well: a central barrier of `height` over `|x - centre| < width/2`,
/// the left well lowered by `asymmetry`.
pub fn double_well_potential(grid: &Grid1D, height: f64, width: f64, asymmetry: f64) -> Result<PotentialField> {
    let centre = 0.5 * (grid.x_min() + grid.x_max());
    PotentialField::sampled(grid, move |x| {
        if (x - centre).abs() < 0.5 * width {
            height
        } else if x < centre {
            -asymmetry
        } else {
            0.0
        }
    })
}

/// The protected state and its Hamiltonian for a protect config.
pub fn protected_state(p: &ProtectConfig) -> Result<(WaveFunction, Hamiltonian1D)> {
    let grid = p.grid.build()?;
    let u = p.units;
    let s = &p.state;
    match s.kind {
        ProtectedKind::Well => {
            let (psi, _) = well_eigenstate(&grid, s.level as usize, u)?;
            Ok((psi, Hamiltonian1D::free(grid, u)))
        }
        ProtectedKind::Ring => Ok((plane_wave(&grid, s.k)?, Hamiltonian1D::free(grid, u))),
        ProtectedKind::DoubleWell => {
            if grid.boundary() != crate::grid::Boundary::HardWall {
                return Err(DqmError::UnsupportedBoundary("the double well lives in a hard-wall box".into()));
            }
            let v = double_well_potential(&grid, s.barrier_height, s.barrier_width, s.asymmetry)?;
            let h = Hamiltonian1D::new(grid, u, v);
            let (psi, _) = bound_state(&h, s.level as usize - 1)?;
            Ok((psi, h))
        }
    }
}

pub fn run_protect(p: &ProtectConfig, hash: &str) -> Result<ExperimentOutput> {
    let (psi, h) = protected_state(p)?;
    let grid = *h.grid();
    let u = p.units;
    let setup = ProtectiveSetup::new(
        psi.clone(),
        h,
        p.schedule.duration,
        p.schedule.ramp_fraction,
        p.schedule.pointer_momentum,
    )?;
    let partition = RegionPartition::uniform(grid, p.schedule.regions as usize)?;
    let rec = reconstruct_measure(&setup, &partition)?;
    let exact = exact_region_averages(&psi, &partition, u.hbar, u.mass)?;

    let mut out = ExperimentOutput::default();
    out.warnings = setup.warnings(&partition);
    let mut t = CsvTable::new(
        "regions.csv",
        hash,
        &["region_index", "x_lo", "x_hi", "shift_A", "exact_A", "shift_B", "exact_B"],
    );
    let mut max_rel_a: f64 = 0.0;
    let mut max_abs_b: f64 = 0.0;
    let mut min_overlap: f64 = 1.0;
    let centre = 0.5 * (grid.x_min() + grid.x_max());
    let (mut lobe_left, mut lobe_right) = (0.0, 0.0);
    for n in 0..partition.len() {
        let (lo, hi) = partition.bounds(n);
        let (sa, sb) = (rec.density_shifts[n], rec.flux_shifts[n]);
        let (ea, eb) = exact[n];
        t.raw_row(&[
            n.to_string(),
            super::table::format_number(lo),
            super::table::format_number(hi),
            super::table::format_number(sa.shift),
            super::table::format_number(ea),
            super::table::format_number(sb.shift),
            super::table::format_number(eb),
        ]);
        if ea > 0.0 {
            max_rel_a = max_rel_a.max(((sa.shift - ea) / ea).abs());
        }
        max_abs_b = max_abs_b.max((sb.shift - eb).abs());
        min_overlap = min_overlap.min(sa.final_overlap).min(sb.final_overlap);
        let mass = sa.shift * partition.volume(n);
        if hi <= centre + 1e-12 {
            lobe_left += mass;
        } else if lo >= centre - 1e-12 {
            lobe_right += mass;
        }
    }
    out.artifacts.push(t.finish());
    out.artifacts.push(dump_wavefunction("psi.csv", hash, &psi));
    out.scalar("energy", setup.energy());
    out.scalar("gap", setup.gap());
    out.scalar("pointer_momentum", setup.pointer_momentum(&partition));
    out.scalar("max_rel_error_a", max_rel_a);
    out.scalar("max_abs_error_b", max_abs_b);
    out.scalar("min_overlap", min_overlap);
    if p.state.kind == ProtectedKind::DoubleWell {
        out.scalar("lobe_left", lobe_left);
        out.scalar("lobe_right", lobe_right);
        out.summary
            .insert("both_lobes_occupied".into(), Value::from(lobe_left > 0.3 && lobe_right > 0.3));
    }
    Ok(out)
}

// ---------------------------------------------------------------- collapse

pub fn run_collapse(p: &CollapseConfig, seed: u64, hash: &str) -> Result<ExperimentOutput> {
    let constants = p.state.constants.constants();
    let delta_e = p.state.delta_e * constants.planck_energy();
    let state = TwoLevelCollapseState::new(p.state.rho0, delta_e, constants)?;
    let records = collapse_trials(&state, p.schedule.trials, seed, p.schedule.max_steps)?;

    let mut out = ExperimentOutput::default();
    let mut t = CsvTable::new("trials.csv", hash, &["trial", "steps", "outcome"]);
    for r in &records {
        let outcome = match r.outcome {
            CollapseOutcome::Branch1 => "branch1",
            CollapseOutcome::Branch2 => "branch2",
            CollapseOutcome::Timeout => "timeout",
        };
        t.raw_row(&[r.trial.to_string(), r.steps.to_string(), outcome.to_string()]);
    }
    out.artifacts.push(t.finish());
    let timeouts = records.iter().filter(|r| r.outcome == CollapseOutcome::Timeout).count();
    out.scalar("timeouts", timeouts as f64);
    out.scalar("step_size", state.step_size());
    out.scalar("oscillation_period", state.oscillation_period());
    out.scalar(
        "expected_steps",
        crate::collapse::expected_collapse_steps(p.state.rho0, state.step_size()),
    );
    if timeouts > 0 {
        out.warnings.push(format!("{timeouts} trials hit max_steps = {}", p.schedule.max_steps));
        return Ok(out);
    }
    let stats = summarize(&records, constants.planck_time())?;
    out.scalar("tau_c", stats.tau_c);
    out.scalar("stderr", stats.stderr);
    out.scalar("mean_steps", stats.mean_steps);
    out.scalar("steps_stderr", stats.steps_stderr);
    out.scalar("branch1_fraction", stats.branch1_fraction);
    Ok(out)
}

// ---------------------------------------------------------------- planck

/// Rows of the Planck table: `(L, m*, δL_QM, δL_GR, δL_min)` in the chosen units, plus the
/// fitted log-log exponent of `δL_min` against `L`.
pub fn planck_table(p: &PlanckConfig) -> Result<(Vec<[f64; 5]>, f64)> {
    let k = p.state.constants.constants();
    let mut rows = Vec::with_capacity(p.state.lengths.len());
    for &l in &p.state.lengths {
        let length = l * k.planck_length();
        let m = minimum_measurable_length(length, &k)?;
        let clock = ClockSpec::new(m.optimal_mass, length)?;
        rows.push([
            length,
            m.optimal_mass,
            length_uncertainty_qm(&clock, &k),
            length_uncertainty_gr(&clock, &k),
            m.min_uncertainty,
        ]);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    Ok((rows, log_log_slope(&xs, &ys)))
}

pub fn run_planck(p: &PlanckConfig, hash: &str) -> Result<ExperimentOutput> {
    let (rows, slope) = planck_table(p)?;
    let k = p.state.constants.constants();
    let mut t = CsvTable::new("planck.csv", hash, &["L", "m_star", "dL_qm", "dL_gr", "dL_min", "exponent_fit"]);
    let mut worst: f64 = 1.0;
    for r in &rows {
        t.row(&[r[0], r[1], r[2], r[3], r[4], slope]);
        let reference = (r[0] * k.planck_length().powi(2)).cbrt();
        let ratio = r[4] / reference;
        if (ratio.ln()).abs() > worst.ln().abs() {
            worst = ratio;
        }
    }
    let mut out = ExperimentOutput::default();
    out.artifacts.push(t.finish());
    out.scalar("exponent_fit", slope);
    out.scalar("worst_ratio_to_cube_root", worst);
    Ok(out)
}

// ---------------------------------------------------------------- sampling

pub fn sampled_state(p: &SampleConfig) -> Result<WaveFunction> {
    let grid = p.grid.build()?;
    match p.state.kind {
        SampledKind::Well => Ok(well_eigenstate(&grid, p.state.level as usize, p.units)?.0),
        SampledKind::Uniform => plane_wave(&grid, 0),
        SampledKind::Gaussian => gaussian_packet(&grid, p.state.x0, p.state.sigma, p.state.p0, p.units),
    }
}

pub fn run_sample(p: &SampleConfig, seed: u64, hash: &str) -> Result<ExperimentOutput> {
    let psi = sampled_state(p)?;
    let grid = *psi.grid();
    let rho = position_density(&psi);
    let sampler = DensitySampler::new(&rho, &grid)?;
    let mut rng = SeededRng::for_trial(seed, 0);
    let bins = p.sampling.bins as usize;
    let hist = histogram((0..p.sampling.draws).map(|_| sampler.sample(&mut rng)), &grid, bins)?;
    let reference = binned_density(&rho, &grid, bins)?;
    let l1 = hist.l1_distance(&reference);

    let h = Hamiltonian1D::free(grid, p.units);
    let t_final = (p.schedule.jumps * p.schedule.sample_every) as f64 * grid.dt();
    let mut traj_rng = SeededRng::for_trial(seed, 1);
    let traj = simulate_trajectory(&psi, &h, t_final, p.schedule.sample_every, &mut traj_rng)?;
    let mean_jump = discontinuity_statistic(&traj)?;

    let mut out = ExperimentOutput::default();
    let mut ht = CsvTable::new("histogram.csv", hash, &["x_center", "density"]);
    for (i, d) in hist.density.iter().enumerate() {
        ht.row(&[hist.bin_center(i), *d]);
    }
    out.artifacts.push(ht.finish());
    let mut tt = CsvTable::new("trajectory.csv", hash, &["t", "x"]);
    for &(t, x) in traj.samples() {
        tt.row(&[t, x]);
    }
    out.artifacts.push(tt.finish());
    out.artifacts.push(dump_wavefunction("psi.csv", hash, &psi));
    out.scalar("draws", p.sampling.draws as f64);
    out.scalar("l1_histogram", l1);
    out.scalar("mean_jump", mean_jump);
    out.scalar("jumps", (traj.len() - 1) as f64);
    Ok(out)
}
