//! Point-set trajectories: positions drawn independently from `ρ(·, t)` at each sampling
//! instant, and the statistics that expose their discontinuity.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DqmError, Result};
use crate::grid::{Boundary, Grid1D, WaveFunction};
use crate::measure::position_density;
use crate::propagator::{evolve_steps, steps_for, Hamiltonian1D};

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn mix_seed(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 stream keyed by a 64-bit seed; identical seeds give identical streams on
/// every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "ChaCha8";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for trial `trial` of a run seeded with `seed`.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        Self::new(mix_seed(seed ^ mix_seed(trial)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Tolerance on `sum ρ dx = 1` accepted by the sampler.
pub const DENSITY_TOLERANCE: f64 = 1e-6;

/// Inverse-CDF sampler over lattice cells, uniform within each cell.
#[derive(Debug, Clone)]
pub struct DensitySampler {
    grid: Grid1D,
    cumulative: Vec<f64>,
}

impl DensitySampler {
    pub fn new(rho: &[f64], grid: &Grid1D) -> Result<Self> {
        if rho.len() != grid.len() {
            return Err(DqmError::Density(format!(
                "{} density values for a grid of {} points",
                rho.len(),
                grid.len()
            )));
        }
        if let Some(i) = rho.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(DqmError::Density(format!("invalid density {} at site {i}", rho[i])));
        }
        let dx = grid.dx();
        let mut acc = 0.0;
        let cumulative: Vec<f64> = rho
            .iter()
            .map(|r| {
                acc += r * dx;
                acc
            })
            .collect();
        if (acc - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(DqmError::Density(format!("density integrates to {acc}, expected 1")));
        }
        Ok(Self { grid: *grid, cumulative })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let total = *self.cumulative.last().expect("grid has points");
        let u = rng.gen::<f64>() * total;
        let cell = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        let dx = self.grid.dx();
        let x = self.grid.x(cell) + (rng.gen::<f64>() - 0.5) * dx;
        match self.grid.boundary() {
            Boundary::Periodic if x < self.grid.x_min() => x + self.grid.length(),
            _ => x,
        }
    }
}

/// One draw from the density `rho` on `grid`.
pub fn sample_position(rho: &[f64], grid: &Grid1D, rng: &mut impl Rng) -> Result<f64> {
    Ok(DensitySampler::new(rho, grid)?.sample(rng))
}

/// Time-ordered `(t, x)` samples of a discontinuously moving particle.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSetTrajectory {
    samples: Vec<(f64, f64)>,
    source: String,
}

impl PointSetTrajectory {
    pub fn new(samples: Vec<(f64, f64)>, source: impl Into<String>, grid: &Grid1D) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(DqmError::InvalidInput("trajectory times must strictly increase".into()));
        }
        if let Some((t, x)) = samples.iter().find(|(_, x)| !(*x >= grid.x_min() && *x <= grid.x_max())) {
            return Err(DqmError::Domain(format!("sample x = {x} at t = {t} is outside the grid")));
        }
        Ok(Self {
            samples,
            source: source.into(),
        })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Evolves `psi0` to `t_final` and draws one position from `ρ(·, t)` at `t = 0` and after
/// every `sample_every` steps.
pub fn simulate_trajectory(
    psi0: &WaveFunction,
    h: &Hamiltonian1D,
    t_final: f64,
    sample_every: u64,
    rng: &mut impl Rng,
) -> Result<PointSetTrajectory> {
    if sample_every == 0 {
        return Err(DqmError::InvalidInput("sample_every must be at least 1".into()));
    }
    let grid = *h.grid();
    let n_steps = steps_for(t_final, grid.dt())?;
    let mut samples = Vec::with_capacity((n_steps / sample_every + 1) as usize);
    samples.push((0.0, sample_position(&position_density(psi0), &grid, rng)?));

    // a stationary density needs only one sampler
    let frozen = if h.is_time_dependent() { None } else { stationary_sampler(psi0, h)? };
    let mut failure = None;
    let mut counter = 0u64;
    evolve_steps(psi0, h, 0, n_steps, |t, psi| {
        counter += 1;
        if failure.is_some() || counter % sample_every != 0 {
            return;
        }
        let x = match &frozen {
            Some(s) => Ok(s.sample(rng)),
            None => sample_position(&position_density(psi), &grid, rng),
        };
        match x {
            Ok(x) => samples.push((t, x)),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    PointSetTrajectory::new(samples, format!("evolved state on {grid}"), &grid)
}

/// Sampler for `ψ0` when it is an eigenstate of a static `H`, whose density never changes.
fn stationary_sampler(psi0: &WaveFunction, h: &Hamiltonian1D) -> Result<Option<DensitySampler>> {
    let (residual, _) = crate::spectrum::eigen_residual(h, psi0)?;
    let scale = h.kinetic_scale().max(1.0);
    if residual <= 1e-12 * scale {
        Ok(Some(DensitySampler::new(&position_density(psi0), h.grid())?))
    } else {
        Ok(None)
    }
}

/// Mean absolute jump `mean |x_{i+1} - x_i|`.
pub fn discontinuity_statistic(traj: &PointSetTrajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(DqmError::InvalidInput("need at least two samples".into()));
    }
    let s = traj.samples();
    let total: f64 = s.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
    Ok(total / (s.len() - 1) as f64)
}

/// Normalized histogram over `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub x_min: f64,
    pub x_max: f64,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.counts.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.x_min + i as f64 * w, self.x_min + (i + 1) as f64 * w)
    }

    /// `sum |density_i - reference_i| · width` against per-bin reference densities.
    pub fn l1_distance(&self, reference: &[f64]) -> f64 {
        self.density.iter().zip(reference).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.bin_width()
    }
}

pub fn histogram(positions: impl IntoIterator<Item = f64>, grid: &Grid1D, n_bins: usize) -> Result<Histogram> {
    if n_bins < 2 {
        return Err(DqmError::InvalidInput(format!("need at least 2 bins, got {n_bins}")));
    }
    let (lo, hi) = (grid.x_min(), grid.x_max());
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    let mut total = 0u64;
    for x in positions {
        let bin = (((x - lo) / width).floor().max(0.0) as usize).min(n_bins - 1);
        counts[bin] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(DqmError::InvalidInput("cannot histogram an empty trajectory".into()));
    }
    let density = counts.iter().map(|&c| c as f64 / (total as f64 * width)).collect();
    Ok(Histogram {
        x_min: lo,
        x_max: hi,
        counts,
        density,
    })
}

/// Bin averages of the cell-wise constant density `rho` on the bins of a histogram over
/// `[grid.x_min, grid.x_max]`; the reference for [`Histogram::l1_distance`].
pub fn binned_density(rho: &[f64], grid: &Grid1D, n_bins: usize) -> Result<Vec<f64>> {
    if rho.len() != grid.len() {
        return Err(DqmError::Density(format!("{} density values for a grid of {} points", rho.len(), grid.len())));
    }
    if n_bins < 2 {
        return Err(DqmError::InvalidInput(format!("need at least 2 bins, got {n_bins}")));
    }
    let (lo, hi) = (grid.x_min(), grid.x_max());
    let width = (hi - lo) / n_bins as f64;
    let dx = grid.dx();
    let mut mass = vec![0.0; n_bins];
    let mut deposit = |a: f64, b: f64, r: f64| {
        let first = (((a - lo) / width).floor().max(0.0) as usize).min(n_bins - 1);
        for (k, m) in mass.iter_mut().enumerate().skip(first) {
            let (e0, e1) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
            if e0 >= b {
                break;
            }
            *m += r * (b.min(e1) - a.max(e0)).max(0.0);
        }
    };
    for (j, &r) in rho.iter().enumerate() {
        let (a, b) = (grid.x(j) - 0.5 * dx, grid.x(j) + 0.5 * dx);
        match grid.boundary() {
            Boundary::Periodic if a < lo => {
                deposit(lo, b, r);
                deposit(a + grid.length(), hi, r);
            }
            Boundary::Periodic if b > hi => {
                deposit(a, hi, r);
                deposit(lo, b - grid.length(), r);
            }
            _ => deposit(a, b, r),
        }
    }
    Ok(mass.into_iter().map(|m| m / width).collect())
}

/// Histogram of the trajectory positions, normalized to unit integral.
pub fn empirical_density(traj: &PointSetTrajectory, grid: &Grid1D, n_bins: usize) -> Result<Histogram> {
    histogram(traj.positions(), grid, n_bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, plane_wave, Units};

    fn uniform_ring() -> Grid1D {
        Grid1D::periodic(0.0, 1.0, 64, 0.01).unwrap()
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        let xs: Vec<u64> = (0..5).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..5).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(SeededRng::for_trial(7, 0).next_u64(), SeededRng::for_trial(7, 1).next_u64());
    }

    #[test]
    fn point_mass_stays_in_its_cell() {
        let g = Grid1D::hard_wall(0.0, 1.0, 31, 0.01).unwrap();
        let mut rho = vec![0.0; 31];
        rho[12] = 1.0 / g.dx();
        let s = DensitySampler::new(&rho, &g).unwrap();
        let mut rng = SeededRng::new(1);
        for _ in 0..1000 {
            let x = s.sample(&mut rng);
            assert!((x - g.x(12)).abs() <= 0.5 * g.dx());
        }
    }

    #[test]
    fn rejects_unnormalized_density() {
        let g = uniform_ring();
        let rho = vec![1.1; 64];
        assert!(matches!(sample_position(&rho, &g, &mut SeededRng::new(0)), Err(DqmError::Density(_))));
        let mut neg = vec![1.0; 64];
        neg[3] = -0.1;
        assert!(matches!(DensitySampler::new(&neg, &g), Err(DqmError::Density(_))));
    }

    #[test]
    fn gaussian_draws_centre_on_x0() {
        let g = Grid1D::periodic(-20.0, 20.0, 1024, 0.01).unwrap();
        let psi = gaussian_packet(&g, 2.0, 1.0, 0.0, Units::default()).unwrap();
        let s = DensitySampler::new(&position_density(&psi), &g).unwrap();
        let mut rng = SeededRng::new(3);
        let n = 200_000;
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        // |ψ|² has standard deviation σ
        assert!((mean - 2.0).abs() < 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn point_mass_jumps_are_below_one_cell() {
        let g = Grid1D::hard_wall(0.0, 1.0, 31, 0.01).unwrap();
        let mut rho = vec![0.0; 31];
        rho[5] = 1.0 / g.dx();
        let s = DensitySampler::new(&rho, &g).unwrap();
        let mut rng = SeededRng::new(11);
        let samples = (0..500).map(|i| (i as f64, s.sample(&mut rng))).collect();
        let traj = PointSetTrajectory::new(samples, "delta", &g).unwrap();
        assert!(discontinuity_statistic(&traj).unwrap() < g.dx());
    }

    #[test]
    fn trajectory_validation() {
        let g = uniform_ring();
        assert!(PointSetTrajectory::new(vec![(0.0, 0.1), (0.0, 0.2)], "", &g).is_err());
        assert!(PointSetTrajectory::new(vec![(0.0, 1.5)], "", &g).is_err());
        let one = PointSetTrajectory::new(vec![(0.0, 0.5)], "", &g).unwrap();
        assert!(discontinuity_statistic(&one).is_err());
        let empty = PointSetTrajectory::new(vec![], "", &g).unwrap();
        assert!(empirical_density(&empty, &g, 10).is_err());
        assert!(empirical_density(&one, &g, 1).is_err());
    }

    #[test]
    fn histograms_integrate_to_one() {
        let g = uniform_ring();
        let h = Hamiltonian1D::free(g, Units::default());
        let psi = plane_wave(&g, 0).unwrap();
        let traj = simulate_trajectory(&psi, &h, 1.0, 3, &mut SeededRng::new(5)).unwrap();
        assert_eq!(traj.len(), 1 + 100 / 3);
        for bins in [2, 7, 50] {
            let hist = empirical_density(&traj, &g, bins).unwrap();
            let total: f64 = hist.density.iter().sum::<f64>() * hist.bin_width();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let g = Grid1D::periodic(-10.0, 10.0, 128, 0.05).unwrap();
        let h = Hamiltonian1D::free(g, Units::default());
        let psi = gaussian_packet(&g, 0.0, 1.0, 1.0, Units::default()).unwrap();
        let a = simulate_trajectory(&psi, &h, 2.0, 2, &mut SeededRng::new(99)).unwrap();
        let b = simulate_trajectory(&psi, &h, 2.0, 2, &mut SeededRng::new(99)).unwrap();
        assert_eq!(a, b);
        let c = simulate_trajectory(&psi, &h, 2.0, 2, &mut SeededRng::new(100)).unwrap();
        assert_ne!(a, c);
    }
    #[test]
    fn binned_reference_keeps_mass() {
        let g = Grid1D::periodic(-5.0, 5.0, 64, 0.01).unwrap();
        let psi = gaussian_packet(&g, -4.5, 0.5, 0.0, Units::default()).unwrap();
        let rho = crate::measure::position_density(&psi);
        let b = binned_density(&rho, &g, 7).unwrap();
        let total: f64 = b.iter().sum::<f64>() * 10.0 / 7.0;
        assert!((total - 1.0).abs() < 1e-12);
        let hw = Grid1D::hard_wall(0.0, 1.0, 31, 0.01).unwrap();
        let flat = vec![32.0 / 31.0; 31];
        let b = binned_density(&flat, &hw, 4).unwrap();
        assert!((b.iter().sum::<f64>() * 0.25 - 1.0).abs() < 1e-12);
    }
}
