//! Position and momentum measure densities, the position flux and the continuity check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{DqmError, Result};
use crate::grid::{Boundary, Grid1D, Units, WaveFunction};

/// `ρ_i = |ψ_i|²`.
pub fn position_density(psi: &WaveFunction) -> Vec<f64> {
    psi.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

/// `j_i = (ħ/m) Im(conj(ψ_i) (ψ_{i+1} - ψ_{i-1}) / 2dx)`; walls contribute zero amplitude.
pub fn flux_density(psi: &WaveFunction, units: Units) -> Vec<f64> {
    let grid = psi.grid();
    let amps = psi.amplitudes();
    let scale = units.hbar / units.mass / (2.0 * grid.dx());
    (0..amps.len())
        .map(|i| {
            let (l, r) = grid.neighbours(i);
            let right = r.map_or(Complex64::new(0.0, 0.0), |r| amps[r]);
            let left = l.map_or(Complex64::new(0.0, 0.0), |l| amps[l]);
            scale * (amps[i].conj() * (right - left)).im
        })
        .collect()
}

/// Central difference of a lattice field, zero beyond hard walls.
pub(crate) fn central_difference(grid: &Grid1D, f: &[f64]) -> Vec<f64> {
    let inv = 1.0 / (2.0 * grid.dx());
    (0..f.len())
        .map(|i| {
            let (l, r) = grid.neighbours(i);
            (r.map_or(0.0, |r| f[r]) - l.map_or(0.0, |l| f[l])) * inv
        })
        .collect()
}

/// Max-norm of `∂ρ/∂t + ∂j/∂x` between two states one step `dt` apart.
///
/// The time derivative is the forward difference of `ρ`; the flux is taken from the
/// half-step state `(ψ_before + ψ_after)/2`.
pub fn continuity_residual(before: &WaveFunction, after: &WaveFunction, dt: f64, units: Units) -> Result<f64> {
    let grid = before.grid();
    grid.ensure_same_lattice(after.grid())?;
    if !(dt.is_finite() && dt != 0.0) {
        return Err(DqmError::InvalidInput(format!("dt must be finite and nonzero, got {dt}")));
    }
    let half = Complex64::new(0.5, 0.0);
    let mid = before.combine(half, after, half)?;
    let div_j = central_difference(grid, &flux_density(&mid, units));
    let rho0 = position_density(before);
    let rho1 = position_density(after);
    Ok(rho0
        .iter()
        .zip(&rho1)
        .zip(&div_j)
        .map(|((a, b), d)| ((b - a) / dt + d).abs())
        .fold(0.0, f64::max))
}

/// Paired position density and flux on one lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureField {
    grid: Grid1D,
    rho: Vec<f64>,
    flux: Vec<f64>,
}

impl MeasureField {
    pub fn new(grid: Grid1D, rho: Vec<f64>, flux: Vec<f64>) -> Result<Self> {
        if rho.len() != grid.len() || flux.len() != grid.len() {
            return Err(DqmError::InvalidInput("measure field length does not match grid".into()));
        }
        if let Some(i) = rho.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(DqmError::Density(format!("negative or non-finite density at site {i}")));
        }
        let total = rho.iter().sum::<f64>() * grid.dx();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DqmError::Density(format!("density integrates to {total}, expected 1")));
        }
        Ok(Self { grid, rho, flux })
    }

    pub fn from_state(psi: &WaveFunction, units: Units) -> Result<Self> {
        Self::new(*psi.grid(), position_density(psi), flux_density(psi, units))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn flux(&self) -> &[f64] {
        &self.flux
    }
}

/// Momentum amplitudes `φ(p)` on the centered lattice `p_k = 2πħk/L`, `k ∈ [-n/2, n/2)`.
///
/// `φ` is stored with the free phase `e^{-iEt/ħ}` (E = p²/2m) stripped, so a freely
/// evolving state has a time-independent `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    grid: Grid1D,
    momenta: Vec<f64>,
    phi: Vec<Complex64>,
    density: Vec<f64>,
}

impl MomentumState {
    pub fn new(grid: Grid1D, phi: Vec<Complex64>, units: Units) -> Result<Self> {
        if grid.boundary() != Boundary::Periodic {
            return Err(DqmError::UnsupportedBoundary("momentum lattice needs a periodic grid".into()));
        }
        if phi.len() != grid.len() {
            return Err(DqmError::InvalidInput("momentum amplitudes do not match grid".into()));
        }
        let momenta = momentum_lattice(&grid, units);
        let density = phi.iter().map(|a| a.norm_sqr()).collect();
        Ok(Self {
            grid,
            momenta,
            phi,
            density,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.phi
    }

    /// Momentum measure density `f_k = |φ_k|²`.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn dp(&self) -> f64 {
        self.momenta[1] - self.momenta[0]
    }

    /// `sum |φ_k|² dp`.
    pub fn norm_sq(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dp()
    }

    pub fn mean_momentum(&self) -> f64 {
        let total: f64 = self.density.iter().sum();
        self.momenta.iter().zip(&self.density).map(|(p, f)| p * f).sum::<f64>() / total
    }

    pub fn momentum_width(&self) -> f64 {
        let total: f64 = self.density.iter().sum();
        let mean = self.mean_momentum();
        let var = self
            .momenta
            .iter()
            .zip(&self.density)
            .map(|(p, f)| (p - mean).powi(2) * f)
            .sum::<f64>()
            / total;
        var.sqrt()
    }
}

/// Centered momentum lattice of a periodic grid.
pub fn momentum_lattice(grid: &Grid1D, units: Units) -> Vec<f64> {
    let n = grid.len() as i64;
    let dp = 2.0 * PI * units.hbar / grid.length();
    (-n / 2..n / 2).map(|k| k as f64 * dp).collect()
}

fn require_periodic(grid: &Grid1D) -> Result<()> {
    if grid.boundary() == Boundary::Periodic {
        Ok(())
    } else {
        Err(DqmError::UnsupportedBoundary("the momentum transform needs a periodic grid".into()))
    }
}

fn free_energy(p: f64, units: Units) -> f64 {
    p * p / (2.0 * units.mass)
}

/// Momentum amplitudes of a state sampled at `t = 0`.
pub fn to_momentum(psi: &WaveFunction, units: Units) -> Result<MomentumState> {
    to_momentum_at(psi, 0.0, units)
}

/// Momentum amplitudes of a state sampled at time `t`, with the free phase removed.
pub fn to_momentum_at(psi: &WaveFunction, t: f64, units: Units) -> Result<MomentumState> {
    let grid = *psi.grid();
    require_periodic(&grid)?;
    let n = grid.len();
    let mut buf = psi.amplitudes().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let momenta = momentum_lattice(&grid, units);
    let scale = (grid.dx() / (2.0 * PI * units.hbar / grid.length())).sqrt() / (n as f64).sqrt();
    let phi = momenta
        .iter()
        .enumerate()
        .map(|(slot, &p)| {
            // centered slot s holds FFT bin (s - n/2) mod n
            let bin = (slot + n / 2) % n;
            let phase = -p * grid.x_min() / units.hbar + free_energy(p, units) * t / units.hbar;
            buf[bin] * scale * Complex64::from_polar(1.0, phase)
        })
        .collect();
    MomentumState::new(grid, phi, units)
}

/// Inverse of [`to_momentum_at`]: rebuilds `ψ(x, t)` from the stripped amplitudes.
pub fn to_position(ms: &MomentumState, t: f64, units: Units) -> Result<WaveFunction> {
    let grid = *ms.grid();
    require_periodic(&grid)?;
    let n = grid.len();
    let scale = (2.0 * PI * units.hbar / grid.length() / grid.dx()).sqrt() / (n as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (slot, (&p, phi)) in ms.momenta.iter().zip(&ms.phi).enumerate() {
        let bin = (slot + n / 2) % n;
        let phase = p * grid.x_min() / units.hbar - free_energy(p, units) * t / units.hbar;
        buf[bin] = phi * scale * Complex64::from_polar(1.0, phase);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    WaveFunction::from_amplitudes(grid, buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, plane_wave, plane_wave_momentum, well_eigenstate};
    use proptest::prelude::*;

    fn ring(l: f64, n: usize) -> Grid1D {
        Grid1D::periodic(0.0, l, n, 0.01).unwrap()
    }

    #[test]
    fn plane_wave_density_and_flux() {
        // j = (ħ/m) sin(p dx)/dx / L on the lattice; |p dx| ~ 1.5e-3 keeps it within 1e-10 of p/(mL)
        let g = ring(1000.0, 4096);
        let units = Units::default();
        let psi = plane_wave(&g, 1).unwrap();
        let p = plane_wave_momentum(&g, 1, units);
        let rho = position_density(&psi);
        assert!(rho.iter().all(|r| (r - 1.0 / 1000.0).abs() < 1e-15));
        let j = flux_density(&psi, units);
        assert!(j.iter().all(|j| (j - p / 1000.0).abs() < 1e-10));
    }

    #[test]
    fn flux_carries_hbar_over_mass() {
        let g = ring(1000.0, 4096);
        let psi = plane_wave(&g, 1).unwrap();
        let j1 = flux_density(&psi, Units::default());
        let j2 = flux_density(&psi, Units::new(2.0, 0.5).unwrap());
        for (a, b) in j1.iter().zip(&j2) {
            assert!((b - 4.0 * a).abs() < 1e-15);
        }
    }

    #[test]
    fn real_states_carry_no_flux() {
        let g = Grid1D::hard_wall(0.0, 1.0, 63, 0.01).unwrap();
        let (psi, _) = well_eigenstate(&g, 3, Units::default()).unwrap();
        assert!(flux_density(&psi, Units::default()).iter().all(|&j| j == 0.0));
        let r = ring(40.0, 512);
        let packet = gaussian_packet(&r, 20.0, 1.0, 0.0, Units::default()).unwrap();
        assert!(flux_density(&packet, Units::default()).iter().all(|&j| j == 0.0));
    }

    #[test]
    fn packet_flux_integrates_to_velocity() {
        // central differences bias the momentum by ~p³dx²/6; dx ~ 0.01 keeps that below 1e-4
        let g = Grid1D::periodic(-40.0, 40.0, 8192, 0.01).unwrap();
        let units = Units::default();
        let psi = gaussian_packet(&g, 0.0, 2.0, 1.5, units).unwrap();
        let total: f64 = flux_density(&psi, units).iter().sum::<f64>() * g.dx();
        assert!((total - 1.5).abs() < 1e-4, "{total}");
    }

    #[test]
    fn two_lobe_weights() {
        let g = Grid1D::periodic(-40.0, 40.0, 2048, 0.01).unwrap();
        let u = Units::default();
        let a = gaussian_packet(&g, -15.0, 1.0, 0.0, u).unwrap();
        let b = gaussian_packet(&g, 15.0, 1.0, 0.5, u).unwrap();
        let s = Complex64::new(0.5f64.sqrt(), 0.0);
        let psi = a.combine(s, &b, s).unwrap().normalize().unwrap();
        let rho = position_density(&psi);
        let left: f64 = rho.iter().enumerate().filter(|(j, _)| g.x(*j) < 0.0).map(|(_, r)| r).sum::<f64>() * g.dx();
        assert!((left - 0.5).abs() < 1e-6, "{left}");
    }

    #[test]
    fn residual_vanishes_for_static_states() {
        let g = ring(2.0, 64);
        let psi = plane_wave(&g, 3).unwrap();
        assert!(continuity_residual(&psi, &psi, 0.01, Units::default()).unwrap() < 1e-10);
        let other = ring(2.0, 128);
        let phi = plane_wave(&other, 3).unwrap();
        assert!(matches!(
            continuity_residual(&psi, &phi, 0.01, Units::default()),
            Err(DqmError::GridMismatch(_))
        ));
    }

    #[test]
    fn plane_wave_concentrates_on_one_mode() {
        let g = ring(3.0, 128);
        let u = Units::default();
        let ms = to_momentum(&plane_wave(&g, 3).unwrap(), u).unwrap();
        let target = ms.momenta().iter().position(|p| (p - plane_wave_momentum(&g, 3, u)).abs() < 1e-9).unwrap();
        for (k, f) in ms.density().iter().enumerate() {
            if k != target {
                assert!(*f < 1e-20, "mode {k}: {f}");
            }
        }
        assert!((ms.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_momentum_width_is_reciprocal() {
        // |φ(p)|² ∝ exp(-2σ²(p-p0)²/ħ²): standard deviation ħ/(2σ)
        let g = Grid1D::periodic(-50.0, 50.0, 2048, 0.01).unwrap();
        for (sigma, hbar) in [(1.0, 1.0), (2.5, 1.0), (1.5, 0.7)] {
            let u = Units::new(hbar, 1.0).unwrap();
            let psi = gaussian_packet(&g, 3.0, sigma, 0.8, u).unwrap();
            let ms = to_momentum(&psi, u).unwrap();
            let expected = hbar / (2.0 * sigma);
            assert!(((ms.momentum_width() - expected) / expected).abs() < 0.02);
            assert!((ms.mean_momentum() - 0.8).abs() < 1e-6);
        }
    }

    #[test]
    fn transform_requires_periodic_grid() {
        let g = Grid1D::hard_wall(0.0, 1.0, 63, 0.01).unwrap();
        let (psi, _) = well_eigenstate(&g, 1, Units::default()).unwrap();
        assert!(matches!(to_momentum(&psi, Units::default()), Err(DqmError::UnsupportedBoundary(_))));
    }

    fn arb_ring_state() -> impl Strategy<Value = WaveFunction> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32).prop_filter_map("nonzero", |v| {
            let g = Grid1D::periodic(-2.0, 5.0, 32, 0.1).unwrap();
            let amps = v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect();
            let psi = WaveFunction::from_amplitudes(g, amps).ok()?;
            (psi.norm_sq() > 1e-3).then(|| psi.normalize().unwrap())
        })
    }

    proptest! {
        #[test]
        fn parseval_and_round_trips(psi in arb_ring_state(), t in -3.0f64..3.0) {
            let u = Units::new(0.8, 1.3).unwrap();
            let ms = to_momentum_at(&psi, t, u).unwrap();
            prop_assert!((ms.norm_sq() - psi.norm_sq()).abs() < 1e-12);
            let back = to_position(&ms, t, u).unwrap();
            for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
            let again = to_momentum_at(&back, t, u).unwrap();
            for (a, b) in again.amplitudes().iter().zip(ms.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn conjugation_flips_flux(psi in arb_ring_state()) {
            let u = Units::default();
            let j = flux_density(&psi, u);
            let jc = flux_density(&psi.conj(), u);
            for (a, b) in j.iter().zip(&jc) {
                prop_assert_eq!(*a, -*b);
            }
        }
    }
}
