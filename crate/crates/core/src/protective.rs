//! Adiabatic protective measurement of region-averaged density and flux.
//!
//! The system in a nondegenerate eigenstate is coupled to a pointer through
//! `g(t)·P·O`, with `O` either the normalized region projector `A_n` or the symmetrized
//! region current `B_n`. The pointer momentum `P` is conserved, so the pointer moves by
//! `∂φ/∂P`, the derivative of the accumulated phase, which equals `∫ g(t) ⟨ψ(t)|O|ψ(t)⟩ dt`
//! along the driven evolution. The pointer's momentum distribution is symmetric about
//! zero; its mean shift is the average of the `+P` and `-P` readouts, which removes the
//! odd orders of the linear-response bias.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DqmError, Result};
use crate::grid::{Grid1D, WaveFunction};
use crate::measure::{flux_density, MeasureField};
use crate::propagator::{evolve_steps, steps_for, Hamiltonian1D, HermitianTridiagonal};
use crate::spectrum::{degeneracy, eigen_residual, level_gap};

/// Disjoint cell ranges `V_n` covering the whole lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    grid: Grid1D,
    regions: Vec<Range<usize>>,
}

impl RegionPartition {
    pub fn new(grid: Grid1D, regions: Vec<Range<usize>>) -> Result<Self> {
        if regions.is_empty() {
            return Err(DqmError::InvalidInput("partition needs at least one region".into()));
        }
        let mut next = 0;
        for (k, r) in regions.iter().enumerate() {
            if r.start != next || r.end <= r.start {
                return Err(DqmError::InvalidInput(format!(
                    "region {k} ({r:?}) must be non-empty and start at cell {next}"
                )));
            }
            next = r.end;
        }
        if next != grid.len() {
            return Err(DqmError::InvalidInput(format!(
                "regions cover {next} cells, grid has {}",
                grid.len()
            )));
        }
        Ok(Self { grid, regions })
    }

    /// `count` contiguous regions of near-equal size.
    pub fn uniform(grid: Grid1D, count: usize) -> Result<Self> {
        let n = grid.len();
        if count == 0 || count > n {
            return Err(DqmError::InvalidInput(format!("cannot split {n} cells into {count} regions")));
        }
        let regions = (0..count).map(|k| (k * n / count)..((k + 1) * n / count)).collect();
        Self::new(grid, regions)
    }

    /// Regions split at the given positions (cell `j` goes left of a cut when `x_j < cut`).
    pub fn split_at(grid: Grid1D, cuts: &[f64]) -> Result<Self> {
        let mut bounds = vec![0];
        for &c in cuts {
            bounds.push((0..grid.len()).filter(|&j| grid.x(j) < c).count());
        }
        bounds.push(grid.len());
        let regions = bounds.windows(2).map(|w| w[0]..w[1]).collect();
        Self::new(grid, regions)
    }

    /// Merges regions `n` and `n+1`.
    pub fn merge_adjacent(&self, n: usize) -> Result<Self> {
        if n + 1 >= self.regions.len() {
            return Err(DqmError::InvalidInput(format!("no region after {n}")));
        }
        let mut regions = self.regions.clone();
        let right = regions.remove(n + 1);
        regions[n].end = right.end;
        Self::new(self.grid, regions)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn cells(&self, n: usize) -> Range<usize> {
        self.regions[n].clone()
    }

    /// `v_n`.
    pub fn volume(&self, n: usize) -> f64 {
        self.regions[n].len() as f64 * self.grid.dx()
    }

    /// Outer cell edges of region `n`.
    pub fn bounds(&self, n: usize) -> (f64, f64) {
        let r = &self.regions[n];
        let half = 0.5 * self.grid.dx();
        (self.grid.x(r.start) - half, self.grid.x(r.end - 1) + half)
    }

    pub fn min_volume(&self) -> f64 {
        (0..self.len()).map(|n| self.volume(n)).fold(f64::INFINITY, f64::min)
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n < self.len() {
            Ok(())
        } else {
            Err(DqmError::InvalidInput(format!("region {n} out of range (partition has {})", self.len())))
        }
    }
}

/// Values of `A_n`: `1/v_n` on the cells of `V_n`, zero elsewhere.
pub fn projector_an(partition: &RegionPartition, n: usize) -> Result<Vec<f64>> {
    partition.check_index(n)?;
    let mut values = vec![0.0; partition.grid.len()];
    let inv = 1.0 / partition.volume(n);
    for j in partition.cells(n) {
        values[j] = inv;
    }
    Ok(values)
}

/// `A_n` as a (diagonal) lattice operator.
pub fn projector_operator(partition: &RegionPartition, n: usize) -> Result<HermitianTridiagonal> {
    let mut op = HermitianTridiagonal::zeros(&partition.grid);
    op.diag = projector_an(partition, n)?;
    Ok(op)
}

/// `B_n = (ħ/m)(1/2i)(A_n ∇ + ∇ A_n)` with central differences. Its link `(i, i+1)` carries
/// `-i (ħ/m)(a_i + a_{i+1})/(4dx)`, so `⟨B_n⟩` averages the lattice current over `V_n`.
pub fn current_operator(partition: &RegionPartition, n: usize, hbar_over_mass: f64) -> Result<HermitianTridiagonal> {
    let a = projector_an(partition, n)?;
    let grid = partition.grid;
    let mut op = HermitianTridiagonal::zeros(&grid);
    let scale = hbar_over_mass / (4.0 * grid.dx());
    let len = a.len();
    for (i, link) in op.upper.iter_mut().enumerate() {
        let w = a[i] + a[(i + 1) % len];
        *link = Complex64::new(0.0, -scale * w);
    }
    Ok(op)
}

/// Trapezoidal coupling `g(t)` on `[0, T]`: linear ramps of length `r·T` at both ends and
/// a plateau of height `1/((1-r)T)`, so that `∫ g dt = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSchedule {
    pub duration: f64,
    pub ramp_fraction: f64,
}

impl CouplingSchedule {
    pub fn new(duration: f64, ramp_fraction: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(DqmError::InvalidInput(format!("measurement duration must be positive, got {duration}")));
        }
        if !(ramp_fraction > 0.0 && ramp_fraction < 0.5) {
            return Err(DqmError::InvalidInput(format!("ramp fraction must lie in (0, 0.5), got {ramp_fraction}")));
        }
        Ok(Self {
            duration,
            ramp_fraction,
        })
    }

    pub fn plateau(&self) -> f64 {
        1.0 / ((1.0 - self.ramp_fraction) * self.duration)
    }

    pub fn value(&self, t: f64) -> f64 {
        let ramp = self.ramp_fraction * self.duration;
        let h = self.plateau();
        if t <= 0.0 || t >= self.duration {
            0.0
        } else if t < ramp {
            h * t / ramp
        } else if t > self.duration - ramp {
            h * (self.duration - t) / ramp
        } else {
            h
        }
    }
}

pub const DEFAULT_RAMP_FRACTION: f64 = 0.2;
/// Default coupling keeps `P/v_n` at this fraction of the level gap.
pub const DEFAULT_COUPLING_TO_GAP: f64 = 0.05;

/// A protected eigenstate and the measurement schedule applied to it.
#[derive(Debug, Clone)]
pub struct ProtectiveSetup {
    state: WaveFunction,
    hamiltonian: Hamiltonian1D,
    energy: f64,
    gap: f64,
    degeneracy: usize,
    pointer_momentum: Option<f64>,
    schedule: CouplingSchedule,
}

impl ProtectiveSetup {
    /// Fails with a protection error unless `state` is an eigenstate of the static
    /// `hamiltonian` (`‖Hψ - Eψ‖ < 1e-6`).
    pub fn new(
        state: WaveFunction,
        hamiltonian: Hamiltonian1D,
        duration: f64,
        ramp_fraction: f64,
        pointer_momentum: Option<f64>,
    ) -> Result<Self> {
        if hamiltonian.is_time_dependent() {
            return Err(DqmError::Protection("the protecting Hamiltonian must be static".into()));
        }
        let state = state.normalize()?.on_grid(*hamiltonian.grid())?;
        let (residual, energy) = eigen_residual(&hamiltonian, &state)?;
        if residual >= 1e-6 {
            return Err(DqmError::Protection(format!(
                "state is not an eigenstate of its Hamiltonian (residual {residual:e})"
            )));
        }
        if let Some(p) = pointer_momentum {
            if !p.is_finite() || p < 0.0 {
                return Err(DqmError::InvalidInput(format!("pointer momentum must be non-negative, got {p}")));
            }
        }
        let gap = level_gap(&hamiltonian, energy)?;
        let degeneracy = degeneracy(&hamiltonian, energy)?;
        Ok(Self {
            state,
            hamiltonian,
            energy,
            gap,
            degeneracy,
            pointer_momentum,
            schedule: CouplingSchedule::new(duration, ramp_fraction)?,
        })
    }

    pub fn state(&self) -> &WaveFunction {
        &self.state
    }

    pub fn hamiltonian(&self) -> &Hamiltonian1D {
        &self.hamiltonian
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Number of states sharing the protected energy.
    pub fn degeneracy(&self) -> usize {
        self.degeneracy
    }

    /// Distance to the nearest distinct level.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn schedule(&self) -> CouplingSchedule {
        self.schedule
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        let mut next = self.clone();
        next.schedule = CouplingSchedule::new(duration, self.schedule.ramp_fraction)?;
        Ok(next)
    }

    pub fn with_pointer_momentum(&self, p: Option<f64>) -> Self {
        let mut next = self.clone();
        next.pointer_momentum = p;
        next
    }

    /// `P`, defaulting to `0.05 × gap × min v_n`.
    pub fn pointer_momentum(&self, partition: &RegionPartition) -> f64 {
        self.pointer_momentum
            .unwrap_or(DEFAULT_COUPLING_TO_GAP * self.gap * partition.min_volume())
    }

    /// Adiabaticity concerns for this setup and partition.
    pub fn warnings(&self, partition: &RegionPartition) -> Vec<String> {
        let mut out = Vec::new();
        if self.degeneracy > 1 {
            out.push(format!(
                "level E = {:.6e} is {}-fold degenerate; couplings that mix the partners are not protected",
                self.energy, self.degeneracy
            ));
        }
        let p = self.pointer_momentum(partition);
        let strongest = p / partition.min_volume();
        if strongest > DEFAULT_COUPLING_TO_GAP * self.gap {
            out.push(format!(
                "coupling P/v_n = {strongest:.3e} exceeds {DEFAULT_COUPLING_TO_GAP} x gap ({:.3e}); first-order readout may be biased",
                self.gap
            ));
        }
        let ramp = self.schedule.ramp_fraction * self.schedule.duration;
        let hbar = self.hamiltonian.units().hbar;
        if ramp * self.gap / hbar < 10.0 {
            out.push(format!(
                "ramp time {ramp:.3e} is short against hbar/gap = {:.3e}; switching may not be adiabatic",
                hbar / self.gap
            ));
        }
        out
    }
}

/// Pointer readout for one observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftMeasurement {
    /// Mean pointer shift over `±P`.
    pub shift: f64,
    pub shift_plus: f64,
    pub shift_minus: f64,
    /// `⟨ψ|O|ψ⟩` on the unperturbed protected state.
    pub unperturbed: f64,
    /// Worst `|⟨ψ(0)|ψ(T)⟩|` over the two runs.
    pub final_overlap: f64,
}

/// Runs the driven evolution once and returns `(∫ g⟨O⟩ dt, |⟨ψ(0)|ψ(T)⟩|)`.
fn accumulate_shift(setup: &ProtectiveSetup, observable: &HermitianTridiagonal, p: f64) -> Result<(f64, f64)> {
    let grid = *setup.hamiltonian.grid();
    let dt = grid.dt();
    let n_steps = steps_for(setup.schedule.duration, dt)?.max(2);
    // the schedule is stretched to a whole number of steps so the discrete weights stay symmetric
    let schedule = CouplingSchedule::new(n_steps as f64 * dt, setup.schedule.ramp_fraction)?;

    let h = setup
        .hamiltonian
        .clone()
        .with_drive(observable.clone(), move |t| p * schedule.value(t));
    let mut weighted = 0.0;
    let mut weight_sum = 0.0;
    let final_state = evolve_steps(&setup.state, &h, 0, n_steps, |t, psi| {
        let w = schedule.value(t);
        if w != 0.0 {
            weighted += w * observable.expectation(psi);
            weight_sum += w;
        }
    })?;
    let overlap = crate::grid::inner_product(&setup.state, &final_state)?.norm();
    Ok((weighted / weight_sum, overlap))
}

fn measure(setup: &ProtectiveSetup, observable: HermitianTridiagonal, p: f64) -> Result<ShiftMeasurement> {
    let unperturbed = observable.expectation(&setup.state);
    if p == 0.0 {
        let (shift, overlap) = accumulate_shift(setup, &observable, 0.0)?;
        return Ok(ShiftMeasurement {
            shift,
            shift_plus: shift,
            shift_minus: shift,
            unperturbed,
            final_overlap: overlap,
        });
    }
    let (plus, minus) = rayon::join(
        || accumulate_shift(setup, &observable, p),
        || accumulate_shift(setup, &observable, -p),
    );
    let (plus, minus) = (plus?, minus?);
    Ok(ShiftMeasurement {
        shift: 0.5 * (plus.0 + minus.0),
        shift_plus: plus.0,
        shift_minus: minus.0,
        unperturbed,
        final_overlap: plus.1.min(minus.1),
    })
}

/// Pointer shift for `A_n`; tends to `(1/v_n) ∫_{V_n} |ψ|²` in the adiabatic limit.
pub fn protective_shift_an(setup: &ProtectiveSetup, partition: &RegionPartition, n: usize) -> Result<ShiftMeasurement> {
    setup.hamiltonian.grid().ensure_same_lattice(partition.grid())?;
    let p = setup.pointer_momentum(partition);
    measure(setup, projector_operator(partition, n)?, p)
}

/// Pointer shift for `B_n`; tends to `(1/v_n) ∫_{V_n} j` in the adiabatic limit.
pub fn protective_shift_bn(setup: &ProtectiveSetup, partition: &RegionPartition, n: usize) -> Result<ShiftMeasurement> {
    setup.hamiltonian.grid().ensure_same_lattice(partition.grid())?;
    let p = setup.pointer_momentum(partition);
    let units = setup.hamiltonian.units();
    measure(setup, current_operator(partition, n, units.hbar / units.mass)?, p)
}

/// Direct region averages of `|ψ|²` and `j` on the protected state.
pub fn exact_region_averages(state: &WaveFunction, partition: &RegionPartition, hbar: f64, mass: f64) -> Result<Vec<(f64, f64)>> {
    state.grid().ensure_same_lattice(partition.grid())?;
    let dx = state.grid().dx();
    let units = crate::grid::Units::new(hbar, mass)?;
    let j = flux_density(state, units);
    Ok((0..partition.len())
        .map(|n| {
            let v = partition.volume(n);
            let cells = partition.cells(n);
            let rho: f64 = state.amplitudes()[cells.clone()].iter().map(|a| a.norm_sqr()).sum::<f64>() * dx / v;
            let flux: f64 = j[cells].iter().sum::<f64>() * dx / v;
            (rho, flux)
        })
        .collect())
}

/// Pointer readouts for every region together with the reconstructed fields.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: MeasureField,
    pub density_shifts: Vec<ShiftMeasurement>,
    pub flux_shifts: Vec<ShiftMeasurement>,
}

/// Piecewise-constant `ρ̂` and `ĵ` from the `A_n` and `B_n` families, `ρ̂` renormalized.
pub fn reconstruct_measure(setup: &ProtectiveSetup, partition: &RegionPartition) -> Result<Reconstruction> {
    let density_shifts = (0..partition.len())
        .into_par_iter()
        .map(|n| protective_shift_an(setup, partition, n))
        .collect::<Result<Vec<_>>>()?;
    let flux_shifts = (0..partition.len())
        .into_par_iter()
        .map(|n| protective_shift_bn(setup, partition, n))
        .collect::<Result<Vec<_>>>()?;

    let grid = *partition.grid();
    let mut rho = vec![0.0; grid.len()];
    let mut flux = vec![0.0; grid.len()];
    for n in 0..partition.len() {
        for j in partition.cells(n) {
            rho[j] = density_shifts[n].shift.max(0.0);
            flux[j] = flux_shifts[n].shift;
        }
    }
    let total = rho.iter().sum::<f64>() * grid.dx();
    if !(total > 0.0) {
        return Err(DqmError::Numeric("reconstructed density has no mass".into()));
    }
    rho.iter_mut().for_each(|r| *r /= total);
    Ok(Reconstruction {
        field: MeasureField::new(grid, rho, flux)?,
        density_shifts,
        flux_shifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, plane_wave, well_eigenstate, Grid1D, Units};

    #[test]
    fn partition_validation() {
        let g = Grid1D::hard_wall(0.0, 1.0, 20, 0.01).unwrap();
        assert!(RegionPartition::new(g, vec![0..10, 11..20]).is_err());
        assert!(RegionPartition::new(g, vec![0..10, 10..19]).is_err());
        assert!(RegionPartition::new(g, vec![0..10, 10..10, 10..20]).is_err());
        let p = RegionPartition::uniform(g, 3).unwrap();
        assert_eq!(p.cells(0), 0..6);
        assert_eq!(p.cells(2), 13..20);
        assert!(RegionPartition::uniform(g, 21).is_err());
        let s = RegionPartition::split_at(g, &[0.5]).unwrap();
        assert_eq!(s.len(), 2);
        assert!(projector_an(&p, 3).is_err());
    }

    #[test]
    fn whole_domain_projector_averages_to_inverse_length() {
        let g = Grid1D::periodic(-3.0, 2.0, 64, 0.01).unwrap();
        let p = RegionPartition::uniform(g, 1).unwrap();
        let a = projector_operator(&p, 0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 0.5, 1.0, Units::default()).unwrap();
        assert!((a.expectation(&psi) - 1.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn projector_partition_of_unity_and_support() {
        let g = Grid1D::periodic(-20.0, 20.0, 512, 0.01).unwrap();
        let psi = gaussian_packet(&g, -10.0, 1.0, 0.0, Units::default()).unwrap();
        let p = RegionPartition::uniform(g, 8).unwrap();
        let total: f64 = (0..8)
            .map(|n| projector_operator(&p, n).unwrap().expectation(&psi) * p.volume(n))
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
        // region 6 is [10, 15): far outside the packet
        assert!(projector_operator(&p, 6).unwrap().expectation(&psi) < 1e-12);
    }

    #[test]
    fn current_operator_reads_region_flux() {
        let g = Grid1D::periodic(0.0, 1.0, 128, 0.01).unwrap();
        let psi = plane_wave(&g, 2).unwrap();
        let p = RegionPartition::uniform(g, 4).unwrap();
        let exact = exact_region_averages(&psi, &p, 1.0, 1.0).unwrap();
        for n in 0..4 {
            let b = current_operator(&p, n, 1.0).unwrap().expectation(&psi);
            assert!((b - exact[n].1).abs() < 1e-9 * exact[n].1.abs());
        }
    }

    #[test]
    fn schedule_integrates_to_one() {
        let s = CouplingSchedule::new(3.0, 0.2).unwrap();
        assert_eq!(s.value(0.0), 0.0);
        assert_eq!(s.value(3.0), 0.0);
        assert!((s.value(1.5) - 1.0 / (0.8 * 3.0)).abs() < 1e-15);
        // exact for a piecewise-linear integrand: trapezoid nodes on the kinks
        let n = 3000;
        let dt = 3.0 / n as f64;
        let integral: f64 = (1..n).map(|k| s.value(k as f64 * dt)).sum::<f64>() * dt;
        assert!((integral - 1.0).abs() < 1e-10);
        assert!(CouplingSchedule::new(1.0, 0.5).is_err());
        assert!(CouplingSchedule::new(0.0, 0.2).is_err());
    }

    #[test]
    fn non_eigenstates_are_refused() {
        let g = Grid1D::hard_wall(0.0, 10.0, 255, 0.01).unwrap();
        let psi = gaussian_packet(&g, 5.0, 1.0, 0.0, Units::default()).unwrap();
        let h = Hamiltonian1D::free(g, Units::default());
        assert!(matches!(
            ProtectiveSetup::new(psi, h, 1.0, 0.2, None),
            Err(DqmError::Protection(_))
        ));
    }

    fn well_setup(duration: f64, p: Option<f64>) -> (ProtectiveSetup, RegionPartition) {
        let g = Grid1D::hard_wall(0.0, 1.0, 127, 2e-3).unwrap();
        let (psi, _) = well_eigenstate(&g, 1, Units::default()).unwrap();
        let h = Hamiltonian1D::free(g, Units::default());
        let setup = ProtectiveSetup::new(psi, h, duration, 0.2, p).unwrap();
        (setup, RegionPartition::uniform(g, 8).unwrap())
    }

    #[test]
    fn zero_coupling_reads_unperturbed_value() {
        let (setup, part) = well_setup(0.5, Some(0.0));
        for n in [0, 3] {
            let m = protective_shift_an(&setup, &part, n).unwrap();
            assert!((m.shift - m.unperturbed).abs() < 1e-12 * m.unperturbed);
            assert!((m.final_overlap - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn global_phase_does_not_move_the_pointer() {
        let (setup, part) = well_setup(0.5, None);
        let rotated = ProtectiveSetup::new(
            setup.state().with_global_phase(1.1),
            setup.hamiltonian().clone(),
            0.5,
            0.2,
            None,
        )
        .unwrap();
        let a = protective_shift_an(&setup, &part, 2).unwrap();
        let b = protective_shift_an(&rotated, &part, 2).unwrap();
        assert!((a.shift - b.shift).abs() < 1e-12);
    }

    #[test]
    fn merged_regions_average_by_volume() {
        let (setup, part) = well_setup(2.0, None);
        let merged = part.merge_adjacent(2).unwrap();
        let setup = setup.with_pointer_momentum(Some(setup.pointer_momentum(&part)));
        let a = protective_shift_an(&setup, &part, 2).unwrap();
        let b = protective_shift_an(&setup, &part, 3).unwrap();
        let m = protective_shift_an(&setup, &merged, 2).unwrap();
        let expected = (a.shift * part.volume(2) + b.shift * part.volume(3)) / merged.volume(2);
        assert!(((m.shift - expected) / expected).abs() < 1e-3);
    }

    #[test]
    fn real_state_has_no_current_readout() {
        let (setup, part) = well_setup(8.0, None);
        for n in 0..part.len() {
            let m = protective_shift_bn(&setup, &part, n).unwrap();
            assert!(m.shift.abs() < 1e-8, "region {n}: {}", m.shift);
        }
    }

    #[test]
    fn reconstruction_is_normalized() {
        let (setup, part) = well_setup(1.0, None);
        let r = reconstruct_measure(&setup, &part).unwrap();
        let total: f64 = r.field.rho().iter().sum::<f64>() * part.grid().dx();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(r.density_shifts.len(), 8);
    }
}
