//! Spatial lattice, wavefunctions on it, potentials and canonical initial states.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DqmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Ring topology; `n_points` must be a power of two.
    Periodic,
    /// Dirichlet walls at `x_min` and `x_max`; lattice sites are strictly interior.
    HardWall,
}

/// Uniform 1D lattice plus the time step used to propagate on it.
///
/// Periodic sites sit at `x_min + j·dx` with `dx = L/n`. Hard-wall sites sit at
/// `x_min + (j+1)·dx` with `dx = L/(n+1)`, the walls being virtual zero-amplitude sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    boundary: Boundary,
    dt: f64,
}

pub const MIN_POINTS: usize = 8;

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, boundary: Boundary, dt: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(DqmError::InvalidInput(format!("grid needs x_max > x_min, got [{x_min}, {x_max}]")));
        }
        if n_points < MIN_POINTS {
            return Err(DqmError::InvalidInput(format!("grid needs at least {MIN_POINTS} points, got {n_points}")));
        }
        if boundary == Boundary::Periodic && !n_points.is_power_of_two() {
            return Err(DqmError::InvalidInput(format!(
                "periodic grid needs a power-of-two point count, got {n_points}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(DqmError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
            boundary,
            dt,
        })
    }

    pub fn periodic(x_min: f64, x_max: f64, n_points: usize, dt: f64) -> Result<Self> {
        Self::new(x_min, x_max, n_points, Boundary::Periodic, dt)
    }

    pub fn hard_wall(x_min: f64, x_max: f64, n_points: usize, dt: f64) -> Result<Self> {
        Self::new(x_min, x_max, n_points, Boundary::HardWall, dt)
    }

    /// Same lattice with a different time step.
    pub fn with_dt(self, dt: f64) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.n_points, self.boundary, dt)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Domain length `x_max - x_min`.
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.length() / self.n_points as f64,
            Boundary::HardWall => self.length() / (self.n_points + 1) as f64,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        let offset = match self.boundary {
            Boundary::Periodic => j as f64,
            Boundary::HardWall => (j + 1) as f64,
        };
        self.x_min + offset * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Index of the lattice site whose cell contains `x`, if any.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let dx = self.dx();
        let first = self.x(0);
        let mut j = ((x - first) / dx + 0.5).floor();
        if self.boundary == Boundary::Periodic {
            j = j.rem_euclid(self.n_points as f64);
        }
        if j >= 0.0 && (j as usize) < self.n_points {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Neighbour indices `(i-1, i+1)`; `None` marks a hard wall.
    pub(crate) fn neighbours(&self, i: usize) -> (Option<usize>, Option<usize>) {
        let n = self.n_points;
        match self.boundary {
            Boundary::Periodic => (Some((i + n - 1) % n), Some((i + 1) % n)),
            Boundary::HardWall => ((i > 0).then(|| i - 1), (i + 1 < n).then_some(i + 1)),
        }
    }

    pub(crate) fn same_lattice(&self, other: &Grid1D) -> bool {
        self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.n_points == other.n_points
            && self.boundary == other.boundary
    }

    pub(crate) fn ensure_same_lattice(&self, other: &Grid1D) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(DqmError::GridMismatch(format!("{self} vs {other}")))
        }
    }
}

impl fmt::Display for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}[{}, {}] x {} (dt = {})",
            self.boundary, self.x_min, self.x_max, self.n_points, self.dt
        )
    }
}

/// Reduced Planck constant and particle mass used by a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl Units {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(DqmError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { hbar, mass })
    }
}

/// Complex amplitudes on a lattice, in units of length^{-1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    amps: Vec<Complex64>,
}

/// Relative tolerance inside which a state already counts as normalized.
const NORMALIZED_EPS: f64 = 1e-13;

impl WaveFunction {
    pub fn from_amplitudes(grid: Grid1D, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(DqmError::InvalidInput(format!(
                "{} amplitudes for a grid of {} points",
                amps.len(),
                grid.len()
            )));
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(DqmError::Numeric("non-finite amplitude".into()));
        }
        Ok(Self { grid, amps })
    }

    pub(crate) fn from_parts(grid: Grid1D, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), grid.len());
        Self { grid, amps }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Same amplitudes attached to a grid with a different time step.
    pub fn on_grid(self, grid: Grid1D) -> Result<Self> {
        self.grid.ensure_same_lattice(&grid)?;
        Ok(Self { grid, amps: self.amps })
    }

    /// `sum |ψ_i|² dx`.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Rescales to unit norm. A state already normalized to within rounding is returned
    /// untouched, which makes the operation idempotent bit for bit.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sq();
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(DqmError::Numeric(format!("cannot normalize a state with norm² = {n2}")));
        }
        if (n2 - 1.0).abs() <= NORMALIZED_EPS {
            return Ok(self.clone());
        }
        let scale = 1.0 / n2.sqrt();
        Ok(Self {
            grid: self.grid,
            amps: self.amps.iter().map(|a| a * scale).collect(),
        })
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            grid: self.grid,
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            amps: self.amps.iter().map(|a| a.conj()).collect(),
        }
    }

    /// `a·self + b·other`, not renormalized.
    pub fn combine(&self, a: Complex64, other: &WaveFunction, b: Complex64) -> Result<Self> {
        self.grid.ensure_same_lattice(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            amps: self.amps.iter().zip(&other.amps).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    /// `⟨x⟩` of `|ψ|²`.
    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.dx();
        let mass: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
        self.amps
            .iter()
            .enumerate()
            .map(|(j, a)| self.grid.x(j) * a.norm_sqr())
            .sum::<f64>()
            * dx
            / mass
    }

    /// Standard deviation of position under `|ψ|²`.
    pub fn position_width(&self) -> f64 {
        let dx = self.grid.dx();
        let mean = self.mean_position();
        let mass: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
        let var = self
            .amps
            .iter()
            .enumerate()
            .map(|(j, a)| (self.grid.x(j) - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * dx
            / mass;
        var.sqrt()
    }
}

/// `⟨a|b⟩ = sum conj(a_i) b_i dx`.
pub fn inner_product(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    a.grid.ensure_same_lattice(&b.grid)?;
    let s: Complex64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.dx())
}

pub type PotentialFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// External potential `U(x, t)`.
#[derive(Clone, Default)]
pub enum PotentialField {
    #[default]
    Zero,
    /// Time-independent values, one per lattice site.
    Static(Arc<[f64]>),
    /// Arbitrary `U(x, t)`, sampled onto the lattice at every step.
    Dynamic(Arc<PotentialFn>),
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialField::Zero => f.write_str("Zero"),
            PotentialField::Static(v) => write!(f, "Static({} sites)", v.len()),
            PotentialField::Dynamic(_) => f.write_str("Dynamic(..)"),
        }
    }
}

impl PotentialField {
    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        PotentialField::Dynamic(Arc::new(f))
    }

    /// Samples a static `U(x)` onto `grid`.
    pub fn sampled(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.positions().into_iter().map(f).collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: &Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DqmError::InvalidInput(format!(
                "{} potential values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DqmError::Numeric(format!("potential is not finite at site {i}")));
        }
        Ok(PotentialField::Static(values.into()))
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, PotentialField::Dynamic(_))
    }

    /// Writes `U(x_i, t)` into `out`.
    pub fn sample_into(&self, grid: &Grid1D, t: f64, out: &mut [f64]) -> Result<()> {
        match self {
            PotentialField::Zero => out.fill(0.0),
            PotentialField::Static(v) => {
                if v.len() != out.len() {
                    return Err(DqmError::GridMismatch(format!(
                        "potential has {} sites, grid has {}",
                        v.len(),
                        out.len()
                    )));
                }
                out.copy_from_slice(v);
            }
            PotentialField::Dynamic(f) => {
                for (j, slot) in out.iter_mut().enumerate() {
                    let u = f(grid.x(j), t);
                    if !u.is_finite() {
                        return Err(DqmError::Numeric(format!("U({}, {t}) is not finite", grid.x(j))));
                    }
                    *slot = u;
                }
            }
        }
        Ok(())
    }
}

/// Normalized Gaussian `exp(-(x-x0)²/(4σ²)) exp(i p0 x/ħ)`.
pub fn gaussian_packet(grid: &Grid1D, x0: f64, sigma: f64, p0: f64, units: Units) -> Result<WaveFunction> {
    let dx = grid.dx();
    if !(sigma.is_finite() && sigma >= 3.0 * dx) {
        return Err(DqmError::Resolution(format!("sigma {sigma} is below 3 dx = {}", 3.0 * dx)));
    }
    if grid.boundary() == Boundary::HardWall && (x0 - 5.0 * sigma < grid.x_min() || x0 + 5.0 * sigma > grid.x_max()) {
        return Err(DqmError::Resolution(format!(
            "packet at {x0} with sigma {sigma} is within 5 sigma of a wall"
        )));
    }
    let amps = grid
        .positions()
        .into_iter()
        .map(|x| {
            let envelope = (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(envelope, p0 * x / units.hbar)
        })
        .collect();
    WaveFunction::from_parts(*grid, amps).normalize()
}

/// Momentum `2πħk/L` of plane-wave mode `k_index` on a ring of length `L`.
pub fn plane_wave_momentum(grid: &Grid1D, k_index: i64, units: Units) -> f64 {
    2.0 * PI * units.hbar * k_index as f64 / grid.length()
}

/// `exp(i p x/ħ)/√L` with `p = 2πħk/L`; uniform density on a periodic grid.
pub fn plane_wave(grid: &Grid1D, k_index: i64) -> Result<WaveFunction> {
    if grid.boundary() != Boundary::Periodic {
        return Err(DqmError::UnsupportedBoundary("plane waves need a periodic grid".into()));
    }
    if k_index.unsigned_abs() as usize >= grid.len() / 2 {
        return Err(DqmError::Resolution(format!(
            "|k_index| = {} must be below n/2 = {}",
            k_index.unsigned_abs(),
            grid.len() / 2
        )));
    }
    let n = grid.len() as f64;
    let amp = 1.0 / grid.length().sqrt();
    let amps = (0..grid.len())
        .map(|j| {
            // exact lattice periodicity: phase uses the site index, not x
            let phase = 2.0 * PI * ((k_index * j as i64).rem_euclid(grid.len() as i64)) as f64 / n;
            Complex64::from_polar(amp, phase)
        })
        .collect();
    Ok(WaveFunction::from_parts(*grid, amps))
}

/// Infinite-well eigenstate `√(2/L) sin(nπ(x - x_min)/L)` and its continuum energy
/// `n²π²ħ²/(2mL²)`. The sampled state is an exact eigenvector of the lattice Laplacian.
pub fn well_eigenstate(grid: &Grid1D, n: usize, units: Units) -> Result<(WaveFunction, f64)> {
    if grid.boundary() != Boundary::HardWall {
        return Err(DqmError::UnsupportedBoundary("well eigenstates need hard walls".into()));
    }
    if n < 1 || n > grid.len() / 4 {
        return Err(DqmError::Resolution(format!(
            "quantum number {n} outside 1..={}",
            grid.len() / 4
        )));
    }
    let l = grid.length();
    let amp = (2.0 / l).sqrt();
    let denom = (grid.len() + 1) as f64;
    let amps = (0..grid.len())
        .map(|j| Complex64::new(amp * (n as f64 * PI * (j + 1) as f64 / denom).sin(), 0.0))
        .collect();
    let energy = (n as f64 * PI * units.hbar / l).powi(2) / (2.0 * units.mass);
    Ok((WaveFunction::from_parts(*grid, amps).normalize()?, energy))
}
