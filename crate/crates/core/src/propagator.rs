//! Crank-Nicolson propagation of `iħ ∂ψ/∂t = -ħ²/(2m) ∂²ψ/∂x² + U(x,t) ψ`.
//!
//! Each step solves `(I + i dt H/2ħ) ψ' = (I - i dt H/2ħ) ψ` with `H` assembled at the
//! mid-step time. Hard walls give an open tridiagonal chain; periodic grids add the two
//! corner elements, handled by a Sherman-Morrison correction of the open solve.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{DqmError, Result};
use crate::grid::{Boundary, Grid1D, PotentialField, Units, WaveFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Hermitian tridiagonal operator. `upper[i]` is the `(i, i+1)` element; on periodic
/// grids `upper[n-1]` is the `(n-1, 0)` element closing the ring.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTridiagonal {
    pub diag: Vec<f64>,
    pub upper: Vec<Complex64>,
    pub boundary: Boundary,
}

impl HermitianTridiagonal {
    pub fn zeros(grid: &Grid1D) -> Self {
        let n = grid.len();
        let links = match grid.boundary() {
            Boundary::Periodic => n,
            Boundary::HardWall => n - 1,
        };
        Self {
            diag: vec![0.0; n],
            upper: vec![ZERO; links],
            boundary: grid.boundary(),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `(self + scale·other)`, same sparsity.
    pub fn add_scaled(&mut self, other: &HermitianTridiagonal, scale: f64) {
        for (d, o) in self.diag.iter_mut().zip(&other.diag) {
            *d += scale * o;
        }
        for (u, o) in self.upper.iter_mut().zip(&other.upper) {
            *u += o * scale;
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut y: Vec<Complex64> = self.diag.iter().zip(x).map(|(d, v)| v * d).collect();
        for (i, e) in self.upper.iter().enumerate() {
            let j = (i + 1) % n;
            y[i] += e * x[j];
            y[j] += e.conj() * x[i];
        }
        y
    }

    /// `sum conj(x_i) (H x)_i dx`, real for a Hermitian operator.
    pub fn expectation(&self, psi: &WaveFunction) -> f64 {
        let hx = self.apply(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(&hx)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
            * psi.grid().dx()
    }

    /// Largest Gershgorin radius, a bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        let n = self.len();
        let mut row: Vec<f64> = self.diag.iter().map(|d| d.abs()).collect();
        for (i, e) in self.upper.iter().enumerate() {
            row[i] += e.norm();
            row[(i + 1) % n] += e.norm();
        }
        row.into_iter().fold(0.0, f64::max)
    }
}

/// General complex tridiagonal system, optionally cyclic.
struct TridiagonalSystem {
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
    /// `(A[n-1][0], A[0][n-1])` for cyclic systems.
    corners: Option<(Complex64, Complex64)>,
}

fn thomas(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64], rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = diag.len();
    let mut c = vec![ZERO; n];
    let mut d = vec![ZERO; n];
    let mut pivot = diag[0];
    check_pivot(pivot, 0)?;
    c[0] = upper.first().copied().unwrap_or(ZERO) / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        check_pivot(pivot, i)?;
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Ok(d)
}

fn check_pivot(p: Complex64, i: usize) -> Result<()> {
    let m = p.norm();
    if m.is_finite() && m > 1e-300 {
        Ok(())
    } else {
        Err(DqmError::Numeric(format!("singular tridiagonal solve (pivot {m:e} at row {i})")))
    }
}

impl TridiagonalSystem {
    fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let Some((alpha, beta)) = self.corners else {
            return thomas(&self.lower, &self.diag, &self.upper, rhs);
        };
        let n = self.diag.len();
        let gamma = -self.diag[0];
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= alpha * beta / gamma;
        let x = thomas(&self.lower, &diag, &self.upper, rhs)?;
        let mut u = vec![ZERO; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        let z = thomas(&self.lower, &diag, &self.upper, &u)?;
        let denom = Complex64::new(1.0, 0.0) + z[0] + beta * z[n - 1] / gamma;
        check_pivot(denom, n)?;
        let fact = (x[0] + beta * x[n - 1] / gamma) / denom;
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
    }
}

/// Solves `H x = b` for a Hermitian tridiagonal `H` (shift it beforehand if needed).
pub(crate) fn solve_hermitian(op: &HermitianTridiagonal, rhs: &WaveFunction) -> Result<WaveFunction> {
    let n = op.len();
    let diag = op.diag.iter().map(|d| Complex64::new(*d, 0.0)).collect();
    let mut upper = vec![ZERO; n];
    let mut lower = vec![ZERO; n];
    for i in 0..n - 1 {
        upper[i] = op.upper[i];
        lower[i + 1] = op.upper[i].conj();
    }
    let corners = match op.boundary {
        Boundary::Periodic => Some((op.upper[n - 1], op.upper[n - 1].conj())),
        Boundary::HardWall => None,
    };
    let x = TridiagonalSystem { lower, diag, upper, corners }.solve(rhs.amplitudes())?;
    WaveFunction::from_amplitudes(*rhs.grid(), x)
}

pub type Schedule = dyn Fn(f64) -> f64 + Send + Sync;

/// A static operator switched on with a time-dependent strength, `s(t)·O`.
#[derive(Clone)]
pub struct Drive {
    pub operator: HermitianTridiagonal,
    pub strength: Arc<Schedule>,
}

impl fmt::Debug for Drive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Drive").field("operator", &self.operator).finish_non_exhaustive()
    }
}

/// `-ħ²/(2m) ∂² + U(x, t)`, optionally with an added driven term.
#[derive(Debug, Clone)]
pub struct Hamiltonian1D {
    grid: Grid1D,
    units: Units,
    potential: PotentialField,
    drive: Option<Drive>,
}

impl Hamiltonian1D {
    pub fn new(grid: Grid1D, units: Units, potential: PotentialField) -> Self {
        Self {
            grid,
            units,
            potential,
            drive: None,
        }
    }

    pub fn free(grid: Grid1D, units: Units) -> Self {
        Self::new(grid, units, PotentialField::Zero)
    }

    /// Adds `strength(t)·operator` to the Hamiltonian.
    pub fn with_drive(mut self, operator: HermitianTridiagonal, strength: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.drive = Some(Drive {
            operator,
            strength: Arc::new(strength),
        });
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn is_time_dependent(&self) -> bool {
        self.potential.is_time_dependent() || self.drive.is_some()
    }

    /// `ħ²/(2m dx²)`.
    pub fn kinetic_scale(&self) -> f64 {
        let dx = self.grid.dx();
        self.units.hbar * self.units.hbar / (2.0 * self.units.mass * dx * dx)
    }

    /// System part only (kinetic + potential) at time `t`.
    pub fn system_operator(&self, t: f64) -> Result<HermitianTridiagonal> {
        let k = self.kinetic_scale();
        let mut op = HermitianTridiagonal::zeros(&self.grid);
        self.potential.sample_into(&self.grid, t, &mut op.diag)?;
        for d in op.diag.iter_mut() {
            *d += 2.0 * k;
        }
        op.upper.fill(Complex64::new(-k, 0.0));
        Ok(op)
    }

    /// Full operator at time `t`, including the drive.
    pub fn operator(&self, t: f64) -> Result<HermitianTridiagonal> {
        let mut op = self.system_operator(t)?;
        if let Some(drive) = &self.drive {
            let s = (drive.strength)(t);
            if !s.is_finite() {
                return Err(DqmError::Numeric(format!("drive strength not finite at t = {t}")));
            }
            if s != 0.0 {
                op.add_scaled(&drive.operator, s);
            }
        }
        if op.diag.iter().any(|d| !d.is_finite()) {
            return Err(DqmError::Numeric(format!("Hamiltonian diagonal not finite at t = {t}")));
        }
        Ok(op)
    }

    /// `⟨ψ|H(t)|ψ⟩`.
    pub fn energy(&self, psi: &WaveFunction, t: f64) -> Result<f64> {
        self.grid.ensure_same_lattice(psi.grid())?;
        Ok(self.operator(t)?.expectation(psi))
    }
}

/// One Crank-Nicolson step from `t` to `t + dt`, with `H` taken at `t + dt/2`.
/// A negative `dt` runs the scheme backwards and exactly inverts a forward step.
pub fn step_at(psi: &WaveFunction, h: &Hamiltonian1D, t: f64, dt: f64) -> Result<WaveFunction> {
    h.grid.ensure_same_lattice(psi.grid())?;
    if !(dt.is_finite() && dt != 0.0) {
        return Err(DqmError::InvalidInput(format!("time step must be finite and nonzero, got {dt}")));
    }
    let op = h.operator(t + 0.5 * dt)?;
    cn_step(psi, &op, dt, h.units.hbar)
}

/// One step from `t = 0`; the natural entry point for time-independent Hamiltonians.
pub fn step(psi: &WaveFunction, h: &Hamiltonian1D, dt: f64) -> Result<WaveFunction> {
    step_at(psi, h, 0.0, dt)
}

fn cn_step(psi: &WaveFunction, op: &HermitianTridiagonal, dt: f64, hbar: f64) -> Result<WaveFunction> {
    let n = op.len();
    let ia = Complex64::new(0.0, dt / (2.0 * hbar));
    let hpsi = op.apply(psi.amplitudes());
    let rhs: Vec<Complex64> = psi.amplitudes().iter().zip(&hpsi).map(|(p, hp)| p - ia * hp).collect();

    let diag = op.diag.iter().map(|d| Complex64::new(1.0, 0.0) + ia * d).collect();
    let mut upper = vec![ZERO; n];
    let mut lower = vec![ZERO; n];
    for i in 0..n - 1 {
        upper[i] = ia * op.upper[i];
        lower[i + 1] = ia * op.upper[i].conj();
    }
    let corners = match op.boundary {
        Boundary::Periodic => {
            let e = op.upper[n - 1];
            Some((ia * e, ia * e.conj()))
        }
        Boundary::HardWall => None,
    };
    let system = TridiagonalSystem {
        lower,
        diag,
        upper,
        corners,
    };
    let next = system.solve(&rhs)?;
    WaveFunction::from_amplitudes(*psi.grid(), next)
}

/// Number of `dt` steps covering `duration`, rounded to the nearest integer.
pub fn steps_for(duration: f64, dt: f64) -> Result<u64> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(DqmError::InvalidInput(format!("duration must be non-negative, got {duration}")));
    }
    Ok((duration / dt).round() as u64)
}

/// Runs `n_steps` steps of size `grid.dt` starting at step index `start_step`
/// (time `start_step·dt`). The observer sees `(t, ψ)` after every step.
pub fn evolve_steps(
    psi: &WaveFunction,
    h: &Hamiltonian1D,
    start_step: u64,
    n_steps: u64,
    mut observer: impl FnMut(f64, &WaveFunction),
) -> Result<WaveFunction> {
    let dt = h.grid.dt();
    h.grid.ensure_same_lattice(psi.grid())?;
    let static_op = if h.is_time_dependent() { None } else { Some(h.operator(0.0)?) };
    let mut state = psi.clone();
    for k in start_step..start_step + n_steps {
        let t = k as f64 * dt;
        state = match &static_op {
            Some(op) => cn_step(&state, op, dt, h.units.hbar)?,
            None => {
                let op = h.operator(t + 0.5 * dt)?;
                cn_step(&state, &op, dt, h.units.hbar)?
            }
        };
        observer((k + 1) as f64 * dt, &state);
    }
    Ok(state)
}

/// Evolves from `t = 0` to `t_final` (rounded to whole steps of `grid.dt`).
pub fn evolve(
    psi: &WaveFunction,
    h: &Hamiltonian1D,
    t_final: f64,
    observer: impl FnMut(f64, &WaveFunction),
) -> Result<WaveFunction> {
    let n = steps_for(t_final, h.grid.dt())?;
    evolve_steps(psi, h, 0, n, observer)
}

/// Closed-form free evolution of [`crate::grid::gaussian_packet`]:
/// `(1+iτ)^{-1/2} exp(-(x-x0-p0t/m)²/(4σ0²(1+iτ))) exp(i(p0x - p0²t/2m)/ħ)`, `τ = ħt/(2mσ0²)`,
/// sampled on the lattice and normalized there.
pub fn analytic_free_gaussian(grid: &Grid1D, x0: f64, sigma0: f64, p0: f64, t: f64, units: Units) -> Result<WaveFunction> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(DqmError::InvalidInput(format!("sigma must be positive, got {sigma0}")));
    }
    let Units { hbar, mass } = units;
    let tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
    let spread = Complex64::new(1.0, tau);
    let prefactor = spread.sqrt().inv();
    let centre = x0 + p0 * t / mass;
    let amps = grid
        .positions()
        .into_iter()
        .map(|x| {
            let gauss = (-(x - centre).powi(2) / (4.0 * sigma0 * sigma0 * spread)).exp();
            let phase = Complex64::from_polar(1.0, (p0 * x - p0 * p0 * t / (2.0 * mass)) / hbar);
            prefactor * gauss * phase
        })
        .collect();
    WaveFunction::from_parts(*grid, amps).normalize()
}

/// `σ0² (1 + (ħt/(2mσ0²))²)`, the free-Gaussian position variance.
pub fn free_gaussian_variance(sigma0: f64, t: f64, units: Units) -> f64 {
    let tau = units.hbar * t / (2.0 * units.mass * sigma0 * sigma0);
    sigma0 * sigma0 * (1.0 + tau * tau)
}
