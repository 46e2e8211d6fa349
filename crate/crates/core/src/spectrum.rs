//! Eigenvalues and eigenvectors of real lattice Hamiltonians.
//!
//! Eigenvalue counts come from the inertia of an `LDLᵀ` factorization of `H - λI`
//! (Sylvester's law). On periodic grids the corner element turns the factorization
//! into an arrow shape, still O(n). Individual eigenvalues follow by bisection and
//! eigenvectors by shifted inverse iteration.

use num_complex::Complex64;

use crate::error::{DqmError, Result};
use crate::grid::{Boundary, WaveFunction};
use crate::propagator::{Hamiltonian1D, HermitianTridiagonal};

/// Real symmetric part of a lattice operator.
#[derive(Debug, Clone)]
pub struct RealTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    corner: Option<f64>,
}

impl RealTridiagonal {
    pub fn from_operator(op: &HermitianTridiagonal) -> Result<Self> {
        if op.upper.iter().any(|e| e.im != 0.0) {
            return Err(DqmError::InvalidInput("operator has complex couplings".into()));
        }
        let n = op.len();
        let off: Vec<f64> = op.upper.iter().take(n - 1).map(|e| e.re).collect();
        let corner = match op.boundary {
            Boundary::Periodic => Some(op.upper[n - 1].re),
            Boundary::HardWall => None,
        };
        Ok(Self {
            diag: op.diag.clone(),
            off,
            corner,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut radius = vec![0.0; n];
        for (i, e) in self.off.iter().enumerate() {
            radius[i] += e.abs();
            radius[i + 1] += e.abs();
        }
        if let Some(c) = self.corner {
            radius[0] += c.abs();
            radius[n - 1] += c.abs();
        }
        let lo = self.diag.iter().zip(&radius).map(|(d, r)| d - r).fold(f64::INFINITY, f64::min);
        let hi = self.diag.iter().zip(&radius).map(|(d, r)| d + r).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub(crate) fn scale(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let n = self.len();
        let tiny = f64::EPSILON * self.scale();
        let guard = |p: f64| if p.abs() < tiny { -tiny } else { p };
        let Some(corner) = self.corner else {
            let mut negatives = 0;
            let mut p = guard(self.diag[0] - lambda);
            if p < 0.0 {
                negatives += 1;
            }
            for i in 1..n {
                p = guard(self.diag[i] - lambda - self.off[i - 1] * self.off[i - 1] / p);
                if p < 0.0 {
                    negatives += 1;
                }
            }
            return negatives;
        };

        // arrow elimination: rows 0..n-2 keep a fill-in `f` in the last column
        let mut negatives = 0;
        let mut last = self.diag[n - 1] - lambda;
        let mut p = guard(self.diag[0] - lambda);
        let mut f = corner;
        for i in 0..n - 1 {
            if p < 0.0 {
                negatives += 1;
            }
            last -= f * f / p;
            if i + 1 == n - 1 {
                break;
            }
            let b = self.off[i];
            let next_p = guard(self.diag[i + 1] - lambda - b * b / p);
            let mut next_f = -b * f / p;
            if i + 1 == n - 2 {
                next_f += self.off[n - 2];
            }
            p = next_p;
            f = next_f;
        }
        if guard(last) < 0.0 {
            negatives += 1;
        }
        negatives
    }

    /// `index`-th smallest eigenvalue (0-based), by bisection to near machine precision.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.len() {
            return Err(DqmError::InvalidInput(format!("eigenvalue index {index} out of range")));
        }
        let (mut lo, mut hi) = self.bounds();
        let pad = 1e-12 * self.scale();
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Eigenvalue tolerance used to decide degeneracy.
fn degeneracy_tolerance(scale: f64) -> f64 {
    1e-9 * scale
}

/// Distance from `energy` to the nearest eigenvalue of the system Hamiltonian that is
/// distinct from it (degenerate partners are skipped).
pub fn level_gap(h: &Hamiltonian1D, energy: f64) -> Result<f64> {
    let real = RealTridiagonal::from_operator(&h.system_operator(0.0)?)?;
    let tol = degeneracy_tolerance(real.scale());
    let below = real.count_below(energy - tol);
    let at_or_below = real.count_below(energy + tol);
    let mut gap = f64::INFINITY;
    if below > 0 {
        gap = gap.min(energy - real.eigenvalue(below - 1)?);
    }
    if at_or_below < real.len() {
        gap = gap.min(real.eigenvalue(at_or_below)? - energy);
    }
    if gap.is_finite() {
        Ok(gap)
    } else {
        Err(DqmError::Numeric("operator has a single distinct level".into()))
    }
}

/// Number of eigenvalues of the system Hamiltonian equal to `energy` within tolerance.
pub fn degeneracy(h: &Hamiltonian1D, energy: f64) -> Result<usize> {
    let real = RealTridiagonal::from_operator(&h.system_operator(0.0)?)?;
    let tol = degeneracy_tolerance(real.scale());
    Ok(real.count_below(energy + tol) - real.count_below(energy - tol))
}

/// `index`-th bound state of the system Hamiltonian (0 = ground state) and its energy.
///
/// Uses bisection for the eigenvalue and inverse iteration for the vector; the result is
/// normalized with its largest component real and positive.
pub fn bound_state(h: &Hamiltonian1D, index: usize) -> Result<(WaveFunction, f64)> {
    let op = h.system_operator(0.0)?;
    let real = RealTridiagonal::from_operator(&op)?;
    let energy = real.eigenvalue(index)?;
    let grid = *h.grid();
    let shift = energy - 1e-11 * real.scale();

    let mut shifted = op.clone();
    for d in shifted.diag.iter_mut() {
        *d -= shift;
    }
    let mut v = WaveFunction::from_amplitudes(grid, vec![Complex64::new(1.0, 0.0); grid.len()])?.normalize()?;
    for _ in 0..6 {
        v = crate::propagator::solve_hermitian(&shifted, &v)?.normalize()?;
    }
    let anchor = v
        .amplitudes()
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = anchor.conj() / anchor.norm();
    let amps = v.amplitudes().iter().map(|a| a * phase).collect();
    let v = WaveFunction::from_amplitudes(grid, amps)?;
    let energy = op.expectation(&v);
    Ok((v, energy))
}

/// `sqrt(sum |Hψ - Eψ|² dx)` with `E = ⟨ψ|H|ψ⟩`.
pub fn eigen_residual(h: &Hamiltonian1D, psi: &WaveFunction) -> Result<(f64, f64)> {
    h.grid().ensure_same_lattice(psi.grid())?;
    let op = h.system_operator(0.0)?;
    let e = op.expectation(psi) / psi.norm_sq();
    let hpsi = op.apply(psi.amplitudes());
    let r2: f64 = hpsi.iter().zip(psi.amplitudes()).map(|(hp, p)| (hp - p * e).norm_sqr()).sum();
    Ok(((r2 * psi.grid().dx()).sqrt(), e))
}
