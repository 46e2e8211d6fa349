//! Physical constants, Planck units and the clock-based minimum measurable length.
//!
//! A length `L` measured with a clock of mass `m` picks up a quantum spread
//! `(ħL/(mc))^{1/2}` and a gravitational spread `Gm/c²`. Minimizing their sum
//! over `m` yields a floor that grows as `(L·L_p²)^{1/3}`. All minimization is done
//! in natural units (ħ = G = c = 1) and converted back at the boundary.

use crate::error::{DqmError, Result};

/// ħ, G and c together with the Planck units derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    gravitational: f64,
    light_speed: f64,
    planck_length: f64,
    planck_time: f64,
    planck_energy: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(DqmError::InvalidConstant { name, value })
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, gravitational: f64, light_speed: f64) -> Result<Self> {
        check_positive("hbar", hbar)?;
        check_positive("G", gravitational)?;
        check_positive("c", light_speed)?;
        let planck_length = (gravitational * hbar / light_speed.powi(3)).sqrt();
        let planck_time = (gravitational * hbar / light_speed.powi(5)).sqrt();
        Ok(Self {
            hbar,
            gravitational,
            light_speed,
            planck_length,
            planck_time,
            planck_energy: hbar / planck_time,
        })
    }

    /// CODATA 2018 values.
    pub fn si() -> Self {
        Self::new(1.054_571_817e-34, 6.674_30e-11, 299_792_458.0).expect("SI constants are positive")
    }

    /// ħ = G = c = 1.
    pub fn natural() -> Self {
        Self::new(1.0, 1.0, 1.0).expect("unit constants are positive")
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn gravitational(&self) -> f64 {
        self.gravitational
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn planck_length(&self) -> f64 {
        self.planck_length
    }

    pub fn planck_time(&self) -> f64 {
        self.planck_time
    }

    pub fn planck_energy(&self) -> f64 {
        self.planck_energy
    }

    /// Planck mass `(ħc/G)^{1/2}`, the natural-unit mass scale.
    pub fn planck_mass(&self) -> f64 {
        (self.hbar * self.light_speed / self.gravitational).sqrt()
    }
}

/// The three derived Planck quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanckUnits {
    pub length: f64,
    pub time: f64,
    pub energy: f64,
}

pub fn planck_units(constants: &PhysicalConstants) -> PlanckUnits {
    PlanckUnits {
        length: constants.planck_length,
        time: constants.planck_time,
        energy: constants.planck_energy,
    }
}

/// A clock of mass `mass` placed at one end of a length `distance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockSpec {
    mass: f64,
    distance: f64,
}

impl ClockSpec {
    pub fn new(mass: f64, distance: f64) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("distance", distance)?;
        Ok(Self { mass, distance })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }
}

/// Quantum spread of the clock position, `(ħL/(mc))^{1/2}`.
pub fn length_uncertainty_qm(clock: &ClockSpec, constants: &PhysicalConstants) -> f64 {
    (constants.hbar * clock.distance / (clock.mass * constants.light_speed)).sqrt()
}

/// Gravitational spread `Gm/c²`.
pub fn length_uncertainty_gr(clock: &ClockSpec, constants: &PhysicalConstants) -> f64 {
    constants.gravitational * clock.mass / (constants.light_speed * constants.light_speed)
}

/// Result of minimizing the total clock uncertainty over the clock mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumLength {
    /// Minimal total uncertainty, same unit as the input length.
    pub min_uncertainty: f64,
    /// Minimizing clock mass.
    pub optimal_mass: f64,
    pub qm_part: f64,
    pub gr_part: f64,
}

/// Search bracket for the clock mass, in Planck masses.
pub const MASS_BRACKET: (f64, f64) = (1e-12, 1e12);
const GOLDEN_TOLERANCE: f64 = 1e-10;

fn total_uncertainty_natural(length: f64, mass: f64) -> f64 {
    (length / mass).sqrt() + mass
}

/// Minimizes `δL_QM(m) + δL_GR(m)` for a length `length` in the units of `constants`.
///
/// Works in natural units internally; a minimum sitting on the edge of
/// [`MASS_BRACKET`] is reported as a numeric error.
pub fn minimum_measurable_length(length: f64, constants: &PhysicalConstants) -> Result<MinimumLength> {
    check_positive("length", length)?;
    let lp = constants.planck_length;
    let mp = constants.planck_mass();
    let l_nat = length / lp;
    if !l_nat.is_finite() || l_nat <= 0.0 {
        return Err(DqmError::Numeric(format!("length {length} is not representable in Planck units")));
    }

    let objective = |log_m: f64| total_uncertainty_natural(l_nat, log_m.exp());
    let (lo, hi) = (MASS_BRACKET.0.ln(), MASS_BRACKET.1.ln());
    let log_m = golden_section_min(objective, lo, hi, GOLDEN_TOLERANCE);
    let edge = 1e-6 * (hi - lo);
    if log_m - lo < edge || hi - log_m < edge {
        return Err(DqmError::Numeric(format!(
            "minimum for L = {length} is not bracketed by clock masses {:e}..{:e} Planck masses",
            MASS_BRACKET.0, MASS_BRACKET.1
        )));
    }

    let m_nat = log_m.exp();
    let clock = ClockSpec::new(m_nat * mp, length)?;
    let qm_part = length_uncertainty_qm(&clock, constants);
    let gr_part = length_uncertainty_gr(&clock, constants);
    Ok(MinimumLength {
        min_uncertainty: total_uncertainty_natural(l_nat, m_nat) * lp,
        optimal_mass: m_nat * mp,
        qm_part,
        gr_part,
    })
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > rel_tol * (1.0 + c.abs().max(d.abs())) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in lx.iter().zip(&ly) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn natural_units_are_all_one() {
        let u = planck_units(&PhysicalConstants::natural());
        assert_eq!((u.length, u.time, u.energy), (1.0, 1.0, 1.0));
    }

    #[test]
    fn si_planck_units_match_high_precision_values() {
        // mpmath, 40 digits, CODATA 2018 inputs
        let u = planck_units(&PhysicalConstants::si());
        assert!(rel(u.length, 1.616_255_023_928_550e-35) < 1e-14);
        assert!(rel(u.time, 5.391_246_446_661_944e-44) < 1e-14);
        assert!(rel(u.energy, 1.956_081_636_099_108e9) < 1e-14);
    }

    #[test]
    fn derived_units_are_self_consistent() {
        let k = PhysicalConstants::si();
        assert!(rel(k.planck_length(), k.light_speed() * k.planck_time()) < 1e-14);
        assert!(rel(k.planck_energy() * k.planck_time(), k.hbar()) < 1e-14);
    }

    #[test]
    fn rejects_non_positive_constants() {
        assert!(matches!(
            PhysicalConstants::new(0.0, 1.0, 1.0),
            Err(DqmError::InvalidConstant { name: "hbar", .. })
        ));
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, f64::NAN).is_err());
        assert!(ClockSpec::new(0.0, 1.0).is_err());
        assert!(ClockSpec::new(1.0, -2.0).is_err());
    }

    #[test]
    fn clock_uncertainties() {
        let k = PhysicalConstants::natural();
        assert_eq!(length_uncertainty_qm(&ClockSpec::new(1.0, 1.0).unwrap(), &k), 1.0);
        assert_eq!(length_uncertainty_qm(&ClockSpec::new(1.0, 4.0).unwrap(), &k), 2.0);
        assert_eq!(length_uncertainty_gr(&ClockSpec::new(1.0, 1.0).unwrap(), &k), 1.0);
        assert_eq!(length_uncertainty_gr(&ClockSpec::new(3.0, 1.0).unwrap(), &k), 3.0);

        let si = PhysicalConstants::si();
        let clock = ClockSpec::new(1.0, 1.0).unwrap();
        assert!(rel(length_uncertainty_qm(&clock, &si), 5.930_997_335_685_426e-22) < 1e-12);
        assert!(rel(length_uncertainty_gr(&clock, &si), 7.426_160_269_118_666e-28) < 1e-12);
    }

    #[test]
    fn minimum_matches_closed_form_in_natural_units() {
        // d/dm (sqrt(L/m) + m) = 0  =>  m* = (L/4)^{1/3}, min = 3 (L/4)^{1/3}
        let k = PhysicalConstants::natural();
        for &l in &[1.0, 8.0, 1e3, 1e6] {
            let r = minimum_measurable_length(l, &k).unwrap();
            let m_star = (l / 4.0f64).cbrt();
            // the objective is flat at its minimum: the argmin resolves only to ~sqrt(eps)
            assert!(rel(r.optimal_mass, m_star) < 1e-6, "L={l}");
            assert!(rel(r.min_uncertainty, 3.0 * m_star) < 1e-12, "L={l}");
            assert!(rel(r.qm_part + r.gr_part, r.min_uncertainty) < 1e-12);
        }
        let at_lp = minimum_measurable_length(1.0, &k).unwrap().min_uncertainty;
        assert!(rel(at_lp, 1.889_881_574_842_310) < 1e-12);
        assert!((0.5..=2.0).contains(&at_lp));
    }

    #[test]
    fn minimum_scales_as_cube_root() {
        let k = PhysicalConstants::natural();
        let a = minimum_measurable_length(1.0, &k).unwrap().min_uncertainty;
        let b = minimum_measurable_length(1e6, &k).unwrap().min_uncertainty;
        assert!(rel(b / a, 100.0) < 1e-9);
        let c = minimum_measurable_length(2e6, &k).unwrap().min_uncertainty;
        assert!(rel(c / b, 2f64.cbrt()) < 1e-6);
    }

    #[test]
    fn si_boundary_conversion() {
        let si = PhysicalConstants::si();
        let l = 1e-20;
        let r = minimum_measurable_length(l, &si).unwrap();
        let bound = (l * si.planck_length().powi(2)).cbrt();
        let ratio = r.min_uncertainty / bound;
        assert!(rel(ratio, 3.0 * 0.25f64.cbrt()) < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn unbracketed_minimum_is_a_numeric_error() {
        // m* = (L/4)^{1/3} > 1e12 needs L > 4e36 Planck lengths
        let k = PhysicalConstants::natural();
        assert!(matches!(minimum_measurable_length(1e40, &k), Err(DqmError::Numeric(_))));
        assert!(matches!(minimum_measurable_length(1e-40, &k), Err(DqmError::Numeric(_))));
    }
}
