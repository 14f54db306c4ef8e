//! Plant classification and frequency-point identification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foi::{make_phase_element, log_grid, PhaseElement, RELAY_PHASES, VALID_BAND};
use crate::lti::TransferFunction;
use crate::relay::{simulate_relay_loop, LimitCycle, RelayConfig, RelayOutcome};

/// Which phase line the plant's frequency response reaches first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlantClass {
    /// Reaches -180 deg (has an ultimate point).
    A,
    /// Reaches -120 deg but not -180 deg.
    B,
    /// Reaches -60 deg but not -120 deg.
    C,
}

impl PlantClass {
    pub const ALL: [PlantClass; 3] = [PlantClass::A, PlantClass::B, PlantClass::C];

    /// Target phase in degrees.
    pub fn nu(self) -> f64 {
        match self {
            PlantClass::A => -180.0,
            PlantClass::B => -120.0,
            PlantClass::C => -60.0,
        }
    }

    /// Relay phase that makes the loop oscillate at `nu`.
    pub fn gamma(self) -> f64 {
        -180.0 - self.nu()
    }
}

impl fmt::Display for PlantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Relay,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedPoint {
    #[serde(rename = "class")]
    pub plant_class: PlantClass,
    /// Nominal phase of the point, degrees.
    #[serde(rename = "nu_deg")]
    pub nu: f64,
    #[serde(rename = "omega")]
    pub omega_nu: f64,
    #[serde(rename = "magnitude")]
    pub m_nu: f64,
    pub method: Method,
    #[serde(rename = "gamma_deg")]
    pub gamma_used: f64,
    /// `-180 - angle F(jw)` at the measured frequency (relay only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<LimitCycle>,
}

impl IdentifiedPoint {
    /// A point given directly (for example, read off a table).
    pub fn given(plant_class: PlantClass, omega_nu: f64, m_nu: f64) -> Self {
        Self {
            plant_class,
            nu: plant_class.nu(),
            omega_nu,
            m_nu,
            method: Method::Analytic,
            gamma_used: plant_class.gamma(),
            phase_deg: None,
            cycle: None,
        }
    }
}

/// Frequency, magnitude and phase of `G` implied by a relay limit cycle.
///
/// The magnitude comes from first-harmonic balance with the realized
/// element: `M = pi A / (4 d |F(jw)|)`.
pub fn point_from_cycle(cycle: &LimitCycle, d: f64, f: &PhaseElement) -> Result<(f64, f64, f64)> {
    if !cycle.converged {
        return Err(Error::NotConverged);
    }
    let omega = cycle.omega();
    if !f.contains(omega) {
        return Err(Error::OutsideApproximationBand { omega });
    }
    let fp = f.tf.freq_response(omega)?;
    let magnitude = std::f64::consts::PI * cycle.amplitude / (4.0 * d * fp.magnitude);
    Ok((omega, magnitude, -180.0 - fp.phase_deg))
}

/// Staged relay experiment: 0 deg, then -60 deg, then -120 deg; the first
/// stage that self-oscillates fixes the class.
pub fn rap_identify(g: &TransferFunction, cfg: &RelayConfig) -> Result<IdentifiedPoint> {
    cfg.validate()?;
    g.ensure_strictly_proper()?;
    for (gamma, class) in RELAY_PHASES.into_iter().zip(PlantClass::ALL) {
        let f = make_phase_element(gamma)?;
        let cycle = match simulate_relay_loop(&f, g, cfg)? {
            RelayOutcome::Cycle(c) => c,
            RelayOutcome::NoOscillation(_) => continue,
        };
        let (omega, magnitude, phase) = point_from_cycle(&cycle, cfg.d, &f)?;
        return Ok(IdentifiedPoint {
            plant_class: class,
            nu: class.nu(),
            omega_nu: omega,
            m_nu: magnitude,
            method: Method::Relay,
            gamma_used: gamma,
            phase_deg: Some(phase),
            cycle: Some(cycle),
        });
    }
    Err(Error::Unclassifiable)
}

const SCAN_BAND: (f64, f64) = (1e-4, 1e4);
const SCAN_POINTS: usize = 4000;

/// First frequency at which the unwrapped phase of `g` reaches `nu` degrees,
/// with the magnitude there. `None` when the phase never gets that far.
pub fn analytic_identify(g: &TransferFunction, nu: f64) -> Option<(f64, f64)> {
    let grid = log_grid(SCAN_BAND.0, SCAN_BAND.1, SCAN_POINTS);
    let excess = |w: f64| g.phase_deg(w) - nu;
    let mut prev = (grid[0], excess(grid[0]));
    if prev.1 <= 0.0 {
        return Some((grid[0], g.magnitude(grid[0])));
    }
    for &w in &grid[1..] {
        let cur = excess(w);
        if cur <= 0.0 {
            let (mut lo, mut hi) = (prev.0, w);
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                let v = excess(mid);
                if v.abs() <= 1e-10 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if v > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 4.0 * f64::EPSILON * hi {
                    break;
                }
            }
            let w = 0.5 * (lo + hi);
            return Some((w, g.magnitude(w)));
        }
        prev = (w, cur);
    }
    None
}

/// Classification from the exact frequency response.
pub fn analytic_point(g: &TransferFunction) -> Result<IdentifiedPoint> {
    for class in PlantClass::ALL {
        if let Some((omega, m)) = analytic_identify(g, class.nu()) {
            return Ok(IdentifiedPoint {
                method: Method::Analytic,
                ..IdentifiedPoint::given(class, omega, m)
            });
        }
    }
    Err(Error::Unclassifiable)
}

pub fn identify(g: &TransferFunction, method: Method, cfg: &RelayConfig) -> Result<IdentifiedPoint> {
    match method {
        Method::Relay => rap_identify(g, cfg),
        Method::Analytic => analytic_point(g),
    }
}

/// True when `omega` lies in the band where the relay elements are valid.
pub fn in_relay_band(omega: f64) -> bool {
    omega >= VALID_BAND.0 && omega <= VALID_BAND.1
}
