//! PR controller tuning from one identified frequency-response point.
//!
//! The controller `C(s) = Kp + (Kr1 s + Kr2)/(s^2 + 2 xi wr s + wr^2)` is
//! chosen so that `C(j w_nu) G(j w_nu) = p` for the design point `p`, with the
//! product of the controller zeros fixed at `eta^2 wr^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{IdentifiedPoint, PlantClass};
use crate::lti::TransferFunction;

pub const DEFAULT_ETA: f64 = 0.1;

/// Target value `p = m_rho at angle rho` of the loop at the identified
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub m_rho: f64,
    /// Degrees.
    pub rho: f64,
}

impl DesignPoint {
    /// Design point used for each class; class A depends on `wr / w_nu`.
    pub fn for_class(class: PlantClass, ratio: f64) -> Self {
        let (m_rho, rho) = match class {
            PlantClass::A if ratio < 0.5 => (0.4, -183.0),
            PlantClass::A => (0.4, -181.0),
            PlantClass::B => (1.0, -130.0),
            PlantClass::C => (1.0, -90.0),
        };
        Self { m_rho, rho }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.m_rho, self.rho.to_radians())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrController {
    pub kp: f64,
    pub kr1: f64,
    pub kr2: f64,
    pub omega_r: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

impl PrController {
    /// `C(jw)`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        let den = s * s + 2.0 * self.xi * self.omega_r * s + self.omega_r * self.omega_r;
        self.kp + (self.kr1 * s + self.kr2) / den
    }

    pub fn transfer_function(&self) -> TransferFunction {
        pr_transfer_function(self)
    }
}

/// Biproper rational form of the controller.
pub fn pr_transfer_function(c: &PrController) -> TransferFunction {
    let a1 = 2.0 * c.xi * c.omega_r;
    let a0 = c.omega_r * c.omega_r;
    let num = [c.kp, a1 * c.kp + c.kr1, c.kr2 + c.kp * a0];
    TransferFunction::rational(&num, &[1.0, a1, a0])
        .expect("controller coefficients are finite and the denominator is monic")
}

/// Gains placing `C(j w_nu) G(j w_nu)` at `p`, where `G(j w_nu) = m_nu at
/// angle nu`.
pub fn tune_generic(
    m_nu: f64,
    omega_nu: f64,
    nu: f64,
    p: DesignPoint,
    omega_r: f64,
    xi: f64,
    eta: f64,
) -> Result<PrController> {
    let finite = [m_nu, omega_nu, nu, p.m_rho, p.rho, omega_r, xi, eta];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidTuningInput("non-finite input".into()));
    }
    if m_nu <= 0.0 || p.m_rho <= 0.0 {
        return Err(Error::InvalidTuningInput("magnitudes must be positive".into()));
    }
    if omega_r <= 0.0 || omega_nu <= 0.0 {
        return Err(Error::InvalidTuningInput("frequencies must be positive".into()));
    }
    if xi < 0.0 {
        return Err(Error::InvalidTuningInput("xi must be non-negative".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidTuningInput("eta must lie in (0, 1)".into()));
    }
    if omega_r >= omega_nu {
        return Err(Error::ResonanceAboveIdentified { omega_r, omega_nu });
    }
    let wr2 = omega_r * omega_r;
    let wn2 = omega_nu * omega_nu;
    let den = eta * eta * wr2 - wn2;
    if den == 0.0 {
        return Err(Error::SingularTuning);
    }
    let (sin, cos) = (p.rho - nu).to_radians().sin_cos();
    let gain = p.m_rho / m_nu;
    let kp = gain * ((wr2 - wn2) * cos - 2.0 * omega_nu * xi * omega_r * sin) / den;
    let kr2 = (eta * eta - 1.0) * wr2 * kp;
    let kr1 = gain
        * (2.0 * omega_nu * xi * omega_r * wr2 * (eta * eta - 1.0) * cos
            + ((wr2 - wn2) * den + 4.0 * xi * xi * wn2 * wr2) * sin)
        / (omega_nu * den);
    Ok(PrController {
        kp,
        kr1,
        kr2,
        omega_r,
        xi,
        eta,
    })
}

/// Tuning result with the design point actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    #[serde(rename = "class")]
    pub plant_class: PlantClass,
    pub point: IdentifiedPoint,
    pub p: DesignPoint,
    #[serde(flatten)]
    pub controller: PrController,
    pub warnings: Vec<String>,
}

/// Above this fraction of `w_nu` the loop is expected to perform poorly.
const WARN_RATIO: f64 = 0.9;

pub fn tune(point: &IdentifiedPoint, omega_r: f64, xi: f64) -> Result<Tuning> {
    tune_with_eta(point, omega_r, xi, DEFAULT_ETA)
}

pub fn tune_with_eta(point: &IdentifiedPoint, omega_r: f64, xi: f64, eta: f64) -> Result<Tuning> {
    let ratio = omega_r / point.omega_nu;
    let p = DesignPoint::for_class(point.plant_class, ratio);
    let controller = tune_generic(point.m_nu, point.omega_nu, point.nu, p, omega_r, xi, eta)?;
    let mut warnings = Vec::new();
    if ratio > WARN_RATIO {
        warnings.push(format!(
            "omega_r is {ratio:.3} of the identified frequency; expect slow settling and large overshoot"
        ));
    }
    Ok(Tuning {
        plant_class: point.plant_class,
        point: point.clone(),
        p,
        controller,
        warnings,
    })
}

/// `|C(j w_nu) - (m_rho/m_nu) at angle (rho - nu)|`.
pub fn verify_tuning_equation(c: &PrController, point: &IdentifiedPoint, p: DesignPoint) -> f64 {
    let target = Complex64::from_polar(p.m_rho / point.m_nu, (p.rho - point.nu).to_radians());
    (c.eval(point.omega_nu) - target).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn class_b_row() {
        let c = tune_generic(0.255, 1.69, -120.0, DesignPoint::for_class(PlantClass::B, 0.1), 0.169, 0.0, 0.1)
            .unwrap();
        assert!(rel(c.kp, 3.82) < 0.01 && rel(c.kr1, 1.14) < 0.01 && rel(c.kr2, -0.108) < 0.01);
    }

    #[test]
    fn class_c_row() {
        let c = tune_generic(0.5, 1.68, -60.0, DesignPoint::for_class(PlantClass::C, 0.1), 0.168, 0.0, 0.1)
            .unwrap();
        assert!(rel(c.kp, 1.71) < 0.01 && rel(c.kr1, 1.66) < 0.01 && rel(c.kr2, -0.0479) < 0.01);
    }

    #[test]
    fn low_resonance_limit_is_proportional() {
        let p = DesignPoint { m_rho: 0.4, rho: -183.0 };
        let c = tune_generic(0.3, 2.0, -180.0, p, 1e-7, 0.0, 0.1).unwrap();
        let want = 0.4 / 0.3 * (-3f64).to_radians().cos();
        assert!(rel(c.kp, want) < 1e-9);
        assert!(c.kr2.abs() < 1e-12);
    }

    #[test]
    fn class_a_mapping() {
        assert_eq!(DesignPoint::for_class(PlantClass::A, 0.49).rho, -183.0);
        assert_eq!(DesignPoint::for_class(PlantClass::A, 0.5).rho, -181.0);
        assert_eq!(DesignPoint::for_class(PlantClass::B, 0.5).rho, -130.0);
        assert_eq!(DesignPoint::for_class(PlantClass::C, 0.5).m_rho, 1.0);
    }

    #[test]
    fn proportional_only() {
        let c = PrController { kp: 1.0, kr1: 0.0, kr2: 0.0, omega_r: 0.5, xi: 0.3, eta: 0.1 };
        let tf = pr_transfer_function(&c);
        assert_eq!(tf.num(), tf.den());
        let c0 = PrController { xi: 0.0, ..c };
        assert_eq!(pr_transfer_function(&c0).den(), &[1.0, 0.0, 0.25]);
    }

    #[test]
    fn zero_product_on_printed_row() {
        let c = PrController { kp: 3.82, kr1: 1.14, kr2: -0.108, omega_r: 0.169, xi: 0.0, eta: 0.1 };
        let tf = pr_transfer_function(&c);
        let constant = tf.num()[2];
        assert!((constant - 0.01 * 0.169f64.powi(2) * 3.82).abs() < 2e-3);
    }

    #[test]
    fn residuals() {
        let point = IdentifiedPoint::given(PlantClass::B, 1.69, 0.255);
        let p = DesignPoint::for_class(PlantClass::B, 0.1);
        let c = tune(&point, 0.169, 0.0).unwrap().controller;
        assert!(verify_tuning_equation(&c, &point, p) <= 1e-9 * p.m_rho / point.m_nu);
        let printed = PrController { kp: 3.82, kr1: 1.14, kr2: -0.108, ..c };
        assert!(verify_tuning_equation(&printed, &point, p) <= 1e-2);
        let nudged = PrController { kp: c.kp * 1.1, ..c };
        assert!(verify_tuning_equation(&nudged, &point, p) > 0.0);
    }

    #[test]
    fn rejects_resonance_at_or_above_identified() {
        let p = DesignPoint::for_class(PlantClass::C, 0.5);
        assert!(matches!(
            tune_generic(0.5, 1.0, -60.0, p, 1.0, 0.0, 0.1),
            Err(Error::ResonanceAboveIdentified { .. })
        ));
        assert!(tune_generic(0.5, 1.0, -60.0, p, 0.5, -0.1, 0.1).is_err());
        assert!(tune_generic(0.5, 1.0, -60.0, p, 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn warns_near_identified_frequency() {
        let point = IdentifiedPoint::given(PlantClass::C, 1.0, 0.5);
        assert!(tune(&point, 0.95, 0.0).unwrap().warnings.len() == 1);
        assert!(tune(&point, 0.5, 0.0).unwrap().warnings.is_empty());
    }
}
