//! Fixed-phase elements for the relay experiment.
//!
//! The −60° element is an 11th-order rational approximation of `1/s^(2/3)`;
//! the −120° element is the `1/s^(1/3)` approximation followed by an exact
//! integrator. Both approximations are tuned for 1e-3..1e3 rad/s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::TransferFunction;

/// Band over which the rational approximations hold their phase.
pub const VALID_BAND: (f64, f64) = (1e-3, 1e3);

/// `1/s^(1/3)`: numerator `a_k` and denominator `b_k`, coefficient of `s^k`.
const M13_A: [f64; 12] = [
    0.0, 111.1, 8.49e4, 1.15e7, 3.232e8, 1.942e9, 2.509e9, 6.986e8, 4.195e7, 5.462e5, 1569.0, 1.0,
];
const M13_B: [f64; 12] = [
    0.3452, 1309.0, 5.4e5, 4.302e7, 7.22e8, 2.598e9, 2.013e9, 3.36e8, 1.211e7, 9.508e4, 167.8,
    0.06905,
];

/// `1/s^(2/3)`.
const M23_A: [f64; 12] = [
    0.0, 11.11, 1.097e4, 1.918e6, 6.963e7, 5.403e8, 9.016e8, 3.24e8, 2.506e7, 4.164e5, 1466.0, 1.0,
];
const M23_B: [f64; 12] = [
    0.7152, 1446.0, 4.387e5, 2.678e7, 3.473e8, 9.672e8, 5.799e8, 7.487e7, 2.08e6, 1.238e4, 15.45,
    0.003576,
];

/// Relay phase options, in degrees.
pub const RELAY_PHASES: [f64; 3] = [0.0, -60.0, -120.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseElement {
    pub gamma: f64,
    pub tf: TransferFunction,
    pub valid_band: (f64, f64),
}

fn ascending(b: &[f64; 12], a: &[f64; 12]) -> Result<TransferFunction> {
    let num: Vec<f64> = b.iter().rev().copied().collect();
    let den: Vec<f64> = a.iter().rev().copied().collect();
    TransferFunction::rational(&num, &den)
}

pub fn make_phase_element(gamma: f64) -> Result<PhaseElement> {
    let tf = if gamma == 0.0 {
        TransferFunction::unity()
    } else if gamma == -60.0 {
        ascending(&M23_B, &M23_A)?
    } else if gamma == -120.0 {
        ascending(&M13_B, &M13_A)?.series(&TransferFunction::integrator())
    } else {
        return Err(Error::UnsupportedRelayPhase(gamma));
    };
    Ok(PhaseElement {
        gamma,
        tf,
        valid_band: VALID_BAND,
    })
}

/// Log-spaced grid of `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    if n < 2 {
        return vec![lo; n];
    }
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}

impl PhaseElement {
    pub fn check_band(&self, lo: f64, hi: f64) -> Result<()> {
        let (vlo, vhi) = self.valid_band;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::InvalidBand(format!("[{lo}, {hi}]")));
        }
        if lo < vlo || hi > vhi {
            return Err(Error::BandOutsideValid {
                lo,
                hi,
                valid_lo: vlo,
                valid_hi: vhi,
            });
        }
        Ok(())
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.valid_band.0 && omega <= self.valid_band.1
    }

    /// Largest |phase − gamma| in degrees over a log grid.
    pub fn phase_flatness(&self, band: (f64, f64), n_points: usize) -> Result<f64> {
        if n_points < 2 {
            return Err(Error::InvalidBand("need at least 2 points".into()));
        }
        self.check_band(band.0, band.1)?;
        Ok(log_grid(band.0, band.1, n_points)
            .into_iter()
            .map(|w| (self.tf.phase_deg(w) - self.gamma).abs())
            .fold(0.0, f64::max))
    }
}
