//! Bode and Nyquist data, gain and phase margins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foi::log_grid;
use crate::lti::{FrequencyPoint, TransferFunction};

/// Relative half-width of the window skipped around an undamped resonance.
pub const RESONANCE_WINDOW: f64 = 1e-6;
const MARGIN_GRID: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<FrequencyPoint>,
    /// Grid frequencies dropped because they sit on an imaginary-axis pole.
    pub excluded: Vec<f64>,
}

fn near_axis_pole(poles: &[f64], w: f64) -> bool {
    poles.iter().any(|&p| (w - p).abs() <= RESONANCE_WINDOW * p)
}

fn check_band(band: (f64, f64), n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidBand("need at least 2 points".into()));
    }
    if !(band.0 > 0.0 && band.0 < band.1 && band.1.is_finite()) {
        return Err(Error::InvalidBand(format!("[{}, {}]", band.0, band.1)));
    }
    Ok(())
}

/// Log-spaced frequency response over `band`.
pub fn sweep(l: &TransferFunction, band: (f64, f64), n: usize) -> Result<Sweep> {
    check_band(band, n)?;
    let axis = l.imaginary_axis_poles();
    let mut points = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    for w in log_grid(band.0, band.1, n) {
        if near_axis_pole(&axis, w) {
            excluded.push(w);
        } else {
            points.push(FrequencyPoint {
                omega: w,
                magnitude: l.magnitude(w),
                phase_deg: l.phase_deg(w),
            });
        }
    }
    Ok(Sweep { points, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NyquistPoint {
    pub omega: f64,
    pub re: f64,
    pub im: f64,
}

pub fn nyquist_data(l: &TransferFunction, band: (f64, f64), n: usize) -> Result<Vec<NyquistPoint>> {
    Ok(sweep(l, band, n)?
        .points
        .into_iter()
        .map(|p| {
            let z = l.eval(p.omega);
            NyquistPoint {
                omega: p.omega,
                re: z.re,
                im: z.im,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// Degrees, wrapped into (-180, 180].
    pub phase_margin: f64,
    pub gain_crossover: f64,
    /// dB.
    pub gain_margin: Option<f64>,
    pub phase_crossover: Option<f64>,
    /// Exactly one unity-gain crossing above the resonance.
    pub crossover_unique: bool,
    /// All unity-gain crossings above the resonance.
    pub crossings: Vec<f64>,
}

/// Band wide enough to contain every corner of `l`.
fn margin_band(l: &TransferFunction) -> (f64, f64) {
    let mut lo: f64 = 1e-3;
    let mut hi: f64 = 1e3;
    for r in l.poles().iter().chain(l.zeros()) {
        let m = r.norm();
        if m > 0.0 {
            lo = lo.min(m * 1e-3);
            hi = hi.max(m * 1e3);
        }
    }
    (lo, hi)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// Gain and phase margins evaluated above the highest undamped resonance of
/// `l` (above zero when there is none).
pub fn margins(l: &TransferFunction) -> Result<MarginReport> {
    if !l.is_proper() {
        return Err(Error::Improper {
            num: l.num_degree(),
            den: l.den_degree(),
        });
    }
    let axis = l.imaginary_axis_poles();
    let floor = axis.last().copied().unwrap_or(0.0);
    let (lo, hi) = margin_band(l);
    let lo = lo.max(floor * (1.0 + 2.0 * RESONANCE_WINDOW));
    let grid = log_grid(lo, hi, MARGIN_GRID);
    let blocked = |a: f64, b: f64| {
        axis.iter()
            .any(|&p| p * (1.0 + RESONANCE_WINDOW) >= a && p * (1.0 - RESONANCE_WINDOW) <= b)
    };

    let log_mag = |w: f64| l.magnitude(w).ln();
    let mut crossings = Vec::new();
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if blocked(a, b) {
            continue;
        }
        let (fa, fb) = (log_mag(a), log_mag(b));
        if fa == 0.0 {
            crossings.push(a);
        } else if (fa > 0.0) != (fb > 0.0) && fb != 0.0 {
            crossings.push(bisect(log_mag, a, b));
        }
    }
    let gain_crossover = *crossings.first().ok_or(Error::NoGainCrossover)?;
    let phase_margin = wrap180(180.0 + l.phase_deg(gain_crossover));

    // Phase crossings of -180 + 360k.
    let band = |w: f64| ((l.phase_deg(w) + 180.0) / 360.0).floor();
    let mut phase_crossover = None;
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if blocked(a, b) {
            continue;
        }
        let (ka, kb) = (band(a), band(b));
        if ka != kb {
            let target = -180.0 + 360.0 * ka.max(kb);
            phase_crossover = Some(bisect(|w| l.phase_deg(w) - target, a, b));
            break;
        }
    }
    let gain_margin = phase_crossover.map(|w| -20.0 * l.magnitude(w).log10());
    Ok(MarginReport {
        phase_margin,
        gain_crossover,
        gain_margin,
        phase_crossover,
        crossover_unique: crossings.len() == 1,
        crossings,
    })
}

fn wrap180(x: f64) -> f64 {
    let mut y = x % 360.0;
    if y <= -180.0 {
        y += 360.0;
    } else if y > 180.0 {
        y -= 360.0;
    }
    y
}
