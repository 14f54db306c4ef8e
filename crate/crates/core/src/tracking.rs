//! Closed-loop sinusoidal tracking and its performance metrics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{Cascade, StateSpace, TransferFunction};
use crate::sim::{DelayLine, Rk4, TimeSeries};
use crate::tuner::{pr_transfer_function, PrController};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingConfig {
    /// Reference amplitude.
    pub a_r: f64,
    /// Reference frequency, rad/s.
    pub omega_r: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Integration step; `None` derives one from the plant and reference.
    #[serde(default)]
    pub h: Option<f64>,
    /// Fixed horizon in reference periods; `None` extends the run until the
    /// error settles or `max_periods` is reached.
    #[serde(default)]
    pub total_periods: Option<f64>,
    #[serde(default = "default_window")]
    pub steady_window_periods: f64,
    #[serde(default = "default_max_periods")]
    pub max_periods: f64,
}

fn default_epsilon() -> f64 {
    0.02
}

fn default_window() -> f64 {
    5.0
}

fn default_max_periods() -> f64 {
    2560.0
}

/// First horizon tried by the adaptive run.
const START_PERIODS: f64 = 40.0;
/// Output magnitude, relative to `a_r`, treated as divergence.
const DIVERGENCE: f64 = 1e6;

impl TrackingConfig {
    pub fn new(a_r: f64, omega_r: f64) -> Self {
        Self {
            a_r,
            omega_r,
            epsilon: default_epsilon(),
            h: None,
            total_periods: None,
            steady_window_periods: default_window(),
            max_periods: default_max_periods(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidTrackingConfig(m.into()));
        if !(self.a_r > 0.0 && self.a_r.is_finite()) {
            return bad("a_r must be positive");
        }
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return bad("omega_r must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.h.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
            return bad("h must be positive");
        }
        if self.total_periods.is_some_and(|n| !(n >= 20.0 && n.is_finite())) {
            return bad("total_periods must be at least 20");
        }
        if !(self.steady_window_periods >= 1.0 && self.steady_window_periods < 20.0) {
            return bad("steady_window_periods must lie in [1, 20)");
        }
        if !(self.max_periods >= START_PERIODS) {
            return bad("max_periods must be at least 40");
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingStatus {
    Settled,
    /// The error bound is still violated inside the final window.
    Unsettled,
    /// The output exceeded `1e6 a_r`.
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub t_s: Option<f64>,
    pub n_s: Option<f64>,
    /// Percent.
    pub m_o: Option<f64>,
    /// Steady-state output peak.
    pub y_r: f64,
    pub converged: bool,
    pub status: TrackingStatus,
    pub epsilon: f64,
    /// Simulated time.
    pub horizon: f64,
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct TrackingRun {
    pub report: PerformanceReport,
    pub series: TimeSeries,
}

/// Default step: 500 per reference period, 50 per fastest plant time
/// constant, and no longer than the dead time.
pub fn default_step(g: &TransferFunction, omega_r: f64) -> f64 {
    let mut h = 2.0 * PI / omega_r / 500.0;
    if let Some(tau) = g.fastest_time_constant() {
        h = h.min(0.02 * tau);
    }
    if g.delay() > 0.0 {
        h = h.min(g.delay());
    }
    h
}

/// Controller and plant integrated together from rest.
struct Loop {
    ctrl: StateSpace,
    plant: Cascade,
    nc: usize,
    x: Vec<f64>,
    rk: Rk4,
    line: Option<DelayLine>,
    delay: f64,
    a_r: f64,
    omega_r: f64,
    h: f64,
    step: usize,
    series: TimeSeries,
}

impl Loop {
    fn new(g: &TransferFunction, c: &PrController, cfg: &TrackingConfig, h: f64) -> Result<Self> {
        let ctf = pr_transfer_function(c);
        let ctrl = StateSpace::controllable_canonical(ctf.num(), ctf.den())?;
        let plant = g.to_cascade()?;
        let nc = ctrl.order();
        let n = nc + plant.order();
        let delay = g.delay();
        let mut lp = Self {
            ctrl,
            plant,
            nc,
            x: vec![0.0; n],
            rk: Rk4::new(n),
            line: (delay > 0.0).then(|| DelayLine::new(delay, h, 0.0)),
            delay,
            a_r: cfg.a_r,
            omega_r: cfg.omega_r,
            h,
            step: 0,
            series: TimeSeries::default(),
        };
        lp.record();
        Ok(lp)
    }

    fn record(&mut self) {
        let t = self.step as f64 * self.h;
        let r = self.a_r * (self.omega_r * t).sin();
        let y = self.plant.output(&self.x[self.nc..], 0.0);
        let e = r - y;
        let u = self.ctrl.output(&self.x[..self.nc], e);
        if let Some(line) = self.line.as_mut() {
            line.push(self.step, u);
        }
        self.series.push(t, r, e, u, y);
    }

    /// Advances to `steps` total steps; false if the output diverged.
    fn run_to(&mut self, steps: usize) -> bool {
        let limit = DIVERGENCE * self.a_r;
        while self.step < steps {
            let t = self.step as f64 * self.h;
            let (ctrl, plant, nc) = (&self.ctrl, &self.plant, self.nc);
            let (a_r, w, delay) = (self.a_r, self.omega_r, self.delay);
            let line = self.line.as_ref();
            self.rk.step(
                |tau, x, dx| {
                    let (xc, xp) = x.split_at(nc);
                    let (dxc, dxp) = dx.split_at_mut(nc);
                    let e = a_r * (w * tau).sin() - plant.output(xp, 0.0);
                    ctrl.derivative(xc, e, dxc);
                    let u = match line {
                        Some(l) => l.read(tau - delay),
                        None => ctrl.output(xc, e),
                    };
                    plant.derivative(xp, u, dxp);
                },
                t,
                &mut self.x,
                self.h,
            );
            self.step += 1;
            self.record();
            let y = *self.series.y.last().unwrap();
            if !(y.abs() <= limit) {
                return false;
            }
        }
        true
    }
}

/// Simulates the loop from rest over a fixed horizon (default 40 periods).
pub fn simulate_tracking(
    g: &TransferFunction,
    c: &PrController,
    cfg: &TrackingConfig,
) -> Result<TimeSeries> {
    cfg.validate()?;
    g.ensure_strictly_proper()?;
    let h = cfg.h.unwrap_or_else(|| default_step(g, cfg.omega_r));
    let periods = cfg.total_periods.unwrap_or(START_PERIODS);
    let mut lp = Loop::new(g, c, cfg, h)?;
    lp.run_to((periods * cfg.period() / h).ceil() as usize);
    Ok(lp.series)
}

/// Simulates and measures settling time, settling cycles and overshoot.
///
/// Without a fixed horizon, the run is doubled from 40 periods until the
/// error settles within the first half of the record or `max_periods` is
/// reached.
pub fn evaluate_tracking(
    g: &TransferFunction,
    c: &PrController,
    cfg: &TrackingConfig,
) -> Result<TrackingRun> {
    cfg.validate()?;
    g.ensure_strictly_proper()?;
    if c.omega_r <= 0.0 {
        return Err(Error::InvalidTrackingConfig(
            "controller resonance must be positive".into(),
        ));
    }
    let h = cfg.h.unwrap_or_else(|| default_step(g, cfg.omega_r));
    let period = cfg.period();
    let mut lp = Loop::new(g, c, cfg, h)?;
    let mut periods = cfg.total_periods.unwrap_or(START_PERIODS);
    loop {
        let steps = (periods * period / h).ceil() as usize;
        let stable = lp.run_to(steps);
        let horizon = lp.step as f64 * h;
        if !stable {
            let report = PerformanceReport {
                t_s: None,
                n_s: None,
                m_o: None,
                y_r: f64::NAN,
                converged: false,
                status: TrackingStatus::Unstable,
                epsilon: cfg.epsilon,
                horizon,
                h,
            };
            return Ok(TrackingRun {
                report,
                series: lp.series,
            });
        }
        let report = measure(&lp.series, cfg, h);
        let done = cfg.total_periods.is_some()
            || report.t_s.is_some_and(|ts| ts <= 0.5 * horizon)
            || periods >= cfg.max_periods;
        if done {
            return Ok(TrackingRun {
                report,
                series: lp.series,
            });
        }
        periods = (2.0 * periods).min(cfg.max_periods);
    }
}

fn measure(s: &TimeSeries, cfg: &TrackingConfig, h: f64) -> PerformanceReport {
    let horizon = *s.t.last().unwrap();
    let window = cfg.steady_window_periods * cfg.period();
    let window_start = horizon - window;
    let y_r = steady_peak(&s.t, &s.y, window_start);
    let t_s = settling_time(&s.t, &s.e, cfg.a_r, cfg.epsilon, window_start);
    let n_s = t_s.map(|ts| cfg.omega_r * ts / (2.0 * PI));
    let m_o = t_s.map(|ts| overshoot(&s.t, &s.y, ts, y_r));
    PerformanceReport {
        t_s,
        n_s,
        m_o,
        y_r,
        converged: t_s.is_some(),
        status: if t_s.is_some() {
            TrackingStatus::Settled
        } else {
            TrackingStatus::Unsettled
        },
        epsilon: cfg.epsilon,
        horizon,
        h,
    }
}

/// Last instant with `|e/a_r| >= epsilon`, found by scanning backwards and
/// interpolating the crossing. `None` when the bound is still violated at or
/// after `window_start`; `Some(0)` when it is never violated.
pub fn settling_time(t: &[f64], e: &[f64], a_r: f64, epsilon: f64, window_start: f64) -> Option<f64> {
    let bound = epsilon * a_r;
    let k = match e.iter().rposition(|v| v.abs() >= bound) {
        None => return Some(0.0),
        Some(k) => k,
    };
    if k + 1 >= e.len() {
        return None;
    }
    let (a, b) = (e[k].abs(), e[k + 1].abs());
    let ts = t[k] + (t[k + 1] - t[k]) * (a - bound) / (a - b);
    if ts >= window_start {
        None
    } else {
        Some(ts)
    }
}

/// Largest `|y|` from `window_start` on.
pub fn steady_peak(t: &[f64], y: &[f64], window_start: f64) -> f64 {
    t.iter()
        .zip(y)
        .filter(|(t, _)| **t >= window_start)
        .map(|(_, y)| y.abs())
        .fold(0.0, f64::max)
}

/// Percent by which `max |y|` before `t_s` exceeds `y_r`, floored at zero.
pub fn overshoot(t: &[f64], y: &[f64], t_s: f64, y_r: f64) -> f64 {
    let y_max = t
        .iter()
        .zip(y)
        .take_while(|(t, _)| **t < t_s)
        .map(|(_, y)| y.abs())
        .fold(0.0, f64::max);
    ((y_max - y_r) / y_r).max(0.0) * 100.0
}
