//! Relay feedback loop with an adjustable-phase element.
//!
//! Loop: `e = r - y`, `v = d sign(e) + b`, `y = F(s) G(s) v`. The relay
//! output is piecewise constant, so the plant dead time is applied to it as a
//! queue of delayed switching events and every RK4 step is split at those
//! events. Switching instants are located inside a step by cubic Hermite
//! interpolation of `e`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foi::PhaseElement;
use crate::lti::{Cascade, TransferFunction};
use crate::sim::{Rk4, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelayConfig {
    /// Relay half-amplitude.
    pub d: f64,
    /// Initial bias; `None` picks `r / (FG)(0)`, or 0 for integrating loops.
    pub b0: Option<f64>,
    /// Reference step.
    pub r: f64,
    /// Integration step; `None` chooses one from the plant and a coarse run.
    pub h: Option<f64>,
    /// Time limit per run; `None` uses 200 dominant time constants of the
    /// plant (dead time included).
    pub max_time: Option<f64>,
    pub settle_cycles: usize,
    pub cycle_tol: f64,
    /// Bias change per cycle per unit mean error; `None` uses `0.5/(FG)(0)`.
    pub bias_gain: Option<f64>,
}

impl Default for RelayConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            b0: None,
            r: 0.0,
            h: None,
            max_time: None,
            settle_cycles: 5,
            cycle_tol: 1e-3,
            bias_gain: None,
        }
    }
}

impl RelayConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidRelayConfig(m.into()));
        if !(self.d > 0.0 && self.d.is_finite()) {
            return bad("d must be positive");
        }
        if !self.r.is_finite() || self.b0.is_some_and(|b| !b.is_finite()) {
            return bad("r and b0 must be finite");
        }
        if self.h.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
            return bad("h must be positive");
        }
        if self.max_time.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return bad("max_time must be positive");
        }
        if self.settle_cycles < 3 {
            return bad("settle_cycles must be at least 3");
        }
        if !(self.cycle_tol > 0.0 && self.cycle_tol < 0.1) {
            return bad("cycle_tol must lie in (0, 0.1)");
        }
        if self.bias_gain.is_some_and(|k| !k.is_finite()) {
            return bad("bias_gain must be finite");
        }
        Ok(())
    }
}

/// A converged symmetric oscillation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    /// Half peak-to-peak of the plant output.
    pub amplitude: f64,
    pub period: f64,
    pub bias_final: f64,
    pub cycles_used: usize,
    pub converged: bool,
    /// Step size the cycle was measured with.
    pub h: f64,
}

impl LimitCycle {
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoOscillation {
    /// Time limit reached before enough matching cycles.
    Timeout,
    /// Oscillation amplitude fell below the detection floor.
    Decayed,
    /// Relay switching at the integration step scale (sliding).
    Chattering,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayOutcome {
    Cycle(LimitCycle),
    NoOscillation(NoOscillation),
}

impl RelayOutcome {
    pub fn cycle(&self) -> Option<&LimitCycle> {
        match self {
            RelayOutcome::Cycle(c) => Some(c),
            RelayOutcome::NoOscillation(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelayRun {
    pub outcome: RelayOutcome,
    pub h: f64,
    pub series: Option<TimeSeries>,
}

/// Runs the relay loop and reports the limit cycle, if any.
pub fn simulate_relay_loop(
    f: &PhaseElement,
    g: &TransferFunction,
    cfg: &RelayConfig,
) -> Result<RelayOutcome> {
    Ok(simulate_relay_recorded(f, g, cfg, None)?.outcome)
}

/// As [`simulate_relay_loop`], optionally keeping every `decimate`-th sample.
pub fn simulate_relay_recorded(
    f: &PhaseElement,
    g: &TransferFunction,
    cfg: &RelayConfig,
    decimate: Option<usize>,
) -> Result<RelayRun> {
    cfg.validate()?;
    g.ensure_strictly_proper()?;
    let loop_tf = f.tf.series(g);
    let sys = loop_tf.to_cascade()?;
    let max_time = cfg.max_time.unwrap_or_else(|| default_max_time(g));
    let dc = loop_tf.dc_gain();
    let integrating = !dc.is_finite();
    let b0 = cfg
        .b0
        .unwrap_or(if integrating || dc == 0.0 { 0.0 } else { cfg.r / dc });
    let bias_gain = cfg
        .bias_gain
        .unwrap_or(if integrating || dc == 0.0 { 0.0 } else { 0.5 / dc });
    let g0 = g.dc_gain().abs();
    let floor = 1e-6 * cfg.d * if g0.is_finite() && g0 > 0.0 { g0 } else { 1.0 };
    let params = RunParams {
        sys: &sys,
        delay: g.delay(),
        d: cfg.d,
        r: cfg.r,
        b0,
        bias_gain,
        max_time,
        settle: cfg.settle_cycles,
        tol: cfg.cycle_tol,
        floor,
    };
    if let Some(h) = cfg.h {
        let (outcome, series) = run(&params, h, decimate);
        return Ok(RelayRun { outcome, h, series });
    }
    let h0 = coarse_step(&f.tf, g);
    let (outcome, series) = run(&params, h0, decimate);
    if let RelayOutcome::Cycle(c) = &outcome {
        let h = h0.min(1e-3 * c.period);
        if h < 0.999 * h0 {
            let (outcome, series) = run(&params, h, decimate);
            return Ok(RelayRun { outcome, h, series });
        }
    }
    Ok(RelayRun {
        outcome,
        h: h0,
        series,
    })
}

/// 200 dominant time constants of the plant, dead time included.
pub fn default_max_time(g: &TransferFunction) -> f64 {
    200.0 * (g.dominant_time_constant().unwrap_or(1.0) + g.delay())
}

/// Step used before the oscillation period is known: resolves the fastest
/// plant mode and keeps RK4 stable on the fastest phase-element pole.
pub fn coarse_step(f: &TransferFunction, g: &TransferFunction) -> f64 {
    let plant = 0.01 * g.fastest_time_constant().unwrap_or(1.0);
    let element = f
        .poles()
        .iter()
        .map(|p| p.norm())
        .fold(0.0, f64::max);
    if element > 0.0 {
        plant.min(1.0 / element)
    } else {
        plant
    }
}

struct RunParams<'a> {
    sys: &'a Cascade,
    delay: f64,
    d: f64,
    r: f64,
    b0: f64,
    bias_gain: f64,
    max_time: f64,
    settle: usize,
    tol: f64,
    floor: f64,
}

#[derive(Debug, Clone, Copy)]
struct CycleStat {
    period: f64,
    amplitude: f64,
    mean_e: f64,
}

/// Cycles with a period below this many steps count as chattering.
const CHATTER_STEPS: f64 = 50.0;
/// Consecutive chattering cycles before giving up.
const CHATTER_CYCLES: usize = 20;

/// The last `n + 1` cycles sit below `floor` and shrink monotonically.
fn decayed(cycles: &[CycleStat], n: usize, floor: f64) -> bool {
    if cycles.len() <= n {
        return false;
    }
    let tail = &cycles[cycles.len() - n - 1..];
    tail.iter().all(|c| c.amplitude < floor) && tail.windows(2).all(|w| w[1].amplitude <= w[0].amplitude)
}

fn sgn(e: f64) -> f64 {
    if e >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

struct Loop<'a> {
    sys: &'a Cascade,
    rk: Rk4,
    dx: Vec<f64>,
}

impl<'a> Loop<'a> {
    /// Integrates from `t0` to `t1` starting with input `w`, applying queued
    /// events from index `idx` on. Returns the final input and the index of
    /// the first unconsumed event.
    fn advance(
        &mut self,
        x: &mut [f64],
        t0: f64,
        t1: f64,
        mut w: f64,
        events: &VecDeque<(f64, f64)>,
        mut idx: usize,
    ) -> (f64, usize) {
        let mut tc = t0;
        let h = t1 - t0;
        while let Some(&(te, val)) = events.get(idx) {
            if te <= tc {
                w = val;
                idx += 1;
            } else if te < t1 - 1e-9 * h {
                self.rk.step_cascade(self.sys, x, w, te - tc);
                tc = te;
                w = val;
                idx += 1;
            } else {
                break;
            }
        }
        self.rk.step_cascade(self.sys, x, w, t1 - tc);
        (w, idx)
    }

    fn output(&self, x: &[f64]) -> f64 {
        self.sys.output(x, 0.0)
    }

    fn output_rate(&mut self, x: &[f64], w: f64) -> f64 {
        self.sys.derivative(x, w, &mut self.dx);
        self.sys.output(&self.dx, 0.0)
    }
}

/// Root in (0, 1) of the cubic Hermite interpolant through (0, e0, de0) and
/// (1, e1, de1), where derivatives are already scaled by the step length.
fn hermite_root(e0: f64, e1: f64, de0: f64, de1: f64) -> f64 {
    let p = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * e0
            + (s3 - 2.0 * s2 + s) * de0
            + (-2.0 * s3 + 3.0 * s2) * e1
            + (s3 - s2) * de1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let plo = p(lo);
    if plo == 0.0 {
        return 0.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if sgn(p(mid)) == sgn(plo) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn run(p: &RunParams, h: f64, decimate: Option<usize>) -> (RelayOutcome, Option<TimeSeries>) {
    let n = p.sys.order();
    let mut lp = Loop {
        sys: p.sys,
        rk: Rk4::new(n),
        dx: vec![0.0; n],
    };
    let mut x = vec![0.0; n];
    let mut x_prev = vec![0.0; n];
    let mut series = decimate.map(|_| TimeSeries::with_capacity(1024));
    let every = decimate.unwrap_or(1).max(1);

    let mut b = p.b0;
    let mut t = 0.0;
    let mut e = p.r - lp.output(&x);
    let mut state = sgn(e);
    let mut v = p.d * state + b;
    // Input currently applied to F G, and pending (time, value) switches.
    let mut w = 0.0;
    let mut events: VecDeque<(f64, f64)> = VecDeque::new();
    events.push_back((p.delay, v));

    let mut cycles: Vec<CycleStat> = Vec::new();
    let mut cycle_start: Option<f64> = None;
    let (mut ymax, mut ymin, mut e_int) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let mut chatter = 0usize;
    let mut step: usize = 0;

    let record = |s: &mut Option<TimeSeries>, step: usize, t: f64, e: f64, v: f64, y: f64| {
        if let Some(s) = s.as_mut() {
            if step % every == 0 {
                s.push(t, p.r, e, v, y);
            }
        }
    };
    record(&mut series, 0, t, e, v, p.r - e);

    while t < p.max_time {
        let t1 = t + h;
        x_prev.copy_from_slice(&x);
        // Apply events due at the start so the rate below is right.
        while let Some(&(te, val)) = events.front() {
            if te <= t {
                w = val;
                events.pop_front();
            } else {
                break;
            }
        }
        let de0 = -lp.output_rate(&x, w) * h;
        let (mut w1, mut used) = lp.advance(&mut x, t, t1, w, &events, 0);
        let y1 = lp.output(&x);
        let mut e1 = p.r - y1;

        let mut switch: Option<(f64, f64)> = None;
        if sgn(e1) != state {
            let ts = if sgn(e) != state {
                t
            } else {
                let de1 = -lp.output_rate(&x, w1) * h;
                t + h * hermite_root(e, e1, de0, de1)
            };
            switch = Some((ts, sgn(e1)));
        }

        // Trapezoid on e, split at the crossing.
        let (area_before, area_after) = match switch {
            Some((ts, _)) => (0.5 * e * (ts - t), 0.5 * e1 * (t1 - ts)),
            None => (0.5 * (e + e1) * h, 0.0),
        };

        if let Some((ts, new_state)) = switch {
            state = new_state;
            if new_state > 0.0 {
                // Rising crossing of e closes a cycle.
                if let Some(start) = cycle_start {
                    e_int += area_before;
                    let period = ts - start;
                    let stat = CycleStat {
                        period,
                        amplitude: 0.5 * (ymax - ymin),
                        mean_e: e_int / period,
                    };
                    cycles.push(stat);
                    b += p.bias_gain * stat.mean_e;
                    if period < CHATTER_STEPS * h {
                        chatter += 1;
                        if chatter >= CHATTER_CYCLES {
                            return (RelayOutcome::NoOscillation(NoOscillation::Chattering), series);
                        }
                    } else {
                        chatter = 0;
                    }
                    if decayed(&cycles, p.settle, p.floor) {
                        return (RelayOutcome::NoOscillation(NoOscillation::Decayed), series);
                    }
                    if let Some(c) = converged(&cycles, p.settle, p.tol) {
                        let cycle = LimitCycle {
                            bias_final: b,
                            h,
                            ..c
                        };
                        return (RelayOutcome::Cycle(cycle), series);
                    }
                }
                cycle_start = Some(ts);
                ymax = f64::NEG_INFINITY;
                ymin = f64::INFINITY;
                e_int = area_after;
            } else {
                e_int += area_before + area_after;
            }
            v = p.d * state + b;
            let te = ts + p.delay;
            events.push_back((te, v));
            if te < t1 {
                // The switch reaches the loop within this step: redo it.
                x.copy_from_slice(&x_prev);
                (w1, used) = lp.advance(&mut x, t, t1, w, &events, 0);
                e1 = p.r - lp.output(&x);
            }
        } else {
            e_int += area_before;
        }

        for _ in 0..used {
            events.pop_front();
        }
        w = w1;
        t = t1;
        e = e1;
        step += 1;
        let y = p.r - e;
        ymax = ymax.max(y);
        ymin = ymin.min(y);
        if !y.is_finite() {
            break;
        }
        record(&mut series, step, t, e, v, y);
    }
    (RelayOutcome::NoOscillation(NoOscillation::Timeout), series)
}

fn converged(cycles: &[CycleStat], settle: usize, tol: f64) -> Option<LimitCycle> {
    if cycles.len() < settle {
        return None;
    }
    let win = &cycles[cycles.len() - settle..];
    let k = settle as f64;
    let a = win.iter().map(|c| c.amplitude).sum::<f64>() / k;
    let t = win.iter().map(|c| c.period).sum::<f64>() / k;
    if !(a > 0.0 && t > 0.0) {
        return None;
    }
    let ok = win.iter().all(|c| {
        (c.amplitude - a).abs() <= tol * a
            && (c.period - t).abs() <= tol * t
            && c.mean_e.abs() <= tol * a
    });
    ok.then_some(LimitCycle {
        amplitude: a,
        period: t,
        bias_final: 0.0,
        cycles_used: cycles.len(),
        converged: true,
        h: 0.0,
    })
}

/// One oscillation segment found by [`detect_cycles`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMeasure {
    pub amplitude: f64,
    pub period: f64,
    pub mean: f64,
}

/// Splits a uniformly sampled signal into cycles at upward crossings of the
/// record mean.
pub fn detect_cycles(signal: &[f64], h: f64) -> Vec<CycleMeasure> {
    if signal.len() < 2 {
        return Vec::new();
    }
    let level = signal.iter().sum::<f64>() / signal.len() as f64;
    let mut out = Vec::new();
    let mut start: Option<(f64, usize)> = None;
    for i in 1..signal.len() {
        let (a, b) = (signal[i - 1] - level, signal[i] - level);
        if a < 0.0 && b >= 0.0 {
            let tc = h * ((i - 1) as f64 + a / (a - b));
            if let Some((t0, i0)) = start {
                let seg = &signal[i0..i];
                let max = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = seg.iter().copied().fold(f64::INFINITY, f64::min);
                let period = tc - t0;
                let mut area = 0.0;
                for w in signal[i0 - 1..=i].windows(2) {
                    area += 0.5 * (w[0] + w[1]) * h;
                }
                // Trim the partial steps outside [t0, tc].
                let lead = t0 - h * (i0 - 1) as f64;
                let tail = h * i as f64 - tc;
                area -= lead * 0.5 * (signal[i0 - 1] + signal[i0]);
                area -= tail * 0.5 * (signal[i - 1] + signal[i]);
                let mean = area / period;
                out.push(CycleMeasure {
                    amplitude: 0.5 * (max - min),
                    period,
                    mean,
                });
            }
            start = Some((tc, i));
        }
    }
    out
}
