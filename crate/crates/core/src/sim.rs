//! Fixed-step integration helpers shared by the relay and tracking simulators.

use std::io::Write;

use crate::lti::Cascade;

/// Classical fourth-order Runge-Kutta with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `x` from `t` to `t + h`. `f(t, x, dx)` writes the derivative.
    pub fn step<F>(&mut self, mut f: F, t: f64, x: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = x.len();
        f(t, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// Step with a constant input through a cascade realization.
    pub fn step_cascade(&mut self, sys: &Cascade, x: &mut [f64], u: f64, h: f64) {
        self.step(
            |_, x, dx| {
                sys.derivative(x, u, dx);
            },
            0.0,
            x,
            h,
        );
    }
}

/// Uniformly sampled history of a signal, read back with linear interpolation.
///
/// Used to realize a dead time `L`: the value written at step `k` is read
/// back at time `t - L`.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    h: f64,
    /// Index of the newest sample, in absolute step count.
    newest: usize,
    initial: f64,
}

impl DelayLine {
    /// `delay` and `h` fix the capacity; samples older than `delay + 2h` are
    /// dropped. Reads before time zero return `initial`.
    pub fn new(delay: f64, h: f64, initial: f64) -> Self {
        let cap = (delay / h).ceil() as usize + 4;
        Self {
            buf: vec![initial; cap],
            h,
            newest: 0,
            initial,
        }
    }

    /// Records the sample for step `k` (time `k * h`); steps must be pushed in
    /// order starting from 0.
    pub fn push(&mut self, k: usize, value: f64) {
        let cap = self.buf.len();
        self.buf[k % cap] = value;
        self.newest = k;
    }

    /// Value at absolute time `t`, which must not be newer than the latest
    /// sample nor older than the capacity.
    pub fn read(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return if t < 0.0 { self.initial } else { self.buf[0] };
        }
        let cap = self.buf.len();
        let pos = t / self.h;
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        debug_assert!(k + cap > self.newest + 1, "delay line read too old");
        let a = self.buf[k % cap];
        if frac == 0.0 || k >= self.newest {
            return a;
        }
        let b = self.buf[(k + 1) % cap];
        a + frac * (b - a)
    }
}

/// Sampled loop signals: reference, error, control, output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub e: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

impl TimeSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            e: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: f64, r: f64, e: f64, u: f64, y: f64) {
        self.t.push(t);
        self.r.push(r);
        self.e.push(e);
        self.u.push(u);
        self.y.push(y);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,r,e,u,y")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig(self.t[i]),
                fmt_sig(self.r[i]),
                fmt_sig(self.e[i]),
                fmt_sig(self.u[i]),
                fmt_sig(self.y[i])
            )?;
        }
        Ok(())
    }
}

/// Formats with 6 significant digits, no exponent for moderate magnitudes.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap();
    rounded.to_string()
}
