//! Rational transfer functions with dead time.
//!
//! A [`TransferFunction`] keeps its coefficient lists (descending powers of
//! `s`) together with its poles and zeros. Phase is accumulated from the
//! individual pole/zero arguments, so it is continuous in frequency and is not
//! folded into (-180, 180]. Series composition concatenates the factor lists,
//! which keeps the phase of a product exactly equal to the sum of the parts.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Roots with |Re| below this (relative to |root|) are treated as lying on the
/// imaginary axis.
const AXIS_TOL: f64 = 1e-10;

/// One sample of a frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub omega: f64,
    pub magnitude: f64,
    /// Unwrapped phase in degrees.
    pub phase_deg: f64,
}

impl FrequencyPoint {
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase_deg.to_radians())
    }

    pub fn magnitude_db(&self) -> f64 {
        20.0 * self.magnitude.log10()
    }
}

/// On-disk plant description: `{"num": [...], "den": [...], "delay": 0.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    #[serde(default)]
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlantSpec", into = "PlantSpec")]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    delay: f64,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    /// Multiple of 2*pi added to the raw argument sum so that the phase at
    /// 0+ matches the low-frequency asymptote.
    branch: f64,
}

impl TryFrom<PlantSpec> for TransferFunction {
    type Error = Error;

    fn try_from(p: PlantSpec) -> Result<Self> {
        TransferFunction::new(&p.num, &p.den, p.delay)
    }
}

impl From<TransferFunction> for PlantSpec {
    fn from(tf: TransferFunction) -> Self {
        PlantSpec {
            num: tf.num,
            den: tf.den,
            delay: tf.delay,
        }
    }
}

impl TransferFunction {
    pub fn new(num: &[f64], den: &[f64], delay: f64) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidTransferFunction(
                "empty coefficient list".into(),
            ));
        }
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(Error::InvalidTransferFunction(
                "non-finite coefficient".into(),
            ));
        }
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::InvalidTransferFunction(format!(
                "delay must be finite and non-negative, got {delay}"
            )));
        }
        let den = poly::trim(den);
        if den == [0.0] {
            return Err(Error::InvalidTransferFunction(
                "denominator is identically zero".into(),
            ));
        }
        let num = poly::trim(num);
        let zeros = if num == [0.0] {
            Vec::new()
        } else {
            poly::roots(&num)
        };
        let poles = poly::roots(&den);
        Ok(Self::assemble(num, den, delay, zeros, poles))
    }

    /// Rational part only, no dead time.
    pub fn rational(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(num, den, 0.0)
    }

    pub fn unity() -> Self {
        Self::assemble(vec![1.0], vec![1.0], 0.0, Vec::new(), Vec::new())
    }

    /// Pure integrator `1/s`.
    pub fn integrator() -> Self {
        Self::assemble(
            vec![1.0],
            vec![1.0, 0.0],
            0.0,
            Vec::new(),
            vec![Complex64::new(0.0, 0.0)],
        )
    }

    /// Pure delay `e^{-sL}`.
    pub fn delay_only(delay: f64) -> Result<Self> {
        Self::new(&[1.0], &[1.0], delay)
    }

    fn assemble(
        num: Vec<f64>,
        den: Vec<f64>,
        delay: f64,
        zeros: Vec<Complex64>,
        poles: Vec<Complex64>,
    ) -> Self {
        let mut tf = TransferFunction {
            num,
            den,
            delay,
            zeros: snap_axis(zeros),
            poles: snap_axis(poles),
            branch: 0.0,
        };
        tf.branch = tf.compute_branch();
        tf
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn num_degree(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            poly::degree(&self.num)
        }
    }

    pub fn den_degree(&self) -> usize {
        poly::degree(&self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num == [0.0]
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.num_degree() < self.den_degree()
    }

    pub fn is_proper(&self) -> bool {
        self.is_zero() || self.num_degree() <= self.den_degree()
    }

    pub fn ensure_strictly_proper(&self) -> Result<()> {
        if self.is_strictly_proper() {
            Ok(())
        } else {
            Err(Error::NotStrictlyProper)
        }
    }

    /// Ratio of leading coefficients.
    pub fn high_frequency_gain(&self) -> f64 {
        self.num[0] / self.den[0]
    }

    /// `G(0)`; infinite when there is a pole at the origin.
    pub fn dc_gain(&self) -> f64 {
        let n = *self.num.last().unwrap();
        let d = *self.den.last().unwrap();
        if d == 0.0 {
            if n == 0.0 {
                f64::NAN
            } else {
                f64::INFINITY
            }
        } else {
            n / d
        }
    }

    /// Smallest time constant `1/max|p|` over the non-zero poles.
    pub fn fastest_time_constant(&self) -> Option<f64> {
        self.poles
            .iter()
            .map(|p| p.norm())
            .filter(|&m| m > 0.0)
            .reduce(f64::max)
            .map(|m| 1.0 / m)
    }

    /// Largest time constant `1/min|Re p|` over the poles off the imaginary axis.
    pub fn dominant_time_constant(&self) -> Option<f64> {
        self.poles
            .iter()
            .map(|p| p.re.abs())
            .filter(|&m| m > 0.0)
            .reduce(f64::min)
            .map(|m| 1.0 / m)
    }

    /// Frequencies of the poles lying on the positive imaginary axis.
    pub fn imaginary_axis_poles(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self
            .poles
            .iter()
            .filter(|p| p.re == 0.0 && p.im > 0.0)
            .map(|p| p.im)
            .collect();
        w.sort_by(f64::total_cmp);
        w.dedup();
        w
    }

    /// Complex value `G(jw)` including the dead time.
    pub fn eval(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        let v = poly::eval(&self.num, s) / poly::eval(&self.den, s);
        v * Complex64::from_polar(1.0, -omega * self.delay)
    }

    pub fn magnitude(&self, omega: f64) -> f64 {
        let s = Complex64::new(0.0, omega);
        (poly::eval(&self.num, s).norm()) / poly::eval(&self.den, s).norm()
    }

    /// Unwrapped phase in degrees, summed from the pole and zero arguments.
    pub fn phase_deg(&self, omega: f64) -> f64 {
        let zsum: f64 = self.zeros.iter().map(|&z| factor_arg(z, omega)).sum();
        let psum: f64 = self.poles.iter().map(|&p| factor_arg(p, omega)).sum();
        let gain = if self.high_frequency_gain() < 0.0 { PI } else { 0.0 };
        (zsum - psum + gain + self.branch - omega * self.delay).to_degrees()
    }

    pub fn freq_response(&self, omega: f64) -> Result<FrequencyPoint> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidBand(format!(
                "frequency must be finite and non-negative, got {omega}"
            )));
        }
        if self.is_singular_at(omega) {
            return Err(Error::SingularFrequency { omega });
        }
        Ok(FrequencyPoint {
            omega,
            magnitude: self.magnitude(omega),
            phase_deg: self.phase_deg(omega),
        })
    }

    pub fn is_singular_at(&self, omega: f64) -> bool {
        self.poles.iter().any(|p| {
            p.re == 0.0 && (p.im - omega).abs() <= 1e-12 * p.im.abs().max(1.0)
        })
    }

    /// Series connection `self * other`. No pole-zero cancellation.
    pub fn series(&self, other: &TransferFunction) -> TransferFunction {
        let num = if self.is_zero() || other.is_zero() {
            vec![0.0]
        } else {
            poly::mul(&self.num, &other.num)
        };
        let den = poly::mul(&self.den, &other.den);
        let zeros = if num == [0.0] {
            Vec::new()
        } else {
            self.zeros.iter().chain(&other.zeros).copied().collect()
        };
        let poles = self.poles.iter().chain(&other.poles).copied().collect();
        Self::assemble(num, den, self.delay + other.delay, zeros, poles)
    }

    pub fn without_delay(&self) -> TransferFunction {
        let mut tf = self.clone();
        tf.delay = 0.0;
        tf
    }

    /// Controllable canonical realization of the rational part (dead time is
    /// handled by the simulator).
    pub fn to_state_space(&self) -> Result<StateSpace> {
        StateSpace::controllable_canonical(&self.num, &self.den)
    }

    /// Realization as a chain of first- and second-order sections built from
    /// the poles and zeros. This is the form the simulators integrate: it
    /// stays well conditioned for high-order rationals whose coefficients
    /// span many decades.
    pub fn to_cascade(&self) -> Result<Cascade> {
        if !self.is_proper() {
            return Err(Error::Improper {
                num: self.num_degree(),
                den: self.den_degree(),
            });
        }
        if self.is_zero() {
            let ss = StateSpace::controllable_canonical(&[0.0], &self.den)?;
            return Ok(Cascade::new(vec![ss]));
        }
        let pole_groups = quadratic_groups(&self.poles);
        let zero_groups = quadratic_groups(&self.zeros);
        let mut nums: Vec<Vec<f64>> = vec![vec![1.0]; pole_groups.len()];
        let mut used = vec![false; pole_groups.len()];
        for zg in &zero_groups {
            let order = zg.len() - 1;
            let slot = (0..pole_groups.len())
                .find(|&i| !used[i] && pole_groups[i].len() - 1 >= order)
                .expect("zero count never exceeds pole count for proper systems");
            used[slot] = true;
            nums[slot] = zg.clone();
        }
        let gain = self.high_frequency_gain();
        let mut sections = Vec::with_capacity(pole_groups.len().max(1));
        if pole_groups.is_empty() {
            sections.push(StateSpace::static_gain(gain));
        }
        for (i, (num, den)) in nums.iter().zip(&pole_groups).enumerate() {
            let num: Vec<f64> = if i == 0 {
                num.iter().map(|c| c * gain).collect()
            } else {
                num.clone()
            };
            sections.push(StateSpace::controllable_canonical(&num, den)?);
        }
        Ok(Cascade::new(sections))
    }

    fn compute_branch(&self) -> f64 {
        // Low-frequency asymptote c * (jw)^k.
        let origin_zeros = self.zeros.iter().filter(|z| z.norm() == 0.0).count() as i64;
        let origin_poles = self.poles.iter().filter(|p| p.norm() == 0.0).count() as i64;
        let k = origin_zeros - origin_poles;
        if self.is_zero() {
            return 0.0;
        }
        let low = |c: &[f64]| *c.iter().rev().find(|&&x| x != 0.0).unwrap();
        let c = low(&self.num) / low(&self.den);
        let target = k as f64 * PI / 2.0 + if c < 0.0 { -PI } else { 0.0 };
        let zsum: f64 = self.zeros.iter().map(|&z| factor_arg(z, 0.0)).sum();
        let psum: f64 = self.poles.iter().map(|&p| factor_arg(p, 0.0)).sum();
        let gain = if self.high_frequency_gain() < 0.0 { PI } else { 0.0 };
        let raw = zsum - psum + gain;
        ((target - raw) / (2.0 * PI)).round() * 2.0 * PI
    }
}

/// Argument of `(jw - r)`, continuous in `w`.
///
/// Closed left-half-plane roots use the principal branch in [-pi/2, pi/2];
/// right-half-plane roots use (pi/2, 3pi/2). Roots at the origin contribute
/// +pi/2 for every w (the 0+ limit).
fn factor_arg(r: Complex64, omega: f64) -> f64 {
    let re = -r.re;
    let im = omega - r.im;
    if r.norm() == 0.0 {
        return PI / 2.0;
    }
    if re >= 0.0 {
        im.atan2(re)
    } else {
        PI - im.atan2(-re)
    }
}

fn snap_axis(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    for r in roots.iter_mut() {
        if r.re.abs() <= AXIS_TOL * r.norm() {
            r.re = 0.0;
        }
    }
    roots
}

/// Groups roots into real quadratic (or linear) factors, ordered by magnitude.
/// Conjugate pairs stay together; real roots are paired with their
/// magnitude-neighbors.
fn quadratic_groups(roots: &[Complex64]) -> Vec<Vec<f64>> {
    let mut sorted: Vec<Complex64> = roots.to_vec();
    sorted.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(b.im.total_cmp(&a.im)));
    let mut groups = Vec::new();
    let mut pending_real: Option<f64> = None;
    let mut skip_conj: Vec<Complex64> = Vec::new();
    for r in sorted {
        if r.im < 0.0 {
            if let Some(pos) = skip_conj.iter().position(|c| *c == r) {
                skip_conj.swap_remove(pos);
                continue;
            }
        }
        if r.im != 0.0 {
            let conj = r.conj();
            skip_conj.push(conj);
            groups.push(vec![1.0, -2.0 * r.re, r.norm_sqr()]);
        } else if let Some(p) = pending_real.take() {
            groups.push(vec![1.0, -(p + r.re), p * r.re]);
        } else {
            pending_real = Some(r.re);
        }
    }
    if let Some(p) = pending_real {
        groups.push(vec![1.0, -p]);
    }
    groups
}

/// Single-input single-output state-space model `x' = Ax + Bu, y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    n: usize,
    /// Row-major `n x n`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl StateSpace {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = b.len();
        if a.len() != n || a.iter().any(|row| row.len() != n) || c.len() != n {
            return Err(Error::InvalidTransferFunction(
                "inconsistent state-space dimensions".into(),
            ));
        }
        Ok(Self {
            n,
            a: a.into_iter().flatten().collect(),
            b,
            c,
            d,
        })
    }

    pub fn static_gain(d: f64) -> Self {
        Self {
            n: 0,
            a: Vec::new(),
            b: Vec::new(),
            c: Vec::new(),
            d,
        }
    }

    /// Companion form with the first state driven by the input:
    /// `A[0][j] = -a_{j+1}/a_0`, sub-diagonal ones, `B = e_1`.
    pub fn controllable_canonical(num: &[f64], den: &[f64]) -> Result<Self> {
        let den = poly::trim(den);
        let num = poly::trim(num);
        if den == [0.0] {
            return Err(Error::InvalidTransferFunction(
                "denominator is identically zero".into(),
            ));
        }
        let n = poly::degree(&den);
        let m = if num == [0.0] { 0 } else { poly::degree(&num) };
        if m > n {
            return Err(Error::Improper { num: m, den: n });
        }
        let lead = den[0];
        let den: Vec<f64> = den.iter().map(|x| x / lead).collect();
        let mut padded = vec![0.0; n + 1 - num.len()];
        padded.extend(num.iter().map(|x| x / lead));
        // Biproper split: num = d * den + remainder.
        let d = padded[0];
        let rem: Vec<f64> = (1..=n).map(|i| padded[i] - d * den[i]).collect();
        let mut a = vec![0.0; n * n];
        for j in 0..n {
            a[j] = -den[j + 1];
        }
        for i in 1..n {
            a[i * n + i - 1] = 1.0;
        }
        let mut b = vec![0.0; n];
        if n > 0 {
            b[0] = 1.0;
        }
        Ok(Self { n, a, b, c: rem, d })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    #[inline]
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            let mut acc = self.b[i] * u;
            for (aij, xj) in row.iter().zip(x) {
                acc += aij * xj;
            }
            dx[i] = acc;
        }
    }

    #[inline]
    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }
}

/// Chain of low-order sections; the output of each feeds the next.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    sections: Vec<StateSpace>,
    offsets: Vec<usize>,
    order: usize,
}

impl Cascade {
    pub fn new(sections: Vec<StateSpace>) -> Self {
        let mut offsets = Vec::with_capacity(sections.len());
        let mut order = 0;
        for s in &sections {
            offsets.push(order);
            order += s.order();
        }
        Self {
            sections,
            offsets,
            order,
        }
    }

    /// `self` followed by `next`.
    pub fn then(mut self, next: Cascade) -> Cascade {
        self.sections.extend(next.sections);
        Cascade::new(self.sections)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sections(&self) -> &[StateSpace] {
        &self.sections
    }

    /// Direct feedthrough of the whole chain.
    pub fn feedthrough(&self) -> f64 {
        self.sections.iter().map(|s| s.d()).product()
    }

    /// Writes `x'` and returns the chain output.
    #[inline]
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) -> f64 {
        let mut signal = u;
        for (s, &off) in self.sections.iter().zip(&self.offsets) {
            let xs = &x[off..off + s.order()];
            s.derivative(xs, signal, &mut dx[off..off + s.order()]);
            signal = s.output(xs, signal);
        }
        signal
    }

    #[inline]
    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        let mut signal = u;
        for (s, &off) in self.sections.iter().zip(&self.offsets) {
            signal = s.output(&x[off..off + s.order()], signal);
        }
        signal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(num: &[f64], den: &[f64], delay: f64) -> TransferFunction {
        TransferFunction::new(num, den, delay).unwrap()
    }

    /// Smallest w with w + 2 atan(w) = pi, by plain bisection.
    fn ga_ultimate() -> f64 {
        let (mut lo, mut hi) = (0.5_f64, 2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + 2.0 * mid.atan() < PI {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn first_order_corner() {
        let p = tf(&[1.0], &[1.0, 1.0], 0.0).freq_response(1.0).unwrap();
        assert!((p.magnitude - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((p.phase_deg + 45.0).abs() < 1e-10);
    }

    #[test]
    fn double_pole_at_sqrt3() {
        let p = tf(&[1.0], &[1.0, 2.0, 1.0], 0.0)
            .freq_response(3f64.sqrt())
            .unwrap();
        assert!((p.magnitude - 0.25).abs() < 1e-12);
        assert!((p.phase_deg + 120.0).abs() < 1e-9);
    }

    #[test]
    fn delayed_plant_crosses_minus_180() {
        let wu = ga_ultimate();
        assert!((wu - 1.3066).abs() < 1e-4);
        let g = tf(&[1.0], &[1.0, 2.0, 1.0], 1.0);
        let p = g.freq_response(1.3066).unwrap();
        assert!((p.magnitude - 0.3694).abs() < 1e-4);
        assert!((p.phase_deg + 180.0).abs() < 0.05);
        let exact = g.freq_response(wu).unwrap();
        assert!((exact.phase_deg + 180.0).abs() < 1e-9);
        assert!((exact.magnitude - 1.0 / (1.0 + wu * wu)).abs() < 1e-12);
    }

    #[test]
    fn phase_is_not_folded() {
        let g = tf(&[1.0], &[1.0, 3.0, 3.0, 1.0], 2.0);
        let p = g.freq_response(10.0).unwrap();
        let expected = -3.0 * 10f64.atan().to_degrees() - 20f64.to_degrees();
        assert!((p.phase_deg - expected).abs() < 1e-8);
    }

    #[test]
    fn singular_on_imaginary_axis_pole() {
        let c = tf(&[1.0, 0.0, 1.0], &[1.0, 0.0, 4.0], 0.0);
        assert!(matches!(
            c.freq_response(2.0),
            Err(Error::SingularFrequency { .. })
        ));
        assert!(c.freq_response(1.9).is_ok());
    }

    #[test]
    fn resonant_pair_drops_phase_by_180() {
        let c = tf(&[1.0], &[1.0, 0.0, 1.0], 0.0);
        assert!(c.phase_deg(0.5).abs() < 1e-12);
        assert!((c.phase_deg(1.5) + 180.0).abs() < 1e-12);
    }

    #[test]
    fn rhp_zero_has_negative_phase() {
        // (1 - s)/(1 + s): all-pass with phase -2 atan(w).
        let g = tf(&[-1.0, 1.0], &[1.0, 1.0], 0.0);
        for w in [0.1, 1.0, 10.0] {
            assert!((g.phase_deg(w) + 2.0 * w.atan().to_degrees()).abs() < 1e-9);
        }
    }

    #[test]
    fn series_examples() {
        let a = tf(&[1.0], &[1.0, 1.0], 0.0);
        let s = a.series(&a);
        assert_eq!(s.num(), &[1.0]);
        assert_eq!(s.den(), &[1.0, 2.0, 1.0]);

        let d = tf(&[1.0], &[1.0, 1.0], 0.5).series(&TransferFunction::delay_only(0.5).unwrap());
        assert_eq!(d.delay(), 1.0);
        assert_eq!(d.den(), &[1.0, 1.0]);

        let m = tf(&[2.0], &[1.0, 2.0], 0.0).series(&tf(&[3.0], &[1.0, 0.0], 0.0));
        assert_eq!(m.num(), &[6.0]);
        assert_eq!(m.den(), &[1.0, 2.0, 0.0]);
        assert_eq!(m.delay(), 0.0);
    }

    #[test]
    fn canonical_forms() {
        let s = tf(&[1.0], &[1.0, 1.0], 0.0).to_state_space().unwrap();
        assert_eq!(s.a(), vec![vec![-1.0]]);
        assert_eq!(s.b(), &[1.0]);
        assert_eq!(s.c(), &[1.0]);
        assert_eq!(s.d(), 0.0);

        let s = tf(&[1.0], &[1.0, 2.0, 1.0], 0.0).to_state_space().unwrap();
        assert_eq!(s.a(), vec![vec![-2.0, -1.0], vec![1.0, 0.0]]);
        assert_eq!(s.b(), &[1.0, 0.0]);
        assert_eq!(s.c(), &[0.0, 1.0]);
        assert_eq!(s.d(), 0.0);

        // Kp + (Kr1 s + Kr2)/(s^2 + wr^2), Kp = Kr1 = wr = 1, Kr2 = 0.
        let s = tf(&[1.0, 1.0, 1.0], &[1.0, 0.0, 1.0], 0.0)
            .to_state_space()
            .unwrap();
        assert_eq!(s.d(), 1.0);
        assert_eq!(s.c(), &[1.0, 0.0]);
        assert_eq!(s.a(), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn improper_is_rejected() {
        let g = tf(&[1.0, 0.0, 0.0], &[1.0, 1.0], 0.0);
        assert!(matches!(g.to_state_space(), Err(Error::Improper { .. })));
        assert!(g.to_cascade().is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(TransferFunction::new(&[1.0], &[0.0, 0.0], 0.0).is_err());
        assert!(TransferFunction::new(&[1.0], &[1.0, 1.0], -1.0).is_err());
        assert!(TransferFunction::new(&[f64::NAN], &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn plant_json_roundtrip() {
        let g: TransferFunction =
            serde_json::from_str(r#"{"num":[1.0],"den":[1.0,2.0,1.0],"delay":1.0}"#).unwrap();
        assert_eq!(g.delay(), 1.0);
        let no_delay: TransferFunction =
            serde_json::from_str(r#"{"num":[1.0],"den":[1.0,1.0]}"#).unwrap();
        assert_eq!(no_delay.delay(), 0.0);
        let back: TransferFunction = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<TransferFunction>(r#"{"num":[1.0],"den":[0.0]}"#).is_err());
    }

    #[test]
    fn cascade_matches_rational() {
        let g = tf(&[2.0, 1.0, 3.0], &[1.0, 4.0, 6.0, 4.0, 1.0], 0.0);
        let cas = g.to_cascade().unwrap();
        assert_eq!(cas.order(), 4);
        // Compare the cascade's frequency response against direct evaluation.
        for w in [0.1, 1.0, 7.0] {
            let s = Complex64::new(0.0, w);
            let mut h = Complex64::new(1.0, 0.0);
            for sec in cas.sections() {
                h *= section_response(sec, s);
            }
            let direct = g.eval(w);
            assert!((h - direct).norm() / direct.norm() < 1e-12);
        }
    }

    fn section_response(s: &StateSpace, x: Complex64) -> Complex64 {
        // C (sI - A)^-1 B + D for order <= 2 companion sections.
        let a = s.a();
        match s.order() {
            0 => Complex64::new(s.d(), 0.0),
            1 => s.c()[0] * s.b()[0] / (x - a[0][0]) + s.d(),
            2 => {
                let den = x * x - a[0][0] * x - a[0][1];
                (s.c()[0] * x + s.c()[1]) / den + s.d()
            }
            _ => unreachable!(),
        }
    }
}
