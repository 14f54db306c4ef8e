//! Benchmark plants.

use crate::lti::TransferFunction;

/// `e^{-s}/(s+1)^2`.
pub fn ga() -> TransferFunction {
    TransferFunction::new(&[1.0], &[1.0, 2.0, 1.0], 1.0).unwrap()
}

/// `1/(s+1)^2`.
pub fn gb() -> TransferFunction {
    TransferFunction::new(&[1.0], &[1.0, 2.0, 1.0], 0.0).unwrap()
}

/// `1/(s+1)`.
pub fn gc() -> TransferFunction {
    TransferFunction::new(&[1.0], &[1.0, 1.0], 0.0).unwrap()
}

/// `e^{-sL}/((Ts+1)(T1 s+1))`.
pub fn g1(t: f64, l: f64, t1: f64) -> TransferFunction {
    TransferFunction::new(&[1.0], &[t * t1, t + t1, 1.0], l).unwrap()
}

/// `1/((s+1)(Ts+1)^2)`.
pub fn g2(t: f64) -> TransferFunction {
    let den = crate::poly::mul(&[1.0, 1.0], &[t * t, 2.0 * t, 1.0]);
    TransferFunction::new(&[1.0], &den, 0.0).unwrap()
}

/// `1/(s^2 + 2 alpha s + 1)`.
pub fn g3(alpha: f64) -> TransferFunction {
    TransferFunction::new(&[1.0], &[1.0, 2.0 * alpha, 1.0], 0.0).unwrap()
}

/// `alpha/(s + alpha)`.
pub fn g4(alpha: f64) -> TransferFunction {
    TransferFunction::new(&[alpha], &[1.0, alpha], 0.0).unwrap()
}

/// Every benchmark plant with its short name.
pub fn catalogue() -> Vec<(&'static str, TransferFunction)> {
    vec![
        ("ga", ga()),
        ("gb", gb()),
        ("gc", gc()),
        ("g1_t1", g1(1.0, 0.5, 0.5)),
        ("g1_t10", g1(10.0, 0.5, 0.5)),
        ("g2_t0.05", g2(0.05)),
        ("g2_t5", g2(5.0)),
        ("g3_a0.1", g3(0.1)),
        ("g3_a0.7", g3(0.7)),
        ("g4_a0.1", g4(0.1)),
        ("g4_a100", g4(100.0)),
    ]
}

pub fn by_name(name: &str) -> Option<TransferFunction> {
    catalogue()
        .into_iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_dc_gain() {
        for (name, g) in catalogue() {
            assert!((g.dc_gain() - 1.0).abs() < 1e-12, "{name}");
            assert!(g.is_strictly_proper(), "{name}");
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(by_name("GA"), Some(ga()));
        assert!(by_name("nope").is_none());
    }
}
