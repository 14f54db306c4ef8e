use std::f64::consts::PI;
use std::path::Path;

use raptune_core::batch::{run_batch, BatchSpec, RowStatus, CSV_HEADER};
use raptune_core::foi::{log_grid, make_phase_element};
use raptune_core::identify::{analytic_identify, analytic_point, rap_identify, Method};
use raptune_core::relay::{simulate_relay_recorded, RelayConfig};
use raptune_core::tracking::{simulate_tracking, TrackingConfig};
use raptune_core::tuner::tune;
use raptune_core::{plants, Error, PlantClass, TransferFunction};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn class_a_cycle_sits_near_the_phase_crossover() {
    for name in ["ga", "g1_t1", "g1_t10", "g2_t0.05", "g2_t5"] {
        let g = plants::by_name(name).unwrap();
        let p = rap_identify(&g, &RelayConfig::default()).unwrap();
        assert_eq!(p.plant_class, PlantClass::A);
        let err = g.phase_deg(p.omega_nu) + 180.0;
        assert!(err.abs() <= 3.0, "{name}: {err}");
    }
}

#[test]
fn first_harmonic_amplitude_balance() {
    for (g, gamma) in [(plants::ga(), 0.0), (plants::gb(), -60.0), (plants::gc(), -120.0)] {
        let f = make_phase_element(gamma).unwrap();
        let cfg = RelayConfig::default();
        let run = simulate_relay_recorded(&f, &g, &cfg, None).unwrap();
        let c = run.outcome.cycle().unwrap().clone();
        let w = c.omega();
        let predicted = 4.0 * cfg.d / PI * f.tf.magnitude(w) * g.magnitude(w);
        assert!(rel(c.amplitude, predicted) <= 0.10, "gamma {gamma}: {} vs {predicted}", c.amplitude);
    }
}

#[test]
fn converged_cycles_are_unbiased() {
    let cfg = RelayConfig { r: 1.0, ..Default::default() };
    let f = make_phase_element(0.0).unwrap();
    let run = simulate_relay_recorded(&f, &plants::ga(), &cfg, Some(1)).unwrap();
    let c = run.outcome.cycle().unwrap().clone();
    let s = run.series.unwrap();
    let n = (c.period / run.h).round() as usize;
    let tail = &s.e[s.e.len() - n..];
    let mean = tail.iter().sum::<f64>() / n as f64;
    assert!(mean.abs() <= cfg.cycle_tol * c.amplitude + 1e-3, "mean {mean}");
    assert!(c.bias_final > 0.0);
}

#[test]
fn relay_phase_bookkeeping_and_class_agreement() {
    for (name, g) in plants::catalogue() {
        let oracle = analytic_point(&g).unwrap();
        let p = rap_identify(&g, &RelayConfig::default()).unwrap();
        assert_eq!(p.plant_class, oracle.plant_class, "{name}");
        assert_eq!(p.method, Method::Relay);
        let f = make_phase_element(p.gamma_used).unwrap();
        let phase = p.phase_deg.unwrap();
        assert!((phase - (-180.0 - f.tf.phase_deg(p.omega_nu))).abs() < 1e-9);
        assert!((phase - p.nu).abs() <= 2.0, "{name}: {phase}");
    }
}

#[test]
fn slow_plant_is_rejected_outside_the_element_band() {
    let g = TransferFunction::new(&[1.0], &[1e8, 2e4, 1.0], 2e4).unwrap();
    assert!(matches!(
        rap_identify(&g, &RelayConfig::default()),
        Err(Error::OutsideApproximationBand { .. })
    ));
    let (w, _) = analytic_identify(&g, -180.0).unwrap();
    assert!(w < 1e-3);
}

#[test]
fn phase_element_magnitude_slopes() {
    let fit = |gamma: f64| {
        let e = make_phase_element(gamma).unwrap();
        let grid = log_grid(1e-1, 1e1, 200);
        let xs: Vec<f64> = grid.iter().map(|w| w.log10()).collect();
        let ys: Vec<f64> = grid.iter().map(|&w| 20.0 * e.tf.magnitude(w).log10()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 200.0, ys.iter().sum::<f64>() / 200.0);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    };
    assert!((fit(-60.0) + 13.33).abs() <= 1.0);
    // The -120 element includes the integrator: -6.67 - 20.
    assert!((fit(-120.0) + 26.67).abs() <= 1.0);
}

#[test]
fn realized_element_magnitudes() {
    let m60 = make_phase_element(-60.0).unwrap().tf.magnitude(1.69);
    assert!((m60 - 0.757).abs() < 5e-3, "{m60}");
    assert!((m60 - 1.69f64.powf(-2.0 / 3.0)).abs() > 0.04);
}

/// Peak of |e| over each reference period.
fn period_peaks() -> Vec<f64> {
    let g = plants::gb();
    let point = analytic_point(&g).unwrap();
    let c = tune(&point, 0.5 * point.omega_nu, 0.0).unwrap().controller;
    let mut cfg = TrackingConfig::new(1.0, c.omega_r);
    cfg.total_periods = Some(20.0);
    let s = simulate_tracking(&g, &c, &cfg).unwrap();
    let mut peaks = vec![0.0f64; 20];
    for (t, e) in s.t.iter().zip(&s.e) {
        let k = ((t / cfg.period()) as usize).min(19);
        peaks[k] = peaks[k].max(e.abs());
    }
    peaks
}

#[test]
fn tracking_error_vanishes_with_time() {
    let peaks = period_peaks();
    assert!(peaks[..6].windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
    assert!(peaks[19] < 1e-3 * peaks[0]);
}

#[test]
fn bundled_batch_spec_has_paper_shape() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/paper.json");
    let mut spec = BatchSpec::from_file(&path).unwrap();
    assert_eq!(spec.plants.len(), 8);
    assert_eq!(spec.ratios.len(), 5);
    spec.plants.truncate(2);
    let report = run_batch(&spec).unwrap();
    for p in &report.plants {
        assert_eq!(p.rows.len(), 5);
        assert!(p.rows.iter().all(|r| r.status == RowStatus::Ok));
        let csv = p.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.all(|l| l.split(',').count() == 8));
    }
    // Table IX row 2.
    let row = &report.plants[0].rows[1];
    assert!(rel(row.kp.unwrap(), 1.29) < 0.01 && rel(row.kr2.unwrap(), -0.591) < 0.01);
    assert!((row.n_s.unwrap() - 2.0).abs() < 0.1);
}
