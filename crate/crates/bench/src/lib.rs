//! Shared fixtures for the benchmarks.

use raptune_core::identify::IdentifiedPoint;
use raptune_core::tuner::{tune, PrController};
use raptune_core::{plants, PlantClass, TransferFunction};

/// Plants exercised by every benchmark, one per class.
pub fn benchmark_plants() -> [(&'static str, TransferFunction); 3] {
    [("ga", plants::ga()), ("gb", plants::gb()), ("gc", plants::gc())]
}

/// Controller for `gb` at a tenth of its identified frequency.
pub fn gb_controller() -> PrController {
    let point = IdentifiedPoint::given(PlantClass::B, 3f64.sqrt(), 0.25);
    tune(&point, 0.1 * point.omega_nu, 0.0).unwrap().controller
}
