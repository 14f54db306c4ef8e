//! Relay-based identification and tuning of proportional-resonant (PR)
//! controllers.
//!
//! The pipeline is: run a relay experiment with an adjustable-phase element
//! ([`relay`], [`foi`]), turn the limit cycle into a frequency-response point
//! ([`identify`]), compute PR gains ([`tuner`]), then check the result in the
//! time domain ([`tracking`]) and the frequency domain ([`freq`]).

pub mod batch;
pub mod error;
pub mod foi;
pub mod freq;
pub mod identify;
pub mod lti;
pub mod plants;
pub mod poly;
pub mod relay;
pub mod sim;
pub mod tracking;
pub mod tuner;

pub use error::{Error, Result};
pub use foi::PhaseElement;
pub use freq::MarginReport;
pub use identify::{IdentifiedPoint, Method, PlantClass};
pub use lti::{FrequencyPoint, TransferFunction};
pub use relay::{LimitCycle, RelayConfig};
pub use tracking::{PerformanceReport, TrackingConfig};
pub use tuner::{DesignPoint, PrController};
