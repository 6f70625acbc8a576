//! Analysis toolkit for spring-loaded coaxial interconnect ("socket") hardware:
//! Touchstone/TDR ingestion, frequency-domain network parameters, time-domain
//! impedance profiling, notch-resonator fitting, and closed-form physical
//! estimators for cavity modes, DC resistance, heat transfer, magnetic flux,
//! and qubit-lattice layout planning.
//!
//! All quantities are SI unless a unit suffix says otherwise (`_db`, `_deg`).

pub mod constants;
pub mod estimators;
pub mod io;
pub mod layout;
pub mod network;
pub mod pulse;
pub mod resfit;
pub mod tdr;

mod math;

pub use io::{NetworkData, TdrTrace};
