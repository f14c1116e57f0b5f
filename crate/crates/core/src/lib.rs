//! Kirchhoff-Heisenberg simulation of dissipative electrical circuits.
//!
//! The pipeline runs netlist text through matrix assembly, the first-order
//! equations of motion, and (optionally) their quantized counterpart on a
//! truncated Fock space, then measures how two resonators synchronize.
//!
//! ```no_run
//! use khsim::cli::{preset, run_scenario};
//!
//! let p = preset("regime1").unwrap();
//! let outcome = run_scenario(&p.netlist, &p.config).unwrap();
//! println!("{:?}", outcome.sync.steady_amplitudes);
//! ```

pub mod analysis;
pub mod cli;
pub mod eom;
pub mod error;
pub mod linalg;
pub mod netlist;
pub mod quantum;
pub mod topology;

pub use error::{Error, Result};
