//! Parameter sweeps over an element value or the auxiliary capacitance.
//!
//! Points run on scoped threads with no shared mutable state; results are
//! collected in sweep order once every point has finished.

use crate::netlist::{parse_netlist, parse_value, render_netlist};
use crate::Result;

use super::config::{ConfigError, RunConfig};
use super::{run_scenario, Outcome};

/// `key=start:stop:n`, with `key` an element name or `caux`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    /// Linearly spaced values, both ends included.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }
}

pub fn parse_sweep(text: &str) -> Result<Sweep, ConfigError> {
    let bad = || ConfigError::BadSweep(text.to_string());
    let (key, range) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, n] = parts[..] else { return Err(bad()) };
    let start = parse_value(start).map_err(|_| bad())?;
    let stop = parse_value(stop).map_err(|_| bad())?;
    let points: usize = n.trim().parse().map_err(|_| bad())?;
    if key.trim().is_empty() || points == 0 {
        return Err(bad());
    }
    Ok(Sweep {
        key: key.trim().to_string(),
        start,
        stop,
        points,
    })
}

#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: Result<Outcome>,
}

/// Netlist and config for one sweep value.
fn point_inputs(netlist: &str, config: &RunConfig, key: &str, value: f64) -> Result<(String, RunConfig)> {
    let mut config = config.clone();
    if key.eq_ignore_ascii_case("caux") {
        config.aux_value = Some(value);
        return Ok((netlist.to_string(), config));
    }
    let spec = parse_netlist(netlist)?.with_value(key, value)?;
    Ok((render_netlist(&spec), config))
}

/// Runs every point of `sweep` concurrently.
pub fn run_sweep(netlist: &str, config: &RunConfig, sweep: &Sweep) -> Vec<SweepPoint> {
    let values = sweep.values();
    std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|&value| {
                scope.spawn(move || {
                    let outcome = point_inputs(netlist, config, &sweep.key, value).and_then(|(n, c)| run_scenario(&n, &c));
                    SweepPoint { value, outcome }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}
