//! Built-in scenarios: two resonators in two regimes, two transmons, and the
//! RL-coupled circuit with an auxiliary capacitor.

use crate::eom::default_time_step;
use crate::netlist::parse_netlist;
use crate::quantum::PhysicalConstants;
use crate::topology::{assemble_matrices, regularize};

use super::config::{ConfigError, RunConfig};

pub const PRESET_NAMES: [&str; 6] = [
    "regime1",
    "regime2",
    "transmons",
    "pathological-a",
    "pathological-c",
    "pathological-e",
];

/// Normalization period `1/f_1r` of the resonator presets (s).
pub const RESONATOR_PERIOD: f64 = 1.0 / 5.0e9;

/// Transition frequency of each transmon (Hz).
pub const TRANSMON_FREQUENCY: f64 = 5.0e9;
/// Ratio `E_J0 / E_c` of each transmon.
pub const TRANSMON_RATIO: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub netlist: String,
    pub config: RunConfig,
}

fn resonator_pair(r_local: &str, c2: &str) -> String {
    format!(
        "\
C C1 1 0 1.01p
L L1 1 0 1n
R R1 1 0 {r_local}
C C12 1 2 20.26f
L L12 1 2 10n
R R12 1 2 4k
C C2 2 0 {c2}
L L2 2 0 1n
R R2 2 0 {r_local}
"
    )
}

/// `(C_q, I_c0)` of a transmon with transition frequency `f_ge` and ratio `ℛ`.
pub fn transmon_parameters(f_ge: f64, ratio: f64, k: &PhysicalConstants) -> (f64, f64) {
    let c_q = k.e_charge * k.e_charge * (2.0 * ratio).sqrt() / (k.h * f_ge);
    let e_c = k.e_charge * k.e_charge / (2.0 * c_q);
    let e_j = ratio * e_c;
    (c_q, e_j * k.josephson_constant())
}

fn transmon_pair() -> String {
    let (c_q, i_c) = transmon_parameters(TRANSMON_FREQUENCY, TRANSMON_RATIO, &PhysicalConstants::default());
    format!(
        "\
C Cq1 1 0 {c_q:e}
J J1 1 0 {i_c:e}
R R12 1 2 4k
C Cq2 2 0 {c_q:e}
J J2 2 0 {i_c:e}
"
    )
}

fn rl_coupled(r12: &str, l23: &str) -> String {
    format!(
        "\
C C1 1 0 1.01p
L L1 1 0 1n
R R12 1 2 {r12}
L L23 2 3 {l23}
C C3 3 0 1.01p
L L3 3 0 1n
"
    )
}

/// Sampling stride that records about 200 points per `period`.
fn stride_for(netlist: &str, aux_value: Option<f64>, period: f64) -> usize {
    let dt = parse_netlist(netlist)
        .ok()
        .and_then(|spec| regularize(&spec, aux_value).ok())
        .and_then(|(spec, _)| assemble_matrices(&spec).ok())
        .and_then(|model| default_time_step(&model, PhysicalConstants::default().josephson_constant()).ok());
    dt.map_or(1, |dt| ((period / 200.0) / dt).floor().max(1.0) as usize)
}

fn pathological(name: &str, r12: &str, l23: &str, aux: f64, tilted: bool, periods: f64) -> Preset {
    let netlist = rl_coupled(r12, l23);
    let mut config = RunConfig::new(periods * RESONATOR_PERIOD).with_initial(1, 1.0, 1.0);
    if tilted {
        config = config.with_initial(3, 0.2, -0.8);
    }
    config.t_ref = Some(RESONATOR_PERIOD);
    config.sync_pair = Some((1, 3));
    config.aux_value = Some(aux);
    config.dims = vec![2];
    config.sample_every = stride_for(&netlist, Some(aux), RESONATOR_PERIOD);
    Preset {
        name: name.to_string(),
        netlist,
        config,
    }
}

/// Looks up a built-in scenario by name.
pub fn preset(name: &str) -> Result<Preset, ConfigError> {
    let resonators = |netlist: String, periods: f64| {
        let mut config = RunConfig::new(periods * RESONATOR_PERIOD).with_initial(1, 1.0, 1.0);
        config.t_ref = Some(RESONATOR_PERIOD);
        config.dims = vec![3];
        config.sync_pair = Some((1, 2));
        Preset {
            name: name.to_string(),
            netlist,
            config,
        }
    };
    let (c1, c1_milli) = (1.01e-12, 1.01e-15);
    match name {
        "regime1" => Ok(resonators(resonator_pair("15.71M", "1.01p"), 100.0)),
        "regime2" => Ok(resonators(resonator_pair("0.1571M", "0.99p"), 200.0)),
        "transmons" => {
            let period = 1.0 / TRANSMON_FREQUENCY;
            let mut config = RunConfig::new(20.0 * period).with_initial(1, 1.0, 1.0).with_initial(2, 0.2, -0.8);
            config.t_ref = Some(period);
            config.dims = vec![4];
            config.sync_pair = Some((1, 2));
            Ok(Preset {
                name: name.to_string(),
                netlist: transmon_pair(),
                config,
            })
        }
        "pathological-a" => Ok(pathological(name, "4k", "1n", c1, false, 100.0)),
        "pathological-c" => Ok(pathological(name, "4k", "1n", c1_milli, false, 100.0)),
        "pathological-e" => Ok(pathological(name, "1k", "100n", c1_milli, true, 400.0)),
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}
