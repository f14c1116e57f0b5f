//! End-to-end runs: netlist and config in, traces and reports out.

mod config;
mod output;
mod preset;
mod sweep;

pub use config::{load_config, parse_config, ConfigError, InitialAmplitudes, OutputFormat, RunConfig, RunMethod, TimeStep};
pub use output::{parse_csv, read_csv, svg_string, write_csv, write_csv_to, write_svg, CsvData, OutputError};
pub use preset::{preset, transmon_parameters, Preset, PRESET_NAMES, RESONATOR_PERIOD, TRANSMON_FREQUENCY, TRANSMON_RATIO};
pub use sweep::{parse_sweep, run_sweep, Sweep, SweepPoint};

use num_complex::Complex64;

use crate::analysis::{sync_report, SyncReport};
use crate::eom::{build_system, coexistence_warnings, default_time_step, eigenfrequencies, integrate_classical, ClassicalState, EigenReport, FirstOrderSystem};
use crate::netlist::{parse_netlist, CircuitSpec};
use crate::quantum::{integrate_quantum, FockSpec, InitialStateSpec, IntegrationOptions, Method, PhysicalConstants, QuantumWorkspace, Scales, TimeSeries, zero_point_scales_at};
use crate::topology::{assemble_matrices, linearized_params, regularize, CircuitModel};
use crate::Result;

/// A finished integration before synchronization analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// The circuit actually simulated, auxiliary capacitors included.
    pub spec: CircuitSpec,
    pub model: CircuitModel,
    pub system: FirstOrderSystem,
    pub series: TimeSeries,
    /// Eigenvalues of the (linearized) system.
    pub eigen: EigenReport,
    /// Method after resolving `auto`.
    pub method: RunMethod,
    pub dt: f64,
    pub t_end: f64,
    /// Normalization period of `t_norm`.
    pub t_ref: f64,
    /// Zero-based DOFs compared by the synchronization report.
    pub pair: (usize, usize),
    pub dims: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Simulation {
    /// `# key: value` lines written ahead of the CSV header.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut meta = vec![
            ("generator".to_string(), format!("khsim {}", env!("CARGO_PKG_VERSION"))),
            ("method".to_string(), self.method.name().to_string()),
            ("dt".to_string(), format!("{:e}", self.dt)),
            ("t_end".to_string(), format!("{:e}", self.t_end)),
            ("t_ref".to_string(), format!("{:e}", self.t_ref)),
            ("dofs".to_string(), self.model.node_names.join(",")),
        ];
        if self.method != RunMethod::Classical {
            let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
            meta.push(("dims".to_string(), dims.join(",")));
        }
        for (k, s) in self.series.scales.iter().enumerate() {
            meta.push((format!("q{}_scale", k + 1), format!("{:e}", s.charge)));
            meta.push((format!("phi{}_scale", k + 1), format!("{:e}", s.flux)));
        }
        meta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub simulation: Simulation,
    pub sync: SyncReport,
}

impl Outcome {
    pub fn series(&self) -> &TimeSeries {
        &self.simulation.series
    }

    pub fn eigen(&self) -> &EigenReport {
        &self.simulation.eigen
    }
}

fn resolve_dims(config: &RunConfig, model: &CircuitModel) -> Result<Vec<usize>> {
    let n = model.n_dof;
    let dims = match config.dims.len() {
        0 if !model.junctions.is_empty() => vec![4; n],
        0 if !model.auxiliary_nodes.is_empty() => vec![2; n],
        0 => vec![3; n],
        1 => vec![config.dims[0]; n],
        m if m == n => config.dims.clone(),
        m => {
            return Err(ConfigError::DofCount {
                key: "dims",
                expected: n,
                got: m,
            }
            .into())
        }
    };
    Ok(dims)
}

fn initial_spec(config: &RunConfig, n_dof: usize) -> Result<InitialStateSpec> {
    let mut spec = InitialStateSpec::vacuum(n_dof);
    for a in &config.initial {
        if a.dof == 0 || a.dof > n_dof {
            return Err(ConfigError::NoSuchDof { dof: a.dof, n_dof }.into());
        }
        spec.amplitudes[a.dof - 1] = (a.alpha, a.beta);
    }
    Ok(spec)
}

/// `(⟨q̂⟩, ⟨φ̂⟩)` of `α|0⟩ + β|1⟩` in units of the zero-point scales.
fn two_level_expectations(alpha: Complex64, beta: Complex64) -> (f64, f64) {
    let a = alpha.conj() * beta / (alpha.norm_sqr() + beta.norm_sqr());
    (2.0 * a.im, 2.0 * a.re)
}

fn classical_series(
    system: &FirstOrderSystem,
    scales: Vec<Scales>,
    initial: &InitialStateSpec,
    dt: f64,
    t_end: f64,
    sample_every: usize,
) -> Result<TimeSeries> {
    let n = system.n_dof;
    let mut q = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for (s, &(alpha, beta)) in scales.iter().zip(&initial.amplitudes) {
        let (qn, pn) = two_level_expectations(alpha, beta);
        q.push(qn * s.charge);
        phi.push(pn * s.flux);
    }
    let trajectory = integrate_classical(system, &ClassicalState::new(q, phi), dt, t_end)?;
    let mut series = TimeSeries::with_dofs(scales);
    for state in trajectory.iter().step_by(sample_every) {
        let x = state.to_vector();
        series.push(state.t, x.as_slice(), system.energy(&x), system.dissipation(&x));
    }
    Ok(series)
}

/// Parses, assembles, integrates. Pathological circuits are regularized with
/// an auxiliary capacitor and a warning.
pub fn simulate(netlist: &str, config: &RunConfig) -> Result<Simulation> {
    config.validate()?;
    let constants = PhysicalConstants::default();
    let k_j = config.k_j.unwrap_or_else(|| constants.josephson_constant());
    let parsed = parse_netlist(netlist)?;
    let (spec, singular) = regularize(&parsed, config.aux_value)?;
    let mut warnings = Vec::new();
    for node in &singular {
        let value = spec
            .elements()
            .iter()
            .find(|e| e.is_auxiliary() && (e.node_a == *node || e.node_b == *node))
            .map_or(f64::NAN, |e| e.value);
        warnings.push(format!("node {node} has no capacitance; inserted auxiliary capacitor of {value:e} F"));
    }
    let model = assemble_matrices(&spec)?;
    let system = build_system(&model, k_j)?;
    warnings.extend(coexistence_warnings(&model));
    let eigen = eigenfrequencies(&system.linearized())?;
    let dt = match config.dt {
        TimeStep::Auto => default_time_step(&model, k_j)?,
        TimeStep::Fixed(dt) => dt,
    };
    let method = match (config.method, system.is_linear()) {
        (RunMethod::Auto, true) => RunMethod::LinearPropagator,
        (RunMethod::Auto, false) => RunMethod::Rk4Full,
        (RunMethod::LinearPropagator, false) => return Err(ConfigError::MethodNotAllowed("linear-propagator").into()),
        (m, _) => m,
    };
    let n = model.n_dof;
    let pair = match config.sync_pair {
        Some((a, b)) => {
            for dof in [a, b] {
                if dof > n {
                    return Err(ConfigError::NoSuchDof { dof, n_dof: n }.into());
                }
            }
            (a - 1, b - 1)
        }
        None => (0, n.saturating_sub(1)),
    };
    let t_ref = match config.t_ref {
        Some(t) => t,
        None => linearized_params(&model, 0, Some(k_j))?.period(),
    };
    let dims = resolve_dims(config, &model)?;
    let initial = initial_spec(config, n)?;
    let scales = (0..n)
        .map(|k| zero_point_scales_at(&model, &constants, k, k_j))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let series = if method == RunMethod::Classical {
        classical_series(&system, scales, &initial, dt, config.t_end, config.sample_every)?
    } else {
        let ws = QuantumWorkspace::with_scales(scales, FockSpec::new(dims.clone())?, &initial)?;
        let quantum_method = if method == RunMethod::LinearPropagator {
            Method::LinearPropagator
        } else {
            Method::Rk4Full
        };
        let options = IntegrationOptions {
            sample_every: config.sample_every,
            diagnostics: config.diagnostics,
        };
        integrate_quantum(&ws, &system, dt, config.t_end, quantum_method, options)?
    };

    Ok(Simulation {
        spec,
        model,
        system,
        series,
        eigen,
        method,
        dt,
        t_end: config.t_end,
        t_ref,
        pair,
        dims,
        warnings,
    })
}

/// Full pipeline: [`simulate`] followed by the synchronization report.
pub fn run_scenario(netlist: &str, config: &RunConfig) -> Result<Outcome> {
    let simulation = simulate(netlist, config)?;
    let sync = sync_report(&simulation.series, simulation.pair, &config.tolerances)?;
    Ok(Outcome { simulation, sync })
}

/// Eigenvalues of the (linearized) circuit without integrating.
pub fn eigen_report(netlist: &str, aux_value: Option<f64>, k_j: Option<f64>) -> Result<(CircuitModel, EigenReport)> {
    let k_j = k_j.unwrap_or_else(|| PhysicalConstants::default().josephson_constant());
    let (spec, _) = regularize(&parse_netlist(netlist)?, aux_value)?;
    let model = assemble_matrices(&spec)?;
    let system = build_system(&model, k_j)?;
    let eigen = eigenfrequencies(&system.linearized())?;
    Ok((model, eigen))
}
