use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use khsim::analysis::sync_report;
use khsim::cli::{
    eigen_report, load_config, parse_sweep, preset, run_sweep, simulate, write_csv, write_svg, ConfigError, OutputFormat,
    RunConfig, RunMethod, Simulation, TimeStep,
};
use khsim::netlist::parse_value;
use khsim::{Error, Result};

/// Kirchhoff-Heisenberg circuit simulator.
#[derive(Parser)]
#[command(name = "khsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a netlist with a config file (or a preset).
    Run(RunArgs),
    /// Simulate a built-in scenario.
    Preset {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the complex eigenfrequencies of the linearized circuit.
    Eigen {
        #[command(flatten)]
        source: Source,
        /// Auxiliary capacitance for singular nodes.
        #[arg(long)]
        caux: Option<String>,
    },
    /// Integrate the classical equations of motion.
    Classical(RunArgs),
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "preset")]
    netlist: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory for CSV/SVG files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, svg or both.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    /// A step such as 1p, or auto.
    #[arg(long)]
    dt: Option<String>,
    /// auto, rk4-full, linear-propagator or classical.
    #[arg(long)]
    method: Option<String>,
    /// key=start:stop:n over an element value or caux.
    #[arg(long)]
    sweep: Option<String>,
}

fn invalid(key: &str, value: &str, reason: String) -> Error {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason,
    }
    .into()
}

fn quantity(key: &str, text: &str) -> Result<f64> {
    parse_value(text).map_err(|e| invalid(key, text, e.to_string()))
}

impl Common {
    fn apply(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(t) = &self.t_end {
            config.t_end = quantity("t-end", t)?;
        }
        if let Some(dt) = &self.dt {
            config.dt = if dt == "auto" { TimeStep::Auto } else { TimeStep::Fixed(quantity("dt", dt)?) };
        }
        if let Some(m) = &self.method {
            config.method = RunMethod::parse(m)?;
        }
        if let Some(f) = &self.format {
            config.format = OutputFormat::parse(f)?;
        }
        if let Some(out) = &self.out {
            config.output_dir = Some(out.clone());
        }
        Ok(())
    }
}

/// Netlist text, config and a run label.
fn load_inputs(source: &Source, config_path: Option<&Path>) -> Result<(String, RunConfig, String)> {
    match (&source.preset, &source.netlist) {
        (Some(name), _) => {
            let p = preset(name)?;
            Ok((p.netlist, p.config, p.name))
        }
        (None, Some(path)) => {
            let netlist = std::fs::read_to_string(path)?;
            let config_path = config_path.ok_or_else(|| invalid("config", "", "--config is required with --netlist".into()))?;
            let label = path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
            Ok((netlist, load_config(config_path)?, label))
        }
        (None, None) => Err(invalid("netlist", "", "give --netlist or --preset".into())),
    }
}

fn write_outputs(sim: &Simulation, config: &RunConfig, label: &str) -> Result<()> {
    let Some(dir) = &config.output_dir else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    if config.format.csv() {
        let mut meta = vec![("run".to_string(), label.to_string())];
        meta.extend(sim.metadata());
        let path = dir.join(format!("{label}.csv"));
        write_csv(&sim.series, sim.t_ref, &meta, &path)?;
        println!("csv: {}", path.display());
    }
    if config.format.svg() {
        let path = dir.join(format!("{label}.svg"));
        write_svg(&sim.series, sim.pair, sim.t_ref, &path)?;
        println!("svg: {}", path.display());
    }
    Ok(())
}

fn fmt_time(t: f64, t_ref: f64) -> String {
    if t.is_finite() {
        format!("{t:e} s ({:.2} T_ref)", t / t_ref)
    } else {
        "inf".to_string()
    }
}

fn run_one(netlist: &str, config: &RunConfig, label: &str) -> Result<()> {
    let sim = simulate(netlist, config)?;
    for w in &sim.warnings {
        eprintln!("WARN: {w}");
    }
    println!("run: {label}");
    println!("method: {}", sim.method.name());
    println!("dt: {:e} s", sim.dt);
    println!("samples: {}", sim.series.len());
    write_outputs(&sim, config, label)?;
    if let Some(dev) = sim.series.commutator_deviation.iter().copied().reduce(f64::max) {
        println!("max_commutator_deviation: {dev:e}");
    }
    let report = sync_report(&sim.series, sim.pair, &config.tolerances)?;
    println!("sync_pair: {},{}", sim.pair.0 + 1, sim.pair.1 + 1);
    println!("transient_time: {}", fmt_time(report.transient_time, sim.t_ref));
    println!("lock_time: {}", fmt_time(report.lock_time, sim.t_ref));
    println!("phase_lag: {:.6} rad", report.phase_lag);
    println!("amplitude_ratio: {:.6}", report.amplitude_ratio);
    println!("steady_amplitudes: {:.6},{:.6}", report.steady_amplitudes[0], report.steady_amplitudes[1]);
    println!("decay_rate: {:e} 1/s", report.decay_rate);
    println!("strict_sync: {}", report.strict_sync);
    println!("phase_locked: {}", report.phase_locked);
    Ok(())
}

fn run_sweep_command(netlist: &str, config: &RunConfig, label: &str, sweep: &str) -> Result<()> {
    let sweep = parse_sweep(sweep)?;
    let points = run_sweep(netlist, config, &sweep);
    println!("{},transient_time,lock_time,phase_lag,amplitude_ratio,strict_sync,phase_locked,error", sweep.key);
    let mut first_error = None;
    for (i, p) in points.into_iter().enumerate() {
        match p.outcome {
            Ok(o) => {
                for w in &o.simulation.warnings {
                    eprintln!("WARN: {w}");
                }
                write_outputs(&o.simulation, config, &format!("{label}_{}_{i}", sweep.key))?;
                let s = &o.sync;
                println!(
                    "{:e},{:e},{:e},{:e},{:e},{},{},",
                    p.value, s.transient_time, s.lock_time, s.phase_lag, s.amplitude_ratio, s.strict_sync, s.phase_locked
                );
            }
            Err(e) => {
                println!("{:e},,,,,,,{}", p.value, e.to_string().replace(',', ";"));
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run_command(&args, None),
        Command::Classical(args) => run_command(&args, Some(RunMethod::Classical)),
        Command::Preset { name, common } => {
            let source = Source { netlist: None, preset: Some(name) };
            run_command(&RunArgs { source, config: None, common }, None)
        }
        Command::Eigen { source, caux } => {
            let aux = caux.as_deref().map(|c| quantity("caux", c)).transpose()?;
            let (netlist, aux) = match (&source.preset, &source.netlist) {
                (Some(name), _) => {
                    let p = preset(name)?;
                    (p.netlist, aux.or(p.config.aux_value))
                }
                (None, Some(path)) => (std::fs::read_to_string(path)?, aux),
                (None, None) => return Err(invalid("netlist", "", "give --netlist or --preset".into())),
            };
            let (model, report) = eigen_report(&netlist, aux, None)?;
            println!("dofs: {}", model.node_names.join(","));
            println!("s_re,s_im");
            for s in &report.eigenvalues {
                println!("{:e},{:e}", s.re, s.im);
            }
            println!("mode,damping,angular_frequency,frequency_hz");
            for (i, m) in report.modes.iter().enumerate() {
                println!("{},{:e},{:e},{:e}", i + 1, m.damping, m.angular_frequency, m.angular_frequency / std::f64::consts::TAU);
            }
            Ok(())
        }
    }
}

fn run_command(args: &RunArgs, forced: Option<RunMethod>) -> Result<()> {
    let (netlist, mut config, label) = load_inputs(&args.source, args.config.as_deref())?;
    args.common.apply(&mut config)?;
    if let Some(m) = forced {
        config.method = m;
    }
    match &args.common.sweep {
        Some(s) => run_sweep_command(&netlist, &config, &label, s),
        None => run_one(&netlist, &config, &label),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
