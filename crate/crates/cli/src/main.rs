use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fxsynth::fxcode::{emit_c_source, FxProgram};
use fxsynth::problem::{
    analyze_gains, calibrate_tau, load_problem, parse_gains, preset, run_synthesis, Artifacts,
    GainReport, Gains, Metrics, ProblemSpec, RunReport, TAU_CANDIDATES,
};
use fxsynth::Error;

// Like println!, but a closed pipe ends the process quietly.
macro_rules! out {
    ($($arg:tt)*) => {
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    };
}

#[derive(Parser)]
#[command(name = "fxsynth", version, about = "Fixed-point controller synthesis with certified quantization error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Baseline LQR/LQG (or PID start) gains, swarm search and report.
    Run {
        /// Problem file, or the name of a preset.
        spec: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip the search and analyze these gains instead.
        #[arg(long, value_name = "GAINS")]
        gains: Option<PathBuf>,
    },
    /// Metrics, program, C source and simulation for given gains.
    Analyze {
        spec: String,
        #[arg(long)]
        gains: PathBuf,
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Analyze a preset with its published gains, next to the LQR/LQG baseline.
    Bench {
        /// One of: bicycle, dc_motor, pitch, inverted_pendulum, batch_reactor, pid_pendulum.
        preset: String,
        /// Run the swarm search instead of analyzing the published gains.
        #[arg(long)]
        search: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the C source of a program.json.
    EmitC {
        program: PathBuf,
        #[arg(long, default_value = "controller")]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep sampling times against target LQR/LQG baseline costs.
    Calibrate {
        spec: String,
        #[arg(long)]
        s_target: f64,
        #[arg(long)]
        p_target: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_)
        | Error::Config(_)
        | Error::Dimension(_)
        | Error::Io(_)
        | Error::InvalidInterval(..)
        | Error::BudgetExceeded { .. }
        | Error::Unsupported(_) => 1,
        Error::Infeasible(_) | Error::NotStable(_) => 2,
        _ => 3,
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_overrides(mut spec: ProblemSpec, seed: Option<u64>, bits: Option<u32>, tau: Option<f64>) -> Result<ProblemSpec, Error> {
    if let Some(s) = seed {
        spec.swarm.seed = s;
    }
    if let Some(b) = bits {
        spec.bits = b;
    }
    if let Some(t) = tau {
        spec.tau = t;
    }
    spec.validate()?;
    Ok(spec)
}

fn fmt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_infinite() => "inf".into(),
        Some(v) => format!("{v:.6}"),
        None => "-".into(),
    }
}

fn print_gains(label: &str, g: &GainReport) {
    match &g.gains {
        Gains::Observer { k, l } => out!("{label}: K = {:?}, L = {:?}", k.to_rows(), l.to_rows()),
        Gains::Pid(p) => out!("{label}: kp = {}, ki = {}, kd = {}", p.kp, p.ki, p.kd),
    }
    match &g.metrics {
        Metrics::Observer(r) => {
            let (g1, g2b) = r.radius_coeffs.unzip();
            out!(
                "  stable {}  ||S|| {}  ||P|| {}  radius {} b(e1) + {}  cost {}",
                r.stable,
                fmt(r.s_norm),
                fmt(r.p_norm),
                fmt(g1),
                fmt(g2b),
                fmt(Some(r.cost))
            );
        }
        Metrics::Pid(r) => out!(
            "  stable {}  PM {}  GM {}  radius {}  settling {} s  deviation {}  cost {}",
            r.stable,
            fmt(r.phase_margin),
            fmt(r.gain_margin),
            fmt(r.radius),
            fmt(r.settling_time),
            fmt(r.deviation),
            fmt(Some(r.cost))
        ),
    }
}

fn finish(report: &RunReport, files: &Artifacts, out: &PathBuf) -> Result<(), Error> {
    files.write_to(out)?;
    out!("{} ({:?}, tau {}, {} bits)", report.name, report.mode, report.tau, report.bits);
    print_gains("baseline", &report.baseline);
    if let Some(s) = &report.synthesized {
        print_gains("synthesized", s);
    }
    if let Some(f) = report.improvement_factor {
        out!("improvement factor {f:.3}");
    }
    if let Some(s) = &report.swarm {
        out!("swarm: seed {}, {} iterations, stalled {}", s.seed, s.iterations, s.stalled);
    }
    out!("wrote {} files to {}", files.files.len(), out.display());
    Ok(())
}

fn bench(name: &str, search: bool, seed: Option<u64>, out: &PathBuf) -> Result<(), Error> {
    let spec = with_overrides(preset(name)?, seed, None, None)?;
    if search {
        let (report, files) = run_synthesis(&spec)?;
        return finish(&report, &files, out);
    }
    let gains = spec
        .reference_gains
        .clone()
        .ok_or_else(|| Error::Config(format!("preset {name} has no reference gains")))?;
    let (mut report, files) = analyze_gains(&spec, &gains)?;
    if let Gains::Observer { .. } = gains {
        let base = spec.observer_context()?.baseline.gains();
        let (base_report, _) = analyze_gains(&spec, &Gains::Observer { k: base.k, l: base.l })?;
        let published = report.baseline.clone();
        report.improvement_factor = match (
            base_report.baseline.metrics.quantization_radius(),
            published.metrics.quantization_radius(),
        ) {
            (Some(b), Some(p)) if p > 0.0 => Some(b / p),
            _ => None,
        };
        report.baseline = base_report.baseline;
        report.synthesized = Some(published);
    }
    let mut files = files;
    files.files[0].1 = report.to_json();
    finish(&report, &files, out)
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { spec, seed, bits, tau, out, gains } => {
            let spec = with_overrides(load_problem(&spec)?, seed, bits, tau)?;
            let (report, files) = match gains {
                Some(g) => analyze_gains(&spec, &parse_gains(&read(&g)?)?)?,
                None => run_synthesis(&spec)?,
            };
            finish(&report, &files, &out)
        }
        Command::Analyze { spec, gains, bits, tau, out } => {
            let spec = with_overrides(load_problem(&spec)?, None, bits, tau)?;
            let (report, files) = analyze_gains(&spec, &parse_gains(&read(&gains)?)?)?;
            finish(&report, &files, &out)
        }
        Command::Bench { preset, search, seed, out } => bench(&preset, search, seed, &out),
        Command::EmitC { program, name, out } => {
            let prog = FxProgram::from_json(&read(&program)?)?;
            let src = emit_c_source(&prog, &name);
            match out {
                Some(path) => std::fs::write(&path, src).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
                None => {
                    out!("{}", src.trim_end_matches('\n'));
                    Ok(())
                }
            }
        }
        Command::Calibrate { spec, s_target, p_target } => {
            let spec = load_problem(&spec)?;
            let (tau, table) = calibrate_tau(&spec, s_target, p_target, &TAU_CANDIDATES)?;
            out!("{:>8} {:>14} {:>14} {:>10}", "tau", "||S*||", "||P*||", "error");
            for row in &table {
                out!("{:>8} {:>14.6} {:>14.6} {:>9.3}%", row.tau, row.s_norm, row.p_norm, 100.0 * row.error);
            }
            out!("selected tau = {tau}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("FXSYNTH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("FXSYNTH_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|_| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fxsynth: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
