use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use es_accel::dynamics::DriftParams;
use es_accel::perturbation::{gamma_criterion, partial_sum_basel, richardson_accelerate};
use es_accel::report::{
    format_number, summary_row, summary_text, svg_from_csv, trace_csv, SUMMARY_HEADER,
};
use es_accel::scenarios::{
    load_scenario_file, presets, run_scenario, sweep_runs, variant_name, ScenarioConfig,
};
use es_accel::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "es-accel",
    version,
    about = "Accelerated extremum-seeking simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace.
    Run {
        /// Scenario file, or the name of a bundled preset.
        scenario: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        scenario: String,
        /// Parameter to vary (e.g. delta, q0, epsilon, amplitude).
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        values: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Partial sums of 1/j² and their accelerated values.
    Basel { n: usize },
    /// Convergence criterion of the drift perturbation series.
    Gamma {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        q0: f64,
        #[arg(long, default_value_t = 3.0)]
        period: f64,
        #[arg(long, default_value_t = 0.5)]
        z_init: f64,
    },
    /// Bundled scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

#[derive(Args)]
struct RunOpts {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write an SVG chart next to each CSV.
    #[arg(long)]
    svg: bool,
    /// Override the noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of integration steps per period.
    #[arg(long)]
    step_divisor: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::ScenarioParse { .. } => EXIT_PARSE,
            Error::Io { .. } | Error::InvalidParams(_) => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { scenario, opts } => cmd_run(&scenario, &opts),
        Command::Sweep {
            scenario,
            axis,
            values,
            opts,
        } => cmd_sweep(&scenario, &axis, &values, &opts),
        Command::Basel { n } => cmd_basel(n),
        Command::Gamma {
            epsilon,
            delta,
            q0,
            period,
            z_init,
        } => cmd_gamma(DriftParams {
            epsilon,
            delta,
            q0,
            period,
            l_true: 0.0,
            z_init,
        }),
        Command::Presets {
            action: PresetAction::List,
        } => {
            for name in presets::names()? {
                println!("{name}");
            }
            Ok(())
        }
    }
}

/// A scenario argument names a file if one exists, otherwise a preset
/// (`fig2`, `presets/fig2` and `fig2.toml` all resolve to the same preset).
fn load_scenario(arg: &str, opts: &RunOpts) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(arg);
    let mut config = if path.is_file() {
        load_scenario_file(path)?
    } else {
        let name = arg.trim_start_matches("presets/");
        let name = name.strip_suffix(".toml").unwrap_or(name);
        if !presets::names()?.iter().any(|n| n == name) {
            return Err(Failure::usage(format!(
                "`{arg}` is neither a scenario file nor a preset (see `presets list`)"
            )));
        }
        presets::load(name)?
    };
    if let Some(seed) = opts.seed {
        config = config.with_seed(seed);
    }
    if let Some(d) = opts.step_divisor {
        config = config.with_param("step_divisor", d as f64)?;
    }
    Ok(config)
}

struct PendingFile {
    path: PathBuf,
    contents: String,
}

fn trace_files(stem: &str, csv: String, opts: &RunOpts) -> Result<Vec<PendingFile>, Failure> {
    let svg = if opts.svg {
        Some(svg_from_csv(&csv)?)
    } else {
        None
    };
    let mut files = vec![PendingFile {
        path: opts.out.join(format!("{stem}.csv")),
        contents: csv,
    }];
    if let Some(contents) = svg {
        files.push(PendingFile {
            path: opts.out.join(format!("{stem}.svg")),
            contents,
        });
    }
    Ok(files)
}

/// Writes all files once every one of them has been produced.
fn write_all(out: &Path, files: &[PendingFile]) -> Result<(), Failure> {
    let io = |path: &Path, e: std::io::Error| {
        Failure::usage(format!("cannot write {}: {e}", path.display()))
    };
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    for f in files {
        fs::write(&f.path, &f.contents).map_err(|e| io(&f.path, e))?;
    }
    Ok(())
}

fn cmd_run(scenario: &str, opts: &RunOpts) -> Result<(), Failure> {
    let config = load_scenario(scenario, opts)?;
    let run = run_scenario(&config)?;
    let csv = trace_csv(&config, &run);
    let files = trace_files(&config.name, csv, opts)?;
    write_all(&opts.out, &files)?;
    print!("{}", summary_text(&config.name, &run.summary));
    for f in &files {
        println!("wrote {}", f.path.display());
    }
    Ok(())
}

fn file_stem_for(config: &ScenarioConfig, axis: &str, value: f64) -> String {
    format!("{}-{}-{}", config.name, axis, format_number(value))
}

fn cmd_sweep(scenario: &str, axis: &str, values: &[f64], opts: &RunOpts) -> Result<(), Failure> {
    let base = load_scenario(scenario, opts)?;
    if values.is_empty() {
        return Err(Failure::usage("--values needs at least one value"));
    }
    // Reject unknown axes up front rather than as per-variant failures.
    if let Err(Error::InvalidParams(msg)) = base.with_param(axis, values[0]) {
        if msg.contains("not a numeric field") {
            return Err(Failure::usage(msg));
        }
    }
    let results = sweep_runs(&base, axis, values);
    let mut files = Vec::new();
    let mut table = String::from(SUMMARY_HEADER);
    table.push('\n');
    let mut failures = 0;
    for (&v, result) in values.iter().zip(&results) {
        let name = variant_name(&base, axis, v);
        match result {
            Ok(run) => {
                let mut config = base.with_param(axis, v)?;
                config.name = name.clone();
                let csv = trace_csv(&config, run);
                files.extend(trace_files(&file_stem_for(&base, axis, v), csv, opts)?);
            }
            Err(e) => {
                failures += 1;
                eprintln!("variant {name} failed: {e}");
            }
        }
        let summary = result.as_ref().map(|r| r.summary).map_err(Clone::clone);
        table.push_str(&summary_row(&name, axis, v, &summary));
        table.push('\n');
    }
    let table_path = opts.out.join(format!("{}-sweep-{}.csv", base.name, axis));
    print!("{table}");
    files.push(PendingFile {
        path: table_path,
        contents: table,
    });
    write_all(&opts.out, &files)?;
    for f in &files {
        println!("wrote {}", f.path.display());
    }
    if failures == values.len() {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: "every sweep variant failed".into(),
        });
    }
    Ok(())
}

fn cmd_basel(n: usize) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::usage("n must be at least 1"));
    }
    let s = partial_sum_basel(n);
    let acc = richardson_accelerate(partial_sum_basel, n);
    let limit = std::f64::consts::PI.powi(2) / 6.0;
    println!("n = {n}");
    println!("S_n = {s:.6}");
    println!("accelerated = {acc:.6}");
    println!("limit = {limit:.6}");
    Ok(())
}

fn cmd_gamma(params: DriftParams) -> Result<(), Failure> {
    params.validate()?;
    let r = gamma_criterion(&params);
    println!("gamma = {}", format_number(r.gamma));
    println!("c_const = {}", format_number(r.c_const));
    println!("alpha0 = {}", format_number(r.alpha0));
    println!("horizon = {}", format_number(r.horizon));
    println!("convergent = {}", r.convergent);
    Ok(())
}
