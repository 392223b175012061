use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use equimetric::lift::LiftMode;
use equimetric::pipeline::{run_pipeline, Config, GroupMetricConfig, PipelineError};
use equimetric::scenario::{generate_scenario, parse_grid, GSpaceFile, ScenarioSpec};

#[derive(Parser)]
#[command(name = "equimetric", version, about = "Lift metrics from orbit spaces to invariant metrics on finite G-spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write rho.csv, quotient.csv, slices.txt, report.txt.
    Run(RunArgs),
    /// Write a built-in scenario as a G-space JSON file.
    Gen(GenArgs),
    /// Run the pipeline and print the report, optionally one check or group.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Check name, or a prefix such as `lift` or `slices`.
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    mode: Option<LiftMode>,
    /// Discrete group metric scale.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    /// circle, reflection, dihedral, disk, shift or random.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    shifts: Option<usize>,
    /// Square grid size, `3` or `3x3`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn load_config(args: &RunArgs) -> Result<Config, PipelineError> {
    let mut cfg = Config::load(&args.config)?;
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(t) = args.tolerance {
        cfg.tolerance = t;
    }
    if let Some(s) = args.scale {
        match &mut cfg.group_metric {
            GroupMetricConfig::Discrete { scale } => *scale = s,
            _ => return Err(PipelineError::Config("--scale applies to the discrete group metric only".into())),
        }
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match threads {
        None => Ok(f()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| e.to_string()),
    }
}

fn scenario_spec(a: &GenArgs) -> Result<ScenarioSpec, String> {
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| format!("--{name} is required for {}", a.scenario));
    Ok(match a.scenario.as_str() {
        "circle" => ScenarioSpec::Circle {
            n: need(a.n, "n")?,
            k: need(a.k, "k")?,
        },
        "reflection" => ScenarioSpec::Reflection {
            m: need(a.m, "m")?,
            h: a.h.unwrap_or(1.0),
        },
        "dihedral" => ScenarioSpec::Dihedral { n: need(a.n, "n")? },
        "disk" => ScenarioSpec::Disk {
            grid: parse_grid(a.grid.as_deref().ok_or("--grid is required for disk")?).map_err(|e| e.to_string())?,
        },
        "shift" => ScenarioSpec::Shift {
            m: need(a.m, "m")?,
            h: a.h.ok_or("--h is required for shift")?,
            shifts: need(a.shifts, "shifts")?,
        },
        "random" => ScenarioSpec::Random {
            seed: a.seed.ok_or("--seed is required for random")?,
        },
        other => return Err(format!("unknown scenario '{other}'")),
    })
}

fn gen(a: &GenArgs) -> Result<(), String> {
    let spec = scenario_spec(a)?;
    let sc = generate_scenario(&spec).map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&GSpaceFile::from_gspace(&sc.gspace)).map_err(|e| e.to_string())?;
    std::fs::write(&a.out, json + "\n").map_err(|e| format!("{}: {e}", a.out.display()))?;
    Ok(())
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Gen(a) => match gen(&a) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
        Command::Run(args) => {
            let cfg = match load_config(&args) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let Some(dir) = cfg.output_dir.clone() else {
                return fail("no output directory: set output_dir in the config or pass --out");
            };
            let out = match with_threads(args.threads, || run_pipeline(&cfg)) {
                Ok(Ok(o)) => o,
                Ok(Err(e)) => return fail(e),
                Err(e) => return fail(e),
            };
            if let Err(e) = out.write(Path::new(&dir)) {
                return fail(e);
            }
            print!("{}", out.report_txt().lines().last().map(|l| format!("{l}\n")).unwrap_or_default());
            ExitCode::from(out.exit_code() as u8)
        }
        Command::Verify { run, only } => {
            let cfg = match load_config(&run) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let out = match with_threads(run.threads, || run_pipeline(&cfg)) {
                Ok(Ok(o)) => o,
                Ok(Err(e)) => return fail(e),
                Err(e) => return fail(e),
            };
            let report = match &only {
                Some(f) => {
                    let r = out.report.only(f);
                    if r.checks.is_empty() {
                        return fail(format!("no check named '{f}'"));
                    }
                    r
                }
                None => out.report.clone(),
            };
            print!("{}", report.render());
            ExitCode::from(report.exit_code() as u8)
        }
    }
}
