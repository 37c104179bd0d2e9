use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qdo_bench::fit::{plot_script, sweep_and_fit, write_fit_table};
use qdo_bench::runner::{run, success_rate, write_csv, SweepConfig, DEFAULT_SEED};
use qdo_bench::scenarios::library;
use qdo_bench::verify::{run_suite, Mutation, Suite};
use qdo_core::estimators::{AeSchedule, Pipeline};

#[derive(Parser)]
#[command(
    name = "qdo",
    version,
    about = "Dense-output estimators: runs, sweeps and invariant checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials on a `T × eps` grid and write one CSV row per trial.
    Run(RunArgs),
    /// Fit query-count slopes in `T` and in `eps`.
    Sweep(SweepArgs),
    /// Check invariants; exits 1 on any failure.
    Verify(VerifyArgs),
    /// Print the built-in scenarios.
    ListScenarios,
}

#[derive(Args)]
struct Common {
    /// Built-in scenario label or path to a JSON scenario file.
    #[arg(long, default_value = "rabi-self")]
    scenario: String,
    /// hadamard, ae_biased, ae_unbiased, lode or carleman.
    #[arg(long, value_parser = parse_pipeline)]
    pipeline: Pipeline,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long, env = "QDO_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// `c` in `M = 2⌈c·log₂(1/ε)⌉`.
    #[arg(long, default_value_t = 1.0)]
    quad_c: f64,
    /// Multiplier on the Hadamard shot count.
    #[arg(long, default_value_t = 1.0)]
    hadamard_c: f64,
    /// Quadrature points per unit segment, overriding the eps rule.
    #[arg(long)]
    points_per_segment: Option<usize>,
    /// Fixed amplitude-estimation grid, in place of the derived one.
    #[arg(long, requires = "ae_reps")]
    ae_r: Option<u64>,
    /// Repetitions (median count or passes) with `--ae-r`.
    #[arg(long, requires = "ae_r")]
    ae_reps: Option<u64>,
    /// Record wall-clock milliseconds per trial (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "T", value_delimiter = ',', default_value = "2")]
    t_values: Vec<f64>,
    #[arg(long = "eps", value_delimiter = ',', default_value = "0.1")]
    eps_values: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "T", value_delimiter = ',', default_value = "2,4,8,16")]
    t_values: Vec<f64>,
    #[arg(long = "eps", value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    eps_values: Vec<f64>,
    /// eps held fixed while T varies.
    #[arg(long, default_value_t = 0.05)]
    fit_eps: f64,
    /// T held fixed while eps varies.
    #[arg(long = "fit-T", default_value_t = 4.0)]
    fit_t: f64,
    /// Write the fit table here; printed to stderr otherwise.
    #[arg(long)]
    fits: Option<PathBuf>,
    /// Write a matplotlib script for the row CSV (requires `--out`).
    #[arg(long, requires = "out")]
    plot_script: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// quadrature, estimators, history, carleman or all.
    #[arg(default_value = "all")]
    suite: Suite,
    /// Print a JSON array instead of text lines.
    #[arg(long)]
    json: bool,
    /// Negate one quadrature weight to confirm the checks can fail.
    #[arg(long, hide = true)]
    flip_weight: Option<usize>,
}

fn parse_pipeline(s: &str) -> Result<Pipeline, String> {
    s.parse().map_err(|e: qdo_core::Error| e.to_string())
}

fn config(c: &Common, t_values: Vec<f64>, eps_values: Vec<f64>) -> SweepConfig {
    let mut cfg = SweepConfig::new(c.scenario.clone(), c.pipeline);
    cfg.t_values = t_values;
    cfg.eps_values = eps_values;
    cfg.delta = c.delta;
    cfg.trials = c.trials;
    cfg.seed = c.seed;
    cfg.quad_c = c.quad_c;
    cfg.hadamard_c = c.hadamard_c;
    cfg.points_per_segment = c.points_per_segment;
    if let (Some(r), Some(reps)) = (c.ae_r, c.ae_reps) {
        cfg.schedule = AeSchedule::Fixed { r, reps };
    }
    cfg.timing = c.timing;
    cfg
}

fn output(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_run(args: RunArgs) -> anyhow::Result<bool> {
    let cfg = config(&args.common, args.t_values, args.eps_values);
    let rows = run(&cfg)?;
    write_csv(&rows, output(args.common.out.as_ref())?)?;
    let rate = success_rate(&rows);
    eprintln!(
        "{} rows, {:.1}% within eps (target {:.1}%)",
        rows.len(),
        100.0 * rate,
        100.0 * (1.0 - cfg.delta)
    );
    Ok(rate >= 1.0 - cfg.delta)
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<bool> {
    let mut cfg = config(&args.common, args.t_values, args.eps_values);
    cfg.fit_eps = args.fit_eps;
    cfg.fit_t = args.fit_t;
    let fits = sweep_and_fit(&cfg)?;
    write_csv(&fits.rows, output(args.common.out.as_ref())?)?;
    let name = cfg.pipeline.as_str();
    let table = [(name, &fits.vs_t), (name, &fits.vs_eps)];
    match &args.fits {
        Some(p) => write_fit_table(&table, File::create(p)?)?,
        None => write_fit_table(&table, io::stderr().lock())?,
    }
    if let (Some(script), Some(csv)) = (&args.plot_script, &args.common.out) {
        std::fs::write(script, plot_script(&csv.to_string_lossy()))?;
    }
    Ok(!fits.vs_t.degenerate() && !fits.vs_eps.degenerate())
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let checks = run_suite(
        args.suite,
        Mutation {
            flip_weight: args.flip_weight,
        },
    )?;
    let mut out = io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &checks)?;
        writeln!(out)?;
    } else {
        for c in &checks {
            writeln!(
                out,
                "{} {}/{} value={:.3e} limit={:.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.value,
                c.limit
            )?;
        }
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn cmd_list() -> anyhow::Result<bool> {
    let mut out = io::stdout().lock();
    for b in library() {
        writeln!(out, "{:18} T={:<4} {}", b.label, b.default_t, b.description)?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::ListScenarios => cmd_list(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
