//! `influence-lab`: scenario runs, inequality scans and figure data.
//!
//! Exit status: 0 when every asserted invariant held, 2 when a counterexample
//! or invariant failure was found, 1 on usage or configuration errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use influence_lab::figures::{self, Coordinate};
use influence_lab::inequality_lab::{scan_nonnegativity, verify_inclusion_chain, CausalSampler, ScanFunction};
use influence_lab::pipeline::{run_scenario, write_run_csv};
use influence_lab::scenario::Scenario;
use influence_lab::Error;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "influence-lab", version, about = "Decoherence and entanglement functionals for path-superposed sources")]
struct Cli {
    /// Cap on worker threads used by the numerical modules.
    #[arg(long, global = true, env = "INFLUENCE_LAB_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a worldline scenario end to end.
    Run(RunArgs),
    /// Scan F or G on a grid, or sample the inclusion chain.
    Scan(ScanArgs),
    /// Emit plot-ready CSV.
    Figure(FigureArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Run CSV; defaults to `<id>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON record of the run.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanTarget {
    #[value(name = "F", alias = "f")]
    F,
    #[value(name = "G", alias = "g")]
    G,
    Chain,
}

#[derive(Args, Debug)]
struct ScanArgs {
    target: ScanTarget,
    /// Points per axis.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// Distance kept from the cube faces.
    #[arg(long, default_value_t = 1e-3)]
    margin: f64,
    /// Samples for `chain`.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// CSV output; defaults to `scan_<target>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the JSON summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Args, Debug)]
struct FigureArgs {
    which: Which,
    /// Samples for fig3.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Projection for fig3, `u,v` from gamma_a, gamma_b, gamma_c, phi_ba.
    #[arg(long, default_value = "gamma_a,phi_ba")]
    axes: String,
    /// Points per axis for fig4/fig5.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    margin: f64,
    /// CSV output; defaults to `<which>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    say(&format!("{text}\n"));
    if let Some(p) = path {
        let mut f = create(p)?;
        writeln!(f, "{text}").map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

/// Stdout that tolerates a closed pipe.
fn say(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn to_value<S: serde::Serialize>(s: &S) -> Result<serde_json::Value, Error> {
    serde_json::to_value(s).map_err(|e| Error::Io(e.to_string()))
}

/// Returns whether every asserted invariant held.
fn run(args: RunArgs) -> Result<bool, Error> {
    let scenario = match (&args.config, &args.preset) {
        (_, Some(id)) => Scenario::preset(id)?,
        (Some(path), None) => Scenario::load(path)?,
        (None, None) => return Err(Error::Config("a scenario file or --preset is required".into())),
    };
    let record = run_scenario(&scenario)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", scenario.id)));
    write_run_csv(create(&out)?, std::slice::from_ref(&record))?;
    say(&record.verdict_text());
    if let Some(p) = &args.summary {
        let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(create(p)?, "{text}").map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(record.verdict.invariants_hold())
}

fn scan(args: ScanArgs) -> Result<bool, Error> {
    let function = match args.target {
        ScanTarget::F => ScanFunction::F,
        ScanTarget::G => ScanFunction::G,
        ScanTarget::Chain => {
            let report = verify_inclusion_chain(args.n, &CausalSampler::chain(args.seed));
            let out = args.out.unwrap_or_else(|| PathBuf::from("scan_chain.csv"));
            let mut w = csv::Writer::from_writer(create(&out)?);
            w.write_record(["sr_holds", "nonentangled", "comp_holds", "count"])?;
            for (i, count) in report.region_counts.iter().enumerate() {
                w.write_record([(i & 4 != 0).to_string(), (i & 2 != 0).to_string(), (i & 1 != 0).to_string(), count.to_string()])?;
            }
            w.flush().map_err(|e| Error::Io(e.to_string()))?;
            let mut summary = to_value(&report)?;
            summary["passed"] = json!(report.passed());
            write_json(args.summary.as_deref(), &summary)?;
            return Ok(report.counterexamples_c1 == 0 && report.counterexamples_c2 == 0);
        }
    };
    let report = scan_nonnegativity(function, args.grid, args.margin)?;
    let minima = figures::slice_minima(&figures::slices(function, args.grid, args.margin)?);
    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("scan_{}.csv", function.name())));
    figures::write_minima_csv(create(&out)?, &minima)?;
    let mut summary = to_value(&report)?;
    summary["slice_minima"] = to_value(&minima)?;
    write_json(args.summary.as_deref(), &summary)?;
    Ok(report.negatives == 0)
}

fn figure(args: FigureArgs) -> Result<bool, Error> {
    let name = match args.which {
        Which::Fig3 => "fig3",
        Which::Fig4 => "fig4",
        Which::Fig5 => "fig5",
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    match args.which {
        Which::Fig3 => {
            let (u, v) = args
                .axes
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("--axes expects `u,v`, got `{}`", args.axes)))?;
            let axes = (u.trim().parse::<Coordinate>()?, v.trim().parse::<Coordinate>()?);
            let fig = figures::region_figure(args.n, args.seed, axes);
            fig.write_csv(create(&out)?)?;
            let violations = fig.violations();
            write_json(None, &json!({ "figure": name, "samples": fig.samples.len(), "seed": args.seed, "u": axes.0.name(), "v": axes.1.name(), "violations": violations }))?;
            Ok(violations == 0)
        }
        Which::Fig4 | Which::Fig5 => {
            let function = if matches!(args.which, Which::Fig4) { ScanFunction::F } else { ScanFunction::G };
            let points = figures::slices(function, args.grid, args.margin)?;
            figures::write_slices_csv(create(&out)?, &points)?;
            let negatives = points.iter().filter(|p| !(p.value >= 0.0)).count();
            write_json(
                None,
                &json!({ "figure": name, "function": function.name(), "points": points.len(), "negatives": negatives, "slice_minima": to_value(&figures::slice_minima(&points))? }),
            )?;
            Ok(negatives == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Scan(a) => scan(a),
        Command::Figure(a) => figure(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
