//! Command-line front end: run scenarios, compare tables against tolerances,
//! render plots, force the dense oracle, and validate scenario files.
//!
//! `QCDYN_OUT_DIR` overrides the directory for relative output paths.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcdyn::plot::emit_plot;
use qcdyn::run::{resolve_output_path, run};
use qcdyn::scenario::{parse_scenario, Method, Scenario};
use qcdyn::table::{compare_tables, TimeSeriesTable};

#[derive(Parser)]
#[command(name = "qcdyn", version, about = "hybrid classical/quantum pair dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write its CSV table.
    Run(RunArgs),
    /// Execute a scenario on the dense-oracle path regardless of its method.
    Oracle(RunArgs),
    /// Parse and validate a scenario, printing the normalized dump.
    Validate { scenario: PathBuf },
    /// Compare two CSV tables column by column.
    Compare(CompareArgs),
    /// Render selected columns of a CSV table into an SVG plot.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Print the table to stdout as well as writing the CSV.
    #[arg(long)]
    echo: bool,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Columns to compare (defaults to every shared column except t).
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    /// Max absolute discrepancy accepted per column; exit status 1 beyond it.
    #[arg(long)]
    tol: Option<f64>,
    /// Linearly interpolate table b onto table a's time axis.
    #[arg(long)]
    interpolate: bool,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    columns: Vec<String>,
    /// Output path (defaults to the CSV path with an svg extension).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir() -> Option<PathBuf> {
    std::env::var_os("QCDYN_OUT_DIR").map(PathBuf::from)
}

fn load_scenario(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(args: &RunArgs, force_oracle: bool) -> Result<(), String> {
    let mut scenario = load_scenario(&args.scenario)?;
    if force_oracle {
        scenario.method = Method::OracleDense;
        scenario.validate().map_err(|e| e.to_string())?;
    }
    let dir = out_dir();
    let table = run(&scenario, dir.as_deref()).map_err(|e| e.to_string())?;
    let csv_path = resolve_output_path(&scenario.csv, dir.as_deref());
    table.write_csv(&csv_path).map_err(|e| e.to_string())?;
    if args.echo {
        print!("{}", table.to_csv_string());
    }
    eprintln!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), String> {
    let scenario = load_scenario(path)?;
    print!("{}", scenario.dump());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<bool, String> {
    let a = TimeSeriesTable::read_csv(&args.a).map_err(|e| e.to_string())?;
    let b = TimeSeriesTable::read_csv(&args.b).map_err(|e| e.to_string())?;
    let columns: Vec<String> = if args.columns.is_empty() {
        a.columns.iter().filter(|c| *c != "t" && b.columns.contains(c)).cloned().collect()
    } else {
        args.columns.clone()
    };
    if columns.is_empty() {
        return Err("no shared columns to compare".into());
    }
    let cmp = compare_tables(&a, &b, &columns, args.interpolate).map_err(|e| e.to_string())?;
    println!("column,max_abs,mean_abs,max_rel");
    for (i, name) in cmp.columns.iter().enumerate() {
        println!("{name},{:.6e},{:.6e},{:.6e}", cmp.max_abs[i], cmp.mean_abs[i], cmp.max_rel[i]);
    }
    if let Some(tol) = args.tol {
        let worst = cmp.worst_max_abs();
        if worst > tol {
            eprintln!("FAIL: max discrepancy {worst:.6e} exceeds tolerance {tol:.6e}");
            return Ok(false);
        }
        eprintln!("PASS: max discrepancy {worst:.6e} within tolerance {tol:.6e}");
    }
    Ok(true)
}

fn cmd_plot(args: &PlotArgs) -> Result<(), String> {
    let table = TimeSeriesTable::read_csv(&args.csv).map_err(|e| e.to_string())?;
    let out = args.out.clone().unwrap_or_else(|| args.csv.with_extension("svg"));
    emit_plot(&table, &args.columns, &out).map_err(|e| e.to_string())?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args, false).map(|_| true),
        Command::Oracle(args) => cmd_run(args, true).map(|_| true),
        Command::Validate { scenario } => cmd_validate(scenario).map(|_| true),
        Command::Compare(args) => cmd_compare(args),
        Command::Plot(args) => cmd_plot(args).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
