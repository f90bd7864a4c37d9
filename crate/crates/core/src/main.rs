use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geoinvex::scenario::{
    catalog, emit_report, Format, Prepared, RunOptions, RunReport, Scenario, EXIT_CONFIG,
};

#[derive(Parser)]
#[command(
    name = "geoinvex",
    version,
    about = "Sampling checks for geodesic invexity on concrete manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and grade every check against its expectation.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Replace the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "GEOINVEX_JOBS", default_value_t = 0)]
        jobs: usize,
        /// Dotted-path override, e.g. `schemes.default.n_pairs=500`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Include wall-clock time (reports are then no longer byte-identical).
        #[arg(long)]
        timing: bool,
        /// Write the report here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Re-evaluate every witness of a JSON report against its scenario.
    Replay {
        scenario: PathBuf,
        report: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List scenario descriptors and check operations.
    ListCatalog,
}

fn write_atomically(path: &PathBuf, body: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body)?;
    std::fs::rename(tmp, path)
}

fn run(
    scenario: PathBuf,
    format: Format,
    seed: Option<u64>,
    jobs: usize,
    mut overrides: Vec<String>,
    timing: bool,
    output: Option<PathBuf>,
) -> Result<i32, String> {
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    if let Some(s) = seed {
        overrides.push(format!("seed={s}"));
    }
    let prepared = Scenario::load(&scenario, &overrides)
        .and_then(Prepared::new)
        .map_err(|e| e.to_string())?;
    let report = prepared.run(RunOptions { timing });
    let body = emit_report(&report, format).map_err(|e| e.to_string())?;
    match output {
        Some(p) => write_atomically(&p, &body).map_err(|e| format!("{}: {e}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(body.as_bytes());
        }
    }
    Ok(report.status.exit_code())
}

fn replay(scenario: PathBuf, report: PathBuf, overrides: Vec<String>) -> Result<i32, String> {
    let prepared = Scenario::load(&scenario, &overrides)
        .and_then(Prepared::new)
        .map_err(|e| e.to_string())?;
    let text =
        std::fs::read_to_string(&report).map_err(|e| format!("{}: {e}", report.display()))?;
    let parsed: RunReport =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", report.display()))?;
    let mut mismatches = 0;
    for (i, c) in parsed.checks.iter().enumerate() {
        let Some(rep) = &c.report else { continue };
        for w in &rep.witnesses {
            match prepared.replay(i, w).map_err(|e| e.to_string())? {
                Some(gap) => {
                    let ok = (gap - w.gap).abs() <= 1e-12 * w.gap.abs().max(1.0);
                    if !ok {
                        mismatches += 1;
                    }
                    println!(
                        "{} #{}: reported {:?} replayed {:?} {}",
                        c.id,
                        w.pair_index,
                        w.gap,
                        gap,
                        if ok { "ok" } else { "MISMATCH" }
                    );
                }
                None => println!("{} #{}: not replayable", c.id, w.pair_index),
            }
        }
    }
    Ok(if mismatches == 0 { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            format,
            seed,
            jobs,
            overrides,
            timing,
            output,
        } => run(scenario, format, seed, jobs, overrides, timing, output),
        Command::Replay {
            scenario,
            report,
            overrides,
        } => replay(scenario, report, overrides),
        Command::ListCatalog => {
            print!("{}", catalog());
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
