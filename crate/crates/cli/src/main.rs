//! `swarmcheck`: simulate swarms, sweep swarm sizes and parameters, and
//! report whether bounded energy comes with floored coverage.
//!
//! Exit codes: 0 success, 1 config/usage error, 2 runtime failure,
//! 3 verdict `violated` under `report --strict`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use swarmcheck::harness::{robustness_reports, run_sweep_records, SweepConfig, Verdict, DEFAULT_GAMMA};
use swarmcheck::output::{self, Metric, Series};
use swarmcheck::{run, Error, RunConfig, RunRecord};

const SEED_ENV: &str = "SWARMCHECK_SEED";

#[derive(Parser)]
#[command(name = "swarmcheck", version, about = "Swarm reliability qualification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its metric time series.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Also write energy.svg and coverage.svg.
        #[arg(long)]
        svg: bool,
        /// Override the separation threshold δ.
        #[arg(long)]
        delta: Option<f64>,
        /// Override the coverage ball radius (defaults to δ).
        #[arg(long)]
        ball_radius: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run every (n, params, seed) cell of a sweep config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Aggregate a sweep directory into a robustness report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write report.svg next to the report.
        #[arg(long)]
        svg: bool,
        /// Exit with status 3 if any verdict is `violated`.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config_error() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            format,
            svg,
            delta,
            ball_radius,
            steps,
        } => simulate(&config, seed, &out, format, svg, delta, ball_radius, steps),
        Command::Sweep {
            config,
            jobs,
            out,
            seed,
            format,
        } => sweep(&config, jobs, &out, seed, format),
        Command::Report {
            input,
            out,
            svg,
            strict,
            gamma,
        } => report(&input, out, svg, strict, gamma),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("swarmcheck: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn resolve_seed(flag: Option<u64>, config: u64) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}: not an unsigned integer: `{v}`"))),
        Err(_) => Ok(config),
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", dir.display()),
    })
}

fn write_record(record: &RunRecord, dir: &Path, stem: &str, format: Format) -> CliResult<()> {
    match format {
        Format::Csv => output::emit_run_csv(record, &dir.join(format!("{stem}.csv")))?,
        Format::Jsonl => output::emit_run_jsonl(record, &dir.join(format!("{stem}.jsonl")))?,
    }
    output::emit_run_sidecar(record, &dir.join(format!("{stem}.json")))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    format: Format,
    svg: bool,
    delta: Option<f64>,
    ball_radius: Option<f64>,
    steps: Option<usize>,
) -> CliResult<ExitCode> {
    let mut cfg: RunConfig = read_json(config)?;
    cfg.seed = resolve_seed(seed, cfg.seed)?;
    if let Some(d) = delta {
        cfg.delta = d;
    }
    if let Some(r) = ball_radius {
        cfg.ball_radius = Some(r);
    }
    if let Some(s) = steps {
        cfg.steps = s;
    }
    let record = run(&cfg)?;
    ensure_dir(out)?;
    write_record(&record, out, "run", format)?;
    if svg {
        for (metric, file) in [(Metric::Energy, "energy.svg"), (Metric::Coverage, "coverage.svg")] {
            let series = output::run_series(&record, metric, metric.label());
            output::emit_svg_timeseries(metric.label(), "t (s)", metric.label(), &[series], &out.join(file))?;
        }
    }
    eprintln!(
        "simulated n={} steps={} samples={} violations={} in {:.3}s",
        cfg.n,
        cfg.steps,
        record.samples.len(),
        record.violations.len(),
        record.wall_time
    );
    Ok(ExitCode::SUCCESS)
}

fn sweep(config: &Path, jobs: usize, out: &Path, seed: Option<u64>, format: Format) -> CliResult<ExitCode> {
    let mut cfg: SweepConfig = read_json(config)?;
    cfg.base.seed = resolve_seed(seed, cfg.base.seed)?;
    let results = run_sweep_records(&cfg, jobs.max(1))?;

    let runs_dir = out.join("runs");
    ensure_dir(&runs_dir)?;
    let sets = cfg.param_sets();
    for cell in &results {
        let Some(record) = &cell.record else {
            continue;
        };
        let p = sets
            .iter()
            .position(|s| swarmcheck::harness::sweep::cmp_params(s, &cell.summary.params).is_eq())
            .unwrap_or(0);
        let stem = format!("n{}_p{}_seed{}", cell.summary.n, p, cell.summary.seed);
        write_record(record, &runs_dir, &stem, format)?;
    }

    let summaries: Vec<_> = results.into_iter().map(|c| c.summary).collect();
    let failed = summaries.iter().filter(|s| s.is_failed()).count();
    output::emit_summaries(&summaries, &out.join("summaries.json"))?;
    let echo = serde_json::to_string_pretty(&cfg).map_err(|e| usage(e.to_string()))? + "\n";
    fs::write(out.join("sweep.json"), echo).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", out.join("sweep.json").display()),
    })?;
    let reports = robustness_reports(&summaries, cfg.gamma)?;
    output::emit_reports_json(&reports, &out.join("report.json"))?;

    eprintln!("sweep: {} runs, {} failed", summaries.len(), failed);
    for r in &reports {
        eprintln!(
            "  params {:?}: energy_trend {:.3}, coverage_trend {:.3}, verdict {:?}",
            r.params, r.energy_trend, r.coverage_trend, r.theorem_consistent
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn report(input: &Path, out: Option<PathBuf>, svg: bool, strict: bool, gamma: Option<f64>) -> CliResult<ExitCode> {
    let summaries = output::read_summaries(&input.join("summaries.json"))?;
    let gamma = match gamma {
        Some(g) => g,
        None => {
            let echo = input.join("sweep.json");
            if echo.exists() {
                read_json::<SweepConfig>(&echo)?.gamma
            } else {
                DEFAULT_GAMMA
            }
        }
    };
    let reports = robustness_reports(&summaries, gamma)?;
    let out = out.unwrap_or_else(|| input.join("report.json"));
    output::emit_reports_json(&reports, &out)?;

    if svg {
        let series: Vec<Series> = reports
            .iter()
            .flat_map(|r| {
                output::report_series(r).into_iter().map(move |mut s| {
                    if !r.params.is_empty() {
                        s.label = format!("{} {:?}", s.label, r.params);
                    }
                    s
                })
            })
            .collect();
        let path = out.with_extension("svg");
        output::emit_svg_timeseries("scaling with swarm size", "log2 n", "log2 value", &series, &path)?;
    }

    let mut violated = false;
    for r in &reports {
        println!(
            "params {:?}: energy_trend {:.4} coverage_trend {:.4} fitted_C {:?} fitted_Cprime {:.4} verdict {}",
            r.params,
            r.energy_trend,
            r.coverage_trend,
            r.fitted_c,
            r.fitted_c_prime,
            serde_json::to_string(&r.theorem_consistent).unwrap_or_default()
        );
        violated |= r.theorem_consistent == Verdict::Violated;
    }
    if strict && violated {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
