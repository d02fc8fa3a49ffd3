//! Benchmark harness for tilt-rotor control allocation methods.
//!
//! `tiltalloc run` executes a method-by-trajectory matrix and writes
//! plot-ready CSV/JSON reports, `tiltalloc curves` samples the propeller
//! acceleration limit curves, and `tiltalloc compare` Welch-tests the
//! velocity errors of two recorded runs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tiltalloc_core::bench::{compare_errors, curves_csv, load_report, run_matrix};
use tiltalloc_core::config::{parse_trajectory, BenchConfig, CurvesConfig, PlatformFile, RunFile};
use tiltalloc_core::power::solve_limit_curves;
use tiltalloc_core::sim::scenario::AllocationMethod;

#[derive(Parser)]
#[command(name = "tiltalloc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark matrix and write reports.
    Run {
        /// Run configuration file (TOML); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these methods (repeatable).
        #[arg(long = "method")]
        methods: Vec<String>,
        /// Restrict to these trajectories (repeatable), e.g. "osc-roll:1.3".
        #[arg(long = "trajectory")]
        trajectories: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the acceleration limit curves as CSV.
    Curves {
        /// Anchor file (TOML, keys like the platform [curves] table);
        /// stock anchors when omitted.
        #[arg(long)]
        anchors: Option<PathBuf>,
        /// Output CSV path ("-" for stdout).
        #[arg(long)]
        out: PathBuf,
        /// Sample count across the speed range.
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
    /// Welch-test the velocity errors of two metrics.json reports.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn load_run_file(path: Option<&Path>) -> Result<(RunFile, PathBuf)> {
    match path {
        Some(p) => {
            let run =
                RunFile::load(p).with_context(|| format!("loading run config {}", p.display()))?;
            let base = p.parent().unwrap_or(Path::new(".")).to_path_buf();
            Ok((run, base))
        }
        None => Ok((RunFile::default(), PathBuf::from("."))),
    }
}

fn cmd_run(
    config: Option<PathBuf>,
    methods: Vec<String>,
    trajectories: Vec<String>,
    out: PathBuf,
) -> Result<()> {
    let (run_file, base) = load_run_file(config.as_deref())?;
    let mut bench = BenchConfig::resolve(&run_file, &base)?;
    if !methods.is_empty() {
        bench.methods = methods
            .iter()
            .map(|m| AllocationMethod::parse(m))
            .collect::<tiltalloc_core::Result<Vec<_>>>()?;
    }
    if !trajectories.is_empty() {
        bench.trajectories = trajectories
            .iter()
            .map(|t| parse_trajectory(t, &run_file))
            .collect::<tiltalloc_core::Result<Vec<_>>>()?;
    }
    let summary = run_matrix(&bench, &out)?;
    for cell in &summary.grid.cells {
        let status = match &cell.error {
            Some(err) => format!("error: {err}"),
            None if cell.success => "ok".to_string(),
            None => format!(
                "diverged{}",
                cell.first_violation_t
                    .map(|t| format!(" at {t:.2} s"))
                    .unwrap_or_default()
            ),
        };
        println!(
            "{:10} {:14} seed {}  {}",
            cell.method, cell.trajectory, cell.seed, status
        );
    }
    println!("reports written to {}", summary.out_dir.display());
    Ok(())
}

fn cmd_curves(anchors: Option<PathBuf>, out: PathBuf, samples: usize) -> Result<()> {
    let (curves_cfg, power_cfg) = match anchors {
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .with_context(|| format!("reading anchors {}", p.display()))?;
            // accept either bare curve keys or a full platform file
            if let Ok(platform) = toml::from_str::<PlatformFile>(&text) {
                (platform.curves, platform.power)
            } else {
                let curves: CurvesConfig = toml::from_str(&text)
                    .with_context(|| format!("parsing anchors {}", p.display()))?;
                (curves, Default::default())
            }
        }
        None => Default::default(),
    };
    let curves = solve_limit_curves(&curves_cfg.anchors())?;
    let power = power_cfg.resolve(13_000.0)?;
    let csv = curves_csv(&curves, &power, samples);
    if out.as_os_str() == "-" {
        print!("{csv}");
    } else {
        if let Some(parent) = out.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&out, csv)?;
        println!("curve table written to {}", out.display());
    }
    Ok(())
}

fn cmd_compare(a: PathBuf, b: PathBuf) -> Result<()> {
    let report_a = load_report(&a)?;
    let report_b = load_report(&b)?;
    if report_a.lin_vel_err_samples.len() < 2 || report_b.lin_vel_err_samples.len() < 2 {
        bail!("reports carry too few error samples to compare");
    }
    let cmp = compare_errors(&report_a, &report_b)?;
    println!("{}", serde_json::to_string_pretty(&cmp)?);
    let verdict = |name: &str, v: &tiltalloc_core::bench::WelchVerdict| {
        println!(
            "{name}: t = {:+.4}, p = {:.4} -> {}",
            v.t_statistic,
            v.p_value,
            if v.significant {
                "significant difference"
            } else {
                "no significant difference"
            }
        );
    };
    verdict("linear ", &cmp.linear);
    verdict("angular", &cmp.angular);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            methods,
            trajectories,
            out,
        } => cmd_run(config, methods, trajectories, out),
        Command::Curves {
            anchors,
            out,
            samples,
        } => cmd_curves(anchors, out, samples),
        Command::Compare { a, b } => cmd_compare(a, b),
    }
}
