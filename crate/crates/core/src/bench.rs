//! Benchmark matrix execution and report emission.
//!
//! Runs every requested method x trajectory x seed cell, writes per-cell
//! artifacts (`timeseries.csv`, `metrics.json`) and assembles comparison
//! reports: a success grid, velocity-error summaries, rotor-speed histograms,
//! power ratios against the power-curve method and per-cell maximum rotor
//! speeds. Output contains no timestamps; identical configurations reproduce
//! identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{BenchConfig, BenchTrajectory};
use crate::error::{Error, Result};
use crate::sim::metrics::{MetricsReport, SCHEMA_VERSION};
use crate::sim::scenario::{run_scenario, run_screw_scenario, AllocationMethod};
use crate::sim::trajectory::TrajectorySpec;
use crate::stats::{welch_t_test, WelchTest};

/// Outcome of one benchmark cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellOutcome {
    pub method: String,
    pub trajectory: String,
    pub seed: u64,
    /// In-simulation success; `false` also when the cell errored out.
    pub success: bool,
    pub first_violation_t: Option<f64>,
    /// Configuration/setup error, if the cell could not run at all.
    pub error: Option<String>,
}

/// Success grid plus soft-check warnings (`success_grid.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuccessGrid {
    pub schema_version: u32,
    pub methods: Vec<String>,
    pub trajectories: Vec<String>,
    pub seeds: Vec<u64>,
    pub cells: Vec<CellOutcome>,
    /// Violations of the expected "fails at a period, fails at all faster
    /// periods" pattern along the oscillation axis.
    pub monotonicity_warnings: Vec<String>,
}

/// Per-cell velocity error summary (`velocity_error_summary.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VelocityErrorSummary {
    pub schema_version: u32,
    pub cells: Vec<VelocityErrorCell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VelocityErrorCell {
    pub method: String,
    pub trajectory: String,
    pub seed: u64,
    pub success: bool,
    pub lin_vel_err: Option<crate::sim::metrics::SampleSummary>,
    pub ang_vel_err: Option<crate::sim::metrics::SampleSummary>,
}

/// In-memory result of a matrix run.
#[derive(Debug)]
pub struct MatrixSummary {
    pub grid: SuccessGrid,
    pub reports: Vec<MetricsReport>,
    pub out_dir: PathBuf,
}

fn cell_dir(out_dir: &Path, method: &str, trajectory: &str, seed: u64) -> PathBuf {
    out_dir
        .join("cells")
        .join(format!("{method}__{trajectory}__s{seed}"))
}

fn write_file(path: &Path, content: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

/// Speed histogram bin width (RPM).
const HISTOGRAM_BIN_RPM: f64 = 250.0;

/// Execute the full matrix and write all artifacts under `out_dir`.
///
/// Individual cell failures (divergence or setup errors) are recorded in the
/// grid; only I/O and top-level configuration problems abort.
pub fn run_matrix(config: &BenchConfig, out_dir: &Path) -> Result<MatrixSummary> {
    fs::create_dir_all(out_dir)?;
    let mut cells = Vec::new();
    let mut reports: Vec<MetricsReport> = Vec::new();

    for method in &config.methods {
        for trajectory in &config.trajectories {
            for &seed in &config.seeds {
                let label = trajectory.label();
                let metrics = match trajectory {
                    BenchTrajectory::Standard(spec) => {
                        let mut setup = config.setup.clone();
                        if matches!(spec, TrajectorySpec::Hover { .. }) {
                            setup.initial_rotor_speeds = config.hover_initial_speeds.clone();
                        }
                        if matches!(spec, TrajectorySpec::Fig8 { .. }) && config.fig8_fan != 0.0 {
                            setup = setup.with_fanned_start(config.fig8_fan);
                        }
                        run_scenario(&setup, *method, spec, seed)
                    }
                    BenchTrajectory::Screw => {
                        if *method == AllocationMethod::PowerCurves {
                            run_screw_scenario(&config.setup, &config.screw, seed)
                        } else {
                            Err(Error::Config(
                                "the screw scenario requires the apower method".into(),
                            ))
                        }
                    }
                };
                match metrics {
                    Ok(metrics) => {
                        let dir = cell_dir(out_dir, method.label(), &label, seed);
                        fs::create_dir_all(&dir)?;
                        let mut csv = Vec::new();
                        metrics.write_timeseries_csv(&mut csv).map_err(Error::Io)?;
                        write_file(&dir.join("timeseries.csv"), &csv)?;
                        let report = metrics.report();
                        let json =
                            serde_json::to_string_pretty(&report).expect("report serializes");
                        write_file(&dir.join("metrics.json"), json.as_bytes())?;
                        cells.push(CellOutcome {
                            method: method.label().to_string(),
                            trajectory: label,
                            seed,
                            success: metrics.success,
                            first_violation_t: metrics.first_violation_t,
                            error: None,
                        });
                        reports.push(report);
                    }
                    Err(err) => {
                        cells.push(CellOutcome {
                            method: method.label().to_string(),
                            trajectory: label,
                            seed,
                            success: false,
                            first_violation_t: None,
                            error: Some(err.to_string()),
                        });
                    }
                }
            }
        }
    }

    let monotonicity_warnings = check_osc_monotonicity(config, &cells);
    for w in &monotonicity_warnings {
        eprintln!("warning: {w}");
    }
    let grid = SuccessGrid {
        schema_version: SCHEMA_VERSION,
        methods: config
            .methods
            .iter()
            .map(|m| m.label().to_string())
            .collect(),
        trajectories: config.trajectories.iter().map(|t| t.label()).collect(),
        seeds: config.seeds.clone(),
        cells,
        monotonicity_warnings,
    };
    write_file(
        &out_dir.join("success_grid.json"),
        serde_json::to_string_pretty(&grid)
            .expect("grid serializes")
            .as_bytes(),
    )?;

    let summary = VelocityErrorSummary {
        schema_version: SCHEMA_VERSION,
        cells: reports
            .iter()
            .map(|r| VelocityErrorCell {
                method: r.method.clone(),
                trajectory: r.trajectory.clone(),
                seed: r.seed,
                success: r.success,
                lin_vel_err: r.lin_vel_err,
                ang_vel_err: r.ang_vel_err,
            })
            .collect(),
    };
    write_file(
        &out_dir.join("velocity_error_summary.json"),
        serde_json::to_string_pretty(&summary)
            .expect("summary serializes")
            .as_bytes(),
    )?;

    write_file(
        &out_dir.join("speed_histograms.csv"),
        speed_histograms_csv(out_dir, &grid)?.as_bytes(),
    )?;
    write_file(
        &out_dir.join("power_ratio.csv"),
        power_ratio_csv(&reports).as_bytes(),
    )?;
    write_file(
        &out_dir.join("max_rotor_speeds.csv"),
        max_rotor_speeds_csv(&reports).as_bytes(),
    )?;

    Ok(MatrixSummary {
        grid,
        reports,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Histogram of rotor-speed samples per cell, read back from the cell
/// timeseries (column layout is versioned).
fn speed_histograms_csv(out_dir: &Path, grid: &SuccessGrid) -> Result<String> {
    let mut out = String::from("method,trajectory,seed,bin_low_rpm,bin_high_rpm,count\n");
    for cell in &grid.cells {
        if cell.error.is_some() {
            continue;
        }
        let path =
            cell_dir(out_dir, &cell.method, &cell.trajectory, cell.seed).join("timeseries.csv");
        let text = fs::read_to_string(&path)?;
        let mut lines = text.lines();
        let header: Vec<&str> = match lines.next() {
            Some(h) => h.split(',').collect(),
            None => continue,
        };
        let speed_cols: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, name)| name.starts_with("omega_") && name.ends_with("_rpm"))
            .map(|(i, _)| i)
            .collect();
        let mut counts: std::collections::BTreeMap<i64, u64> = std::collections::BTreeMap::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            for &c in &speed_cols {
                let rpm: f64 = fields[c].parse().unwrap_or(f64::NAN);
                if rpm.is_finite() {
                    let bin = (rpm / HISTOGRAM_BIN_RPM).floor() as i64;
                    *counts.entry(bin).or_insert(0) += 1;
                }
            }
        }
        for (bin, count) in counts {
            let lo = bin as f64 * HISTOGRAM_BIN_RPM;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                cell.method,
                cell.trajectory,
                cell.seed,
                lo,
                lo + HISTOGRAM_BIN_RPM,
                count
            ));
        }
    }
    Ok(out)
}

/// Mean mechanical power per cell, normalized by the power-curve method's
/// value on the same trajectory and seed.
fn power_ratio_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("method,trajectory,seed,mean_power_w,ratio_vs_apower\n");
    for r in reports {
        let baseline = reports
            .iter()
            .find(|b| {
                b.method == AllocationMethod::PowerCurves.label()
                    && b.trajectory == r.trajectory
                    && b.seed == r.seed
            })
            .and_then(|b| b.mean_power_w);
        let ratio = match (r.mean_power_w, baseline) {
            (Some(p), Some(b)) if b > 0.0 => Some(p / b),
            _ => None,
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            r.trajectory,
            r.seed,
            r.mean_power_w.map_or(String::from(""), |v| format!("{v}")),
            ratio.map_or(String::from(""), |v| format!("{v}")),
        ));
    }
    out
}

fn max_rotor_speeds_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("method,trajectory,seed,max_rotor_speed_rpm,success\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            r.trajectory,
            r.seed,
            r.max_rotor_speed_rpm
                .map_or(String::from(""), |v| format!("{v}")),
            r.success as u8,
        ));
    }
    out
}

/// Oscillation periods per method must fail monotonically: a failure at some
/// period implies failure at every faster one. Returns warning strings for
/// violations (soft check only).
fn check_osc_monotonicity(config: &BenchConfig, cells: &[CellOutcome]) -> Vec<String> {
    let mut warnings = Vec::new();
    // (label, period) of osc trajectories, slowest first
    let mut osc: Vec<(String, f64)> = config
        .trajectories
        .iter()
        .filter_map(|t| match t {
            BenchTrajectory::Standard(TrajectorySpec::Osc { period, .. }) => {
                Some((t.label(), *period))
            }
            _ => None,
        })
        .collect();
    osc.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

    for method in &config.methods {
        for &seed in &config.seeds {
            let mut seen_failure_at: Option<f64> = None;
            for (label, period) in &osc {
                let Some(cell) = cells.iter().find(|c| {
                    c.method == method.label() && &c.trajectory == label && c.seed == seed
                }) else {
                    continue;
                };
                if !cell.success {
                    if seen_failure_at.is_none() {
                        seen_failure_at = Some(*period);
                    }
                } else if let Some(slower) = seen_failure_at {
                    warnings.push(format!(
                        "{} (seed {seed}) fails at period {slower} s but succeeds at faster {period} s",
                        method.label()
                    ));
                }
            }
        }
    }
    warnings
}

/// Welch verdict on one error channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelchVerdict {
    pub t_statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: f64,
    pub significant: bool,
}

impl WelchVerdict {
    fn from_test(test: WelchTest, alpha: f64) -> Self {
        Self {
            t_statistic: test.t_statistic,
            p_value: test.p_value,
            degrees_of_freedom: test.degrees_of_freedom,
            significant: test.p_value < alpha,
        }
    }
}

/// Statistical comparison of two runs (`tiltalloc compare`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelchComparison {
    pub schema_version: u32,
    pub method_a: String,
    pub method_b: String,
    pub trajectory_a: String,
    pub trajectory_b: String,
    pub alpha: f64,
    pub linear: WelchVerdict,
    pub angular: WelchVerdict,
}

/// Significance threshold for the comparison verdicts.
pub const SIGNIFICANCE_ALPHA: f64 = 0.05;

/// Welch-test the linear and angular velocity error samples of two reports.
pub fn compare_errors(a: &MetricsReport, b: &MetricsReport) -> Result<WelchComparison> {
    let linear = welch_t_test(&a.lin_vel_err_samples, &b.lin_vel_err_samples)?;
    let angular = welch_t_test(&a.ang_vel_err_samples, &b.ang_vel_err_samples)?;
    Ok(WelchComparison {
        schema_version: SCHEMA_VERSION,
        method_a: a.method.clone(),
        method_b: b.method.clone(),
        trajectory_a: a.trajectory.clone(),
        trajectory_b: b.trajectory.clone(),
        alpha: SIGNIFICANCE_ALPHA,
        linear: WelchVerdict::from_test(linear, SIGNIFICANCE_ALPHA),
        angular: WelchVerdict::from_test(angular, SIGNIFICANCE_ALPHA),
    })
}

/// Load a `metrics.json` report.
pub fn load_report(path: &Path) -> Result<MetricsReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

/// Sampled curve table for plotting (`tiltalloc curves`): proposed limit
/// curves, their midpoint and the physical power-balance curves, all in RPM
/// and RPM/s.
pub fn curves_csv(
    curves: &crate::power::LimitCurveSet,
    power: &crate::power::MotorPowerParams,
    samples: usize,
) -> String {
    use crate::types::rad_s_to_rpm;
    let mut out = String::from(
        "omega_rpm,accel_min_rpm_s,accel_max_rpm_s,midpoint_rpm_s,phys_accel_min_rpm_s,phys_accel_max_rpm_s\n",
    );
    let (w0, w1) = (curves.anchors.omega_min, curves.anchors.omega_max);
    for k in 0..=samples {
        let w = w0 + (w1 - w0) * k as f64 / samples as f64;
        let (lo, hi) = curves.eval_limits(w);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rad_s_to_rpm(w),
            rad_s_to_rpm(lo),
            rad_s_to_rpm(hi),
            rad_s_to_rpm(0.5 * (lo + hi)),
            rad_s_to_rpm(power.min_accel(w)),
            rad_s_to_rpm(power.max_accel(w)),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_trajectory, RunFile};

    fn tiny_config() -> BenchConfig {
        let mut cfg = BenchConfig::stock();
        let run = RunFile::default();
        cfg.methods = vec![AllocationMethod::PowerCurves, AllocationMethod::Geometric];
        cfg.trajectories = vec![parse_trajectory("hover:0.2", &run).unwrap()];
        cfg.seeds = vec![0];
        cfg
    }

    #[test]
    fn matrix_emits_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_matrix(&tiny_config(), dir.path()).unwrap();
        assert_eq!(summary.grid.cells.len(), 2);
        assert!(summary.grid.cells.iter().all(|c| c.error.is_none()));
        for f in [
            "success_grid.json",
            "velocity_error_summary.json",
            "speed_histograms.csv",
            "power_ratio.csv",
            "max_rotor_speeds.csv",
        ] {
            assert!(dir.path().join(f).exists(), "missing {f}");
        }
        assert!(dir
            .path()
            .join("cells/apower__hover__s0/metrics.json")
            .exists());
        assert!(dir
            .path()
            .join("cells/ageom__hover__s0/timeseries.csv")
            .exists());
    }

    #[test]
    fn screw_cell_requires_apower() {
        let mut cfg = tiny_config();
        cfg.methods = vec![AllocationMethod::Geometric];
        cfg.trajectories = vec![BenchTrajectory::Screw];
        // long scenario avoided: the geometric cell errors out instead
        let dir = tempfile::tempdir().unwrap();
        let summary = run_matrix(&cfg, dir.path()).unwrap();
        assert_eq!(summary.grid.cells.len(), 1);
        assert!(summary.grid.cells[0].error.is_some());
        assert!(!summary.grid.cells[0].success);
    }

    #[test]
    fn power_ratio_of_apower_is_one() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_matrix(&tiny_config(), dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("power_ratio.csv")).unwrap();
        let apower_line = csv
            .lines()
            .find(|l| l.starts_with("apower"))
            .expect("apower row present");
        let ratio: f64 = apower_line.split(',').next_back().unwrap().parse().unwrap();
        assert_eq!(ratio, 1.0);
        drop(summary);
    }

    #[test]
    fn compare_identical_reports() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_matrix(&tiny_config(), dir.path()).unwrap();
        let report = &summary.reports[0];
        let cmp = compare_errors(report, report).unwrap();
        assert_eq!(cmp.linear.p_value, 1.0);
        assert!(!cmp.linear.significant);
        assert!(!cmp.angular.significant);
    }

    #[test]
    fn deterministic_rerun_is_byte_identical() {
        let cfg = tiny_config();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_matrix(&cfg, dir_a.path()).unwrap();
        run_matrix(&cfg, dir_b.path()).unwrap();
        for f in [
            "success_grid.json",
            "velocity_error_summary.json",
            "power_ratio.csv",
        ] {
            let a = std::fs::read(dir_a.path().join(f)).unwrap();
            let b = std::fs::read(dir_b.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between identical runs");
        }
        let a = std::fs::read(dir_a.path().join("cells/apower__hover__s0/metrics.json")).unwrap();
        let b = std::fs::read(dir_b.path().join("cells/apower__hover__s0/metrics.json")).unwrap();
        assert_eq!(a, b);
    }
}
