//! Per-run records and aggregate metrics.
//!
//! Each control tick appends one record; aggregates and the serialized
//! report are derived afterwards. Emitted files carry no timestamps so a
//! rerun with the same configuration is byte-identical.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::types::rad_s_to_rpm;

/// Version stamp for the timeseries/metrics schema.
pub const SCHEMA_VERSION: u32 = 1;

/// One control-tick snapshot (internal units: rad, rad/s, rad/s^2, m, N, W).
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub ref_position: [f64; 3],
    pub ref_quaternion: [f64; 4],
    pub position: [f64; 3],
    pub quaternion: [f64; 4],
    pub velocity: [f64; 3],
    pub angular_velocity: [f64; 3],
    pub pos_err: f64,
    pub att_err: f64,
    pub lin_vel_err: f64,
    pub ang_vel_err: f64,
    pub tilt_angles: Vec<f64>,
    pub rotor_speeds: Vec<f64>,
    pub cmd_tilt_angles: Vec<f64>,
    pub cmd_rotor_speeds: Vec<f64>,
    pub accel_limit_min: Vec<f64>,
    pub accel_limit_max: Vec<f64>,
    pub rotor_power: Vec<f64>,
    pub rate_saturated: bool,
    pub speed_saturated: bool,
    pub feasible: bool,
}

/// Extra trace recorded by the propeller-stop scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScrewTrace {
    pub rotor_index: usize,
    /// 0 hover, 1 stopping, 2 interaction, 3 released.
    pub phase: Vec<u8>,
    pub arm_rate_target: Vec<f64>,
    pub arm_rate_measured: Vec<f64>,
}

/// Full result of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub method: String,
    pub trajectory: String,
    pub seed: u64,
    pub dt_control: f64,
    pub records: Vec<TickRecord>,
    pub success: bool,
    pub first_violation_t: Option<f64>,
    pub abort_reason: Option<String>,
    pub screw: Option<ScrewTrace>,
}

/// Mean plus quartiles of a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub mean: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn summarize(samples: &[f64]) -> Option<SampleSummary> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let quantile = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    Some(SampleSummary {
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
        q25: quantile(0.25),
        q50: quantile(0.50),
        q75: quantile(0.75),
        max: *sorted.last().unwrap(),
    })
}

/// Serialized per-run report (`metrics.json`). Error samples are kept
/// (downsampled) so reports can be compared statistically later without the
/// full timeseries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub method: String,
    pub trajectory: String,
    pub seed: u64,
    pub duration_s: f64,
    pub control_ticks: usize,
    pub success: bool,
    pub first_violation_t: Option<f64>,
    pub abort_reason: Option<String>,
    pub lin_vel_err: Option<SampleSummary>,
    pub ang_vel_err: Option<SampleSummary>,
    pub pos_err_mean: Option<f64>,
    pub pos_err_max: Option<f64>,
    pub max_rotor_speed_rpm: Option<f64>,
    pub mean_rotor_speed_rpm: Option<f64>,
    /// Mean rotor speed over the final tenth of the run.
    pub end_mean_rotor_speed_rpm: Option<f64>,
    pub total_energy_j: f64,
    pub mean_power_w: Option<f64>,
    pub rate_saturation_count: usize,
    pub speed_saturation_count: usize,
    pub infeasible_count: usize,
    pub lin_vel_err_samples: Vec<f64>,
    pub ang_vel_err_samples: Vec<f64>,
}

/// Downsampling stride for the embedded error samples.
const SAMPLE_STRIDE: usize = 10;

impl RunMetrics {
    pub fn duration(&self) -> f64 {
        self.records.len() as f64 * self.dt_control
    }

    pub fn lin_vel_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lin_vel_err).collect()
    }

    pub fn ang_vel_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ang_vel_err).collect()
    }

    pub fn max_rotor_speed(&self) -> Option<f64> {
        self.records
            .iter()
            .flat_map(|r| r.rotor_speeds.iter().copied())
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            })
    }

    pub fn mean_power(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let total: f64 = self
            .records
            .iter()
            .map(|r| r.rotor_power.iter().sum::<f64>())
            .sum();
        Some(total / self.records.len() as f64)
    }

    pub fn total_energy(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.rotor_power.iter().sum::<f64>() * self.dt_control)
            .sum()
    }

    fn mean_rotor_speed_over(&self, records: &[TickRecord]) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in records {
            for &w in &r.rotor_speeds {
                sum += w;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }

    pub fn report(&self) -> MetricsReport {
        let lin = self.lin_vel_errors();
        let ang = self.ang_vel_errors();
        let pos: Vec<f64> = self.records.iter().map(|r| r.pos_err).collect();
        let tail_start = self.records.len() - self.records.len() / 10;
        MetricsReport {
            schema_version: SCHEMA_VERSION,
            method: self.method.clone(),
            trajectory: self.trajectory.clone(),
            seed: self.seed,
            duration_s: self.duration(),
            control_ticks: self.records.len(),
            success: self.success,
            first_violation_t: self.first_violation_t,
            abort_reason: self.abort_reason.clone(),
            lin_vel_err: summarize(&lin),
            ang_vel_err: summarize(&ang),
            pos_err_mean: (!pos.is_empty()).then(|| pos.iter().sum::<f64>() / pos.len() as f64),
            pos_err_max: pos.iter().copied().fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            }),
            max_rotor_speed_rpm: self.max_rotor_speed().map(rad_s_to_rpm),
            mean_rotor_speed_rpm: self.mean_rotor_speed_over(&self.records).map(rad_s_to_rpm),
            end_mean_rotor_speed_rpm: self
                .mean_rotor_speed_over(&self.records[tail_start..])
                .map(rad_s_to_rpm),
            total_energy_j: self.total_energy(),
            mean_power_w: self.mean_power(),
            rate_saturation_count: self.records.iter().filter(|r| r.rate_saturated).count(),
            speed_saturation_count: self.records.iter().filter(|r| r.speed_saturated).count(),
            infeasible_count: self.records.iter().filter(|r| !r.feasible).count(),
            lin_vel_err_samples: lin.iter().step_by(SAMPLE_STRIDE).copied().collect(),
            ang_vel_err_samples: ang.iter().step_by(SAMPLE_STRIDE).copied().collect(),
        }
    }

    /// Column header of `timeseries.csv` for an `n`-arm platform.
    pub fn csv_header(n: usize) -> String {
        let mut cols: Vec<String> = vec![
            "t",
            "ref_px",
            "ref_py",
            "ref_pz",
            "ref_qw",
            "ref_qx",
            "ref_qy",
            "ref_qz",
            "px",
            "py",
            "pz",
            "qw",
            "qx",
            "qy",
            "qz",
            "vx",
            "vy",
            "vz",
            "wx",
            "wy",
            "wz",
            "pos_err_m",
            "att_err_rad",
            "lin_vel_err_mps",
            "ang_vel_err_radps",
        ]
        .into_iter()
        .map(str::to_string)
        .collect();
        for i in 0..n {
            cols.push(format!("alpha_{i}_rad"));
        }
        for i in 0..n {
            cols.push(format!("omega_{i}_rpm"));
        }
        for i in 0..n {
            cols.push(format!("cmd_alpha_{i}_rad"));
        }
        for i in 0..n {
            cols.push(format!("cmd_omega_{i}_rpm"));
        }
        for i in 0..n {
            cols.push(format!("accel_min_{i}_rpm_s"));
        }
        for i in 0..n {
            cols.push(format!("accel_max_{i}_rpm_s"));
        }
        for i in 0..n {
            cols.push(format!("power_{i}_w"));
        }
        cols.extend(
            ["rate_saturated", "speed_saturated", "feasible"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    /// Write the per-tick timeseries as CSV. Rotor quantities are RPM and
    /// RPM/s at this boundary.
    pub fn write_timeseries_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self
            .records
            .first()
            .map(|r| r.tilt_angles.len())
            .unwrap_or(0);
        writeln!(out, "{}", Self::csv_header(n))?;
        for r in &self.records {
            let mut fields: Vec<String> = Vec::with_capacity(25 + 7 * n + 3);
            fields.push(fmt(r.t));
            fields.extend(r.ref_position.iter().map(|&v| fmt(v)));
            fields.extend(r.ref_quaternion.iter().map(|&v| fmt(v)));
            fields.extend(r.position.iter().map(|&v| fmt(v)));
            fields.extend(r.quaternion.iter().map(|&v| fmt(v)));
            fields.extend(r.velocity.iter().map(|&v| fmt(v)));
            fields.extend(r.angular_velocity.iter().map(|&v| fmt(v)));
            fields.push(fmt(r.pos_err));
            fields.push(fmt(r.att_err));
            fields.push(fmt(r.lin_vel_err));
            fields.push(fmt(r.ang_vel_err));
            fields.extend(r.tilt_angles.iter().map(|&v| fmt(v)));
            fields.extend(r.rotor_speeds.iter().map(|&v| fmt(rad_s_to_rpm(v))));
            fields.extend(r.cmd_tilt_angles.iter().map(|&v| fmt(v)));
            fields.extend(r.cmd_rotor_speeds.iter().map(|&v| fmt(rad_s_to_rpm(v))));
            fields.extend(r.accel_limit_min.iter().map(|&v| fmt(rad_s_to_rpm(v))));
            fields.extend(r.accel_limit_max.iter().map(|&v| fmt(rad_s_to_rpm(v))));
            fields.extend(r.rotor_power.iter().map(|&v| fmt(v)));
            fields.push((r.rate_saturated as u8).to_string());
            fields.push((r.speed_saturated as u8).to_string());
            fields.push((r.feasible as u8).to_string());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    // shortest round-trip representation keeps files compact and
    // bit-reproducible
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64, err: f64) -> TickRecord {
        TickRecord {
            t,
            ref_position: [0.0; 3],
            ref_quaternion: [1.0, 0.0, 0.0, 0.0],
            position: [0.0; 3],
            quaternion: [1.0, 0.0, 0.0, 0.0],
            velocity: [0.0; 3],
            angular_velocity: [0.0; 3],
            pos_err: err,
            att_err: 0.0,
            lin_vel_err: err,
            ang_vel_err: 2.0 * err,
            tilt_angles: vec![0.0; 2],
            rotor_speeds: vec![600.0; 2],
            cmd_tilt_angles: vec![0.0; 2],
            cmd_rotor_speeds: vec![600.0; 2],
            accel_limit_min: vec![-1.0; 2],
            accel_limit_max: vec![1.0; 2],
            rotor_power: vec![50.0; 2],
            rate_saturated: false,
            speed_saturated: false,
            feasible: true,
        }
    }

    fn metrics(n: usize) -> RunMetrics {
        RunMetrics {
            method: "apower".into(),
            trajectory: "hover".into(),
            seed: 0,
            dt_control: 0.005,
            records: (0..n)
                .map(|i| record(i as f64 * 0.005, 0.1 * i as f64))
                .collect(),
            success: true,
            first_violation_t: None,
            abort_reason: None,
            screw: None,
        }
    }

    #[test]
    fn empty_run_reports_cleanly() {
        let m = metrics(0);
        let r = m.report();
        assert!(r.success);
        assert!(r.lin_vel_err.is_none());
        assert_eq!(r.control_ticks, 0);
        assert_eq!(r.total_energy_j, 0.0);
        let mut buf = Vec::new();
        m.write_timeseries_csv(&mut buf).unwrap();
        // header only
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
    }

    #[test]
    fn quartiles_match_hand_computation() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.q50, 2.5);
        assert_eq!(s.q25, 1.75);
        assert_eq!(s.q75, 3.25);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.max, 4.0);
    }

    #[test]
    fn csv_shape_is_consistent() {
        let m = metrics(10);
        let mut buf = Vec::new();
        m.write_timeseries_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header_cols = lines.next().unwrap().split(',').count();
        for line in lines {
            assert_eq!(line.split(',').count(), header_cols);
        }
    }

    #[test]
    fn report_serializes_deterministically() {
        let m = metrics(25);
        let a = serde_json::to_string_pretty(&m.report()).unwrap();
        let b = serde_json::to_string_pretty(&m.report()).unwrap();
        assert_eq!(a, b);
        let parsed: MetricsReport = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed.control_ticks, 25);
        assert_eq!(parsed.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn energy_integrates_power() {
        let m = metrics(100);
        // 2 rotors * 50 W * 100 ticks * 5 ms
        assert!((m.total_energy() - 100.0 * 0.005 * 100.0).abs() < 1e-9);
    }
}
