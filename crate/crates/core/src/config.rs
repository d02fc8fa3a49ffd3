//! TOML configuration schemas.
//!
//! Two file kinds exist: a *platform* file describing the vehicle (geometry,
//! limits, actuator dynamics, motor power parameters, curve anchors) and a
//! *run* file describing a benchmark (methods, trajectories, seeds, loop
//! timing, controller and allocation tuning). All rotor quantities are RPM
//! and RPM/s in the files; conversion to rad/s happens here.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::alloc::differential::WeightMatrix;
use crate::error::{Error, Result};
use crate::limits::ActuatorLimits;
use crate::platform::{ActuatorDynamicsModel, PlatformGeometry, ThrustModel};
use crate::power::{solve_limit_curves, CurveAnchors, MotorPowerParams};
use crate::sim::rigid_body::Integrator;
use crate::sim::scenario::{AllocationMethod, ScenarioSetup, ScrewParams};
use crate::sim::trajectory::{OscAxis, TrajectorySpec};
use crate::types::rpm_to_rad_s;

fn toml_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

// ---------------------------------------------------------------------------
// platform file

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub arm_count: usize,
    pub arm_length_m: f64,
    pub mass_kg: f64,
    pub inertia_diag_kgm2: [f64; 3],
    pub gravity_mps2: f64,
    /// Sets the thrust coefficient so hover sits at this speed.
    pub hover_speed_rpm: f64,
    /// Drag torque coefficient as a fraction of the thrust coefficient (m).
    pub drag_torque_ratio_m: f64,
    /// "linear" (thrust ~ speed) or "quadratic" (thrust ~ speed^2).
    pub thrust_model: String,
    /// Explicit azimuths (deg); evenly spaced when omitted.
    pub arm_azimuths_deg: Option<Vec<f64>>,
    /// Explicit spin directions; alternating +-1 when omitted.
    pub spin_directions: Option<Vec<f64>>,
    /// Explicit thrust coefficient (N per rad/s); overrides hover_speed_rpm.
    pub thrust_coefficient: Option<f64>,
    /// Explicit drag torque coefficient (N*m per rad/s); overrides the ratio.
    pub drag_torque_coefficient: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            arm_count: 6,
            arm_length_m: 0.3,
            mass_kg: 4.0,
            inertia_diag_kgm2: [0.08, 0.08, 0.14],
            gravity_mps2: 9.81,
            hover_speed_rpm: 5800.0,
            drag_torque_ratio_m: 0.015,
            // aerodynamic thrust: sustained 90-degree attitudes need the
            // quadratic per-rotor headroom, the linear map cannot lift the
            // platform sideways inside the speed envelope
            thrust_model: "quadratic".to_string(),
            arm_azimuths_deg: None,
            spin_directions: None,
            thrust_coefficient: None,
            drag_torque_coefficient: None,
        }
    }
}

impl GeometryConfig {
    pub fn resolve(&self) -> Result<PlatformGeometry> {
        let thrust_model = match self.thrust_model.as_str() {
            "linear" => ThrustModel::Linear,
            "quadratic" => ThrustModel::Quadratic,
            other => {
                return Err(Error::Config(format!(
                    "thrust_model must be 'linear' or 'quadratic', got '{other}'"
                )))
            }
        };
        let mut geom = PlatformGeometry::symmetric(
            self.arm_count,
            self.arm_length_m,
            self.mass_kg,
            Vector3::from(self.inertia_diag_kgm2),
            rpm_to_rad_s(self.hover_speed_rpm),
            self.drag_torque_ratio_m,
            thrust_model,
        )?;
        geom.gravity = self.gravity_mps2;
        if let Some(az) = &self.arm_azimuths_deg {
            geom.arm_azimuths = az.iter().map(|d| d.to_radians()).collect();
        }
        if let Some(spins) = &self.spin_directions {
            geom.spin_directions = spins.clone();
        }
        // hover speed pins k_f unless given explicitly; gravity overrides
        // must flow into it
        let k_f = self.thrust_coefficient.unwrap_or_else(|| {
            let coord = thrust_model.coord(rpm_to_rad_s(self.hover_speed_rpm));
            self.mass_kg * self.gravity_mps2 / (self.arm_count as f64 * coord)
        });
        geom.thrust_coefficient = k_f;
        geom.drag_torque_coefficient = self
            .drag_torque_coefficient
            .unwrap_or(self.drag_torque_ratio_m * k_f);
        geom.validate()?;
        Ok(geom)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsConfig {
    pub tilt_rate_max_rad_s: f64,
    pub rotor_accel_max_rpm_s: f64,
    pub rotor_speed_min_rpm: f64,
    pub rotor_speed_max_rpm: f64,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self {
            tilt_rate_max_rad_s: 3.4,
            rotor_accel_max_rpm_s: 13_000.0,
            rotor_speed_min_rpm: 0.0,
            rotor_speed_max_rpm: 8700.0,
        }
    }
}

impl LimitsConfig {
    pub fn resolve(&self, arm_count: usize) -> Result<ActuatorLimits> {
        ActuatorLimits::symmetric(
            arm_count,
            self.tilt_rate_max_rad_s,
            rpm_to_rad_s(self.rotor_accel_max_rpm_s),
            (
                rpm_to_rad_s(self.rotor_speed_min_rpm),
                rpm_to_rad_s(self.rotor_speed_max_rpm),
            ),
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub tilt_gain_per_s: f64,
    pub rotor_gain_per_s: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            tilt_gain_per_s: 30.0,
            rotor_gain_per_s: 50.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    pub efficiency: f64,
    pub voltage_v: f64,
    pub current_max_a: f64,
    pub current_min_a: f64,
    pub rotor_inertia_kgm2: f64,
    pub drag_coefficient_nms2: f64,
    /// ESC acceleration caps; the static limit is reused when omitted.
    pub esc_accel_cap_rpm_s: Option<f64>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.8,
            voltage_v: 23.0,
            current_max_a: 17.0,
            current_min_a: -17.0,
            rotor_inertia_kgm2: 4.5e-4,
            drag_coefficient_nms2: 3.5e-7,
            esc_accel_cap_rpm_s: None,
        }
    }
}

impl PowerConfig {
    pub fn resolve(&self, fallback_cap_rpm_s: f64) -> Result<MotorPowerParams> {
        let cap = rpm_to_rad_s(self.esc_accel_cap_rpm_s.unwrap_or(fallback_cap_rpm_s));
        let params = MotorPowerParams {
            efficiency: self.efficiency,
            voltage: self.voltage_v,
            current_min: self.current_min_a,
            current_max: self.current_max_a,
            rotor_inertia: self.rotor_inertia_kgm2,
            drag_coefficient: self.drag_coefficient_nms2,
            accel_caps: (-cap, cap),
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurvesConfig {
    pub omega_min_rpm: f64,
    pub omega_l_rpm: f64,
    pub omega_m_rpm: f64,
    pub omega_h_rpm: f64,
    pub omega_max_rpm: f64,
    pub accel_max_at_min_rpm_s: f64,
    pub accel_min_at_max_rpm_s: f64,
    /// Interior anchors as a fraction of the end caps, unless given
    /// explicitly below.
    pub interior_fraction: f64,
    pub accel_max_at_high_rpm_s: Option<f64>,
    pub accel_min_at_low_rpm_s: Option<f64>,
}

impl Default for CurvesConfig {
    fn default() -> Self {
        Self {
            omega_min_rpm: 0.0,
            omega_l_rpm: 900.0,
            omega_m_rpm: 5800.0,
            omega_h_rpm: 7800.0,
            omega_max_rpm: 8700.0,
            accel_max_at_min_rpm_s: 12_000.0,
            accel_min_at_max_rpm_s: -14_000.0,
            interior_fraction: 0.8,
            accel_max_at_high_rpm_s: None,
            accel_min_at_low_rpm_s: None,
        }
    }
}

impl CurvesConfig {
    pub fn anchors(&self) -> CurveAnchors {
        CurveAnchors {
            omega_min: rpm_to_rad_s(self.omega_min_rpm),
            omega_l: rpm_to_rad_s(self.omega_l_rpm),
            omega_m: rpm_to_rad_s(self.omega_m_rpm),
            omega_h: rpm_to_rad_s(self.omega_h_rpm),
            omega_max: rpm_to_rad_s(self.omega_max_rpm),
            accel_max_at_min: rpm_to_rad_s(self.accel_max_at_min_rpm_s),
            accel_min_at_max: rpm_to_rad_s(self.accel_min_at_max_rpm_s),
            accel_max_at_high: rpm_to_rad_s(
                self.accel_max_at_high_rpm_s
                    .unwrap_or(self.interior_fraction * self.accel_max_at_min_rpm_s),
            ),
            accel_min_at_low: rpm_to_rad_s(
                self.accel_min_at_low_rpm_s
                    .unwrap_or(self.interior_fraction * self.accel_min_at_max_rpm_s),
            ),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlatformFile {
    pub geometry: GeometryConfig,
    pub limits: LimitsConfig,
    pub actuator_dynamics: DynamicsConfig,
    pub power: PowerConfig,
    pub curves: CurvesConfig,
}

impl PlatformFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(toml_err)
    }
}

// ---------------------------------------------------------------------------
// run file

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt_sim_s: f64,
    pub dt_control_s: f64,
    pub fail_threshold_m: f64,
    /// "semi-implicit" or "rk4".
    pub integrator: String,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_sim_s: 1e-3,
            dt_control_s: 5e-3,
            fail_threshold_m: 1.0,
            integrator: "semi-implicit".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub position_time_constant_s: f64,
    pub attitude_time_constant_s: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            position_time_constant_s: 1.0,
            attitude_time_constant_s: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationConfig {
    pub jerk_gain_per_s: f64,
    pub target_speed_rpm: f64,
    pub hover_objective_gain_per_s: f64,
    /// Rotor-channel weight for adiff/adiffold; derived from the rate limits
    /// when omitted.
    pub rotor_weight: Option<f64>,
    pub accel_noise_force_n: f64,
    pub accel_noise_torque_nm: f64,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            jerk_gain_per_s: 20.0,
            target_speed_rpm: 5800.0,
            hover_objective_gain_per_s: 2.0,
            rotor_weight: None,
            accel_noise_force_n: 0.0,
            accel_noise_torque_nm: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscConfig {
    pub amplitude_rad: f64,
    pub axis: String,
    pub duration_s: f64,
}

impl Default for OscConfig {
    fn default() -> Self {
        Self {
            amplitude_rad: 0.64,
            axis: "roll".to_string(),
            duration_s: 12.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig8Config {
    pub period_s: f64,
    pub amplitude_m: f64,
    pub yaw_amplitude_rad: f64,
    pub roll_amplitude_rad: f64,
    pub ramp_s: f64,
    pub duration_s: f64,
    /// Arms start fanned outward by this angle (alternating sign) with the
    /// matching raised rotor speeds: an internal-force posture that exposes
    /// which methods rebalance the rotors and which drift.
    pub initial_fan_deg: f64,
}

impl Default for Fig8Config {
    fn default() -> Self {
        Self {
            period_s: 20.0,
            amplitude_m: 1.2,
            yaw_amplitude_rad: 0.7,
            roll_amplitude_rad: 0.25,
            ramp_s: 2.0,
            duration_s: 40.0,
            initial_fan_deg: 25.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartwheelConfig {
    pub pitch_rate_deg_s: f64,
    pub spin_rate_deg_s: f64,
    pub spin_blend_s: f64,
    pub duration_s: f64,
}

impl Default for CartwheelConfig {
    fn default() -> Self {
        Self {
            pitch_rate_deg_s: 15.0,
            spin_rate_deg_s: 30.0,
            spin_blend_s: 0.5,
            duration_s: 9.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HoverConfig {
    pub duration_s: f64,
    /// Optional initial rotor speeds (RPM), e.g. a perturbed start.
    pub initial_rotor_speeds_rpm: Option<Vec<f64>>,
}

impl Default for HoverConfig {
    fn default() -> Self {
        Self {
            duration_s: 10.0,
            initial_rotor_speeds_rpm: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScrewConfig {
    pub rotor_index: usize,
    pub hover_lead_s: f64,
    pub stop_accel_rpm_s: f64,
    pub stop_threshold_rpm: f64,
    pub stop_timeout_s: f64,
    /// (duration s, rate rad/s) segments.
    pub profile: Vec<(f64, f64)>,
    pub friction_rate_rad_s: f64,
    pub release_hold_s: f64,
    pub integral_gain_per_s: f64,
    pub integral_limit_rad: f64,
}

impl Default for ScrewConfig {
    fn default() -> Self {
        let d = ScrewParams::default();
        Self {
            rotor_index: d.rotor_index,
            hover_lead_s: d.hover_lead,
            stop_accel_rpm_s: crate::types::rad_s_to_rpm(d.stop_accel),
            stop_threshold_rpm: crate::types::rad_s_to_rpm(d.stop_threshold),
            stop_timeout_s: d.stop_timeout,
            profile: d.profile,
            friction_rate_rad_s: d.friction_rate,
            release_hold_s: d.release_hold,
            integral_gain_per_s: d.integral_gain,
            integral_limit_rad: d.integral_limit,
        }
    }
}

impl ScrewConfig {
    pub fn resolve(&self) -> ScrewParams {
        ScrewParams {
            rotor_index: self.rotor_index,
            hover_lead: self.hover_lead_s,
            stop_accel: rpm_to_rad_s(self.stop_accel_rpm_s),
            stop_threshold: rpm_to_rad_s(self.stop_threshold_rpm),
            stop_timeout: self.stop_timeout_s,
            profile: self.profile.clone(),
            friction_rate: self.friction_rate_rad_s,
            release_hold: self.release_hold_s,
            integral_gain: self.integral_gain_per_s,
            integral_limit: self.integral_limit_rad,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunFile {
    /// Method labels; the benchmark default set when omitted.
    pub methods: Option<Vec<String>>,
    /// Trajectory labels, e.g. "fig8", "osc-roll:1.6", "cartwheel",
    /// "hover:10", "screw".
    pub trajectories: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    /// Platform file path, relative to this run file.
    pub platform: Option<String>,
    pub sim: SimConfig,
    pub controller: ControllerConfig,
    pub allocation: AllocationConfig,
    pub osc: OscConfig,
    pub fig8: Fig8Config,
    pub cartwheel: CartwheelConfig,
    pub hover: HoverConfig,
    pub screw: ScrewConfig,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(toml_err)
    }
}

/// Default benchmark method set.
pub fn default_methods() -> Vec<AllocationMethod> {
    vec![
        AllocationMethod::Geometric,
        AllocationMethod::Differential,
        AllocationMethod::NormalizedStatic,
        AllocationMethod::NormalizedNoObjective,
        AllocationMethod::PowerCurves,
    ]
}

/// Default benchmark trajectory labels: the slow figure-8, the oscillation
/// sweep from 1.6 s down to 1.0 s and the cartwheel.
pub fn default_trajectory_labels() -> Vec<String> {
    let mut labels = vec!["fig8".to_string()];
    for period in ["1.6", "1.4", "1.3", "1.2", "1.1", "1.0"] {
        labels.push(format!("osc-roll:{period}"));
    }
    labels.push("cartwheel".to_string());
    labels
}

/// A benchmark cell trajectory: either a standard reference or the
/// propeller-stop scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum BenchTrajectory {
    Standard(TrajectorySpec),
    Screw,
}

impl BenchTrajectory {
    pub fn label(&self) -> String {
        match self {
            BenchTrajectory::Standard(spec) => spec.label(),
            BenchTrajectory::Screw => "screw".to_string(),
        }
    }
}

fn parse_osc_axis(name: &str) -> Result<OscAxis> {
    match name {
        "roll" => Ok(OscAxis::Roll),
        "pitch" => Ok(OscAxis::Pitch),
        "yaw" => Ok(OscAxis::Yaw),
        other => Err(Error::Config(format!("unknown oscillation axis '{other}'"))),
    }
}

/// Parse a trajectory label against the run file's shape tables.
pub fn parse_trajectory(label: &str, run: &RunFile) -> Result<BenchTrajectory> {
    let (kind, param) = match label.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (label, None),
    };
    let parse_f64 = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad numeric parameter in trajectory '{label}'")))
    };
    match kind {
        "fig8" => Ok(BenchTrajectory::Standard(TrajectorySpec::Fig8 {
            period: run.fig8.period_s,
            amplitude: run.fig8.amplitude_m,
            yaw_amplitude: run.fig8.yaw_amplitude_rad,
            roll_amplitude: run.fig8.roll_amplitude_rad,
            ramp: run.fig8.ramp_s,
            duration: param
                .map(parse_f64)
                .transpose()?
                .unwrap_or(run.fig8.duration_s),
        })),
        "cartwheel" => Ok(BenchTrajectory::Standard(TrajectorySpec::Cartwheel {
            pitch_rate: run.cartwheel.pitch_rate_deg_s.to_radians(),
            spin_rate: run.cartwheel.spin_rate_deg_s.to_radians(),
            spin_blend: run.cartwheel.spin_blend_s,
            duration: param
                .map(parse_f64)
                .transpose()?
                .unwrap_or(run.cartwheel.duration_s),
        })),
        "hover" => Ok(BenchTrajectory::Standard(TrajectorySpec::Hover {
            duration: param
                .map(parse_f64)
                .transpose()?
                .unwrap_or(run.hover.duration_s),
        })),
        "screw" => Ok(BenchTrajectory::Screw),
        osc if osc.starts_with("osc-") => {
            let axis = parse_osc_axis(&osc[4..])?;
            let period = param
                .ok_or_else(|| {
                    Error::Config(format!(
                        "oscillation trajectory '{label}' needs a period, e.g. 'osc-roll:1.6'"
                    ))
                })
                .and_then(parse_f64)?;
            Ok(BenchTrajectory::Standard(TrajectorySpec::Osc {
                axis,
                period,
                amplitude: run.osc.amplitude_rad,
                duration: run.osc.duration_s,
            }))
        }
        other => Err(Error::Config(format!("unknown trajectory kind '{other}'"))),
    }
}

/// Fully resolved benchmark configuration.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub setup: ScenarioSetup,
    pub methods: Vec<AllocationMethod>,
    pub trajectories: Vec<BenchTrajectory>,
    pub seeds: Vec<u64>,
    pub screw: ScrewParams,
    /// Initial rotor speeds for hover cells (rad/s), from the hover table.
    pub hover_initial_speeds: Option<Vec<f64>>,
    /// Fan angle of the figure-8 start posture (rad).
    pub fig8_fan: f64,
}

impl BenchConfig {
    /// Resolve a run file (platform paths are taken relative to `base_dir`).
    pub fn resolve(run: &RunFile, base_dir: &Path) -> Result<Self> {
        let platform = match &run.platform {
            Some(rel) => PlatformFile::load(&base_dir.join(rel))?,
            None => PlatformFile::default(),
        };
        let geometry = platform.geometry.resolve()?;
        let limits = platform.limits.resolve(geometry.arm_count)?;
        let dynamics = ActuatorDynamicsModel::uniform(
            geometry.arm_count,
            platform.actuator_dynamics.tilt_gain_per_s,
            platform.actuator_dynamics.rotor_gain_per_s,
        )?;
        let power = platform
            .power
            .resolve(platform.limits.rotor_accel_max_rpm_s)?;
        let curves = solve_limit_curves(&platform.curves.anchors())?;
        let weights = match run.allocation.rotor_weight {
            Some(w) => {
                let n = geometry.arm_count;
                let mut diag = nalgebra::DVector::from_element(2 * n, 1.0);
                for i in n..2 * n {
                    diag[i] = w;
                }
                WeightMatrix::new(diag)?
            }
            None => WeightMatrix::rate_scaled(
                geometry.arm_count,
                platform.limits.tilt_rate_max_rad_s,
                rpm_to_rad_s(platform.limits.rotor_accel_max_rpm_s),
            )?,
        };
        let integrator = match run.sim.integrator.as_str() {
            "semi-implicit" => Integrator::SemiImplicitEuler,
            "rk4" => Integrator::RungeKutta4,
            other => {
                return Err(Error::Config(format!(
                    "integrator must be 'semi-implicit' or 'rk4', got '{other}'"
                )))
            }
        };
        let setup = ScenarioSetup {
            geometry,
            limits,
            dynamics,
            power,
            curves,
            controller_tau: (
                run.controller.position_time_constant_s,
                run.controller.attitude_time_constant_s,
            ),
            alloc: crate::sim::scenario::AllocParams {
                jerk_gain: run.allocation.jerk_gain_per_s,
                target_speed: rpm_to_rad_s(run.allocation.target_speed_rpm),
                hover_objective_gain: run.allocation.hover_objective_gain_per_s,
                weights,
                damping: crate::alloc::differential::DEFAULT_DAMPING,
                accel_feedback_noise: (
                    run.allocation.accel_noise_force_n,
                    run.allocation.accel_noise_torque_nm,
                ),
            },
            sim: crate::sim::scenario::SimParams {
                dt_sim: run.sim.dt_sim_s,
                dt_control: run.sim.dt_control_s,
                fail_threshold: run.sim.fail_threshold_m,
                integrator,
            },
            initial_rotor_speeds: None,
            initial_tilt_angles: None,
        };

        let method_labels = run.methods.clone();
        let methods = match method_labels {
            Some(labels) => labels
                .iter()
                .map(|l| AllocationMethod::parse(l))
                .collect::<Result<Vec<_>>>()?,
            None => default_methods(),
        };
        let trajectory_labels = run
            .trajectories
            .clone()
            .unwrap_or_else(default_trajectory_labels);
        let trajectories = trajectory_labels
            .iter()
            .map(|l| parse_trajectory(l, run))
            .collect::<Result<Vec<_>>>()?;
        if methods.is_empty() || trajectories.is_empty() {
            return Err(Error::Config(
                "at least one method and one trajectory are required".into(),
            ));
        }
        Ok(Self {
            setup,
            methods,
            trajectories,
            seeds: run.seeds.clone().unwrap_or_else(|| vec![0]),
            screw: run.screw.resolve(),
            hover_initial_speeds: run
                .hover
                .initial_rotor_speeds_rpm
                .as_ref()
                .map(|v| v.iter().map(|&rpm| rpm_to_rad_s(rpm)).collect()),
            fig8_fan: run.fig8.initial_fan_deg.to_radians(),
        })
    }

    /// Stock configuration (no files involved).
    pub fn stock() -> Self {
        Self::resolve(&RunFile::default(), Path::new(".")).expect("stock config resolves")
    }
}
