//! Closed-loop scenario execution.
//!
//! Control loop per tick: reference -> pose controller -> selected allocation
//! -> actuator setpoints -> (inner simulation steps of) first-order actuators
//! -> wrench from state -> rigid body. Divergence is recorded, never thrown;
//! only a non-finite state aborts a run early.

use nalgebra::{DVector, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::alloc::differential::{
    allocate_jerk, augment_wrench_to_jerk, build_hover_objective, ArmRateTracker, WeightMatrix,
};
use crate::alloc::geometric::GeometricAllocator;
use crate::alloc::normalized::{
    allocate_normalized, build_normalization, denormalize, rates_to_setpoints, saturate,
};
use crate::error::{Error, Result};
use crate::limits::{widen_degenerate, ActuatorLimits};
use crate::platform::{
    allocation_jacobian, build_allocation_matrix, step_actuators_limited, wrench_from_state,
    ActuatorDynamicsModel, PlatformGeometry,
};
use crate::power::{
    default_stop_accel, solve_limit_curves, CurveAnchors, LimitCurveSet, MotorPowerParams,
};
use crate::sim::controller::PoseController;
use crate::sim::metrics::{RunMetrics, ScrewTrace, TickRecord};
use crate::sim::rigid_body::{step_rigid_body, Integrator, RigidBodyState};
use crate::sim::trajectory::{Reference, TrajectorySpec};
use crate::types::{rpm_to_rad_s, wrap_angle, ActuatorRates, ActuatorState, Wrench};

/// The compared allocation methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationMethod {
    /// Minimum-norm wrench inversion with trigonometric extraction.
    Geometric,
    /// Differential allocation fed by acceleration-derived wrench feedback.
    DifferentialIdealAccel,
    /// Differential allocation with wrench-error jerk augmentation.
    Differential,
    /// Limit-normalized allocation with the hover-speed nullspace objective.
    NormalizedStatic,
    /// Limit-normalized allocation with no secondary objective.
    NormalizedNoObjective,
    /// Limit-normalized allocation with power-curve acceleration limits.
    PowerCurves,
}

impl AllocationMethod {
    pub const ALL: [AllocationMethod; 6] = [
        AllocationMethod::Geometric,
        AllocationMethod::DifferentialIdealAccel,
        AllocationMethod::Differential,
        AllocationMethod::NormalizedStatic,
        AllocationMethod::NormalizedNoObjective,
        AllocationMethod::PowerCurves,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            AllocationMethod::Geometric => "ageom",
            AllocationMethod::DifferentialIdealAccel => "adiffold",
            AllocationMethod::Differential => "adiff",
            AllocationMethod::NormalizedStatic => "asecond",
            AllocationMethod::NormalizedNoObjective => "anosecond",
            AllocationMethod::PowerCurves => "apower",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|m| m.label() == name)
            .copied()
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method '{name}' (expected one of ageom, adiffold, adiff, asecond, anosecond, apower)"
                ))
            })
    }
}

/// Loop timing, integration and success threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub dt_sim: f64,
    pub dt_control: f64,
    /// Position error bound defining a successful run (m).
    pub fail_threshold: f64,
    pub integrator: Integrator,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt_sim: 1e-3,
            dt_control: 5e-3,
            fail_threshold: 1.0,
            integrator: Integrator::SemiImplicitEuler,
        }
    }
}

/// Allocation-side tuning shared by the differential methods.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocParams {
    /// Wrench-error to jerk gain (1/s).
    pub jerk_gain: f64,
    /// Secondary-objective target rotor speed (rad/s).
    pub target_speed: f64,
    /// Secondary-objective gain (1/s).
    pub hover_objective_gain: f64,
    /// Weighted-pseudoinverse weights for the plain differential methods.
    pub weights: WeightMatrix,
    pub damping: f64,
    /// Gaussian noise on the acceleration-derived wrench feedback
    /// (force N, torque N*m), used by `adiffold` only.
    pub accel_feedback_noise: (f64, f64),
}

/// Everything a run needs besides the method and trajectory.
#[derive(Debug, Clone)]
pub struct ScenarioSetup {
    pub geometry: PlatformGeometry,
    pub limits: ActuatorLimits,
    pub dynamics: ActuatorDynamicsModel,
    pub power: MotorPowerParams,
    pub curves: LimitCurveSet,
    /// (position, attitude) closed-loop time constants (s).
    pub controller_tau: (f64, f64),
    pub alloc: AllocParams,
    pub sim: SimParams,
    /// Initial rotor speeds (rad/s); hover speed everywhere when `None`.
    pub initial_rotor_speeds: Option<Vec<f64>>,
    /// Initial tilt angles (rad); level when `None`.
    pub initial_tilt_angles: Option<Vec<f64>>,
}

impl ScenarioSetup {
    /// Stock hexacopter setup used by the benchmark defaults.
    pub fn stock() -> Self {
        let geometry = PlatformGeometry::default_hexacopter_quadratic();
        let n = geometry.arm_count;
        let tilt_rate_max = 3.4;
        let rotor_accel_max = rpm_to_rad_s(13_000.0);
        let speed_bounds = (0.0, rpm_to_rad_s(8700.0));
        let limits = ActuatorLimits::symmetric(n, tilt_rate_max, rotor_accel_max, speed_bounds)
            .expect("stock limits are valid");
        let dynamics =
            ActuatorDynamicsModel::uniform(n, 30.0, 50.0).expect("stock gains are valid");
        let power = MotorPowerParams {
            efficiency: 0.8,
            voltage: 23.0,
            current_min: -17.0,
            current_max: 17.0,
            rotor_inertia: 4.5e-4,
            drag_coefficient: 3.5e-7,
            accel_caps: (-rotor_accel_max, rotor_accel_max),
        };
        let curves = solve_limit_curves(&CurveAnchors::default()).expect("stock anchors solve");
        let weights = WeightMatrix::rate_scaled(n, tilt_rate_max, rotor_accel_max)
            .expect("stock weights are valid");
        Self {
            geometry,
            limits,
            dynamics,
            power,
            curves,
            controller_tau: (1.0, 0.5),
            alloc: AllocParams {
                jerk_gain: 20.0,
                target_speed: rpm_to_rad_s(5800.0),
                hover_objective_gain: 2.0,
                weights,
                damping: crate::alloc::differential::DEFAULT_DAMPING,
                accel_feedback_noise: (0.0, 0.0),
            },
            sim: SimParams::default(),
            initial_rotor_speeds: None,
            initial_tilt_angles: None,
        }
    }

    /// Start state with the arms fanned outward in alternating directions
    /// and rotor speeds raised so the vertical thrust still carries the
    /// weight: a pure internal-force posture. Methods with no speed
    /// regulation hold it; the power curves unwind it.
    pub fn with_fanned_start(mut self, fan_angle: f64) -> Self {
        let n = self.geometry.arm_count;
        let hover = self.geometry.hover_speed();
        let coord = self.geometry.thrust_model.coord(hover) / fan_angle.cos();
        let speed = self.geometry.thrust_model.speed_from_coord(coord);
        self.initial_tilt_angles = Some(
            (0..n)
                .map(|i| if i % 2 == 0 { fan_angle } else { -fan_angle })
                .collect(),
        );
        self.initial_rotor_speeds = Some(vec![speed; n]);
        self
    }
}

/// Propeller-stop scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScrewParams {
    /// Rotor/arm to stop and work with.
    pub rotor_index: usize,
    /// Hover time before the stop is commanded (s).
    pub hover_lead: f64,
    /// Override maximum acceleration (rad/s^2, negative).
    pub stop_accel: f64,
    /// Rotor speed below which the interaction may begin (rad/s).
    pub stop_threshold: f64,
    /// Give up waiting for the stop after this long (s).
    pub stop_timeout: f64,
    /// Commanded arm-rate profile: (segment duration s, rate rad/s).
    pub profile: Vec<(f64, f64)>,
    /// Stiction-like friction on the worked arm, as an equivalent rate
    /// deadband (rad/s).
    pub friction_rate: f64,
    /// Hover time after the curves are restored (s).
    pub release_hold: f64,
    /// Integral gain of the arm-rate tracker (1/s).
    pub integral_gain: f64,
    /// Anti-windup bound (rad).
    pub integral_limit: f64,
}

impl Default for ScrewParams {
    fn default() -> Self {
        Self {
            rotor_index: 0,
            hover_lead: 3.0,
            stop_accel: default_stop_accel(),
            stop_threshold: rpm_to_rad_s(50.0),
            stop_timeout: 15.0,
            profile: vec![(4.0, 0.6), (3.0, -1.0), (2.0, 0.6)],
            friction_rate: 0.4,
            release_hold: 18.0,
            integral_gain: 2.0,
            integral_limit: 2.0,
        }
    }
}

/// Per-tick allocation outcome.
struct AllocationOutcome {
    q_cmd: ActuatorState,
    accel_limits: Vec<(f64, f64)>,
    rate_saturated: bool,
    feasible: bool,
}

/// State threaded through the loop for acceleration-derived feedback.
struct AccelTracker {
    last_velocity: Vector3<f64>,
    last_angular_velocity: Vector3<f64>,
    lin_acc: Vector3<f64>,
    ang_acc: Vector3<f64>,
}

impl AccelTracker {
    fn new(body: &RigidBodyState) -> Self {
        Self {
            last_velocity: body.velocity,
            last_angular_velocity: body.angular_velocity,
            lin_acc: Vector3::zeros(),
            ang_acc: Vector3::zeros(),
        }
    }

    fn update(&mut self, body: &RigidBodyState, dt: f64) {
        self.lin_acc = (body.velocity - self.last_velocity) / dt;
        self.ang_acc = (body.angular_velocity - self.last_angular_velocity) / dt;
        self.last_velocity = body.velocity;
        self.last_angular_velocity = body.angular_velocity;
    }

    /// Wrench implied by the measured accelerations (inverse dynamics).
    fn wrench_estimate(
        &self,
        geom: &PlatformGeometry,
        body: &RigidBodyState,
        noise: (f64, f64),
        rng: &mut ChaCha8Rng,
    ) -> Wrench {
        let gravity = Vector3::new(0.0, 0.0, -geom.gravity);
        let mut force = body.orientation.inverse() * (geom.mass * (self.lin_acc - gravity));
        let coriolis = body
            .angular_velocity
            .cross(&(geom.inertia * body.angular_velocity));
        let mut torque = geom.inertia * self.ang_acc + coriolis;
        if noise.0 > 0.0 || noise.1 > 0.0 {
            for k in 0..3 {
                let nf: f64 = rng.sample(StandardNormal);
                let nt: f64 = rng.sample(StandardNormal);
                force[k] += noise.0 * nf;
                torque[k] += noise.1 * nt;
            }
        }
        Wrench::new(force, torque)
    }
}

struct ControlContext<'a> {
    setup: &'a ScenarioSetup,
    a_matrix: nalgebra::DMatrix<f64>,
    geo_alloc: Option<GeometricAllocator>,
    /// Per-rotor curve sets (swapped for overrides by the screw scenario).
    rotor_curves: Vec<LimitCurveSet>,
    arm_tracker: Option<ArmRateTracker>,
    /// Integrated setpoint state of the plain differential methods, which
    /// accumulate rate commands instead of inverting the actuator dynamics.
    integrated_cmd: Option<ActuatorState>,
    rng: ChaCha8Rng,
}

impl<'a> ControlContext<'a> {
    fn new(setup: &'a ScenarioSetup, method: AllocationMethod, seed: u64) -> Result<Self> {
        let a_matrix = build_allocation_matrix(&setup.geometry)?;
        let geo_alloc = if method == AllocationMethod::Geometric {
            Some(GeometricAllocator::new(
                &setup.geometry,
                setup.limits.rotor_speed.1,
            )?)
        } else {
            None
        };
        Ok(Self {
            setup,
            a_matrix,
            geo_alloc,
            rotor_curves: vec![setup.curves.clone(); setup.geometry.arm_count],
            arm_tracker: None,
            integrated_cmd: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Evaluate the active acceleration limits for the method.
    fn current_limits(&self, method: AllocationMethod, q: &ActuatorState) -> ActuatorLimits {
        let mut limits = self.setup.limits.clone();
        if method == AllocationMethod::PowerCurves {
            for i in 0..q.arm_count() {
                let bounds = self.rotor_curves[i].eval_limits(q.rotor_speeds[i]);
                limits.rotor_accel[i] = widen_degenerate(bounds, 1e-6);
            }
        }
        limits
    }

    fn allocate(
        &mut self,
        method: AllocationMethod,
        q: &ActuatorState,
        w_desired: &Wrench,
        accel: &AccelTracker,
        body: &RigidBodyState,
        arm_rate_feedback: f64,
    ) -> AllocationOutcome {
        let setup = self.setup;
        let n = q.arm_count();
        let speed_bounds = setup.limits.rotor_speed;
        let limits = self.current_limits(method, q);
        let accel_limits = limits.rotor_accel.clone();

        if method == AllocationMethod::Geometric {
            let sol = self
                .geo_alloc
                .as_ref()
                .expect("built for ageom")
                .allocate(w_desired);
            // commanded arm angle takes the shortest path from the current one
            let mut tilt = DVector::zeros(n);
            for i in 0..n {
                let delta = wrap_angle(sol.tilt_angles[i] - q.tilt_angles[i]);
                tilt[i] = q.tilt_angles[i] + delta;
            }
            let mut speeds = sol.rotor_speeds.clone();
            for w in speeds.iter_mut() {
                *w = w.clamp(speed_bounds.0, speed_bounds.1);
            }
            return AllocationOutcome {
                q_cmd: ActuatorState::new(tilt, speeds),
                accel_limits,
                rate_saturated: false,
                feasible: sol.feasible,
            };
        }

        let j = allocation_jacobian(&setup.geometry, &self.a_matrix, q);
        let w_current = if method == AllocationMethod::DifferentialIdealAccel {
            accel.wrench_estimate(
                &setup.geometry,
                body,
                setup.alloc.accel_feedback_noise,
                &mut self.rng,
            )
        } else {
            wrench_from_state(&setup.geometry, &self.a_matrix, q)
        };
        let jerk = augment_wrench_to_jerk(setup.alloc.jerk_gain, w_desired, &w_current);

        if matches!(
            method,
            AllocationMethod::Differential | AllocationMethod::DifferentialIdealAccel
        ) {
            // the plain differential methods integrate their rate commands
            // into setpoints; only the normalized family inverts the
            // first-order dynamics
            let qdot_star = build_hover_objective(
                q,
                setup.alloc.target_speed,
                setup.alloc.hover_objective_gain,
            );
            let qdot = allocate_jerk(
                &j,
                &jerk,
                &setup.alloc.weights,
                &qdot_star,
                setup.alloc.damping,
            );
            let (clipped, rate_saturated) = limits.clip_rates(&qdot);
            let rates = ActuatorRates::from_joint_vector(&clipped);
            let prev = self.integrated_cmd.get_or_insert_with(|| q.clone()).clone();
            let dt = setup.sim.dt_control;
            let n_arms = q.arm_count();
            let mut tilt = prev.tilt_angles.clone();
            let mut speeds = prev.rotor_speeds.clone();
            for i in 0..n_arms {
                tilt[i] += dt * rates.tilt_rates[i];
                speeds[i] =
                    (speeds[i] + dt * rates.rotor_accels[i]).clamp(speed_bounds.0, speed_bounds.1);
            }
            let q_cmd = ActuatorState::new(tilt, speeds);
            self.integrated_cmd = Some(q_cmd.clone());
            return AllocationOutcome {
                q_cmd,
                accel_limits,
                rate_saturated,
                feasible: true,
            };
        }

        // normalized family: solve in [-1, 1] coordinates, saturate by
        // uniform scaling, invert the actuator dynamics into setpoints
        let map = build_normalization(&limits).expect("validated limits always normalize");
        let qdot_star_real = match method {
            AllocationMethod::NormalizedStatic => build_hover_objective(
                q,
                setup.alloc.target_speed,
                setup.alloc.hover_objective_gain,
            ),
            AllocationMethod::PowerCurves => match self.arm_tracker.as_mut() {
                Some(tracker) => tracker.update(n, arm_rate_feedback, setup.sim.dt_control),
                None => DVector::zeros(2 * n),
            },
            _ => DVector::zeros(2 * n),
        };
        let qdot_bar_star = map.scale_preference(&qdot_star_real);
        let qdot_bar = allocate_normalized(&j, &map, &jerk, &qdot_bar_star, setup.alloc.damping);
        let (sat, k_s) = saturate(&qdot_bar);
        let rates = denormalize(&map, &sat);
        let q_cmd = rates_to_setpoints(&setup.dynamics, q, &rates, speed_bounds);
        AllocationOutcome {
            q_cmd,
            accel_limits,
            rate_saturated: k_s < 1.0,
            feasible: true,
        }
    }
}

fn initial_actuators(setup: &ScenarioSetup) -> ActuatorState {
    let n = setup.geometry.arm_count;
    let speeds = match &setup.initial_rotor_speeds {
        Some(speeds) => {
            assert_eq!(speeds.len(), n, "initial_rotor_speeds length mismatch");
            DVector::from_iterator(
                n,
                speeds
                    .iter()
                    .map(|&w| w.clamp(setup.limits.rotor_speed.0, setup.limits.rotor_speed.1)),
            )
        }
        None => DVector::from_element(n, setup.geometry.hover_speed()),
    };
    let tilts = match &setup.initial_tilt_angles {
        Some(tilts) => {
            assert_eq!(tilts.len(), n, "initial_tilt_angles length mismatch");
            DVector::from_vec(tilts.clone())
        }
        None => DVector::zeros(n),
    };
    ActuatorState::new(tilts, speeds)
}

fn attitude_error_angle(state: &RigidBodyState, reference: &Reference) -> f64 {
    state.orientation.angle_to(&reference.orientation)
}

fn record_tick(
    setup: &ScenarioSetup,
    t: f64,
    reference: &Reference,
    body: &RigidBodyState,
    q: &ActuatorState,
    outcome: &AllocationOutcome,
    prev_speeds: &DVector<f64>,
    speed_saturated: bool,
) -> TickRecord {
    let n = q.arm_count();
    let dt = setup.sim.dt_control;
    let rel = body.orientation.inverse() * reference.orientation;
    let omega_ref_body = rel * reference.angular_velocity;
    let rotor_power: Vec<f64> = (0..n)
        .map(|i| {
            let accel = (q.rotor_speeds[i] - prev_speeds[i]) / dt;
            setup.power.mechanical_power(q.rotor_speeds[i], accel)
        })
        .collect();
    let quat = |q: &nalgebra::UnitQuaternion<f64>| [q.w, q.i, q.j, q.k];
    TickRecord {
        t,
        ref_position: reference.position.into(),
        ref_quaternion: quat(&reference.orientation),
        position: body.position.into(),
        quaternion: quat(&body.orientation),
        velocity: body.velocity.into(),
        angular_velocity: body.angular_velocity.into(),
        pos_err: (reference.position - body.position).norm(),
        att_err: attitude_error_angle(body, reference),
        lin_vel_err: (reference.velocity - body.velocity).norm(),
        ang_vel_err: (omega_ref_body - body.angular_velocity).norm(),
        tilt_angles: q.tilt_angles.iter().copied().collect(),
        rotor_speeds: q.rotor_speeds.iter().copied().collect(),
        cmd_tilt_angles: outcome.q_cmd.tilt_angles.iter().copied().collect(),
        cmd_rotor_speeds: outcome.q_cmd.rotor_speeds.iter().copied().collect(),
        accel_limit_min: outcome.accel_limits.iter().map(|b| b.0).collect(),
        accel_limit_max: outcome.accel_limits.iter().map(|b| b.1).collect(),
        rotor_power,
        rate_saturated: outcome.rate_saturated,
        speed_saturated,
        feasible: outcome.feasible,
    }
}

/// Run one method on one trajectory.
pub fn run_scenario(
    setup: &ScenarioSetup,
    method: AllocationMethod,
    trajectory: &TrajectorySpec,
    seed: u64,
) -> Result<RunMetrics> {
    trajectory.validate()?;
    let mut ctx = ControlContext::new(setup, method, seed)?;
    let mut metrics = RunMetrics {
        method: method.label().to_string(),
        trajectory: trajectory.label(),
        seed,
        dt_control: setup.sim.dt_control,
        records: Vec::new(),
        success: true,
        first_violation_t: None,
        abort_reason: None,
        screw: None,
    };
    let mut body = RigidBodyState::at_rest();
    let mut q = initial_actuators(setup);
    let mut accel = AccelTracker::new(&body);
    let mut prev_speeds = q.rotor_speeds.clone();

    let steps_per_tick = (setup.sim.dt_control / setup.sim.dt_sim).round().max(1.0) as usize;
    let total_ticks = (trajectory.duration() / setup.sim.dt_control).ceil() as usize;
    let speed_cap = setup.limits.rotor_speed.1;
    let controller = setup.controller_gains();
    let plant_rate_bounds = setup.limits.rate_bounds();

    for tick in 0..total_ticks {
        let t = tick as f64 * setup.sim.dt_control;
        let reference = trajectory.sample(t);
        let w_desired = controller.wrench(&body, &reference);
        let outcome = ctx.allocate(method, &q, &w_desired, &accel, &body, 0.0);

        let speed_saturated = q
            .rotor_speeds
            .iter()
            .any(|&w| w >= speed_cap * (1.0 - 1e-9));
        metrics.records.push(record_tick(
            setup,
            t,
            &reference,
            &body,
            &q,
            &outcome,
            &prev_speeds,
            speed_saturated,
        ));
        prev_speeds = q.rotor_speeds.clone();

        let pos_err = metrics.records.last().unwrap().pos_err;
        if pos_err > setup.sim.fail_threshold && metrics.first_violation_t.is_none() {
            metrics.success = false;
            metrics.first_violation_t = Some(t);
        }

        for _ in 0..steps_per_tick {
            q = step_actuators_limited(
                &setup.dynamics,
                &q,
                &outcome.q_cmd,
                setup.sim.dt_sim,
                setup.limits.rotor_speed,
                &plant_rate_bounds,
            );
            let w = wrench_from_state(&setup.geometry, &ctx.a_matrix, &q);
            body = step_rigid_body(
                &setup.geometry,
                &body,
                &w,
                setup.sim.dt_sim,
                setup.sim.integrator,
            );
            accel.update(&body, setup.sim.dt_sim);
        }

        if !body.is_finite() || !q.is_finite() {
            metrics.success = false;
            metrics.abort_reason = Some(format!("non-finite state at t = {:.3} s", t));
            if metrics.first_violation_t.is_none() {
                metrics.first_violation_t = Some(t);
            }
            break;
        }
    }
    Ok(metrics)
}

impl ScenarioSetup {
    fn controller_gains(&self) -> PoseController {
        PoseController::from_time_constants(
            &self.geometry,
            self.controller_tau.0,
            self.controller_tau.1,
        )
    }
}

/// Propeller-stop phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScrewPhase {
    Hover,
    Stopping,
    Interacting,
    Released,
}

impl ScrewPhase {
    fn code(&self) -> u8 {
        match self {
            ScrewPhase::Hover => 0,
            ScrewPhase::Stopping => 1,
            ScrewPhase::Interacting => 2,
            ScrewPhase::Released => 3,
        }
    }
}

fn stiction(free_rate: f64, friction: f64) -> f64 {
    if free_rate.abs() <= friction {
        0.0
    } else {
        free_rate - friction * free_rate.signum()
    }
}

/// Stop one propeller in flight, work its arm against friction through the
/// nullspace, then release and let the curves restore hover speed. Always
/// runs the power-curve method.
pub fn run_screw_scenario(
    setup: &ScenarioSetup,
    screw: &ScrewParams,
    seed: u64,
) -> Result<RunMetrics> {
    let n = setup.geometry.arm_count;
    if screw.rotor_index >= n {
        return Err(Error::Config(format!(
            "rotor_index {} out of range for {n} arms",
            screw.rotor_index
        )));
    }
    let method = AllocationMethod::PowerCurves;
    let mut ctx = ControlContext::new(setup, method, seed)?;
    let k = screw.rotor_index;

    let profile_total: f64 = screw.profile.iter().map(|(d, _)| d).sum();
    let duration_cap =
        screw.hover_lead + screw.stop_timeout + profile_total + screw.release_hold + 5.0;

    let mut metrics = RunMetrics {
        method: method.label().to_string(),
        trajectory: "screw".to_string(),
        seed,
        dt_control: setup.sim.dt_control,
        records: Vec::new(),
        success: true,
        first_violation_t: None,
        abort_reason: None,
        screw: Some(ScrewTrace {
            rotor_index: k,
            ..Default::default()
        }),
    };

    let mut body = RigidBodyState::at_rest();
    let mut q = initial_actuators(setup);
    let mut accel = AccelTracker::new(&body);
    let mut prev_speeds = q.rotor_speeds.clone();
    let mut prev_arm_angle = q.tilt_angles[k];

    let steps_per_tick = (setup.sim.dt_control / setup.sim.dt_sim).round().max(1.0) as usize;
    let total_ticks = (duration_cap / setup.sim.dt_control).ceil() as usize;
    let controller = setup.controller_gains();
    let reference = Reference::hover();
    let speed_cap = setup.limits.rotor_speed.1;
    let plant_rate_bounds = setup.limits.rate_bounds();

    let mut phase = ScrewPhase::Hover;
    let mut phase_start = 0.0;
    let mut segment_index = 0usize;
    let mut segment_start = 0.0;

    for tick in 0..total_ticks {
        let t = tick as f64 * setup.sim.dt_control;
        let arm_rate_measured = (q.tilt_angles[k] - prev_arm_angle) / setup.sim.dt_control;
        prev_arm_angle = q.tilt_angles[k];

        // phase transitions
        match phase {
            ScrewPhase::Hover => {
                if t >= screw.hover_lead {
                    ctx.rotor_curves[k] = setup.curves.override_for_stop(screw.stop_accel);
                    phase = ScrewPhase::Stopping;
                    phase_start = t;
                }
            }
            ScrewPhase::Stopping => {
                if q.rotor_speeds[k] < screw.stop_threshold {
                    let mut tracker =
                        ArmRateTracker::new(k, screw.integral_gain, screw.integral_limit);
                    tracker.reset();
                    tracker.rate_target = screw.profile.first().map(|&(_, r)| r).unwrap_or(0.0);
                    ctx.arm_tracker = Some(tracker);
                    phase = ScrewPhase::Interacting;
                    phase_start = t;
                    segment_index = 0;
                    segment_start = t;
                } else if t - phase_start > screw.stop_timeout {
                    metrics.success = false;
                    metrics.abort_reason =
                        Some("rotor failed to stop within the timeout".to_string());
                    break;
                }
            }
            ScrewPhase::Interacting => {
                let seg_duration = screw.profile[segment_index].0;
                if t - segment_start >= seg_duration {
                    segment_index += 1;
                    segment_start = t;
                    if segment_index >= screw.profile.len() {
                        ctx.arm_tracker = None;
                        ctx.rotor_curves[k] = setup.curves.release_override();
                        phase = ScrewPhase::Released;
                        phase_start = t;
                    } else if let Some(tracker) = ctx.arm_tracker.as_mut() {
                        tracker.rate_target = screw.profile[segment_index].1;
                    }
                }
            }
            ScrewPhase::Released => {
                if t - phase_start >= screw.release_hold {
                    break;
                }
            }
        }
        let _ = phase_start;

        let w_desired = controller.wrench(&body, &reference);
        let outcome = ctx.allocate(method, &q, &w_desired, &accel, &body, arm_rate_measured);

        let speed_saturated = q
            .rotor_speeds
            .iter()
            .any(|&w| w >= speed_cap * (1.0 - 1e-9));
        metrics.records.push(record_tick(
            setup,
            t,
            &reference,
            &body,
            &q,
            &outcome,
            &prev_speeds,
            speed_saturated,
        ));
        prev_speeds = q.rotor_speeds.clone();
        {
            let trace = metrics.screw.as_mut().unwrap();
            trace.phase.push(phase.code());
            trace
                .arm_rate_target
                .push(match (&phase, ctx.arm_tracker.as_ref()) {
                    (ScrewPhase::Interacting, Some(tracker)) => tracker.rate_target,
                    _ => 0.0,
                });
            trace.arm_rate_measured.push(arm_rate_measured);
        }

        let pos_err = metrics.records.last().unwrap().pos_err;
        if pos_err > setup.sim.fail_threshold && metrics.first_violation_t.is_none() {
            metrics.success = false;
            metrics.first_violation_t = Some(t);
        }

        let interacting = phase == ScrewPhase::Interacting;
        for _ in 0..steps_per_tick {
            let mut next = step_actuators_limited(
                &setup.dynamics,
                &q,
                &outcome.q_cmd,
                setup.sim.dt_sim,
                setup.limits.rotor_speed,
                &plant_rate_bounds,
            );
            if interacting {
                // the worked arm fights stiction: explicit integration with a
                // rate deadband instead of the clean exponential update
                let free_rate = (setup.dynamics.tilt_gains[k]
                    * (outcome.q_cmd.tilt_angles[k] - q.tilt_angles[k]))
                    .clamp(plant_rate_bounds[k].0, plant_rate_bounds[k].1);
                let actual = stiction(free_rate, screw.friction_rate);
                next.tilt_angles[k] = q.tilt_angles[k] + setup.sim.dt_sim * actual;
            }
            q = next;
            let w = wrench_from_state(&setup.geometry, &ctx.a_matrix, &q);
            body = step_rigid_body(
                &setup.geometry,
                &body,
                &w,
                setup.sim.dt_sim,
                setup.sim.integrator,
            );
            accel.update(&body, setup.sim.dt_sim);
        }

        if !body.is_finite() || !q.is_finite() {
            metrics.success = false;
            metrics.abort_reason = Some(format!("non-finite state at t = {:.3} s", t));
            break;
        }
    }
    Ok(metrics)
}
