//! Fixed-step 6-DOF rigid-body integration.
//!
//! Newton-Euler dynamics with the wrench expressed in the body frame:
//! `m a = R f + m g_vec` and `I omegadot = tau - omega x I omega`.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::platform::PlatformGeometry;
use crate::types::Wrench;

/// Pose and twist of the platform. Position/velocity are world frame,
/// angular velocity is body frame; the quaternion rotates body into world.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidBodyState {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl RigidBodyState {
    pub fn at_rest() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.angular_velocity.iter().all(|x| x.is_finite())
            && self.orientation.coords.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    SemiImplicitEuler,
    RungeKutta4,
}

fn accelerations(
    geom: &PlatformGeometry,
    orientation: &UnitQuaternion<f64>,
    angular_velocity: &Vector3<f64>,
    wrench: &Wrench,
) -> (Vector3<f64>, Vector3<f64>) {
    let gravity = Vector3::new(0.0, 0.0, -geom.gravity);
    let linear = orientation * wrench.force / geom.mass + gravity;
    let coriolis = angular_velocity.cross(&(geom.inertia * angular_velocity));
    let angular = geom
        .inertia
        .try_inverse()
        .expect("inertia is positive definite")
        * (wrench.torque - coriolis);
    (linear, angular)
}

fn quaternion_derivative(q: &UnitQuaternion<f64>, omega_body: &Vector3<f64>) -> Quaternion<f64> {
    q.into_inner() * Quaternion::from_imag(*omega_body) * 0.5
}

/// Advance the state by `dt` under a constant body-frame wrench.
pub fn step_rigid_body(
    geom: &PlatformGeometry,
    state: &RigidBodyState,
    wrench: &Wrench,
    dt: f64,
    integrator: Integrator,
) -> RigidBodyState {
    debug_assert!(dt > 0.0);
    match integrator {
        Integrator::SemiImplicitEuler => {
            let (lin_acc, ang_acc) =
                accelerations(geom, &state.orientation, &state.angular_velocity, wrench);
            let velocity = state.velocity + dt * lin_acc;
            let angular_velocity = state.angular_velocity + dt * ang_acc;
            let position = state.position + dt * velocity;
            let orientation =
                state.orientation * UnitQuaternion::from_scaled_axis(dt * angular_velocity);
            RigidBodyState {
                position,
                orientation,
                velocity,
                angular_velocity,
            }
        }
        Integrator::RungeKutta4 => rk4_step(geom, state, wrench, dt),
    }
}

struct Derivative {
    dp: Vector3<f64>,
    dq: Quaternion<f64>,
    dv: Vector3<f64>,
    dw: Vector3<f64>,
}

fn derivative(
    geom: &PlatformGeometry,
    s: &(Vector3<f64>, Quaternion<f64>, Vector3<f64>, Vector3<f64>),
    wrench: &Wrench,
) -> Derivative {
    let q = UnitQuaternion::from_quaternion(s.1);
    let (dv, dw) = accelerations(geom, &q, &s.3, wrench);
    Derivative {
        dp: s.2,
        dq: quaternion_derivative(&q, &s.3),
        dv,
        dw,
    }
}

fn rk4_step(
    geom: &PlatformGeometry,
    state: &RigidBodyState,
    wrench: &Wrench,
    dt: f64,
) -> RigidBodyState {
    let y0 = (
        state.position,
        state.orientation.into_inner(),
        state.velocity,
        state.angular_velocity,
    );
    let advance = |y: &(Vector3<f64>, Quaternion<f64>, Vector3<f64>, Vector3<f64>),
                   d: &Derivative,
                   h: f64| {
        (
            y.0 + h * d.dp,
            y.1 + h * d.dq,
            y.2 + h * d.dv,
            y.3 + h * d.dw,
        )
    };
    let k1 = derivative(geom, &y0, wrench);
    let k2 = derivative(geom, &advance(&y0, &k1, 0.5 * dt), wrench);
    let k3 = derivative(geom, &advance(&y0, &k2, 0.5 * dt), wrench);
    let k4 = derivative(geom, &advance(&y0, &k3, dt), wrench);
    let sixth = dt / 6.0;
    let position = y0.0 + sixth * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    let quat = y0.1 + sixth * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    let velocity = y0.2 + sixth * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    let angular_velocity = y0.3 + sixth * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
    RigidBodyState {
        position,
        orientation: UnitQuaternion::from_quaternion(quat),
        velocity,
        angular_velocity,
    }
}
