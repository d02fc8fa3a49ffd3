//! Shared domain types: wrenches, jerk commands and actuator state vectors.
//!
//! Rotor speeds are radians per second everywhere inside the library; RPM
//! appears only at the config/CLI/output boundary.

use nalgebra::{DVector, Vector3, Vector6};

/// rad/s per RPM.
pub const RAD_S_PER_RPM: f64 = std::f64::consts::TAU / 60.0;

pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * RAD_S_PER_RPM
}

pub fn rad_s_to_rpm(rad_s: f64) -> f64 {
    rad_s / RAD_S_PER_RPM
}

/// Body-frame force and torque, stacked as `[f; tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            force: Vector3::new(v[0], v[1], v[2]),
            torque: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

/// Time derivative of a wrench command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JerkCommand {
    pub dforce: Vector3<f64>,
    pub dtorque: Vector3<f64>,
}

impl JerkCommand {
    pub fn zero() -> Self {
        Self {
            dforce: Vector3::zeros(),
            dtorque: Vector3::zeros(),
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            dforce: Vector3::new(v[0], v[1], v[2]),
            dtorque: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.dforce.x,
            self.dforce.y,
            self.dforce.z,
            self.dtorque.x,
            self.dtorque.y,
            self.dtorque.z,
        )
    }
}

/// Joint state `q = [alpha; omega]`: tilt angles (rad, unwrapped — arms may
/// rotate indefinitely) followed by rotor speeds (rad/s, never negative).
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorState {
    pub tilt_angles: DVector<f64>,
    pub rotor_speeds: DVector<f64>,
}

impl ActuatorState {
    pub fn new(tilt_angles: DVector<f64>, rotor_speeds: DVector<f64>) -> Self {
        assert_eq!(tilt_angles.len(), rotor_speeds.len());
        Self {
            tilt_angles,
            rotor_speeds,
        }
    }

    pub fn zeros(arm_count: usize) -> Self {
        Self {
            tilt_angles: DVector::zeros(arm_count),
            rotor_speeds: DVector::zeros(arm_count),
        }
    }

    /// Level attitude with every rotor at `speed`.
    pub fn uniform_speed(arm_count: usize, speed: f64) -> Self {
        Self {
            tilt_angles: DVector::zeros(arm_count),
            rotor_speeds: DVector::from_element(arm_count, speed),
        }
    }

    pub fn arm_count(&self) -> usize {
        self.tilt_angles.len()
    }

    /// Stacked `[alpha; omega]`, matching the Jacobian column ordering.
    pub fn to_joint_vector(&self) -> DVector<f64> {
        let n = self.arm_count();
        let mut q = DVector::zeros(2 * n);
        q.rows_mut(0, n).copy_from(&self.tilt_angles);
        q.rows_mut(n, n).copy_from(&self.rotor_speeds);
        q
    }

    pub fn from_joint_vector(q: &DVector<f64>) -> Self {
        let n = q.len() / 2;
        assert_eq!(q.len(), 2 * n);
        Self {
            tilt_angles: q.rows(0, n).into_owned(),
            rotor_speeds: q.rows(n, n).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tilt_angles.iter().all(|x| x.is_finite())
            && self.rotor_speeds.iter().all(|x| x.is_finite())
    }
}

/// Actuator rates `qdot = [alpha_dot; omega_dot]`: tilt angular velocities
/// (rad/s) and rotor accelerations (rad/s^2).
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorRates {
    pub tilt_rates: DVector<f64>,
    pub rotor_accels: DVector<f64>,
}

impl ActuatorRates {
    pub fn zeros(arm_count: usize) -> Self {
        Self {
            tilt_rates: DVector::zeros(arm_count),
            rotor_accels: DVector::zeros(arm_count),
        }
    }

    pub fn arm_count(&self) -> usize {
        self.tilt_rates.len()
    }

    pub fn to_joint_vector(&self) -> DVector<f64> {
        let n = self.arm_count();
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).copy_from(&self.tilt_rates);
        v.rows_mut(n, n).copy_from(&self.rotor_accels);
        v
    }

    pub fn from_joint_vector(v: &DVector<f64>) -> Self {
        let n = v.len() / 2;
        assert_eq!(v.len(), 2 * n);
        Self {
            tilt_rates: v.rows(0, n).into_owned(),
            rotor_accels: v.rows(n, n).into_owned(),
        }
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w -= std::f64::consts::TAU;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rpm_round_trip() {
        assert_relative_eq!(rad_s_to_rpm(rpm_to_rad_s(5800.0)), 5800.0, epsilon = 1e-12);
        assert_relative_eq!(rpm_to_rad_s(60.0), std::f64::consts::TAU, epsilon = 1e-12);
    }

    #[test]
    fn joint_vector_round_trip() {
        let q = ActuatorState::new(
            DVector::from_vec(vec![0.1, -0.2, 0.3]),
            DVector::from_vec(vec![10.0, 20.0, 30.0]),
        );
        let v = q.to_joint_vector();
        assert_eq!(v[0], 0.1);
        assert_eq!(v[3], 10.0);
        assert_eq!(ActuatorState::from_joint_vector(&v), q);
    }

    #[test]
    fn wrap_angle_range() {
        assert_relative_eq!(wrap_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_relative_eq!(wrap_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert_relative_eq!(wrap_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI);
        assert_relative_eq!(
            wrap_angle(0.1 + 4.0 * std::f64::consts::PI),
            0.1,
            epsilon = 1e-12
        );
    }
}
