//! PD pose controller with gravity feedforward.
//!
//! Produces a body-frame wrench command from pose/twist errors:
//! `f = R^T (K_p e_p + K_d e_v + m g e_z)` and `tau = K_R e_R + K_w e_w`
//! with the vee-map rotation error `e_R = 0.5 (R^T R_ref - R_ref^T R)^v`.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::platform::PlatformGeometry;
use crate::sim::rigid_body::RigidBodyState;
use crate::sim::trajectory::Reference;
use crate::types::Wrench;

#[derive(Debug, Clone, PartialEq)]
pub struct PoseController {
    pub kp: f64,
    pub kd: f64,
    pub kr: Vector3<f64>,
    pub kw: Vector3<f64>,
    mass: f64,
    gravity: f64,
}

impl PoseController {
    /// Critically damped gains from the desired closed-loop time constants:
    /// `K_p = m / tau_p^2`, `K_d = 2 m / tau_p` and per-axis
    /// `K_R = I_ii / tau_a^2`, `K_w = 2 I_ii / tau_a`.
    pub fn from_time_constants(geom: &PlatformGeometry, tau_pos: f64, tau_att: f64) -> Self {
        assert!(tau_pos > 0.0 && tau_att > 0.0);
        let wn_p = 1.0 / tau_pos;
        let wn_a = 1.0 / tau_att;
        let inertia_diag = Vector3::new(
            geom.inertia[(0, 0)],
            geom.inertia[(1, 1)],
            geom.inertia[(2, 2)],
        );
        Self {
            kp: geom.mass * wn_p * wn_p,
            kd: 2.0 * geom.mass * wn_p,
            kr: inertia_diag * wn_a * wn_a,
            kw: 2.0 * inertia_diag * wn_a,
            mass: geom.mass,
            gravity: geom.gravity,
        }
    }

    /// Desired body-frame wrench for the current state and reference.
    pub fn wrench(&self, state: &RigidBodyState, reference: &Reference) -> Wrench {
        let e_p = reference.position - state.position;
        let e_v = reference.velocity - state.velocity;
        let lift = Vector3::new(0.0, 0.0, self.mass * self.gravity);
        let force_world = self.kp * e_p + self.kd * e_v + lift;
        let force = state.orientation.inverse() * force_world;

        let e_r = rotation_error(&state.orientation, &reference.orientation);
        // reference angular velocity mapped into the actual body frame
        let rel = state.orientation.inverse() * reference.orientation;
        let omega_ref_body = rel * reference.angular_velocity;
        let e_w = omega_ref_body - state.angular_velocity;
        let torque = self.kr.component_mul(&e_r) + self.kw.component_mul(&e_w);
        Wrench::new(force, torque)
    }
}

/// Body-frame rotation error `0.5 (R^T R_ref - R_ref^T R)^v`; for small
/// errors this is the rotation vector from the current to the reference
/// attitude.
pub fn rotation_error(
    current: &UnitQuaternion<f64>,
    reference: &UnitQuaternion<f64>,
) -> Vector3<f64> {
    let r = current.to_rotation_matrix();
    let r_ref = reference.to_rotation_matrix();
    let m: Matrix3<f64> =
        r.matrix().transpose() * r_ref.matrix() - r_ref.matrix().transpose() * r.matrix();
    0.5 * Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::trajectory::Reference;
    use approx::assert_relative_eq;

    fn hover_reference() -> Reference {
        Reference {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        }
    }

    #[test]
    fn zero_error_gives_pure_feedforward() {
        let geom = PlatformGeometry::default_hexacopter();
        let c = PoseController::from_time_constants(&geom, 1.0, 0.5);
        let w = c.wrench(&RigidBodyState::at_rest(), &hover_reference());
        assert_relative_eq!(w.force.z, geom.mass * geom.gravity, epsilon = 1e-12);
        assert_relative_eq!(w.force.x, 0.0);
        assert_relative_eq!(w.force.y, 0.0);
        assert_eq!(w.torque.norm(), 0.0);
    }

    #[test]
    fn position_offset_pulls_along_x() {
        let geom = PlatformGeometry::default_hexacopter();
        let c = PoseController::from_time_constants(&geom, 1.0, 0.5);
        let mut reference = hover_reference();
        reference.position.x = 1.0;
        let w = c.wrench(&RigidBodyState::at_rest(), &reference);
        assert!(w.force.x > 0.0);
        assert_relative_eq!(w.force.y, 0.0);
        assert_eq!(w.torque.norm(), 0.0);
    }

    #[test]
    fn rotation_error_matches_small_angle() {
        let current = UnitQuaternion::identity();
        let reference = UnitQuaternion::from_scaled_axis(Vector3::new(0.01, -0.02, 0.005));
        let e = rotation_error(&current, &reference);
        assert_relative_eq!(e, Vector3::new(0.01, -0.02, 0.005), epsilon = 1e-5);
    }

    #[test]
    fn ideal_allocation_step_response() {
        // closing the loop with the wrench applied directly: critically
        // damped second order, settles within 2% by t = 5.9/wn, no
        // steady-state error
        use crate::sim::rigid_body::{step_rigid_body, Integrator};
        let geom = PlatformGeometry::default_hexacopter();
        let c = PoseController::from_time_constants(&geom, 1.0, 0.5);
        let mut reference = hover_reference();
        reference.position.x = 1.0;
        let mut state = RigidBodyState::at_rest();
        let dt = 1e-3;
        let mut t = 0.0;
        let mut settled_at = f64::INFINITY;
        while t < 12.0 {
            let w = c.wrench(&state, &reference);
            state = step_rigid_body(&geom, &state, &w, dt, Integrator::SemiImplicitEuler);
            t += dt;
            let err = (reference.position - state.position).norm();
            if err < 0.02 && settled_at.is_infinite() {
                settled_at = t;
            }
            if err >= 0.02 {
                settled_at = f64::INFINITY;
            }
        }
        // analytic 2% settling for a critically damped unit step: ~5.83/wn
        assert!(settled_at < 6.0, "settled at {settled_at}");
        let final_err = (reference.position - state.position).norm();
        assert!(final_err < 1e-3, "steady-state error {final_err}");
    }
}
