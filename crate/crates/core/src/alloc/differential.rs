//! Differential allocation: solving `J(q) qdot = wdot` at the rate level.
//!
//! The redundancy of the 2N-channel platform against the 6-dimensional
//! wrench-derivative task is resolved with a weighted pseudoinverse
//!
//! ```text
//! J' = W^{-1} J^T (J W^{-1} J^T + eps I)^{-1}
//! qdot = J' wdot + (I - J' J) qdot*
//! ```
//!
//! where `qdot*` is a secondary rate preference projected into the task
//! nullspace. A wrench-based controller is adapted to the jerk interface by
//! `wdot = k_j (w_desired - w(q))`, which needs actuator state feedback but
//! no acceleration measurements.

use nalgebra::{DMatrix, DVector, Matrix6};

use crate::error::{Error, Result};
use crate::types::{ActuatorState, JerkCommand, Wrench};

/// Relative damping applied to the 6x6 inner matrix, scaled by its mean
/// eigenvalue (`trace/6`). Keeps the inversion conditioned through rank drops
/// while staying far below the 1e-8 reconstruction tolerances used in tests.
pub const DEFAULT_DAMPING: f64 = 1e-11;

/// Strictly positive diagonal weights on the 2N actuator-rate channels.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    diag: DVector<f64>,
}

impl WeightMatrix {
    pub fn new(diag: DVector<f64>) -> Result<Self> {
        if diag.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("weights must be strictly positive".into()));
        }
        Ok(Self { diag })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            diag: DVector::from_element(dim, 1.0),
        }
    }

    /// Identity on the N tilt-rate channels, `(tilt_rate_max /
    /// rotor_accel_max)^2` on the N rotor channels: rate-limit-derived
    /// balancing of the wildly different channel scales.
    pub fn rate_scaled(arm_count: usize, tilt_rate_max: f64, rotor_accel_max: f64) -> Result<Self> {
        if !(tilt_rate_max > 0.0) || !(rotor_accel_max > 0.0) {
            return Err(Error::Config("rate limits must be positive".into()));
        }
        let ratio = (tilt_rate_max / rotor_accel_max).powi(2);
        let mut diag = DVector::from_element(2 * arm_count, 1.0);
        for i in arm_count..2 * arm_count {
            diag[i] = ratio;
        }
        Self::new(diag)
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diag
    }
}

/// Damped weighted right pseudoinverse `J' = W^{-1} J^T (J W^{-1} J^T + eps I)^{-1}`
/// with `eps = damping * trace(J W^{-1} J^T) / 6`.
pub fn weighted_pseudoinverse(j: &DMatrix<f64>, w: &WeightMatrix, damping: f64) -> DMatrix<f64> {
    debug_assert_eq!(j.nrows(), 6);
    debug_assert_eq!(j.ncols(), w.diag.len());
    let mut winv_jt = j.transpose();
    for (row, &wi) in winv_jt.row_iter_mut().zip(w.diag.iter()) {
        let mut row = row;
        row /= wi;
    }
    let mut inner = Matrix6::zeros();
    inner.copy_from(&(j * &winv_jt));
    let eps = damping * inner.trace() / 6.0;
    for k in 0..6 {
        inner[(k, k)] += eps;
    }
    let inner_inv = inner
        .try_inverse()
        .expect("damped 6x6 inner matrix is invertible");
    winv_jt * DMatrix::from_iterator(6, 6, inner_inv.iter().copied())
}

/// Rate solution achieving the requested jerk, with `qdot_star` projected
/// into the nullspace of `J`.
pub fn allocate_jerk(
    j: &DMatrix<f64>,
    jerk: &JerkCommand,
    w: &WeightMatrix,
    qdot_star: &DVector<f64>,
    damping: f64,
) -> DVector<f64> {
    let j_pinv = weighted_pseudoinverse(j, w, damping);
    let wdot = DVector::from_column_slice(jerk.to_vector().as_slice());
    let primary = &j_pinv * &wdot;
    // nullspace term: qdot* - J'(J qdot*)
    let correction = &j_pinv * (j * qdot_star);
    primary + qdot_star - correction
}

/// Secondary rate preference `qdot*`: zeros on the tilt channels, a
/// proportional pull of every rotor speed toward `target_speed` on the rotor
/// channels.
pub fn build_hover_objective(q: &ActuatorState, target_speed: f64, gain: f64) -> DVector<f64> {
    let n = q.arm_count();
    let mut qdot_star = DVector::zeros(2 * n);
    for i in 0..n {
        qdot_star[n + i] = -gain * (q.rotor_speeds[i] - target_speed);
    }
    qdot_star
}

/// Integral-augmented arm-rate tracking used while a stopped arm works
/// against friction: the commanded channel carries
/// `rate_target + k_I * integral(rate_target - rate_feedback)`.
#[derive(Debug, Clone)]
pub struct ArmRateTracker {
    pub arm_index: usize,
    pub rate_target: f64,
    pub integral_gain: f64,
    /// Anti-windup bound on the accumulated integral (rad).
    pub integral_limit: f64,
    integral: f64,
    last_error: Option<f64>,
}

impl ArmRateTracker {
    pub fn new(arm_index: usize, integral_gain: f64, integral_limit: f64) -> Self {
        Self {
            arm_index,
            rate_target: 0.0,
            integral_gain,
            integral_limit,
            integral: 0.0,
            last_error: None,
        }
    }

    /// Reset the accumulated state (called on activation).
    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.last_error = None;
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// Advance the trapezoidal integral with the measured arm rate and build
    /// the secondary vector: the tracked arm's tilt channel carries the
    /// feedforward-plus-integral command, everything else is zero.
    pub fn update(&mut self, arm_count: usize, rate_feedback: f64, dt: f64) -> DVector<f64> {
        debug_assert!(dt > 0.0);
        let error = self.rate_target - rate_feedback;
        let prev = self.last_error.unwrap_or(error);
        self.integral += 0.5 * dt * (prev + error);
        self.integral = self
            .integral
            .clamp(-self.integral_limit, self.integral_limit);
        self.last_error = Some(error);

        let mut qdot_star = DVector::zeros(2 * arm_count);
        qdot_star[self.arm_index] = self.rate_target + self.integral_gain * self.integral;
        qdot_star
    }
}

/// Jerk command proportional to the wrench error: `wdot = k_j (w_d - w)`.
pub fn augment_wrench_to_jerk(jerk_gain: f64, desired: &Wrench, current: &Wrench) -> JerkCommand {
    JerkCommand {
        dforce: jerk_gain * (desired.force - current.force),
        dtorque: jerk_gain * (desired.torque - current.torque),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_jacobian(rng: &mut impl Rng, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(6, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_weights(rng: &mut impl Rng, dim: usize) -> WeightMatrix {
        WeightMatrix::new(DVector::from_fn(dim, |_, _| rng.gen_range(0.2..5.0))).unwrap()
    }

    #[test]
    fn reduces_to_moore_penrose_for_identity_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let j = random_jacobian(&mut rng, 12);
        let w = WeightMatrix::identity(12);
        let ours = weighted_pseudoinverse(&j, &w, 0.0);
        let mp = j.clone().svd(true, true).pseudo_inverse(1e-12).unwrap();
        assert_relative_eq!(ours, mp, epsilon = 1e-8);
    }

    #[test]
    fn block_identity_case() {
        let mut j = DMatrix::zeros(6, 12);
        for k in 0..6 {
            j[(k, k)] = 1.0;
        }
        let p = weighted_pseudoinverse(&j, &WeightMatrix::identity(12), 0.0);
        for r in 0..12 {
            for c in 0..6 {
                let expected = if r == c { 1.0 } else { 0.0 };
                assert_relative_eq!(p[(r, c)], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn right_inverse_and_nullspace_annihilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let j = random_jacobian(&mut rng, 12);
            let w = random_weights(&mut rng, 12);
            let p = weighted_pseudoinverse(&j, &w, DEFAULT_DAMPING);
            let jj = &j * &p;
            let eye = DMatrix::<f64>::identity(6, 6);
            assert!((jj - &eye).norm() < 1e-8);
            let proj = DMatrix::<f64>::identity(12, 12) - &p * &j;
            assert!((&j * proj).norm() < 1e-8);
        }
    }

    #[test]
    fn weight_scaling_leaves_pseudoinverse_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let j = random_jacobian(&mut rng, 12);
        let w = random_weights(&mut rng, 12);
        let scaled = WeightMatrix::new(7.5 * w.diagonal()).unwrap();
        let p1 = weighted_pseudoinverse(&j, &w, DEFAULT_DAMPING);
        let p2 = weighted_pseudoinverse(&j, &scaled, DEFAULT_DAMPING);
        assert_relative_eq!(p1, p2, epsilon = 1e-10);
    }

    #[test]
    fn allocate_jerk_zero_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let j = random_jacobian(&mut rng, 12);
        let qdot = allocate_jerk(
            &j,
            &JerkCommand::zero(),
            &WeightMatrix::identity(12),
            &DVector::zeros(12),
            DEFAULT_DAMPING,
        );
        assert!(qdot.norm() < 1e-12);
    }

    #[test]
    fn allocate_jerk_achieves_task() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let j = random_jacobian(&mut rng, 12);
            let w = random_weights(&mut rng, 12);
            let jerk = JerkCommand {
                dforce: Vector3::new(rng.gen(), rng.gen(), rng.gen()),
                dtorque: Vector3::new(rng.gen(), rng.gen(), rng.gen()),
            };
            let qdot_star = DVector::from_fn(12, |_, _| rng.gen_range(-2.0..2.0));
            let qdot = allocate_jerk(&j, &jerk, &w, &qdot_star, DEFAULT_DAMPING);
            let achieved = &j * qdot;
            let requested = DVector::from_column_slice(jerk.to_vector().as_slice());
            assert!((achieved - requested).norm() < 1e-8);
        }
    }

    #[test]
    fn hover_objective_structure() {
        let q = ActuatorState::new(
            DVector::from_vec(vec![0.5, -0.5, 0.0]),
            DVector::from_vec(vec![10.0, 20.0, 30.0]),
        );
        // all at target: zero vector
        let z = build_hover_objective(&ActuatorState::uniform_speed(3, 20.0), 20.0, 1.5);
        assert_eq!(z.norm(), 0.0);
        // zero gain: zero vector
        let z = build_hover_objective(&q, 20.0, 0.0);
        assert_eq!(z.norm(), 0.0);
        // single offset lands on the matching rotor slot
        let mut q1 = ActuatorState::uniform_speed(3, 20.0);
        q1.rotor_speeds[0] = 23.0;
        let v = build_hover_objective(&q1, 20.0, 1.0);
        assert_relative_eq!(v[3], -3.0);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);
        // tilt slots always zero
        let v = build_hover_objective(&q, 19.0, 2.0);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn arm_tracker_feedforward_and_integral() {
        let mut tracker = ArmRateTracker::new(2, 1.0, 10.0);
        tracker.rate_target = 0.6;
        // perfect tracking: pure feedforward
        let v = tracker.update(6, 0.6, 0.01);
        assert_relative_eq!(v[2], 0.6, epsilon = 1e-12);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);

        // zero integral gain: feedforward regardless of error
        let mut ff = ArmRateTracker::new(0, 0.0, 10.0);
        ff.rate_target = 0.6;
        let v = ff.update(6, 0.0, 0.01);
        assert_relative_eq!(v[0], 0.6, epsilon = 1e-12);

        // constant error e over time T accumulates k_I * e * T
        let mut tr = ArmRateTracker::new(1, 2.0, 10.0);
        tr.rate_target = 0.5;
        let dt = 0.005;
        let steps = 400; // T = 2 s
        let mut last = DVector::zeros(12);
        for _ in 0..steps {
            last = tr.update(6, 0.3, dt);
        }
        let expected = 0.5 + 2.0 * 0.2 * (steps as f64) * dt;
        assert_relative_eq!(last[1], expected, epsilon = 1e-9);
    }

    #[test]
    fn arm_tracker_anti_windup_clamps() {
        let mut tr = ArmRateTracker::new(0, 1.0, 0.05);
        tr.rate_target = 1.0;
        for _ in 0..10000 {
            tr.update(3, 0.0, 0.01);
        }
        assert!(tr.integral() <= 0.05 + 1e-12);
    }

    #[test]
    fn jerk_augmentation() {
        let w_d = Wrench::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros());
        let w = Wrench::zero();
        let j = augment_wrench_to_jerk(5.0, &w_d, &w);
        assert_relative_eq!(j.dforce.x, 5.0);
        assert_eq!(j.dtorque.norm(), 0.0);
        // matching wrench or zero gain: zero jerk
        assert_eq!(
            augment_wrench_to_jerk(5.0, &w_d, &w_d).to_vector().norm(),
            0.0
        );
        assert_eq!(
            augment_wrench_to_jerk(0.0, &w_d, &w).to_vector().norm(),
            0.0
        );
    }

    #[test]
    fn closed_loop_wrench_error_decays() {
        // ideal actuators: apply qdot directly and watch w(q) approach w_d
        use crate::platform::{
            allocation_jacobian, build_allocation_matrix, wrench_from_state, PlatformGeometry,
        };
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let mut q = ActuatorState::uniform_speed(6, geom.hover_speed());
        let w_d = Wrench::new(
            Vector3::new(2.0, -1.0, geom.mass * geom.gravity + 3.0),
            Vector3::new(0.2, 0.1, -0.1),
        );
        let k_j = 20.0;
        let dt = 1e-4;
        let w = WeightMatrix::rate_scaled(6, 3.0, 1361.0).unwrap();
        let mut last_err = f64::INFINITY;
        for step in 0..6000 {
            let current = wrench_from_state(&geom, &a, &q);
            let err = (w_d.to_vector() - current.to_vector()).norm();
            if step % 100 == 0 {
                assert!(err <= last_err + 1e-9, "error must decay monotonically");
                last_err = err;
            }
            let jerk = augment_wrench_to_jerk(k_j, &w_d, &current);
            let j = allocation_jacobian(&geom, &a, &q);
            let qdot = allocate_jerk(&j, &jerk, &w, &DVector::zeros(12), DEFAULT_DAMPING);
            let qv = q.to_joint_vector() + dt * qdot;
            q = ActuatorState::from_joint_vector(&qv);
        }
        // 0.6 s at rate k_j = 20: the error must have shrunk by ~e^{-12}
        let final_err = (w_d.to_vector() - wrench_from_state(&geom, &a, &q).to_vector()).norm();
        assert!(final_err < 1e-3, "final wrench error {final_err}");
    }
}
