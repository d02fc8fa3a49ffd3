//! Platform description and actuation geometry.
//!
//! A tilt-rotor platform has `N` arms at azimuths `theta_i` in the body x-y
//! plane. Each arm carries a rotor whose thrust axis is the body z axis
//! rotated about the radial arm axis `r_i = [cos theta_i, sin theta_i, 0]` by
//! the tilt angle `alpha_i`. Writing the per-arm thrust coordinate as
//! `s_i = omega_i` (or `omega_i^2` for the quadratic thrust model), the pair
//!
//! ```text
//! u_{2i}   = s_i sin(alpha_i)    (lateral component)
//! u_{2i+1} = s_i cos(alpha_i)    (vertical component)
//! ```
//!
//! makes the total body wrench exactly linear in `u`:  `w = A u` with a
//! constant 6x2N matrix `A` determined by the geometry alone.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::types::{ActuatorState, Wrench};

/// Relationship between rotor speed and the thrust coordinate `s`.
///
/// `Linear` takes thrust proportional to speed (`s = omega`), which keeps the
/// actuation algebra in speed units; `Quadratic` uses the aerodynamic
/// `s = omega^2` with speeds recovered by square root at extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThrustModel {
    #[default]
    Linear,
    Quadratic,
}

impl ThrustModel {
    /// Thrust coordinate `s(omega)`.
    pub fn coord(&self, omega: f64) -> f64 {
        match self {
            ThrustModel::Linear => omega,
            ThrustModel::Quadratic => omega * omega,
        }
    }

    /// `ds/domega`.
    pub fn coord_deriv(&self, omega: f64) -> f64 {
        match self {
            ThrustModel::Linear => 1.0,
            ThrustModel::Quadratic => 2.0 * omega,
        }
    }

    /// Rotor speed recovered from a nonnegative thrust coordinate.
    pub fn speed_from_coord(&self, s: f64) -> f64 {
        match self {
            ThrustModel::Linear => s,
            ThrustModel::Quadratic => s.max(0.0).sqrt(),
        }
    }
}

/// Mass, inertia and rotor layout of the platform.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformGeometry {
    pub arm_count: usize,
    /// Arm length from body origin to rotor hub (m).
    pub arm_length: f64,
    /// Arm azimuths in the body x-y plane (rad).
    pub arm_azimuths: Vec<f64>,
    /// Propeller spin directions, +-1.
    pub spin_directions: Vec<f64>,
    /// Thrust per unit thrust-coordinate (N per rad/s for the linear model).
    pub thrust_coefficient: f64,
    /// Drag torque per unit thrust-coordinate (N*m per rad/s, linear model).
    pub drag_torque_coefficient: f64,
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub gravity: f64,
    pub thrust_model: ThrustModel,
}

impl PlatformGeometry {
    /// Symmetric co-planar layout with evenly spaced arms and alternating
    /// spin directions. `thrust_coefficient` is chosen so the platform hovers
    /// with all rotors at `hover_speed` (rad/s).
    pub fn symmetric(
        arm_count: usize,
        arm_length: f64,
        mass: f64,
        inertia_diag: Vector3<f64>,
        hover_speed: f64,
        drag_torque_ratio: f64,
        thrust_model: ThrustModel,
    ) -> Result<Self> {
        let n = arm_count;
        let azimuths = (0..n)
            .map(|i| i as f64 * std::f64::consts::TAU / n as f64)
            .collect();
        let spins = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let gravity = 9.81;
        let k_f = mass * gravity / (n as f64 * thrust_model.coord(hover_speed));
        let geom = Self {
            arm_count: n,
            arm_length,
            arm_azimuths: azimuths,
            spin_directions: spins,
            thrust_coefficient: k_f,
            drag_torque_coefficient: drag_torque_ratio * k_f,
            mass,
            inertia: Matrix3::from_diagonal(&inertia_diag),
            gravity,
            thrust_model,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Stock hexacopter with the literal thrust-proportional-to-speed
    /// convention: 4 kg, 0.3 m arms, hover at 5800 RPM.
    pub fn default_hexacopter() -> Self {
        Self::symmetric(
            6,
            0.3,
            4.0,
            Vector3::new(0.08, 0.08, 0.14),
            crate::types::rpm_to_rad_s(5800.0),
            0.015,
            ThrustModel::Linear,
        )
        .expect("default geometry is valid")
    }

    /// Stock hexacopter with aerodynamic (quadratic) thrust. The benchmark
    /// platform uses this: per-rotor thrust headroom grows with the square of
    /// the speed ratio, which is what makes sustained 90-degree attitudes
    /// reachable inside the 8700 RPM envelope.
    pub fn default_hexacopter_quadratic() -> Self {
        Self::symmetric(
            6,
            0.3,
            4.0,
            Vector3::new(0.08, 0.08, 0.14),
            crate::types::rpm_to_rad_s(5800.0),
            0.015,
            ThrustModel::Quadratic,
        )
        .expect("default geometry is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.arm_count < 3 {
            return Err(Error::Config(format!(
                "arm_count must be >= 3, got {}",
                self.arm_count
            )));
        }
        if self.arm_azimuths.len() != self.arm_count || self.spin_directions.len() != self.arm_count
        {
            return Err(Error::Config(
                "arm_azimuths and spin_directions must have arm_count entries".into(),
            ));
        }
        if self.spin_directions.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::Config("spin_directions entries must be +-1".into()));
        }
        if !(self.thrust_coefficient > 0.0) {
            return Err(Error::Config("thrust_coefficient must be positive".into()));
        }
        if self.drag_torque_coefficient < 0.0 {
            return Err(Error::Config(
                "drag_torque_coefficient must be nonnegative".into(),
            ));
        }
        if !(self.mass > 0.0) {
            return Err(Error::Config("mass must be positive".into()));
        }
        if !(self.arm_length > 0.0) {
            return Err(Error::Config("arm_length must be positive".into()));
        }
        // symmetric positive definite inertia
        let sym_err = (self.inertia - self.inertia.transpose()).norm();
        if sym_err > 1e-9 * (1.0 + self.inertia.norm()) {
            return Err(Error::Config("inertia must be symmetric".into()));
        }
        if self
            .inertia
            .symmetric_eigenvalues()
            .iter()
            .any(|&l| l <= 0.0)
        {
            return Err(Error::Config("inertia must be positive definite".into()));
        }
        Ok(())
    }

    /// Radial arm axis `r_i` (unit, in-plane).
    pub fn arm_axis(&self, i: usize) -> Vector3<f64> {
        let th = self.arm_azimuths[i];
        Vector3::new(th.cos(), th.sin(), 0.0)
    }

    /// Rotor hub position `p_i = L r_i`.
    pub fn arm_position(&self, i: usize) -> Vector3<f64> {
        self.arm_length * self.arm_axis(i)
    }

    /// Rotor speed at which `N` level rotors carry the platform weight.
    pub fn hover_speed(&self) -> f64 {
        let s = self.mass * self.gravity / (self.arm_count as f64 * self.thrust_coefficient);
        self.thrust_model.speed_from_coord(s)
    }
}

/// Constant allocation matrix `A` (6 x 2N) mapping the actuation vector `u`
/// to the body wrench `[f; tau]`.
///
/// Column `2i` carries the wrench per unit lateral coordinate: force
/// `k_f (r_i x e_z)`, torque `p_i x` that force plus the spin-signed drag
/// term `sigma_i k_d (r_i x e_z)`. Column `2i+1` carries the vertical
/// coordinate: force `k_f e_z`, torque `p_i x` that force plus
/// `sigma_i k_d e_z`.
pub fn build_allocation_matrix(geom: &PlatformGeometry) -> Result<DMatrix<f64>> {
    geom.validate()?;
    let n = geom.arm_count;
    let e_z = Vector3::z();
    let k_f = geom.thrust_coefficient;
    let k_d = geom.drag_torque_coefficient;
    let mut a = DMatrix::zeros(6, 2 * n);
    for i in 0..n {
        let r = geom.arm_axis(i);
        let p = geom.arm_position(i);
        let sigma = geom.spin_directions[i];
        let lat = r.cross(&e_z);

        let f_lat = k_f * lat;
        let t_lat = p.cross(&f_lat) + sigma * k_d * lat;
        let f_vert = k_f * e_z;
        let t_vert = p.cross(&f_vert) + sigma * k_d * e_z;

        for k in 0..3 {
            a[(k, 2 * i)] = f_lat[k];
            a[(k + 3, 2 * i)] = t_lat[k];
            a[(k, 2 * i + 1)] = f_vert[k];
            a[(k + 3, 2 * i + 1)] = t_vert[k];
        }
    }
    Ok(a)
}

/// Geometric actuation vector `u(q)` with pairs
/// `(s_i sin alpha_i, s_i cos alpha_i)`.
pub fn actuation_vector(geom: &PlatformGeometry, q: &ActuatorState) -> DVector<f64> {
    let n = q.arm_count();
    let mut u = DVector::zeros(2 * n);
    for i in 0..n {
        let s = geom.thrust_model.coord(q.rotor_speeds[i]);
        let (sin_a, cos_a) = q.tilt_angles[i].sin_cos();
        u[2 * i] = s * sin_a;
        u[2 * i + 1] = s * cos_a;
    }
    u
}

/// Jacobian `D = du/dq` (2N x 2N), block-sparse with one 2x2 block per arm.
///
/// With `q = [alpha; omega]`: `du_{2i}/dalpha_i = s_i cos alpha_i`,
/// `du_{2i}/domega_i = s'_i sin alpha_i`, `du_{2i+1}/dalpha_i = -s_i sin
/// alpha_i`, `du_{2i+1}/domega_i = s'_i cos alpha_i`.
pub fn actuation_jacobian(geom: &PlatformGeometry, q: &ActuatorState) -> DMatrix<f64> {
    let n = q.arm_count();
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let s = geom.thrust_model.coord(q.rotor_speeds[i]);
        let ds = geom.thrust_model.coord_deriv(q.rotor_speeds[i]);
        let (sin_a, cos_a) = q.tilt_angles[i].sin_cos();
        d[(2 * i, i)] = s * cos_a;
        d[(2 * i, n + i)] = ds * sin_a;
        d[(2 * i + 1, i)] = -s * sin_a;
        d[(2 * i + 1, n + i)] = ds * cos_a;
    }
    d
}

/// Body wrench produced by the current actuator state: `w(q) = A u(q)`.
pub fn wrench_from_state(geom: &PlatformGeometry, a: &DMatrix<f64>, q: &ActuatorState) -> Wrench {
    let w = a * actuation_vector(geom, q);
    Wrench::new(
        Vector3::new(w[0], w[1], w[2]),
        Vector3::new(w[3], w[4], w[5]),
    )
}

/// Allocation Jacobian `J(q) = A D(q)` (6 x 2N) mapping joint rates to the
/// wrench derivative.
pub fn allocation_jacobian(
    geom: &PlatformGeometry,
    a: &DMatrix<f64>,
    q: &ActuatorState,
) -> DMatrix<f64> {
    a * actuation_jacobian(geom, q)
}

/// First-order actuator model `qdot = -K (q - q_cmd)` with one positive gain
/// per channel, tilt gains first.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorDynamicsModel {
    pub tilt_gains: DVector<f64>,
    pub rotor_gains: DVector<f64>,
}

impl ActuatorDynamicsModel {
    pub fn uniform(arm_count: usize, tilt_gain: f64, rotor_gain: f64) -> Result<Self> {
        let model = Self {
            tilt_gains: DVector::from_element(arm_count, tilt_gain),
            rotor_gains: DVector::from_element(arm_count, rotor_gain),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .tilt_gains
            .iter()
            .chain(self.rotor_gains.iter())
            .any(|&k| !(k > 0.0))
        {
            return Err(Error::Config(
                "actuator gains must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Advance the actuators toward `q_cmd` over `dt`, using the exact
/// per-channel exponential update `q <- q_cmd + (q - q_cmd) e^{-k dt}`.
/// Rotor speeds are clamped into `speed_bounds` afterwards.
pub fn step_actuators(
    model: &ActuatorDynamicsModel,
    q: &ActuatorState,
    q_cmd: &ActuatorState,
    dt: f64,
    speed_bounds: (f64, f64),
) -> ActuatorState {
    debug_assert!(dt > 0.0);
    let n = q.arm_count();
    let mut tilt = DVector::zeros(n);
    let mut speed = DVector::zeros(n);
    for i in 0..n {
        let decay = (-model.tilt_gains[i] * dt).exp();
        tilt[i] = q_cmd.tilt_angles[i] + (q.tilt_angles[i] - q_cmd.tilt_angles[i]) * decay;
        let decay = (-model.rotor_gains[i] * dt).exp();
        let w = q_cmd.rotor_speeds[i] + (q.rotor_speeds[i] - q_cmd.rotor_speeds[i]) * decay;
        speed[i] = w.clamp(speed_bounds.0, speed_bounds.1);
    }
    ActuatorState::new(tilt, speed)
}

/// Like [`step_actuators`], but the per-channel step is additionally capped
/// by the physical rate bounds (`rate_bounds` in joint order, tilt rates then
/// rotor accelerations). A servo cannot slew faster than its rate limit no
/// matter how far the setpoint jumps; within the limits the update is the
/// exact exponential.
pub fn step_actuators_limited(
    model: &ActuatorDynamicsModel,
    q: &ActuatorState,
    q_cmd: &ActuatorState,
    dt: f64,
    speed_bounds: (f64, f64),
    rate_bounds: &[(f64, f64)],
) -> ActuatorState {
    debug_assert!(dt > 0.0);
    let n = q.arm_count();
    debug_assert_eq!(rate_bounds.len(), 2 * n);
    let mut tilt = DVector::zeros(n);
    let mut speed = DVector::zeros(n);
    for i in 0..n {
        let decay = (-model.tilt_gains[i] * dt).exp();
        let step = (q_cmd.tilt_angles[i] - q.tilt_angles[i]) * (1.0 - decay);
        let (lo, hi) = rate_bounds[i];
        tilt[i] = q.tilt_angles[i] + step.clamp(lo * dt, hi * dt);

        let decay = (-model.rotor_gains[i] * dt).exp();
        let step = (q_cmd.rotor_speeds[i] - q.rotor_speeds[i]) * (1.0 - decay);
        let (lo, hi) = rate_bounds[n + i];
        let w = q.rotor_speeds[i] + step.clamp(lo * dt, hi * dt);
        speed[i] = w.clamp(speed_bounds.0, speed_bounds.1);
    }
    ActuatorState::new(tilt, speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::rpm_to_rad_s;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng, n: usize) -> ActuatorState {
        ActuatorState::new(
            DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
            DVector::from_fn(n, |_, _| rng.gen_range(0.0..900.0)),
        )
    }

    /// Independent per-arm oracle: rotate the thrust axis explicitly with
    /// Rodrigues' formula and sum forces/torques arm by arm.
    fn wrench_oracle(geom: &PlatformGeometry, q: &ActuatorState) -> Wrench {
        let e_z = Vector3::z();
        let mut force = Vector3::zeros();
        let mut torque = Vector3::zeros();
        for i in 0..geom.arm_count {
            let axis = geom.arm_axis(i);
            let alpha = q.tilt_angles[i];
            // Rodrigues rotation of e_z about the in-plane axis (axis.e_z = 0)
            let dir = e_z * alpha.cos() + axis.cross(&e_z) * alpha.sin();
            let s = geom.thrust_model.coord(q.rotor_speeds[i]);
            let f = geom.thrust_coefficient * s * dir;
            force += f;
            torque += geom.arm_position(i).cross(&f)
                + geom.spin_directions[i] * geom.drag_torque_coefficient * s * dir;
        }
        Wrench::new(force, torque)
    }

    #[test]
    fn default_hexa_matrix_full_rank() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let rank = a.svd(false, false).rank(1e-9);
        assert_eq!(rank, 6);
    }

    #[test]
    fn rejects_too_few_arms() {
        let mut geom = PlatformGeometry::default_hexacopter();
        geom.arm_count = 2;
        geom.arm_azimuths.truncate(2);
        geom.spin_directions.truncate(2);
        assert!(build_allocation_matrix(&geom).is_err());
    }

    #[test]
    fn vertical_columns_push_along_z() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        for i in 0..geom.arm_count {
            assert_relative_eq!(a[(0, 2 * i + 1)], 0.0, epsilon = 1e-15);
            assert_relative_eq!(a[(1, 2 * i + 1)], 0.0, epsilon = 1e-15);
            assert_relative_eq!(a[(2, 2 * i + 1)], geom.thrust_coefficient, epsilon = 1e-15);
        }
    }

    #[test]
    fn vertical_columns_sum_to_pure_lift_without_drag() {
        let mut geom = PlatformGeometry::default_hexacopter();
        geom.drag_torque_coefficient = 0.0;
        let a = build_allocation_matrix(&geom).unwrap();
        let mut sum = nalgebra::Vector6::<f64>::zeros();
        for i in 0..geom.arm_count {
            sum += a.column(2 * i + 1);
        }
        assert_relative_eq!(sum[2], 6.0 * geom.thrust_coefficient, epsilon = 1e-12);
        for k in [0, 1, 3, 4, 5] {
            assert_relative_eq!(sum[k], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn actuation_vector_pairs() {
        let geom = PlatformGeometry::default_hexacopter();
        let n = geom.arm_count;
        let q = ActuatorState::uniform_speed(n, 7.0);
        let u = actuation_vector(&geom, &q);
        for i in 0..n {
            assert_relative_eq!(u[2 * i], 0.0);
            assert_relative_eq!(u[2 * i + 1], 7.0);
        }

        let q = ActuatorState::new(
            DVector::from_element(n, std::f64::consts::FRAC_PI_2),
            DVector::from_element(n, 7.0),
        );
        let u = actuation_vector(&geom, &q);
        for i in 0..n {
            assert_relative_eq!(u[2 * i], 7.0, epsilon = 1e-12);
            assert_relative_eq!(u[2 * i + 1], 0.0, epsilon = 1e-12);
        }

        // 3-4-5 triangle
        let q = ActuatorState::new(
            DVector::from_element(n, 0.6435011087932844),
            DVector::from_element(n, 5.0),
        );
        let u = actuation_vector(&geom, &q);
        assert_relative_eq!(u[0], 3.0, epsilon = 1e-9);
        assert_relative_eq!(u[1], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_speed_zero_wrench() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let q = ActuatorState::zeros(geom.arm_count);
        let w = wrench_from_state(&geom, &a, &q);
        assert_relative_eq!(w.norm(), 0.0);
    }

    #[test]
    fn hover_state_carries_weight() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let q = ActuatorState::uniform_speed(geom.arm_count, geom.hover_speed());
        let w = wrench_from_state(&geom, &a, &q);
        assert_relative_eq!(w.force.z, geom.mass * geom.gravity, epsilon = 1e-9);
        assert_relative_eq!(w.force.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(w.force.y, 0.0, epsilon = 1e-9);
        assert_relative_eq!(w.torque.norm(), 0.0, epsilon = 1e-9);
        // hover speed matches the 5800 RPM design point
        assert_relative_eq!(geom.hover_speed(), rpm_to_rad_s(5800.0), epsilon = 1e-9);
    }

    #[test]
    fn wrench_matches_per_arm_oracle() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let q = random_state(&mut rng, geom.arm_count);
            let w = wrench_from_state(&geom, &a, &q);
            let w_ref = wrench_oracle(&geom, &q);
            assert_relative_eq!(w.force, w_ref.force, epsilon = 1e-9);
            assert_relative_eq!(w.torque, w_ref.torque, epsilon = 1e-9);
        }
    }

    #[test]
    fn wrench_linear_in_u() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = random_state(&mut rng, geom.arm_count);
        // scaling all speeds scales u (linear model), so w must scale too
        let mut q2 = q.clone();
        q2.rotor_speeds *= 3.0;
        let w1 = wrench_from_state(&geom, &a, &q).to_vector();
        let w2 = wrench_from_state(&geom, &a, &q2).to_vector();
        assert_relative_eq!(w2, 3.0 * w1, epsilon = 1e-9);
    }

    #[test]
    fn jacobian_identity_block_at_unit_speed() {
        let geom = PlatformGeometry::default_hexacopter();
        let n = geom.arm_count;
        let q = ActuatorState::uniform_speed(n, 1.0);
        let d = actuation_jacobian(&geom, &q);
        for i in 0..n {
            assert_relative_eq!(d[(2 * i, i)], 1.0);
            assert_relative_eq!(d[(2 * i, n + i)], 0.0);
            assert_relative_eq!(d[(2 * i + 1, i)], 0.0);
            assert_relative_eq!(d[(2 * i + 1, n + i)], 1.0);
        }
    }

    #[test]
    fn jacobian_tilt_columns_vanish_at_zero_speed() {
        let geom = PlatformGeometry::default_hexacopter();
        let n = geom.arm_count;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut q = random_state(&mut rng, n);
        q.rotor_speeds.fill(0.0);
        let d = actuation_jacobian(&geom, &q);
        for i in 0..n {
            assert_eq!(d.column(i).norm(), 0.0);
        }
        let a = build_allocation_matrix(&geom).unwrap();
        let j = allocation_jacobian(&geom, &a, &q);
        for i in 0..n {
            assert_eq!(j.column(i).norm(), 0.0);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let geom = PlatformGeometry::default_hexacopter();
        let n = geom.arm_count;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = 1e-6;
        for _ in 0..100 {
            let q = random_state(&mut rng, n);
            let d = actuation_jacobian(&geom, &q);
            let qv = q.to_joint_vector();
            for col in 0..2 * n {
                let mut plus = qv.clone();
                let mut minus = qv.clone();
                plus[col] += h;
                minus[col] -= h;
                let up = actuation_vector(&geom, &ActuatorState::from_joint_vector(&plus));
                let um = actuation_vector(&geom, &ActuatorState::from_joint_vector(&minus));
                let fd = (up - um) / (2.0 * h);
                for row in 0..2 * n {
                    let denom = 1.0 + fd[row].abs();
                    assert!(
                        (d[(row, col)] - fd[row]).abs() / denom < 1e-6,
                        "D[{row},{col}] = {} vs fd {}",
                        d[(row, col)],
                        fd[row]
                    );
                }
            }
        }
    }

    #[test]
    fn allocation_jacobian_full_rank_at_hover() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let q = ActuatorState::uniform_speed(geom.arm_count, geom.hover_speed());
        let j = allocation_jacobian(&geom, &a, &q);
        assert_eq!(j.svd(false, false).rank(1e-9), 6);
    }

    #[test]
    fn allocation_jacobian_matches_wrench_derivative() {
        let geom = PlatformGeometry::default_hexacopter();
        let a = build_allocation_matrix(&geom).unwrap();
        let n = geom.arm_count;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..20 {
            let q = random_state(&mut rng, n);
            let j = allocation_jacobian(&geom, &a, &q);
            let rate = DVector::from_fn(2 * n, |_, _| rng.gen_range(-1.0..1.0));
            let qv = q.to_joint_vector();
            let wp = wrench_from_state(
                &geom,
                &a,
                &ActuatorState::from_joint_vector(&(&qv + h * &rate)),
            )
            .to_vector();
            let wm = wrench_from_state(
                &geom,
                &a,
                &ActuatorState::from_joint_vector(&(&qv - h * &rate)),
            )
            .to_vector();
            let fd = (wp - wm) / (2.0 * h);
            let jq = j * &rate;
            for k in 0..6 {
                assert!((jq[k] - fd[k]).abs() / (1.0 + fd[k].abs()) < 1e-6);
            }
        }
    }

    #[test]
    fn step_actuators_fixed_point_and_exponential() {
        let model = ActuatorDynamicsModel::uniform(1, 10.0, 10.0).unwrap();
        let q = ActuatorState::zeros(1);
        let q_cmd = ActuatorState::new(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.0]));
        // q == q_cmd stays put
        let same = step_actuators(&model, &q_cmd, &q_cmd, 0.5, (0.0, 10.0));
        assert_eq!(same, q_cmd);
        // k = 10, dt = 0.1 gives 1 - e^{-1}
        let stepped = step_actuators(&model, &q, &q_cmd, 0.1, (0.0, 10.0));
        let expected = 1.0 - (-1.0f64).exp();
        assert_relative_eq!(stepped.tilt_angles[0], expected, epsilon = 1e-12);
        assert_relative_eq!(stepped.rotor_speeds[0], expected, epsilon = 1e-12);
        // dt -> infinity converges to the command
        let settled = step_actuators(&model, &q, &q_cmd, 1e6, (0.0, 10.0));
        assert_relative_eq!(settled.tilt_angles[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn step_actuators_is_a_contraction() {
        let model = ActuatorDynamicsModel::uniform(3, 7.0, 22.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let q = random_state(&mut rng, 3);
            let q_cmd = random_state(&mut rng, 3);
            let dt = rng.gen_range(1e-4..2.0);
            let next = step_actuators(&model, &q, &q_cmd, dt, (0.0, 1e6));
            let before = (q.to_joint_vector() - q_cmd.to_joint_vector()).norm();
            let after = (next.to_joint_vector() - q_cmd.to_joint_vector()).norm();
            assert!(after <= before + 1e-12);
        }
    }

    #[test]
    fn step_actuators_clamps_speed() {
        let model = ActuatorDynamicsModel::uniform(1, 10.0, 10.0).unwrap();
        let q = ActuatorState::new(DVector::zeros(1), DVector::from_vec(vec![5.0]));
        let q_cmd = ActuatorState::new(DVector::zeros(1), DVector::from_vec(vec![100.0]));
        let stepped = step_actuators(&model, &q, &q_cmd, 10.0, (0.0, 8.0));
        assert_eq!(stepped.rotor_speeds[0], 8.0);
    }

    #[test]
    fn quadratic_model_round_trip() {
        let m = ThrustModel::Quadratic;
        assert_relative_eq!(m.speed_from_coord(m.coord(7.0)), 7.0, epsilon = 1e-12);
        assert_relative_eq!(m.coord_deriv(3.0), 6.0);
    }
}
