//! Geometric allocation: minimum-norm inversion of the constant matrix `A`.
//!
//! The desired wrench is mapped to `u = A^+ w` (Moore-Penrose, minimum
//! Euclidean norm) and tilt angles / rotor speeds are extracted per pair:
//! `alpha_i = atan2(u_{2i}, u_{2i+1})`, coordinate `s_i = sqrt(u_{2i}^2 +
//! u_{2i+1}^2)`. The method has no notion of actuator dynamics or limits;
//! infeasible demands are flagged, never raised, so a closed-loop run can
//! keep stepping and exhibit the resulting divergence.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::platform::{build_allocation_matrix, PlatformGeometry, ThrustModel};
use crate::types::Wrench;

/// Result of a geometric allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricSolution {
    pub u: DVector<f64>,
    pub tilt_angles: DVector<f64>,
    pub rotor_speeds: DVector<f64>,
    /// False when extraction produced NaN, a rotor speed exceeds the limit,
    /// or the reconstructed wrench misses the request.
    pub feasible: bool,
}

/// Precomputed pseudoinverse of the allocation matrix.
#[derive(Debug, Clone)]
pub struct GeometricAllocator {
    matrix: DMatrix<f64>,
    pinv: DMatrix<f64>,
    thrust_model: ThrustModel,
    max_rotor_speed: f64,
}

impl GeometricAllocator {
    pub fn new(geom: &PlatformGeometry, max_rotor_speed: f64) -> Result<Self> {
        let a = build_allocation_matrix(geom)?;
        let svd = a.clone().svd(true, true);
        if svd.rank(1e-9) < 6 {
            return Err(Error::Config(
                "allocation matrix is rank deficient; check arm layout and coefficients".into(),
            ));
        }
        let pinv = svd
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Singular(e.to_string()))?;
        Ok(Self {
            matrix: a,
            pinv,
            thrust_model: geom.thrust_model,
            max_rotor_speed,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Minimum-norm allocation of `w_desired` with trigonometric extraction.
    pub fn allocate(&self, w_desired: &Wrench) -> GeometricSolution {
        let w = DVector::from_column_slice(w_desired.to_vector().as_slice());
        let u = &self.pinv * &w;
        let (tilt_angles, rotor_speeds) = extract_angles_speeds(&u, self.thrust_model);

        let residual = (&self.matrix * &u - &w).norm();
        let mut feasible = residual <= 1e-6 * (1.0 + w.norm());
        if rotor_speeds
            .iter()
            .any(|&s| !s.is_finite() || s > self.max_rotor_speed)
            || tilt_angles.iter().any(|a| !a.is_finite())
        {
            feasible = false;
        }
        GeometricSolution {
            u,
            tilt_angles,
            rotor_speeds,
            feasible,
        }
    }
}

/// Per-pair extraction of tilt angles and rotor speeds from `u`.
/// The undefined `atan2(0, 0)` corner maps to angle 0.
pub fn extract_angles_speeds(u: &DVector<f64>, model: ThrustModel) -> (DVector<f64>, DVector<f64>) {
    let n = u.len() / 2;
    let mut angles = DVector::zeros(n);
    let mut speeds = DVector::zeros(n);
    for i in 0..n {
        let lat = u[2 * i];
        let vert = u[2 * i + 1];
        let s = (lat * lat + vert * vert).sqrt();
        angles[i] = if s == 0.0 { 0.0 } else { lat.atan2(vert) };
        speeds[i] = model.speed_from_coord(s);
    }
    (angles, speeds)
}
