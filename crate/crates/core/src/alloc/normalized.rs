//! Limit-normalized allocation.
//!
//! Instead of hand-tuned weights, each actuator-rate channel is mapped onto
//! `[-1, 1]` by the affine transform built from its rate limits,
//!
//! ```text
//! qdot_bar = N qdot - b,   N_ii = 2/(max_i - min_i),
//!                          b_i  = (max_i + min_i)/(max_i - min_i),
//! ```
//!
//! the allocation is solved in normalized coordinates with a plain (damped)
//! right pseudoinverse of `J_bar = J N^{-1}`, saturated by scaling the whole
//! vector down to infinity-norm 1, and mapped back. The minimum-norm point
//! `qdot_bar = 0` corresponds to every channel sitting at the midpoint of its
//! limits, which is what lets speed-dependent acceleration limits steer rotor
//! speeds without any nullspace objective.

use nalgebra::{DMatrix, DVector};

use crate::alloc::differential::{weighted_pseudoinverse, WeightMatrix};
use crate::error::{Error, Result};
use crate::limits::ActuatorLimits;
use crate::platform::ActuatorDynamicsModel;
use crate::types::{ActuatorRates, ActuatorState, JerkCommand};

/// Diagonal scale and bias sending each channel's `[min, max]` to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationMap {
    pub scale: DVector<f64>,
    pub bias: DVector<f64>,
}

impl NormalizationMap {
    /// Build from per-channel `(min, max)` bounds in joint-vector order.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let dim = bounds.len();
        let mut scale = DVector::zeros(dim);
        let mut bias = DVector::zeros(dim);
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::Config(format!(
                    "channel {i}: rate limit max must exceed min (got [{lo}, {hi}])"
                )));
            }
            scale[i] = 2.0 / (hi - lo);
            bias[i] = (hi + lo) / (hi - lo);
        }
        Ok(Self { scale, bias })
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// `qdot_bar = N qdot - b`.
    pub fn normalize(&self, rates: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.scale[i] * rates[i] - self.bias[i])
    }

    /// `qdot = N^{-1}(qdot_bar + b)`.
    pub fn denormalize(&self, normalized: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            (normalized[i] + self.bias[i]) / self.scale[i]
        })
    }

    /// Scale a rate *preference* into normalized units without the bias
    /// shift: zero entries stay zero, i.e. "no preference" keeps the
    /// channel's natural midpoint drift.
    pub fn scale_preference(&self, rates: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.scale[i] * rates[i])
    }
}

/// Build the normalization map for the current limits (curve-based limits
/// must already be evaluated into `limits.rotor_accel`).
pub fn build_normalization(limits: &ActuatorLimits) -> Result<NormalizationMap> {
    NormalizationMap::from_bounds(&limits.rate_bounds())
}

/// Solve the allocation in normalized coordinates:
/// `J_bar = J N^{-1}`, `wdot_bar = wdot - J N^{-1} b`,
/// `qdot_bar = J_bar^+ wdot_bar + (I - J_bar^+ J_bar) qdot_bar*`.
pub fn allocate_normalized(
    j: &DMatrix<f64>,
    map: &NormalizationMap,
    jerk: &JerkCommand,
    qdot_bar_star: &DVector<f64>,
    damping: f64,
) -> DVector<f64> {
    let dim = map.dim();
    debug_assert_eq!(j.ncols(), dim);
    let mut j_bar = j.clone();
    for (mut col, &s) in j_bar.column_iter_mut().zip(map.scale.iter()) {
        col /= s;
    }
    let wdot = DVector::from_column_slice(jerk.to_vector().as_slice());
    let offset = &j_bar * &map.bias;
    let wdot_bar = wdot - offset;

    let identity_w = WeightMatrix::identity(dim);
    let j_bar_pinv = weighted_pseudoinverse(&j_bar, &identity_w, damping);
    let primary = &j_bar_pinv * &wdot_bar;
    let correction = &j_bar_pinv * (&j_bar * qdot_bar_star);
    primary + qdot_bar_star - correction
}

/// Uniformly scale the normalized rate vector into the unit box, preserving
/// its direction. Returns the (possibly unchanged) vector and the applied
/// factor `k_s <= 1`.
pub fn saturate(normalized: &DVector<f64>) -> (DVector<f64>, f64) {
    let peak = normalized.amax();
    if peak <= 1.0 || peak == 0.0 {
        (normalized.clone(), 1.0)
    } else {
        let k_s = 1.0 / peak;
        (normalized * k_s, k_s)
    }
}

/// Map normalized rates back to physical units.
pub fn denormalize(map: &NormalizationMap, normalized: &DVector<f64>) -> ActuatorRates {
    ActuatorRates::from_joint_vector(&map.denormalize(normalized))
}

/// Invert the first-order actuator model to setpoints realizing `rates` at
/// the current state: `q_cmd = q + K^{-1} qdot`. Rotor setpoints are clamped
/// into the speed envelope.
pub fn rates_to_setpoints(
    model: &ActuatorDynamicsModel,
    q: &ActuatorState,
    rates: &ActuatorRates,
    speed_bounds: (f64, f64),
) -> ActuatorState {
    let n = q.arm_count();
    let mut tilt = DVector::zeros(n);
    let mut speed = DVector::zeros(n);
    for i in 0..n {
        tilt[i] = q.tilt_angles[i] + rates.tilt_rates[i] / model.tilt_gains[i];
        let w = q.rotor_speeds[i] + rates.rotor_accels[i] / model.rotor_gains[i];
        speed[i] = w.clamp(speed_bounds.0, speed_bounds.1);
    }
    ActuatorState::new(tilt, speed)
}
