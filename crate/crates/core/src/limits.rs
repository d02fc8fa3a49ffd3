//! Actuator rate and speed limits.

use crate::error::{Error, Result};

/// Per-channel rate bounds: tilt angular velocity (rad/s) and rotor
/// acceleration (rad/s^2), plus the hard rotor speed envelope (rad/s).
///
/// For the power-curve method the rotor acceleration bounds are re-evaluated
/// from the limit curves at the current speed every control tick; this struct
/// just carries whatever the caller computed.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorLimits {
    /// (min, max) tilt rate per arm.
    pub tilt_rate: Vec<(f64, f64)>,
    /// (min, max) rotor acceleration per rotor.
    pub rotor_accel: Vec<(f64, f64)>,
    /// (min, max) rotor speed, shared by all rotors.
    pub rotor_speed: (f64, f64),
}

impl ActuatorLimits {
    /// Symmetric static limits: `+-tilt_rate_max` and `+-rotor_accel_max`.
    pub fn symmetric(
        arm_count: usize,
        tilt_rate_max: f64,
        rotor_accel_max: f64,
        rotor_speed: (f64, f64),
    ) -> Result<Self> {
        let limits = Self {
            tilt_rate: vec![(-tilt_rate_max, tilt_rate_max); arm_count],
            rotor_accel: vec![(-rotor_accel_max, rotor_accel_max); arm_count],
            rotor_speed,
        };
        limits.validate()?;
        Ok(limits)
    }

    pub fn arm_count(&self) -> usize {
        self.tilt_rate.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tilt_rate.len() != self.rotor_accel.len() {
            return Err(Error::Config("tilt and rotor limit counts differ".into()));
        }
        for &(lo, hi) in self.tilt_rate.iter().chain(self.rotor_accel.iter()) {
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "rate limit min must be below max, got [{lo}, {hi}]"
                )));
            }
        }
        if !(self.rotor_speed.0 < self.rotor_speed.1) || self.rotor_speed.0 < 0.0 {
            return Err(Error::Config(
                "rotor speed bounds must satisfy 0 <= min < max".into(),
            ));
        }
        Ok(())
    }

    /// Bounds in joint-vector order `[tilt_0..tilt_{N-1}, rotor_0..rotor_{N-1}]`.
    pub fn rate_bounds(&self) -> Vec<(f64, f64)> {
        self.tilt_rate
            .iter()
            .chain(self.rotor_accel.iter())
            .copied()
            .collect()
    }

    /// Clip a joint-rate vector channel by channel (the plain differential
    /// methods saturate this way, losing the jerk direction).
    pub fn clip_rates(&self, rates: &nalgebra::DVector<f64>) -> (nalgebra::DVector<f64>, bool) {
        let bounds = self.rate_bounds();
        let mut clipped = rates.clone();
        let mut any = false;
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            let c = rates[i].clamp(lo, hi);
            if c != rates[i] {
                any = true;
            }
            clipped[i] = c;
        }
        (clipped, any)
    }
}

/// Replace a degenerate interval (width below `min_width`) with a tiny
/// symmetric window around its midpoint so normalization stays well posed.
/// A stopped rotor pinned at (0, 0) becomes (-w/2, +w/2), whose midpoint
/// keeps the channel at zero commanded acceleration.
pub fn widen_degenerate(bounds: (f64, f64), min_width: f64) -> (f64, f64) {
    if bounds.1 - bounds.0 >= min_width {
        bounds
    } else {
        let mid = 0.5 * (bounds.0 + bounds.1);
        (mid - 0.5 * min_width, mid + 0.5 * min_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn symmetric_limits_validate() {
        let l = ActuatorLimits::symmetric(6, 3.0, 1300.0, (0.0, 900.0)).unwrap();
        assert_eq!(l.rate_bounds().len(), 12);
        assert_eq!(l.rate_bounds()[0], (-3.0, 3.0));
        assert_eq!(l.rate_bounds()[6], (-1300.0, 1300.0));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut l = ActuatorLimits::symmetric(3, 3.0, 1300.0, (0.0, 900.0)).unwrap();
        l.rotor_accel[1] = (5.0, 5.0);
        assert!(l.validate().is_err());
    }

    #[test]
    fn clip_reports_saturation() {
        let l = ActuatorLimits::symmetric(2, 1.0, 10.0, (0.0, 900.0)).unwrap();
        let (v, any) = l.clip_rates(&DVector::from_vec(vec![0.5, -2.0, 3.0, 100.0]));
        assert!(any);
        assert_eq!(v.as_slice(), &[0.5, -1.0, 3.0, 10.0]);
        let (_, any) = l.clip_rates(&DVector::from_vec(vec![0.5, -0.5, 3.0, 5.0]));
        assert!(!any);
    }

    #[test]
    fn widen_degenerate_keeps_midpoint() {
        assert_eq!(widen_degenerate((0.0, 0.0), 1e-6), (-5e-7, 5e-7));
        assert_eq!(widen_degenerate((-1.0, 1.0), 1e-6), (-1.0, 1.0));
    }
}
