//! Propeller power dynamics and speed-dependent acceleration limit curves.
//!
//! The electrical power balance of a rotor,
//! `eta V I = J_r omega omegadot + d omega^3`, gives the physically
//! achievable acceleration at a given speed. On top of that, a designer
//! piecewise-quadratic pair of min/max acceleration curves is fitted whose
//! midpoint vanishes at a chosen equilibrium speed `omega_m`: with the
//! minimum-norm normalized allocation driving each channel toward the
//! midpoint of its limits, rotor speeds passively settle at `omega_m`.
//! Swapping a rotor's curve set for an all-negative override forces that
//! rotor to decelerate to rest, and restoring the curves brings it back.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Motor/ESC parameters of the power balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorPowerParams {
    /// Electrical efficiency, in (0, 1).
    pub efficiency: f64,
    /// ESC supply voltage (V).
    pub voltage: f64,
    /// Most negative deliverable current (A), < 0.
    pub current_min: f64,
    /// Peak deliverable current (A), > 0.
    pub current_max: f64,
    /// Combined propeller and rotor inertia (kg m^2).
    pub rotor_inertia: f64,
    /// Aerodynamic drag coefficient (N m s^2).
    pub drag_coefficient: f64,
    /// ESC software acceleration caps (rad/s^2): (min < 0, max > 0).
    pub accel_caps: (f64, f64),
}

impl MotorPowerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency < 1.0) {
            return Err(Error::Config("efficiency must be in (0, 1)".into()));
        }
        if !(self.voltage > 0.0) {
            return Err(Error::Config("voltage must be positive".into()));
        }
        if !(self.current_min < 0.0 && self.current_max > 0.0) {
            return Err(Error::Config("currents must satisfy min < 0 < max".into()));
        }
        if !(self.rotor_inertia > 0.0) || !(self.drag_coefficient > 0.0) {
            return Err(Error::Config(
                "rotor inertia and drag must be positive".into(),
            ));
        }
        if !(self.accel_caps.0 < 0.0 && self.accel_caps.1 > 0.0) {
            return Err(Error::Config("accel caps must bracket zero".into()));
        }
        Ok(())
    }

    /// Raw power-balance maximum acceleration
    /// `eta V I_max / (J_r omega) - (d/J_r) omega^2`, no caps.
    pub fn max_accel_unclamped(&self, omega: f64) -> f64 {
        self.efficiency * self.voltage * self.current_max / (self.rotor_inertia * omega)
            - self.drag_coefficient / self.rotor_inertia * omega * omega
    }

    /// Maximum acceleration with the ESC cap applied; the singular `omega <= 0`
    /// region returns the cap itself (the saturated part of the curve).
    pub fn max_accel(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return self.accel_caps.1;
        }
        self.max_accel_unclamped(omega).min(self.accel_caps.1)
    }

    /// Companion minimum acceleration from `current_min`, capped below by the
    /// ESC limit and floored at zero as the speed reaches zero (propellers
    /// never spin backward).
    pub fn min_accel(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let raw = self.efficiency * self.voltage * self.current_min / (self.rotor_inertia * omega)
            - self.drag_coefficient / self.rotor_inertia * omega * omega;
        raw.max(self.accel_caps.0)
    }

    /// Mechanical power drawn at the rotor, `J_r omega omegadot + d omega^3`,
    /// floored at zero (regenerative braking is not credited).
    pub fn mechanical_power(&self, omega: f64, omega_dot: f64) -> f64 {
        (self.rotor_inertia * omega * omega_dot + self.drag_coefficient * omega.powi(3)).max(0.0)
    }
}

/// Anchor values pinning the nine curve coefficients.
///
/// Speeds are rad/s, accelerations rad/s^2. `accel_max_at_high` and
/// `accel_min_at_low` are the interior anchor values of the max curve at
/// `omega_h` and the min curve at `omega_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveAnchors {
    pub omega_min: f64,
    pub omega_l: f64,
    pub omega_m: f64,
    pub omega_h: f64,
    pub omega_max: f64,
    /// Max curve value at `omega_min` (> 0).
    pub accel_max_at_min: f64,
    /// Min curve value at `omega_max` (< 0).
    pub accel_min_at_max: f64,
    /// Max curve value at `omega_h`.
    pub accel_max_at_high: f64,
    /// Min curve value at `omega_l`.
    pub accel_min_at_low: f64,
}

impl CurveAnchors {
    /// Anchors with the interior values set to `interior_fraction` of the end
    /// caps and the breakpoints at 10% / 90% of the speed range.
    pub fn from_caps(
        omega_min: f64,
        omega_max: f64,
        omega_m: f64,
        accel_max_at_min: f64,
        accel_min_at_max: f64,
        interior_fraction: f64,
    ) -> Self {
        let range = omega_max - omega_min;
        Self {
            omega_min,
            omega_l: omega_min + 0.1 * range,
            omega_m,
            omega_h: omega_min + 0.9 * range,
            omega_max,
            accel_max_at_min,
            accel_min_at_max,
            accel_max_at_high: interior_fraction * accel_max_at_min,
            accel_min_at_low: interior_fraction * accel_min_at_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = self.omega_min <= self.omega_l
            && self.omega_l <= self.omega_m
            && self.omega_m <= self.omega_h
            && self.omega_h <= self.omega_max;
        if !ordered {
            return Err(Error::Config(
                "anchor speeds must satisfy omega_min <= omega_l <= omega_m <= omega_h <= omega_max"
                    .into(),
            ));
        }
        if !(self.accel_max_at_min > 0.0) || !(self.accel_min_at_max < 0.0) {
            return Err(Error::Config(
                "end-cap accelerations must satisfy max > 0 > min".into(),
            ));
        }
        Ok(())
    }
}

impl Default for CurveAnchors {
    /// Stock hexacopter anchors: equilibrium at the 5800 RPM hover speed,
    /// 8700 RPM top speed, breakpoints at 10%/90% of the range, end caps
    /// 12000 / -14000 RPM/s with 80% interior anchors.
    fn default() -> Self {
        use crate::types::rpm_to_rad_s;
        Self::from_caps(
            0.0,
            rpm_to_rad_s(8700.0),
            rpm_to_rad_s(5800.0),
            rpm_to_rad_s(12_000.0),
            rpm_to_rad_s(-14_000.0),
            0.8,
        )
    }
}

/// Solved limit curves: max acceleration is quadratic `c00 w + c01 w^2 + c02`
/// on `[omega_min, omega_h]` and `c10 w^2 + c11` above; min acceleration is
/// `c20 w^2 + c21` on `[omega_min, omega_l]` and `c30 w^2 + c31` above.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCurveSet {
    pub coefficients: [f64; 9],
    pub anchors: CurveAnchors,
    /// When set, evaluation is replaced by the stop override with this
    /// (negative) maximum acceleration.
    pub stop_override: Option<f64>,
}

/// Default stop-override max acceleration: -500 RPM/s.
pub fn default_stop_accel() -> f64 {
    crate::types::rpm_to_rad_s(-500.0)
}

/// Fit the nine coefficients to the anchors by solving the linear system of
/// anchor values, piece continuity and the midpoint-zero condition at
/// `omega_m`.
pub fn solve_limit_curves(anchors: &CurveAnchors) -> Result<LimitCurveSet> {
    anchors.validate()?;
    let CurveAnchors {
        omega_min: w0,
        omega_l: wl,
        omega_m: wm,
        omega_h: wh,
        omega_max: w1,
        accel_max_at_min: a_top0,
        accel_min_at_max: a_bot1,
        accel_max_at_high: a1,
        accel_min_at_low: a2,
    } = *anchors;

    // unknowns: [c00 c01 c02 c10 c11 c20 c21 c30 c31]
    let mut m = DMatrix::zeros(9, 9);
    let mut rhs = DVector::zeros(9);
    // (1) max piece 1 value at omega_min
    m[(0, 0)] = w0;
    m[(0, 1)] = w0 * w0;
    m[(0, 2)] = 1.0;
    rhs[0] = a_top0;
    // (2) max continuity at omega_h
    m[(1, 0)] = wh;
    m[(1, 1)] = wh * wh;
    m[(1, 2)] = 1.0;
    m[(1, 3)] = -wh * wh;
    m[(1, 4)] = -1.0;
    // (3) max piece 2 vanishes at omega_max
    m[(2, 3)] = w1 * w1;
    m[(2, 4)] = 1.0;
    // (4) max piece 2 value at omega_h
    m[(3, 3)] = wh * wh;
    m[(3, 4)] = 1.0;
    rhs[3] = a1;
    // (5) min piece 1 vanishes at omega_min
    m[(4, 5)] = w0 * w0;
    m[(4, 6)] = 1.0;
    // (6) min continuity at omega_l
    m[(5, 5)] = wl * wl;
    m[(5, 6)] = 1.0;
    m[(5, 7)] = -wl * wl;
    m[(5, 8)] = -1.0;
    // (7) min piece 1 value at omega_l
    m[(6, 5)] = wl * wl;
    m[(6, 6)] = 1.0;
    rhs[6] = a2;
    // (8) min piece 2 value at omega_max
    m[(7, 7)] = w1 * w1;
    m[(7, 8)] = 1.0;
    rhs[7] = a_bot1;
    // (9) midpoint zero at omega_m (max piece 1 + min piece 2)
    m[(8, 0)] = wm;
    m[(8, 1)] = wm * wm;
    m[(8, 2)] = 1.0;
    m[(8, 7)] = wm * wm;
    m[(8, 8)] = 1.0;

    let lu = m.clone().lu();
    let c = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("degenerate curve anchors".into()))?;
    let residual = (&m * &c - &rhs).norm();
    let scale = rhs.norm().max(1.0);
    if !residual.is_finite() || residual > 1e-7 * scale {
        return Err(Error::Singular(format!(
            "curve system is ill conditioned (residual {residual:.3e})"
        )));
    }

    let mut coefficients = [0.0; 9];
    for (dst, src) in coefficients.iter_mut().zip(c.iter()) {
        *dst = *src;
    }
    let curves = LimitCurveSet {
        coefficients,
        anchors: *anchors,
        stop_override: None,
    };
    if !curves.well_ordered() {
        // user anchors may produce crossing curves; still usable, but noisy
        eprintln!("warning: limit curves cross inside the speed range; check anchors");
    }
    Ok(curves)
}

impl LimitCurveSet {
    fn max_piece1(&self, w: f64) -> f64 {
        let c = &self.coefficients;
        c[0] * w + c[1] * w * w + c[2]
    }

    fn max_piece2(&self, w: f64) -> f64 {
        let c = &self.coefficients;
        c[3] * w * w + c[4]
    }

    fn min_piece1(&self, w: f64) -> f64 {
        let c = &self.coefficients;
        c[5] * w * w + c[6]
    }

    fn min_piece2(&self, w: f64) -> f64 {
        let c = &self.coefficients;
        c[7] * w * w + c[8]
    }

    fn eval_normal(&self, omega: f64) -> (f64, f64) {
        let w = omega.clamp(self.anchors.omega_min, self.anchors.omega_max);
        let max = if w <= self.anchors.omega_h {
            self.max_piece1(w)
        } else {
            self.max_piece2(w)
        };
        let min = if w <= self.anchors.omega_l {
            self.min_piece1(w)
        } else {
            self.min_piece2(w)
        };
        (min, max)
    }

    /// Acceleration limits `(min, max)` at the given speed. Under a stop
    /// override the limits are all-negative above `omega_min` and exactly
    /// `(0, 0)` at `omega_min`, holding a stopped rotor at rest.
    pub fn eval_limits(&self, omega: f64) -> (f64, f64) {
        match self.stop_override {
            None => self.eval_normal(omega),
            Some(stop_max) => {
                if omega <= self.anchors.omega_min {
                    (0.0, 0.0)
                } else {
                    let (orig_min, _) = self.eval_normal(omega);
                    // keep the interval nondegenerate with a negative midpoint
                    (orig_min.min(2.0 * stop_max), stop_max)
                }
            }
        }
    }

    /// Midpoint `(max + min)/2`: the acceleration applied by the minimum-norm
    /// allocation.
    pub fn midpoint(&self, omega: f64) -> f64 {
        let (lo, hi) = self.eval_limits(omega);
        0.5 * (lo + hi)
    }

    /// Curve set forcing the rotor to decelerate to rest.
    pub fn override_for_stop(&self, stop_accel: f64) -> LimitCurveSet {
        let mut out = self.clone();
        out.stop_override = Some(if stop_accel < 0.0 {
            stop_accel
        } else {
            default_stop_accel()
        });
        out
    }

    /// Restore normal evaluation.
    pub fn release_override(&self) -> LimitCurveSet {
        let mut out = self.clone();
        out.stop_override = None;
        out
    }

    /// True when the max curve stays strictly above the min curve inside the
    /// open speed range.
    pub fn well_ordered(&self) -> bool {
        let (w0, w1) = (self.anchors.omega_min, self.anchors.omega_max);
        let steps = 512;
        (1..steps).all(|k| {
            let w = w0 + (w1 - w0) * k as f64 / steps as f64;
            let (lo, hi) = self.eval_normal(w);
            hi > lo
        })
    }
}
