//! Reference trajectory generators.
//!
//! All references start at the hover pose and are C1-continuous in time.
//! The oscillation family swings the attitude about one body axis while the
//! position is held; the figure-8 sweeps a lemniscate with coordinated
//! attitude; the cartwheel pitches up to 90 degrees and then rotates at a
//! constant rate about the (now horizontal) body z axis at a fixed position.

use nalgebra::{UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Pose and twist reference at one instant. Velocity is world frame, angular
/// velocity is expressed in the reference body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl Reference {
    pub fn hover() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscAxis {
    Roll,
    Pitch,
    Yaw,
}

impl OscAxis {
    fn unit(&self) -> Vector3<f64> {
        match self {
            OscAxis::Roll => Vector3::x(),
            OscAxis::Pitch => Vector3::y(),
            OscAxis::Yaw => Vector3::z(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OscAxis::Roll => "roll",
            OscAxis::Pitch => "pitch",
            OscAxis::Yaw => "yaw",
        }
    }
}

/// Trajectory selection with per-kind parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectorySpec {
    /// Hold the start pose.
    Hover { duration: f64 },
    /// Lemniscate in x-y with coordinated yaw/roll, smooth ramp-in.
    Fig8 {
        period: f64,
        amplitude: f64,
        yaw_amplitude: f64,
        roll_amplitude: f64,
        ramp: f64,
        duration: f64,
    },
    /// Sinusoidal attitude oscillation about one body axis, position held.
    /// The amplitude ramps in smoothly over the first period.
    Osc {
        axis: OscAxis,
        period: f64,
        amplitude: f64,
        duration: f64,
    },
    /// Smooth pitch ramp to 90 degrees, then constant rotation about body z.
    Cartwheel {
        pitch_rate: f64,
        spin_rate: f64,
        spin_blend: f64,
        duration: f64,
    },
}

impl TrajectorySpec {
    /// Default figure-8: 20 s period, 1.2 m amplitude.
    pub fn default_fig8(duration: f64) -> Self {
        TrajectorySpec::Fig8 {
            period: 20.0,
            amplitude: 1.2,
            yaw_amplitude: 0.7,
            roll_amplitude: 0.25,
            ramp: 2.0,
            duration,
        }
    }

    /// Default oscillation: amplitude 0.64 rad about the roll axis.
    pub fn default_osc(period: f64, duration: f64) -> Self {
        TrajectorySpec::Osc {
            axis: OscAxis::Roll,
            period,
            amplitude: 0.64,
            duration,
        }
    }

    /// Default cartwheel: 15 deg/s nominal pitch ramp to vertical, then a
    /// quarter turn at 30 deg/s.
    pub fn default_cartwheel() -> Self {
        TrajectorySpec::Cartwheel {
            pitch_rate: 15f64.to_radians(),
            spin_rate: 30f64.to_radians(),
            spin_blend: 0.5,
            duration: 9.0,
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            TrajectorySpec::Hover { duration }
            | TrajectorySpec::Fig8 { duration, .. }
            | TrajectorySpec::Osc { duration, .. }
            | TrajectorySpec::Cartwheel { duration, .. } => *duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration() < 0.0 {
            return Err(Error::Config(
                "trajectory duration must be nonnegative".into(),
            ));
        }
        match self {
            TrajectorySpec::Osc { period, .. } | TrajectorySpec::Fig8 { period, .. } => {
                if !(*period > 0.0) {
                    return Err(Error::Config("trajectory period must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Stable label used in file names and reports.
    pub fn label(&self) -> String {
        match self {
            TrajectorySpec::Hover { .. } => "hover".into(),
            TrajectorySpec::Fig8 { .. } => "fig8".into(),
            TrajectorySpec::Osc { axis, period, .. } => format!("osc-{}-{period:.2}", axis.name()),
            TrajectorySpec::Cartwheel { .. } => "cartwheel".into(),
        }
    }

    /// Sample the reference at time `t`.
    pub fn sample(&self, t: f64) -> Reference {
        match *self {
            TrajectorySpec::Hover { .. } => Reference::hover(),
            TrajectorySpec::Fig8 {
                period,
                amplitude,
                yaw_amplitude,
                roll_amplitude,
                ramp,
                ..
            } => fig8(t, period, amplitude, yaw_amplitude, roll_amplitude, ramp),
            TrajectorySpec::Osc {
                axis,
                period,
                amplitude,
                ..
            } => osc(t, axis, period, amplitude),
            TrajectorySpec::Cartwheel {
                pitch_rate,
                spin_rate,
                spin_blend,
                ..
            } => cartwheel(t, pitch_rate, spin_rate, spin_blend),
        }
    }
}

/// C1 ramp-in weight: 0 at t=0, 1 from t=ramp on.
fn ramp_weight(t: f64, ramp: f64) -> (f64, f64) {
    if ramp <= 0.0 || t >= ramp {
        (1.0, 0.0)
    } else if t <= 0.0 {
        (0.0, 0.0)
    } else {
        let s = t / ramp;
        let w = 0.5 * (1.0 - (std::f64::consts::PI * s).cos());
        let dw = 0.5 * std::f64::consts::PI / ramp * (std::f64::consts::PI * s).sin();
        (w, dw)
    }
}

fn osc(t: f64, axis: OscAxis, period: f64, amplitude: f64) -> Reference {
    let w = std::f64::consts::TAU / period;
    let (g, dg) = ramp_weight(t, period);
    let angle = amplitude * g * (w * t).sin();
    let rate = amplitude * (g * w * (w * t).cos() + dg * (w * t).sin());
    let axis_v = axis.unit();
    Reference {
        position: Vector3::zeros(),
        orientation: UnitQuaternion::from_scaled_axis(angle * axis_v),
        velocity: Vector3::zeros(),
        angular_velocity: rate * axis_v,
    }
}

fn fig8(
    t: f64,
    period: f64,
    amplitude: f64,
    yaw_amplitude: f64,
    roll_amplitude: f64,
    ramp: f64,
) -> Reference {
    let w = std::f64::consts::TAU / period;
    let (g, dg) = ramp_weight(t, ramp);
    let (s1, c1) = (w * t).sin_cos();
    let (s2, c2) = (2.0 * w * t).sin_cos();

    let x = amplitude * s1;
    let y = 0.5 * amplitude * s2;
    let dx = amplitude * w * c1;
    let dy = amplitude * w * c2;
    let position = Vector3::new(g * x, g * y, 0.0);
    let velocity = Vector3::new(g * dx + dg * x, g * dy + dg * y, 0.0);

    let yaw = g * yaw_amplitude * s1;
    let dyaw = g * yaw_amplitude * w * c1 + dg * yaw_amplitude * s1;
    let roll = g * roll_amplitude * s2;
    let droll = g * roll_amplitude * 2.0 * w * c2 + dg * roll_amplitude * s2;

    // yaw about world z composed with roll about the body x axis;
    // body rates: omega = [droll, 0, dyaw] to first order (roll small)
    let orientation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), roll);
    let angular_velocity = Vector3::new(droll, 0.0, dyaw * roll.cos());
    Reference {
        position,
        orientation,
        velocity,
        angular_velocity,
    }
}

/// Smoothstep and its derivative on [0, 1].
fn smoothstep(s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
}

fn cartwheel(t: f64, pitch_rate: f64, spin_rate: f64, spin_blend: f64) -> Reference {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let ramp_time = half_pi / pitch_rate;
    if t < ramp_time {
        let (s, ds) = smoothstep(t / ramp_time);
        let pitch = half_pi * s;
        let dpitch = half_pi * ds / ramp_time;
        Reference {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::from_axis_angle(&Vector3::y_axis(), pitch),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::new(0.0, dpitch, 0.0),
        }
    } else {
        let tp = t - ramp_time;
        // smooth spin-up: rate follows a smoothstep over spin_blend seconds
        let (theta, rate) = if spin_blend > 0.0 && tp < spin_blend {
            let x = tp / spin_blend;
            // integral of 3x^2-2x^3 is x^3 - x^4/2
            let theta = spin_rate * spin_blend * (x.powi(3) - 0.5 * x.powi(4));
            let (s, _) = smoothstep(x);
            (theta, spin_rate * s)
        } else {
            let theta0 = 0.5 * spin_rate * spin_blend;
            (theta0 + spin_rate * (tp - spin_blend), spin_rate)
        };
        let pitched = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), half_pi);
        Reference {
            position: Vector3::zeros(),
            orientation: pitched * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::new(0.0, 0.0, rate),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn all_kinds_start_at_hover() {
        let specs = [
            TrajectorySpec::Hover { duration: 1.0 },
            TrajectorySpec::default_fig8(20.0),
            TrajectorySpec::default_osc(1.6, 10.0),
            TrajectorySpec::default_cartwheel(),
        ];
        for spec in specs {
            let r = spec.sample(0.0);
            assert!(r.position.norm() < 1e-12, "{}", spec.label());
            assert!(r.orientation.angle() < 1e-12, "{}", spec.label());
        }
    }

    #[test]
    fn osc_is_periodic_after_ramp_in() {
        let spec = TrajectorySpec::default_osc(1.3, 10.0);
        for k in 0..20 {
            let t = 1.3 + 0.137 + 0.21 * k as f64;
            let a = spec.sample(t);
            let b = spec.sample(t + 1.3);
            assert!(a.orientation.angle_to(&b.orientation) < 1e-9);
            assert_relative_eq!(a.angular_velocity, b.angular_velocity, epsilon = 1e-9);
        }
    }

    #[test]
    fn osc_peak_rates_match_design_targets() {
        // steady-state peak reference angular velocity within 10% of the
        // target table (scanned after the ramp-in period)
        let targets = [(1.6, 2.3), (1.4, 2.8), (1.3, 3.2), (1.2, 3.5), (1.1, 4.0)];
        for (period, target) in targets {
            let spec = TrajectorySpec::default_osc(period, 10.0);
            let mut peak: f64 = 0.0;
            let mut t = period;
            while t < 2.0 * period {
                peak = peak.max(spec.sample(t).angular_velocity.norm());
                t += 1e-3;
            }
            let rel = (peak - target).abs() / target;
            assert!(
                rel < 0.10,
                "period {period}: peak {peak:.3} vs target {target}"
            );
        }
    }

    #[test]
    fn cartwheel_reaches_vertical_then_spins() {
        let spec = TrajectorySpec::default_cartwheel();
        let ramp_time = std::f64::consts::FRAC_PI_2 / 15f64.to_radians();
        let at_vertical = spec.sample(ramp_time + 1e-9);
        // body z now points along world x
        let z_world = at_vertical.orientation * Vector3::z();
        assert_relative_eq!(z_world, Vector3::x(), epsilon = 1e-9);
        // well into the spin phase the rate is constant about body z
        let spinning = spec.sample(ramp_time + 5.0);
        assert_relative_eq!(
            spinning.angular_velocity,
            Vector3::new(0.0, 0.0, 30f64.to_radians()),
            epsilon = 1e-12
        );
        assert!(spinning.position.norm() < 1e-12);
    }

    #[test]
    fn references_are_c1_continuous() {
        // finite-difference velocity against the reported one on a dense grid
        let specs = [
            TrajectorySpec::default_fig8(20.0),
            TrajectorySpec::default_osc(1.2, 10.0),
            TrajectorySpec::default_cartwheel(),
        ];
        let h = 1e-5;
        for spec in specs {
            let mut t = 0.05;
            while t < spec.duration().min(15.0) {
                let a = spec.sample(t - h);
                let b = spec.sample(t + h);
                let r = spec.sample(t);
                let fd_vel = (b.position - a.position) / (2.0 * h);
                assert!(
                    (fd_vel - r.velocity).norm() < 1e-3,
                    "{} at t={t}: fd {fd_vel:?} vs {:?}",
                    spec.label(),
                    r.velocity
                );
                // orientation continuity
                assert!(a.orientation.angle_to(&b.orientation) < 0.5);
                t += 0.37;
            }
        }
    }

    #[test]
    fn fig8_peak_velocities_are_moderate() {
        let spec = TrajectorySpec::default_fig8(40.0);
        let mut peak_lin: f64 = 0.0;
        let mut peak_ang: f64 = 0.0;
        let mut t = 0.0;
        while t < 20.0 {
            let r = spec.sample(t);
            peak_lin = peak_lin.max(r.velocity.norm());
            peak_ang = peak_ang.max(r.angular_velocity.norm());
            t += 1e-3;
        }
        // slow trajectory: a few tenths m/s and rad/s
        assert!(peak_lin > 0.2 && peak_lin < 0.8, "lin {peak_lin}");
        assert!(peak_ang > 0.2 && peak_ang < 0.8, "ang {peak_ang}");
    }
}
