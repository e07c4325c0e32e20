//! Cascaded position, altitude and attitude loops.

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::allocation::{Allocation, Allocator};
use super::estimator::EstimatedState;
use super::pid::{PidController, PidGains};
use super::{ControlError, ControlLimits};
use crate::trajectory::ReferencePoint;
use crate::vehicle::{attitude_from_euler, InertiaModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Position loop rate, Hz.
    pub outer_rate: f64,
    /// Attitude and altitude loop rate, Hz.
    pub inner_rate: f64,
    /// Position error to velocity setpoint, 1/s.
    pub position_gain: f64,
    /// Horizontal velocity error to acceleration, per axis.
    pub velocity: PidGains,
    /// Altitude error to vertical acceleration.
    pub altitude: PidGains,
    /// Attitude error to angular acceleration, per body axis.
    pub roll: PidGains,
    pub pitch: PidGains,
    pub yaw: PidGains,
    /// Sink rate held after the reference ends until contact, m/s.
    pub landing_sink_speed: f64,
    /// Vertical speed error to acceleration while sinking, 1/s.
    pub landing_gain: f64,
    /// Tilt setpoints stay this far inside the tilt limit, deg.
    pub tilt_margin_deg: f64,
    /// Slew limit on the roll and pitch setpoints, deg/s.
    pub tilt_rate_deg: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let attitude = PidGains {
            kp: 12.0,
            ki: 1.0,
            kd: 5.0,
            integral_limit: 0.05,
            output_limit: 8.0,
            derivative_filter: 0.0,
        };
        Self {
            outer_rate: 10.0,
            inner_rate: 100.0,
            position_gain: 0.5,
            velocity: PidGains {
                kp: 0.8,
                ki: 0.1,
                kd: 0.0,
                integral_limit: 2.0,
                output_limit: 2.0,
                derivative_filter: 0.0,
            },
            altitude: PidGains {
                kp: 1.0,
                ki: 0.05,
                kd: 1.6,
                integral_limit: 0.3,
                output_limit: 3.0,
                derivative_filter: 0.0,
            },
            roll: attitude,
            pitch: attitude,
            yaw: PidGains {
                kp: 4.0,
                ki: 0.0,
                kd: 4.0,
                ..attitude
            },
            landing_sink_speed: 0.4,
            landing_gain: 2.0,
            tilt_margin_deg: 1.5,
            tilt_rate_deg: 30.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        for g in [&self.velocity, &self.altitude, &self.roll, &self.pitch, &self.yaw] {
            g.validate()?;
        }
        for (name, v) in [
            ("outer_rate", self.outer_rate),
            ("inner_rate", self.inner_rate),
            ("position_gain", self.position_gain),
            ("landing_sink_speed", self.landing_sink_speed),
            ("landing_gain", self.landing_gain),
            ("tilt_rate_deg", self.tilt_rate_deg),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tilt_margin_deg >= 0.0 && self.tilt_margin_deg < 90.0) {
            return Err(ControlError::InvalidParameter(format!(
                "tilt_margin_deg must lie in [0, 90), got {}",
                self.tilt_margin_deg
            )));
        }
        if self.inner_rate < self.outer_rate {
            return Err(ControlError::InvalidParameter("inner loop must not be slower than outer loop".into()));
        }
        Ok(())
    }
}

/// Roll and pitch that point the thrust axis along `accel + g·ẑ`, each
/// clamped to `max_tilt`.
pub fn attitude_setpoint_from_accel(accel: &Vector3<f64>, gravity: f64, max_tilt: f64) -> (f64, f64) {
    let d = Vector3::new(accel.x, accel.y, accel.z + gravity);
    let pitch = -d.x.atan2(d.z);
    let roll = (-d.y).atan2(d.x.hypot(d.z));
    (roll.clamp(-max_tilt, max_tilt), pitch.clamp(-max_tilt, max_tilt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterOutput {
    pub roll: f64,
    pub pitch: f64,
    /// Horizontal acceleration command, m/s².
    pub accel: Vector2<f64>,
    pub velocity_setpoint: Vector2<f64>,
}

impl OuterOutput {
    pub fn level() -> Self {
        Self {
            roll: 0.0,
            pitch: 0.0,
            accel: Vector2::zeros(),
            velocity_setpoint: Vector2::zeros(),
        }
    }
}

/// Horizontal position loop: position error feeds a clamped velocity
/// setpoint, whose error feeds two PIDs; the resulting acceleration is turned
/// into tilt setpoints.
#[allow(clippy::too_many_arguments)]
pub fn position_outer_loop(
    pids: &mut [PidController; 2],
    position_gain: f64,
    position_error: Vector2<f64>,
    velocity_ref: Vector2<f64>,
    accel_ref: Vector3<f64>,
    velocity: Vector2<f64>,
    limits: &ControlLimits,
    gravity: f64,
    dt: f64,
) -> OuterOutput {
    let mut v_sp = velocity_ref + position_error * position_gain;
    let n = v_sp.norm();
    if n > limits.max_horizontal_speed {
        v_sp *= limits.max_horizontal_speed / n;
    }
    let e = v_sp - velocity;
    let accel = Vector2::new(
        accel_ref.x + pids[0].update(e.x, dt),
        accel_ref.y + pids[1].update(e.y, dt),
    );
    // Near free fall the thrust is too small for tilt to buy horizontal
    // acceleration, so the tilt is sized as if half the weight were carried.
    let az = accel_ref.z.max(-0.5 * gravity);
    let (roll, pitch) = attitude_setpoint_from_accel(&Vector3::new(accel.x, accel.y, az), gravity, limits.max_tilt);
    OuterOutput {
        roll,
        pitch,
        accel,
        velocity_setpoint: v_sp,
    }
}

/// What one inner-loop evaluation produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOutput {
    pub allocation: Allocation,
    /// Body-z force demand, N.
    pub vertical_force: f64,
    pub torque: Vector3<f64>,
    pub accel_z: f64,
}

/// How the vertical channel is driven this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerticalMode {
    Track,
    Coast,
    Sink,
}

#[derive(Debug, Clone)]
pub struct FlightController {
    pub config: ControllerConfig,
    pub limits: ControlLimits,
    pub allocator: Allocator,
    pub inertia: InertiaModel,
    pub gravity: f64,
    velocity_pids: [PidController; 2],
    altitude_pid: PidController,
    attitude_pids: [PidController; 3],
    outer: OuterOutput,
    /// Slewed `(roll, pitch)` setpoint fed to the attitude loops.
    setpoint: (f64, f64),
}

impl FlightController {
    pub fn new(
        config: ControllerConfig,
        limits: ControlLimits,
        allocator: Allocator,
        inertia: InertiaModel,
        gravity: f64,
    ) -> Result<Self, ControlError> {
        config.validate()?;
        limits.validate()?;
        if config.tilt_margin_deg.to_radians() >= limits.max_tilt {
            return Err(ControlError::InvalidParameter("tilt margin must be below the tilt limit".into()));
        }
        Ok(Self {
            setpoint: (0.0, 0.0),
            velocity_pids: [PidController::new(config.velocity); 2],
            altitude_pid: PidController::new(config.altitude),
            attitude_pids: [
                PidController::new(config.roll),
                PidController::new(config.pitch),
                PidController::new(config.yaw),
            ],
            outer: OuterOutput::level(),
            config,
            limits,
            allocator,
            inertia,
            gravity,
        })
    }

    pub fn outer_period(&self) -> f64 {
        1.0 / self.config.outer_rate
    }

    pub fn inner_period(&self) -> f64 {
        1.0 / self.config.inner_rate
    }

    pub fn last_outer(&self) -> OuterOutput {
        self.outer
    }

    /// Limits with the tilt margin applied.
    fn setpoint_limits(&self) -> ControlLimits {
        ControlLimits {
            max_tilt: self.limits.max_tilt - self.config.tilt_margin_deg.to_radians(),
            ..self.limits
        }
    }

    /// Roll and pitch currently commanded to the attitude loops.
    pub fn attitude_setpoint(&self) -> (f64, f64) {
        self.setpoint
    }

    /// Position loop against `reference`. During unpowered segments the
    /// translational feedback is frozen and the attitude is pre-positioned
    /// for `next_burn`.
    pub fn outer_update(
        &mut self,
        reference: &ReferencePoint,
        next_burn: Option<Vector3<f64>>,
        est: &EstimatedState,
    ) -> OuterOutput {
        let dt = self.outer_period();
        let limits = self.setpoint_limits();
        self.outer = if reference.powered {
            let e = reference.position - est.position;
            position_outer_loop(
                &mut self.velocity_pids,
                self.config.position_gain,
                e.xy(),
                reference.velocity.xy(),
                reference.acceleration,
                est.velocity.xy(),
                &limits,
                self.gravity,
                dt,
            )
        } else {
            let a = next_burn.unwrap_or_else(Vector3::zeros);
            let (roll, pitch) = attitude_setpoint_from_accel(&a, self.gravity, limits.max_tilt);
            OuterOutput {
                roll,
                pitch,
                accel: a.xy(),
                velocity_setpoint: reference.velocity.xy(),
            }
        };
        self.outer
    }

    /// Altitude and attitude loops plus allocation.
    pub fn inner_update(&mut self, reference: &ReferencePoint, mode: VerticalMode, est: &EstimatedState) -> InnerOutput {
        let dt = self.inner_period();
        let accel_z = match mode {
            VerticalMode::Track => {
                let e = reference.position.z - est.position.z;
                let rate = reference.velocity.z - est.velocity.z;
                reference.acceleration.z + self.altitude_pid.update_with_rate(e, rate, dt)
            }
            VerticalMode::Sink => {
                let cmd = self.config.landing_gain * (-self.config.landing_sink_speed - est.velocity.z);
                cmd.clamp(-self.config.altitude.output_limit, self.config.altitude.output_limit)
            }
            VerticalMode::Coast => -self.gravity,
        };
        let body_z = est.attitude * Vector3::z();
        let cos_tilt = body_z.z.max(0.5);
        let vertical_force = (est.mass * (self.gravity + accel_z) / cos_tilt).max(0.0);

        let step = self.config.tilt_rate_deg.to_radians() * dt;
        let slew = |from: f64, to: f64| from + (to - from).clamp(-step, step);
        self.setpoint = (slew(self.setpoint.0, self.outer.roll), slew(self.setpoint.1, self.outer.pitch));
        let desired = attitude_from_euler(self.setpoint.0, self.setpoint.1, 0.0);
        let torque = self.attitude_torque(&desired, est, dt);
        let allocation = self.allocator.allocate(vertical_force, torque);
        InnerOutput {
            allocation,
            vertical_force,
            torque,
            accel_z,
        }
    }

    fn attitude_torque(&mut self, desired: &UnitQuaternion<f64>, est: &EstimatedState, dt: f64) -> Vector3<f64> {
        let mut q_err = (est.attitude.inverse() * desired).into_inner();
        if q_err.w < 0.0 {
            q_err = -q_err;
        }
        let err = UnitQuaternion::new_unchecked(q_err).scaled_axis();
        let omega = est.angular_rate;
        let alpha = Vector3::new(
            self.attitude_pids[0].update_with_rate(err.x, -omega.x, dt),
            self.attitude_pids[1].update_with_rate(err.y, -omega.y, dt),
            self.attitude_pids[2].update_with_rate(err.z, -omega.z, dt),
        );
        let diag = self.inertia.diagonal(est.mass);
        diag.component_mul(&alpha) + omega.cross(&diag.component_mul(&omega))
    }
}
