//! Cascaded PID flight control, thrust allocation, flight phases and the
//! state estimator.

mod allocation;
mod cascade;
mod estimator;
mod phase;
mod pid;

pub use allocation::{allocate, Allocation, Allocator};
pub use cascade::{
    attitude_setpoint_from_accel, position_outer_loop, ControllerConfig, FlightController, InnerOutput, OuterOutput,
    VerticalMode,
};
pub use estimator::{EstimatedState, Estimator, EstimatorConfig, EstimatorMode};
pub use phase::{
    abort_reason, phase_machine_update, transition, AbortReason, FlightPhase, PhaseInputs, ABORT_TILT,
    MIN_CRUISE_ALTITUDE,
};
pub use pid::{pid_update, PidController, PidGains};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("illegal phase transition {from} -> {to}")]
    IllegalTransition { from: FlightPhase, to: FlightPhase },
    #[error("invalid controller parameter: {0}")]
    InvalidParameter(String),
    #[error("thruster layout has a singular control matrix")]
    SingularLayout,
}

/// Hard limits on what the controller may ask of the vehicle. Angles in
/// radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLimits {
    pub max_tilt: f64,
    pub max_horizontal_speed: f64,
    pub max_vertical_speed: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self {
            max_tilt: 24f64.to_radians(),
            max_horizontal_speed: 30.0,
            max_vertical_speed: 10.0,
        }
    }
}

impl ControlLimits {
    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, v) in [
            ("max_tilt", self.max_tilt),
            ("max_horizontal_speed", self.max_horizontal_speed),
            ("max_vertical_speed", self.max_vertical_speed),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_tilt >= std::f64::consts::FRAC_PI_2 {
            return Err(ControlError::InvalidParameter("max_tilt must be below 90 deg".into()));
        }
        Ok(())
    }
}
