//! Flight-phase state machine.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::ControlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightPhase {
    Idle,
    VerticalAscent,
    BallisticAscent,
    Cruise,
    BallisticDescent,
    VerticalDescent,
    Touchdown,
    Abort,
}

impl FlightPhase {
    pub const ALL: [FlightPhase; 8] = [
        FlightPhase::Idle,
        FlightPhase::VerticalAscent,
        FlightPhase::BallisticAscent,
        FlightPhase::Cruise,
        FlightPhase::BallisticDescent,
        FlightPhase::VerticalDescent,
        FlightPhase::Touchdown,
        FlightPhase::Abort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FlightPhase::Idle => "idle",
            FlightPhase::VerticalAscent => "vertical_ascent",
            FlightPhase::BallisticAscent => "ballistic_ascent",
            FlightPhase::Cruise => "cruise",
            FlightPhase::BallisticDescent => "ballistic_descent",
            FlightPhase::VerticalDescent => "vertical_descent",
            FlightPhase::Touchdown => "touchdown",
            FlightPhase::Abort => "abort",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }

    /// Phases may only move forward through the nominal order (skipping is
    /// allowed); anything may abort; terminal phases never leave.
    pub fn can_transition_to(self, next: FlightPhase) -> bool {
        if next == self {
            return true;
        }
        match (self, next) {
            (FlightPhase::Touchdown | FlightPhase::Abort, _) => false,
            (_, FlightPhase::Abort) => true,
            (_, FlightPhase::Idle) => false,
            (from, to) => to > from,
        }
    }

    pub fn is_airborne(self) -> bool {
        !matches!(self, FlightPhase::Idle | FlightPhase::Touchdown)
    }
}

impl fmt::Display for FlightPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the phase machine looks at on one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInputs {
    pub takeoff_commanded: bool,
    /// Phase hint of the reference at the current time.
    pub reference_phase: FlightPhase,
    /// Set by the touchdown check.
    pub touched_down: bool,
    pub propellant_exhausted: bool,
    /// rad
    pub tilt: f64,
    /// m above ground
    pub altitude: f64,
}

/// Tilt beyond which the flight is abandoned.
pub const ABORT_TILT: f64 = 60.0 * std::f64::consts::PI / 180.0;
/// Minimum altitude while cruising.
pub const MIN_CRUISE_ALTITUDE: f64 = 1.0;

/// Why a flight left the nominal sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    PropellantExhausted,
    ExcessiveTilt,
    LowCruiseAltitude,
}

pub fn abort_reason(phase: FlightPhase, inputs: &PhaseInputs) -> Option<AbortReason> {
    if !phase.is_airborne() || phase == FlightPhase::Abort {
        return None;
    }
    if inputs.propellant_exhausted {
        Some(AbortReason::PropellantExhausted)
    } else if inputs.tilt > ABORT_TILT {
        Some(AbortReason::ExcessiveTilt)
    } else if phase == FlightPhase::Cruise && inputs.altitude < MIN_CRUISE_ALTITUDE {
        Some(AbortReason::LowCruiseAltitude)
    } else {
        None
    }
}

/// Next phase given the current one and this step's inputs.
pub fn phase_machine_update(phase: FlightPhase, inputs: &PhaseInputs) -> Result<FlightPhase, ControlError> {
    let next = if phase == FlightPhase::Abort || phase == FlightPhase::Touchdown {
        phase
    } else if abort_reason(phase, inputs).is_some() {
        FlightPhase::Abort
    } else if phase == FlightPhase::Idle {
        if inputs.takeoff_commanded {
            match inputs.reference_phase {
                FlightPhase::Idle => FlightPhase::VerticalAscent,
                p => p,
            }
        } else {
            FlightPhase::Idle
        }
    } else if inputs.touched_down {
        FlightPhase::Touchdown
    } else if inputs.reference_phase > phase && inputs.reference_phase < FlightPhase::Touchdown {
        inputs.reference_phase
    } else {
        phase
    };
    transition(phase, next)
}

/// Validates a transition; an illegal one is a programming error.
pub fn transition(from: FlightPhase, to: FlightPhase) -> Result<FlightPhase, ControlError> {
    if from.can_transition_to(to) {
        Ok(to)
    } else {
        Err(ControlError::IllegalTransition { from, to })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(reference_phase: FlightPhase) -> PhaseInputs {
        PhaseInputs {
            takeoff_commanded: true,
            reference_phase,
            touched_down: false,
            propellant_exhausted: false,
            tilt: 0.0,
            altitude: 50.0,
        }
    }

    #[test]
    fn takeoff_from_idle() {
        let p = phase_machine_update(FlightPhase::Idle, &inputs(FlightPhase::VerticalAscent)).unwrap();
        assert_eq!(p, FlightPhase::VerticalAscent);
        let mut waiting = inputs(FlightPhase::VerticalAscent);
        waiting.takeoff_commanded = false;
        assert_eq!(phase_machine_update(FlightPhase::Idle, &waiting).unwrap(), FlightPhase::Idle);
    }

    #[test]
    fn cruise_hands_over_to_descent() {
        let p = phase_machine_update(FlightPhase::Cruise, &inputs(FlightPhase::BallisticDescent)).unwrap();
        assert_eq!(p, FlightPhase::BallisticDescent);
        // A lagging reference never drags the phase backwards.
        let p = phase_machine_update(FlightPhase::Cruise, &inputs(FlightPhase::BallisticAscent)).unwrap();
        assert_eq!(p, FlightPhase::Cruise);
    }

    #[test]
    fn exhaustion_aborts() {
        let mut i = inputs(FlightPhase::Cruise);
        i.propellant_exhausted = true;
        assert_eq!(phase_machine_update(FlightPhase::Cruise, &i).unwrap(), FlightPhase::Abort);
        assert_eq!(abort_reason(FlightPhase::Cruise, &i), Some(AbortReason::PropellantExhausted));
    }

    #[test]
    fn tilt_and_low_cruise_abort() {
        let mut i = inputs(FlightPhase::Cruise);
        i.tilt = 61f64.to_radians();
        assert_eq!(phase_machine_update(FlightPhase::Cruise, &i).unwrap(), FlightPhase::Abort);
        let mut i = inputs(FlightPhase::Cruise);
        i.altitude = 0.5;
        assert_eq!(phase_machine_update(FlightPhase::Cruise, &i).unwrap(), FlightPhase::Abort);
        // Low altitude is fine outside cruise.
        assert_eq!(
            phase_machine_update(FlightPhase::VerticalDescent, &PhaseInputs { altitude: 0.5, ..inputs(FlightPhase::VerticalDescent) })
                .unwrap(),
            FlightPhase::VerticalDescent
        );
    }

    #[test]
    fn touchdown_only_via_contact() {
        let p = phase_machine_update(FlightPhase::VerticalDescent, &inputs(FlightPhase::VerticalDescent)).unwrap();
        assert_eq!(p, FlightPhase::VerticalDescent);
        let mut i = inputs(FlightPhase::VerticalDescent);
        i.touched_down = true;
        assert_eq!(phase_machine_update(FlightPhase::VerticalDescent, &i).unwrap(), FlightPhase::Touchdown);
        assert_eq!(phase_machine_update(FlightPhase::Touchdown, &i).unwrap(), FlightPhase::Touchdown);
    }

    #[test]
    fn illegal_transitions_fail_fast() {
        assert!(transition(FlightPhase::Cruise, FlightPhase::VerticalAscent).is_err());
        assert!(transition(FlightPhase::Abort, FlightPhase::Touchdown).is_err());
        assert!(transition(FlightPhase::Touchdown, FlightPhase::Abort).is_err());
        assert!(transition(FlightPhase::Cruise, FlightPhase::Abort).is_ok());
        assert!(transition(FlightPhase::Idle, FlightPhase::Cruise).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for p in FlightPhase::ALL {
            assert_eq!(FlightPhase::parse(p.as_str()), Some(p));
        }
    }
}
