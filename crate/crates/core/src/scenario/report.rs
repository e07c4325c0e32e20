//! Run summary. Every figure is derived from the recorded telemetry rows so
//! a report can be checked against its CSV.

use serde::{Deserialize, Serialize};

use crate::control::{AbortReason, FlightPhase};
use crate::telemetry::TelemetryRow;
use crate::trajectory::ProfileKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Nominal,
    MissionFailure,
    Fault,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Nominal => 0,
            Outcome::MissionFailure => 1,
            Outcome::Fault => 3,
        }
    }
}

/// Run facts that are not part of the telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub name: String,
    pub profile: ProfileKind,
    pub seed: u64,
    /// s
    pub dt: f64,
    /// Landing target, m.
    pub pad: [f64; 2],
    /// m/s
    pub touchdown_speed_limit: f64,
    pub abort_reason: Option<AbortReason>,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub meta: RunMeta,
    pub outcome: Outcome,
    pub failures: Vec<String>,
    pub touched_down: bool,
    pub phases: Vec<FlightPhase>,
    /// s, first firing step to the last row
    pub flight_time: f64,
    /// kg
    pub propellant_used: f64,
    /// N·s, summed over thrusters
    pub total_impulse: f64,
    /// s with at least one thruster commanded on
    pub thrust_duration: f64,
    /// N, total impulse over thrust duration
    pub average_thrust: f64,
    /// deg
    pub max_abs_pitch: f64,
    /// deg
    pub max_tilt: f64,
    /// m/s
    pub max_horizontal_speed: f64,
    /// m
    pub max_altitude: f64,
    /// m, worst |z − z_ref| while cruising
    pub cruise_altitude_error: f64,
    /// m, horizontal distance of the final position from the pad
    pub landing_misalignment: f64,
    /// m/s, downward speed in the last row
    pub touchdown_vertical_speed: f64,
    /// kg
    pub final_mass: f64,
    /// Steps whose allocation could not meet the demand.
    pub saturated_steps: usize,
}

fn tilt_deg(r: &TelemetryRow) -> f64 {
    // Body z axis expressed in the world frame, z component.
    let cz = 1.0 - 2.0 * (r.qx * r.qx + r.qy * r.qy);
    cz.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Builds the report from telemetry rows and run facts.
pub fn compute_report(rows: &[TelemetryRow], meta: RunMeta) -> RunReport {
    let dt = meta.dt;
    let mut propellant = 0.0;
    let mut impulse = 0.0;
    let mut firing_steps = 0usize;
    let mut first_firing: Option<f64> = None;
    let mut max_pitch: f64 = 0.0;
    let mut max_tilt: f64 = 0.0;
    let mut max_hspeed: f64 = 0.0;
    let mut max_alt = f64::NEG_INFINITY;
    let mut cruise_err: f64 = 0.0;
    let mut saturated = 0usize;
    let mut phases: Vec<FlightPhase> = Vec::new();
    for r in rows {
        propellant += r.flows().iter().sum::<f64>() * dt;
        impulse += r.thrusts().iter().sum::<f64>() * dt;
        if r.firing() {
            firing_steps += 1;
            first_firing.get_or_insert(r.t);
        }
        max_pitch = max_pitch.max(r.pitch.abs());
        max_tilt = max_tilt.max(tilt_deg(r));
        max_hspeed = max_hspeed.max(r.vx.hypot(r.vy));
        max_alt = max_alt.max(r.z);
        if r.phase == FlightPhase::Cruise {
            cruise_err = cruise_err.max((r.z - r.ref_z).abs());
        }
        if r.saturated {
            saturated += 1;
        }
        if phases.last() != Some(&r.phase) {
            phases.push(r.phase);
        }
    }
    let thrust_duration = firing_steps as f64 * dt;
    let average_thrust = if firing_steps > 0 { impulse / thrust_duration } else { 0.0 };
    let last = rows.last();
    let flight_time = match (first_firing, last) {
        (Some(t0), Some(l)) => l.t - t0,
        _ => 0.0,
    };
    let touched_down = last.is_some_and(|l| l.phase == FlightPhase::Touchdown);
    let grounded = last.is_some_and(|l| matches!(l.phase, FlightPhase::Touchdown | FlightPhase::Abort));
    let misalignment = last.map_or(0.0, |l| (l.x - meta.pad[0]).hypot(l.y - meta.pad[1]));
    let sink = last.map_or(0.0, |l| (-l.vz).max(0.0));

    let mut failures = Vec::new();
    if let Some(reason) = meta.abort_reason {
        failures.push(format!("aborted: {}", serde_json::to_value(reason).unwrap().as_str().unwrap_or("")));
    }
    if !grounded {
        failures.push("no touchdown before the time limit".into());
    } else if sink > meta.touchdown_speed_limit {
        failures.push(format!(
            "hard landing at {sink:.2} m/s (limit {:.2} m/s)",
            meta.touchdown_speed_limit
        ));
    }
    let outcome = if meta.fault.is_some() {
        Outcome::Fault
    } else if failures.is_empty() {
        Outcome::Nominal
    } else {
        Outcome::MissionFailure
    };
    RunReport {
        outcome,
        failures,
        touched_down,
        phases,
        flight_time,
        propellant_used: propellant,
        total_impulse: impulse,
        thrust_duration,
        average_thrust,
        max_abs_pitch: max_pitch,
        max_tilt,
        max_horizontal_speed: max_hspeed,
        max_altitude: if max_alt.is_finite() { max_alt } else { 0.0 },
        cruise_altitude_error: cruise_err,
        landing_misalignment: misalignment,
        touchdown_vertical_speed: sink,
        final_mass: last.map_or(0.0, |l| l.mass),
        saturated_steps: saturated,
        meta,
    }
}

impl RunReport {
    /// Named scalar figures, in report order.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("flight_time_s", self.flight_time),
            ("propellant_used_kg", self.propellant_used),
            ("total_impulse_ns", self.total_impulse),
            ("thrust_duration_s", self.thrust_duration),
            ("average_thrust_n", self.average_thrust),
            ("max_abs_pitch_deg", self.max_abs_pitch),
            ("max_tilt_deg", self.max_tilt),
            ("max_horizontal_speed_ms", self.max_horizontal_speed),
            ("max_altitude_m", self.max_altitude),
            ("cruise_altitude_error_m", self.cruise_altitude_error),
            ("landing_misalignment_m", self.landing_misalignment),
            ("touchdown_vertical_speed_ms", self.touchdown_vertical_speed),
            ("final_mass_kg", self.final_mass),
            ("saturated_steps", self.saturated_steps as f64),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Aligned two-column summary.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<28} {}\n{:<28} {}\n{:<28} {:?}\n",
            "run", self.meta.name, "profile", self.meta.profile, "outcome", self.outcome
        );
        for (name, v) in self.scalars() {
            out.push_str(&format!("{name:<28} {v:>14.4}\n"));
        }
        let phases: Vec<_> = self.phases.iter().map(|p| p.as_str()).collect();
        out.push_str(&format!("{:<28} {}\n", "phases", phases.join(" > ")));
        for f in &self.failures {
            out.push_str(&format!("{:<28} {f}\n", "failure"));
        }
        if let Some(fault) = &self.meta.fault {
            out.push_str(&format!("{:<28} {fault}\n", "fault"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMeta {
        RunMeta {
            name: "t".into(),
            profile: ProfileKind::Combined,
            seed: 0,
            dt: 0.5,
            pad: [10.0, 0.0],
            touchdown_speed_limit: 2.0,
            abort_reason: None,
            fault: None,
        }
    }

    fn row(t: f64, phase: FlightPhase, thrust: f64) -> TelemetryRow {
        let firing = thrust > 0.0;
        TelemetryRow {
            t,
            phase,
            x: 0.0,
            y: 0.0,
            z: 1.0,
            vx: 3.0,
            vy: 4.0,
            vz: -0.5,
            qw: 1.0,
            qx: 0.0,
            qy: 0.0,
            qz: 0.0,
            wx: 0.0,
            wy: 0.0,
            wz: 0.0,
            mass: 14.0,
            roll: 0.0,
            pitch: -5.0,
            yaw: 0.0,
            ref_x: 0.0,
            ref_y: 0.0,
            ref_z: 1.5,
            est_x: 0.0,
            est_y: 0.0,
            est_z: 0.0,
            cmd1: if firing { 0.01 } else { 0.0 },
            cmd2: 0.0,
            cmd3: 0.0,
            cmd4: 0.0,
            flow1: if firing { 0.01 } else { 0.0 },
            flow2: 0.0,
            flow3: 0.0,
            flow4: 0.0,
            thrust1: thrust,
            thrust2: 0.0,
            thrust3: 0.0,
            thrust4: 0.0,
            saturated: false,
        }
    }

    #[test]
    fn figures_from_rows() {
        let rows = vec![
            row(0.0, FlightPhase::Idle, 0.0),
            row(0.5, FlightPhase::VerticalAscent, 20.0),
            row(1.0, FlightPhase::Cruise, 0.0),
            row(1.5, FlightPhase::Cruise, 10.0),
            row(2.0, FlightPhase::Touchdown, 0.0),
        ];
        let r = compute_report(&rows, meta());
        assert_eq!(r.outcome, Outcome::Nominal);
        assert!((r.propellant_used - 0.01).abs() < 1e-15);
        assert!((r.total_impulse - 15.0).abs() < 1e-12);
        assert!((r.thrust_duration - 1.0).abs() < 1e-12);
        assert!((r.average_thrust - 15.0).abs() < 1e-12);
        assert!((r.flight_time - 1.5).abs() < 1e-12);
        assert!((r.max_horizontal_speed - 5.0).abs() < 1e-12);
        assert!((r.cruise_altitude_error - 0.5).abs() < 1e-12);
        assert!((r.landing_misalignment - 10.0).abs() < 1e-12);
        assert_eq!(r.phases.len(), 4);
    }

    #[test]
    fn missing_touchdown_is_failure() {
        let rows = vec![row(0.0, FlightPhase::Cruise, 5.0)];
        let r = compute_report(&rows, meta());
        assert_eq!(r.outcome, Outcome::MissionFailure);
        assert_eq!(r.outcome.exit_code(), 1);
    }
}
