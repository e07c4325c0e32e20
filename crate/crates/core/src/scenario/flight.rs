//! Closed-loop flight: reference, estimator, controller, valves and rigid
//! body stepped together on a fixed grid.

use nalgebra::Vector3;

use crate::control::{
    phase_machine_update, Allocator, AbortReason, EstimatedState, Estimator, FlightController,
    FlightPhase, PhaseInputs, VerticalMode,
};
use crate::propulsion::{calibrate_engine, valve_update, EngineSpec, PulseExecutor, ThrustCurve, ThrusterState};
use crate::sim::{rk4_step, seeded_rng};
use crate::telemetry::TelemetryRow;
use crate::trajectory::{generate, ReferencePoint, ReferenceSequence};
use crate::vehicle::{
    build_layout, dynamics_derivative, wrench, InertiaModel, RigidBodyState, ThrusterLayout, Wrench,
};

use super::config::Scenario;
use super::report::{compute_report, RunMeta, RunReport};
use super::ScenarioError;

#[derive(Debug, Clone)]
pub struct FlightOutput {
    pub rows: Vec<TelemetryRow>,
    pub report: RunReport,
    pub reference: ReferenceSequence,
}

/// Everything fixed for the duration of a run.
struct Plant {
    spec: EngineSpec,
    curve: ThrustCurve,
    layout: ThrusterLayout,
    inertia: InertiaModel,
}

fn plant(s: &Scenario) -> Result<Plant, ScenarioError> {
    let cfg = |e: String| ScenarioError::Config(e);
    let spec = calibrate_engine(&s.engine.spec(), s.engine.target_isp).map_err(|e| cfg(format!("[engine] {e}")))?;
    let curve = ThrustCurve::new(&spec, s.world.ambient_pressure).map_err(|e| cfg(format!("[engine] {e}")))?;
    let v = &s.vehicle;
    let layout = build_layout(v.alpha_deg.to_radians(), v.cant_deg.to_radians(), v.arm_radius, v.mount_height)
        .map_err(|e| cfg(format!("[vehicle] {e}")))?;
    let inertia = InertiaModel::homogeneous_box(v.wet_mass, v.body_dimensions);
    Ok(Plant {
        spec,
        curve,
        layout,
        inertia,
    })
}

/// Reference for the scenario's profile, checked against the vehicle limits.
pub fn reference_for(s: &Scenario) -> Result<ReferenceSequence, ScenarioError> {
    let seq = generate(&s.profile_params()).map_err(|e| ScenarioError::Config(format!("[profile] {e}")))?;
    seq.check_limits(&s.limits.limits(), s.world.gravity)
        .map_err(|e| ScenarioError::Config(format!("[profile] {e}")))?;
    Ok(seq)
}

fn steps_per(rate: f64, dt: f64) -> usize {
    (1.0 / (rate * dt)).round().max(1.0) as usize
}

/// Flies the scenario once. Configuration problems are errors; numerical
/// faults end the run and are recorded in the report.
pub fn fly(s: &Scenario) -> Result<FlightOutput, ScenarioError> {
    s.validate()?;
    let Plant {
        spec,
        curve,
        layout,
        inertia,
    } = plant(s)?;
    let reference = reference_for(s)?;
    let world = s.world;
    let g = world.gravity;
    let dt = s.sim.dt;
    let limits = s.limits.limits();
    let inner_every = steps_per(s.control.inner_rate, dt);
    let outer_every = steps_per(s.control.outer_rate, dt);

    let allocator = Allocator::new(&layout, curve, spec.min_impulse_bit, 1.0 / s.control.inner_rate)
        .map_err(|e| ScenarioError::Config(format!("[vehicle] {e}")))?;
    let mut controller = FlightController::new(s.control, limits, allocator, inertia, g)
        .map_err(|e| ScenarioError::Config(format!("[control] {e}")))?;
    let mut estimator = Estimator::new(s.estimator, seeded_rng(s.run.seed));

    let ground = world.ground_height;
    let end = reference.end();
    let pad = Vector3::new(end.position.x, end.position.y, ground);
    let dry_mass = s.vehicle.dry_mass();

    let mut state = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, ground), s.vehicle.wet_mass);
    let mut thrusters = [ThrusterState::default(); 4];
    let mut executors = [PulseExecutor::default(); 4];
    let mut saturated = false;
    let mut phase = FlightPhase::Idle;
    let mut lifted_off = false;
    let mut abort: Option<(AbortReason, Vector3<f64>)> = None;
    let mut fault: Option<String> = None;
    let mut specific_force = Vector3::new(0.0, 0.0, g);
    let mut rows = Vec::with_capacity(s.sim_config().max_steps().min(200_000));

    let max_steps = s.sim_config().max_steps();
    for k in 0..max_steps {
        let t = k as f64 * dt;
        let est = estimator.update(&state, &specific_force, dt);
        // Burns are commanded one valve time constant early so that the lagged
        // thrust lines up with the reference.
        let nominal = {
            let now = reference.sample(t);
            let lead = reference.sample(t + spec.valve_time_constant);
            ReferencePoint {
                acceleration: lead.acceleration,
                powered: lead.powered,
                ..now
            }
        };
        let exhausted = state.wet_mass <= dry_mass;

        let inputs = PhaseInputs {
            takeoff_commanded: k > 0,
            reference_phase: nominal.phase,
            touched_down: false,
            propellant_exhausted: exhausted,
            tilt: state.tilt(),
            altitude: state.position.z - ground,
        };
        if abort.is_none() {
            if let Some(reason) = crate::control::abort_reason(phase, &inputs) {
                abort = Some((reason, est.position));
            }
        }
        phase = match phase_machine_update(phase, &inputs) {
            Ok(p) => p,
            Err(e) => {
                fault = Some(e.to_string());
                break;
            }
        };

        let landing = t >= reference.duration() || abort.is_some();
        let target = match abort {
            Some((_, hold)) => hold,
            None => end.position,
        };
        let command_ref = if landing {
            ReferencePoint {
                t,
                position: Vector3::new(target.x, target.y, est.position.z),
                velocity: Vector3::zeros(),
                acceleration: Vector3::zeros(),
                phase: nominal.phase,
                powered: true,
            }
        } else {
            nominal
        };

        if k % outer_every == 0 {
            let next_burn = if command_ref.powered {
                None
            } else {
                reference.next_powered_accel(t)
            };
            controller.outer_update(&command_ref, next_burn, &est);
        }
        if k % inner_every == 0 {
            let mode = if landing {
                VerticalMode::Sink
            } else if command_ref.powered {
                VerticalMode::Track
            } else {
                VerticalMode::Coast
            };
            let out = controller.inner_update(&command_ref, mode, &est);
            for (exec, sched) in executors.iter_mut().zip(&out.allocation.schedules) {
                exec.load(sched, dt);
            }
            saturated = out.allocation.saturated;
        }

        let mut commands = [0.0; 4];
        let mut thrusts = [0.0; 4];
        for i in 0..4 {
            let c = executors[i].next_command(dt);
            commands[i] = if exhausted { 0.0 } else { c };
            thrusters[i] = valve_update(&thrusters[i], commands[i], dt, &spec);
            thrusts[i] = curve.thrust(thrusters[i].mean_flow);
        }
        let total_flow: f64 = thrusters.iter().map(|th| th.mean_flow).sum();
        let w = wrench(&layout, &thrusts);
        rows.push(record(t, phase, &state, &command_ref, &est, &commands, &thrusters, &thrusts, saturated));

        let x = state.to_array();
        let next = match rk4_step(|_, x| dynamics_derivative(x, &w, total_flow, &world, &inertia), t, &x, dt) {
            Ok(n) => n,
            Err(e) => {
                fault = Some(e.to_string());
                break;
            }
        };
        let mut next_state = RigidBodyState::from_array(&next);
        next_state.wet_mass = next_state.wet_mass.max(dry_mass.min(state.wet_mass));
        specific_force = world_specific_force(&state, &w);

        if !lifted_off {
            if next_state.position.z <= ground {
                // Resting on the pad: the ground carries the weight.
                next_state.position = state.position;
                next_state.velocity = Vector3::zeros();
                next_state.angular_rate = Vector3::zeros();
                next_state.attitude = state.attitude;
                specific_force = Vector3::new(0.0, 0.0, g);
            } else {
                lifted_off = true;
            }
        } else if next_state.position.z <= ground {
            if phase != FlightPhase::Abort {
                phase = match phase_machine_update(
                    phase,
                    &PhaseInputs {
                        touched_down: true,
                        ..inputs
                    },
                ) {
                    Ok(p) => p,
                    Err(e) => {
                        fault = Some(e.to_string());
                        break;
                    }
                };
            }
            let t_end = (k + 1) as f64 * dt;
            let est_end = estimator.estimate(&next_state);
            rows.push(record(
                t_end,
                phase,
                &next_state,
                &command_ref,
                &est_end,
                &[0.0; 4],
                &[ThrusterState::default(); 4],
                &[0.0; 4],
                false,
            ));
            break;
        }
        state = next_state;
    }

    let meta = RunMeta {
        name: s.run.name.clone(),
        profile: s.profile.kind,
        seed: s.run.seed,
        dt,
        pad: [pad.x, pad.y],
        touchdown_speed_limit: s.vehicle.touchdown_speed_limit,
        abort_reason: abort.map(|(r, _)| r),
        fault,
    };
    let report = compute_report(&rows, meta);
    Ok(FlightOutput {
        rows,
        report,
        reference,
    })
}

/// Non-gravitational acceleration in the world frame.
fn world_specific_force(state: &RigidBodyState, w: &Wrench) -> Vector3<f64> {
    state.attitude * w.force / state.wet_mass
}

#[allow(clippy::too_many_arguments)]
fn record(
    t: f64,
    phase: FlightPhase,
    s: &RigidBodyState,
    r: &ReferencePoint,
    est: &EstimatedState,
    commands: &[f64; 4],
    thrusters: &[ThrusterState; 4],
    thrusts: &[f64; 4],
    saturated: bool,
) -> TelemetryRow {
    let q = s.attitude.quaternion();
    let (roll, pitch, yaw) = s.euler();
    let flows = thrusters.map(|th| th.mean_flow);
    TelemetryRow {
        t,
        phase,
        x: s.position.x,
        y: s.position.y,
        z: s.position.z,
        vx: s.velocity.x,
        vy: s.velocity.y,
        vz: s.velocity.z,
        qw: q.w,
        qx: q.i,
        qy: q.j,
        qz: q.k,
        wx: s.angular_rate.x,
        wy: s.angular_rate.y,
        wz: s.angular_rate.z,
        mass: s.wet_mass,
        roll: roll.to_degrees(),
        pitch: pitch.to_degrees(),
        yaw: yaw.to_degrees(),
        ref_x: r.position.x,
        ref_y: r.position.y,
        ref_z: r.position.z,
        est_x: est.position.x,
        est_y: est.position.y,
        est_z: est.position.z,
        cmd1: commands[0],
        cmd2: commands[1],
        cmd3: commands[2],
        cmd4: commands[3],
        flow1: flows[0],
        flow2: flows[1],
        flow3: flows[2],
        flow4: flows[3],
        thrust1: thrusts[0],
        thrust2: thrusts[1],
        thrust3: thrusts[2],
        thrust4: thrusts[3],
        saturated,
    }
    .quantized()
}
