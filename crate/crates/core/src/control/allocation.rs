//! Mapping of force and torque demands onto the four thrusters.

use nalgebra::{Matrix4, Vector3, Vector4};

use super::ControlError;
use crate::propulsion::{pulse_modulate, PulseSchedule, ThrustCurve};
use crate::vehicle::ThrusterLayout;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    /// Mean thrust per thruster after limiting, N.
    pub thrusts: [f64; 4],
    pub schedules: [PulseSchedule; 4],
    /// The demand could not be met exactly.
    pub saturated: bool,
}

impl Allocation {
    pub fn flows(&self) -> [f64; 4] {
        self.schedules.map(|s| s.flow)
    }

    /// Mean thrust each schedule delivers over its period.
    pub fn delivered(&self) -> [f64; 4] {
        self.schedules.map(|s| s.mean_thrust())
    }
}

/// Precomputed allocation law for one layout and engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocator {
    pub matrix: Matrix4<f64>,
    inverse: Matrix4<f64>,
    /// Thrust pattern producing a unit vertical force and no torque.
    collective: Vector4<f64>,
    pub curve: ThrustCurve,
    pub min_impulse_bit: f64,
    pub period: f64,
}

impl Allocator {
    pub fn new(
        layout: &ThrusterLayout,
        curve: ThrustCurve,
        min_impulse_bit: f64,
        period: f64,
    ) -> Result<Self, ControlError> {
        let matrix = layout.control_matrix();
        let inverse = matrix.try_inverse().ok_or(ControlError::SingularLayout)?;
        let collective = inverse * Vector4::new(1.0, 0.0, 0.0, 0.0);
        if collective.iter().any(|c| *c <= 0.0) {
            return Err(ControlError::SingularLayout);
        }
        if !(period > 0.0) {
            return Err(ControlError::InvalidParameter(format!("control period must be positive, got {period}")));
        }
        Ok(Self {
            matrix,
            inverse,
            collective,
            curve,
            min_impulse_bit,
            period,
        })
    }

    /// Torque has priority over the collective: when a thrust would go
    /// negative the collective is raised, when one would exceed the maximum
    /// it is lowered; what is still out of range is clipped.
    pub fn allocate(&self, vertical_force: f64, torque: Vector3<f64>) -> Allocation {
        let demand = Vector4::new(vertical_force, torque.x, torque.y, torque.z);
        let f_max = self.curve.max_thrust();
        let mut f = self.inverse * demand;

        let shift_up = (0..4).map(|i| -f[i] / self.collective[i]).fold(0.0, f64::max);
        f += self.collective * shift_up;
        let shift_down = (0..4).map(|i| (f_max - f[i]) / self.collective[i]).fold(0.0, f64::min);
        f += self.collective * shift_down;
        let thrusts: [f64; 4] = std::array::from_fn(|i| f[i].clamp(0.0, f_max));

        let achieved = self.matrix * Vector4::from(thrusts);
        let saturated = (0..4).any(|i| (achieved[i] - demand[i]).abs() > 1e-9 * (1.0 + demand[i].abs()));
        let schedules = thrusts.map(|t| pulse_modulate(t, self.period, &self.curve, self.min_impulse_bit));
        Allocation {
            thrusts,
            schedules,
            saturated,
        }
    }
}

/// One-shot allocation; builds the allocator on every call.
pub fn allocate(
    vertical_force: f64,
    torque: Vector3<f64>,
    layout: &ThrusterLayout,
    curve: &ThrustCurve,
    min_impulse_bit: f64,
    period: f64,
) -> Result<Allocation, ControlError> {
    Ok(Allocator::new(layout, *curve, min_impulse_bit, period)?.allocate(vertical_force, torque))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propulsion::{calibrate_engine, EngineSpec, PulseExecutor, DEFAULT_TARGET_ISP};
    use crate::vehicle::{build_layout, wrench};
    use std::f64::consts::FRAC_PI_4;

    fn setup() -> (ThrusterLayout, Allocator) {
        let spec = calibrate_engine(&EngineSpec::calibrated_default(), DEFAULT_TARGET_ISP).unwrap();
        let curve = ThrustCurve::new(&spec, 0.0).unwrap();
        let layout = build_layout(FRAC_PI_4, FRAC_PI_4, 0.2, 0.189).unwrap();
        let alloc = Allocator::new(&layout, curve, spec.min_impulse_bit, 0.01).unwrap();
        (layout, alloc)
    }

    #[test]
    fn symmetric_demand_gives_equal_thrusts() {
        let (_, a) = setup();
        let f = 20.0;
        let out = a.allocate(4.0 * f * FRAC_PI_4.cos(), Vector3::zeros());
        for t in out.thrusts {
            assert!((t - f).abs() < 1e-9);
        }
        assert!(!out.saturated);
    }

    #[test]
    fn pure_yaw_is_antisymmetric() {
        let (layout, a) = setup();
        let fz = 4.0 * 20.0 * FRAC_PI_4.cos();
        let out = a.allocate(fz, Vector3::new(0.0, 0.0, 0.8));
        let d: Vec<f64> = out.thrusts.iter().map(|t| t - 20.0).collect();
        assert!(d[0] > 0.0 && d[1] < 0.0 && d[2] > 0.0 && d[3] < 0.0, "{d:?}");
        // Checked through the independent wrench evaluation.
        let w = wrench(&layout, &out.thrusts);
        assert!((w.force.z - fz).abs() < 1e-9);
        assert!((w.torque.z - 0.8).abs() < 1e-9);
        assert!(w.torque.x.abs() < 1e-9 && w.torque.y.abs() < 1e-9);
    }

    #[test]
    fn hover_needs_duty_cycling() {
        let (layout, a) = setup();
        let weight = 15.0 * 1.62;
        let min_collective = 4.0 * a.curve.min_thrust() * FRAC_PI_4.cos();
        assert!(min_collective > weight, "{min_collective}");
        let out = a.allocate(weight, Vector3::zeros());
        assert!(out.schedules.iter().all(|s| !s.is_continuous() && s.on_time > 0.0));

        // Execute a few periods on a 5 ms grid and average the vertical force.
        let dt = 0.005;
        let mut execs = [PulseExecutor::default(); 4];
        let mut impulse = 0.0;
        let periods = 40;
        for _ in 0..periods {
            for (e, s) in execs.iter_mut().zip(&out.schedules) {
                e.load(s, dt);
            }
            for _ in 0..2 {
                let thrusts: [f64; 4] = std::array::from_fn(|i| a.curve.thrust(execs[i].next_command(dt)));
                impulse += wrench(&layout, &thrusts).force.z * dt;
            }
        }
        let mean = impulse / (periods as f64 * 0.01);
        assert!((mean - weight).abs() / weight < 0.10, "mean {mean}");
    }

    #[test]
    fn thrusts_stay_in_range() {
        let (_, a) = setup();
        let f_max = a.curve.max_thrust();
        for (fz, tq) in [
            (0.0, Vector3::new(0.5, 0.0, 0.0)),
            (500.0, Vector3::zeros()),
            (100.0, Vector3::new(0.0, 5.0, -3.0)),
            (-10.0, Vector3::new(0.0, 0.0, 0.0)),
        ] {
            let out = a.allocate(fz, tq);
            assert!(out.thrusts.iter().all(|t| (0.0..=f_max).contains(t)));
            assert!(out.flows().iter().all(|q| (0.0..=a.curve.flow_max).contains(q)));
        }
        assert!(a.allocate(500.0, Vector3::zeros()).saturated);
    }

    #[test]
    fn torque_kept_when_collective_is_raised() {
        let (layout, a) = setup();
        let tq = Vector3::new(0.3, -0.2, 0.0);
        let out = a.allocate(0.0, tq);
        assert!(out.saturated);
        let w = wrench(&layout, &out.thrusts);
        assert!((w.torque - tq).norm() < 1e-9);
        assert!(out.thrusts.contains(&0.0));
    }

    #[test]
    fn free_function_matches() {
        let (layout, a) = setup();
        let out = allocate(40.0, Vector3::new(0.1, 0.0, 0.0), &layout, &a.curve, a.min_impulse_bit, 0.01).unwrap();
        assert_eq!(out, a.allocate(40.0, Vector3::new(0.1, 0.0, 0.0)));
    }
}
