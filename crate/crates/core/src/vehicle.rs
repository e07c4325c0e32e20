//! Rigid-body drone with four canted thrusters, mass depletion and flat
//! ground contact.
//!
//! Frames: world is z-up with the ground plane at `z = 0`; body is x forward,
//! y left, z up. Attitude is the body→world rotation. The state position is
//! the centre of the foot plane, which the translational model treats as the
//! centre of mass.

use nalgebra::{Matrix3, Matrix4, UnitQuaternion, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::WorldModel;

pub const STATE_LEN: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("cant angle must lie in [0, 90) degrees, got {0:.3} rad")]
    InvalidCant(f64),
    #[error("invalid vehicle parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thruster {
    /// Mount point relative to the centre of mass, body frame, m.
    pub position: Vector3<f64>,
    /// Unit force direction on the vehicle (opposite to the exhaust).
    pub direction: Vector3<f64>,
}

/// Four thrusters at azimuths `alpha + k·90°` on a circle of `arm_radius`,
/// `mount_height` above the centre of mass.
///
/// Each force direction has an upward component `cos β` and a horizontal
/// component `sin β`. The horizontal part points inward (the exhaust leaves
/// down and outward) and is turned by [`HORIZONTAL_SKEW`] toward the
/// tangent, alternating in sense between neighbours, so thrusters 1 and 3
/// yaw the body one way and 2 and 4 the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThrusterLayout {
    pub thrusters: [Thruster; 4],
    pub alpha: f64,
    pub beta: f64,
    pub arm_radius: f64,
    pub mount_height: f64,
}

/// Angle between the inward radial and the horizontal force component.
pub const HORIZONTAL_SKEW: f64 = std::f64::consts::FRAC_PI_4;

/// Builds the layout; `beta` is the cant from the body z axis.
pub fn build_layout(
    alpha: f64,
    beta: f64,
    arm_radius: f64,
    mount_height: f64,
) -> Result<ThrusterLayout, VehicleError> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&beta) {
        return Err(VehicleError::InvalidCant(beta));
    }
    if !(arm_radius > 0.0) || !mount_height.is_finite() {
        return Err(VehicleError::InvalidParameter(format!(
            "arm radius must be positive, got {arm_radius}"
        )));
    }
    let thrusters = std::array::from_fn(|k| {
        let azimuth = alpha + k as f64 * std::f64::consts::FRAC_PI_2;
        let (s, c) = azimuth.sin_cos();
        let spin = if k % 2 == 0 { 1.0 } else { -1.0 };
        let inward = Vector3::new(-c, -s, 0.0);
        let tangential = Vector3::new(-s, c, 0.0);
        let (ks, kc) = HORIZONTAL_SKEW.sin_cos();
        let horizontal = inward * kc + tangential * (spin * ks);
        Thruster {
            position: Vector3::new(arm_radius * c, arm_radius * s, mount_height),
            direction: Vector3::z() * beta.cos() + horizontal * beta.sin(),
        }
    });
    Ok(ThrusterLayout {
        thrusters,
        alpha,
        beta,
        arm_radius,
        mount_height,
    })
}

/// Body-frame force and torque about the centre of mass.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

pub fn wrench(layout: &ThrusterLayout, thrusts: &[f64; 4]) -> Wrench {
    let mut w = Wrench::default();
    for (t, &f) in layout.thrusters.iter().zip(thrusts) {
        let force = t.direction * f;
        w.force += force;
        w.torque += t.position.cross(&force);
    }
    w
}

impl ThrusterLayout {
    /// Map from per-thruster thrust to `(F_z, τx, τy, τz)`.
    pub fn control_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for (j, t) in self.thrusters.iter().enumerate() {
            let torque = t.position.cross(&t.direction);
            m.set_column(j, &Vector4::new(t.direction.z, torque.x, torque.y, torque.z));
        }
        m
    }
}

/// Diagonal inertia of a homogeneous body, scaled in proportion to mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaModel {
    pub reference_mass: f64,
    /// kg·m² at `reference_mass`
    pub reference_diagonal: [f64; 3],
}

impl InertiaModel {
    /// Solid box of the given x, y, z dimensions.
    pub fn homogeneous_box(mass: f64, dims: [f64; 3]) -> Self {
        let [a, b, c] = dims;
        let k = mass / 12.0;
        Self {
            reference_mass: mass,
            reference_diagonal: [k * (b * b + c * c), k * (a * a + c * c), k * (a * a + b * b)],
        }
    }

    pub fn diagonal(&self, mass: f64) -> Vector3<f64> {
        Vector3::from(self.reference_diagonal) * (mass / self.reference_mass)
    }

    pub fn tensor(&self, mass: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.diagonal(mass))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidBodyState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
    /// Body frame, rad/s.
    pub angular_rate: Vector3<f64>,
    pub wet_mass: f64,
}

impl RigidBodyState {
    pub fn at_rest(position: Vector3<f64>, wet_mass: f64) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            attitude: UnitQuaternion::identity(),
            angular_rate: Vector3::zeros(),
            wet_mass,
        }
    }

    pub fn to_array(&self) -> [f64; STATE_LEN] {
        let q = self.attitude.quaternion();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
            q.w,
            q.i,
            q.j,
            q.k,
            self.angular_rate.x,
            self.angular_rate.y,
            self.angular_rate.z,
            self.wet_mass,
        ]
    }

    /// Rebuilds the state, renormalising the quaternion.
    pub fn from_array(x: &[f64; STATE_LEN]) -> Self {
        Self {
            position: Vector3::new(x[0], x[1], x[2]),
            velocity: Vector3::new(x[3], x[4], x[5]),
            attitude: UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(x[6], x[7], x[8], x[9])),
            angular_rate: Vector3::new(x[10], x[11], x[12]),
            wet_mass: x[13],
        }
    }

    /// Euler angles `(roll, pitch, yaw)`; see [`attitude_from_euler`].
    pub fn euler(&self) -> (f64, f64, f64) {
        euler_from_attitude(&self.attitude)
    }

    /// Nose-up-positive pitch, rad.
    pub fn pitch(&self) -> f64 {
        self.euler().1
    }

    /// Angle between body z and world z, rad.
    pub fn tilt(&self) -> f64 {
        let z = self.attitude * Vector3::z();
        z.z.clamp(-1.0, 1.0).acos()
    }
}

/// Attitude from roll, pitch and yaw.
///
/// `q = Rz(yaw)·Ry(−pitch)·Rx(roll)`, so a negative pitch leans the thrust
/// axis forward (+x) and a negative roll leans it to +y.
pub fn attitude_from_euler(roll: f64, pitch: f64, yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -pitch)
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), roll)
}

pub fn euler_from_attitude(q: &UnitQuaternion<f64>) -> (f64, f64, f64) {
    let r = q.to_rotation_matrix();
    let m = r.matrix();
    // R = Rz(ψ)·Ry(−θ)·Rx(φ); m[(2,0)] = sin θ.
    let pitch = m[(2, 0)].clamp(-1.0, 1.0).asin();
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    (roll, pitch, yaw)
}

/// Time derivative of the packed state under a constant body wrench.
///
/// `total_flow` is the propellant flow leaving the tanks, kg/s.
pub fn dynamics_derivative(
    x: &[f64; STATE_LEN],
    wrench: &Wrench,
    total_flow: f64,
    world: &WorldModel,
    inertia: &InertiaModel,
) -> [f64; STATE_LEN] {
    let q = nalgebra::Quaternion::new(x[6], x[7], x[8], x[9]);
    let unit = UnitQuaternion::new_unchecked(q);
    let mass = x[13];
    let omega = Vector3::new(x[10], x[11], x[12]);

    let accel = unit * wrench.force / mass - Vector3::z() * world.gravity;
    let qdot = q * nalgebra::Quaternion::from_imag(omega) * 0.5;
    let diag = inertia.diagonal(mass);
    let i_omega = diag.component_mul(&omega);
    let alpha = (wrench.torque - omega.cross(&i_omega)).component_div(&diag);

    [
        x[3], x[4], x[5], accel.x, accel.y, accel.z, qdot.w, qdot.i, qdot.j, qdot.k, alpha.x, alpha.y,
        alpha.z, -total_flow,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub touched: bool,
    /// Horizontal distance from the pad centre, m.
    pub position_error: f64,
    /// Downward speed at contact, m/s.
    pub vertical_speed: f64,
    pub hard: bool,
}

/// Checks whether the foot plane has reached the ground.
pub fn touchdown_check(
    state: &RigidBodyState,
    pad: &Vector3<f64>,
    ground_height: f64,
    speed_limit: f64,
) -> ContactReport {
    let touched = state.position.z <= ground_height;
    let dx = state.position.x - pad.x;
    let dy = state.position.y - pad.y;
    let vertical_speed = (-state.velocity.z).max(0.0);
    ContactReport {
        touched,
        position_error: dx.hypot(dy),
        vertical_speed,
        hard: touched && vertical_speed > speed_limit,
    }
}
