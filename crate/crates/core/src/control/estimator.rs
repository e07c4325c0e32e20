//! Dead-reckoning state estimator with optional IMU error model.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::sim::{SimRng, STANDARD_GRAVITY};
use crate::vehicle::RigidBodyState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    Ideal,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    /// 1σ per-axis gyro bias, deg/h.
    pub gyro_bias: f64,
    /// deg/√h
    pub angle_random_walk: f64,
    /// 1σ per-axis accelerometer bias, mg.
    pub accel_bias: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            mode: EstimatorMode::Ideal,
            gyro_bias: 0.3,
            angle_random_walk: 0.15,
            accel_bias: 0.05,
        }
    }
}

impl EstimatorConfig {
    pub fn noisy() -> Self {
        Self {
            mode: EstimatorMode::Noisy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, v) in [
            ("gyro_bias", self.gyro_bias),
            ("angle_random_walk", self.angle_random_walk),
            ("accel_bias", self.accel_bias),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ControlError::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Gyro bias σ in rad/s.
    pub fn gyro_bias_si(&self) -> f64 {
        self.gyro_bias.to_radians() / 3600.0
    }

    /// Angle random walk in rad/√s.
    pub fn angle_random_walk_si(&self) -> f64 {
        self.angle_random_walk.to_radians() / 60.0
    }

    /// Accelerometer bias σ in m/s².
    pub fn accel_bias_si(&self) -> f64 {
        self.accel_bias * 1e-3 * STANDARD_GRAVITY
    }
}

/// What the controller sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
    pub angular_rate: Vector3<f64>,
    pub mass: f64,
}

impl EstimatedState {
    pub fn from_truth(s: &RigidBodyState) -> Self {
        Self {
            position: s.position,
            velocity: s.velocity,
            attitude: s.attitude,
            angular_rate: s.angular_rate,
            mass: s.wet_mass,
        }
    }
}

/// Error state of the strapdown solution, propagated alongside the truth.
///
/// Biases are drawn once per run from zero-mean normals; the attitude error
/// integrates gyro bias plus angle random walk, and the velocity error
/// integrates the accelerometer bias plus the specific force projected
/// through the attitude error.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub config: EstimatorConfig,
    rng: SimRng,
    gyro_bias: Vector3<f64>,
    accel_bias: Vector3<f64>,
    attitude_error: Vector3<f64>,
    velocity_error: Vector3<f64>,
    position_error: Vector3<f64>,
}

impl Estimator {
    pub fn new(config: EstimatorConfig, mut rng: SimRng) -> Self {
        let (gyro_bias, accel_bias) = match config.mode {
            EstimatorMode::Ideal => (Vector3::zeros(), Vector3::zeros()),
            EstimatorMode::Noisy => {
                let g = config.gyro_bias_si();
                let a = config.accel_bias_si();
                let gb = Vector3::new(rng.normal(), rng.normal(), rng.normal()) * g;
                let ab = Vector3::new(rng.normal(), rng.normal(), rng.normal()) * a;
                (gb, ab)
            }
        };
        Self {
            config,
            rng,
            gyro_bias,
            accel_bias,
            attitude_error: Vector3::zeros(),
            velocity_error: Vector3::zeros(),
            position_error: Vector3::zeros(),
        }
    }

    pub fn attitude_error(&self) -> Vector3<f64> {
        self.attitude_error
    }

    pub fn position_error(&self) -> Vector3<f64> {
        self.position_error
    }

    pub fn estimate(&self, truth: &RigidBodyState) -> EstimatedState {
        let mut est = EstimatedState::from_truth(truth);
        if self.config.mode == EstimatorMode::Ideal {
            return est;
        }
        est.position += self.position_error;
        est.velocity += self.velocity_error;
        if self.attitude_error != Vector3::zeros() {
            est.attitude = UnitQuaternion::from_scaled_axis(self.attitude_error) * truth.attitude;
        }
        est.angular_rate += self.gyro_bias;
        est
    }

    /// Advances the error state by `dt` given the true specific force (world
    /// frame, m/s²) acting over the step, then returns the estimate.
    pub fn update(&mut self, truth: &RigidBodyState, specific_force: &Vector3<f64>, dt: f64) -> EstimatedState {
        if self.config.mode == EstimatorMode::Noisy {
            let arw = self.config.angle_random_walk_si();
            let walk = Vector3::new(self.rng.normal(), self.rng.normal(), self.rng.normal()) * (arw * dt.sqrt());
            let body_to_world = truth.attitude;
            self.position_error += self.velocity_error * dt;
            let force_error = self.attitude_error.cross(specific_force) + body_to_world * self.accel_bias;
            self.position_error += force_error * (0.5 * dt * dt);
            self.velocity_error += force_error * dt;
            self.attitude_error += body_to_world * self.gyro_bias * dt + walk;
        }
        self.estimate(truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::seeded_rng;

    fn moving_state() -> RigidBodyState {
        let mut s = RigidBodyState::at_rest(Vector3::new(1.0, 2.0, 30.0), 14.0);
        s.velocity = Vector3::new(5.0, 0.0, -1.0);
        s.angular_rate = Vector3::new(0.01, -0.02, 0.0);
        s
    }

    #[test]
    fn ideal_is_truth() {
        let mut e = Estimator::new(EstimatorConfig::default(), seeded_rng(1));
        let s = moving_state();
        for _ in 0..100 {
            let est = e.update(&s, &Vector3::new(0.5, 0.0, 1.62), 0.005);
            assert_eq!(est, EstimatedState::from_truth(&s));
        }
    }

    #[test]
    fn zero_noise_is_truth() {
        let cfg = EstimatorConfig {
            mode: EstimatorMode::Noisy,
            gyro_bias: 0.0,
            angle_random_walk: 0.0,
            accel_bias: 0.0,
        };
        let mut e = Estimator::new(cfg, seeded_rng(2));
        let s = moving_state();
        for _ in 0..100 {
            let est = e.update(&s, &Vector3::new(0.5, 0.0, 1.62), 0.005);
            assert_eq!(est, EstimatedState::from_truth(&s));
        }
    }

    #[test]
    fn angle_random_walk_matches_variance() {
        // Walk only: per-axis σ(t) = N·√t.
        let cfg = EstimatorConfig {
            mode: EstimatorMode::Noisy,
            gyro_bias: 0.0,
            angle_random_walk: 0.15,
            accel_bias: 0.0,
        };
        let t_end = 140.0;
        let dt = 0.05;
        let steps = (t_end / dt) as usize;
        let s = RigidBodyState::at_rest(Vector3::zeros(), 15.0);
        let runs = 100;
        let mut sum_sq = 0.0;
        for r in 0..runs {
            let mut e = Estimator::new(cfg, seeded_rng(1000 + r));
            for _ in 0..steps {
                e.update(&s, &Vector3::zeros(), dt);
            }
            sum_sq += e.attitude_error().norm_squared() / 3.0;
        }
        let rms = (sum_sq / runs as f64).sqrt().to_degrees();
        let expected = 0.15 * (t_end / 3600.0).sqrt();
        assert!((expected - 0.0296).abs() < 5e-4);
        assert!((rms - expected).abs() / expected < 0.3, "rms {rms} expected {expected}");
    }

    #[test]
    fn accel_bias_drift_is_quadratic() {
        let cfg = EstimatorConfig {
            mode: EstimatorMode::Noisy,
            gyro_bias: 0.0,
            angle_random_walk: 0.0,
            accel_bias: 0.05,
        };
        let s = RigidBodyState::at_rest(Vector3::zeros(), 15.0);
        let mut e = Estimator::new(cfg, seeded_rng(9));
        let bias = e.accel_bias;
        let dt = 0.01;
        for _ in 0..2000 {
            e.update(&s, &Vector3::zeros(), dt);
        }
        let expected = bias * (0.5 * 20.0 * 20.0);
        assert!((e.position_error() - expected).norm() < 1e-9 * (1.0 + expected.norm()));
    }

    #[test]
    fn same_seed_same_errors() {
        let s = moving_state();
        let run = |seed| {
            let mut e = Estimator::new(EstimatorConfig::noisy(), seeded_rng(seed));
            for _ in 0..500 {
                e.update(&s, &Vector3::new(0.0, 0.0, 1.62), 0.005);
            }
            e.position_error()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }
}
