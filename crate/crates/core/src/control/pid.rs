use serde::{Deserialize, Serialize};

use super::ControlError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral_limit: f64,
    pub output_limit: f64,
    /// Weight of the previous derivative estimate, in `[0, 1)`.
    pub derivative_filter: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.0,
            ki: 0.0,
            kd: 0.0,
            integral_limit: 1.0,
            output_limit: f64::INFINITY,
            derivative_filter: 0.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let finite = [self.kp, self.ki, self.kd].iter().all(|g| g.is_finite() && *g >= 0.0);
        if !finite {
            return Err(ControlError::InvalidParameter("PID gains must be finite and non-negative".into()));
        }
        if !(self.integral_limit >= 0.0) || !(self.output_limit > 0.0) {
            return Err(ControlError::InvalidParameter("PID limits must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.derivative_filter) {
            return Err(ControlError::InvalidParameter("derivative_filter must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// PID with a clamped integral state and clamped output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidController {
    pub gains: PidGains,
    pub integral: f64,
    prev_error: Option<f64>,
    derivative: f64,
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_error: None,
            derivative: 0.0,
        }
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.gains);
    }

    /// Derivative taken on the low-pass filtered error difference.
    pub fn update(&mut self, error: f64, dt: f64) -> f64 {
        let raw = match self.prev_error {
            Some(prev) => (error - prev) / dt,
            None => 0.0,
        };
        self.prev_error = Some(error);
        let a = self.gains.derivative_filter;
        self.derivative = a * self.derivative + (1.0 - a) * raw;
        self.combine(error, self.derivative, dt)
    }

    /// Same law with a measured error rate in place of the differenced one.
    pub fn update_with_rate(&mut self, error: f64, error_rate: f64, dt: f64) -> f64 {
        self.prev_error = Some(error);
        self.derivative = error_rate;
        self.combine(error, error_rate, dt)
    }

    fn combine(&mut self, error: f64, rate: f64, dt: f64) -> f64 {
        let g = &self.gains;
        self.integral = (self.integral + error * dt).clamp(-g.integral_limit, g.integral_limit);
        let out = g.kp * error + g.ki * self.integral + g.kd * rate;
        out.clamp(-g.output_limit, g.output_limit)
    }
}

pub fn pid_update(controller: &mut PidController, error: f64, dt: f64) -> f64 {
    controller.update(error, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_only() {
        let mut c = PidController::new(PidGains::default());
        assert_eq!(pid_update(&mut c, 2.0, 0.01), 2.0);
    }

    #[test]
    fn integral_clamps() {
        let mut c = PidController::new(PidGains {
            kp: 0.0,
            ki: 1.0,
            integral_limit: 0.5,
            ..PidGains::default()
        });
        let mut last = 0.0;
        for k in 0..200 {
            let out = c.update(1.0, 0.01);
            assert!(out >= last);
            last = out;
            if k > 60 {
                assert_eq!(out, 0.5);
            }
        }
        assert_eq!(c.integral, 0.5);
        // Unwinds immediately once the error flips.
        let out = c.update(-1.0, 0.01);
        assert!(out < 0.5);
    }

    #[test]
    fn output_clamps() {
        let mut c = PidController::new(PidGains {
            kp: 100.0,
            output_limit: 3.0,
            ..PidGains::default()
        });
        assert_eq!(c.update(1.0, 0.01), 3.0);
        assert_eq!(c.update(-1.0, 0.01), -3.0);
    }

    #[test]
    fn derivative_of_ramp() {
        let mut c = PidController::new(PidGains {
            kp: 0.0,
            kd: 1.0,
            ..PidGains::default()
        });
        c.update(0.0, 0.1);
        let out = c.update(0.5, 0.1);
        assert!((out - 5.0).abs() < 1e-12);
    }

    #[test]
    fn filtered_derivative_lags() {
        let mut c = PidController::new(PidGains {
            kp: 0.0,
            kd: 1.0,
            derivative_filter: 0.5,
            ..PidGains::default()
        });
        c.update(0.0, 0.1);
        assert!((c.update(0.1, 0.1) - 0.5).abs() < 1e-12);
        assert!((c.update(0.2, 0.1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_gains() {
        assert!(PidGains { kp: -1.0, ..PidGains::default() }.validate().is_err());
        assert!(PidGains { derivative_filter: 1.0, ..PidGains::default() }.validate().is_err());
    }
}
