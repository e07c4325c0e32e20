//! Lumped gray-body thermal model: one node radiating to a cold sink.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::rk4_step;

/// W/(m²·K⁴)
pub const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error("invalid thermal body: {0}")]
    InvalidBody(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("non-finite temperature at t = {0} s")]
    NonFinite(f64),
    #[error("cannot read component limits: {0}")]
    Limits(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalBody {
    /// kg
    pub mass: f64,
    /// J/(kg·K)
    pub heat_capacity: f64,
    /// m²
    pub surface_area: f64,
    pub emissivity: f64,
    /// Equal to the emissivity for a gray body.
    pub absorptivity: f64,
    /// K
    pub sink_temperature: f64,
    /// K
    pub initial_temperature: f64,
}

impl Default for ThermalBody {
    fn default() -> Self {
        Self {
            mass: 15.0,
            heat_capacity: 900.0,
            surface_area: 1.021,
            emissivity: 0.8,
            absorptivity: 0.8,
            sink_temperature: 4.0,
            initial_temperature: 278.15,
        }
    }
}

impl ThermalBody {
    pub fn with_emissivity(self, e: f64) -> Self {
        Self {
            emissivity: e,
            absorptivity: e,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        for (name, v) in [
            ("mass", self.mass),
            ("heat_capacity", self.heat_capacity),
            ("surface_area", self.surface_area),
            ("sink_temperature", self.sink_temperature),
            ("initial_temperature", self.initial_temperature),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ThermalError::InvalidBody(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("emissivity", self.emissivity), ("absorptivity", self.absorptivity)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ThermalError::InvalidBody(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// J/K
    pub fn capacitance(&self) -> f64 {
        self.mass * self.heat_capacity
    }
}

/// Net radiated power, W; positive when the body is warmer than the sink.
pub fn radiated_power(temperature: f64, body: &ThermalBody) -> f64 {
    body.emissivity * STEFAN_BOLTZMANN * body.surface_area * (temperature.powi(4) - body.sink_temperature.powi(4))
}

/// dT/dt under a constant heat load `q_gen`, K/s.
pub fn temperature_rate(temperature: f64, body: &ThermalBody, q_gen: f64) -> f64 {
    (q_gen - radiated_power(temperature, body)) / body.capacitance()
}

/// One RK4 step of the energy balance.
pub fn temperature_step(temperature: f64, body: &ThermalBody, q_gen: f64, dt: f64) -> Result<f64, ThermalError> {
    let out = rk4_step(|_, x: &[f64; 1]| [temperature_rate(x[0], body, q_gen)], 0.0, &[temperature], dt)
        .map_err(|_| ThermalError::NonFinite(dt))?;
    Ok(out[0])
}

/// Temperature history from the initial temperature, `(t, T)` at every step.
pub fn temperature_history(
    body: &ThermalBody,
    q_gen: f64,
    elapsed: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>, ThermalError> {
    if !(dt > 0.0) || !(elapsed >= 0.0) {
        return Err(ThermalError::InvalidSweep(format!("need dt > 0 and elapsed >= 0, got {dt}, {elapsed}")));
    }
    let steps = (elapsed / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut temp = body.initial_temperature;
    out.push((0.0, temp));
    for k in 0..steps {
        temp = temperature_step(temp, body, q_gen, dt)?;
        if !temp.is_finite() {
            return Err(ThermalError::NonFinite((k + 1) as f64 * dt));
        }
        out.push(((k + 1) as f64 * dt, temp));
    }
    Ok(out)
}

/// Temperature after `elapsed` seconds.
pub fn temperature_after(body: &ThermalBody, q_gen: f64, elapsed: f64, dt: f64) -> Result<f64, ThermalError> {
    Ok(temperature_history(body, q_gen, elapsed, dt)?.last().map(|p| p.1).unwrap_or(body.initial_temperature))
}

/// Closed-form steady state of the energy balance, K.
pub fn equilibrium_temperature(q_gen: f64, body: &ThermalBody) -> f64 {
    (q_gen / (body.emissivity * STEFAN_BOLTZMANN * body.surface_area) + body.sink_temperature.powi(4)).powf(0.25)
}

/// Linearised time constant about `temperature`, s.
pub fn time_constant(body: &ThermalBody, temperature: f64) -> f64 {
    body.capacitance() / (4.0 * body.emissivity * STEFAN_BOLTZMANN * body.surface_area * temperature.powi(3))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// W, one row per value
    pub heat_loads: Vec<f64>,
    /// one column per value
    pub emissivities: Vec<f64>,
    pub elapsed: f64,
    /// K, temperature change after `elapsed`
    pub delta_t: Vec<Vec<f64>>,
    /// K
    pub equilibrium: Vec<Vec<f64>>,
}

pub fn thermal_sweep(
    heat_loads: &[f64],
    emissivities: &[f64],
    elapsed: f64,
    dt: f64,
    body: &ThermalBody,
) -> Result<SweepResult, ThermalError> {
    if heat_loads.is_empty() || emissivities.is_empty() {
        return Err(ThermalError::InvalidSweep("grids must be non-empty".into()));
    }
    if heat_loads.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
        return Err(ThermalError::InvalidSweep("heat loads must be non-negative".into()));
    }
    for &e in emissivities {
        body.with_emissivity(e).validate()?;
    }
    body.validate()?;
    let rows: Result<Vec<(Vec<f64>, Vec<f64>)>, ThermalError> = heat_loads
        .par_iter()
        .map(|&q| {
            let mut dts = Vec::with_capacity(emissivities.len());
            let mut eqs = Vec::with_capacity(emissivities.len());
            for &e in emissivities {
                let b = body.with_emissivity(e);
                dts.push(temperature_after(&b, q, elapsed, dt)? - b.initial_temperature);
                eqs.push(equilibrium_temperature(q, &b));
            }
            Ok((dts, eqs))
        })
        .collect();
    let (delta_t, equilibrium) = rows?.into_iter().unzip();
    Ok(SweepResult {
        heat_loads: heat_loads.to_vec(),
        emissivities: emissivities.to_vec(),
        elapsed,
        delta_t,
        equilibrium,
    })
}

impl SweepResult {
    /// Matrix as CSV: the header carries the emissivities, the first column
    /// the heat loads.
    pub fn matrix_csv(&self, matrix: &[Vec<f64>]) -> String {
        let mut out = String::from("q_gen_w");
        for e in &self.emissivities {
            out.push_str(&format!(",{e}"));
        }
        out.push('\n');
        for (q, row) in self.heat_loads.iter().zip(matrix) {
            out.push_str(&format!("{q}"));
            for v in row {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, q_gen: f64, emissivity: f64) -> Option<(f64, f64)> {
        let i = self.heat_loads.iter().position(|q| (q - q_gen).abs() < 1e-9)?;
        let j = self.emissivities.iter().position(|e| (e - emissivity).abs() < 1e-9)?;
        Some((self.delta_t[i][j], self.equilibrium[i][j]))
    }
}

/// Inclusive linear grid.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).map(|v| (v * 1e9).round() / 1e9).collect()
}

/// Operating range of one component, °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentLimit {
    pub subsystem: String,
    pub component: String,
    pub min_c: Option<f64>,
    pub max_c: Option<f64>,
}

pub fn load_component_limits(path: &Path) -> Result<Vec<ComponentLimit>, ThermalError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| ThermalError::Limits(e.to_string()))?;
    rdr.deserialize()
        .map(|r| r.map_err(|e: csv::Error| ThermalError::Limits(e.to_string())))
        .collect()
}

/// Components whose upper limit lies below `temperature_k`.
pub fn components_exceeded(limits: &[ComponentLimit], temperature_k: f64) -> Vec<&ComponentLimit> {
    let c = temperature_k - 273.15;
    limits.iter().filter(|l| l.max_c.is_some_and(|m| c > m)).collect()
}
