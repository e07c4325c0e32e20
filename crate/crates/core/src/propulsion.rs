//! Monopropellant thruster model.
//!
//! Ideal isentropic nozzle flow closed by a choked-throat chamber relation,
//! a first-order valve lag between commanded and delivered propellant flow,
//! and on/off pulse modulation for thrust requests below the minimum
//! continuous level.
//!
//! Under the choked closure chamber pressure is proportional to flow, so the
//! exit Mach number, exit temperature and exhaust velocity depend only on
//! geometry and the gas, and thrust is affine in flow. [`ThrustCurve`]
//! caches that affine map so the simulation loop never re-solves the nozzle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::STANDARD_GRAVITY;

/// Default specific gas constant of the decomposition products, J/(kg·K).
pub const DEFAULT_GAS_CONSTANT: f64 = 285.0;

/// Default calibration target for vacuum specific impulse, s.
pub const DEFAULT_TARGET_ISP: f64 = 231.5;

/// Accepted calibration band for vacuum specific impulse, s.
pub const ISP_BAND: (f64, f64) = (228.0, 235.0);

const MAX_EFFICIENCY: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropulsionError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("exit Mach solver did not converge for area ratio {area_ratio} and gamma {gamma}")]
    NonConvergence { area_ratio: f64, gamma: f64 },
    #[error("invalid engine spec: {0}")]
    InvalidSpec(String),
    #[error(
        "calibration needs thrust efficiency {required:.4} (ideal vacuum ISP {ideal_isp:.2} s, target {target_isp:.2} s)"
    )]
    Calibration {
        ideal_isp: f64,
        target_isp: f64,
        required: f64,
    },
}

/// How chamber pressure follows flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum ChamberModel {
    /// `Pc = ṁ·c*/A*`.
    #[default]
    ChokedFlow,
    /// Constant chamber pressure whenever the valve passes flow.
    Fixed { pressure: f64 },
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSpec {
    pub gamma: f64,
    /// K
    pub chamber_temperature: f64,
    /// m
    pub throat_diameter: f64,
    /// m
    pub exit_diameter: f64,
    /// J/(kg·K)
    pub gas_constant: f64,
    /// kg/s
    pub flow_min: f64,
    /// kg/s
    pub flow_max: f64,
    /// s
    pub valve_time_constant: f64,
    /// N·s
    pub min_impulse_bit: f64,
    pub thrust_efficiency: f64,
    pub chamber_model: ChamberModel,
}

impl Default for EngineSpec {
    fn default() -> Self {
        Self {
            gamma: 1.25,
            chamber_temperature: 2800.0,
            throat_diameter: 4.25e-3,
            exit_diameter: 34e-3,
            gas_constant: DEFAULT_GAS_CONSTANT,
            flow_min: 4.1e-3,
            flow_max: 14.0e-3,
            valve_time_constant: 0.090,
            min_impulse_bit: 0.015,
            thrust_efficiency: 1.0,
            chamber_model: ChamberModel::ChokedFlow,
        }
    }
}

impl EngineSpec {
    /// Default engine calibrated to the default vacuum ISP target.
    pub fn calibrated_default() -> Self {
        calibrate_engine(&Self::default(), DEFAULT_TARGET_ISP)
            .expect("default engine calibrates inside the efficiency bound")
    }

    pub fn validate(&self) -> Result<(), PropulsionError> {
        let bad = |msg: String| Err(PropulsionError::InvalidSpec(msg));
        if !(self.gamma > 1.0) {
            return bad(format!("gamma must exceed 1, got {}", self.gamma));
        }
        if !(self.throat_diameter > 0.0) || !(self.exit_diameter > self.throat_diameter) {
            return bad(format!(
                "need 0 < throat diameter < exit diameter, got {} / {}",
                self.throat_diameter, self.exit_diameter
            ));
        }
        if !(self.chamber_temperature > 0.0) || !(self.gas_constant > 0.0) {
            return bad("chamber temperature and gas constant must be positive".into());
        }
        if !(self.flow_min > 0.0) || !(self.flow_min < self.flow_max) {
            return bad(format!(
                "need 0 < flow_min < flow_max, got {} / {}",
                self.flow_min, self.flow_max
            ));
        }
        if !(self.valve_time_constant > 0.0) {
            return bad("valve time constant must be positive".into());
        }
        if !(self.min_impulse_bit > 0.0) {
            return bad("minimum impulse bit must be positive".into());
        }
        if !(self.thrust_efficiency > 0.0 && self.thrust_efficiency <= MAX_EFFICIENCY) {
            return bad(format!(
                "thrust efficiency must lie in (0, {MAX_EFFICIENCY}], got {}",
                self.thrust_efficiency
            ));
        }
        if let ChamberModel::Fixed { pressure } = self.chamber_model {
            if !(pressure > 0.0) {
                return bad("fixed chamber pressure must be positive".into());
            }
        }
        Ok(())
    }

    /// m²
    pub fn throat_area(&self) -> f64 {
        circle_area(self.throat_diameter)
    }

    /// m²
    pub fn exit_area(&self) -> f64 {
        circle_area(self.exit_diameter)
    }
}

fn circle_area(d: f64) -> f64 {
    0.25 * std::f64::consts::PI * d * d
}

/// Nozzle exit-to-throat area ratio.
pub fn area_ratio(spec: &EngineSpec) -> f64 {
    let r = spec.exit_diameter / spec.throat_diameter;
    r * r
}

/// Isentropic area ratio `A/A*` reached at Mach `mach`.
pub fn area_ratio_at_mach(mach: f64, gamma: f64) -> f64 {
    let e = (gamma + 1.0) / (2.0 * (gamma - 1.0));
    let k = 0.5 * (gamma - 1.0);
    (0.5 * (gamma + 1.0)).powf(-e) * (1.0 + k * mach * mach).powf(e) / mach
}

/// Supersonic exit Mach number for a given area ratio.
///
/// Safeguarded Newton iteration on `ln(A/A*)`, kept inside a bisection
/// bracket so it cannot leave the supersonic branch.
pub fn solve_exit_mach(area_ratio: f64, gamma: f64) -> Result<f64, PropulsionError> {
    if !(area_ratio >= 1.0) || !area_ratio.is_finite() {
        return Err(PropulsionError::Domain(format!(
            "area ratio must be >= 1, got {area_ratio}"
        )));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(PropulsionError::Domain(format!(
            "gamma must exceed 1, got {gamma}"
        )));
    }
    if area_ratio == 1.0 {
        return Ok(1.0);
    }

    let target = area_ratio.ln();
    let residual = |m: f64| area_ratio_at_mach(m, gamma).ln() - target;
    let e = (gamma + 1.0) / (2.0 * (gamma - 1.0));
    let k = 0.5 * (gamma - 1.0);
    let slope = |m: f64| 2.0 * e * k * m / (1.0 + k * m * m) - 1.0 / m;

    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut expansions = 0;
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 64 {
            return Err(PropulsionError::NonConvergence { area_ratio, gamma });
        }
    }

    let mut m = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = residual(m);
        if r.abs() < 1e-15 {
            return Ok(m);
        }
        if r < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
        let newton = m - r / slope(m);
        m = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * hi {
            return Ok(m);
        }
    }
    let r = residual(m);
    if r.abs() < 1e-12 {
        Ok(m)
    } else {
        Err(PropulsionError::NonConvergence { area_ratio, gamma })
    }
}

/// `Γ(γ) = √γ·(2/(γ+1))^((γ+1)/(2(γ−1)))`
pub fn vandenkerckhove(gamma: f64) -> f64 {
    gamma.sqrt() * (2.0 / (gamma + 1.0)).powf((gamma + 1.0) / (2.0 * (gamma - 1.0)))
}

/// Characteristic velocity `c* = √(R·Tc)/Γ`, m/s.
pub fn characteristic_velocity(spec: &EngineSpec) -> f64 {
    (spec.gas_constant * spec.chamber_temperature).sqrt() / vandenkerckhove(spec.gamma)
}

/// Where a requested flow sat relative to the operating band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowWarning {
    /// Negative request, clamped to zero.
    Negative,
    /// Between zero and `flow_min`: valve transient, evaluated as-is.
    BelowBand,
    /// Above `flow_max`, clamped to `flow_max`.
    AboveBand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamberPressure {
    /// Pa
    pub pressure: f64,
    /// Flow actually used after clamping, kg/s.
    pub flow: f64,
    pub warning: Option<FlowWarning>,
}

/// Chamber pressure for a propellant flow.
///
/// Flows above `flow_max` are clamped and flagged. Flows between zero and
/// `flow_min` occur while the valve opens or closes; they are evaluated on
/// the same closure and flagged, not clamped.
pub fn chamber_pressure(mdot: f64, spec: &EngineSpec) -> ChamberPressure {
    let (flow, warning) = if mdot < 0.0 {
        (0.0, Some(FlowWarning::Negative))
    } else if mdot > spec.flow_max {
        (spec.flow_max, Some(FlowWarning::AboveBand))
    } else if mdot > 0.0 && mdot < spec.flow_min {
        (mdot, Some(FlowWarning::BelowBand))
    } else {
        (mdot, None)
    };
    let pressure = if flow == 0.0 {
        0.0
    } else {
        match spec.chamber_model {
            ChamberModel::ChokedFlow => flow * characteristic_velocity(spec) / spec.throat_area(),
            ChamberModel::Fixed { pressure } => pressure,
        }
    };
    ChamberPressure {
        pressure,
        flow,
        warning,
    }
}

/// Exit-plane flow state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NozzleSolution {
    pub exit_mach: f64,
    /// Pa
    pub exit_pressure: f64,
    /// K
    pub exit_temperature: f64,
    /// m/s
    pub exit_velocity: f64,
    /// Pa
    pub chamber_pressure: f64,
}

/// Isentropic expansion from the chamber to the exit plane.
pub fn nozzle_solution(
    mdot: f64,
    spec: &EngineSpec,
    _ambient_pressure: f64,
) -> Result<NozzleSolution, PropulsionError> {
    let mach = solve_exit_mach(area_ratio(spec), spec.gamma)?;
    let pc = chamber_pressure(mdot, spec).pressure;
    Ok(expand(mach, pc, spec))
}

fn expand(mach: f64, chamber_pressure: f64, spec: &EngineSpec) -> NozzleSolution {
    let g = spec.gamma;
    let stagnation = 1.0 + 0.5 * (g - 1.0) * mach * mach;
    let exit_temperature = spec.chamber_temperature / stagnation;
    NozzleSolution {
        exit_mach: mach,
        exit_pressure: chamber_pressure * stagnation.powf(-g / (g - 1.0)),
        exit_temperature,
        exit_velocity: mach * (g * spec.gas_constant * exit_temperature).sqrt(),
        chamber_pressure,
    }
}

/// Thrust for a propellant flow, N. Zero flow gives zero thrust.
pub fn thrust(mdot: f64, spec: &EngineSpec, ambient_pressure: f64) -> Result<f64, PropulsionError> {
    let chamber = chamber_pressure(mdot, spec);
    if chamber.flow == 0.0 {
        return Ok(0.0);
    }
    let mach = solve_exit_mach(area_ratio(spec), spec.gamma)?;
    let exit = expand(mach, chamber.pressure, spec);
    let f = chamber.flow * exit.exit_velocity
        + (exit.exit_pressure - ambient_pressure) * spec.exit_area();
    Ok((spec.thrust_efficiency * f).max(0.0))
}

/// Vacuum specific impulse at a given flow, s.
pub fn vacuum_isp(spec: &EngineSpec, mdot: f64) -> Result<f64, PropulsionError> {
    if !(mdot > 0.0) {
        return Err(PropulsionError::Domain(format!(
            "specific impulse undefined at flow {mdot}"
        )));
    }
    let mdot = mdot.min(spec.flow_max);
    Ok(thrust(mdot, spec, 0.0)? / (mdot * STANDARD_GRAVITY))
}

/// Returns a copy of `spec` whose thrust efficiency makes the vacuum ISP hit
/// `target_isp`. Fixed-chamber engines are calibrated at `flow_max`.
pub fn calibrate_engine(spec: &EngineSpec, target_isp: f64) -> Result<EngineSpec, PropulsionError> {
    if !(target_isp >= ISP_BAND.0 && target_isp <= ISP_BAND.1) {
        return Err(PropulsionError::Domain(format!(
            "target ISP {target_isp} s outside [{}, {}] s",
            ISP_BAND.0, ISP_BAND.1
        )));
    }
    let ideal_spec = EngineSpec {
        thrust_efficiency: 1.0,
        ..*spec
    };
    let ideal_isp = vacuum_isp(&ideal_spec, spec.flow_max)?;
    let required = target_isp / ideal_isp;
    if !(required > 0.0 && required <= MAX_EFFICIENCY) {
        return Err(PropulsionError::Calibration {
            ideal_isp,
            target_isp,
            required,
        });
    }
    Ok(EngineSpec {
        thrust_efficiency: required,
        ..*spec
    })
}

/// Affine thrust map `F(ṁ) = max(0, slope·ṁ + intercept)` for `ṁ > 0`,
/// `F(0) = 0`, valid for both chamber models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThrustCurve {
    /// N per kg/s
    pub slope: f64,
    /// N
    pub intercept: f64,
    pub flow_min: f64,
    pub flow_max: f64,
}

impl ThrustCurve {
    pub fn new(spec: &EngineSpec, ambient_pressure: f64) -> Result<Self, PropulsionError> {
        spec.validate()?;
        let mach = solve_exit_mach(area_ratio(spec), spec.gamma)?;
        let ae = spec.exit_area();
        let eff = spec.thrust_efficiency;
        let (slope, intercept) = match spec.chamber_model {
            ChamberModel::ChokedFlow => {
                // Exit state per unit flow; exit pressure scales with flow.
                let unit = expand(mach, characteristic_velocity(spec) / spec.throat_area(), spec);
                (
                    eff * (unit.exit_velocity + unit.exit_pressure * ae),
                    -eff * ambient_pressure * ae,
                )
            }
            ChamberModel::Fixed { pressure } => {
                let exit = expand(mach, pressure, spec);
                (
                    eff * exit.exit_velocity,
                    eff * (exit.exit_pressure - ambient_pressure) * ae,
                )
            }
        };
        Ok(Self {
            slope,
            intercept,
            flow_min: spec.flow_min,
            flow_max: spec.flow_max,
        })
    }

    pub fn thrust(&self, mdot: f64) -> f64 {
        if mdot <= 0.0 {
            0.0
        } else {
            (self.slope * mdot.min(self.flow_max) + self.intercept).max(0.0)
        }
    }

    /// Minimum continuous thrust (at `flow_min`).
    pub fn min_thrust(&self) -> f64 {
        self.thrust(self.flow_min)
    }

    /// Maximum thrust (at `flow_max`).
    pub fn max_thrust(&self) -> f64 {
        self.thrust(self.flow_max)
    }

    /// Flow delivering `force`, clamped to the operating band.
    pub fn flow_for_thrust(&self, force: f64) -> f64 {
        ((force - self.intercept) / self.slope).clamp(self.flow_min, self.flow_max)
    }
}

/// Per-thruster valve and accounting state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ThrusterState {
    /// kg/s
    pub commanded_flow: f64,
    /// kg/s, after the valve lag
    pub actual_flow: f64,
    /// kg/s, mean of the actual flow over the last step
    pub mean_flow: f64,
    pub firing: bool,
    /// kg
    pub propellant_consumed: f64,
    /// N·s
    pub impulse_accumulated: f64,
}

/// Advances the valve by `dt` under a constant command using the exact
/// discretisation of the first-order lag. Propellant is charged at the exact
/// mean flow over the step.
pub fn valve_update(state: &ThrusterState, commanded_flow: f64, dt: f64, spec: &EngineSpec) -> ThrusterState {
    let commanded = commanded_flow.clamp(0.0, spec.flow_max);
    let tau = spec.valve_time_constant;
    let blend = -(-dt / tau).exp_m1();
    let gap = state.actual_flow - commanded;
    let actual = (commanded + gap * (1.0 - blend)).clamp(0.0, spec.flow_max);
    let mean = (commanded + gap * blend * tau / dt).clamp(0.0, spec.flow_max);
    ThrusterState {
        commanded_flow: commanded,
        actual_flow: actual,
        mean_flow: mean,
        firing: commanded > 0.0,
        propellant_consumed: state.propellant_consumed + mean * dt,
        impulse_accumulated: state.impulse_accumulated,
    }
}

/// Firing plan for one control period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseSchedule {
    /// s
    pub period: f64,
    /// s, `period` for continuous firing
    pub on_time: f64,
    /// Commanded flow while on, kg/s.
    pub flow: f64,
    /// Thrust while on, N.
    pub level: f64,
    /// The requested pulse fell below the minimum impulse bit.
    pub suppressed: bool,
}

impl PulseSchedule {
    pub fn off(period: f64) -> Self {
        Self {
            period,
            on_time: 0.0,
            flow: 0.0,
            level: 0.0,
            suppressed: false,
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.on_time >= self.period && self.flow > 0.0
    }

    /// Mean thrust over the period.
    pub fn mean_thrust(&self) -> f64 {
        self.level * self.on_time / self.period
    }

    /// Impulse of the single pulse in this period.
    pub fn pulse_impulse(&self) -> f64 {
        self.level * self.on_time
    }
}

/// Turns a mean thrust request into a firing plan.
///
/// Requests at or above the minimum continuous thrust fire continuously
/// (capped at the maximum). Lower requests become one pulse at minimum flow
/// whose on-time gives the requested mean; pulses under the minimum impulse
/// bit are dropped.
pub fn pulse_modulate(
    desired_mean_thrust: f64,
    control_period: f64,
    curve: &ThrustCurve,
    min_impulse_bit: f64,
) -> PulseSchedule {
    if !(desired_mean_thrust > 0.0) {
        return PulseSchedule::off(control_period);
    }
    let f_min = curve.min_thrust();
    if desired_mean_thrust >= f_min {
        let level = desired_mean_thrust.min(curve.max_thrust());
        return PulseSchedule {
            period: control_period,
            on_time: control_period,
            flow: curve.flow_for_thrust(level),
            level,
            suppressed: false,
        };
    }
    let impulse = desired_mean_thrust * control_period;
    if impulse < min_impulse_bit {
        return PulseSchedule {
            suppressed: true,
            ..PulseSchedule::off(control_period)
        };
    }
    PulseSchedule {
        period: control_period,
        on_time: impulse / f_min,
        flow: curve.flow_min,
        level: f_min,
        suppressed: false,
    }
}

/// Realises pulse schedules on the simulation step grid.
///
/// Each period adds its on-time to a budget that is spent one whole step at a
/// time; the remainder carries into the next period, so the delivered mean
/// matches the schedule even when the on-time is not a multiple of `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PulseExecutor {
    budget: f64,
    flow: f64,
    continuous: bool,
}

impl PulseExecutor {
    pub fn load(&mut self, schedule: &PulseSchedule, dt: f64) {
        if schedule.is_continuous() {
            self.continuous = true;
            self.budget = 0.0;
            self.flow = schedule.flow;
        } else {
            if self.continuous {
                self.budget = 0.0;
            }
            self.continuous = false;
            self.flow = schedule.flow;
            self.budget = self.budget.clamp(-dt, dt) + schedule.on_time;
        }
    }

    /// Commanded flow for the next step of length `dt`.
    pub fn next_command(&mut self, dt: f64) -> f64 {
        if self.continuous {
            return self.flow;
        }
        if self.flow > 0.0 && self.budget >= 0.5 * dt {
            self.budget -= dt;
            self.flow
        } else {
            0.0
        }
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}
