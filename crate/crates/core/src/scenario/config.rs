//! Scenario files: TOML with one table per subsystem. Every table is
//! optional and falls back to defaults; unknown keys are rejected. Angles are
//! given in degrees.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::budget::BudgetInputs;
use crate::control::{ControlLimits, ControllerConfig, EstimatorConfig};
use crate::propulsion::{ChamberModel, EngineSpec, DEFAULT_TARGET_ISP};
use crate::sim::{SimConfig, WorldModel};
use crate::thermal::ThermalBody;
use crate::trajectory::{ProfileKind, ProfileParams};

use super::ScenarioError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Also write the sampled reference next to the telemetry.
    pub dump_reference: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: "flight".into(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            dump_reference: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepSection {
    /// s
    pub dt: f64,
    /// s
    pub duration_max: f64,
}

impl Default for StepSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            duration_max: d.duration_max,
        }
    }
}

/// Engine geometry and operating band; the thrust efficiency is always
/// calibrated to `target_isp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
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
    /// Fixed chamber pressure, Pa; absent for the choked-flow closure.
    pub chamber_pressure: Option<f64>,
    /// s
    pub target_isp: f64,
}

impl Default for EngineSection {
    fn default() -> Self {
        let s = EngineSpec::calibrated_default();
        Self {
            gamma: s.gamma,
            chamber_temperature: s.chamber_temperature,
            throat_diameter: s.throat_diameter,
            exit_diameter: s.exit_diameter,
            gas_constant: s.gas_constant,
            flow_min: s.flow_min,
            flow_max: s.flow_max,
            valve_time_constant: s.valve_time_constant,
            min_impulse_bit: s.min_impulse_bit,
            chamber_pressure: None,
            target_isp: DEFAULT_TARGET_ISP,
        }
    }
}

impl EngineSection {
    /// Uncalibrated spec (efficiency 1).
    pub fn spec(&self) -> EngineSpec {
        EngineSpec {
            gamma: self.gamma,
            chamber_temperature: self.chamber_temperature,
            throat_diameter: self.throat_diameter,
            exit_diameter: self.exit_diameter,
            gas_constant: self.gas_constant,
            flow_min: self.flow_min,
            flow_max: self.flow_max,
            valve_time_constant: self.valve_time_constant,
            min_impulse_bit: self.min_impulse_bit,
            thrust_efficiency: 1.0,
            chamber_model: match self.chamber_pressure {
                Some(pressure) => ChamberModel::Fixed { pressure },
                None => ChamberModel::ChokedFlow,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    /// kg, at take-off
    pub wet_mass: f64,
    /// kg, loaded before take-off
    pub propellant_load: f64,
    /// m
    pub arm_radius: f64,
    /// m, thruster plane above the centre of mass
    pub mount_height: f64,
    /// deg, azimuth of the first thruster
    pub alpha_deg: f64,
    /// deg, cant from the body z axis
    pub cant_deg: f64,
    /// m, homogeneous box used for the inertia
    pub body_dimensions: [f64; 3],
    /// m/s, harder contacts count as hard landings
    pub touchdown_speed_limit: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            wet_mass: 15.0,
            propellant_load: 2.232,
            arm_radius: 0.2,
            mount_height: 0.189,
            alpha_deg: 45.0,
            cant_deg: 45.0,
            body_dimensions: [0.45, 0.48, 0.378],
            touchdown_speed_limit: 2.0,
        }
    }
}

impl VehicleSection {
    pub fn dry_mass(&self) -> f64 {
        self.wet_mass - self.propellant_load
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsSection {
    pub max_tilt_deg: f64,
    /// m/s; also caps the reference cruise speed
    pub max_horizontal_speed: f64,
    /// m/s
    pub max_vertical_speed: f64,
}

impl Default for LimitsSection {
    fn default() -> Self {
        let d = ControlLimits::default();
        Self {
            max_tilt_deg: d.max_tilt.to_degrees(),
            max_horizontal_speed: d.max_horizontal_speed,
            max_vertical_speed: d.max_vertical_speed,
        }
    }
}

impl LimitsSection {
    pub fn limits(&self) -> ControlLimits {
        ControlLimits {
            max_tilt: self.max_tilt_deg.to_radians(),
            max_horizontal_speed: self.max_horizontal_speed,
            max_vertical_speed: self.max_vertical_speed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: ProfileKind,
    pub horizontal_range: f64,
    pub cruise_altitude: f64,
    pub ballistic_apex: f64,
    pub vtol_height: f64,
    pub round_trip: bool,
    pub vertical_speed: f64,
    pub vertical_accel: f64,
    pub cruise_accel: f64,
    pub boost_accel: f64,
    pub boost_tilt_deg: f64,
    pub hop_tilt_deg: f64,
    pub hover_dwell: f64,
    pub landing_height: f64,
    pub landing_speed: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        let p = ProfileParams::default();
        Self {
            kind: p.kind,
            horizontal_range: p.horizontal_range,
            cruise_altitude: p.cruise_altitude,
            ballistic_apex: p.ballistic_apex,
            vtol_height: p.vtol_height,
            round_trip: p.round_trip,
            vertical_speed: p.vertical_speed,
            vertical_accel: p.vertical_accel,
            cruise_accel: p.cruise_accel,
            boost_accel: p.boost_accel,
            boost_tilt_deg: p.boost_tilt.to_degrees(),
            hop_tilt_deg: p.hop_tilt.to_degrees(),
            hover_dwell: p.hover_dwell,
            landing_height: p.landing_height,
            landing_speed: p.landing_speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSection {
    pub body: ThermalBody,
    /// W
    pub heat_loads: Vec<f64>,
    pub emissivities: Vec<f64>,
    /// s
    pub elapsed: f64,
    /// s
    pub dt: f64,
    /// Component limits table, resolved against the config's directory.
    pub limits_file: Option<PathBuf>,
}

impl Default for ThermalSection {
    fn default() -> Self {
        Self {
            body: ThermalBody::default(),
            heat_loads: crate::thermal::linear_grid(0.0, 1000.0, 50.0),
            emissivities: crate::thermal::linear_grid(0.1, 1.0, 0.1),
            elapsed: 600.0,
            dt: 1.0,
            limits_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub runs: usize,
    /// Profiles flown with the same seeds; the first is the reference.
    pub profiles: Vec<ProfileKind>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            runs: 100,
            profiles: vec![ProfileKind::Combined, ProfileKind::SemiBallistic],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub profiles: Vec<ProfileKind>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            profiles: vec![ProfileKind::Ballistic, ProfileKind::ConstantAltitude, ProfileKind::Combined],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub run: RunSection,
    pub world: WorldModel,
    pub sim: StepSection,
    pub engine: EngineSection,
    pub vehicle: VehicleSection,
    pub limits: LimitsSection,
    pub control: ControllerConfig,
    pub estimator: EstimatorConfig,
    pub profile: ProfileSection,
    pub thermal: ThermalSection,
    pub budget: BudgetInputs,
    pub monte_carlo: MonteCarloSection,
    pub compare: CompareSection,
    /// Directory the scenario was loaded from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::from_toml(&text).map_err(|e| match e {
            ScenarioError::Config(m) => ScenarioError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            duration_max: self.sim.duration_max,
            seed: self.run.seed,
        }
    }

    pub fn profile_params(&self) -> ProfileParams {
        let p = &self.profile;
        ProfileParams {
            kind: p.kind,
            horizontal_range: p.horizontal_range,
            cruise_altitude: p.cruise_altitude,
            ballistic_apex: p.ballistic_apex,
            vtol_height: p.vtol_height,
            max_horizontal_speed: self.limits.max_horizontal_speed,
            round_trip: p.round_trip,
            vertical_speed: p.vertical_speed,
            vertical_accel: p.vertical_accel,
            cruise_accel: p.cruise_accel,
            boost_accel: p.boost_accel,
            boost_tilt: p.boost_tilt_deg.to_radians(),
            hop_tilt: p.hop_tilt_deg.to_radians(),
            hover_dwell: p.hover_dwell,
            landing_height: p.landing_height,
            landing_speed: p.landing_speed,
            gravity: self.world.gravity,
        }
    }

    pub fn with_profile(&self, kind: ProfileKind) -> Self {
        let mut s = self.clone();
        s.profile.kind = kind;
        s
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks every section; called before anything runs.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let cfg = |m: String| ScenarioError::Config(m);
        self.world.validate().map_err(|e| cfg(format!("[world] {e}")))?;
        self.sim_config().validate().map_err(|e| cfg(format!("[sim] {e}")))?;
        self.engine.spec().validate().map_err(|e| cfg(format!("[engine] {e}")))?;
        if !(self.engine.target_isp > 0.0) {
            return Err(cfg("[engine] target_isp must be positive".into()));
        }
        let v = &self.vehicle;
        if !(v.wet_mass > 0.0 && v.propellant_load >= 0.0 && v.propellant_load < v.wet_mass) {
            return Err(cfg(format!(
                "[vehicle] need 0 <= propellant_load < wet_mass, got {} and {}",
                v.propellant_load, v.wet_mass
            )));
        }
        if v.body_dimensions.iter().any(|d| !(*d > 0.0)) || !(v.touchdown_speed_limit > 0.0) {
            return Err(cfg("[vehicle] body dimensions and touchdown_speed_limit must be positive".into()));
        }
        crate::vehicle::build_layout(v.alpha_deg.to_radians(), v.cant_deg.to_radians(), v.arm_radius, v.mount_height)
            .map_err(|e| cfg(format!("[vehicle] {e}")))?;
        self.limits.limits().validate().map_err(|e| cfg(format!("[limits] {e}")))?;
        self.control.validate().map_err(|e| cfg(format!("[control] {e}")))?;
        let steps_per_inner = 1.0 / (self.control.inner_rate * self.sim.dt);
        let steps_per_outer = 1.0 / (self.control.outer_rate * self.sim.dt);
        for (name, n) in [("inner_rate", steps_per_inner), ("outer_rate", steps_per_outer)] {
            if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
                return Err(cfg(format!("[control] {name} must divide the step rate 1/dt evenly")));
            }
        }
        self.estimator.validate().map_err(|e| cfg(format!("[estimator] {e}")))?;
        self.profile_params().validate().map_err(|e| cfg(format!("[profile] {e}")))?;
        let t = &self.thermal;
        if t.heat_loads.is_empty() || t.emissivities.is_empty() {
            return Err(cfg("[thermal] heat_loads and emissivities must be non-empty".into()));
        }
        t.body.validate().map_err(|e| cfg(format!("[thermal] {e}")))?;
        if !(t.dt > 0.0 && t.elapsed >= 0.0) {
            return Err(cfg("[thermal] need dt > 0 and elapsed >= 0".into()));
        }
        let b = &self.budget;
        b.propellant.validate().map_err(|e| cfg(format!("[budget] {e}")))?;
        b.power.validate().map_err(|e| cfg(format!("[budget] {e}")))?;
        if self.monte_carlo.runs == 0 || self.monte_carlo.profiles.is_empty() {
            return Err(cfg("[monte_carlo] runs and profiles must be non-empty".into()));
        }
        if self.compare.profiles.is_empty() {
            return Err(cfg("[compare] profiles must be non-empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let s = Scenario::from_toml("").unwrap();
        assert_eq!(s.vehicle.wet_mass, 15.0);
        assert_eq!(s.profile.kind, ProfileKind::SemiBallistic);
        assert_eq!(s.budget.sample_rate, 300.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let s = Scenario::from_toml("[profile]\nkind = \"combined\"\nround_trip = true\n").unwrap();
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = Scenario::from_toml("[vehicle]\nwet_mas = 15.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("wet_mas"), "{msg}");
        assert!(msg.contains("line 2") || msg.contains("2:"), "{msg}");
        assert!(Scenario::from_toml("[bogus]\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Scenario::from_toml("[sim]\ndt = 0.5\n").is_err());
        assert!(Scenario::from_toml("[vehicle]\ncant_deg = 95.0\n").is_err());
        assert!(Scenario::from_toml("[control]\ninner_rate = 70.0\n").is_err());
        assert!(Scenario::from_toml("[thermal]\nheat_loads = []\n").is_err());
        assert!(Scenario::from_toml("[profile]\nvtol_height = 80.0\n").is_err());
    }
}
