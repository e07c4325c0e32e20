//! Closed-form subsystem budgets: propellant tank, battery, refuelling,
//! data storage, mapping resolution and station endurance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("invalid budget input: {0}")]
    Invalid(String),
}

fn positive(name: &str, v: f64) -> Result<(), BudgetError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BudgetError::Invalid(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), BudgetError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BudgetError::Invalid(format!("{name} must be non-negative, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropellantBudget {
    /// kg
    pub per_flight_mass: f64,
    pub margin: f64,
    pub factor_of_safety: f64,
    /// kg/m³
    pub propellant_density: f64,
    /// Pa
    pub tank_pressure: f64,
    /// Pa
    pub pressurant_pressure: f64,
    /// Multiplier on the margined mass when sizing the tank.
    pub sizing_factor: f64,
    /// Gas volume as a fraction of the tank.
    pub ullage_fraction: f64,
}

impl Default for PropellantBudget {
    fn default() -> Self {
        Self {
            per_flight_mass: 1.86,
            margin: 0.20,
            factor_of_safety: 2.0,
            propellant_density: 1004.0,
            tank_pressure: 2.4e6,
            pressurant_pressure: 14e6,
            sizing_factor: 1.0,
            ullage_fraction: 0.0,
        }
    }
}

impl PropellantBudget {
    pub fn validate(&self) -> Result<(), BudgetError> {
        positive("per_flight_mass", self.per_flight_mass)?;
        non_negative("margin", self.margin)?;
        positive("factor_of_safety", self.factor_of_safety)?;
        positive("propellant_density", self.propellant_density)?;
        positive("tank_pressure", self.tank_pressure)?;
        positive("pressurant_pressure", self.pressurant_pressure)?;
        positive("sizing_factor", self.sizing_factor)?;
        if !(0.0..1.0).contains(&self.ullage_fraction) {
            return Err(BudgetError::Invalid("ullage_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Propellant loaded per service, nominal plus margin, kg.
    pub fn refill_mass(&self) -> f64 {
        self.per_flight_mass * (1.0 + self.margin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerBudget {
    /// W
    pub flight_power: f64,
    /// s
    pub sized_duration: f64,
    pub depth_of_discharge: f64,
    pub cycles: u32,
    pub conversion_efficiency: f64,
}

impl Default for PowerBudget {
    fn default() -> Self {
        Self {
            flight_power: 324.0,
            sized_duration: 180.0,
            depth_of_discharge: 0.9,
            cycles: 10,
            conversion_efficiency: 0.85,
        }
    }
}

impl PowerBudget {
    pub fn validate(&self) -> Result<(), BudgetError> {
        positive("flight_power", self.flight_power)?;
        positive("sized_duration", self.sized_duration)?;
        if !(self.depth_of_discharge > 0.0 && self.depth_of_discharge <= 1.0) {
            return Err(BudgetError::Invalid("depth_of_discharge must lie in (0, 1]".into()));
        }
        if !(self.conversion_efficiency > 0.0 && self.conversion_efficiency <= 1.0) {
            return Err(BudgetError::Invalid("conversion_efficiency must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataBudget {
    /// GB per flight, already compressed
    pub raw_per_flight: f64,
    pub compression_ratio: f64,
    pub flights: u32,
    /// GB
    pub station_storage: f64,
}

impl Default for DataBudget {
    fn default() -> Self {
        Self {
            raw_per_flight: 20.5,
            compression_ratio: 0.25,
            flights: 11,
            station_storage: 440.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationBudget {
    /// kg
    pub battery_mass: f64,
    /// Wh/kg
    pub specific_energy: f64,
    /// h
    pub standby_hours: f64,
    /// mL/min
    pub refuel_flow: f64,
    /// kg
    pub refueling_subsystem_mass: f64,
    /// Propellant stock carried for refills, kg.
    pub propellant_stock: f64,
    /// Distance of one mapping flight, m.
    pub flight_distance: f64,
}

impl Default for StationBudget {
    fn default() -> Self {
        Self {
            battery_mass: 20.5,
            specific_energy: 246.7,
            standby_hours: 50.0,
            refuel_flow: 200.0,
            refueling_subsystem_mass: 32.0,
            propellant_stock: 22.4,
            flight_distance: 800.0,
        }
    }
}

/// Battery energy needed for one sized flight, Wh.
pub fn battery_capacity(b: &PowerBudget) -> Result<f64, BudgetError> {
    b.validate()?;
    Ok(b.flight_power * b.sized_duration / (3600.0 * b.depth_of_discharge * b.conversion_efficiency))
}

/// Minutes to transfer `mass` kg at `flow_ml_per_min`.
pub fn refuel_time(mass: f64, density: f64, flow_ml_per_min: f64) -> Result<f64, BudgetError> {
    non_negative("mass", mass)?;
    positive("density", density)?;
    positive("refuel flow", flow_ml_per_min)?;
    let litres = mass / density * 1000.0;
    Ok(litres * 1000.0 / flow_ml_per_min)
}

/// Propellant tank volume, L.
pub fn tank_volume(b: &PropellantBudget) -> Result<f64, BudgetError> {
    b.validate()?;
    let liquid = b.refill_mass() * b.sizing_factor / b.propellant_density * 1000.0;
    Ok(liquid / (1.0 - b.ullage_fraction))
}

/// Composite factor over per-flight consumption that a tank of
/// `target_litres` implies when filled with liquid.
pub fn implied_sizing_factor(b: &PropellantBudget, target_litres: f64) -> Result<f64, BudgetError> {
    b.validate()?;
    positive("target volume", target_litres)?;
    Ok(target_litres / 1000.0 * b.propellant_density / b.per_flight_mass)
}

/// Whole refills the stock provides.
pub fn flights_supported(stock: f64, per_flight: f64, margin: f64) -> Result<u32, BudgetError> {
    non_negative("stock", stock)?;
    positive("per-flight mass", per_flight)?;
    non_negative("margin", margin)?;
    // The small tolerance keeps exact multiples from flooring one short.
    let n = stock / (per_flight * (1.0 + margin));
    Ok((n + 1e-12).floor() as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataCheck {
    /// GB
    pub total: f64,
    pub fits: bool,
    /// GB, negative when over capacity
    pub headroom: f64,
}

pub fn data_budget_check(b: &DataBudget) -> Result<DataCheck, BudgetError> {
    non_negative("raw_per_flight", b.raw_per_flight)?;
    non_negative("station_storage", b.station_storage)?;
    let total = b.raw_per_flight * f64::from(b.flights);
    Ok(DataCheck {
        total,
        fits: total <= b.station_storage,
        headroom: b.station_storage - total,
    })
}

/// Resolution bound the mapping payload must meet, m.
pub const MAX_SAMPLE_SPACING: f64 = 0.1;

/// Along-track distance between samples, m; flagged when above the bound.
pub fn ground_sample_spacing(speed: f64, sample_rate: f64) -> Result<(f64, bool), BudgetError> {
    non_negative("speed", speed)?;
    positive("sample_rate", sample_rate)?;
    let spacing = speed / sample_rate;
    Ok((spacing, spacing > MAX_SAMPLE_SPACING + 1e-12))
}

/// Largest mean standby draw the station battery sustains, W.
pub fn standby_power_limit(s: &StationBudget) -> Result<f64, BudgetError> {
    non_negative("battery_mass", s.battery_mass)?;
    positive("specific_energy", s.specific_energy)?;
    positive("standby_hours", s.standby_hours)?;
    Ok(s.battery_mass * s.specific_energy / s.standby_hours)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetInputs {
    pub propellant: PropellantBudget,
    pub power: PowerBudget,
    pub data: DataBudget,
    pub station: StationBudget,
    /// Tank size to invert for the implied sizing factor, L.
    pub reference_tank_volume: f64,
    /// Mapping sample rate, Hz.
    pub sample_rate: f64,
    /// Cruise speeds to evaluate the sample spacing at, m/s.
    pub speeds: [f64; 2],
}

impl Default for BudgetInputs {
    fn default() -> Self {
        Self {
            propellant: PropellantBudget::default(),
            power: PowerBudget::default(),
            data: DataBudget::default(),
            station: StationBudget::default(),
            reference_tank_volume: 3.35,
            sample_rate: 300.0,
            speeds: [30.0, 16.68],
        }
    }
}

impl BudgetInputs {
    pub fn defaults() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub inputs: BudgetInputs,
    /// Wh
    pub battery_capacity: f64,
    /// kg
    pub refill_mass: f64,
    /// min
    pub refuel_time: f64,
    /// min, for a full reference tank
    pub full_tank_refuel_time: f64,
    /// L
    pub tank_volume: f64,
    pub implied_sizing_factor: f64,
    pub station_flights: u32,
    pub total_flights: u32,
    /// km
    pub accumulated_distance: f64,
    pub data: DataCheck,
    /// `(speed m/s, spacing m, above bound)`
    pub sample_spacing: Vec<(f64, f64, bool)>,
    /// W
    pub standby_power_limit: f64,
    pub cross_check: Option<CrossCheck>,
}

/// Simulated flight propellant against the per-flight allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    /// kg
    pub simulated: f64,
    /// kg
    pub allowance: f64,
    pub pass: bool,
}

pub fn budget_report(inputs: &BudgetInputs, simulated_propellant: Option<f64>) -> Result<BudgetReport, BudgetError> {
    let p = &inputs.propellant;
    let refill = p.refill_mass();
    let station_flights = flights_supported(inputs.station.propellant_stock, p.per_flight_mass, p.margin)?;
    let total_flights = station_flights + 1;
    let sample_spacing = inputs
        .speeds
        .iter()
        .map(|&v| ground_sample_spacing(v, inputs.sample_rate).map(|(s, f)| (v, s, f)))
        .collect::<Result<_, _>>()?;
    Ok(BudgetReport {
        inputs: *inputs,
        battery_capacity: battery_capacity(&inputs.power)?,
        refill_mass: refill,
        refuel_time: refuel_time(refill, p.propellant_density, inputs.station.refuel_flow)?,
        full_tank_refuel_time: inputs.reference_tank_volume * 1000.0 / inputs.station.refuel_flow,
        tank_volume: tank_volume(p)?,
        implied_sizing_factor: implied_sizing_factor(p, inputs.reference_tank_volume)?,
        station_flights,
        total_flights,
        accumulated_distance: f64::from(total_flights) * inputs.station.flight_distance / 1000.0,
        data: data_budget_check(&inputs.data)?,
        sample_spacing,
        standby_power_limit: standby_power_limit(&inputs.station)?,
        cross_check: simulated_propellant.map(|m| CrossCheck {
            simulated: m,
            allowance: p.per_flight_mass,
            pass: m <= p.per_flight_mass,
        }),
    })
}

impl BudgetReport {
    /// Aligned plain-text table.
    pub fn table(&self) -> String {
        let mut rows: Vec<(String, String, &str)> = vec![
            ("battery capacity".into(), format!("{:.2}", self.battery_capacity), "Wh"),
            ("refill mass".into(), format!("{:.3}", self.refill_mass), "kg"),
            ("refuel time".into(), format!("{:.2}", self.refuel_time), "min"),
            ("full tank refuel time".into(), format!("{:.2}", self.full_tank_refuel_time), "min"),
            ("tank volume".into(), format!("{:.4}", self.tank_volume), "L"),
            ("implied sizing factor".into(), format!("{:.3}", self.implied_sizing_factor), "-"),
            ("station-supported flights".into(), self.station_flights.to_string(), "-"),
            ("total flights".into(), self.total_flights.to_string(), "-"),
            ("accumulated distance".into(), format!("{:.1}", self.accumulated_distance), "km"),
            ("data volume".into(), format!("{:.1}", self.data.total), "GB"),
            ("data fits".into(), self.data.fits.to_string(), "-"),
            ("data headroom".into(), format!("{:.1}", self.data.headroom), "GB"),
            ("standby power limit".into(), format!("{:.1}", self.standby_power_limit), "W"),
        ];
        for (v, s, flag) in &self.sample_spacing {
            rows.push((
                format!("sample spacing at {v} m/s"),
                format!("{s:.4}{}", if *flag { " (above bound)" } else { "" }),
                "m",
            ));
        }
        match &self.cross_check {
            Some(c) => rows.push((
                "flight propellant cross-check".into(),
                format!("{:.4} / {:.2} {}", c.simulated, c.allowance, if c.pass { "pass" } else { "FAIL" }),
                "kg",
            )),
            None => rows.push(("flight propellant cross-check".into(), "skipped (no telemetry)".into(), "")),
        }
        let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let wv = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v, u)| format!("{k:<w$}  {v:>wv$}  {u}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn battery() {
        let ideal = PowerBudget {
            depth_of_discharge: 1.0,
            conversion_efficiency: 1.0,
            ..PowerBudget::default()
        };
        assert!(close(battery_capacity(&ideal).unwrap(), 16.2, 1e-12));
        let e = battery_capacity(&PowerBudget::default()).unwrap();
        assert!(close(e, 324.0 * 180.0 / (3600.0 * 0.9 * 0.85), 1e-12));
        assert!(close(e, 21.2, 0.05));
        let double = PowerBudget {
            flight_power: 648.0,
            ..PowerBudget::default()
        };
        assert!(close(battery_capacity(&double).unwrap(), 2.0 * e, 1e-12));
    }

    #[test]
    fn refuel() {
        let t = refuel_time(2.232, 1004.0, 200.0).unwrap();
        assert!(close(t, 2.232 / 1004.0 * 1e6 / 200.0, 1e-12));
        assert!(close(t, 11.1, 0.05));
        assert_eq!(refuel_time(0.0, 1004.0, 200.0).unwrap(), 0.0);
        assert!(refuel_time(1.0, 1004.0, 0.0).is_err());
        let full = refuel_time(3.35 * 1.004, 1004.0, 200.0).unwrap();
        assert!(close(full, 16.75, 1e-9));
    }

    #[test]
    fn tank() {
        let bare = PropellantBudget {
            margin: 0.0,
            ..PropellantBudget::default()
        };
        assert!(close(tank_volume(&bare).unwrap(), 1.86 / 1004.0 * 1000.0, 1e-12));
        assert!(close(tank_volume(&bare).unwrap(), 1.85, 0.005));
        let f = implied_sizing_factor(&PropellantBudget::default(), 3.35).unwrap();
        assert!(close(f * 1.86, 3.3634, 1e-3));
        assert!(close(f, 1.81, 0.005));
        let v1 = tank_volume(&PropellantBudget::default()).unwrap();
        let v2 = tank_volume(&PropellantBudget {
            margin: 0.3,
            ..PropellantBudget::default()
        })
        .unwrap();
        assert!(v2 > v1);
    }

    #[test]
    fn flights() {
        assert_eq!(flights_supported(22.32, 1.86, 0.2).unwrap(), 10);
        assert_eq!(flights_supported(22.4, 1.86, 0.2).unwrap(), 10);
        // 22.3 kg falls just short of ten refills.
        assert_eq!(flights_supported(22.3, 1.86, 0.2).unwrap(), 9);
        assert_eq!(flights_supported(2.0, 1.86, 0.2).unwrap(), 0);
        assert_eq!(flights_supported(44.8, 1.86, 0.2).unwrap(), 20);
        assert!(flights_supported(1.0, 0.0, 0.2).is_err());
    }

    #[test]
    fn data() {
        let d = data_budget_check(&DataBudget::default()).unwrap();
        assert!(close(d.total, 225.5, 1e-9));
        assert!(d.fits);
        assert!(close(d.headroom, 214.5, 1e-9));
        let none = data_budget_check(&DataBudget {
            flights: 0,
            ..DataBudget::default()
        })
        .unwrap();
        assert_eq!(none.total, 0.0);
        let edge = data_budget_check(&DataBudget {
            raw_per_flight: 40.0,
            ..DataBudget::default()
        })
        .unwrap();
        assert!(edge.fits && edge.headroom == 0.0);
    }

    #[test]
    fn spacing() {
        let (s, flag) = ground_sample_spacing(30.0, 300.0).unwrap();
        assert_eq!(s, 0.1);
        assert!(!flag);
        let (s, _) = ground_sample_spacing(16.68, 300.0).unwrap();
        assert!(close(s, 0.0556, 1e-9));
        assert_eq!(ground_sample_spacing(0.0, 300.0).unwrap().0, 0.0);
        assert!(ground_sample_spacing(31.0, 300.0).unwrap().1);
    }

    #[test]
    fn standby() {
        let p = standby_power_limit(&StationBudget::default()).unwrap();
        assert!(close(p, 101.147, 1e-3));
        let none = StationBudget {
            battery_mass: 0.0,
            ..StationBudget::default()
        };
        assert_eq!(standby_power_limit(&none).unwrap(), 0.0);
        let longer = StationBudget {
            standby_hours: 100.0,
            ..StationBudget::default()
        };
        assert!(close(standby_power_limit(&longer).unwrap(), p / 2.0, 1e-12));
    }

    #[test]
    fn full_report() {
        let r = budget_report(&BudgetInputs::defaults(), Some(1.7)).unwrap();
        assert_eq!(r.total_flights, 11);
        assert!(close(r.accumulated_distance, 8.8, 1e-12));
        assert!(r.cross_check.unwrap().pass);
        let over = budget_report(&BudgetInputs::defaults(), Some(1.9)).unwrap();
        assert!(!over.cross_check.unwrap().pass);
        assert!(budget_report(&BudgetInputs::defaults(), None).unwrap().cross_check.is_none());
        let heavy = BudgetInputs {
            propellant: PropellantBudget {
                per_flight_mass: 4.0,
                ..PropellantBudget::default()
            },
            ..BudgetInputs::defaults()
        };
        let r = budget_report(&heavy, None).unwrap();
        assert_eq!(r.station_flights, 4);
        assert_eq!(r.total_flights, 5);
        assert!(r.table().contains("total flights"));
    }
}
