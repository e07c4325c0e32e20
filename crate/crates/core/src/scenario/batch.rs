//! Multi-run commands: profile comparison, landing Monte Carlo, thermal
//! sweep and the mission budget, plus their file outputs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{budget_report, BudgetReport};
use crate::control::EstimatorMode;
use crate::sim::derive_seed;
use crate::telemetry::{read_csv, write_csv, write_text, TelemetryRow};
use crate::thermal::{components_exceeded, load_component_limits, thermal_sweep, SweepResult};
use crate::trajectory::ProfileKind;

use super::config::Scenario;
use super::flight::{fly, FlightOutput};
use super::report::{Outcome, RunReport};
use super::ScenarioError;

/// Suffix of telemetry files written by a flight.
pub const TELEMETRY_SUFFIX: &str = "_telemetry.csv";

/// Writes telemetry, JSON report and text table for one flight.
pub fn write_flight(dir: &Path, out: &FlightOutput) -> Result<Vec<PathBuf>, ScenarioError> {
    let name = &out.report.meta.name;
    let csv = dir.join(format!("{name}{TELEMETRY_SUFFIX}"));
    let json = dir.join(format!("{name}_report.json"));
    let txt = dir.join(format!("{name}_report.txt"));
    write_csv(&csv, &out.rows)?;
    write_text(&json, &out.report.to_json())?;
    write_text(&txt, &out.report.table())?;
    Ok(vec![csv, json, txt])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareEntry {
    pub profile: ProfileKind,
    pub report: RunReport,
    /// Propellant saved against the constant-altitude run, percent.
    pub saving_vs_constant_altitude: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub horizontal_range: f64,
    pub entries: Vec<CompareEntry>,
}

impl CompareReport {
    pub fn entry(&self, kind: ProfileKind) -> Option<&CompareEntry> {
        self.entries.iter().find(|e| e.profile == kind)
    }

    pub fn all_nominal(&self) -> bool {
        self.entries.iter().all(|e| e.report.outcome == Outcome::Nominal)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<18} {:>10} {:>12} {:>12} {:>12} {:>10} {:>10}\n",
            "profile", "outcome", "propellant", "avg_thrust", "thrust_time", "flight", "saving"
        );
        out.push_str(&format!(
            "{:<18} {:>10} {:>12} {:>12} {:>12} {:>10} {:>10}\n",
            "", "", "kg", "N", "s", "s", "%"
        ));
        for e in &self.entries {
            let r = &e.report;
            let saving = e.saving_vs_constant_altitude.map_or("-".to_string(), |s| format!("{s:.1}"));
            out.push_str(&format!(
                "{:<18} {:>10} {:>12.4} {:>12.3} {:>12.2} {:>10.2} {:>10}\n",
                e.profile.as_str(),
                outcome_str(r.outcome),
                r.propellant_used,
                r.average_thrust,
                r.thrust_duration,
                r.flight_time,
                saving
            ));
        }
        out
    }
}

fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Nominal => "nominal",
        Outcome::MissionFailure => "failure",
        Outcome::Fault => "fault",
    }
}

/// Flies each configured profile with otherwise identical settings. The
/// constant-altitude profile is added as the baseline when absent.
pub fn compare_profiles(s: &Scenario) -> Result<(CompareReport, Vec<FlightOutput>), ScenarioError> {
    s.validate()?;
    let mut kinds = s.compare.profiles.clone();
    if !kinds.contains(&ProfileKind::ConstantAltitude) {
        kinds.push(ProfileKind::ConstantAltitude);
    }
    let outputs: Vec<FlightOutput> = kinds
        .par_iter()
        .map(|&k| {
            let mut run = s.with_profile(k);
            run.run.name = format!("{}_{}", s.run.name, k.as_str());
            fly(&run)
        })
        .collect::<Result<_, _>>()?;
    let baseline = outputs
        .iter()
        .find(|o| o.report.meta.profile == ProfileKind::ConstantAltitude)
        .map(|o| o.report.propellant_used);
    let entries = outputs
        .iter()
        .map(|o| CompareEntry {
            profile: o.report.meta.profile,
            report: o.report.clone(),
            saving_vs_constant_altitude: baseline
                .filter(|b| *b > 0.0 && o.report.meta.profile != ProfileKind::ConstantAltitude)
                .map(|b| 100.0 * (b - o.report.propellant_used) / b),
        })
        .collect();
    Ok((
        CompareReport {
            horizontal_range: s.profile.horizontal_range,
            entries,
        },
        outputs,
    ))
}

/// Touchdown misalignment statistics for one profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandingStats {
    pub profile: ProfileKind,
    /// m
    pub mean: f64,
    /// m, sample standard deviation
    pub std_dev: f64,
    /// m
    pub max: f64,
    /// Runs that did not end nominally. Those that still touched down, such
    /// as hard landings, remain in the statistics.
    pub failures: usize,
    /// m, per run in seed order (NaN when the run never touched down)
    pub misalignments: Vec<f64>,
    /// kg
    pub mean_propellant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub runs: usize,
    pub batch_seed: u64,
    pub horizontal_range: f64,
    pub seeds: Vec<u64>,
    pub profiles: Vec<LandingStats>,
}

impl MonteCarloReport {
    pub fn stats(&self, kind: ProfileKind) -> Option<&LandingStats> {
        self.profiles.iter().find(|p| p.profile == kind)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{} runs per profile, batch seed {}, range {} m\n",
            self.runs, self.batch_seed, self.horizontal_range
        );
        out.push_str(&format!(
            "{:<18} {:>10} {:>10} {:>10} {:>9} {:>12}\n",
            "profile", "mean_m", "std_m", "max_m", "failures", "propellant"
        ));
        for p in &self.profiles {
            out.push_str(&format!(
                "{:<18} {:>10.4} {:>10.4} {:>10.4} {:>9} {:>12.4}\n",
                p.profile.as_str(),
                p.mean,
                p.std_dev,
                p.max,
                p.failures,
                p.mean_propellant
            ));
        }
        out
    }

    /// Per-run CSV: seed then one misalignment column per profile.
    pub fn runs_csv(&self) -> String {
        let mut out = String::from("run,seed");
        for p in &self.profiles {
            out.push_str(&format!(",{}_m", p.profile.as_str()));
        }
        out.push('\n');
        for (i, seed) in self.seeds.iter().enumerate() {
            out.push_str(&format!("{i},{seed}"));
            for p in &self.profiles {
                out.push_str(&format!(",{:.9e}", p.misalignments[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Flies every configured profile `runs` times with the noisy estimator.
/// Run `i` of every profile shares the seed `derive_seed(seed, i)`, so the
/// sensor errors are paired across profiles.
pub fn monte_carlo_landing(s: &Scenario, runs: usize) -> Result<MonteCarloReport, ScenarioError> {
    s.validate()?;
    if runs == 0 {
        return Err(ScenarioError::Config("runs must be positive".into()));
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|i| derive_seed(s.run.seed, i)).collect();
    let kinds = s.monte_carlo.profiles.clone();
    let jobs: Vec<(usize, usize)> = (0..kinds.len()).flat_map(|p| (0..runs).map(move |i| (p, i))).collect();
    let results: Vec<(f64, f64, bool, bool)> = jobs
        .par_iter()
        .map(|&(p, i)| {
            let mut run = s.with_profile(kinds[p]);
            run.run.seed = seeds[i];
            run.estimator.mode = EstimatorMode::Noisy;
            let out = fly(&run)?;
            let r = out.report;
            Ok((r.landing_misalignment, r.propellant_used, r.touched_down, r.outcome == Outcome::Nominal))
        })
        .collect::<Result<_, ScenarioError>>()?;
    let profiles = kinds
        .iter()
        .enumerate()
        .map(|(p, &kind)| {
            let chunk = &results[p * runs..(p + 1) * runs];
            // Hard landings still end on the ground and count towards dispersion.
            let ok: Vec<(f64, f64)> = chunk.iter().filter(|r| r.2).map(|r| (r.0, r.1)).collect();
            let n = ok.len() as f64;
            let mean = ok.iter().map(|r| r.0).sum::<f64>() / n;
            let var = if ok.len() > 1 {
                ok.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            LandingStats {
                profile: kind,
                mean,
                std_dev: var.sqrt(),
                max: ok.iter().map(|r| r.0).fold(0.0, f64::max),
                failures: chunk.iter().filter(|r| !r.3).count(),
                misalignments: chunk.iter().map(|r| if r.2 { r.0 } else { f64::NAN }).collect(),
                mean_propellant: ok.iter().map(|r| r.1).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(MonteCarloReport {
        runs,
        batch_seed: s.run.seed,
        horizontal_range: s.profile.horizontal_range,
        seeds,
        profiles,
    })
}

/// A sweep cell whose equilibrium temperature exceeds component limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlaggedCell {
    /// W
    pub heat_load: f64,
    pub emissivity: f64,
    /// K
    pub equilibrium: f64,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalOutcome {
    pub sweep: SweepResult,
    pub limits_file: Option<PathBuf>,
    pub flagged: Vec<FlaggedCell>,
}

impl ThermalOutcome {
    pub fn table(&self) -> String {
        let mut out = format!("equilibrium temperature, K (rows: heat load W, columns: emissivity)\n{:>8}", "q_w");
        for e in &self.sweep.emissivities {
            out.push_str(&format!(" {e:>8.2}"));
        }
        out.push('\n');
        for (q, row) in self.sweep.heat_loads.iter().zip(&self.sweep.equilibrium) {
            out.push_str(&format!("{q:>8.1}"));
            for v in row {
                out.push_str(&format!(" {v:>8.1}"));
            }
            out.push('\n');
        }
        match &self.limits_file {
            Some(_) => out.push_str(&format!(
                "{} of {} cells exceed at least one component maximum\n",
                self.flagged.len(),
                self.sweep.heat_loads.len() * self.sweep.emissivities.len()
            )),
            None => out.push_str("no component limits file configured\n"),
        }
        out
    }
}

pub fn run_thermal_sweep(s: &Scenario) -> Result<ThermalOutcome, ScenarioError> {
    s.validate()?;
    let t = &s.thermal;
    let sweep = thermal_sweep(&t.heat_loads, &t.emissivities, t.elapsed, t.dt, &t.body)
        .map_err(|e| ScenarioError::Config(format!("[thermal] {e}")))?;
    let limits_file = t.limits_file.as_ref().map(|p| s.resolve(p));
    let limits = match &limits_file {
        Some(p) => load_component_limits(p).map_err(|e| ScenarioError::Config(format!("[thermal] {e}")))?,
        None => Vec::new(),
    };
    let mut flagged = Vec::new();
    for (i, &q) in sweep.heat_loads.iter().enumerate() {
        for (j, &e) in sweep.emissivities.iter().enumerate() {
            let teq = sweep.equilibrium[i][j];
            let over = components_exceeded(&limits, teq);
            if !over.is_empty() {
                flagged.push(FlaggedCell {
                    heat_load: q,
                    emissivity: e,
                    equilibrium: teq,
                    components: over.iter().map(|c| format!("{}/{}", c.subsystem, c.component)).collect(),
                });
            }
        }
    }
    Ok(ThermalOutcome {
        sweep,
        limits_file,
        flagged,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetOutcome {
    pub report: BudgetReport,
    /// Telemetry used for the propellant cross-check.
    pub telemetry: Option<PathBuf>,
    pub notice: Option<String>,
}

/// Most recently written flight telemetry in `dir`.
pub fn latest_telemetry(dir: &Path) -> Option<PathBuf> {
    let entries = std::fs::read_dir(dir).ok()?;
    entries
        .filter_map(Result::ok)
        .filter(|e| e.file_name().to_string_lossy().ends_with(TELEMETRY_SUFFIX))
        .filter_map(|e| Some((e.metadata().ok()?.modified().ok()?, e.path())))
        .max()
        .map(|(_, p)| p)
}

/// Propellant used in a recorded flight, kg.
pub fn telemetry_propellant(rows: &[TelemetryRow]) -> f64 {
    let dt = match rows {
        [a, b, ..] => b.t - a.t,
        _ => 0.0,
    };
    rows.iter().map(|r| r.flows().iter().sum::<f64>() * dt).sum()
}

pub fn run_budget(s: &Scenario) -> Result<BudgetOutcome, ScenarioError> {
    s.validate()?;
    let dir = s.resolve(&s.run.out_dir);
    let (simulated, telemetry, notice) = match latest_telemetry(&dir) {
        Some(path) => {
            let rows = read_csv(&path)?;
            (Some(telemetry_propellant(&rows)), Some(path), None)
        }
        None => (
            None,
            None,
            Some(format!(
                "no flight telemetry in {}; propellant cross-check skipped",
                dir.display()
            )),
        ),
    };
    let report = budget_report(&s.budget, simulated).map_err(|e| ScenarioError::Config(format!("[budget] {e}")))?;
    Ok(BudgetOutcome {
        report,
        telemetry,
        notice,
    })
}
