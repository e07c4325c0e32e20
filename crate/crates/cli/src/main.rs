//! `hopsim` command-line scenario runner.
//!
//! Exit codes: 0 nominal, 1 mission failure, 2 configuration error,
//! 3 internal fault.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hopsim_core::scenario::batch::write_flight;
use hopsim_core::scenario::{
    compare_profiles, fly, monte_carlo_landing, run_budget, run_thermal_sweep, Outcome, Scenario, ScenarioError,
};
use hopsim_core::telemetry::write_text;
use hopsim_core::trajectory::ProfileKind;

#[derive(Parser)]
#[command(name = "hopsim", version, about = "Lunar hopper drone flight, thermal and budget scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fly one closed-loop mission and write telemetry and a report.
    Fly(Common),
    /// Fly several profiles over the same range and compare propellant use.
    CompareProfiles(Common),
    /// Sweep heat load and emissivity for the lumped thermal model.
    ThermalSweep(Common),
    /// Landing dispersion over many seeded flights with sensor noise.
    MonteCarloLanding(Common),
    /// Battery, refuelling, data and flight-count budgets.
    Budget(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the profile kind (ballistic, constant_altitude, combined, semi_ballistic).
    #[arg(long, value_parser = parse_profile)]
    profile: Option<ProfileKind>,
    /// Overrides the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the Monte Carlo run count.
    #[arg(long)]
    runs: Option<usize>,
}

fn parse_profile(s: &str) -> Result<ProfileKind, String> {
    ProfileKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = ProfileKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("unknown profile '{s}', expected one of {}", names.join(", "))
    })
}

impl Common {
    fn scenario(&self) -> Result<Scenario, ScenarioError> {
        let mut s = match &self.config {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        if let Some(k) = self.profile {
            s.profile.kind = k;
        }
        if let Some(seed) = self.seed {
            s.run.seed = seed;
        }
        if let Some(runs) = self.runs {
            s.monte_carlo.runs = runs;
        }
        // Command-line paths are relative to the working directory, config
        // paths to the config file.
        let dir = match &self.out_dir {
            Some(d) => d.clone(),
            None => s.resolve(&s.run.out_dir),
        };
        s.run.out_dir = std::path::absolute(dir)?;
        s.validate()?;
        Ok(s)
    }
}

fn out_dir(s: &Scenario) -> Result<PathBuf, ScenarioError> {
    std::fs::create_dir_all(&s.run.out_dir)?;
    Ok(s.run.out_dir.clone())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ScenarioError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ScenarioError::Internal(e.to_string()))?;
    write_text(path, &text)?;
    Ok(())
}

fn cmd_fly(c: &Common) -> Result<Outcome, ScenarioError> {
    let s = c.scenario()?;
    let dir = out_dir(&s)?;
    let out = fly(&s)?;
    write_flight(&dir, &out)?;
    if s.run.dump_reference {
        let dense = out.reference.dense(s.sim.dt);
        let mut text = String::from("t,phase,x,y,z,vx,vy,vz,ax,ay,az,powered\n");
        for p in &dense {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                p.t,
                p.phase.as_str(),
                p.position.x,
                p.position.y,
                p.position.z,
                p.velocity.x,
                p.velocity.y,
                p.velocity.z,
                p.acceleration.x,
                p.acceleration.y,
                p.acceleration.z,
                p.powered
            ));
        }
        write_text(&dir.join(format!("{}_reference.csv", s.run.name)), &text)?;
    }
    print!("{}", out.report.table());
    Ok(out.report.outcome)
}

fn cmd_compare(c: &Common) -> Result<Outcome, ScenarioError> {
    let s = c.scenario()?;
    let dir = out_dir(&s)?;
    let (report, flights) = compare_profiles(&s)?;
    for f in &flights {
        write_flight(&dir, f)?;
    }
    write_json(&dir.join(format!("{}_comparison.json", s.run.name)), &report)?;
    write_text(&dir.join(format!("{}_comparison.txt", s.run.name)), &report.table())?;
    println!("range {} m", report.horizontal_range);
    print!("{}", report.table());
    Ok(worst(report.entries.iter().map(|e| e.report.outcome)))
}

fn cmd_thermal(c: &Common) -> Result<Outcome, ScenarioError> {
    let s = c.scenario()?;
    let dir = out_dir(&s)?;
    let t = run_thermal_sweep(&s)?;
    let name = &s.run.name;
    write_text(
        &dir.join(format!("{name}_equilibrium_k.csv")),
        &t.sweep.matrix_csv(&t.sweep.equilibrium),
    )?;
    write_text(&dir.join(format!("{name}_delta_t_k.csv")), &t.sweep.matrix_csv(&t.sweep.delta_t))?;
    write_json(&dir.join(format!("{name}_sweep.json")), &t)?;
    print!("{}", t.table());
    Ok(Outcome::Nominal)
}

fn cmd_monte_carlo(c: &Common) -> Result<Outcome, ScenarioError> {
    let s = c.scenario()?;
    let dir = out_dir(&s)?;
    let r = monte_carlo_landing(&s, s.monte_carlo.runs)?;
    let name = &s.run.name;
    write_text(&dir.join(format!("{name}_runs.csv")), &r.runs_csv())?;
    write_json(&dir.join(format!("{name}_summary.json")), &r)?;
    write_text(&dir.join(format!("{name}_summary.txt")), &r.table())?;
    print!("{}", r.table());
    let failed = r.profiles.iter().any(|p| p.failures > 0);
    Ok(if failed { Outcome::MissionFailure } else { Outcome::Nominal })
}

fn cmd_budget(c: &Common) -> Result<Outcome, ScenarioError> {
    let s = c.scenario()?;
    let dir = out_dir(&s)?;
    let b = run_budget(&s)?;
    let name = &s.run.name;
    write_json(&dir.join(format!("{name}.json")), &b)?;
    write_text(&dir.join(format!("{name}.txt")), &b.report.table())?;
    if let Some(n) = &b.notice {
        eprintln!("note: {n}");
    }
    print!("{}", b.report.table());
    let over = b.report.cross_check.is_some_and(|c| !c.pass) || !b.report.data.fits;
    Ok(if over { Outcome::MissionFailure } else { Outcome::Nominal })
}

fn worst(outcomes: impl Iterator<Item = Outcome>) -> Outcome {
    outcomes.max_by_key(|o| o.exit_code()).unwrap_or(Outcome::Nominal)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = std::panic::catch_unwind(|| match &cli.command {
        Command::Fly(c) => cmd_fly(c),
        Command::CompareProfiles(c) => cmd_compare(c),
        Command::ThermalSweep(c) => cmd_thermal(c),
        Command::MonteCarloLanding(c) => cmd_monte_carlo(c),
        Command::Budget(c) => cmd_budget(c),
    });
    let code = match result {
        Ok(Ok(outcome)) => outcome.exit_code(),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => 3,
    };
    ExitCode::from(code as u8)
}
