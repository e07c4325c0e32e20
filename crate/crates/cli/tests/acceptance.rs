//! Acceptance suite. Runs every exit criterion at its tolerance, prints one
//! line per criterion and fails when any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::Vector3;

use hopsim_core::budget::{budget_report, ground_sample_spacing, BudgetInputs};
use hopsim_core::propulsion::{
    area_ratio_at_mach, calibrate_engine, solve_exit_mach, thrust, vacuum_isp, valve_update, EngineSpec,
    ThrusterState, DEFAULT_TARGET_ISP,
};
use hopsim_core::scenario::{
    compare_profiles, compute_report, fly, monte_carlo_landing, run_thermal_sweep, RunReport, Scenario,
};
use hopsim_core::sim::{rk4_step, seeded_rng, WorldModel};
use hopsim_core::telemetry::read_csv;
use hopsim_core::thermal::{equilibrium_temperature, temperature_after, ThermalBody};
use hopsim_core::trajectory::ProfileKind;
use hopsim_core::vehicle::{dynamics_derivative, InertiaModel, RigidBodyState, Wrench};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&configs().join(name)).expect("shipped config loads")
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn nozzle_round_trip() -> Verdict {
    let start = Instant::now();
    let mut rng = seeded_rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let ar = 1.5 + 198.5 * rng.uniform();
        // γ in (1.05, 1.8]
        let gamma = 1.8 - 0.75 * rng.uniform();
        let m = solve_exit_mach(ar, gamma).expect("supersonic root");
        worst = worst.max(((area_ratio_at_mach(m, gamma) - ar) / ar).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-9 && elapsed < Duration::from_secs(1),
        format!("worst residual {worst:.2e}, {:.3} s", elapsed.as_secs_f64()),
    )
}

fn engine_calibration() -> Verdict {
    let spec = calibrate_engine(&EngineSpec::default(), DEFAULT_TARGET_ISP).expect("calibrates");
    let isps: Vec<f64> = [4.1e-3, 9e-3, 14e-3].iter().map(|&m| vacuum_isp(&spec, m).unwrap()).collect();
    let f_lo = thrust(4.1e-3, &spec, 0.0).unwrap();
    let f_hi = thrust(14e-3, &spec, 0.0).unwrap();
    let ok = isps.iter().all(|&i| within(i, 228.0, 235.0)) && within(f_lo, 9.0, 11.5) && within(f_hi, 30.0, 36.0);
    verdict(
        ok,
        format!(
            "ISP {:.2}/{:.2}/{:.2} s, F(4.1 g/s) {f_lo:.2} N, F(14 g/s) {f_hi:.2} N",
            isps[0], isps[1], isps[2]
        ),
    )
}

fn valve_step() -> Verdict {
    let spec = EngineSpec::calibrated_default();
    let dt = 0.005;
    let cmd = spec.flow_max;
    let mut s = ThrusterState::default();
    let mut at = |steps: usize| {
        for _ in 0..steps {
            s = valve_update(&s, cmd, dt, &spec);
        }
        100.0 * s.actual_flow / cmd
    };
    let p90 = at(18);
    let p450 = at(72);
    verdict(
        (p90 - 63.2).abs() <= 0.5 && (p450 - 99.3).abs() <= 0.2,
        format!("{p90:.2}% at 90 ms, {p450:.2}% at 450 ms"),
    )
}

fn coast_energy() -> Verdict {
    let world = WorldModel::default();
    let inertia = InertiaModel::homogeneous_box(15.0, [0.45, 0.48, 0.378]);
    let mut s = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, 50.0), 15.0);
    s.velocity = Vector3::new(8.0, -3.0, 12.0);
    let energy = |s: &RigidBodyState| 0.5 * s.velocity.norm_squared() + world.gravity * s.position.z;
    let e0 = energy(&s);
    let w = Wrench {
        force: Vector3::zeros(),
        torque: Vector3::zeros(),
    };
    let dt = 0.005;
    let mut x = s.to_array();
    for k in 0..6000 {
        x = rk4_step(|_, x| dynamics_derivative(x, &w, 0.0, &world, &inertia), k as f64 * dt, &x, dt).unwrap();
    }
    let drift = ((energy(&RigidBodyState::from_array(&x)) - e0) / e0).abs();
    verdict(drift < 1e-6, format!("relative drift {drift:.2e} over 30 s"))
}

struct Comparison {
    propellant: [f64; 4],
    thrust: [f64; 4],
    saving_combined: f64,
    saving_semi: f64,
    all_nominal: bool,
    elapsed: Duration,
}

fn run_comparison() -> Comparison {
    let s = scenario("compare_profiles.toml");
    let start = Instant::now();
    let (report, _) = compare_profiles(&s).expect("comparison runs");
    let elapsed = start.elapsed();
    let get = |k| report.entry(k).expect("profile flown");
    let kinds = [
        ProfileKind::Ballistic,
        ProfileKind::Combined,
        ProfileKind::ConstantAltitude,
        ProfileKind::SemiBallistic,
    ];
    Comparison {
        propellant: kinds.map(|k| get(k).report.propellant_used),
        thrust: kinds.map(|k| get(k).report.average_thrust),
        saving_combined: get(ProfileKind::Combined).saving_vs_constant_altitude.unwrap_or(f64::NAN),
        saving_semi: get(ProfileKind::SemiBallistic).saving_vs_constant_altitude.unwrap_or(f64::NAN),
        all_nominal: report.all_nominal(),
        elapsed,
    }
}

fn profile_comparison(c: &Comparison) -> Verdict {
    let [ballistic, combined, constant, _] = c.propellant;
    let [f_b, f_c, f_k, _] = c.thrust;
    let order = ballistic < combined && combined < constant;
    let saving = within(c.saving_combined, 18.0, 30.0);
    let thrust_between = f_c > f_b.min(f_k) && f_c < f_b.max(f_k);
    verdict(
        c.all_nominal && order && saving && thrust_between && c.elapsed < Duration::from_secs(30),
        format!(
            "propellant {ballistic:.3} < {combined:.3} < {constant:.3} kg, saving {:.1}%, avg thrust {f_b:.2} / {f_c:.2} / {f_k:.2} N, {:.1} s",
            c.saving_combined,
            c.elapsed.as_secs_f64()
        ),
    )
}

fn semi_vs_vertical(c: &Comparison) -> Verdict {
    verdict(
        c.saving_semi >= 10.0,
        format!(
            "semi-ballistic {:.3} kg vs vertical {:.3} kg, saving {:.1}%",
            c.propellant[3], c.propellant[2], c.saving_semi
        ),
    )
}

fn mission_flight() -> Verdict {
    let s = scenario("mission_round_trip.toml");
    let start = Instant::now();
    let out = fly(&s).expect("mission flies");
    let elapsed = start.elapsed();
    let r = &out.report;
    let ok = r.outcome.exit_code() == 0
        && within(r.flight_time, 105.0, 175.0)
        && r.propellant_used <= 1.86
        && r.cruise_altitude_error <= 2.0
        && r.max_abs_pitch <= 24.0
        && r.max_horizontal_speed <= 17.5
        && elapsed < Duration::from_secs(10);
    verdict(
        ok,
        format!(
            "{:.1} s, {:.4} kg, cruise error {:.3} m, pitch {:.2} deg, speed {:.2} m/s, {:.2} s",
            r.flight_time,
            r.propellant_used,
            r.cruise_altitude_error,
            r.max_abs_pitch,
            r.max_horizontal_speed,
            elapsed.as_secs_f64()
        ),
    )
}

fn landing_dispersion() -> Verdict {
    let s = scenario("monte_carlo_landing.toml");
    let start = Instant::now();
    let r = monte_carlo_landing(&s, 100).expect("batch runs");
    let elapsed = start.elapsed();
    let ballistic = r.stats(ProfileKind::Combined).expect("ballistic landing flown").mean;
    let semi = r.stats(ProfileKind::SemiBallistic).expect("semi-ballistic flown").mean;
    verdict(
        ballistic < 1.0 && semi < ballistic && elapsed < Duration::from_secs(120),
        format!(
            "ballistic landing mean {ballistic:.3} m, semi-ballistic mean {semi:.3} m, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn thermal() -> Verdict {
    let body = ThermalBody::default();
    let teq = equilibrium_temperature(500.0, &body);
    let full = temperature_after(&body, 500.0, 600.0, 1.0).unwrap();
    let half = temperature_after(&body, 500.0, 600.0, 0.5).unwrap();
    let step_error = ((full - half) / half).abs();
    let t = run_thermal_sweep(&scenario("thermal_sweep.toml")).expect("sweep runs");
    let sw = &t.sweep;
    let mut monotone = true;
    for m in [&sw.equilibrium, &sw.delta_t] {
        for i in 0..sw.heat_loads.len() {
            for j in 0..sw.emissivities.len() {
                if i + 1 < sw.heat_loads.len() {
                    monotone &= m[i + 1][j] > m[i][j];
                }
                if j + 1 < sw.emissivities.len() && sw.heat_loads[i] > 0.0 {
                    monotone &= m[i][j + 1] < m[i][j];
                }
            }
        }
    }
    verdict(
        (teq - 322.3).abs() <= 0.5 && step_error <= 1e-3 && monotone,
        format!("T_eq {teq:.2} K, half-step difference {step_error:.2e}, monotone {monotone}"),
    )
}

fn budgets() -> Verdict {
    let r = budget_report(&BudgetInputs::defaults(), None).expect("defaults are valid");
    let (spacing, _) = ground_sample_spacing(30.0, 300.0).unwrap();
    let ok = (r.battery_capacity - 21.2).abs() <= 1.0
        && (r.refuel_time - 11.1).abs() <= 0.5
        && (r.data.total - 225.5).abs() < 1e-9
        && r.data.fits
        && r.data.total <= 440.0
        && spacing == 0.100
        && r.total_flights == 11
        && (r.accumulated_distance - 8.8).abs() < 1e-9;
    verdict(
        ok,
        format!(
            "battery {:.2} Wh, refuel {:.2} min, data {:.1} GB, spacing {spacing} m, {} flights, {:.1} km",
            r.battery_capacity, r.refuel_time, r.data.total, r.total_flights, r.accumulated_distance
        ),
    )
}

fn fly_with_cli(out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_hopsim"))
        .args(["fly", "--config"])
        .arg(configs().join("mission_round_trip.toml"))
        .arg("--out-dir")
        .arg(out)
        .output()
        .map(|o| o.status.code() == Some(0))
        .unwrap_or(false)
}

fn determinism(tmp: &Path) -> Verdict {
    let (a, b) = (tmp.join("a"), tmp.join("b"));
    if !(fly_with_cli(&a) && fly_with_cli(&b)) {
        return verdict(false, "fly did not exit nominally".into());
    }
    let read = |d: &Path| std::fs::read(d.join("mission_telemetry.csv")).unwrap_or_default();
    let (x, y) = (read(&a), read(&b));
    verdict(
        !x.is_empty() && x == y,
        format!("{} bytes, identical {}", x.len(), x == y),
    )
}

fn report_consistency(tmp: &Path) -> Verdict {
    let dir = tmp.join("a");
    let rows = match read_csv(&dir.join("mission_telemetry.csv")) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("telemetry unreadable: {e}")),
    };
    let text = std::fs::read_to_string(dir.join("mission_report.json")).unwrap_or_default();
    let report: RunReport = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("report unreadable: {e}")),
    };
    let again = compute_report(&rows, report.meta.clone());
    let mut worst: f64 = 0.0;
    let mut worst_name = "";
    for ((name, a), (_, b)) in report.scalars().into_iter().zip(again.scalars()) {
        let rel = if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        if rel > worst {
            worst = rel;
            worst_name = name;
        }
    }
    let n = report.scalars().len();
    verdict(
        worst <= 1e-9 && again.outcome == report.outcome,
        format!("{n} scalars, worst relative difference {worst:.2e} {worst_name}"),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let comparison = run_comparison();
    let results: Vec<(&str, Verdict)> = vec![
        ("nozzle solver round trip", nozzle_round_trip()),
        ("engine calibration", engine_calibration()),
        ("valve step response", valve_step()),
        ("coast energy conservation", coast_energy()),
        ("profile comparison at 400 m", profile_comparison(&comparison)),
        ("semi-ballistic vs vertical take-off and landing", semi_vs_vertical(&comparison)),
        ("800 m round-trip mission", mission_flight()),
        ("landing dispersion", landing_dispersion()),
        ("thermal model", thermal()),
        ("mission budgets", budgets()),
        ("determinism", determinism(tmp.path())),
        ("report consistency", report_consistency(tmp.path())),
    ];
    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
