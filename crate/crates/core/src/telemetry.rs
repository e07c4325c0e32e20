//! Per-step flight telemetry and its CSV form.
//!
//! Every float is rounded to nine significant digits when a row is recorded,
//! so the in-memory rows and the rows parsed back from the CSV are identical.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::FlightPhase;

/// Rounds to the value the CSV will hold.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// State at `t` plus the actuator values applied over `[t, t + dt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub t: f64,
    pub phase: FlightPhase,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
    pub mass: f64,
    /// deg
    pub roll: f64,
    /// deg
    pub pitch: f64,
    /// deg
    pub yaw: f64,
    pub ref_x: f64,
    pub ref_y: f64,
    pub ref_z: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_z: f64,
    /// Commanded flow per thruster, kg/s.
    pub cmd1: f64,
    pub cmd2: f64,
    pub cmd3: f64,
    pub cmd4: f64,
    /// Mean actual flow over the step, kg/s.
    pub flow1: f64,
    pub flow2: f64,
    pub flow3: f64,
    pub flow4: f64,
    /// N
    pub thrust1: f64,
    pub thrust2: f64,
    pub thrust3: f64,
    pub thrust4: f64,
    pub saturated: bool,
}

impl TelemetryRow {
    pub fn quantized(mut self) -> Self {
        for v in self.floats_mut() {
            *v = quantize(*v);
        }
        self
    }

    fn floats_mut(&mut self) -> [&mut f64; 36] {
        [
            &mut self.t,
            &mut self.x,
            &mut self.y,
            &mut self.z,
            &mut self.vx,
            &mut self.vy,
            &mut self.vz,
            &mut self.qw,
            &mut self.qx,
            &mut self.qy,
            &mut self.qz,
            &mut self.wx,
            &mut self.wy,
            &mut self.wz,
            &mut self.mass,
            &mut self.roll,
            &mut self.pitch,
            &mut self.yaw,
            &mut self.ref_x,
            &mut self.ref_y,
            &mut self.ref_z,
            &mut self.est_x,
            &mut self.est_y,
            &mut self.est_z,
            &mut self.cmd1,
            &mut self.cmd2,
            &mut self.cmd3,
            &mut self.cmd4,
            &mut self.flow1,
            &mut self.flow2,
            &mut self.flow3,
            &mut self.flow4,
            &mut self.thrust1,
            &mut self.thrust2,
            &mut self.thrust3,
            &mut self.thrust4,
        ]
    }

    pub fn commands(&self) -> [f64; 4] {
        [self.cmd1, self.cmd2, self.cmd3, self.cmd4]
    }

    pub fn flows(&self) -> [f64; 4] {
        [self.flow1, self.flow2, self.flow3, self.flow4]
    }

    pub fn thrusts(&self) -> [f64; 4] {
        [self.thrust1, self.thrust2, self.thrust3, self.thrust4]
    }

    pub fn firing(&self) -> bool {
        self.commands().iter().any(|c| *c > 0.0)
    }
}

/// Writes `path` atomically: the rows go to a sibling temporary file which is
/// renamed over the target once complete.
pub fn write_csv(path: &Path, rows: &[TelemetryRow]) -> io::Result<()> {
    atomic_write(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in rows {
            out.serialize(r).map_err(io::Error::other)?;
        }
        out.flush()
    })
}

pub fn read_csv(path: &Path) -> io::Result<Vec<TelemetryRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(io::Error::other)?;
    rdr.deserialize().map(|r| r.map_err(io::Error::other)).collect()
}

/// Runs `fill` against a temporary file next to `path`, then renames it into
/// place. A failure leaves any previous file untouched.
pub fn atomic_write<F>(path: &Path, fill: F) -> io::Result<()>
where
    F: FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut w = io::BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()
    })();
    match result {
        Ok(()) => fs::rename(&tmp, path),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Atomic write of a whole string.
pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    atomic_write(path, |w| w.write_all(text.as_bytes()))
}
