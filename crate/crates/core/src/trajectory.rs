//! Reference trajectories for the four flight profiles.
//!
//! Every reference is a chain of constant-acceleration segments, so position
//! is piecewise quadratic and velocity piecewise linear and continuous. All
//! motion happens in the x-z plane; +x is the outbound direction.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlLimits, FlightPhase};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),
    #[error("profile needs horizontal speed {required:.3} m/s above limit {limit:.3} m/s")]
    SpeedLimit { required: f64, limit: f64 },
    #[error("profile infeasible: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Ballistic,
    ConstantAltitude,
    Combined,
    SemiBallistic,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 4] = [
        ProfileKind::Ballistic,
        ProfileKind::ConstantAltitude,
        ProfileKind::Combined,
        ProfileKind::SemiBallistic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Ballistic => "ballistic",
            ProfileKind::ConstantAltitude => "constant_altitude",
            ProfileKind::Combined => "combined",
            ProfileKind::SemiBallistic => "semi_ballistic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|k| k.as_str() == norm)
    }
}

impl std::fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Geometry and kinematic limits of one reference. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    pub kind: ProfileKind,
    /// Total horizontal path, m. A round trip turns around at half of it.
    pub horizontal_range: f64,
    pub cruise_altitude: f64,
    /// Apex of the single hop, Ballistic only.
    pub ballistic_apex: f64,
    /// Height of the vertical take-off and landing legs, SemiBallistic only.
    pub vtol_height: f64,
    pub max_horizontal_speed: f64,
    pub round_trip: bool,
    /// Cap on climb and sink speed, m/s.
    pub vertical_speed: f64,
    /// Acceleration of vertical legs, m/s².
    pub vertical_accel: f64,
    /// Acceleration of cruise legs, m/s².
    pub cruise_accel: f64,
    /// Magnitude of boost and brake accelerations, m/s².
    pub boost_accel: f64,
    /// Thrust tilt of boost and brake burns.
    pub boost_tilt: f64,
    /// Largest thrust tilt of the single hop burns, Ballistic only.
    pub hop_tilt: f64,
    /// Hover before the final vertical descent, s.
    pub hover_dwell: f64,
    /// Height below which the sink rate is `landing_speed`.
    pub landing_height: f64,
    pub landing_speed: f64,
    pub gravity: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            kind: ProfileKind::SemiBallistic,
            horizontal_range: 400.0,
            cruise_altitude: 50.0,
            ballistic_apex: 120.0,
            vtol_height: 5.0,
            max_horizontal_speed: 30.0,
            round_trip: false,
            vertical_speed: 8.0,
            vertical_accel: 1.5,
            cruise_accel: 0.45,
            boost_accel: 3.24,
            boost_tilt: 12f64.to_radians(),
            hop_tilt: 17f64.to_radians(),
            hover_dwell: 3.0,
            landing_height: 1.0,
            landing_speed: 0.5,
            gravity: crate::sim::LUNAR_GRAVITY,
        }
    }
}

impl ProfileParams {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let bad = |m: String| Err(TrajectoryError::InvalidParameter(m));
        let positive = [
            ("max_horizontal_speed", self.max_horizontal_speed),
            ("vertical_speed", self.vertical_speed),
            ("vertical_accel", self.vertical_accel),
            ("cruise_accel", self.cruise_accel),
            ("boost_accel", self.boost_accel),
            ("landing_speed", self.landing_speed),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.horizontal_range >= 0.0 && self.horizontal_range.is_finite()) {
            return bad(format!("horizontal_range must be non-negative, got {}", self.horizontal_range));
        }
        if !(self.hover_dwell >= 0.0 && self.landing_height >= 0.0) {
            return bad("hover_dwell and landing_height must be non-negative".into());
        }
        if !(self.vtol_height >= 0.0 && self.cruise_altitude > self.vtol_height) {
            return bad(format!(
                "need cruise_altitude > vtol_height >= 0, got {} and {}",
                self.cruise_altitude, self.vtol_height
            ));
        }
        if !(self.boost_tilt > 0.0 && self.boost_tilt < std::f64::consts::FRAC_PI_2) {
            return bad(format!("boost_tilt must lie in (0, 90) deg, got {}", self.boost_tilt.to_degrees()));
        }
        if !(self.hop_tilt > 0.0 && self.hop_tilt < std::f64::consts::FRAC_PI_2) {
            return bad(format!("hop_tilt must lie in (0, 90) deg, got {}", self.hop_tilt.to_degrees()));
        }
        if self.vertical_accel > self.gravity {
            return bad("vertical_accel above gravity would need negative thrust to start a descent".into());
        }
        Ok(())
    }
}

/// Constant-acceleration piece of a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t0: f64,
    pub duration: f64,
    pub p0: Vector3<f64>,
    pub v0: Vector3<f64>,
    pub accel: Vector3<f64>,
    pub phase: FlightPhase,
    /// False for unpowered coasts.
    pub powered: bool,
}

impl Segment {
    pub fn end_time(&self) -> f64 {
        self.t0 + self.duration
    }

    fn at(&self, tau: f64) -> (Vector3<f64>, Vector3<f64>) {
        (
            self.p0 + self.v0 * tau + self.accel * (0.5 * tau * tau),
            self.v0 + self.accel * tau,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub phase: FlightPhase,
    pub powered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSequence {
    pub kind: ProfileKind,
    pub segments: Vec<Segment>,
}

impl ReferenceSequence {
    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, Segment::end_time)
    }

    fn segment_index(&self, t: f64) -> usize {
        let i = self.segments.partition_point(|s| s.end_time() <= t);
        i.min(self.segments.len().saturating_sub(1))
    }

    /// Reference at `t`, clamped to `[0, duration]`.
    pub fn sample(&self, t: f64) -> ReferencePoint {
        let t = t.clamp(0.0, self.duration());
        let seg = &self.segments[self.segment_index(t)];
        let tau = (t - seg.t0).clamp(0.0, seg.duration);
        let (position, velocity) = seg.at(tau);
        ReferencePoint {
            t,
            position,
            velocity,
            acceleration: seg.accel,
            phase: seg.phase,
            powered: seg.powered,
        }
    }

    pub fn start(&self) -> ReferencePoint {
        self.sample(0.0)
    }

    pub fn end(&self) -> ReferencePoint {
        self.sample(self.duration())
    }

    /// Acceleration at the start of the first powered segment after `t`.
    pub fn next_powered_accel(&self, t: f64) -> Option<Vector3<f64>> {
        let i = self.segment_index(t);
        self.segments[i..].iter().find(|s| s.powered && s.t0 >= t).map(|s| s.accel)
    }

    /// Points every `dt` plus the end point.
    pub fn dense(&self, dt: f64) -> Vec<ReferencePoint> {
        let n = (self.duration() / dt).floor() as usize;
        let mut out: Vec<_> = (0..=n).map(|k| self.sample(k as f64 * dt)).collect();
        if out.last().is_some_and(|p| p.t < self.duration()) {
            out.push(self.end());
        }
        out
    }

    /// Arc length, integrated segment by segment with Simpson's rule.
    pub fn path_length(&self) -> f64 {
        const N: usize = 64;
        self.segments
            .iter()
            .map(|s| {
                if s.duration == 0.0 {
                    return 0.0;
                }
                // Split at a speed zero so the integrand stays smooth.
                let mut cuts = vec![0.0, s.duration];
                if s.accel.norm_squared() > 0.0 {
                    let tz = -s.v0.dot(&s.accel) / s.accel.norm_squared();
                    if tz > 0.0 && tz < s.duration {
                        cuts.insert(1, tz);
                    }
                }
                cuts.windows(2)
                    .map(|w| {
                        let h = (w[1] - w[0]) / N as f64;
                        let speed = |k: usize| s.at(w[0] + k as f64 * h).1.norm();
                        let mut acc = speed(0) + speed(N);
                        for k in 1..N {
                            acc += speed(k) * if k % 2 == 1 { 4.0 } else { 2.0 };
                        }
                        acc * h / 3.0
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn peak_altitude(&self) -> f64 {
        let mut peak = f64::NEG_INFINITY;
        for s in &self.segments {
            let (p_end, _) = s.at(s.duration);
            peak = peak.max(s.p0.z).max(p_end.z);
            if s.accel.z != 0.0 {
                let tz = -s.v0.z / s.accel.z;
                if tz > 0.0 && tz < s.duration {
                    peak = peak.max(s.at(tz).0.z);
                }
            }
        }
        peak
    }

    pub fn max_horizontal_speed(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.v0, s.at(s.duration).1])
            .map(|v| v.x.hypot(v.y))
            .fold(0.0, f64::max)
    }

    /// Horizontal displacement between start and end.
    pub fn net_displacement(&self) -> f64 {
        let d = self.end().position - self.start().position;
        d.x.hypot(d.y)
    }

    /// Checks speed and implied-tilt limits; returns the first violation.
    pub fn check_limits(&self, limits: &ControlLimits, gravity: f64) -> Result<(), TrajectoryError> {
        let tol = 1e-9;
        let vh = self.max_horizontal_speed();
        if vh > limits.max_horizontal_speed + tol {
            return Err(TrajectoryError::SpeedLimit {
                required: vh,
                limit: limits.max_horizontal_speed,
            });
        }
        let vertical = |p: FlightPhase| matches!(p, FlightPhase::VerticalAscent | FlightPhase::VerticalDescent);
        for s in self.segments.iter().filter(|s| s.powered) {
            for v in [s.v0, s.at(s.duration).1].into_iter().filter(|_| vertical(s.phase)) {
                if v.z.abs() > limits.max_vertical_speed + tol {
                    return Err(TrajectoryError::Infeasible(format!(
                        "vertical speed {:.3} m/s above limit {:.3}",
                        v.z.abs(),
                        limits.max_vertical_speed
                    )));
                }
            }
            let tilt = implied_tilt(&s.accel, gravity);
            if tilt > limits.max_tilt + tol {
                return Err(TrajectoryError::Infeasible(format!(
                    "implied tilt {:.2} deg above limit {:.2}",
                    tilt.to_degrees(),
                    limits.max_tilt.to_degrees()
                )));
            }
        }
        Ok(())
    }
}

/// Tilt of the thrust vector needed to produce `accel` against `gravity`.
pub fn implied_tilt(accel: &Vector3<f64>, gravity: f64) -> f64 {
    let vertical = accel.z + gravity;
    accel.x.hypot(accel.y).atan2(vertical)
}

/// Impulsive launch for a symmetric hop: `(vz0, time_of_flight, vx0)`.
pub fn ballistic_launch(apex: f64, range: f64, gravity: f64) -> Result<(f64, f64, f64), TrajectoryError> {
    if !(apex > 0.0) {
        return Err(TrajectoryError::InvalidParameter(format!(
            "ballistic apex must be positive, got {apex}"
        )));
    }
    let vz0 = (2.0 * gravity * apex).sqrt();
    let tof = 2.0 * vz0 / gravity;
    Ok((vz0, tof, range / tof))
}

/// Finite-burn arc from rest to an apex `rise` higher, thrust tilted by
/// exactly `tilt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSolution {
    pub accel: Vector3<f64>,
    pub burn_time: f64,
    pub coast_time: f64,
    /// Horizontal speed at burnout and apex.
    pub cruise_speed: f64,
    /// Horizontal distance covered from burn start to apex.
    pub footprint: f64,
}

pub fn solve_arc(rise: f64, boost_accel: f64, tilt: f64, gravity: f64) -> Result<ArcSolution, TrajectoryError> {
    // a_x = tan(tilt)·(a_z + g) and |a| = boost_accel.
    let t2 = tilt.tan().powi(2);
    let a = 1.0 + t2;
    let b = 2.0 * t2 * gravity;
    let c = t2 * gravity * gravity - boost_accel * boost_accel;
    let disc = b * b - 4.0 * a * c;
    let az = (-b + disc.max(0.0).sqrt()) / (2.0 * a);
    if !(az > 0.0) {
        return Err(TrajectoryError::Infeasible(format!(
            "boost acceleration {boost_accel} m/s² cannot climb at {:.1} deg tilt",
            tilt.to_degrees()
        )));
    }
    let ax = tilt.tan() * (az + gravity);
    Ok(arc_from_accel(rise, ax, az, gravity))
}

fn arc_from_accel(rise: f64, ax: f64, az: f64, gravity: f64) -> ArcSolution {
    let vz = (2.0 * rise / (1.0 / az + 1.0 / gravity)).sqrt();
    let burn_time = vz / az;
    let coast_time = vz / gravity;
    let vx = ax * burn_time;
    ArcSolution {
        accel: Vector3::new(ax, 0.0, az),
        burn_time,
        coast_time,
        cruise_speed: vx,
        footprint: 0.5 * ax * burn_time * burn_time + vx * coast_time,
    }
}

/// Finite-burn symmetric hop covering `range` with the given apex.
///
/// The burn direction is found by bisection on the launch angle; the burn
/// magnitude is `boost_accel` unless the thrust tilt would exceed
/// `max_tilt`, in which case it is reduced to sit on the tilt limit.
pub fn solve_hop(
    range: f64,
    apex: f64,
    boost_accel: f64,
    max_tilt: f64,
    gravity: f64,
) -> Result<ArcSolution, TrajectoryError> {
    let half = 0.5 * range;
    let arc_at = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let k = s - max_tilt.tan() * c;
        let mag = if k > 0.0 {
            boost_accel.min(max_tilt.tan() * gravity / k)
        } else {
            boost_accel
        };
        arc_from_accel(apex, mag * s, mag * c, gravity)
    };
    let mut lo = 1e-6;
    let mut hi = 89f64.to_radians();
    if arc_at(hi).footprint < half {
        return Err(TrajectoryError::Infeasible(format!(
            "hop of {range} m unreachable with apex {apex} m"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if arc_at(mid).footprint < half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(arc_at(0.5 * (lo + hi)))
}

struct Builder {
    t: f64,
    p: Vector3<f64>,
    v: Vector3<f64>,
    segments: Vec<Segment>,
}

impl Builder {
    fn new() -> Self {
        Self {
            t: 0.0,
            p: Vector3::zeros(),
            v: Vector3::zeros(),
            segments: Vec::new(),
        }
    }

    fn push(&mut self, accel: Vector3<f64>, duration: f64, phase: FlightPhase, powered: bool) {
        if duration <= 0.0 {
            return;
        }
        let seg = Segment {
            t0: self.t,
            duration,
            p0: self.p,
            v0: self.v,
            accel,
            phase,
            powered,
        };
        let (p, v) = seg.at(duration);
        self.segments.push(seg);
        self.t += duration;
        self.p = p;
        self.v = v;
    }

    fn hold(&mut self, duration: f64, phase: FlightPhase) {
        self.push(Vector3::zeros(), duration, phase, true);
    }

    /// Trapezoidal (or triangular) move of `distance` along unit `dir`,
    /// from the current speed along `dir` to `v_end`.
    fn travel(
        &mut self,
        dir: Vector3<f64>,
        distance: f64,
        v_end: f64,
        v_max: f64,
        accel: f64,
        phase: FlightPhase,
    ) -> Result<(), TrajectoryError> {
        let v0 = self.v.dot(&dir);
        let v1 = v_end;
        if distance <= 0.0 {
            if (v0 - v1).abs() > 1e-9 {
                return Err(TrajectoryError::Infeasible("zero-length leg with a speed change".into()));
            }
            return Ok(());
        }
        if v0 > v_max + 1e-9 || v1 > v_max + 1e-9 {
            return Err(TrajectoryError::SpeedLimit {
                required: v0.max(v1),
                limit: v_max,
            });
        }
        let d_full = (2.0 * v_max * v_max - v0 * v0 - v1 * v1) / (2.0 * accel);
        let peak = if d_full <= distance {
            v_max
        } else {
            ((2.0 * accel * distance + v0 * v0 + v1 * v1) / 2.0).sqrt()
        };
        if peak < v0.max(v1) - 1e-9 {
            return Err(TrajectoryError::Infeasible(format!(
                "{distance:.3} m too short to change speed from {v0:.3} to {v1:.3} m/s"
            )));
        }
        let t_up = (peak - v0).max(0.0) / accel;
        let t_down = (peak - v1).max(0.0) / accel;
        let d_ramps = (peak * peak - v0 * v0) / (2.0 * accel) + (peak * peak - v1 * v1) / (2.0 * accel);
        let t_flat = ((distance - d_ramps) / peak).max(0.0);
        self.push(dir * accel, t_up, phase, true);
        self.push(Vector3::zeros(), t_flat, phase, true);
        self.push(-dir * accel, t_down, phase, true);
        // Remove round-off drift so junctions are exact.
        self.v = dir * v1 + (self.v - dir * self.v.dot(&dir));
        Ok(())
    }

    fn climb(&mut self, to: f64, p: &ProfileParams, phase: FlightPhase) -> Result<(), TrajectoryError> {
        let up = Vector3::z();
        self.travel(up, to - self.p.z, 0.0, p.vertical_speed, p.vertical_accel, phase)?;
        self.p.z = to;
        Ok(())
    }

    /// Vertical descent from rest to the ground, slowing to `landing_speed`
    /// below `landing_height`.
    fn land_vertically(&mut self, p: &ProfileParams) -> Result<(), TrajectoryError> {
        let down = -Vector3::z();
        let h = self.p.z;
        let slow = p.landing_speed.min(p.vertical_speed);
        let stop = slow * slow / (2.0 * p.vertical_accel);
        let knee = p.landing_height.max(stop).min(h);
        if h - knee > 0.0 {
            let approach_end = if knee > stop { slow } else { 0.0 };
            self.travel(down, h - knee, approach_end, p.vertical_speed, p.vertical_accel, FlightPhase::VerticalDescent)?;
        }
        let v_now = -self.v.z;
        if v_now > 0.0 {
            let coast = (self.p.z - stop).max(0.0) / v_now;
            self.push(Vector3::zeros(), coast, FlightPhase::VerticalDescent, true);
            self.travel(down, self.p.z, 0.0, p.vertical_speed, p.vertical_accel, FlightPhase::VerticalDescent)?;
        } else {
            self.travel(down, self.p.z, 0.0, slow, p.vertical_accel, FlightPhase::VerticalDescent)?;
        }
        self.p.z = 0.0;
        self.v = Vector3::zeros();
        Ok(())
    }

    /// Boost then coast to the apex of `arc`, moving along +x or -x.
    fn arc_up(&mut self, arc: &ArcSolution, sign: f64, g: f64, phase: FlightPhase) {
        let a = Vector3::new(sign * arc.accel.x, 0.0, arc.accel.z);
        self.push(a, arc.burn_time, phase, true);
        self.push(Vector3::new(0.0, 0.0, -g), arc.coast_time, phase, false);
        self.v.z = 0.0;
    }

    /// Mirror image of `arc_up`: coast down from the apex then brake to rest.
    fn arc_down(&mut self, arc: &ArcSolution, sign: f64, g: f64, phase: FlightPhase) {
        self.push(Vector3::new(0.0, 0.0, -g), arc.coast_time, phase, false);
        let a = Vector3::new(-sign * arc.accel.x, 0.0, arc.accel.z);
        self.push(a, arc.burn_time, phase, true);
        self.v = Vector3::zeros();
    }

    fn finish(self, kind: ProfileKind) -> ReferenceSequence {
        ReferenceSequence {
            kind,
            segments: self.segments,
        }
    }
}

/// Cruise legs between two arcs; for a round trip the vehicle stops at the
/// turnaround point and returns along -x.
fn cruise_legs(b: &mut Builder, p: &ProfileParams, footprint_out: f64, v_arc: f64) -> Result<(), TrajectoryError> {
    let x = Vector3::x();
    let (v_max, a) = (p.max_horizontal_speed, p.cruise_accel);
    if p.round_trip {
        let leg = 0.5 * p.horizontal_range - footprint_out;
        check_leg(leg)?;
        b.travel(x, leg, 0.0, v_max, a, FlightPhase::Cruise)?;
        b.travel(-x, leg, v_arc, v_max, a, FlightPhase::Cruise)?;
    } else {
        let leg = p.horizontal_range - 2.0 * footprint_out;
        check_leg(leg)?;
        b.travel(x, leg, v_arc, v_max, a, FlightPhase::Cruise)?;
    }
    Ok(())
}

fn check_leg(leg: f64) -> Result<(), TrajectoryError> {
    if leg < -1e-9 {
        return Err(TrajectoryError::Infeasible(format!(
            "range too short for the ascent and descent arcs ({:.2} m short)",
            -leg
        )));
    }
    Ok(())
}

pub fn gen_ballistic(p: &ProfileParams) -> Result<ReferenceSequence, TrajectoryError> {
    p.validate()?;
    if p.round_trip {
        return Err(TrajectoryError::InvalidParameter(
            "a single ballistic hop cannot fly a round trip".into(),
        ));
    }
    let (_, _, vx0) = ballistic_launch(p.ballistic_apex, p.horizontal_range, p.gravity)?;
    if vx0 > p.max_horizontal_speed {
        return Err(TrajectoryError::SpeedLimit {
            required: vx0,
            limit: p.max_horizontal_speed,
        });
    }
    let arc = solve_hop(p.horizontal_range, p.ballistic_apex, p.boost_accel, p.hop_tilt, p.gravity)?;
    if arc.cruise_speed > p.max_horizontal_speed {
        return Err(TrajectoryError::SpeedLimit {
            required: arc.cruise_speed,
            limit: p.max_horizontal_speed,
        });
    }
    let mut b = Builder::new();
    b.arc_up(&arc, 1.0, p.gravity, FlightPhase::BallisticAscent);
    b.p.z = p.ballistic_apex;
    b.arc_down(&arc, 1.0, p.gravity, FlightPhase::BallisticDescent);
    b.p.z = 0.0;
    Ok(b.finish(ProfileKind::Ballistic))
}

pub fn gen_constant_altitude(p: &ProfileParams) -> Result<ReferenceSequence, TrajectoryError> {
    p.validate()?;
    let mut b = Builder::new();
    b.climb(p.cruise_altitude, p, FlightPhase::VerticalAscent)?;
    cruise_legs(&mut b, p, 0.0, 0.0)?;
    b.land_vertically(p)?;
    Ok(b.finish(ProfileKind::ConstantAltitude))
}

pub fn gen_combined(p: &ProfileParams) -> Result<ReferenceSequence, TrajectoryError> {
    p.validate()?;
    let arc = solve_arc(p.cruise_altitude, p.boost_accel, p.boost_tilt, p.gravity)?;
    arc_speed_check(&arc, p)?;
    let mut b = Builder::new();
    b.arc_up(&arc, 1.0, p.gravity, FlightPhase::BallisticAscent);
    b.p.z = p.cruise_altitude;
    cruise_legs(&mut b, p, arc.footprint, arc.cruise_speed)?;
    let sign = if p.round_trip { -1.0 } else { 1.0 };
    b.arc_down(&arc, sign, p.gravity, FlightPhase::BallisticDescent);
    b.p.z = 0.0;
    Ok(b.finish(ProfileKind::Combined))
}

pub fn gen_semi_ballistic(p: &ProfileParams) -> Result<ReferenceSequence, TrajectoryError> {
    p.validate()?;
    let arc = solve_arc(p.cruise_altitude - p.vtol_height, p.boost_accel, p.boost_tilt, p.gravity)?;
    arc_speed_check(&arc, p)?;
    let mut b = Builder::new();
    b.climb(p.vtol_height, p, FlightPhase::VerticalAscent)?;
    b.arc_up(&arc, 1.0, p.gravity, FlightPhase::BallisticAscent);
    b.p.z = p.cruise_altitude;
    cruise_legs(&mut b, p, arc.footprint, arc.cruise_speed)?;
    let sign = if p.round_trip { -1.0 } else { 1.0 };
    b.arc_down(&arc, sign, p.gravity, FlightPhase::BallisticDescent);
    b.p.z = p.vtol_height;
    b.hold(p.hover_dwell, FlightPhase::VerticalDescent);
    b.land_vertically(p)?;
    Ok(b.finish(ProfileKind::SemiBallistic))
}

fn arc_speed_check(arc: &ArcSolution, p: &ProfileParams) -> Result<(), TrajectoryError> {
    if arc.cruise_speed > p.max_horizontal_speed {
        return Err(TrajectoryError::SpeedLimit {
            required: arc.cruise_speed,
            limit: p.max_horizontal_speed,
        });
    }
    Ok(())
}

pub fn generate(p: &ProfileParams) -> Result<ReferenceSequence, TrajectoryError> {
    match p.kind {
        ProfileKind::Ballistic => gen_ballistic(p),
        ProfileKind::ConstantAltitude => gen_constant_altitude(p),
        ProfileKind::Combined => gen_combined(p),
        ProfileKind::SemiBallistic => gen_semi_ballistic(p),
    }
}

/// Free-function form of [`ReferenceSequence::sample`].
pub fn sample_reference(seq: &ReferenceSequence, t: f64) -> ReferencePoint {
    seq.sample(t)
}
