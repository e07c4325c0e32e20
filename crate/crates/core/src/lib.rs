//! Flight dynamics, control, thermal and mission-budget models for a
//! four-thruster monopropellant lunar reconnaissance drone.

pub mod budget;
pub mod control;
pub mod propulsion;
pub mod scenario;
pub mod sim;
pub mod telemetry;
pub mod thermal;
pub mod trajectory;
pub mod vehicle;
