//! Real-time cooperative mission planning for fixed-wing UAV swarms.
//!
//! Allocation costs are Dubins path lengths, so the number used to pick a
//! task is the distance the vehicle will actually fly. Around that sit a
//! K-means preprocessing step, greedy / Hungarian / auction allocation
//! strategies, an offline simulated-annealing benchmark and a deterministic
//! fixed-step simulator with emergency injection (new tasks, UAV damage).

pub mod allocation;
pub mod bench;
pub mod cluster;
pub mod geometry;
pub mod metrics;
pub mod mission;
pub mod sa;
pub mod sim;
