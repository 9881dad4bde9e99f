//! Closed-loop AEB (automatic emergency braking) testbench.
//!
//! A deterministic, seedable simulation that drives standard rear-end and
//! pedestrian scenarios through two radar sensor models, a multi-object
//! tracker and a staged braking controller, then logs the outcome.
//!
//! - [`fmcw`]: FMCW waveform relations and a range-Doppler pipeline.
//! - [`radar`]: object-level radar detections with noise and dropouts.
//! - [`scenario`]: actors, kinematics and the built-in scenario catalog.
//! - [`tracking`]: Kalman filter tracks, GNN association, MIO selection.
//! - [`controller`]: the FCW / partial / full braking state machine.
//! - [`sim`]: the closed loop, CSV logging and SVG plots.
//! - [`config`]: TOML run configuration.

pub mod config;
pub mod controller;
pub mod fmcw;
pub mod radar;
pub mod scenario;
pub mod sim;
pub mod tracking;

// Book chapters are compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fmcw.md")]
    mod fmcw {}
    #[doc = include_str!("../../../book/src/radar.md")]
    mod radar {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/tracking.md")]
    mod tracking {}
    #[doc = include_str!("../../../book/src/controller.md")]
    mod controller {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
