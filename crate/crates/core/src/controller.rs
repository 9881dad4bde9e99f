//! FCW / staged AEB controller.
//!
//! Every tick the controller turns the ego speed into four time budgets:
//!
//! ```text
//! t_fcw = tau_react + v / a_driver     (driver reacts, then brakes)
//! t_pb1 = v / a_pb1                    (stopping times at each
//! t_pb2 = v / a_pb2                     autonomous braking level)
//! t_fb  = v / a_fb
//! ```
//!
//! and compares the time-to-collision of the most important object against
//! them. The deepest stage whose budget exceeds the TTC is the target;
//! escalation to it is immediate.
//!
//! Release rules: FCW drops back once TTC exceeds `release_hysteresis * t_fcw`
//! (or the gap stops closing). A braking stage holds until the gap is
//! clearly opening, by more than [`BRAKE_RELEASE_OPENING_SPEED`]; losing the
//! MIO or coming to rest resets to `Default`.

use crate::tracking::MioReport;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("braking deceleration must be positive, got {0}")]
    NonPositiveDeceleration(f64),
    #[error("ego speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("invalid controller parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    pub tau_react: f64,
    pub a_driver: f64,
    pub a_pb1: f64,
    pub a_pb2: f64,
    pub a_fb: f64,
    pub release_hysteresis: f64,
    pub sample_time: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            tau_react: 1.2,
            a_driver: 4.0,
            a_pb1: 3.8,
            a_pb2: 5.3,
            a_fb: 9.8,
            release_hysteresis: 1.2,
            sample_time: 0.05,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if !(self.a_pb1 > 0.0 && self.a_pb1 <= self.a_pb2 && self.a_pb2 <= self.a_fb) {
            return Err(ControllerError::InvalidParams("need 0 < a_pb1 <= a_pb2 <= a_fb"));
        }
        if !(self.a_driver > 0.0) {
            return Err(ControllerError::InvalidParams("a_driver must be positive"));
        }
        if !(self.tau_react >= 0.0) {
            return Err(ControllerError::InvalidParams("tau_react must be non-negative"));
        }
        if !(self.release_hysteresis >= 1.0) {
            return Err(ControllerError::InvalidParams("release_hysteresis must be >= 1"));
        }
        if !(self.sample_time > 0.0) {
            return Err(ControllerError::InvalidParams("sample_time must be positive"));
        }
        Ok(())
    }
}

/// Ordered by escalation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum AebState {
    #[default]
    Default,
    Fcw,
    Pb1,
    Pb2,
    Fb,
}

impl AebState {
    pub const ALL: [AebState; 5] = [Self::Default, Self::Fcw, Self::Pb1, Self::Pb2, Self::Fb];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Default => "Default",
            Self::Fcw => "FCW",
            Self::Pb1 => "PB1",
            Self::Pb2 => "PB2",
            Self::Fb => "FB",
        }
    }

    pub fn is_braking(self) -> bool {
        self >= Self::Pb1
    }

    pub fn deceleration(self, p: &ControllerParams) -> f64 {
        match self {
            Self::Default | Self::Fcw => 0.0,
            Self::Pb1 => p.a_pb1,
            Self::Pb2 => p.a_pb2,
            Self::Fb => p.a_fb,
        }
    }
}

impl fmt::Display for AebState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AebState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown AEB state `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub fcw: f64,
    pub pb1: f64,
    pub pb2: f64,
    pub fb: f64,
}

impl Thresholds {
    fn for_state(&self, s: AebState) -> f64 {
        match s {
            AebState::Default => 0.0,
            AebState::Fcw => self.fcw,
            AebState::Pb1 => self.pb1,
            AebState::Pb2 => self.pb2,
            AebState::Fb => self.fb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerOutput {
    pub state: AebState,
    pub fcw_active: bool,
    pub commanded_deceleration: f64,
    pub ttc: Option<f64>,
    pub thresholds: Thresholds,
}

/// Time to stop from `v_ego` at constant deceleration `a_brake`.
pub fn stopping_time(v_ego: f64, a_brake: f64) -> Result<f64, ControllerError> {
    if !(a_brake > 0.0) {
        return Err(ControllerError::NonPositiveDeceleration(a_brake));
    }
    if !(v_ego >= 0.0) {
        return Err(ControllerError::NegativeSpeed(v_ego));
    }
    Ok(v_ego / a_brake)
}

/// Reaction delay plus the driver's own stopping time.
pub fn fcw_threshold(v_ego: f64, p: &ControllerParams) -> f64 {
    p.tau_react + v_ego.max(0.0) / p.a_driver
}

pub fn thresholds(v_ego: f64, p: &ControllerParams) -> Thresholds {
    let v = v_ego.max(0.0);
    Thresholds {
        fcw: fcw_threshold(v, p),
        pb1: v / p.a_pb1,
        pb2: v / p.a_pb2,
        fb: v / p.a_fb,
    }
}

/// Relative speed (m/s, positive = opening) a braking stage waits for before
/// letting go. Near standstill the estimated relative speed of a stopped
/// lead hovers around zero; releasing on its sign alone lets the ego creep.
pub const BRAKE_RELEASE_OPENING_SPEED: f64 = 0.5;

/// `None` unless the MIO is present and closing.
pub fn ttc(mio: &MioReport) -> Option<f64> {
    if mio.is_present() && mio.relative_velocity < 0.0 {
        Some(mio.relative_distance / -mio.relative_velocity)
    } else {
        None
    }
}

fn target_stage(ttc: Option<f64>, th: &Thresholds) -> AebState {
    match ttc {
        None => AebState::Default,
        Some(t) if t < th.fb => AebState::Fb,
        Some(t) if t < th.pb2 => AebState::Pb2,
        Some(t) if t < th.pb1 => AebState::Pb1,
        Some(t) if t < th.fcw => AebState::Fcw,
        Some(_) => AebState::Default,
    }
}

pub fn step(state: AebState, mio: &MioReport, v_ego: f64, p: &ControllerParams) -> ControllerOutput {
    let th = thresholds(v_ego, p);
    let ttc = ttc(mio);
    let target = target_stage(ttc, &th);

    let next = if !mio.is_present() || v_ego <= 0.0 {
        AebState::Default
    } else if target >= state {
        target
    } else if state.is_braking() {
        if mio.relative_velocity > BRAKE_RELEASE_OPENING_SPEED {
            target
        } else {
            state
        }
    } else {
        let released = ttc.map_or(true, |t| t > p.release_hysteresis * th.for_state(state));
        if released {
            target
        } else {
            state
        }
    };

    ControllerOutput {
        state: next,
        fcw_active: next >= AebState::Fcw,
        commanded_deceleration: next.deceleration(p),
        ttc,
        thresholds: th,
    }
}
