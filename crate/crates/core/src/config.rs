//! TOML run configuration.
//!
//! ```toml
//! [scenario]
//! name = "my_cut_in"
//! duration = 10.0        # s
//! ego_speed = 13.888889  # m/s
//!
//! [[actor]]
//! kind = "vehicle"
//! initial_gap = 30.0     # ego front bumper to actor rear, m
//! initial_speed = 5.0
//! overlap = 0.5          # or `crossing = 0.25` for a walker
//! brake_start = 1.0      # optional
//! brake_deceleration = 3.0
//! ```
//!
//! `[[radar]]`, `[tracker]` and `[controller]` are optional. Without any
//! `[[radar]]` table the default two-sensor suite is used; missing tracker
//! and controller keys take their defaults.

use crate::controller::ControllerParams;
use crate::radar::{default_sensor_suite, RadarConfig};
use crate::scenario::{
    catalog, find_in_catalog, ActorKind, ActorSpec, BrakeSchedule, Placement, ScenarioSpec,
    PEDESTRIAN_SIZE, VEHICLE_LENGTH, VEHICLE_WIDTH,
};
use crate::sim::{validate_setup, SimError};
use crate::tracking::TrackerParams;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

impl From<SimError> for ConfigError {
    fn from(e: SimError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    name: String,
    duration: f64,
    ego_speed: f64,
    #[serde(default = "vehicle_width")]
    ego_width: f64,
    #[serde(default = "vehicle_length")]
    ego_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActorSection {
    kind: ActorKind,
    initial_gap: f64,
    initial_speed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crossing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    brake_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    brake_deceleration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLayout {
    scenario: ScenarioSection,
    #[serde(rename = "actor")]
    actors: Vec<ActorSection>,
    #[serde(rename = "radar", default, skip_serializing_if = "Vec::is_empty")]
    radars: Vec<RadarConfig>,
    #[serde(default)]
    tracker: TrackerParams,
    #[serde(default)]
    controller: ControllerParams,
}

fn vehicle_width() -> f64 {
    VEHICLE_WIDTH
}

fn vehicle_length() -> f64 {
    VEHICLE_LENGTH
}

/// Everything a run needs besides the seed and the AEB switch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub sensors: Vec<RadarConfig>,
    pub tracker: TrackerParams,
    pub controller: ControllerParams,
}

impl RunConfig {
    /// A scenario with the default sensors, tracker and controller.
    pub fn with_defaults(scenario: ScenarioSpec) -> Self {
        Self {
            scenario,
            sensors: default_sensor_suite(),
            tracker: TrackerParams::default(),
            controller: ControllerParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_setup(&self.scenario, &self.sensors, &self.tracker, &self.controller)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let file: FileLayout = toml::from_str(text)?;
        let actors = file
            .actors
            .iter()
            .map(actor_from_section)
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = RunConfig {
            scenario: ScenarioSpec {
                name: file.scenario.name,
                duration: file.scenario.duration,
                ego_initial_speed: file.scenario.ego_speed,
                ego_width: file.scenario.ego_width,
                ego_length: file.scenario.ego_length,
                actors,
            },
            sensors: if file.radars.is_empty() {
                default_sensor_suite()
            } else {
                file.radars
            },
            tracker: file.tracker,
            controller: file.controller,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        let s = &self.scenario;
        let file = FileLayout {
            scenario: ScenarioSection {
                name: s.name.clone(),
                duration: s.duration,
                ego_speed: s.ego_initial_speed,
                ego_width: s.ego_width,
                ego_length: s.ego_length,
            },
            actors: s.actors.iter().map(section_from_actor).collect(),
            radars: self.sensors.clone(),
            tracker: self.tracker.clone(),
            controller: self.controller.clone(),
        };
        toml::to_string(&file).expect("run configuration always serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Catalog name first, then a path to a TOML file.
    pub fn resolve(name_or_path: &str) -> Result<Self, ConfigError> {
        if let Ok(spec) = find_in_catalog(name_or_path) {
            return Ok(Self::with_defaults(spec));
        }
        let path = Path::new(name_or_path);
        if path.exists() {
            return Self::load(path);
        }
        let known: Vec<String> = catalog().into_iter().map(|s| s.name).collect();
        Err(ConfigError::Invalid(format!(
            "`{name_or_path}` is neither a built-in scenario ({}) nor a file",
            known.join(", ")
        )))
    }
}

fn actor_from_section(a: &ActorSection) -> Result<ActorSpec, ConfigError> {
    let invalid = |m: &str| ConfigError::Invalid(format!("actor: {m}"));
    let placement = match (a.overlap, a.crossing) {
        (Some(fraction), None) => Placement::Overlap { fraction },
        (None, Some(fraction)) => Placement::Crossing { fraction },
        _ => return Err(invalid("exactly one of `overlap` or `crossing` is required")),
    };
    let braking = match (a.brake_start, a.brake_deceleration) {
        (Some(start_time), Some(deceleration)) => Some(BrakeSchedule {
            start_time,
            deceleration,
        }),
        (None, None) => None,
        _ => return Err(invalid("`brake_start` and `brake_deceleration` go together")),
    };
    let (w, l) = match a.kind {
        ActorKind::Pedestrian => (PEDESTRIAN_SIZE, PEDESTRIAN_SIZE),
        _ => (VEHICLE_WIDTH, VEHICLE_LENGTH),
    };
    Ok(ActorSpec {
        kind: a.kind,
        initial_gap: a.initial_gap,
        initial_speed: a.initial_speed,
        width: a.width.unwrap_or(w),
        length: a.length.unwrap_or(l),
        braking,
        placement,
    })
}

fn section_from_actor(a: &ActorSpec) -> ActorSection {
    let (overlap, crossing) = match a.placement {
        Placement::Overlap { fraction } => (Some(fraction), None),
        Placement::Crossing { fraction } => (None, Some(fraction)),
    };
    ActorSection {
        kind: a.kind,
        initial_gap: a.initial_gap,
        initial_speed: a.initial_speed,
        width: Some(a.width),
        length: Some(a.length),
        overlap,
        crossing,
        brake_start: a.braking.map(|b| b.start_time),
        brake_deceleration: a.braking.map(|b| b.deceleration),
    }
}
