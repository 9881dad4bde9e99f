//! Closed-loop harness: scenario → radars → tracker → controller → ego.
//!
//! One fixed tick drives everything. At tick `k` (time `k * dt`) the world
//! is first advanced from the previous tick using the previous brake
//! command, then contact is checked, both radars scan, the tracker absorbs
//! the scans, the controller decides, and a row is logged. A run ends after
//! `duration / dt` rows or at the first contact, whichever comes first.

pub mod csv;
pub mod plot;

use crate::controller::{self, AebState, ControllerParams};
use crate::radar::{self, Detection, RadarConfig};
use crate::scenario::{check_collision, step_actor, CollisionReport, ScenarioSpec};
use crate::tracking::{EgoMotion, Tracker, TrackerParams, TrackingError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error("runs are not comparable: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLogRow {
    pub t: f64,
    pub ego_speed: f64,
    pub ego_accel: f64,
    pub ttc: Option<f64>,
    pub t_fcw: f64,
    pub t_pb1: f64,
    pub t_pb2: f64,
    pub t_fb: f64,
    pub aeb_state: AebState,
    pub fcw_active: bool,
    /// Ground-truth bumper-to-bumper gap.
    pub headway: Option<f64>,
    pub mio_present: bool,
    pub num_detections_radar1: usize,
    pub num_detections_radar2: usize,
    pub num_confirmed_tracks: usize,
}

/// Tracker output next to the truth it estimates, per tick. Not part of the
/// CSV; used for fusion accuracy studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MioSample {
    pub t: f64,
    pub estimated_distance: Option<f64>,
    pub true_headway: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: String,
    pub seed: u64,
    pub aeb_enabled: bool,
    pub sample_time: f64,
    pub log: Vec<SimLogRow>,
    pub collision: CollisionReport,
    pub mio_trace: Vec<MioSample>,
}

impl RunResult {
    pub fn final_speed(&self) -> f64 {
        self.log.last().map_or(0.0, |r| r.ego_speed)
    }

    pub fn impact_speed(&self) -> f64 {
        if self.collision.collided {
            self.collision.impact_speed.unwrap_or(0.0)
        } else {
            0.0
        }
    }

    /// Distinct states in order of first appearance.
    pub fn states_visited(&self) -> Vec<AebState> {
        let mut seen = Vec::new();
        for row in &self.log {
            if !seen.contains(&row.aeb_state) {
                seen.push(row.aeb_state);
            }
        }
        seen
    }
}

fn on_grid(t: f64, period: f64) -> bool {
    let ratio = t / period;
    (ratio - ratio.round()).abs() < 1e-6
}

/// Checks everything `run` depends on before the first tick.
pub fn validate_setup(
    spec: &ScenarioSpec,
    sensors: &[RadarConfig],
    tracker: &TrackerParams,
    ctrl: &ControllerParams,
) -> Result<(), SimError> {
    let cfg = |e: String| SimError::Config(e);
    spec.validate().map_err(|e| cfg(e.to_string()))?;
    ctrl.validate().map_err(|e| cfg(e.to_string()))?;
    tracker.validate().map_err(cfg)?;
    for (i, s) in sensors.iter().enumerate() {
        s.validate().map_err(|e| cfg(e.to_string()))?;
        if sensors[..i].iter().any(|o| o.sensor_id == s.sensor_id) {
            return Err(cfg(format!("duplicate sensor id {}", s.sensor_id)));
        }
        if !on_grid(s.update_period, ctrl.sample_time) {
            return Err(cfg(format!(
                "sensor {} update period {} is not a multiple of the {} s tick",
                s.sensor_id, s.update_period, ctrl.sample_time
            )));
        }
    }
    let ticks = spec.duration / ctrl.sample_time;
    if ticks.round() < 1.0 {
        return Err(cfg("duration is shorter than one tick".into()));
    }
    Ok(())
}

pub fn run(
    spec: &ScenarioSpec,
    sensors: &[RadarConfig],
    tracker_params: &TrackerParams,
    ctrl: &ControllerParams,
    seed: u64,
    aeb_enabled: bool,
) -> Result<RunResult, SimError> {
    validate_setup(spec, sensors, tracker_params, ctrl)?;
    let dt = ctrl.sample_time;
    let ticks = (spec.duration / dt).round() as usize;

    let mut ego = spec.ego_start();
    let mut actors = spec.actor_starts().map_err(|e| SimError::Config(e.to_string()))?;
    let front_offset = spec.ego_length / 2.0;
    let mut rngs: Vec<ChaCha8Rng> = sensors
        .iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s.sensor_id as u64);
            rng
        })
        .collect();
    let mut tracker = Tracker::new(tracker_params.clone());
    let mut state = AebState::Default;
    let mut command = 0.0;
    let mut motion = EgoMotion::default();
    let mut report = CollisionReport::default();
    let mut log = Vec::with_capacity(ticks);
    let mut mio_trace = Vec::with_capacity(ticks);

    for k in 0..ticks {
        let t = k as f64 * dt;
        if k > 0 {
            let t_prev = (k - 1) as f64 * dt;
            for (a, a_spec) in actors.iter_mut().zip(&spec.actors) {
                a.acceleration = a_spec.acceleration_at(t_prev);
                *a = step_actor(a, dt);
            }
            let start_speed = ego.speed;
            let start_x = ego.x;
            ego.acceleration = -command;
            ego = step_actor(&ego, dt);
            motion = EgoMotion {
                start_speed,
                end_speed: ego.speed,
                distance: ego.x - start_x,
            };
        }

        let contact = check_collision(&ego, &actors);
        report.observe(t, &contact);

        let mut detections: Vec<(usize, Vec<Detection>)> = Vec::new();
        for (i, (s, rng)) in sensors.iter().zip(rngs.iter_mut()).enumerate() {
            if on_grid(t, s.update_period) {
                detections.push((i, radar::sense(s, &ego, &actors, t, rng)));
            }
        }
        let scans: Vec<(&RadarConfig, &[Detection])> =
            detections.iter().map(|(i, d)| (&sensors[*i], d.as_slice())).collect();
        tracker.step(t, motion, &scans)?;

        let mio = tracker.mio(front_offset);
        let out = controller::step(state, &mio, ego.speed, ctrl);
        state = out.state;
        command = if aeb_enabled { out.commanded_deceleration } else { 0.0 };

        let count = |idx: usize| {
            detections
                .iter()
                .find(|(i, _)| *i == idx)
                .map_or(0, |(_, d)| d.len())
        };
        log.push(SimLogRow {
            t,
            ego_speed: ego.speed,
            ego_accel: if ego.speed > 0.0 { -command } else { 0.0 },
            ttc: out.ttc,
            t_fcw: out.thresholds.fcw,
            t_pb1: out.thresholds.pb1,
            t_pb2: out.thresholds.pb2,
            t_fb: out.thresholds.fb,
            aeb_state: out.state,
            fcw_active: out.fcw_active,
            headway: contact.headway,
            mio_present: mio.is_present(),
            num_detections_radar1: count(0),
            num_detections_radar2: count(1),
            num_confirmed_tracks: tracker.confirmed_count(),
        });
        mio_trace.push(MioSample {
            t,
            estimated_distance: mio.is_present().then_some(mio.relative_distance),
            true_headway: contact.headway,
        });

        if contact.collided {
            break;
        }
    }

    Ok(RunResult {
        scenario: spec.name.clone(),
        seed,
        aeb_enabled,
        sample_time: dt,
        log,
        collision: report,
        mio_trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationSummary {
    pub scenario: String,
    pub seed: u64,
    /// The run under test ended without contact.
    pub avoided: bool,
    pub impact_speed_with: f64,
    pub impact_speed_without: f64,
    /// m/s
    pub reduction: f64,
    /// Percent of the baseline impact speed; 0 when the baseline did not collide.
    pub reduction_percent: f64,
}

impl std::fmt::Display for MitigationSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} seed {}: collision avoided: {}, impact {:.2} m/s vs {:.2} m/s baseline, reduction {:.2} m/s ({:.1} %)",
            self.scenario,
            self.seed,
            if self.avoided { "yes" } else { "no" },
            self.impact_speed_with,
            self.impact_speed_without,
            self.reduction,
            self.reduction_percent
        )
    }
}

pub fn compare_runs(with_aeb: &RunResult, without_aeb: &RunResult) -> Result<MitigationSummary, SimError> {
    if with_aeb.scenario != without_aeb.scenario {
        return Err(SimError::Mismatch(format!(
            "scenario `{}` vs `{}`",
            with_aeb.scenario, without_aeb.scenario
        )));
    }
    if with_aeb.seed != without_aeb.seed {
        return Err(SimError::Mismatch(format!(
            "seed {} vs {}",
            with_aeb.seed, without_aeb.seed
        )));
    }
    let with = with_aeb.impact_speed();
    let without = without_aeb.impact_speed();
    let reduction = without - with;
    Ok(MitigationSummary {
        scenario: with_aeb.scenario.clone(),
        seed: with_aeb.seed,
        avoided: !with_aeb.collision.collided,
        impact_speed_with: with,
        impact_speed_without: without,
        reduction,
        reduction_percent: if without > 0.0 { 100.0 * reduction / without } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::default_sensor_suite;
    use crate::scenario::{find_in_catalog, CCRS_50};

    fn defaults() -> (Vec<RadarConfig>, TrackerParams, ControllerParams) {
        (default_sensor_suite(), TrackerParams::default(), ControllerParams::default())
    }

    #[test]
    fn full_length_run_has_200_rows() {
        let mut spec = find_in_catalog(CCRS_50).unwrap();
        spec.actors[0].initial_gap = 500.0;
        let (s, tp, cp) = defaults();
        let r = run(&spec, &s, &tp, &cp, 1, true).unwrap();
        assert_eq!(r.log.len(), 200);
        assert!(!r.collision.collided);
        for (k, row) in r.log.iter().enumerate() {
            assert_eq!(row.t, k as f64 * 0.05);
        }
    }

    #[test]
    fn misaligned_sensor_period_is_rejected() {
        let spec = find_in_catalog(CCRS_50).unwrap();
        let (mut s, tp, cp) = defaults();
        s[1].update_period = 0.07;
        assert!(matches!(run(&spec, &s, &tp, &cp, 1, true), Err(SimError::Config(_))));
        let (mut s, tp, cp) = defaults();
        s[1].sensor_id = s[0].sensor_id;
        assert!(matches!(run(&spec, &s, &tp, &cp, 1, true), Err(SimError::Config(_))));
    }

    #[test]
    fn slower_sensors_fire_on_their_grid() {
        let spec = find_in_catalog(CCRS_50).unwrap();
        let (mut s, tp, cp) = defaults();
        s[1].update_period = 0.1;
        s[1].max_range = 200.0;
        let r = run(&spec, &s.iter().map(|c| c.noiseless()).collect::<Vec<_>>(), &tp, &cp, 1, true).unwrap();
        for (k, row) in r.log.iter().enumerate() {
            assert_eq!(row.num_detections_radar1, 1);
            assert_eq!(row.num_detections_radar2, usize::from(k % 2 == 0));
        }
    }

    #[test]
    fn comparison_rules() {
        let spec = find_in_catalog(CCRS_50).unwrap();
        let (s, tp, cp) = defaults();
        let on = run(&spec, &s, &tp, &cp, 4, true).unwrap();
        let same = compare_runs(&on, &on).unwrap();
        assert_eq!(same.reduction, 0.0);
        let other_seed = run(&spec, &s, &tp, &cp, 5, true).unwrap();
        assert!(compare_runs(&on, &other_seed).is_err());
        let mut renamed = on.clone();
        renamed.scenario = "other".into();
        assert!(compare_runs(&on, &renamed).is_err());
    }
}
