//! Ground-truth world: actor kinematics, Euro NCAP scenario catalog and
//! collision/headway bookkeeping.
//!
//! World frame: `x` points along the ego's direction of travel, `y` to the
//! left. Every catalog actor moves parallel to an axis, so footprints are
//! treated as axis-aligned rectangles centred on the actor position.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

pub const DEFAULT_DURATION: f64 = 10.0;
pub const VEHICLE_WIDTH: f64 = 1.8;
pub const VEHICLE_LENGTH: f64 = 4.7;
pub const PEDESTRIAN_SIZE: f64 = 0.5;
/// Half of a 3.5 m lane.
pub const EGO_LANE_HALFWIDTH: f64 = 1.75;

pub const CCRS_50: &str = "AEB_CCRs_50overlap";
pub const CCRM_50: &str = "AEB_CCRm_50overlap";
pub const CCRB_6_12: &str = "AEB_CCRb_6_initialGap_12m";
pub const PEDESTRIAN_NEARSIDE_25: &str = "AEB_Pedestrian_Nearside_25width";
pub const CCRB_2_40: &str = "AEB_CCRb_2_initialGap_40m";

pub fn kmh(v: f64) -> f64 {
    v / 3.6
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("fraction must lie in [0, 1], got {0}")]
    FractionOutOfRange(f64),
    #[error("widths must be positive")]
    NonPositiveWidth,
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown scenario `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Ego,
    Vehicle,
    Pedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorState {
    pub actor_id: u32,
    pub kind: ActorKind,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
    pub acceleration: f64,
    pub width: f64,
    pub length: f64,
}

impl ActorState {
    pub fn velocity(&self) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (self.speed * c, self.speed * s)
    }

    pub fn front(&self) -> f64 {
        self.x + self.length / 2.0
    }

    pub fn rear(&self) -> f64 {
        self.x - self.length / 2.0
    }

    fn lateral_extent(&self) -> (f64, f64) {
        (self.y - self.width / 2.0, self.y + self.width / 2.0)
    }
}

/// Constant-acceleration step. A braking actor comes to rest and stays there.
pub fn step_actor(a: &ActorState, dt: f64) -> ActorState {
    let mut next = *a;
    let v_end = a.speed + a.acceleration * dt;
    let distance = if v_end < 0.0 {
        // Stops inside the step: v² / 2|a|.
        next.speed = 0.0;
        a.speed * a.speed / (-2.0 * a.acceleration)
    } else {
        next.speed = v_end;
        0.5 * (a.speed + v_end) * dt
    };
    let (s, c) = a.yaw.sin_cos();
    next.x += distance * c;
    next.y += distance * s;
    next
}

/// Lateral centre-line offset at which the ego covers `overlap_fraction` of
/// the target's width.
pub fn lateral_offset_for_overlap(
    overlap_fraction: f64,
    ego_width: f64,
    target_width: f64,
) -> Result<f64, ScenarioError> {
    if !(0.0..=1.0).contains(&overlap_fraction) {
        return Err(ScenarioError::FractionOutOfRange(overlap_fraction));
    }
    if !(ego_width > 0.0 && target_width > 0.0) {
        return Err(ScenarioError::NonPositiveWidth);
    }
    Ok((ego_width + target_width) / 2.0 - overlap_fraction * target_width)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakeSchedule {
    pub start_time: f64,
    pub deceleration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Travels along the ego path, offset so that the ego overlaps this
    /// fraction of the actor's width.
    Overlap { fraction: f64 },
    /// Walks across the ego path from the right (near side). Timed so that,
    /// without braking, its centre sits `fraction` of the ego width in from
    /// the ego's right edge when the ego front reaches it.
    Crossing { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorSpec {
    pub kind: ActorKind,
    /// Ego front bumper to the actor's rear face (vehicles) or centre
    /// (pedestrians), m.
    pub initial_gap: f64,
    pub initial_speed: f64,
    pub width: f64,
    pub length: f64,
    pub braking: Option<BrakeSchedule>,
    pub placement: Placement,
}

impl ActorSpec {
    pub fn vehicle(initial_gap: f64, initial_speed: f64, overlap: f64) -> Self {
        Self {
            kind: ActorKind::Vehicle,
            initial_gap,
            initial_speed,
            width: VEHICLE_WIDTH,
            length: VEHICLE_LENGTH,
            braking: None,
            placement: Placement::Overlap { fraction: overlap },
        }
    }

    pub fn braking_from(mut self, start_time: f64, deceleration: f64) -> Self {
        self.braking = Some(BrakeSchedule {
            start_time,
            deceleration,
        });
        self
    }

    pub fn pedestrian(initial_gap: f64, walking_speed: f64, crossing: f64) -> Self {
        Self {
            kind: ActorKind::Pedestrian,
            initial_gap,
            initial_speed: walking_speed,
            width: PEDESTRIAN_SIZE,
            length: PEDESTRIAN_SIZE,
            braking: None,
            placement: Placement::Crossing { fraction: crossing },
        }
    }

    /// Commanded acceleration at time `t`.
    pub fn acceleration_at(&self, t: f64) -> f64 {
        match self.braking {
            Some(b) if t + 1e-9 >= b.start_time => -b.deceleration,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration: f64,
    pub ego_initial_speed: f64,
    pub ego_width: f64,
    pub ego_length: f64,
    pub actors: Vec<ActorSpec>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(format!("{}: {m}", self.name)));
        if !(self.duration > 0.0) {
            return bad("duration must be positive");
        }
        if !(self.ego_initial_speed >= 0.0) {
            return bad("ego speed must be non-negative");
        }
        if !(self.ego_width > 0.0 && self.ego_length > 0.0) {
            return bad("ego footprint must be positive");
        }
        if self.actors.is_empty() {
            return bad("at least one actor is required");
        }
        for a in &self.actors {
            if a.kind == ActorKind::Ego {
                return bad("the ego is implicit, actors cannot be of kind ego");
            }
            if !(a.initial_gap >= 0.0) {
                return bad("gaps must be non-negative");
            }
            if !(a.initial_speed >= 0.0) {
                return bad("speeds must be non-negative");
            }
            if !(a.width > 0.0 && a.length > 0.0) {
                return bad("actor footprint must be positive");
            }
            let fraction = match a.placement {
                Placement::Overlap { fraction } | Placement::Crossing { fraction } => fraction,
            };
            if !(0.0..=1.0).contains(&fraction) {
                return Err(ScenarioError::FractionOutOfRange(fraction));
            }
            if let Placement::Crossing { .. } = a.placement {
                if self.ego_initial_speed <= 0.0 || a.initial_speed <= 0.0 {
                    return bad("crossing timing needs a moving ego and a moving actor");
                }
            }
            if let Some(b) = a.braking {
                if !(b.deceleration >= 0.0 && b.start_time >= 0.0) {
                    return bad("brake schedule must have non-negative start and deceleration");
                }
            }
        }
        Ok(())
    }

    pub fn ego_start(&self) -> ActorState {
        ActorState {
            actor_id: 0,
            kind: ActorKind::Ego,
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            speed: self.ego_initial_speed,
            acceleration: 0.0,
            width: self.ego_width,
            length: self.ego_length,
        }
    }

    /// Initial ground truth for every non-ego actor, ids starting at 1.
    pub fn actor_starts(&self) -> Result<Vec<ActorState>, ScenarioError> {
        let ego_front = self.ego_length / 2.0;
        self.actors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (x, y, yaw) = match a.placement {
                    Placement::Overlap { fraction } => {
                        let y = lateral_offset_for_overlap(fraction, self.ego_width, a.width)?;
                        (ego_front + a.initial_gap + a.length / 2.0, y, 0.0)
                    }
                    Placement::Crossing { fraction } => {
                        let crossing_y = -self.ego_width / 2.0 + fraction * self.ego_width;
                        let arrival = a.initial_gap / self.ego_initial_speed;
                        let y = crossing_y - a.initial_speed * arrival;
                        (ego_front + a.initial_gap, y, FRAC_PI_2)
                    }
                };
                Ok(ActorState {
                    actor_id: i as u32 + 1,
                    kind: a.kind,
                    x,
                    y,
                    yaw,
                    speed: a.initial_speed,
                    acceleration: 0.0,
                    width: a.width,
                    length: a.length,
                })
            })
            .collect()
    }
}

/// The five rear-end and pedestrian scenarios, 10 s each.
pub fn catalog() -> Vec<ScenarioSpec> {
    let base = |name: &str, ego_speed: f64, actor: ActorSpec| ScenarioSpec {
        name: name.to_string(),
        duration: DEFAULT_DURATION,
        ego_initial_speed: ego_speed,
        ego_width: VEHICLE_WIDTH,
        ego_length: VEHICLE_LENGTH,
        actors: vec![actor],
    };
    vec![
        base(CCRS_50, kmh(50.0), ActorSpec::vehicle(80.0, 0.0, 0.5)),
        base(CCRM_50, kmh(50.0), ActorSpec::vehicle(50.0, kmh(20.0), 0.5)),
        base(
            CCRB_6_12,
            kmh(50.0),
            ActorSpec::vehicle(12.0, kmh(50.0), 1.0).braking_from(1.0, 6.0),
        ),
        base(
            PEDESTRIAN_NEARSIDE_25,
            kmh(50.0),
            ActorSpec::pedestrian(50.0, 1.5, 0.25),
        ),
        base(
            CCRB_2_40,
            kmh(50.0),
            ActorSpec::vehicle(40.0, kmh(50.0), 1.0).braking_from(1.0, 2.0),
        ),
    ]
}

pub fn find_in_catalog(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| ScenarioError::Unknown(name.to_string()))
}

/// Per-tick collision/headway snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionCheck {
    pub collided: bool,
    /// Closing speed at contact, when `collided`.
    pub impact_speed: Option<f64>,
    /// Bumper-to-bumper gap to the nearest actor ahead, floored at 0.
    pub headway: Option<f64>,
}

fn intervals_touch(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

pub fn check_collision(ego: &ActorState, others: &[ActorState]) -> CollisionCheck {
    let ego_long = (ego.rear(), ego.front());
    let ego_lat = ego.lateral_extent();
    let (ego_vx, _) = ego.velocity();

    let mut collided = false;
    let mut impact_speed: Option<f64> = None;
    for o in others {
        if intervals_touch(ego_long, (o.rear(), o.front()))
            && intervals_touch(ego_lat, o.lateral_extent())
        {
            collided = true;
            let closing = (ego_vx - o.velocity().0).max(0.0);
            impact_speed = Some(impact_speed.map_or(closing, |s: f64| s.max(closing)));
        }
    }

    // Prefer actors whose footprint reaches into the ego lane.
    let lane = (ego.y - EGO_LANE_HALFWIDTH, ego.y + EGO_LANE_HALFWIDTH);
    let ahead = |o: &&ActorState| o.front() >= ego.front();
    let gap = |o: &ActorState| (o.rear() - ego.front()).max(0.0);
    let in_lane = others
        .iter()
        .filter(ahead)
        .filter(|o| intervals_touch(lane, o.lateral_extent()))
        .map(gap)
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
    let headway = in_lane.or_else(|| {
        others
            .iter()
            .filter(ahead)
            .map(gap)
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))))
    });

    CollisionCheck {
        collided,
        impact_speed,
        headway,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionReport {
    pub collided: bool,
    pub time: Option<f64>,
    pub impact_speed: Option<f64>,
    pub min_headway: f64,
}

impl Default for CollisionReport {
    fn default() -> Self {
        Self {
            collided: false,
            time: None,
            impact_speed: None,
            min_headway: f64::INFINITY,
        }
    }
}

impl CollisionReport {
    /// Folds one tick into the report; only the first contact is kept.
    pub fn observe(&mut self, t: f64, check: &CollisionCheck) {
        if let Some(h) = check.headway {
            self.min_headway = self.min_headway.min(h);
        }
        if check.collided && !self.collided {
            self.collided = true;
            self.time = Some(t);
            self.impact_speed = check.impact_speed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(x: f64, y: f64, speed: f64) -> ActorState {
        ActorState {
            actor_id: 1,
            kind: ActorKind::Vehicle,
            x,
            y,
            yaw: 0.0,
            speed,
            acceleration: 0.0,
            width: VEHICLE_WIDTH,
            length: VEHICLE_LENGTH,
        }
    }

    #[test]
    fn overlap_offsets() {
        assert_eq!(lateral_offset_for_overlap(1.0, 1.8, 1.8).unwrap(), 0.0);
        assert!((lateral_offset_for_overlap(0.5, 1.8, 1.8).unwrap() - 0.9).abs() < 1e-12);
        assert!((lateral_offset_for_overlap(0.0, 1.8, 1.6).unwrap() - 1.7).abs() < 1e-12);
        assert!(lateral_offset_for_overlap(1.2, 1.8, 1.8).is_err());
        assert!(lateral_offset_for_overlap(-0.1, 1.8, 1.8).is_err());
        assert!(lateral_offset_for_overlap(0.5, 0.0, 1.8).is_err());
    }

    #[test]
    fn overlap_offset_matches_rectangle_drawing() {
        // Rectangles [y - w/2, y + w/2]; measure the shared width directly.
        for &(f, ew, tw) in &[(0.5, 1.8, 1.8), (0.25, 2.0, 1.6), (0.8, 1.7, 2.1)] {
            let off = lateral_offset_for_overlap(f, ew, tw).unwrap();
            let shared = (ew / 2.0).min(off + tw / 2.0) - (-ew / 2.0f64).max(off - tw / 2.0);
            assert!((shared - f * tw).abs() < 1e-12, "{f} {ew} {tw}");
        }
    }

    #[test]
    fn step_constant_speed() {
        let next = step_actor(&car(0.0, 0.0, 10.0), 0.1);
        assert!((next.x - 1.0).abs() < 1e-12);
        assert_eq!(next.speed, 10.0);
    }

    #[test]
    fn step_braking_to_rest() {
        let mut a = car(0.0, 0.0, 1.0);
        a.acceleration = -6.0;
        let next = step_actor(&a, 0.5);
        assert_eq!(next.speed, 0.0);
        assert!((next.x - 1.0 / 12.0).abs() < 1e-12);
        let again = step_actor(&next, 0.5);
        assert_eq!(again.x, next.x);
        assert_eq!(again.speed, 0.0);
    }

    #[test]
    fn pedestrian_walks_sideways() {
        let ped = ActorState {
            actor_id: 2,
            kind: ActorKind::Pedestrian,
            x: 30.0,
            y: -4.0,
            yaw: FRAC_PI_2,
            speed: 1.5,
            acceleration: 0.0,
            width: PEDESTRIAN_SIZE,
            length: PEDESTRIAN_SIZE,
        };
        let next = step_actor(&ped, 1.0);
        assert!((next.x - 30.0).abs() < 1e-12);
        assert!((next.y + 2.5).abs() < 1e-12);
    }

    #[test]
    fn catalog_values() {
        let cat = catalog();
        assert_eq!(cat.len(), 5);
        for s in &cat {
            assert_eq!(s.duration, 10.0);
            s.validate().unwrap();
        }
        let ccrb6 = find_in_catalog(CCRB_6_12).unwrap();
        assert_eq!(ccrb6.actors[0].initial_gap, 12.0);
        assert_eq!(ccrb6.actors[0].braking.unwrap().deceleration, 6.0);
        let ccrb2 = find_in_catalog(CCRB_2_40).unwrap();
        assert_eq!(ccrb2.actors[0].initial_gap, 40.0);
        assert_eq!(ccrb2.actors[0].braking.unwrap().deceleration, 2.0);
        let ccrs = find_in_catalog(CCRS_50).unwrap();
        assert_eq!(ccrs.actors[0].initial_speed, 0.0);
        assert_eq!(ccrs.actors[0].placement, Placement::Overlap { fraction: 0.5 });
        let ped = find_in_catalog(PEDESTRIAN_NEARSIDE_25).unwrap();
        assert_eq!(ped.actors[0].placement, Placement::Crossing { fraction: 0.25 });
        assert!(find_in_catalog("nope").is_err());
    }

    #[test]
    fn pedestrian_reaches_quarter_width_on_time() {
        let spec = find_in_catalog(PEDESTRIAN_NEARSIDE_25).unwrap();
        let ego = spec.ego_start();
        let ped = spec.actor_starts().unwrap()[0];
        assert!(ped.y < -ego.width / 2.0, "starts on the right");
        let arrival = spec.actors[0].initial_gap / ego.speed;
        let y_then = ped.y + ped.speed * arrival;
        assert!((y_then - (-0.9 + 0.25 * 1.8)).abs() < 1e-12);
        assert!((ego.front() + ego.speed * arrival - ped.x).abs() < 1e-9);
    }

    #[test]
    fn collision_geometry() {
        let ego = ActorState {
            kind: ActorKind::Ego,
            actor_id: 0,
            ..car(0.0, 0.0, 10.0)
        };
        // 5 m gap, same lane.
        let ahead = car(VEHICLE_LENGTH + 5.0, 0.0, 0.0);
        let c = check_collision(&ego, &[ahead]);
        assert!(!c.collided);
        assert!((c.headway.unwrap() - 5.0).abs() < 1e-12);

        // Bumpers touching, lateral overlap: contact at full closing speed.
        let touching = car(VEHICLE_LENGTH, 0.9, 4.0);
        let c = check_collision(&ego, &[touching]);
        assert!(c.collided);
        assert_eq!(c.impact_speed, Some(6.0));
        assert_eq!(c.headway, Some(0.0));

        // Longitudinally overlapping but a lane over: no contact.
        let beside = car(1.0, 3.5, 0.0);
        assert!(!check_collision(&ego, &[beside]).collided);
    }

    #[test]
    fn report_keeps_first_contact() {
        let mut r = CollisionReport::default();
        r.observe(0.0, &CollisionCheck { collided: false, impact_speed: None, headway: Some(3.0) });
        r.observe(0.1, &CollisionCheck { collided: true, impact_speed: Some(2.0), headway: Some(0.0) });
        r.observe(0.2, &CollisionCheck { collided: true, impact_speed: Some(9.0), headway: Some(0.0) });
        assert_eq!(r.time, Some(0.1));
        assert_eq!(r.impact_speed, Some(2.0));
        assert_eq!(r.min_headway, 0.0);
    }
}
