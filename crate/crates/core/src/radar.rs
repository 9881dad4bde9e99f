//! Detection-level radar generator.
//!
//! Each sensor sees one reference point per actor: the nearest point of a
//! vehicle's rear face, or a pedestrian's centre. Occlusion, clutter and
//! multi-detection targets are not modelled.

use crate::scenario::{ActorKind, ActorState, VEHICLE_LENGTH};
use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RadarError {
    #[error("sensor {sensor_id}: {reason}")]
    InvalidConfig { sensor_id: u8, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub sensor_id: u8,
    /// Longitudinal offset from the ego centre, m.
    pub mount_x: f64,
    /// Lateral offset from the ego centre, m (left positive).
    pub mount_y: f64,
    pub mount_yaw: f64,
    /// Full beam angle, rad.
    pub field_of_view: f64,
    pub max_range: f64,
    pub range_noise_std: f64,
    pub azimuth_noise_std: f64,
    pub range_rate_noise_std: f64,
    pub detection_probability: f64,
    pub update_period: f64,
}

impl RadarConfig {
    pub fn validate(&self) -> Result<(), RadarError> {
        let fail = |reason| {
            Err(RadarError::InvalidConfig {
                sensor_id: self.sensor_id,
                reason,
            })
        };
        if !(self.field_of_view > 0.0 && self.field_of_view <= PI) {
            return fail("field of view must be in (0, pi]");
        }
        if !(self.max_range > 0.0) {
            return fail("max range must be positive");
        }
        if !(self.range_noise_std >= 0.0
            && self.azimuth_noise_std >= 0.0
            && self.range_rate_noise_std >= 0.0)
        {
            return fail("noise standard deviations must be non-negative");
        }
        if !(self.detection_probability > 0.0 && self.detection_probability <= 1.0) {
            return fail("detection probability must be in (0, 1]");
        }
        if !(self.update_period > 0.0) {
            return fail("update period must be positive");
        }
        Ok(())
    }

    /// Same sensor with all noise removed and certain detection.
    pub fn noiseless(&self) -> Self {
        Self {
            range_noise_std: 0.0,
            azimuth_noise_std: 0.0,
            range_rate_noise_std: 0.0,
            detection_probability: 1.0,
            ..self.clone()
        }
    }

    fn covariance(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(
            self.range_noise_std.powi(2),
            self.azimuth_noise_std.powi(2),
            self.range_rate_noise_std.powi(2),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub sensor_id: u8,
    pub timestamp: f64,
    pub range: f64,
    /// Sensor frame, counter-clockwise positive.
    pub azimuth: f64,
    /// Negative when closing.
    pub range_rate: f64,
    /// Diagonal in (range, azimuth, range_rate).
    pub noise_covariance: Matrix3<f64>,
}

/// Long-range 77 GHz unit (20°, 100 m) and wide mid-range unit (90°, 60 m),
/// both at the front bumper centre of a default-length car.
pub fn default_sensor_suite() -> Vec<RadarConfig> {
    let common = RadarConfig {
        sensor_id: 1,
        mount_x: VEHICLE_LENGTH / 2.0,
        mount_y: 0.0,
        mount_yaw: 0.0,
        field_of_view: 20f64.to_radians(),
        max_range: 100.0,
        range_noise_std: 0.25,
        azimuth_noise_std: 0.5f64.to_radians(),
        range_rate_noise_std: 0.25,
        detection_probability: 0.95,
        update_period: 0.05,
    };
    vec![
        common.clone(),
        RadarConfig {
            sensor_id: 2,
            field_of_view: 90f64.to_radians(),
            max_range: 60.0,
            ..common
        },
    ]
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Sensor position in world coordinates and boresight heading.
pub fn sensor_pose(config: &RadarConfig, ego: &ActorState) -> (f64, f64, f64) {
    let (s, c) = ego.yaw.sin_cos();
    (
        ego.x + c * config.mount_x - s * config.mount_y,
        ego.y + s * config.mount_x + c * config.mount_y,
        ego.yaw + config.mount_yaw,
    )
}

/// World-frame point the sensor at `(sx, sy)` measures on `actor`.
pub fn reference_point(actor: &ActorState, sx: f64, sy: f64) -> (f64, f64) {
    match actor.kind {
        ActorKind::Pedestrian | ActorKind::Ego => (actor.x, actor.y),
        ActorKind::Vehicle => {
            let (s, c) = actor.yaw.sin_cos();
            // Sensor in the actor body frame; only the lateral coordinate is used.
            let lat = -s * (sx - actor.x) + c * (sy - actor.y);
            let lat = lat.clamp(-actor.width / 2.0, actor.width / 2.0);
            let lon = -actor.length / 2.0;
            (actor.x + c * lon - s * lat, actor.y + s * lon + c * lat)
        }
    }
}

/// Noise-free polar measurement `(range, azimuth, range_rate)` of `actor`.
pub fn true_measurement(config: &RadarConfig, ego: &ActorState, actor: &ActorState) -> (f64, f64, f64) {
    let (sx, sy, heading) = sensor_pose(config, ego);
    let (px, py) = reference_point(actor, sx, sy);
    let (dx, dy) = (px - sx, py - sy);
    let range = dx.hypot(dy);
    let azimuth = wrap_angle(dy.atan2(dx) - heading);
    let (evx, evy) = ego.velocity();
    let (avx, avy) = actor.velocity();
    let range_rate = if range > 0.0 {
        ((avx - evx) * dx + (avy - evy) * dy) / range
    } else {
        0.0
    };
    (range, azimuth, range_rate)
}

pub fn in_coverage(config: &RadarConfig, range: f64, azimuth: f64) -> bool {
    (0.0..=config.max_range).contains(&range) && azimuth.abs() <= config.field_of_view / 2.0
}

/// One scan of `config` over `actors`. Randomness is drawn from `rng` in
/// actor order, four draws per covered actor, so streams stay aligned across
/// runs that differ only in noise levels.
pub fn sense<R: Rng + ?Sized>(
    config: &RadarConfig,
    ego: &ActorState,
    actors: &[ActorState],
    t: f64,
    rng: &mut R,
) -> Vec<Detection> {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::new();
    for actor in actors {
        let (range, azimuth, range_rate) = true_measurement(config, ego, actor);
        if !in_coverage(config, range, azimuth) {
            continue;
        }
        let detected = rng.random::<f64>() < config.detection_probability;
        let noise: [f64; 3] = std::array::from_fn(|_| std_normal.sample(rng));
        if !detected {
            continue;
        }
        let range = range + config.range_noise_std * noise[0];
        let azimuth = azimuth + config.azimuth_noise_std * noise[1];
        let range_rate = range_rate + config.range_rate_noise_std * noise[2];
        // Discard rather than clamp.
        if !in_coverage(config, range, azimuth) {
            continue;
        }
        out.push(Detection {
            sensor_id: config.sensor_id,
            timestamp: t,
            range,
            azimuth,
            range_rate,
            noise_covariance: config.covariance(),
        });
    }
    out
}
