//! Dual-radar fusion tracker.
//!
//! Tracks live in the ego frame (origin at the ego centre, `x` forward) with
//! state `[x, vx, y, vy]` relative to the ego. Each tick the tracker
//!
//! 1. predicts every track with a constant-velocity model and removes the
//!    ego's own speed change (a known input, not process noise),
//! 2. takes the scans in sensor order: converts detections to Cartesian,
//!    solves a gated global-nearest-neighbour assignment, runs a linear
//!    Kalman update per pair and starts a tentative track for every leftover
//!    detection,
//! 3. applies M-of-N confirmation and miss-count deletion.
//!
//! Range rate stays out of the filter; it only sharpens the relative
//! velocity reported for the most important object (MIO).

pub mod assignment;

use crate::radar::{Detection, RadarConfig};
use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Variance floor (m²) added to converted measurement covariances so that
/// zero-noise sensors still give an invertible innovation covariance.
pub const MEASUREMENT_VARIANCE_FLOOR: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum TrackingError {
    #[error("innovation covariance of track {track_id} is not positive definite")]
    NonSpdInnovation { track_id: u32 },
    #[error("tracker time went backwards: {from} -> {to}")]
    TimeWentBackwards { from: f64, to: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerParams {
    /// Continuous white-acceleration spectral density per axis, m²/s³.
    pub process_noise_intensity: f64,
    pub confirm_hits: u32,
    pub confirm_window: u32,
    pub delete_misses: u32,
    /// Squared Mahalanobis gate (chi-square 99 %, 2 dof).
    pub gate: f64,
    pub ego_lane_halfwidth: f64,
    /// Prior velocity standard deviation for a newborn track, m/s.
    pub initial_velocity_std: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            process_noise_intensity: 2.5,
            confirm_hits: 3,
            confirm_window: 4,
            delete_misses: 5,
            gate: 9.21,
            ego_lane_halfwidth: 1.75,
            initial_velocity_std: 10.0,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.process_noise_intensity >= 0.0) {
            return Err("process noise intensity must be non-negative".into());
        }
        if self.confirm_window == 0 || self.confirm_window > 32 {
            return Err("confirmation window must be in 1..=32".into());
        }
        if self.confirm_hits == 0 || self.confirm_hits > self.confirm_window {
            return Err("confirmation hits must be in 1..=window".into());
        }
        if self.delete_misses == 0 {
            return Err("deletion threshold must be positive".into());
        }
        if !(self.gate > 0.0 && self.ego_lane_halfwidth > 0.0 && self.initial_velocity_std > 0.0) {
            return Err("gate, lane half-width and initial velocity std must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RangeRateObs {
    range_rate: f64,
    variance: f64,
    /// Line-of-sight angle in the ego frame.
    los: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u32,
    /// `[x, vx, y, vy]`, ego frame.
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub hits: u32,
    /// Consecutive misses.
    pub misses: u32,
    pub confirmed: bool,
    pub last_update: f64,
    age: u32,
    recent: u32,
    range_rates: Vec<RangeRateObs>,
}

impl Track {
    pub fn x(&self) -> f64 {
        self.state[0]
    }

    pub fn vx(&self) -> f64 {
        self.state[1]
    }

    pub fn y(&self) -> f64 {
        self.state[2]
    }

    pub fn vy(&self) -> f64 {
        self.state[3]
    }

    /// Ticks since birth.
    pub fn age(&self) -> u32 {
        self.age
    }
}

/// Position measurement in the ego frame with its covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianMeasurement {
    pub position: Vector2<f64>,
    pub covariance: Matrix2<f64>,
}

fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Polar detection → ego-frame position, covariance by first-order
/// propagation through `(r cos a, r sin a)`.
pub fn to_ego_frame(d: &Detection, config: &RadarConfig) -> CartesianMeasurement {
    let angle = d.azimuth + config.mount_yaw;
    let (s, c) = angle.sin_cos();
    let jac = Matrix2::new(c, -d.range * s, s, d.range * c);
    let polar = Matrix2::new(
        d.noise_covariance[(0, 0)],
        d.noise_covariance[(0, 1)],
        d.noise_covariance[(1, 0)],
        d.noise_covariance[(1, 1)],
    );
    let cov = jac * polar * jac.transpose() + Matrix2::identity() * MEASUREMENT_VARIANCE_FLOOR;
    CartesianMeasurement {
        position: Vector2::new(config.mount_x + d.range * c, config.mount_y + d.range * s),
        covariance: (cov + cov.transpose()) * 0.5,
    }
}

pub fn transition(dt: f64) -> Matrix4<f64> {
    Matrix4::new(
        1.0, dt, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, dt, //
        0.0, 0.0, 0.0, 1.0,
    )
}

pub fn process_noise(dt: f64, intensity: f64) -> Matrix4<f64> {
    let (d2, d3) = (dt * dt, dt * dt * dt);
    let (a, b, c) = (intensity * d3 / 3.0, intensity * d2 / 2.0, intensity * dt);
    Matrix4::new(
        a, b, 0.0, 0.0, //
        b, c, 0.0, 0.0, //
        0.0, 0.0, a, b, //
        0.0, 0.0, b, c,
    )
}

pub fn predict(t: &Track, dt: f64, process_noise_intensity: f64) -> Track {
    let mut out = t.clone();
    if dt == 0.0 {
        return out;
    }
    let f = transition(dt);
    out.state = f * t.state;
    out.covariance = symmetrize(
        &(f * t.covariance * f.transpose() + process_noise(dt, process_noise_intensity)),
    );
    out
}

pub fn mahalanobis_squared(t: &Track, m: &CartesianMeasurement) -> Result<f64, TrackingError> {
    let h = observation();
    let s = h * t.covariance * h.transpose() + m.covariance;
    let chol = s.cholesky().ok_or(TrackingError::NonSpdInnovation {
        track_id: t.track_id,
    })?;
    let nu = m.position - h * t.state;
    Ok(nu.dot(&chol.solve(&nu)))
}

/// Joseph-form Kalman update with a Cartesian position measurement.
pub fn update_cartesian(t: &Track, m: &CartesianMeasurement) -> Result<Track, TrackingError> {
    let h = observation();
    let s = h * t.covariance * h.transpose() + m.covariance;
    let chol = s.cholesky().ok_or(TrackingError::NonSpdInnovation {
        track_id: t.track_id,
    })?;
    // K = P Hᵀ S⁻¹, via S Kᵀ = H P.
    let gain = chol.solve(&(h * t.covariance)).transpose();
    let nu = m.position - h * t.state;
    let i_kh = Matrix4::identity() - gain * h;
    let mut out = t.clone();
    out.state = t.state + gain * nu;
    out.covariance = symmetrize(
        &(i_kh * t.covariance * i_kh.transpose() + gain * m.covariance * gain.transpose()),
    );
    Ok(out)
}

pub fn update(t: &Track, d: &Detection, config: &RadarConfig) -> Result<Track, TrackingError> {
    let m = to_ego_frame(d, config);
    let mut out = update_cartesian(t, &m)?;
    out.last_update = d.timestamp;
    out.range_rates.push(RangeRateObs {
        range_rate: d.range_rate,
        variance: d.noise_covariance[(2, 2)].max(MEASUREMENT_VARIANCE_FLOOR),
        los: d.azimuth + config.mount_yaw,
    });
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Association {
    /// `(track index, measurement index)`
    pub pairs: Vec<(usize, usize)>,
    pub unassigned_tracks: Vec<usize>,
    pub unassigned_measurements: Vec<usize>,
}

/// Gated global-nearest-neighbour assignment minimizing the summed squared
/// Mahalanobis distance over admissible pairs.
pub fn associate(
    tracks: &[Track],
    measurements: &[CartesianMeasurement],
    gate: f64,
) -> Result<Association, TrackingError> {
    // Any single admissible pair must beat any set of forbidden ones.
    let forbidden = gate * (tracks.len().max(measurements.len()) as f64 + 1.0) * 1e3;
    let mut cost = vec![vec![0.0; measurements.len()]; tracks.len()];
    let mut admissible = vec![vec![false; measurements.len()]; tracks.len()];
    for (i, t) in tracks.iter().enumerate() {
        for (j, m) in measurements.iter().enumerate() {
            let d2 = mahalanobis_squared(t, m)?;
            admissible[i][j] = d2 <= gate;
            cost[i][j] = if admissible[i][j] { d2 } else { forbidden };
        }
    }
    let pairs: Vec<_> = assignment::solve_rect(&cost)
        .into_iter()
        .filter(|&(i, j)| admissible[i][j])
        .collect();
    let unassigned_tracks = (0..tracks.len())
        .filter(|i| !pairs.iter().any(|p| p.0 == *i))
        .collect();
    let unassigned_measurements = (0..measurements.len())
        .filter(|j| !pairs.iter().any(|p| p.1 == *j))
        .collect();
    Ok(Association {
        pairs,
        unassigned_tracks,
        unassigned_measurements,
    })
}

/// Tentative track at the measured position, zero velocity with a wide prior.
pub fn spawn_track(id: u32, m: &CartesianMeasurement, t: f64, params: &TrackerParams) -> Track {
    let v = params.initial_velocity_std.powi(2);
    let mut cov = Matrix4::zeros();
    cov[(0, 0)] = m.covariance[(0, 0)];
    cov[(0, 2)] = m.covariance[(0, 1)];
    cov[(2, 0)] = m.covariance[(1, 0)];
    cov[(2, 2)] = m.covariance[(1, 1)];
    cov[(1, 1)] = v;
    cov[(3, 3)] = v;
    Track {
        track_id: id,
        state: Vector4::new(m.position[0], 0.0, m.position[1], 0.0),
        covariance: cov,
        hits: 0,
        misses: 0,
        confirmed: false,
        last_update: t,
        age: 0,
        recent: 0,
        range_rates: Vec::new(),
    }
}

/// Books one tick of hit/miss outcomes: M-of-N confirmation inside the first
/// `confirm_window` ticks, deletion of tentative tracks that run out of
/// window and of confirmed tracks after `delete_misses` consecutive misses.
pub fn track_lifecycle(tracks: Vec<Track>, hits: &[bool], params: &TrackerParams) -> Vec<Track> {
    assert_eq!(tracks.len(), hits.len(), "one hit flag per track");
    let mask = if params.confirm_window >= 32 {
        u32::MAX
    } else {
        (1u32 << params.confirm_window) - 1
    };
    tracks
        .into_iter()
        .zip(hits)
        .filter_map(|(mut t, &hit)| {
            t.age += 1;
            t.recent = ((t.recent << 1) | hit as u32) & mask;
            if hit {
                t.hits += 1;
                t.misses = 0;
            } else {
                t.misses += 1;
            }
            if !t.confirmed {
                if t.recent.count_ones() >= params.confirm_hits {
                    t.confirmed = true;
                } else if t.age >= params.confirm_window {
                    return None;
                }
            }
            if t.confirmed && t.misses >= params.delete_misses {
                return None;
            }
            Some(t)
        })
        .collect()
}

/// Drops tracks whose position is statistically indistinguishable (squared
/// Mahalanobis distance within `gate`, summed position covariances) from a
/// more established one: confirmed beats tentative, then older, then lower
/// id. The survivor inherits the tick's hit.
///
/// With two sensors, a detection that misses the gate of the real track
/// spawns a twin. GNN gives each scan's detection to one track only, so
/// without merging the twins split the sensors between them and both live.
pub fn merge_duplicates(
    mut tracks: Vec<Track>,
    mut hit: Vec<bool>,
    gate: f64,
) -> Result<(Vec<Track>, Vec<bool>), TrackingError> {
    assert_eq!(tracks.len(), hit.len(), "one hit flag per track");
    let rank = |t: &Track| (!t.confirmed, std::cmp::Reverse(t.age), t.track_id);
    let mut order: Vec<usize> = (0..tracks.len()).collect();
    order.sort_by_key(|&i| rank(&tracks[i]));
    let mut keep = vec![true; tracks.len()];
    for (pos, &i) in order.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if !keep[j] {
                continue;
            }
            let d = Vector2::new(tracks[i].x() - tracks[j].x(), tracks[i].y() - tracks[j].y());
            let s = position_block(&tracks[i].covariance) + position_block(&tracks[j].covariance);
            let chol = s.cholesky().ok_or(TrackingError::NonSpdInnovation {
                track_id: tracks[j].track_id,
            })?;
            if d.dot(&chol.solve(&d)) <= gate {
                keep[j] = false;
                hit[i] |= hit[j];
            }
        }
    }
    let mut flags = keep.iter();
    tracks.retain(|_| *flags.next().unwrap());
    let hit = hit.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(h, _)| h).collect();
    Ok((tracks, hit))
}

fn position_block(p: &Matrix4<f64>) -> Matrix2<f64> {
    Matrix2::new(p[(0, 0)], p[(0, 2)], p[(2, 0)], p[(2, 2)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MioReport {
    pub track_id: Option<u32>,
    /// Bumper to reference point, m.
    pub relative_distance: f64,
    /// Negative when closing, m/s.
    pub relative_velocity: f64,
}

impl MioReport {
    pub fn none() -> Self {
        Self {
            track_id: None,
            relative_distance: 0.0,
            relative_velocity: 0.0,
        }
    }

    pub fn is_present(&self) -> bool {
        self.track_id.is_some()
    }
}

/// Relative longitudinal velocity, fused with this tick's range-rate
/// observations when the line of sight is close enough to the x axis.
fn refined_velocity(t: &Track) -> f64 {
    let mut info = 1.0 / t.covariance[(1, 1)].max(MEASUREMENT_VARIANCE_FLOOR);
    let mut weighted = t.vx() * info;
    for obs in &t.range_rates {
        let (s, c) = obs.los.sin_cos();
        if c < 0.5 {
            continue;
        }
        let implied = (obs.range_rate - t.vy() * s) / c;
        let w = c * c / obs.variance;
        info += w;
        weighted += implied * w;
    }
    weighted / info
}

/// Nearest confirmed in-lane track ahead of the ego.
pub fn select_mio(tracks: &[Track], ego_lane_halfwidth: f64, front_offset: f64) -> MioReport {
    tracks
        .iter()
        .filter(|t| t.confirmed && t.x() > 0.0 && t.y().abs() <= ego_lane_halfwidth)
        .min_by(|a, b| a.x().total_cmp(&b.x()))
        .map_or_else(MioReport::none, |t| MioReport {
            track_id: Some(t.track_id),
            relative_distance: (t.x() - front_offset).max(0.0),
            relative_velocity: refined_velocity(t),
        })
}

/// Ego speed change over the last step, used to move tracks into the new
/// ego frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EgoMotion {
    pub start_speed: f64,
    pub end_speed: f64,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackerParams,
    tracks: Vec<Track>,
    next_id: u32,
    time: Option<f64>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            tracks: Vec::new(),
            next_id: 1,
            time: None,
        }
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn confirmed_count(&self) -> usize {
        self.tracks.iter().filter(|t| t.confirmed).count()
    }

    /// Advances to `t` and absorbs the scans taken at `t`. With no scans the
    /// tracks are only predicted; hit/miss books are left alone.
    pub fn step(
        &mut self,
        t: f64,
        ego: EgoMotion,
        scans: &[(&RadarConfig, &[Detection])],
    ) -> Result<(), TrackingError> {
        let dt = match self.time {
            Some(prev) if t < prev => return Err(TrackingError::TimeWentBackwards { from: prev, to: t }),
            Some(prev) => t - prev,
            None => 0.0,
        };
        self.time = Some(t);

        let q = self.params.process_noise_intensity;
        for track in &mut self.tracks {
            let mut next = predict(track, dt, q);
            next.state[0] += ego.start_speed * dt - ego.distance;
            next.state[1] -= ego.end_speed - ego.start_speed;
            next.range_rates.clear();
            *track = next;
        }

        if scans.is_empty() {
            return Ok(());
        }

        let mut hit = vec![false; self.tracks.len()];
        for (config, detections) in scans {
            let measurements: Vec<_> = detections.iter().map(|d| to_ego_frame(d, config)).collect();
            let assoc = associate(&self.tracks, &measurements, self.params.gate)?;
            for &(ti, mi) in &assoc.pairs {
                self.tracks[ti] = update(&self.tracks[ti], &detections[mi], config)?;
                hit[ti] = true;
            }
            for &mi in &assoc.unassigned_measurements {
                let mut born = spawn_track(self.next_id, &measurements[mi], t, &self.params);
                self.next_id += 1;
                born.range_rates.push(RangeRateObs {
                    range_rate: detections[mi].range_rate,
                    variance: detections[mi].noise_covariance[(2, 2)].max(MEASUREMENT_VARIANCE_FLOOR),
                    los: detections[mi].azimuth + config.mount_yaw,
                });
                self.tracks.push(born);
                hit.push(true);
            }
        }
        let (tracks, hit) = merge_duplicates(std::mem::take(&mut self.tracks), hit, self.params.gate)?;
        self.tracks = track_lifecycle(tracks, &hit, &self.params);
        Ok(())
    }

    pub fn mio(&self, front_offset: f64) -> MioReport {
        select_mio(&self.tracks, self.params.ego_lane_halfwidth, front_offset)
    }
}
