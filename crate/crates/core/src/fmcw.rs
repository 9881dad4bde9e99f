//! Signal-level FMCW range/Doppler model.
//!
//! A linear sawtooth sweep, once dechirped, turns every point reflector into a
//! complex tone: the fast-time (within-sweep) frequency is the beat frequency
//! `slope * 2R / c`, and the slow-time (sweep-to-sweep) phase advances by
//! `2π f_d T_sweep`. [`synthesize_beat`] writes those tones straight into a
//! [`BeatCube`]; [`estimate_range_doppler`] recovers range and radial speed
//! with a 2-D FFT and a median-relative peak detector. Targets more than
//! 12 dB below the strongest one are not reported (see [`SIDELOBE_GUARD`]).
//!
//! ```text
//!  sweep 0   | n = 0 .. N-1 |  --range FFT-->  | range bins |
//!  sweep 1   |              |                  |            |
//!   ...                                  ^ Doppler FFT across sweeps
//!  sweep M-1 |              |                  |            |
//! ```
//!
//! The detection-level radar model never calls into this module; it exists
//! so that the measurement envelope the radar model assumes (resolution,
//! unambiguous range and speed) is backed by a working signal chain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
pub use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Peaks must exceed this multiple of the median spectral magnitude.
pub const MEDIAN_THRESHOLD_FACTOR: f64 = 8.0;

/// Peaks weaker than this fraction of the strongest cell are dropped (-12 dB).
/// The spectrum is unwindowed to keep the 1 m resolution, so the first range
/// and Doppler sidelobes sit at -13.3 dB and would otherwise be reported as
/// targets. Also covers noiseless cubes, where the median is rounding noise.
pub const SIDELOBE_GUARD: f64 = 0.25;

/// A peak weaker than this fraction of a stronger peak within
/// [`SIDELOBE_REACH_RANGE`] range cells and [`SIDELOBE_REACH_DOPPLER`] Doppler
/// bins is taken for its sidelobe. Two overlapping sinc patterns can lift a
/// sidelobe above [`SIDELOBE_GUARD`]; this catches those.
pub const SIDELOBE_MASK: f64 = 0.4;
pub const SIDELOBE_REACH_RANGE: usize = 3;
pub const SIDELOBE_REACH_DOPPLER: usize = 3;

/// Zero-padding factor applied along fast time before the range FFT.
pub const RANGE_ZERO_PAD: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum FmcwError {
    #[error("invalid waveform: {0}")]
    InvalidWaveform(&'static str),
    #[error("beat frequency must be non-negative, got {0} Hz")]
    NegativeBeat(f64),
    #[error("sweep slope must be positive, got {0} Hz/s")]
    NonPositiveSlope(f64),
    #[error("target (range {range} m, speed {radial_speed} m/s) outside the unambiguous envelope")]
    TargetOutOfBounds { range: f64, radial_speed: f64 },
    #[error("cube is {found:?} (sweeps x samples) but waveform expects {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
}

/// Linear up-sweep (sawtooth) waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmcwWaveform {
    carrier_frequency: f64,
    bandwidth: f64,
    sweep_time: f64,
    num_sweeps: usize,
    samples_per_sweep: usize,
}

impl FmcwWaveform {
    pub fn new(
        carrier_frequency: f64,
        bandwidth: f64,
        sweep_time: f64,
        num_sweeps: usize,
        samples_per_sweep: usize,
    ) -> Result<Self, FmcwError> {
        if !(carrier_frequency > 0.0) {
            return Err(FmcwError::InvalidWaveform("carrier frequency must be positive"));
        }
        if !(bandwidth > 0.0) {
            return Err(FmcwError::InvalidWaveform("bandwidth must be positive"));
        }
        if !(sweep_time > 0.0) {
            return Err(FmcwError::InvalidWaveform("sweep time must be positive"));
        }
        if num_sweeps == 0 {
            return Err(FmcwError::InvalidWaveform("need at least one sweep"));
        }
        if !samples_per_sweep.is_power_of_two() {
            return Err(FmcwError::InvalidWaveform("samples per sweep must be a power of two"));
        }
        Ok(Self {
            carrier_frequency,
            bandwidth,
            sweep_time,
            num_sweeps,
            samples_per_sweep,
        })
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn sweep_time(&self) -> f64 {
        self.sweep_time
    }

    pub fn num_sweeps(&self) -> usize {
        self.num_sweeps
    }

    pub fn samples_per_sweep(&self) -> usize {
        self.samples_per_sweep
    }

    pub fn sample_rate(&self) -> f64 {
        self.samples_per_sweep as f64 / self.sweep_time
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Range whose beat frequency sits at half the sample rate.
    pub fn unambiguous_range(&self) -> f64 {
        range_from_beat_unchecked(self.sample_rate() / 2.0, sweep_slope(self))
    }

    /// Largest radial speed whose Doppler phase step stays inside (−π, π).
    pub fn max_unambiguous_speed(&self) -> f64 {
        self.wavelength() / (4.0 * self.sweep_time)
    }

    /// Width of one slow-time FFT bin, converted to m/s.
    pub fn speed_resolution(&self) -> f64 {
        self.wavelength() / (2.0 * self.num_sweeps as f64 * self.sweep_time)
    }
}

impl Default for FmcwWaveform {
    /// 77 GHz carrier, 150 MHz over 7.33 µs, 64 sweeps of 256 samples.
    fn default() -> Self {
        Self::new(77e9, 150e6, 7.33e-6, 64, 256).expect("default waveform is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub range: f64,
    /// Positive when closing.
    pub radial_speed: f64,
    pub reflect_amplitude: f64,
}

impl PointTarget {
    pub fn new(range: f64, radial_speed: f64) -> Self {
        Self {
            range,
            radial_speed,
            reflect_amplitude: 1.0,
        }
    }
}

/// Dechirped samples, row-major `[sweep][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatCube {
    num_sweeps: usize,
    samples_per_sweep: usize,
    data: Vec<Complex<f64>>,
}

impl BeatCube {
    pub fn zeros(num_sweeps: usize, samples_per_sweep: usize) -> Self {
        Self {
            num_sweeps,
            samples_per_sweep,
            data: vec![Complex::new(0.0, 0.0); num_sweeps * samples_per_sweep],
        }
    }

    pub fn num_sweeps(&self) -> usize {
        self.num_sweeps
    }

    pub fn samples_per_sweep(&self) -> usize {
        self.samples_per_sweep
    }

    pub fn get(&self, sweep: usize, sample: usize) -> Complex<f64> {
        self.data[sweep * self.samples_per_sweep + sample]
    }

    pub fn sweep(&self, sweep: usize) -> &[Complex<f64>] {
        let start = sweep * self.samples_per_sweep;
        &self.data[start..start + self.samples_per_sweep]
    }

    pub fn samples(&self) -> &[Complex<f64>] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeDopplerEstimate {
    pub range: f64,
    pub radial_speed: f64,
    pub peak_magnitude: f64,
}

pub fn sweep_slope(w: &FmcwWaveform) -> f64 {
    w.bandwidth / w.sweep_time
}

fn range_from_beat_unchecked(beat: f64, slope: f64) -> f64 {
    SPEED_OF_LIGHT * beat / (2.0 * slope)
}

pub fn range_from_beat(beat: f64, slope: f64) -> Result<f64, FmcwError> {
    if beat < 0.0 || beat.is_nan() {
        return Err(FmcwError::NegativeBeat(beat));
    }
    if !(slope > 0.0) {
        return Err(FmcwError::NonPositiveSlope(slope));
    }
    Ok(range_from_beat_unchecked(beat, slope))
}

pub fn beat_from_range(range: f64, slope: f64) -> f64 {
    slope * 2.0 * range / SPEED_OF_LIGHT
}

/// `c / 2B`: the closest spacing at which two equal reflectors still produce
/// separate range bins.
pub fn range_resolution(w: &FmcwWaveform) -> f64 {
    SPEED_OF_LIGHT / (2.0 * w.bandwidth)
}

/// Two-way Doppler shift; positive for a closing target.
pub fn doppler_from_speed(speed: f64, carrier: f64) -> f64 {
    2.0 * speed * carrier / SPEED_OF_LIGHT
}

pub fn speed_from_doppler(doppler: f64, carrier: f64) -> f64 {
    doppler * SPEED_OF_LIGHT / (2.0 * carrier)
}

/// Builds the dechirped cube for `targets`, plus circularly-symmetric complex
/// Gaussian noise of total standard deviation `noise_std` per sample.
pub fn synthesize_beat(
    w: &FmcwWaveform,
    targets: &[PointTarget],
    noise_std: f64,
    seed: u64,
) -> Result<BeatCube, FmcwError> {
    let max_range = w.unambiguous_range();
    let max_speed = w.max_unambiguous_speed();
    for t in targets {
        if !(t.range >= 0.0 && t.range <= max_range && t.radial_speed.abs() < max_speed) {
            return Err(FmcwError::TargetOutOfBounds {
                range: t.range,
                radial_speed: t.radial_speed,
            });
        }
    }

    let mut cube = BeatCube::zeros(w.num_sweeps, w.samples_per_sweep);
    let fs = w.sample_rate();
    let slope = sweep_slope(w);
    for t in targets {
        let beat = beat_from_range(t.range, slope);
        let doppler = doppler_from_speed(t.radial_speed, w.carrier_frequency);
        for m in 0..w.num_sweeps {
            let slow = doppler * m as f64 * w.sweep_time;
            let row = &mut cube.data[m * w.samples_per_sweep..(m + 1) * w.samples_per_sweep];
            for (n, s) in row.iter_mut().enumerate() {
                let phase = 2.0 * PI * (beat * n as f64 / fs + slow);
                *s += Complex::from_polar(t.reflect_amplitude, phase);
            }
        }
    }

    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_std / 2f64.sqrt()).expect("finite std");
        for s in cube.data.iter_mut() {
            *s += Complex::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    Ok(cube)
}

/// In-place 2-D FFT over a row-major `rows x cols` buffer (rows first, then
/// columns). Unnormalized in both directions.
pub fn fft2(data: &mut [Complex<f64>], rows: usize, cols: usize, inverse: bool) {
    assert_eq!(data.len(), rows * cols, "buffer does not match dimensions");
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
    } else {
        (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
    };
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let mut column = vec![Complex::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
}

/// Magnitude of the range-Doppler spectrum, rows ordered from the most
/// negative to the most positive Doppler bin, columns from range 0 up to the
/// unambiguous range.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    pub doppler_bins: usize,
    pub range_bins: usize,
    pub magnitude: Vec<f64>,
    range_step: f64,
    speed_step: f64,
}

impl RangeDopplerMap {
    pub fn at(&self, doppler_row: usize, range_col: usize) -> f64 {
        self.magnitude[doppler_row * self.range_bins + range_col]
    }

    pub fn range_of(&self, range_col: usize) -> f64 {
        range_col as f64 * self.range_step
    }

    pub fn speed_of(&self, doppler_row: usize) -> f64 {
        (doppler_row as f64 - (self.doppler_bins / 2) as f64) * self.speed_step
    }

    /// CSV dump: one row per Doppler bin, one column per range bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.magnitude.chunks_exact(self.range_bins) {
            let line: Vec<String> = row.iter().map(|m| format!("{m:.6e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn check_dims(cube: &BeatCube, w: &FmcwWaveform) -> Result<(), FmcwError> {
    let expected = (w.num_sweeps, w.samples_per_sweep);
    let found = (cube.num_sweeps, cube.samples_per_sweep);
    if expected != found || cube.data.len() != expected.0 * expected.1 {
        return Err(FmcwError::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn range_doppler_map(cube: &BeatCube, w: &FmcwWaveform) -> Result<RangeDopplerMap, FmcwError> {
    check_dims(cube, w)?;
    let rows = w.num_sweeps;
    let padded = w.samples_per_sweep * RANGE_ZERO_PAD;
    let mut buf = vec![Complex::new(0.0, 0.0); rows * padded];
    for m in 0..rows {
        buf[m * padded..m * padded + w.samples_per_sweep].copy_from_slice(cube.sweep(m));
    }
    fft2(&mut buf, rows, padded, false);

    // Keep beat frequencies in [0, fs/2); shift Doppler so zero speed sits mid-map.
    let range_bins = padded / 2;
    let half = rows / 2;
    let mut magnitude = Vec::with_capacity(rows * range_bins);
    for row in 0..rows {
        let src = (row + rows - half) % rows;
        magnitude.extend(buf[src * padded..src * padded + range_bins].iter().map(|c| c.norm()));
    }

    let beat_step = w.sample_rate() / padded as f64;
    let doppler_step = 1.0 / (rows as f64 * w.sweep_time);
    Ok(RangeDopplerMap {
        doppler_bins: rows,
        range_bins,
        magnitude,
        range_step: range_from_beat_unchecked(beat_step, sweep_slope(w)),
        speed_step: speed_from_doppler(doppler_step, w.carrier_frequency),
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Range/speed estimates for every 3x3 local maximum above the detection
/// threshold, strongest first.
pub fn estimate_range_doppler(
    cube: &BeatCube,
    w: &FmcwWaveform,
) -> Result<Vec<RangeDopplerEstimate>, FmcwError> {
    let map = range_doppler_map(cube, w)?;
    let peak = map.magnitude.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let threshold = (MEDIAN_THRESHOLD_FACTOR * median(&map.magnitude)).max(SIDELOBE_GUARD * peak);

    let rows = map.doppler_bins as isize;
    let cols = map.range_bins as isize;
    let mut found = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let here = map.at(r as usize, c as usize);
            if here <= threshold {
                continue;
            }
            let mut is_max = true;
            'nbhd: for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let cc = c + dc;
                    if cc < 0 || cc >= cols {
                        continue;
                    }
                    // Doppler wraps around.
                    let rr = (r + dr).rem_euclid(rows);
                    let other = map.at(rr as usize, cc as usize);
                    // Earlier cells win ties so a flat top yields one peak.
                    let earlier = (rr, cc) < (r, c);
                    if other > here || (earlier && other == here) {
                        is_max = false;
                        break 'nbhd;
                    }
                }
            }
            if is_max {
                found.push((r, c, here));
            }
        }
    }
    found.sort_by(|a, b| b.2.total_cmp(&a.2));

    let reach_c = (SIDELOBE_REACH_RANGE * RANGE_ZERO_PAD) as isize;
    let reach_r = SIDELOBE_REACH_DOPPLER as isize;
    let mut kept: Vec<(isize, isize, f64)> = Vec::new();
    for (r, c, mag) in found {
        let masked = kept.iter().any(|&(kr, kc, kmag)| {
            let dr = (r - kr).rem_euclid(rows).min((kr - r).rem_euclid(rows));
            dr <= reach_r && (c - kc).abs() <= reach_c && mag < SIDELOBE_MASK * kmag
        });
        if !masked {
            kept.push((r, c, mag));
        }
    }
    Ok(kept
        .into_iter()
        .map(|(r, c, mag)| RangeDopplerEstimate {
            range: map.range_of(c as usize),
            radial_speed: map.speed_of(r as usize),
            peak_magnitude: mag,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn slope_examples() {
        let w = FmcwWaveform::new(77e9, 150e6, 7.33e-6, 64, 256).unwrap();
        assert!(rel(sweep_slope(&w), 2.0464e13) < 1e-4);
        let w = FmcwWaveform::new(77e9, 150e6, 150e-6, 64, 256).unwrap();
        assert!(rel(sweep_slope(&w), 1.0e12) < 1e-12);
        assert!(rel(sweep_slope(&w) * w.sweep_time(), w.bandwidth()) < 1e-15);
    }

    #[test]
    fn range_from_beat_examples() {
        assert_eq!(range_from_beat(0.0, 2.0464e13).unwrap(), 0.0);
        let r = range_from_beat(6.8255e6, 2.0464e13).unwrap();
        assert!((r - 50.0).abs() < 0.01, "{r}");
        assert!(matches!(range_from_beat(-1.0, 1e12), Err(FmcwError::NegativeBeat(_))));
        assert!(matches!(range_from_beat(1.0, 0.0), Err(FmcwError::NonPositiveSlope(_))));
    }

    #[test]
    fn resolution_examples() {
        let w = FmcwWaveform::default();
        assert!((range_resolution(&w) - 0.99931).abs() < 1e-5);
        assert!(range_resolution(&w) < 1.0);
        let wide = FmcwWaveform::new(77e9, 300e6, 7.33e-6, 64, 256).unwrap();
        assert!((range_resolution(&wide) - 0.49965).abs() < 1e-5);
        assert!(rel(range_resolution(&w), 2.0 * range_resolution(&wide)) < 1e-15);
    }

    #[test]
    fn doppler_examples() {
        assert_eq!(doppler_from_speed(0.0, 77e9), 0.0);
        assert!((doppler_from_speed(63.89, 77e9) - 32.82e3).abs() < 5.0);
        assert!((doppler_from_speed(30.0, 77e9) - 15.41e3).abs() < 5.0);
        assert!(doppler_from_speed(-30.0, 77e9) < 0.0);
    }

    #[test]
    fn default_waveform_covers_requirements() {
        let w = FmcwWaveform::default();
        assert!(w.unambiguous_range() >= 100.0, "{}", w.unambiguous_range());
        assert!(w.max_unambiguous_speed() >= 230.0 / 3.6);
        assert!(beat_from_range(100.0, sweep_slope(&w)) * 2.0 <= w.sample_rate());
    }

    #[test]
    fn rejects_bad_waveforms() {
        assert!(FmcwWaveform::new(77e9, 0.0, 1e-6, 4, 8).is_err());
        assert!(FmcwWaveform::new(77e9, 1e6, 0.0, 4, 8).is_err());
        assert!(FmcwWaveform::new(77e9, 1e6, 1e-6, 4, 100).is_err());
        assert!(FmcwWaveform::new(77e9, 1e6, 1e-6, 0, 8).is_err());
    }

    #[test]
    fn empty_scene_is_silent() {
        let w = FmcwWaveform::default();
        let cube = synthesize_beat(&w, &[], 0.0, 1).unwrap();
        assert!(cube.samples().iter().all(|s| s.norm() == 0.0));
        assert!(estimate_range_doppler(&cube, &w).unwrap().is_empty());
    }

    #[test]
    fn single_tone_peaks_at_nearest_bin() {
        // Per-sweep spectrum of a pure tone, evaluated by direct DFT.
        let w = FmcwWaveform::default();
        let target = PointTarget::new(37.3, 0.0);
        let cube = synthesize_beat(&w, &[target], 0.0, 0).unwrap();
        let n = w.samples_per_sweep();
        let sweep = cube.sweep(0);
        let dft = |k: usize| -> f64 {
            sweep
                .iter()
                .enumerate()
                .map(|(i, s)| s * Complex::from_polar(1.0, -2.0 * PI * (k * i) as f64 / n as f64))
                .sum::<Complex<f64>>()
                .norm()
        };
        let best = (0..n).max_by(|&a, &b| dft(a).total_cmp(&dft(b))).unwrap();
        let expected = beat_from_range(target.range, sweep_slope(&w)) * n as f64 / w.sample_rate();
        assert_eq!(best, expected.round() as usize);
    }

    #[test]
    fn fifty_metre_target_round_trip() {
        let w = FmcwWaveform::default();
        let cube = synthesize_beat(&w, &[PointTarget::new(50.0, 20.0)], 0.0, 0).unwrap();
        let est = estimate_range_doppler(&cube, &w).unwrap();
        let best = est[0];
        assert!((best.range - 50.0).abs() <= range_resolution(&w) / 2.0);
        assert!((best.radial_speed - 20.0).abs() <= w.speed_resolution() / 2.0);
    }

    #[test]
    fn out_of_envelope_target_is_rejected() {
        let w = FmcwWaveform::default();
        let far = PointTarget::new(w.unambiguous_range() + 1.0, 0.0);
        assert!(matches!(
            synthesize_beat(&w, &[far], 0.0, 0),
            Err(FmcwError::TargetOutOfBounds { .. })
        ));
        let fast = PointTarget::new(10.0, w.max_unambiguous_speed() + 1.0);
        assert!(synthesize_beat(&w, &[fast], 0.0, 0).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let w = FmcwWaveform::default();
        let cube = BeatCube::zeros(8, 256);
        assert!(matches!(
            estimate_range_doppler(&cube, &w),
            Err(FmcwError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn noise_is_seeded() {
        let w = FmcwWaveform::new(77e9, 150e6, 7.33e-6, 8, 32).unwrap();
        let t = [PointTarget::new(10.0, 5.0)];
        let a = synthesize_beat(&w, &t, 0.3, 99).unwrap();
        let b = synthesize_beat(&w, &t, 0.3, 99).unwrap();
        let c = synthesize_beat(&w, &t, 0.3, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn map_csv_shape() {
        let w = FmcwWaveform::new(77e9, 150e6, 7.33e-6, 8, 32).unwrap();
        let cube = synthesize_beat(&w, &[PointTarget::new(10.0, 5.0)], 0.0, 0).unwrap();
        let map = range_doppler_map(&cube, &w).unwrap();
        let csv = map.to_csv();
        assert_eq!(csv.lines().count(), 8);
        assert!(csv.lines().all(|l| l.split(',').count() == 32 * RANGE_ZERO_PAD / 2));
    }
}
