//! Per-tick CSV log.
//!
//! Columns follow [`SimLogRow`] field order. Reals are printed with six
//! decimals, an absent TTC or headway as `inf`, booleans as `0`/`1`.

use super::{RunResult, SimLogRow};
use std::fmt::Write as _;
use std::path::Path;

pub const HEADER: &str = "t,ego_speed,ego_accel,ttc,t_fcw,t_pb1,t_pb2,t_fb,aeb_state,fcw_active,headway,mio_present,num_detections_radar1,num_detections_radar2,num_confirmed_tracks";

fn real(x: f64) -> String {
    let s = format!("{x:.6}");
    // No "-0.000000".
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn optional(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), real)
}

fn row(r: &SimLogRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        real(r.t),
        real(r.ego_speed),
        real(r.ego_accel),
        optional(r.ttc),
        real(r.t_fcw),
        real(r.t_pb1),
        real(r.t_pb2),
        real(r.t_fb),
        r.aeb_state,
        u8::from(r.fcw_active),
        optional(r.headway),
        u8::from(r.mio_present),
        r.num_detections_radar1,
        r.num_detections_radar2,
        r.num_confirmed_tracks,
    )
}

pub fn to_csv(r: &RunResult) -> String {
    let mut out = String::with_capacity(64 * (r.log.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for entry in &r.log {
        let _ = writeln!(out, "{}", row(entry));
    }
    out
}

pub fn emit_csv(r: &RunResult, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_csv(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::AebState;
    use crate::scenario::CollisionReport;

    fn sample() -> RunResult {
        let row = SimLogRow {
            t: 0.05,
            ego_speed: 13.888888,
            ego_accel: -0.0,
            ttc: None,
            t_fcw: 4.672222,
            t_pb1: 3.655,
            t_pb2: 2.62,
            t_fb: 1.417,
            aeb_state: AebState::Pb1,
            fcw_active: true,
            headway: Some(12.5),
            mio_present: true,
            num_detections_radar1: 1,
            num_detections_radar2: 0,
            num_confirmed_tracks: 1,
        };
        RunResult {
            scenario: "x".into(),
            seed: 0,
            aeb_enabled: true,
            sample_time: 0.05,
            log: vec![row.clone(), SimLogRow { ttc: Some(2.0), headway: None, ..row }],
            collision: CollisionReport::default(),
            mio_trace: Vec::new(),
        }
    }

    #[test]
    fn header_and_rows() {
        let csv = to_csv(&sample());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], HEADER);
        assert_eq!(
            lines[1],
            "0.050000,13.888888,0.000000,inf,4.672222,3.655000,2.620000,1.417000,PB1,1,12.500000,1,1,0,1"
        );
        assert!(lines[2].contains(",2.000000,") && lines[2].contains(",inf,"));
        assert_eq!(HEADER.split(',').count(), lines[1].split(',').count());
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(real(-0.0), "0.000000");
        assert_eq!(real(-1e-9), "0.000000");
        assert_eq!(real(-0.5), "-0.500000");
    }
}
