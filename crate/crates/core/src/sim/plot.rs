//! Static SVG charts of a run.
//!
//! Hand-written SVG: each chart is a fixed-size canvas with a frame, a few
//! ticks and one polyline per series. Non-finite samples break a line.

use super::RunResult;
use crate::controller::AebState;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const PLOT_SUFFIXES: [&str; 5] = [
    "ttc_vs_stopping_time",
    "aeb_state",
    "ego_velocity",
    "ego_acceleration",
    "headway",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TTC_CLIP: f64 = 10.0;

const COLORS: [&str; 5] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

struct Chart<'a> {
    title: &'a str,
    y_label: &'a str,
    x_range: (f64, f64),
    y_range: (f64, f64),
    /// Custom y tick labels; evenly spaced numbers when empty.
    y_ticks: Vec<(f64, String)>,
    series: Vec<Series<'a>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-9 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn value_range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    padded(lo, hi)
}

impl Chart<'_> {
    fn render(&self) -> String {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| TOP + plot_h - (y.clamp(y0, y1) - y0) / (y1 - y0) * plot_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );

        for i in 0..=5 {
            let x = x0 + (x1 - x0) * i as f64 / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.1}</text>"#,
                sx(x),
                TOP + plot_h + 18.0,
                x
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 10.0
        );

        let ticks: Vec<(f64, String)> = if self.y_ticks.is_empty() {
            (0..=5)
                .map(|i| {
                    let y = y0 + (y1 - y0) * i as f64 / 5.0;
                    (y, format!("{y:.1}"))
                })
                .collect()
        } else {
            self.y_ticks.clone()
        };
        for (y, label) in &ticks {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                LEFT + plot_w,
                sy(*y),
                sy(*y)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(*y) + 4.0,
                escape(label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + plot_h / 2.0,
            escape(self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let mut segment: Vec<String> = Vec::new();
            let flush = |segment: &mut Vec<String>, s: &mut String| {
                if !segment.is_empty() {
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                        segment.join(" ")
                    );
                    segment.clear();
                }
            };
            for &(x, y) in &series.points {
                if x.is_finite() && y.is_finite() {
                    segment.push(format!("{:.2},{:.2}", sx(x), sy(y)));
                } else {
                    flush(&mut segment, &mut s);
                }
            }
            flush(&mut segment, &mut s);

            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + plot_w + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
                lx + 20.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                lx + 26.0,
                ly + 4.0,
                escape(series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn x_range(r: &RunResult) -> (f64, f64) {
    let end = r.log.last().map_or(1.0, |row| row.t).max(r.sample_time);
    (0.0, end)
}

fn column(r: &RunResult, f: impl Fn(&super::SimLogRow) -> f64) -> Vec<(f64, f64)> {
    r.log.iter().map(|row| (row.t, f(row))).collect()
}

/// Renders one chart by suffix. `None` for an unknown suffix.
pub fn render(r: &RunResult, suffix: &str) -> Option<String> {
    let xr = x_range(r);
    let chart = match suffix {
        "ttc_vs_stopping_time" => {
            // TTC beyond the clip is drawn at the top edge; absent TTC breaks the line.
            let ttc = column(r, |row| row.ttc.map_or(f64::NAN, |v| v.min(TTC_CLIP)));
            Chart {
                title: "TTC vs stopping time",
                y_label: "time (s)",
                x_range: xr,
                y_range: (0.0, TTC_CLIP),
                y_ticks: Vec::new(),
                series: vec![
                    Series { label: "TTC", points: ttc, dashed: false },
                    Series { label: "FCW", points: column(r, |row| row.t_fcw), dashed: true },
                    Series { label: "PB1", points: column(r, |row| row.t_pb1), dashed: true },
                    Series { label: "PB2", points: column(r, |row| row.t_pb2), dashed: true },
                    Series { label: "FB", points: column(r, |row| row.t_fb), dashed: true },
                ],
            }
        }
        "aeb_state" => {
            let level = |st: AebState| AebState::ALL.iter().position(|&s| s == st).unwrap_or(0) as f64;
            // Step function: hold each value until the next sample.
            let mut points = Vec::with_capacity(2 * r.log.len());
            for (i, row) in r.log.iter().enumerate() {
                let y = level(row.aeb_state);
                if i > 0 {
                    points.push((row.t, level(r.log[i - 1].aeb_state)));
                }
                points.push((row.t, y));
            }
            Chart {
                title: "AEB state",
                y_label: "state",
                x_range: xr,
                y_range: (-0.5, AebState::ALL.len() as f64 - 0.5),
                y_ticks: AebState::ALL
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (i as f64, s.as_str().to_string()))
                    .collect(),
                series: vec![Series { label: "state", points, dashed: false }],
            }
        }
        "ego_velocity" => {
            let pts = column(r, |row| row.ego_speed);
            Chart {
                title: "Ego velocity",
                y_label: "speed (m/s)",
                x_range: xr,
                y_range: value_range(pts.iter().map(|p| &p.1).chain([0.0].iter())),
                y_ticks: Vec::new(),
                series: vec![Series { label: "ego", points: pts, dashed: false }],
            }
        }
        "ego_acceleration" => {
            let pts = column(r, |row| row.ego_accel);
            Chart {
                title: "Ego acceleration",
                y_label: "acceleration (m/s²)",
                x_range: xr,
                y_range: value_range(pts.iter().map(|p| &p.1).chain([0.0].iter())),
                y_ticks: Vec::new(),
                series: vec![Series { label: "ego", points: pts, dashed: false }],
            }
        }
        "headway" => {
            let pts = column(r, |row| row.headway.unwrap_or(f64::NAN));
            Chart {
                title: "Headway",
                y_label: "distance (m)",
                x_range: xr,
                y_range: value_range(pts.iter().map(|p| &p.1).chain([0.0].iter())),
                y_ticks: Vec::new(),
                series: vec![Series { label: "headway", points: pts, dashed: false }],
            }
        }
        _ => return None,
    };
    Some(chart.render())
}

/// Writes `{prefix}_{suffix}.svg` for every chart and returns the paths.
pub fn emit_plots(r: &RunResult, prefix: &Path) -> std::io::Result<Vec<PathBuf>> {
    let stem = prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dir = prefix.parent().unwrap_or_else(|| Path::new(""));
    let mut paths = Vec::with_capacity(PLOT_SUFFIXES.len());
    for suffix in PLOT_SUFFIXES {
        let path = dir.join(format!("{stem}_{suffix}.svg"));
        let svg = render(r, suffix).expect("known suffix");
        std::fs::write(&path, svg)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerParams;
    use crate::radar::default_sensor_suite;
    use crate::scenario::{find_in_catalog, CCRS_50};
    use crate::tracking::TrackerParams;

    fn sample_run() -> RunResult {
        let spec = find_in_catalog(CCRS_50).unwrap();
        super::super::run(
            &spec,
            &default_sensor_suite(),
            &TrackerParams::default(),
            &ControllerParams::default(),
            3,
            true,
        )
        .unwrap()
    }

    #[test]
    fn every_chart_is_well_formed() {
        let r = sample_run();
        for suffix in PLOT_SUFFIXES {
            let svg = render(&r, suffix).unwrap();
            let doc = roxmltree::Document::parse(&svg).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "svg");
            assert!(doc.descendants().any(|n| n.has_tag_name("polyline")), "{suffix}");
        }
        assert!(render(&r, "nope").is_none());
    }

    #[test]
    fn ttc_chart_has_threshold_legend() {
        let svg = render(&sample_run(), "ttc_vs_stopping_time").unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let labels: Vec<_> = doc
            .descendants()
            .filter(|n| n.has_tag_name("text"))
            .filter_map(|n| n.text())
            .collect();
        for l in ["TTC", "FCW", "PB1", "PB2", "FB"] {
            assert!(labels.contains(&l), "missing {l}");
        }
    }

    #[test]
    fn state_chart_labels_states() {
        let svg = render(&sample_run(), "aeb_state").unwrap();
        for s in AebState::ALL {
            assert!(svg.contains(&format!(">{}</text>", s.as_str())));
        }
    }
}
