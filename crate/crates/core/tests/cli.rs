use aeb_testbench::scenario::catalog;
use aeb_testbench::sim::csv::HEADER;
use std::path::Path;
use std::process::{Command, Output};

fn aebsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aebsim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(dir: &Path, stem: &str) -> Vec<String> {
    std::fs::read_to_string(dir.join(format!("{stem}.csv")))
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn lists_the_catalog() {
    let o = aebsim(&["list-scenarios"]);
    assert!(o.status.success());
    let names: Vec<String> = catalog().into_iter().map(|s| s.name).collect();
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), names);
}

#[test]
fn avoided_run_exits_zero_with_a_full_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aebsim(&["run", "--scenario", "AEB_CCRs_50overlap", "--seed", "4", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = read_csv(dir.path(), "AEB_CCRs_50overlap_seed4");
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 201);
    assert!(lines[1].starts_with("0.000000,13.888889,0.000000,inf,"));
    assert!(stdout(&o).contains("no collision"));
}

#[test]
fn collision_exits_one_and_stops_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aebsim(&["run", "--scenario", "AEB_CCRs_50overlap", "--no-aeb", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    let lines = read_csv(dir.path(), "AEB_CCRs_50overlap_seed0_noaeb");
    // Contact at 5.80 s is the 117th tick.
    assert_eq!(lines.len(), 1 + 117);
    assert!(lines.last().unwrap().starts_with("5.800000,"));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let unknown = aebsim(&["run", "--scenario", "no_such_scenario", "--out", out]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("AEB_CCRs_50overlap"));

    let file = dir.path().join("broken.toml");
    std::fs::write(&file, "[scenario]\nname = \"x\"\n").unwrap();
    let broken = aebsim(&["run", "--scenario", file.to_str().unwrap(), "--out", out]);
    assert_eq!(broken.status.code(), Some(2));

    // Radars scan every 0.05 s, which is not on a 0.1 s tick grid.
    let coarse = aebsim(&["run", "--scenario", "AEB_CCRs_50overlap", "--dt", "0.1", "--out", out]);
    assert_eq!(coarse.status.code(), Some(2));
    let negative = aebsim(&["run", "--scenario", "AEB_CCRs_50overlap", "--duration", "-1", "--out", out]);
    assert_eq!(negative.status.code(), Some(2));
}

#[test]
fn duration_and_tick_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aebsim(&[
        "run", "--scenario", "AEB_CCRm_50overlap", "--duration", "2", "--dt", "0.025", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines = read_csv(dir.path(), "AEB_CCRm_50overlap_seed0");
    assert_eq!(lines.len(), 1 + 80);
    assert!(lines[2].starts_with("0.025000,"));
}

#[test]
fn runs_from_a_scenario_file() {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/AEB_CCRb_6_initialGap_12m.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let by_file = aebsim(&["run", "--scenario", file.to_str().unwrap(), "--seed", "3", "--out", out]);
    assert_eq!(by_file.status.code(), Some(0));
    let from_file = read_csv(dir.path(), "AEB_CCRb_6_initialGap_12m_seed3");
    std::fs::remove_file(dir.path().join("AEB_CCRb_6_initialGap_12m_seed3.csv")).unwrap();
    aebsim(&["run", "--scenario", "AEB_CCRb_6_initialGap_12m", "--seed", "3", "--out", out]);
    assert_eq!(from_file, read_csv(dir.path(), "AEB_CCRb_6_initialGap_12m_seed3"));
}

#[test]
fn compare_reports_mitigation() {
    let o = aebsim(&["compare", "--scenario", "AEB_CCRm_50overlap", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("collision avoided: yes"), "{text}");
    assert!(text.contains("8.33 m/s baseline"), "{text}");
}

#[test]
fn plots_are_written_next_to_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aebsim(&["run", "--scenario", "AEB_CCRb_2_initialGap_40m", "--emit-plots", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let count = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(count, 5);
    assert!(dir.path().join("AEB_CCRb_2_initialGap_40m_seed0_headway.svg").exists());
}

#[test]
fn fmcw_demo_writes_a_range_doppler_map() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rd.csv");
    let o = aebsim(&["fmcw-demo", "--out", file.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&file).unwrap();
    let rows: Vec<_> = text.lines().collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.split(',').count() == 256));
    let report = stdout(&o);
    assert_eq!(report.matches("target:").count(), 2, "{report}");
    assert!(report.contains("range 39.97 m"));
}
