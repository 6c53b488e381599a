//! End-to-end runs of the `thermal-sd` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use thermal_sd::bitstream::BitStream;
use thermal_sd::config::ExperimentConfig;
use thermal_sd::experiments::{spectrum_figure, sweep_at};
use thermal_sd::{simulate, Input};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermal-sd"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_number(json: &str, key: &str) -> f64 {
    let start = json.find(&format!("\"{key}\": ")).expect(key) + key.len() + 4;
    let rest = &json[start..];
    rest[..rest.find([',', '\n']).unwrap()].parse().unwrap()
}

#[test]
fn operating_point_prints_both_bridges() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["operating-point"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("1.55") && s.contains("3.1"), "{s}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(run(p, &["figure", "fig99"]).status.code(), Some(1));
    assert_eq!(run(p, &["--bogus", "operating-point"]).status.code(), Some(1));
    assert_eq!(run(p, &["--integrator", "perfect", "operating-point"]).status.code(), Some(1));
    assert_eq!(run(p, &["--full-scale", "50", "simulate"]).status.code(), Some(1));
    assert_eq!(run(p, &["--seeds", "0", "figure"]).status.code(), Some(1));
    assert_eq!(run(p, &["--config", "missing.cfg", "operating-point"]).status.code(), Some(1));
    assert_eq!(run(p, &["simulate", "--input", "ramp:3"]).status.code(), Some(1));
    assert_eq!(run(p, &["--help"]).status.code(), Some(0));

    fs::write(p.join("unknown.cfg"), "f_ck = 131000\nwobble = 3\n").unwrap();
    let o = run(p, &["--config", "unknown.cfg", "operating-point"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    // output directory blocked by a regular file
    fs::write(p.join("blocked"), "").unwrap();
    let o = run(p, &["--out", "blocked/sub", "simulate", "--input", "dc:0"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_input_without_noise_has_zero_mean() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["--no-noise", "simulate", "--input", "dc:0"]);
    assert!(o.status.success());
    let json = stdout(&o);
    assert_eq!(json_number(&json, "mean_g"), 0.0, "{json}");
    assert!(dir.path().join("out/bitstream_seed1.tsdb").exists());
    assert!(dir.path().join("out/metrics_seed1.json").exists());
}

#[test]
fn simulate_matches_library_and_config() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("short.cfg"), "# short run\nduration = 0.5  # s\nintegrator = ideal\n").unwrap();
    let o = run(p, &["--config", "short.cfg", "--seed", "9", "--out", "a", "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let cfg = ExperimentConfig::parse_str("duration = 0.5\nintegrator = ideal\nseed = 9").unwrap();
    let expected = simulate(&cfg.sensor, &cfg.modulator, &Input::Sine { freq: 16.0, amp: 1.0 }).unwrap();
    let written = BitStream::read_packed(fs::File::open(p.join("a/bitstream_seed9.tsdb")).unwrap()).unwrap();
    assert_eq!(written, expected);

    let again = run(p, &["--config", "short.cfg", "--seed", "9", "--out", "b", "simulate", "--format", "text"]);
    assert!(again.status.success());
    assert!(stdout(&again).contains("\"resolution_g\": null"));
    let text = fs::read_to_string(p.join("b/bitstream_seed9.txt")).unwrap();
    let parsed = BitStream::read_text(text.as_bytes()).unwrap();
    assert_eq!(parsed, expected);
}

#[test]
fn streamed_simulation_matches_held() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("held.cfg"), "duration = 2\n").unwrap();
    fs::write(p.join("streamed.cfg"), "duration = 2\nmemory_budget_bits = 1000\n").unwrap();
    let held = run(p, &["--config", "held.cfg", "--out", "h", "simulate"]);
    let streamed = run(p, &["--config", "streamed.cfg", "--out", "s", "simulate"]);
    assert!(held.status.success() && streamed.status.success());
    assert!(stdout(&streamed).contains("\"streamed\": true"));
    assert_eq!(
        fs::read(p.join("h/bitstream_seed1.tsdb")).unwrap(),
        fs::read(p.join("s/bitstream_seed1.tsdb")).unwrap()
    );
    let (a, b) = (stdout(&held), stdout(&streamed));
    assert_eq!(json_number(&a, "resolution_g"), json_number(&b, "resolution_g"));
    assert_eq!(json_number(&a, "mean_bit"), json_number(&b, "mean_bit"));

    let text = run(p, &["--config", "streamed.cfg", "--out", "t", "simulate", "--format", "text"]);
    assert_eq!(text.status.code(), Some(1));
}

#[test]
fn sweep_writes_csv() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("short.cfg"), "duration = 2\n").unwrap();
    let o = run(p, &["--config", "short.cfg", "--seeds", "2", "sweep", "--fcks", "65500,131000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(p.join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("fck_hz,resolution_g,stddev_g,n_seeds"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], 131e3);
    assert_eq!(rows[1][3], 2.0);
}

#[test]
fn figure_writes_spectrum_csv() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("short.cfg"), "duration = 2\n").unwrap();
    let o = run(p, &["--config", "short.cfg", "--seeds", "1", "--integrator", "ideal", "figure", "spectrum8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(p.join("out/spectrum8_ideal.csv")).unwrap();
    assert!(csv.starts_with("freq_hz,psd_g2_per_hz\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn sweep_row_equals_spectrum_run() {
    let mut cfg = ExperimentConfig::default();
    cfg.modulator.duration = 2.0;
    cfg.seeds = vec![3, 4];
    let fig = spectrum_figure(&cfg).unwrap();
    let sweep = sweep_at(&cfg, &[cfg.modulator.f_ck]).unwrap();
    assert_eq!(sweep.rows[0].resolution, fig.resolution());
    assert_eq!(sweep.rows[0].n_seeds, 2);
}
