use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn motrims(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motrims"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &serde_json::Value, pointer: &str) -> f64 {
    v.pointer(pointer)
        .and_then(|x| x.as_f64())
        .unwrap_or_else(|| panic!("no number at {pointer}"))
}

const SMALL: &[&str] = &[
    "--set",
    "spectrum.plane_points=21",
    "--set",
    "spectrum.cube_points=21",
    "--set",
    "simulate.events=3000",
];

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    motrims(&refs)
}

#[test]
fn constants_for_the_shipped_configs() {
    let dir = tempfile::tempdir().unwrap();
    for (cfg, gamma) in [("mot3d.cfg", 41.8), ("molasses2d.cfg", 18.7), ("beam2d.cfg", 6.23)] {
        let out = dir.path().join(cfg);
        let o = motrims(&[
            "--config",
            configs().join(cfg).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "constants",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v = json(&out.join("constants.json"));
        assert!(
            (num(&v, "/channels/0/keldysh/gamma") - gamma).abs() < 0.05,
            "{cfg}: {}",
            num(&v, "/channels/0/keldysh/gamma")
        );
        assert!(out.join("manifest.json").exists());
    }
}

#[test]
fn unknown_key_is_a_config_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 3\n[pulse]\nwavelength_nm = 800.0\ncolour = \"red\"\n").unwrap();
    let o = motrims(&["--config", cfg.to_str().unwrap(), "constants"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("colour") && e.contains("line 4"), "{e}");
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = motrims(&["--seed", "17", "--dump-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 17"));
    assert!(text.contains("[characterize]"));
    let cfg = dir.path().join("dumped.cfg");
    std::fs::write(&cfg, &text).unwrap();
    let again = motrims(&["--config", cfg.to_str().unwrap(), "--dump-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn spectrum_is_deterministic_and_tiny_grids_work() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = run(&with(SMALL, &["--out", d.to_str().unwrap(), "--svg", "spectrum"]));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in [
        "spectrum_5s.grid",
        "spectrum_5p.grid",
        "spectrum_combined.grid",
        "pz_sliced.csv",
        "pz_sliced.svg",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let tiny = dir.path().join("tiny");
    let o = motrims(&[
        "--set",
        "spectrum.plane_points=2",
        "--out",
        tiny.to_str().unwrap(),
        "spectrum",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tiny.join("spectrum_5s.grid")).unwrap();
    assert!(text.contains("# values: 4\n"));
}

#[test]
fn simulate_then_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = run(&with(
        SMALL,
        &["--out", sim.to_str().unwrap(), "--format", "bin", "simulate"],
    ));
    assert!(o.status.success(), "{}", stderr(&o));
    let events = sim.join("events.bin");
    assert!(events.exists());
    let s = json(&sim.join("simulation.json"));
    assert!(num(&s, "/summary/acceptance_fraction") > 0.99);

    // Same seed, same bytes.
    let again = dir.path().join("again");
    let o = run(&with(
        SMALL,
        &["--out", again.to_str().unwrap(), "--format", "bin", "simulate"],
    ));
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(&events).unwrap(),
        std::fs::read(again.join("events.bin")).unwrap()
    );

    let rec = dir.path().join("rec");
    let o = run(&with(
        SMALL,
        &[
            "--out",
            rec.to_str().unwrap(),
            "--svg",
            "reconstruct",
            events.to_str().unwrap(),
            "--theory",
            sim.join("theory_pz_sliced.csv").to_str().unwrap(),
        ],
    ));
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&rec.join("reconstruction.json"));
    assert!(num(&r, "/resolution/sigma") >= 0.0);
    for f in [
        "momenta.csv",
        "hist_pz_sliced.csv",
        "hist_pxpy.grid",
        "hist_pzpx.grid",
        "hist_pzpx.svg",
    ] {
        assert!(rec.join(f).exists(), "{f}");
    }
    let manifest = std::fs::read_to_string(rec.join("manifest.json")).unwrap();
    assert!(manifest.contains("events.bin") && manifest.contains("sha256"));
}

#[test]
fn efficiency_halves_the_accepted_events() {
    let dir = tempfile::tempdir().unwrap();
    let o = motrims(&[
        "--set",
        "spectrum.cube_points=21",
        "--set",
        "simulate.events=20000",
        "--set",
        "detector.efficiency=0.5",
        "--out",
        dir.path().to_str().unwrap(),
        "simulate",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = num(
        &json(&dir.path().join("simulation.json")),
        "/summary/acceptance_fraction",
    );
    assert!((f - 0.5).abs() < 0.01, "{f}");
}

fn write_events_without_truth(path: &Path, n: usize) {
    let mut s = String::from("# motrims-events 1.0\nevent_id,t_us,x_mm,y_mm\n");
    for i in 0..n {
        let t = 270.2858 + 0.01 * ((i % 21) as f64 - 10.0);
        s.push_str(&format!(
            "{i},{t},{},{}\n",
            0.01 * (i % 7) as f64,
            -0.01 * (i % 5) as f64
        ));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn reconstruct_without_truth_asks_for_data_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("measured.csv");
    write_events_without_truth(&events, 500);
    let o = motrims(&[
        "--out",
        dir.path().to_str().unwrap(),
        "reconstruct",
        events.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("calibration=\"data\""), "{}", stderr(&o));
    let o = motrims(&[
        "--out",
        dir.path().to_str().unwrap(),
        "reconstruct",
        events.to_str().unwrap(),
        "--calibration",
        "data",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn corrupted_and_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("broken.csv");
    write_events_without_truth(&events, 200);
    let text = std::fs::read_to_string(&events)
        .unwrap()
        .replacen("\n5,", "\n5,not-a-time,", 1);
    std::fs::write(&events, text).unwrap();
    let o = motrims(&[
        "--out",
        dir.path().to_str().unwrap(),
        "reconstruct",
        events.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));

    let missing = dir.path().join("nowhere.csv");
    let o = motrims(&["characterize", "expansion", "--input", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nowhere.csv"));
}

#[test]
fn characterize_synthetic_targets() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = motrims(&["--out", d.join("e").to_str().unwrap(), "characterize", "expansion"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = num(&json(&d.join("e/expansion.json")), "/fit/temperature_uk");
    assert!((t - 130.0).abs() < 2.6);

    let o = motrims(&["--out", d.join("s").to_str().unwrap(), "characterize", "scan"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let z = std::fs::read_to_string(d.join("s/scan_z.csv")).unwrap();
    assert!(z.starts_with("position_mm,coil_current_a,counts,fit\n"));

    let o = motrims(&[
        "--out",
        d.join("a").to_str().unwrap(),
        "characterize",
        "absorption",
        "--svg",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let n = num(&json(&d.join("a/absorption.json")), "/atom_number");
    assert!((n / 1.5e6 - 1.0).abs() < 0.03);

    // Measured scan file round trip through the CLI.
    let scan = d.join("scan.csv");
    let mut s = String::from("position_mm,counts\n");
    for i in -10..=10 {
        let x = 0.08 * i as f64;
        s.push_str(&format!(
            "{x},{}\n",
            1000.0 * (-4.0 * 2f64.ln() * (x / 0.5).powi(2)).exp()
        ));
    }
    std::fs::write(&scan, s).unwrap();
    let o = motrims(&[
        "--out",
        d.join("m").to_str().unwrap(),
        "characterize",
        "scan",
        "--input",
        scan.to_str().unwrap(),
        "--axis",
        "x",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((num(&json(&d.join("m/scan.json")), "/axes/0/fit/fwhm_mm") - 0.5).abs() < 1e-3);
}
