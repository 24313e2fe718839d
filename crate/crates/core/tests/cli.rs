mod common;

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_autoforecast"))
}

fn run(cmd: &mut Command) -> (bool, String, String) {
    let out = cmd.output().unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn forecast_report_and_bench() {
    let dir = common::temp_dir("cli");
    let config = dir.join("run.toml");
    std::fs::write(&config, "slices = 9\ninput_length = 256\nhorizons = [24]\n[ensemble]\ndelta = 0.08\n").unwrap();
    let out = dir.join("out");
    let (ok, stdout, stderr) = run(bin()
        .arg("forecast")
        .arg("--config")
        .arg(&config)
        .arg("--input")
        .arg(common::bundled_csv())
        .args(["--slices", "2", "--horizons", "24,48", "--threads", "1"])
        .arg("--out")
        .arg(&out));
    assert!(ok, "{stderr}");
    assert!(stdout.contains("avg"));
    // flag beats file: two slices, both horizons
    for h in ["h24", "h48"] {
        let slices: Vec<_> = std::fs::read_dir(out.join(h)).unwrap().collect();
        assert_eq!(slices.len(), 2);
    }
    let log = std::fs::read_to_string(out.join("h24/slice_00/log.ndjson")).unwrap();
    assert!(log.contains("\"delta\":0.08"), "file value should survive");

    let (ok, stdout, stderr) = run(bin().arg("report").arg(&out));
    assert!(ok, "{stderr}");
    assert_eq!(stdout.matches("re-rendered").count(), 4);

    let (ok, stdout, _) = run(bin().arg("bench").arg(&out));
    assert!(ok);
    assert!(stdout.lines().count() == 4 && stdout.contains("48"));
}

#[test]
fn diagnose_writes_curator_outputs() {
    let out = common::temp_dir("cli-diagnose");
    let (ok, stdout, stderr) = run(bin().arg("diagnose").arg("--input").arg(common::bundled_csv()).arg("--out").arg(&out));
    assert!(ok, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["profile"]["seasonality"]["period"], 24);
    for p in ["overview", "decomposition", "correlogram"] {
        assert!(out.join("plots").join(format!("{p}.svg")).exists());
    }
}

#[test]
fn bad_inputs_are_reported() {
    let dir = common::temp_dir("cli-bad");
    let csv = dir.join("bad.csv");
    std::fs::write(&csv, "t,value\n0,1\n1,abc\n").unwrap();
    let (ok, _, stderr) = run(bin().arg("diagnose").arg("--input").arg(&csv).arg("--out").arg(dir.join("o")));
    assert!(!ok);
    assert!(stderr.contains("row 3"), "{stderr}");

    let (ok, _, stderr) = run(bin().args(["forecast", "--input-length", "32"]));
    assert!(!ok);
    assert!(stderr.contains("input_length"), "{stderr}");

    let cfg = dir.join("typo.toml");
    std::fs::write(&cfg, "slice = 3\n").unwrap();
    let (ok, _, _) = run(bin().arg("forecast").arg("--config").arg(&cfg));
    assert!(!ok);
}
