//! End-to-end runs of the `confine` binary. Output schemas are frozen by
//! the files in `tests/golden`; set `CONFINE_UPDATE_GOLDEN=1` to rewrite
//! them after an intended change.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use confine::automaton::{z_log32, DecoderConfig};
use confine::experiments::RunSpec;
use confine::noise::{read_log, NoiseModel, Replay};
use confine::schedule::ScheduleKind;
use confine::world::World;

fn confine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = confine(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    if std::env::var_os("CONFINE_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, want, "output differs from {name}");
}

#[test]
fn plog_csv_matches_golden() {
    let out = stdout_of(&["plog", "--code", "rep1d", "--L", "9,15", "--p", "0.05:0.07:0.01", "--trials", "200", "--seed", "7"]);
    golden("plog.csv", &out);
    // One row per (L, p) plus the header.
    assert_eq!(out.lines().count(), 7);
}

#[test]
fn tmem_jsonl_matches_golden() {
    let out = stdout_of(&[
        "tmem", "--L", "9", "--Z", "0", "--p", "0.08", "--p-meas", "0", "--trials", "50", "--seed", "1", "--format", "jsonl",
    ]);
    golden("tmem.jsonl", &out);
}

#[test]
fn toric_plog_matches_golden() {
    let out = stdout_of(&["plog", "--code", "toric2d", "--L", "5", "--p", "0.01,0.02", "--trials", "40", "--seed", "3"]);
    golden("plog_toric.csv", &out);
}

#[test]
fn cantor_and_adversarial_match_golden() {
    golden("cantor.csv", &stdout_of(&["cantor", "--L", "36,216", "--q", "6"]));
    golden(
        "adversarial.csv",
        &stdout_of(&["adversarial", "--p", "0.2", "--r", "3,5,7", "--stride", "four", "--trials", "500", "--seed", "2"]),
    );
}

#[test]
fn log32_depth_is_echoed() {
    let out = stdout_of(&["plog", "--code", "rep1d", "--L", "15", "--Z", "log32", "--p", "0.06", "--trials", "10", "--seed", "7"]);
    let row = out.lines().nth(1).unwrap();
    assert_eq!(z_log32(15), 7);
    assert!(row.starts_with("plog,rep1d,1,15,7,3,sync,0.06,0.06,p_log,"), "{row}");
}

#[test]
fn sweep_row_count_and_values_ignore_worker_count() {
    let args = |w: &'static str| {
        vec!["sweep", "--L", "5,7,9", "--p", "0.02:0.1:0.02", "--trials", "30", "--seed", "5", "--workers", w]
    };
    let one = stdout_of(&args("1"));
    let four = stdout_of(&args("4"));
    assert_eq!(one, four);
    assert_eq!(one.lines().count(), 16);
    let ps: Vec<&str> = one.lines().skip(1).take(5).map(|l| l.split(',').nth(7).unwrap()).collect();
    assert_eq!(ps, ["0.02", "0.04", "0.06", "0.08", "0.1"]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("rows.csv");
    std::fs::write(
        &cfg,
        r#"{"code": "rep1d", "L": [9], "p": 0.05, "trials": 20, "seed": 99, "schedule": "poisson"}"#,
    )
    .unwrap();
    let res = confine(&["plog", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    assert!(res.stdout.is_empty(), "data must not go to stdout when --out is set");
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",poisson,"), "{row}");
    assert!(row.ends_with(",20,0,4"), "{row}");
}

#[test]
fn bad_input_is_rejected() {
    for args in [
        vec!["plog", "--L", "9", "--p", "0.1", "--schedule", "window:2.0"],
        vec!["plog", "--L", "9", "--p", "1.2"],
        vec!["plog", "--p", "0.1"],
        vec!["plog", "--L", "9", "--p", "0.1", "--colour", "red"],
        vec!["frobnicate"],
    ] {
        let out = confine(&args);
        assert!(!out.status.success(), "{args:?} was accepted");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let msg = String::from_utf8(confine(&["plog", "--L", "9", "--p", "0.1", "--schedule", "window:2.0"]).stderr).unwrap();
    assert!(msg.contains("(0, 1)"), "{msg}");
}

fn dumped(dir: &Path, name: &str) -> Vec<confine::noise::NoiseEvent> {
    let f = std::fs::File::open(dir.join(name)).unwrap();
    read_log(std::io::BufReader::new(f)).unwrap()
}

#[test]
fn dumped_noise_replays_trial_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    stdout_of(&["plog", "--L", "9", "--p", "0.08", "--trials", "5", "--seed", "12", "--dump-noise", d]);
    let events = dumped(dir.path(), "plog_L9_p0.08.jsonl");
    assert!(!events.is_empty());

    let cfg = DecoderConfig::new(1, 9, z_log32(9)).unwrap();
    let spec = RunSpec::new(cfg.clone(), 0.08, 12);
    let mut live = spec.world(0).unwrap();
    live.run(9);
    let mut replay = World::new(cfg, NoiseModel::Replay(Replay::from_events(&events)), ScheduleKind::Synchronous, 0).unwrap();
    replay.run(9);
    assert_eq!(live.code.errors, replay.code.errors);
    assert_eq!(live.code.corrections, replay.code.corrections);
    assert_eq!(live.ctrl.s, replay.ctrl.s);
}

#[test]
fn every_subcommand_runs() {
    let runs: [&[&str]; 5] = [
        &["transition", "--L", "9", "--p", "0.07", "--trials", "3", "--samples", "10"],
        &["init", "--L", "9", "--p", "0.045", "--trials", "5"],
        &["field", "--L", "12", "--p", "0.04", "--alpha", "0.25", "--trials", "5", "--max-rounds", "100"],
        &["field", "--code", "toric2d", "--L", "6", "--p", "0.01", "--charged", "--trials", "3", "--max-rounds", "50"],
        &["clusters", "--L", "20", "--p", "0.01", "--trials", "5", "--cluster", "1,4,20,2"],
    ];
    for args in runs {
        let out = stdout_of(args);
        let mut lines = out.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,code,d,L,Z,v,schedule,p_flip,p_meas,metric,value,stderr,n_trials,censored,seed"
        );
        assert!(lines.all(|l| l.split(',').count() == 15 && l.starts_with(args[0])), "{args:?}");
    }
}
