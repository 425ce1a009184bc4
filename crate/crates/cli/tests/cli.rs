use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tas")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}):\n{}", String::from_utf8_lossy(&o.stdout))
    })
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

/// Emits the club bundle and its bad-mouthing variant into a fresh dir.
fn fixtures() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let club = path(&dir, "club.tas");
    assert_eq!(code(&tas(&["scenario", "club", "--emit", &club])), 0);
    let bm = path(&dir, "bm.tas");
    let o = tas(&[
        "attack", &club, "--kind", "bad-mouthing", "--params", "target=P1_1,observer=C1", "--emit", &bm,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

const WIDE: [&str; 4] = ["--max-depth", "10000", "--opinion-cap", "2"];

#[test]
fn scenario_emits_spec_and_properties() {
    let dir = fixtures();
    assert!(dir.path().join("club.props").exists());
    let props = fs::read_to_string(dir.path().join("club.props")).unwrap();
    assert!(props.contains("# expect: true"));
    let o = tas(&["validate", &path(&dir, "club.tas")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["diagnostics"], Value::Array(vec![]));
}

#[test]
fn checking_bundled_properties_succeeds() {
    let dir = fixtures();
    let mut args = vec!["check", "--props"];
    let props = path(&dir, "club.props");
    let spec = path(&dir, "club.tas");
    args.push(&props);
    args.push(&spec);
    args.extend(WIDE);
    let o = tas(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = stdout_json(&o);
    let verdicts = report["verdicts"].as_array().unwrap();
    assert!(verdicts.len() >= 5);
    assert!(verdicts.iter().all(|v| v["verdict"] == "true"));
}

#[test]
fn exit_codes() {
    let dir = fixtures();
    let spec = path(&dir, "club.tas");
    let false_prop = tas(&["check", &spec, "--prop", "AG(false)"]);
    assert_eq!(code(&false_prop), 1);
    assert_eq!(stdout_json(&false_prop)["verdicts"][0]["verdict"], "false");

    assert_eq!(code(&tas(&["explore", &spec, "--max-states", "10"])), 3);
    assert_eq!(code(&tas(&["check", &spec, "--prop", "EF(", "--max-states", "10"])), 2);
    assert_eq!(code(&tas(&["check", &spec, "--prop", "t[C1,C1] > 0"])), 2);
    assert_eq!(code(&tas(&["explore", &path(&dir, "missing.tas")])), 2);
    assert_eq!(code(&tas(&["explore"])), 2);
    assert_eq!(code(&tas(&["frobnicate"])), 2);
    assert_eq!(code(&tas(&["explore", &spec, "--max-states", "0"])), 2);

    let broken = path(&dir, "broken.tas");
    fs::write(&broken, "actions { out a } process P := a . Q agent I : P threshold 0").unwrap();
    assert_eq!(code(&tas(&["validate", &broken])), 2);

    let bounded = tas(&["check", &spec, "--prop", "AG(true)", "--max-states", "5"]);
    assert_eq!(code(&bounded), 3);
    assert_eq!(stdout_json(&bounded)["verdicts"][0]["verdict"], "true-within-bounds");
}

#[test]
fn json_errors_are_machine_readable() {
    let dir = fixtures();
    let spec = path(&dir, "club.tas");
    for args in [
        vec!["--json-errors", "check", &spec, "--prop", "EF(("],
        vec!["--json-errors", "explore", "--bogus"],
        vec!["explore", "/nonexistent/x.tas", "--json-errors"],
    ] {
        let o = tas(&args);
        assert_eq!(code(&o), 2);
        let err: Value = serde_json::from_slice(&o.stderr).expect("stderr is JSON");
        assert_eq!(err["exit_code"], 2);
        assert!(err["error"].as_str().is_some_and(|s| !s.is_empty()));
        assert!(matches!(err["kind"].as_str(), Some("usage" | "spec")));
    }
}

#[test]
fn bad_mouthing_witness_is_one_fabricated_rating() {
    let dir = fixtures();
    let bm = path(&dir, "bm.tas");
    let o = tas(&["check", &bm, "--prop", "EF(t[C1,P1_1] = 0)"]);
    assert_eq!(code(&o), 0);
    let v = &stdout_json(&o)["verdicts"][0];
    assert_eq!(v["verdict"], "true");
    assert_eq!(v["witness"], serde_json::json!(["Bad1.tau"]));

    let o = tas(&[
        "attack", &path(&dir, "club.tas"), "--kind", "bad_mouthing", "--params", "target=P1_1,observer=C1", "--check",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(stdout_json(&o)["verdicts"].as_array().unwrap().iter().all(|v| v["expected"] == true || v["expected"] == false));
}

#[test]
fn attack_without_flags_prints_the_spec() {
    let dir = fixtures();
    let o = tas(&["attack", &path(&dir, "club.tas"), "--kind", "sybil", "--params", "n_identities=1,target=P1_1,observer=C1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("agent Sybil1"));
    let printed = path(&dir, "printed.tas");
    fs::write(&printed, text).unwrap();
    assert_eq!(code(&tas(&["validate", &printed])), 0);
    assert_eq!(code(&tas(&["attack", &path(&dir, "club.tas"), "--kind", "sybil"])), 2);
    assert_eq!(code(&tas(&["attack", &path(&dir, "club.tas"), "--kind", "teleport"])), 2);
}

#[test]
fn initial_trust_matrix() {
    let dir = fixtures();
    let o = tas(&["trust", &path(&dir, "club.tas"), "--initial"]);
    assert_eq!(code(&o), 0);
    let t = &stdout_json(&o)["trust"];
    let agents: Vec<&str> = t["agents"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert_eq!(agents, ["C1", "P1_1", "D1"]);
    assert!(t["matrix"][0][0].is_null());
    assert!((t["matrix"][0][1].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(code(&tas(&["trust", &path(&dir, "club.tas"), "--state", "100000"])), 2);
}

fn strip_duration(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("duration_ms");
    v
}

#[test]
fn exploration_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for (which, extra) in [("club", vec!["--producers", "2"]), ("eigentrust", vec!["--peers", "3"])] {
        let spec = path(&dir, &format!("{which}.tas"));
        let mut args = vec!["scenario", which, "--emit", &spec];
        args.extend(extra.iter().copied());
        assert_eq!(code(&tas(&args)), 0);

        let run = |out: &str, threads: &str| {
            let o = tas(&["explore", &spec, "--json", out, "--threads", threads, "--max-depth", "10000", "--opinion-cap", "2"]);
            assert_eq!(code(&o), 0);
            (fs::read(out).unwrap(), strip_duration(stdout_json(&o)))
        };
        let (a, ra) = run(&path(&dir, "a.json"), "1");
        let (b, rb) = run(&path(&dir, "b.json"), "1");
        let (c, _) = run(&path(&dir, "c.json"), "4");
        assert_eq!(a, b, "{which}: repeated runs differ");
        assert_eq!(a, c, "{which}: thread count changes the export");
        let mut ra = ra;
        let mut rb = rb;
        // the command line names the output file
        ra.as_object_mut().unwrap().remove("command");
        rb.as_object_mut().unwrap().remove("command");
        assert_eq!(ra, rb);
    }
}

#[test]
fn dot_export_is_written() {
    let dir = fixtures();
    let out = path(&dir, "club.dot");
    assert_eq!(code(&tas(&["explore", &path(&dir, "club.tas"), "--dot", &out, "--max-depth", "10000", "--opinion-cap", "2"])), 0);
    assert!(fs::read_to_string(out).unwrap().starts_with("digraph"));
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn help_texts_match_golden_files() {
    let cases: [(&str, &[&str], &[&str]); 9] = [
        ("tas", &[], &["--json-errors", "Exit codes"]),
        ("validate", &["validate"], &[]),
        ("explore", &["explore"], &["--max-states", "--max-depth", "--opinion-cap", "--threads", "--dot", "--json"]),
        ("trust", &["trust"], &["--state", "--initial"]),
        ("check", &["check"], &["--prop", "--props", "EU(phi, phi)"]),
        ("attack", &["attack"], &["--kind", "--params", "--check", "--emit", "white-washing"]),
        ("scenario", &["scenario"], &["club", "eigentrust"]),
        ("scenario-club", &["scenario", "club"], &["--producers", "--clubs", "--lambda", "--emit"]),
        ("scenario-eigentrust", &["scenario", "eigentrust"], &["--peers", "--emit"]),
    ];
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, sub, flags) in cases {
        let mut args = sub.to_vec();
        args.push("--help");
        let o = tas(&args);
        assert_eq!(code(&o), 0, "{name}");
        let text = String::from_utf8(o.stdout).unwrap();
        for f in flags {
            assert!(text.contains(f), "{name} help lacks {f}");
        }
        let file = golden_dir().join(format!("{name}.txt"));
        if update {
            fs::write(&file, &text).unwrap();
        } else {
            let want = fs::read_to_string(&file).unwrap_or_else(|_| panic!("missing {}", file.display()));
            assert_eq!(text, want, "{name} help changed; rerun with UPDATE_GOLDEN=1 if intended");
        }
    }
}
