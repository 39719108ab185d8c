use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stocheq::{brute_force_epsilon, build_hostility_game, parse_spec, Game, Profile};

fn stocheq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stocheq"))
        .args(args)
        .env_remove("STOCHEQ_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = stocheq(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate_small(dir: &Path, seed: u64) -> std::path::PathBuf {
    let spec = dir.join(format!("small-{seed}.json"));
    ok(&["generate", "--seed", &seed.to_string(), "--profile", "small", "--out", path(&spec)]);
    spec
}

fn solve(spec: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["solve", "--spec", path(spec), "--out", path(out)];
    args.extend_from_slice(extra);
    ok(&args)
}

/// `(outer_iter, epsilon, max_value_dev)` per row; timings dropped.
fn trace_without_millis(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("trace.csv"))
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn epsilon_line(stdout: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("epsilon "))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn generate_is_deterministic_and_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate_small(dir.path(), 7);
    let b = dir.path().join("again.json");
    ok(&["generate", "--seed", "7", "--profile", "small", "--out", path(&b)]);
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    parse_spec(std::str::from_utf8(&text).unwrap()).unwrap();
}

#[test]
fn paper_scale_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("paper.json");
    ok(&["generate", "--seed", "1", "--profile", "paper_scale", "--out", path(&out)]);
    let spec = parse_spec(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(spec.kinetic_threshold, 300.0);
    assert!(spec.players.iter().all(|p| (7..=10).contains(&p.moves.len())));
}

#[test]
fn generate_to_unwritable_path_fails() {
    let out = stocheq(&["generate", "--out", "/nonexistent-dir/spec.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent-dir"));
}

#[test]
fn solve_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = generate_small(dir.path(), 7);
    let out = dir.path().join("run");
    solve(&spec, &out, &["--algorithm", "pi-fp", "--fp-iters", "1000", "--outer-iters", "6"]);

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("outer_iter,epsilon,max_value_dev,millis"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty() && rows.len() <= 6);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i + 1);
        for cell in &row[1..3] {
            let x: f64 = cell.parse().unwrap();
            assert!(x.is_finite() && x >= 0.0, "{cell}");
            assert!(!cell.contains('e'), "{cell}");
        }
    }

    let m = manifest(&out);
    assert_eq!(m["config"]["fp_iters"], 1000);
    assert_eq!(m["config"]["algorithm"], "pi-fp");
    assert_eq!(m["outer_iterations_run"], rows.len());
    assert_eq!(m["spec_sha256"].as_str().unwrap().len(), 64);
    assert!(m["converged"].is_boolean());

    let values: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("values.json")).unwrap()).unwrap();
    assert_eq!(values["B"]["Blue"], 100.0);
    assert_eq!(values["R"]["Warship"], 100.0);
}

#[test]
fn worker_count_does_not_change_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let spec = generate_small(dir.path(), 5);
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    solve(&spec, &one, &["--fp-iters", "1000", "--workers", "1"]);
    let out = Command::new(env!("CARGO_BIN_EXE_stocheq"))
        .args(["solve", "--spec", path(&spec), "--out", path(&four), "--fp-iters", "1000"])
        .env("STOCHEQ_WORKERS", "4")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(manifest(&four)["config"]["workers"], 4);
    assert_eq!(trace_without_millis(&one), trace_without_millis(&four));
    assert_eq!(
        fs::read(one.join("strategies.json")).unwrap(),
        fs::read(four.join("strategies.json")).unwrap()
    );
}

#[test]
fn check_reproduces_the_final_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let spec = generate_small(dir.path(), 7);
    for algorithm in ["vi-fp", "pi-fp"] {
        let out = dir.path().join(algorithm);
        solve(&spec, &out, &["--algorithm", algorithm, "--fp-iters", "1000", "--outer-iters", "5"]);
        let stdout = ok(&["check", "--spec", path(&spec), "--strategies", path(&out.join("strategies.json"))]);
        let eps = epsilon_line(&stdout);
        let recorded = manifest(&out)["final_epsilon"].as_f64().unwrap();
        assert!((eps - recorded).abs() <= 1e-9, "{eps} vs {recorded}");
        let last = fs::read_to_string(out.join("trace.csv")).unwrap();
        let csv_eps: f64 = last.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((eps - csv_eps).abs() <= 5e-9 * eps.abs().max(1.0));
        assert_eq!(stdout.lines().filter(|l| l.starts_with("gain ")).count(), 4);
    }
}

#[test]
fn uniform_strategies_match_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    // two moves per player keeps the enumeration small
    let mut spec = parse_spec(&fs::read_to_string(generate_small(dir.path(), 7)).unwrap()).unwrap();
    spec.kinetic_threshold = 6.0;
    let spec_path = dir.path().join("short.json");
    fs::write(&spec_path, stocheq::serialize_spec(&spec)).unwrap();
    let game: Game = build_hostility_game(&spec).unwrap();
    let uniform: serde_json::Value = serde_json::to_value(
        game.nonterminal_states()
            .into_iter()
            .map(|s| {
                let st = game.state(s);
                let players: serde_json::Map<String, serde_json::Value> = game
                    .player_names()
                    .iter()
                    .zip(&st.actions)
                    .map(|(p, acts)| {
                        let w = 1.0 / acts.len() as f64;
                        (p.clone(), acts.iter().map(|a| (a.clone(), serde_json::Value::from(w))).collect())
                    })
                    .collect();
                (st.name.clone(), serde_json::Value::Object(players))
            })
            .collect::<serde_json::Map<_, _>>(),
    )
    .unwrap();
    let strategies = dir.path().join("uniform.json");
    fs::write(&strategies, uniform.to_string()).unwrap();
    let eps = epsilon_line(&ok(&["check", "--spec", path(&spec_path), "--strategies", path(&strategies)]));
    let oracle = brute_force_epsilon(&game, &Profile::uniform(&game)).unwrap();
    assert!(eps >= 0.0);
    assert!((eps - oracle).abs() <= 1e-9, "{eps} vs {oracle}");
}

#[test]
fn tampered_strategies_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = generate_small(dir.path(), 7);
    let out = dir.path().join("run");
    solve(&spec, &out, &["--fp-iters", "200", "--outer-iters", "2"]);
    let file = out.join("strategies.json");
    let mut s: serde_json::Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    let blue = s["G0"]["Blue"].as_object_mut().unwrap();
    let first = blue.keys().next().unwrap().clone();
    blue.insert(first, 0.9.into());
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, s.to_string()).unwrap();
    let res = stocheq(&["check", "--spec", path(&spec), "--strategies", path(&tampered)]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("state G0, player Blue"), "{err}");

    let mut s: serde_json::Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    s.as_object_mut().unwrap().remove("G1");
    fs::write(&tampered, s.to_string()).unwrap();
    let res = stocheq(&["check", "--spec", path(&spec), "--strategies", path(&tampered)]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("state G1"));
}

#[test]
fn non_convergence_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = generate_small(dir.path(), 7);
    let out = dir.path().join("run");
    solve(&spec, &out, &["--algorithm", "vi-fp", "--fp-iters", "100", "--outer-iters", "1", "--no-epsilon-trace"]);
    let m = manifest(&out);
    assert_eq!(m["converged"], false);
    assert!(m["final_epsilon"].is_null());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().nth(1).unwrap().starts_with("1,,"));
}

#[test]
fn spec_errors_exit_nonzero_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let spec = generate_small(dir.path(), 7);
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&spec).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("K");
    fs::write(&spec, v.to_string()).unwrap();
    let res = stocheq(&["solve", "--spec", path(&spec), "--out", path(&dir.path().join("x"))]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("missing field") && err.contains('K'), "{err}");
}

#[test]
fn spec_hash_survives_reformatting() {
    let dir = tempfile::tempdir().unwrap();
    let spec = generate_small(dir.path(), 3);
    let compact = dir.path().join("compact.json");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&spec).unwrap()).unwrap();
    fs::write(&compact, v.to_string()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    solve(&spec, &a, &["--fp-iters", "100", "--outer-iters", "1"]);
    solve(&compact, &b, &["--fp-iters", "100", "--outer-iters", "1"]);
    assert_eq!(manifest(&a)["spec_sha256"], manifest(&b)["spec_sha256"]);
}

#[test]
fn shipped_specs_parse_and_match_the_generator() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    for (file, seed, size) in [
        ("small-seed7.json", 7, stocheq::SizeProfile::Small),
        ("paper-scale-seed1.json", 1, stocheq::SizeProfile::PaperScale),
    ] {
        let text = fs::read_to_string(root.join(file)).unwrap();
        assert_eq!(parse_spec(&text).unwrap(), stocheq::generate_default_spec(seed, size));
    }
    let schema: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("hostility-spec.schema.json")).unwrap()).unwrap();
    assert_eq!(schema["required"].as_array().unwrap().len(), 7);
}
