use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn normlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normlab"))
        .args(args)
        .env_remove("NORMLAB_PCN_ENDPOINT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn golden_run_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let golden = scenarios().join("golden.scenario");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = normlab(&["run", path(&golden), "--seed", "1", "--out", path(dir)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["events.jsonl", "metrics.csv", "report.json"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, y, "{f} differs between runs");
    }
    assert!(fs::read_to_string(a.join("progress.log"))
        .unwrap()
        .contains("tick 1/1"));
}

#[test]
fn seed_and_ticks_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenarios().join("stability.scenario");
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = normlab(&[
            "run",
            path(&s),
            "--seed",
            seed,
            "--ticks",
            "20",
            "--out",
            path(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out.join("metrics.csv")).unwrap()
    };
    let (one, two) = (run("1", "one"), run("2", "two"));
    assert_eq!(one.lines().count(), 21);
    assert_ne!(one, two);
}

#[test]
fn verdicts_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let golden = scenarios().join("golden.scenario");
    let out = tmp.path().join("p");
    let conv = normlab(&[
        "probe",
        "convention",
        path(&golden),
        "--grid",
        "0,0.5,1",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&conv), 0);
    assert!(String::from_utf8_lossy(&conv.stdout).contains("PASS"));
    let eps = normlab(&["probe", "epsilon", path(&golden), "--out", path(&out)]);
    assert_eq!(code(&eps), 1);
    assert!(String::from_utf8_lossy(&eps.stdout).contains("FAIL"));
}

#[test]
fn consolidate_writes_the_new_table() {
    let tmp = tempfile::tempdir().unwrap();
    let golden = scenarios().join("golden.scenario");
    let o = normlab(&[
        "consolidate",
        path(&golden),
        "--passes",
        "10",
        "--out",
        path(tmp.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(tmp.path().join("alice.v2.table")).unwrap();
    assert!(table.starts_with("tablepcn v2 tau=1\n"));
}

#[test]
fn validate_lists_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.scenario");
    fs::write(
        &bad,
        r#"
name = "bad"
bogus = true
[environment]
scene = "a path"
[[actors]]
id = "w"
logic = "nonesuch"
backend = { kind = "table", path = "missing.table" }
candidates = { actions = ["go"] }
[experiment]
ticks = -1
"#,
    )
    .unwrap();
    let o = normlab(&["validate", path(&bad)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/bogus"), "{err}");
    assert!(err.contains("/experiment/ticks"), "{err}");

    let o = normlab(&["validate", path(&scenarios().join("golden.scenario"))]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok (1 actors)"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.scenario");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&normlab(&["run", path(&empty)])), 2);
    assert_eq!(
        code(&normlab(&[
            "run",
            path(&tmp.path().join("absent.scenario"))
        ])),
        2
    );
    let golden = scenarios().join("golden.scenario");
    let o = normlab(&[
        "probe",
        "convention",
        path(&golden),
        "--grid",
        "0.5,1",
        "--out",
        path(tmp.path()),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unreachable_backend_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let s = tmp.path().join("remote.scenario");
    fs::write(
        &s,
        format!(
            r#"
name = "remote"
[environment]
scene = "a path"
[[actors]]
id = "w"
backend = {{ kind = "remote", endpoint = "http://127.0.0.1:{port}", timeout_ms = 500, max_retries = 0 }}
candidates = {{ actions = ["go left", "go right"] }}
"#
        ),
    )
    .unwrap();
    let o = normlab(&["run", path(&s), "--out", path(&tmp.path().join("out"))]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
