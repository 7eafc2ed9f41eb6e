use std::io::Write;
use std::process::{Command, Output};

fn holonomy(args: &[&str], scenario: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_holonomy"));
    cmd.args(args);
    let _file;
    if let Some(text) = scenario {
        let mut f = tempfile();
        f.1.write_all(text.as_bytes()).unwrap();
        cmd.arg("--scenario").arg(&f.0);
        _file = f;
    }
    cmd.output().unwrap()
}

fn tempfile() -> (std::path::PathBuf, std::fs::File) {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let path = std::env::temp_dir().join(format!(
        "holonomy-cli-{}-{}.json",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::SeqCst)
    ));
    let file = std::fs::File::create(&path).unwrap();
    (path, file)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn intensity_of_identity_pair_is_one() {
    let out = holonomy(
        &["intensity"],
        Some(
            r#"{"schema_version": 1, "state": {"kind": "schmidt", "a": 0.8},
               "u": {"exp_i": [0, 0, 0, 0]}, "v": {"exp_i": [0, 0, 0, 0]}}"#,
        ),
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["intensity"]["intensity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn schema_errors_exit_with_two() {
    let out = holonomy(
        &["maximize"],
        Some(r#"{"schema_version": 1, "state": {"kind": "werner"}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "schema");
    assert!(v["error"]["line"].is_u64());
    let out = holonomy(&["maximize"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn open_loop_exits_with_three() {
    let out = holonomy(
        &["holonomy"],
        Some(
            r#"{"schema_version": 1, "state": {"kind": "schmidt", "a": 0.8},
               "path": {"discrete": [{"exp_i": [0, 0.3, 0, 0]}]}}"#,
        ),
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "numerical");
}

#[test]
fn singular_connection_exits_with_three() {
    let out = holonomy(
        &["holonomy"],
        Some(
            r#"{"schema_version": 1, "state": {"kind": "product", "a": [[1, 0], [0, 0]], "b": [[1, 0], [0, 0]]},
               "path": {"smooth": [{"generator": 1, "harmonic": 1, "cos": 0.3, "sin": 0.2}]},
               "continuum": true, "n_steps": 10}"#,
        ),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn flags_override_the_scenario() {
    let sc = r#"{"schema_version": 1, "state": {"kind": "random", "mixed": true}, "d_a": 2, "d_b": 2, "seed": 1,
                 "path": {"smooth": [{"generator": 3, "harmonic": 1, "cos": 0.4, "sin": 0.1}]}, "n_steps": 4}"#;
    let out = holonomy(&["transport", "--seed", "9", "--steps", "6"], Some(sc));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["transport"]["steps"].as_array().unwrap().len(), 6);
    let again = holonomy(&["transport", "--seed", "9", "--steps", "6"], Some(sc));
    assert_eq!(out.stdout, again.stdout);
    assert!(v.get("wall_clock_seconds").is_none());
    let timed = holonomy(&["transport", "--timing"], Some(sc));
    assert!(json(&timed)["wall_clock_seconds"].is_f64());
}
