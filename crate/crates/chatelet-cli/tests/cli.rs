use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chatelet")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", "--surface", &data("s0.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("\"passed\": true"));

    let bad = run(&["validate", "--surface", &data("reducible.json")]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("reducible-over-Q(i)"));

    let broken = run(&["validate", "--surface", &data("truncated.json")]);
    assert_eq!(broken.status.code(), Some(1));

    let missing = run(&["validate", "--surface", &data("nope.json")]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn nh_failure_in_other_commands() {
    let o = run(&["sigma2", "--surface", &data("reducible.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_arguments_are_input_errors() {
    assert_eq!(run(&["count", "--surface", &data("s0.json"), "-B", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn count_prints_one_row() {
    let o = run(&["count", "--surface", &data("s0.json"), "-B", "1e4", "--prime-cutoff", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "B,N,main,ratio,seconds");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("10000,10834,"));
    assert!(text.contains("prime_cutoff=1000"));
}

fn strip_seconds(text: &str) -> String {
    text.lines()
        .map(|l| if l.starts_with('#') { l.to_string() } else { l.rsplit_once(',').unwrap().0.to_string() })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn verify_is_deterministic_across_thread_counts() {
    let args = |t: &'static str| {
        vec!["verify", "--surface", "", "-B", "1e3,1e4,3e4", "--prime-cutoff", "2000", "--threads", t]
    };
    let s0 = data("s0.json");
    let mut a = args("1");
    a[2] = &s0;
    let mut b = args("4");
    b[2] = &s0;
    let (oa, ob) = (run(&a), run(&b));
    assert_eq!(oa.status.code(), Some(0));
    let (ta, tb) = (stdout(&oa), stdout(&ob));
    assert_eq!(ta.lines().count(), 2 + 1 + 3);
    assert_eq!(strip_seconds(&ta), strip_seconds(&tb));
}

#[test]
fn verify_rejects_decreasing_bounds() {
    let o = run(&["verify", "--surface", &data("s0.json"), "-B", "1e4,1e3", "--prime-cutoff", "100"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sum_writes_to_file() {
    let dir = std::env::temp_dir().join(format!("chatelet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("sum.csv");
    let o = run(&[
        "sum",
        "--surface",
        &data("s0.json"),
        "-X",
        "10,20",
        "--prime-cutoff",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("X,N,main,ratio,seconds"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn density_reports_comparison() {
    let o = run(&[
        "density",
        "--surface",
        &data("s0.json"),
        "--p",
        "5",
        "--lambda",
        "1,0,0",
        "--mu",
        "1,0,0",
        "--level",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["difference"].as_f64().unwrap() < 1e-2);
    assert!(v["limit_difference"].as_f64().unwrap() < 1e-5);
}

#[test]
fn strict_flags_unstable_values() {
    let args = ["density", "--surface", &data("s0.json"), "--p", "3", "--level", "1"];
    assert_eq!(run(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(3));
}

#[test]
fn sigma2_and_peyre_json() {
    let o = run(&["sigma2", "--surface", &data("s1.json"), "--level", "8", "--k-max", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["limit"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let o = run(&["peyre", "--surface", &data("s1.json"), "--prime-cutoff", "500", "--mc-samples", "1e4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["terms"].as_array().unwrap().len(), 8);
    assert!(v["c_s"]["value"].as_f64().unwrap() > 0.0);
}
