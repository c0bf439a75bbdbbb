use std::fs;
use std::process::{Command, Output};

fn provq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_provq")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

const HEADER: &str = "experiment,seed,specSize,runEdges,querySize,strategy,resultSize,medianMicros,reps";

#[test]
fn pairwise_on_the_bundled_run() {
    let base = ["query", "pairwise", "--spec", "builtin:paperG", "--run", "builtin:paperRun", "--u", "d:2", "--v", "b:1"];
    let yes = provq(&[&base[..], &["--query", "A+"]].concat());
    assert_eq!(stdout(&yes).trim(), "true");
    let no = provq(&[&base[..], &["--query", "A"]].concat());
    assert_eq!(stdout(&no).trim(), "false");
}

#[test]
fn unknown_flag_exits_with_usage_error() {
    let out = provq(&["--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_reported() {
    let out = provq(&["safety", "--spec", "/nonexistent/spec.txt", "--query", "_*"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn version_is_printed() {
    let out = provq(&["--version"]);
    assert_eq!(stdout(&out).trim(), format!("provq {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn empty_bench_prints_only_the_header() {
    let out = provq(&["bench", "--experiments", ""]);
    assert_eq!(stdout(&out), format!("{HEADER}\n"));
}

#[test]
fn unsupported_strategy_gets_a_row() {
    let text = stdout(&provq(&["bench", "--experiments", "", "--strategies", "g2"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains(",g2,") && lines[1].contains("not implemented"), "{}", lines[1]);
}

#[test]
fn bench_rows_repeat_apart_from_timings() {
    let run = || stdout(&provq(&["--seed", "4", "bench", "--experiments", "overhead", "--reps", "1"]));
    let strip = |text: String| -> Vec<String> {
        text.lines().skip(1).map(|l| l.split(',').take(7).collect::<Vec<_>>().join(",")).collect()
    };
    let (a, b) = (strip(run()), strip(run()));
    assert!(!a.is_empty());
    assert!(a.iter().all(|l| l.starts_with("overhead,4,")));
    assert_eq!(a, b);
}

#[test]
fn generated_files_round_trip_through_queries() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    let run = dir.path().join("run.txt");
    let index = dir.path().join("index.txt");
    let list = dir.path().join("list.txt");
    let path = |p: &std::path::Path| p.to_str().unwrap().to_string();

    let text = stdout(&provq(&["--seed", "3", "gen-spec", "--size", "60", "--composite", "4", "--cycles", "1", "--degree", "2"]));
    fs::write(&spec, &text).unwrap();
    let text = stdout(&provq(&["--seed", "3", "gen-run", "--spec", &path(&spec), "--edges", "80"]));
    fs::write(&run, &text).unwrap();
    let text = stdout(&provq(&["index", "--spec", &path(&spec), "--run", &path(&run)]));
    fs::write(&index, &text).unwrap();

    let verdict = stdout(&provq(&["safety", "--spec", &path(&spec), "--query", "_*"]));
    assert!(verdict.starts_with("verdict: safe"), "{verdict}");

    let general = |strategy: &str| {
        stdout(&provq(&[
            "query", "general", "--spec", &path(&spec), "--run", &path(&run), "--index", &path(&index),
            "--query", "_*", "--strategy", strategy,
        ]))
    };
    let oracle = general("oracle");
    assert!(oracle.lines().count() > 1);
    assert_eq!(general("g1"), oracle);
    assert_eq!(general("hybrid"), oracle);

    let all = stdout(&provq(&["query", "allpairs", "--spec", &path(&spec), "--run", &path(&run), "--query", "_*"]));
    let mut a: Vec<&str> = all.lines().skip(1).collect();
    let mut b: Vec<&str> = oracle.lines().skip(1).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);

    let first = a[0].split(',').next().unwrap().to_string();
    fs::write(&list, format!("{first}\n")).unwrap();
    let narrowed = stdout(&provq(&[
        "query", "allpairs", "--spec", &path(&spec), "--run", &path(&run), "--query", "_*", "--l1", &path(&list),
        "--strategy", "s1",
    ]));
    assert!(narrowed.lines().skip(1).all(|l| l.starts_with(&format!("{first},"))));
    assert!(narrowed.lines().count() > 1);
}
