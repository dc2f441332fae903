use std::path::Path;
use std::process::{Command, Output};

fn ccgen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccgen"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = ccgen(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Every file under `dir`, sorted by relative path.
fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn illum_set_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["illum-set", "--grid-step", "0.05", "--out", "illums.csv"]);
    let text = std::fs::read_to_string(tmp.path().join("illums.csv")).unwrap();
    assert!(text.starts_with("id,kind,temperature_K,rc,bc,eR,eG,eB\n"));
    assert!(text.lines().count() > 50);
    ok(
        tmp.path(),
        &["illum-set", "--grid-step", "0.05", "--full-simplex", "--temperatures", "0", "--out", "full.csv"],
    );
    let full = std::fs::read_to_string(tmp.path().join("full.csv")).unwrap();
    assert_eq!(full.lines().count(), 1 + 231);
}

#[test]
fn usage_errors_exit_one_with_help() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ccgen(tmp.path(), &["illum-set", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("--no-such-flag"));
    assert!(err.contains("Usage"));
    assert!(out.stdout.is_empty());

    let out = ccgen(tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_table_exits_three_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ccgen(
        tmp.path(),
        &["generate", "--table", "nowhere/table.tbl", "--random-scenes", "2", "--out", "ds"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nowhere/table.tbl"));

    let out = ccgen(tmp.path(), &["--config", "absent.conf", "illum-set", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("absent.conf"));
}

#[test]
fn version_matches_manifest_version() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(tmp.path(), &["--version"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains(ccgen::GENERATOR_VERSION));
}

/// Table, dataset, estimates and summary for one thread count.
fn pipeline(root: &Path, threads: &str, seed: &str) {
    let t = ["--threads", threads, "--seed", seed];
    let run = |args: &[&str]| ok(root, &[&t[..], args].concat());
    run(&["calibrate-synth", "--count", "3", "--samples", "5", "--noise-sigma", "0.02", "--out", "t.tbl"]);
    run(&[
        "generate",
        "--table",
        "t.tbl",
        "--random-scenes",
        "4",
        "--width",
        "16",
        "--height",
        "12",
        "--timestamp",
        "2000-01-01T00:00:00Z",
        "--out",
        "ds",
    ]);
    run(&[
        "estimate",
        "--manifest",
        "ds/manifest.json",
        "--method",
        "white_patch,gray_world",
        "--method",
        "gray_edge",
        "--out",
        "est.csv",
    ]);
    run(&["evaluate", "--manifest", "ds/manifest.json", "--estimates", "est.csv", "--out", "summary.csv"]);
}

#[test]
fn pipeline_is_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = ["t1", "t4", "again", "other-seed"].map(|d| {
        let p = tmp.path().join(d);
        std::fs::create_dir(&p).unwrap();
        p
    });
    pipeline(&dirs[0], "1", "7");
    pipeline(&dirs[1], "4", "7");
    pipeline(&dirs[2], "4", "7");
    pipeline(&dirs[3], "1", "8");
    let reference = tree(&dirs[0]);
    assert!(reference.iter().any(|(p, _)| p.ends_with("img_00003.png")));
    assert_eq!(tree(&dirs[1]), reference);
    assert_eq!(tree(&dirs[2]), reference);
    let other = tree(&dirs[3]);
    let img = |t: &[(String, Vec<u8>)]| t.iter().find(|(p, _)| p.ends_with("img_00000.png")).unwrap().1.clone();
    assert_ne!(img(&other), img(&reference));

    let summary = std::fs::read_to_string(dirs[0].join("summary.csv")).unwrap();
    assert!(summary.starts_with("error,method,count,mean,median,trimean,best25,worst25,avg\n"));
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.contains("gray_edge(p=1;order=1;sigma=1)"));
}

#[test]
fn missing_estimates_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    pipeline(root, "1", "0");
    let est = std::fs::read_to_string(root.join("est.csv")).unwrap();
    let cut: String = est.lines().take(2).map(|l| format!("{l}\n")).collect();
    std::fs::write(root.join("partial.csv"), cut).unwrap();
    let out = ccgen(
        root,
        &["evaluate", "--manifest", "ds/manifest.json", "--estimates", "partial.csv", "--out", "s.csv"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("missing estimates"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    std::fs::write(
        root.join("run.conf"),
        "# illuminant set\ngrid_step = 0.1\nseed = 4\nfull-simplex = true\ntemperatures = 0\n",
    )
    .unwrap();
    ok(root, &["--config", "run.conf", "illum-set", "--grid-step", "0.05", "--out", "a.csv"]);
    let rows = std::fs::read_to_string(root.join("a.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 231);
    let echo = std::fs::read_to_string(root.join("a.run.txt")).unwrap();
    for line in ["seed = 4", "grid-step = 0.05", "config.grid-step = 0.1", "config.seed = 4"] {
        assert!(echo.lines().any(|l| l == line), "{line:?} missing from\n{echo}");
    }
    ok(root, &["--config", "run.conf", "illum-set", "--out", "b.csv"]);
    let rows = std::fs::read_to_string(root.join("b.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 66);
}

#[test]
fn experiments_are_thread_invariant() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    for threads in ["1", "3"] {
        let reduce = format!("fig6-{threads}.csv");
        let bench = format!("table1-{threads}.csv");
        ok(
            root,
            &[
                "--threads", threads, "reduce-experiment", "--images", "4", "--width", "24", "--height", "24",
                "--out", &reduce,
            ],
        );
        ok(
            root,
            &[
                "--threads", threads, "benchmark", "--images", "3", "--width", "16", "--height", "16",
                "--grid-step", "0.2", "--samples", "3", "--out", &bench,
            ],
        );
    }
    let read = |f: &str| std::fs::read(root.join(f)).unwrap();
    assert_eq!(read("fig6-1.csv"), read("fig6-3.csv"));
    assert_eq!(read("table1-1.csv"), read("table1-3.csv"));
    assert_eq!(read("fig6-1.run.txt"), read("fig6-3.run.txt"));
    let fig6 = String::from_utf8(read("fig6-1.csv")).unwrap();
    assert!(fig6.starts_with("k,method,median_error\n"));
    assert_eq!(fig6.lines().count(), 1 + 8 * 4);
    let table1 = String::from_utf8(read("table1-1.csv")).unwrap();
    assert_eq!(table1.lines().count(), 1 + 8 * 3);
    let echo = String::from_utf8(read("table1-1.run.txt")).unwrap();
    assert!(echo.contains("sigma-a = 0.05") || echo.contains("sensor0_noise_sigma = 0.05"), "{echo}");
}
