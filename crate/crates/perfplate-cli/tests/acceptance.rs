//! CLI acceptance: identical configs with `--jobs 1` must produce
//! byte-identical CSV/JSON outputs across consecutive runs.

use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str], dir: &Path) {
    let output = Command::new(env!("CARGO_BIN_EXE_perfplate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn criterion_8_identical_runs_produce_identical_bytes() {
    let mut failures: Vec<String> = Vec::new();
    let root = tempfile::tempdir().unwrap();

    let compare_args = |out: &str| {
        vec![
            "compare".to_string(),
            "--eps-list".into(),
            "1/2".into(),
            "--n".into(),
            "64".into(),
            "--c0".into(),
            "0.5".into(),
            "--f-const".into(),
            "1".into(),
            "--t".into(),
            "10".into(),
            "--jobs".into(),
            "1".into(),
            "--out-dir".into(),
            out.into(),
        ]
    };
    for (first, second, args1, args2) in [
        (
            "cmp_a",
            "cmp_b",
            compare_args("cmp_a"),
            compare_args("cmp_b"),
        ),
        (
            "hom_a",
            "hom_b",
            vec![
                "solve-homogenized".into(),
                "--n".into(),
                "16".into(),
                "--out-dir".into(),
                "hom_a".into(),
            ],
            vec![
                "solve-homogenized".into(),
                "--n".into(),
                "16".into(),
                "--out-dir".into(),
                "hom_b".into(),
            ],
        ),
    ] {
        let args1: Vec<&str> = args1.iter().map(String::as_str).collect();
        let args2: Vec<&str> = args2.iter().map(String::as_str).collect();
        run(&args1, root.path());
        run(&args2, root.path());
        let a = dir_contents(&root.path().join(first));
        let b = dir_contents(&root.path().join(second));
        let names_a: Vec<&String> = a.iter().map(|(n, _)| n).collect();
        let names_b: Vec<&String> = b.iter().map(|(n, _)| n).collect();
        if names_a != names_b {
            failures.push(format!("{first}: file sets differ: {names_a:?} vs {names_b:?}"));
            continue;
        }
        for ((name, bytes_a), (_, bytes_b)) in a.iter().zip(b.iter()) {
            if bytes_a != bytes_b {
                failures.push(format!("{first}/{name}: bytes differ between runs"));
            }
        }
    }

    if failures.is_empty() {
        println!("acceptance 8 (byte-identical outputs with --jobs 1): PASS");
    } else {
        println!("acceptance 8 (byte-identical outputs with --jobs 1): FAIL");
        for f in &failures {
            println!("  - {f}");
        }
        panic!("acceptance 8 failed: {failures:?}");
    }
}
