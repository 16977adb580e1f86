use std::path::Path;
use std::process::{Command, Output};

fn oopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oopt")).args(args).output().expect("run oopt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_lists_every_flag_with_defaults() {
    let expected: [(&str, &[&str]); 5] = [
        ("gen-data", &["--out", "--count", "--kinds", "--edge", "--seed", "--cloud-samples", "--density-low"]),
        ("train", &["--input", "--out", "--loss-csv", "--K", "--steps", "--batch", "--lr", "--optimizer", "--clip", "--jitter", "--layers", "--seed"]),
        ("reconstruct", &["--input", "--params", "--out", "--diagnostics", "--config", "--voxel", "--T", "--K", "--chunk", "--seed", "--strict-manifold"]),
        ("evaluate", &["--gt", "--pred", "--config", "--samples", "--seed", "--out"]),
        ("stats", &["--input", "--out"]),
    ];
    for (cmd, flags) in expected {
        let o = oopt(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd}");
        let text = stdout(&o);
        for f in flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}:\n{text}");
        }
        assert!(text.contains("--threads") && text.contains("--json"), "{cmd}");
    }
    let train = stdout(&oopt(&["train", "--help"]));
    for d in ["[default: 50]", "[default: 2000]", "[default: 512]", "[default: adam]"] {
        assert!(train.contains(d), "train --help lacks {d}");
    }
    let recon = stdout(&oopt(&["reconstruct", "--help"]));
    for d in ["[default: off]", "[default: 100]", "[default: 50]", "[default: 1024]"] {
        assert!(recon.contains(d), "reconstruct --help lacks {d}");
    }
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn same_arguments_give_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let o = oopt(&[
                "gen-data", "--out", out.to_str().unwrap(), "--count", "3", "--edge", "0.2", "--seed", "4",
                "--cloud-samples", "300",
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            read_dir_bytes(&out)
        })
        .collect();
    assert_eq!(runs[0].len(), 6);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn stats_reports_a_closed_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    assert!(oopt(&["gen-data", "--out", out.to_str().unwrap(), "--count", "1", "--kinds", "icosphere", "--edge", "0.3"]).status.success());
    let mesh = std::fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let o = oopt(&["--json", "stats", "--input", mesh.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["manifold_percent"].as_f64(), Some(100.0));
    assert_eq!(v["edge_adjacency"]["2"].as_u64(), v["edges"].as_u64());
}

#[test]
fn exit_codes_separate_usage_from_io() {
    assert_eq!(oopt(&["reconstruct", "--bogus"]).status.code(), Some(1));
    let missing = oopt(&["stats", "--input", "/nonexistent/mesh.obj"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "K = 16\nlearning_rate = 3\n").unwrap();
    let o = oopt(&[
        "evaluate", "--gt", "/nonexistent/a.obj", "--pred", "/nonexistent/b.obj", "--config", cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("learning_rate"));
}
