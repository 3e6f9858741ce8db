//! End-to-end CLI checks through the built binary: the simulate/fit/
//! baseline/evaluate pipeline, reproducibility of outputs, exit codes,
//! and the alternative peak-list input path.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_peakmeta")
}

fn run_ok(args: &[&str]) {
    let out = Command::new(bin()).args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn run_code(args: &[&str]) -> i32 {
    let out = Command::new(bin()).args(args).output().expect("spawn");
    out.status.code().unwrap_or(-1)
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timing.json" {
                // wall time is the one deliberately non-deterministic output
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), read(&p)));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn pipeline_runs_and_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let sim = root.join("sim");
    run_ok(&[
        "simulate",
        "two-disc",
        "--grid",
        "24",
        "--centers",
        "8,8;16,16",
        "--radius",
        "3",
        "--replicates",
        "2",
        "--seed",
        "9",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert!(sim.join("truth.csv").exists());
    assert!(sim.join("peaks_r000.csv").exists());
    assert!(sim.join("peaks_r001.csv").exists());
    assert!(sim.join("manifest.json").exists());

    let fit = root.join("fit");
    run_ok(&[
        "fit",
        sim.join("peaks_r000.csv").to_str().unwrap(),
        "--link",
        "logit",
        "--r",
        "0.01",
        "--iters",
        "300",
        "--burnin",
        "100",
        "--thin",
        "4",
        "--seed",
        "5",
        "--dump-precision",
        "--out",
        fit.to_str().unwrap(),
    ]);
    for f in [
        "prob_map.csv",
        "prob_map.pgm",
        "miscoding_map.csv",
        "samples_c0.bin",
        "samples_c0.json",
        "peaks.csv",
        "manifest.json",
        "precision_coo.txt",
        "diagnostics/diagnostics.json",
    ] {
        assert!(fit.join(f).exists(), "missing {f}");
    }

    let base = root.join("base");
    run_ok(&[
        "baseline",
        sim.join("peaks_r000.csv").to_str().unwrap(),
        "--method",
        "ale",
        "--fwhm",
        "4",
        "--alpha",
        "0.05",
        "--nperm",
        "150",
        "--seed",
        "2",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert!(base.join("kernel_map.csv").exists());
    assert!(base.join("significance.csv").exists());

    let eval = root.join("eval");
    run_ok(&[
        "evaluate",
        fit.to_str().unwrap(),
        "--truth",
        sim.join("truth.csv").to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
    ]);
    let metrics: serde_json::Value =
        serde_json::from_slice(&read(&eval.join("metrics.json"))).unwrap();
    let fit_report = &metrics["fits"][0];
    assert_eq!(fit_report["link"], "logit");
    assert!(fit_report["dic"].as_f64().unwrap().is_finite());
    assert!(fit_report["mspe"].as_f64().unwrap() >= 0.0);

    // identical rerun into the same paths reproduces every byte
    let snapshot_fit = tree_bytes(&fit);
    let snapshot_sim = tree_bytes(&sim);
    std::fs::remove_dir_all(&fit).unwrap();
    std::fs::remove_dir_all(&sim).unwrap();
    run_ok(&[
        "simulate",
        "two-disc",
        "--grid",
        "24",
        "--centers",
        "8,8;16,16",
        "--radius",
        "3",
        "--replicates",
        "2",
        "--seed",
        "9",
        "--out",
        sim.to_str().unwrap(),
    ]);
    run_ok(&[
        "fit",
        sim.join("peaks_r000.csv").to_str().unwrap(),
        "--link",
        "logit",
        "--r",
        "0.01",
        "--iters",
        "300",
        "--burnin",
        "100",
        "--thin",
        "4",
        "--seed",
        "5",
        "--dump-precision",
        "--out",
        fit.to_str().unwrap(),
    ]);
    assert_eq!(snapshot_sim, tree_bytes(&sim), "simulate outputs changed across reruns");
    assert_eq!(snapshot_fit, tree_bytes(&fit), "fit outputs changed across reruns");
}

#[test]
fn nonadaptive_flag_freezes_gamma() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let sim = root.join("sim");
    run_ok(&[
        "simulate", "bimodal", "--grid", "12", "--seed", "1", "--out",
        sim.to_str().unwrap(),
    ]);
    let fit = root.join("fit");
    run_ok(&[
        "fit",
        sim.join("peaks.csv").to_str().unwrap(),
        "--nonadaptive",
        "--iters",
        "120",
        "--burnin",
        "40",
        "--thin",
        "2",
        "--out",
        fit.to_str().unwrap(),
    ]);
    let stream = peakmeta::io::read_stream(&fit, "samples_c0").unwrap();
    assert!(stream.gamma_sq.iter().all(|&g| g == 1.0));
    assert!(!stream.spec.adaptive);

    // r = 0 disables robustification: the miscoding map is identically zero
    let (_, _, mis) = {
        let (r, c, v) = {
            let path = fit.join("miscoding_map.csv");
            let (r, c, v) = read_grid(&path);
            (r, c, v)
        };
        (r, c, v)
    };
    assert!(mis.iter().all(|&m| m == 0.0));

    // evaluate without a truth map: DIC present, MSPE absent
    let eval = root.join("eval");
    run_ok(&["evaluate", fit.to_str().unwrap(), "--out", eval.to_str().unwrap()]);
    let metrics: serde_json::Value =
        serde_json::from_slice(&read(&eval.join("metrics.json"))).unwrap();
    assert!(metrics["fits"][0]["dic"].as_f64().unwrap().is_finite());
    assert!(metrics["fits"][0].get("mspe").is_none());
}

fn read_grid(path: &Path) -> (usize, usize, Vec<f64>) {
    let bytes = read(path);
    peakmeta::io::parse_grid_csv(&bytes, "test").unwrap()
}

#[test]
fn peak_list_input_with_slab() {
    let tmp = tempfile::tempdir().unwrap();
    let list = tmp.path().join("peaks_xyz.csv");
    std::fs::write(&list, "x,y,z\n2,3,0\n7,4,2\n5,5,40\n").unwrap();
    let fit = tmp.path().join("fit");
    run_ok(&[
        "fit",
        list.to_str().unwrap(),
        "--peak-list",
        "--grid",
        "10x12",
        "--slab-center",
        "0",
        "--slab-halfwidth",
        "10",
        "--iters",
        "100",
        "--burnin",
        "30",
        "--thin",
        "2",
        "--out",
        fit.to_str().unwrap(),
    ]);
    // the normalized grid keeps only the two in-slab peaks
    let field = peakmeta::io::read_binary_grid(&fit.join("peaks.csv")).unwrap();
    assert_eq!(field.grid.n1(), 10);
    assert_eq!(field.grid.n2(), 12);
    assert_eq!(field.count_ones(), 2);
    assert_eq!(field.y[field.grid.index(3, 2)], 1);
    assert_eq!(field.y[field.grid.index(4, 7)], 1);
}

#[test]
fn exit_codes_distinguish_parse_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "0,1,2\n1,0\n").unwrap();
    let code = run_code(&[
        "fit",
        bad.to_str().unwrap(),
        "--iters",
        "50",
        "--burnin",
        "10",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "malformed input must exit 2");
    // and a structurally valid but non-binary grid also exits 2
    let nonbin = tmp.path().join("nonbin.csv");
    let row = "0.5,".repeat(5).trim_end_matches(',').to_string();
    let text = format!("{}\n", vec![row; 5].join("\n"));
    std::fs::write(&nonbin, text).unwrap();
    let code = run_code(&[
        "fit",
        nonbin.to_str().unwrap(),
        "--iters",
        "50",
        "--burnin",
        "10",
        "--out",
        tmp.path().join("out2").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}
