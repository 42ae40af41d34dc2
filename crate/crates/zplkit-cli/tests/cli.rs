//! End-to-end checks of the binary: exit codes, report contents, parse
//! errors, and the documented command examples.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zplkit"))
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn zplkit")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn identify_reports_the_w_line() {
    let out = run(&["identify", "--center", "1217.5", "--tol", "0.5", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["status"], "ok");
    let matches = doc["extras"]["matches"].as_array().expect("matches list");
    assert!(
        matches.iter().any(|m| m["label"] == "W"),
        "expected the W line among {matches:?}"
    );
}

#[test]
fn two_point_shift_file_exits_2_with_insufficient_data_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    std::fs::write(&csv, "temperature_k,energy_ev\n4,0.9356\n30,0.9351\n").unwrap();
    let report = dir.path().join("r.json");
    let out = run(&[
        "fit-passler",
        csv.to_str().unwrap(),
        "--theta",
        "406",
        "--no-timestamp",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("insufficient data"), "{text}");
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_64() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
    let err = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(err.contains("usage"), "{err}");
}

#[test]
fn missing_input_file_exits_1() {
    let out = run(&["fit-ratio", "/nonexistent/zplkit-test.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn wrong_header_exits_1_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "wrongcol,intensity\n1,2\n2,3\n3,4\n").unwrap();
    let out = run(&["fit-peaks", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn non_uniform_bins_name_the_offending_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("jag.csv");
    let mut text = String::from("time_ns,counts\n");
    for i in 0..10 {
        // Row 5 (line 6) breaks the 4 ns spacing.
        let t = if i == 4 { 12.5 } else { 4.0 * i as f64 };
        text.push_str(&format!("{t},{}\n", 10 - i));
    }
    std::fs::write(&csv, text).unwrap();
    let out = run(&["fit-trpl", csv.to_str().unwrap(), "--tau0-ns", "100", "--tau-f-ns", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 6") && err.contains("non-uniform"), "{err}");
}

#[test]
fn negative_counts_are_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("neg.csv");
    std::fs::write(&csv, "time_ns,counts\n0,5\n4,-6\n8,7\n").unwrap();
    let out = run(&["fit-trpl", csv.to_str().unwrap(), "--tau0-ns", "100", "--tau-f-ns", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("negative counts"), "{err}");
}

#[test]
fn simulated_decay_with_reservoir_feeding_peaks_after_t0() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let out = run(&[
        "simulate-trpl",
        "--tau0-ns",
        "1560",
        "--tau-f-ns",
        "11",
        "--nex",
        "1",
        "--n0",
        "0",
        "--bins",
        "500",
        "--scale",
        "1e6",
        "--data-out",
        csv.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut best = (0.0_f64, f64::NEG_INFINITY);
    for line in text.lines().skip(1) {
        if line.starts_with('#') {
            continue;
        }
        let (t, c) = line.split_once(',').unwrap();
        let (t, c): (f64, f64) = (t.parse().unwrap(), c.parse().unwrap());
        if c > best.1 {
            best = (t, c);
        }
    }
    assert!(best.0 > 0.0, "argmax at t = {} ns", best.0);
}

#[test]
fn metadata_comments_echo_into_report_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("meta.csv");
    std::fs::write(
        &csv,
        "# B_field_T: 0.5\n# temperature_K: 1.4\ntemperature_k,ratio\n4,2.5\n8,2.1\n16,1.6\n32,1.2\n",
    )
    .unwrap();
    let out = run(&["fit-ratio", csv.to_str().unwrap(), "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["inputs"]["b_field_t"], 0.5);
    assert_eq!(doc["inputs"]["temperature_k"], 1.4);
}

#[test]
fn descending_wavelength_input_is_resorted_to_ascending_energy() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("desc.csv");
    // One Gaussian on 40 points written in descending wavelength order
    // (ascending energy order on disk is the usual instrument output; this
    // is the reverse).
    let mut text = String::from("wavelength_nm,intensity\n");
    let hc = 1239.841_984_332_002_6;
    for i in (0..40).rev() {
        let e = 0.930 + 0.0004 * i as f64;
        let y = 1.0 + 50.0 * (-0.5 * ((e - 0.938) / 0.001_f64).powi(2)).exp();
        text.push_str(&format!("{},{y}\n", hc / e));
    }
    std::fs::write(&csv, text).unwrap();
    let report = dir.path().join("r.json");
    let out = run(&[
        "fit-peaks",
        csv.to_str().unwrap(),
        "--shape",
        "gaussian",
        "--max-peaks",
        "1",
        "--baseline",
        "--no-timestamp",
        "--out",
        report.to_str().unwrap(),
        "--emit-plot-data",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let tsv = std::fs::read_to_string(dir.path().join("r.tsv")).unwrap();
    let energies: Vec<f64> = tsv
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    assert!(energies.windows(2).all(|w| w[0] < w[1]), "axis not ascending");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "theta_k = 406\n").unwrap();
    let data = data_dir().join("passler_tx0.csv");
    let from_cfg = run(&[
        "fit-passler",
        data.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(from_cfg.status.code(), Some(0));
    assert_eq!(stdout_json(&from_cfg)["inputs"]["theta_k"], 406.0);
    let from_flag = run(&[
        "fit-passler",
        data.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--theta",
        "300",
        "--no-timestamp",
    ]);
    assert_eq!(stdout_json(&from_flag)["inputs"]["theta_k"], 300.0);
}

#[test]
fn plot_data_without_out_is_a_usage_error() {
    let data = data_dir().join("zeeman_cu00.csv");
    let out = run(&["fit-magneto", data.to_str().unwrap(), "--emit-plot-data"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn zeeman_splitting_matches_frozen_value_at_9_digits() {
    let out = run(&["eval-zeeman", "--g", "2.002", "--b", "0.5", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("5.79417019e-5"), "{text}");
}

#[test]
fn synth_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("gen.cfg");
    std::fs::write(
        &cfg_path,
        "model = ratio\nout = gen.csv\nr0 = 3\nea_ev = 0.44e-3\n\
         grid = 4, 8, 16, 32\nnoise = gaussian\nsigma = 0.05\nseed = 123\n",
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out_path in [&a, &b] {
        let out = run(&[
            "synth",
            "--spec",
            cfg_path.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn user_catalog_cannot_shadow_builtin_lines_without_the_override_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("user.csv");
    std::fs::write(
        &cat,
        "label,center_nm,fwhm_hint_nm,kind,notes\nW,1217.00,0.1,zpl,shifted duplicate\n",
    )
    .unwrap();
    let refused = run(&[
        "identify",
        "--center",
        "1217.5",
        "--catalog",
        cat.to_str().unwrap(),
    ]);
    assert_eq!(refused.status.code(), Some(64));
    let allowed = run(&[
        "identify",
        "--center",
        "1217.0",
        "--tol",
        "0.2",
        "--catalog",
        cat.to_str().unwrap(),
        "--allow-override",
        "--no-timestamp",
    ]);
    assert_eq!(allowed.status.code(), Some(0));
    let doc = stdout_json(&allowed);
    let matches = doc["extras"]["matches"].as_array().unwrap();
    assert!(
        matches.iter().any(|m| m["label"] == "W" && m["center_nm"] == 1217.0),
        "{matches:?}"
    );
}
