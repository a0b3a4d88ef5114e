//! Command-line surface tests: exit codes, key naming in errors, and
//! byte-for-byte reproducibility with suppressed timestamps.

use hetlab::analysis::CoefficientBox;
use hetlab::CoefficientSet;
use std::path::Path;
use std::process::Command;

struct CliResult {
    code: i32,
    stdout: String,
    stderr: String,
}

fn hetlab(args: &[&str]) -> CliResult {
    hetlab_env(args, &[])
}

fn hetlab_env(args: &[&str], env: &[(&str, &str)]) -> CliResult {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hetlab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    CliResult {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write_reference(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("ref.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&CoefficientSet::reference()).unwrap(),
    )
    .unwrap();
    path
}

#[test]
fn check_pass_fail_and_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = write_reference(dir.path());

    let ok = hetlab(&["check", "--coeffs", ref_path.to_str().unwrap()]);
    assert_eq!(ok.code, 0, "stderr: {}", ok.stderr);
    let doc: serde_json::Value = serde_json::from_str(&ok.stdout).unwrap();
    assert_eq!(doc["payload"]["all_table1_pass"], serde_json::json!(true));

    // flipped c1 fails row C9 with exit code 2
    let mut bad = CoefficientSet::reference();
    bad.c1 = 1.0;
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, serde_json::to_string(&bad).unwrap()).unwrap();
    let fail = hetlab(&["check", "--coeffs", bad_path.to_str().unwrap()]);
    assert_eq!(fail.code, 2);
    let doc: serde_json::Value = serde_json::from_str(&fail.stdout).unwrap();
    let rows = doc["payload"]["conditions"].as_array().unwrap();
    let c9 = rows.iter().find(|r| r["id"] == "C9").unwrap();
    assert_eq!(c9["pass"], serde_json::json!(false));

    // missing key named in the error, exit code 1
    let text = std::fs::read_to_string(&ref_path).unwrap();
    let missing: serde_json::Value = {
        let mut v: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&text).unwrap();
        v.remove("d4");
        serde_json::Value::Object(v)
    };
    let missing_path = dir.path().join("missing.json");
    std::fs::write(&missing_path, missing.to_string()).unwrap();
    let err = hetlab(&["check", "--coeffs", missing_path.to_str().unwrap()]);
    assert_eq!(err.code, 1);
    assert!(err.stderr.contains("d4"), "stderr: {}", err.stderr);

    // unknown key named in the error
    let unknown_path = dir.path().join("unknown.json");
    std::fs::write(
        &unknown_path,
        text.replacen("\"d4\"", "\"d9\"", 1),
    )
    .unwrap();
    let err = hetlab(&["check", "--coeffs", unknown_path.to_str().unwrap()]);
    assert_eq!(err.code, 1);
    assert!(err.stderr.contains("d9"), "stderr: {}", err.stderr);
}

#[test]
fn find_point_box_echo_and_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let reference = CoefficientSet::reference();
    let box_path = dir.path().join("box.json");
    std::fs::write(
        &box_path,
        serde_json::to_string_pretty(&CoefficientBox::point(&reference)).unwrap(),
    )
    .unwrap();
    let out_path = dir.path().join("found.json");
    let res = hetlab(&[
        "find",
        "--mode",
        "table1_literal",
        "--box",
        box_path.to_str().unwrap(),
        "--seed",
        "1",
        "--max",
        "8",
        "--out",
        out_path.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    // the written file is a flat coefficient object, loadable by --coeffs
    let echoed =
        CoefficientSet::from_json_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(echoed, reference);

    // determinism: identical invocations produce identical bytes
    let res2 = hetlab(&[
        "find",
        "--mode",
        "table1_literal",
        "--box",
        box_path.to_str().unwrap(),
        "--seed",
        "1",
        "--max",
        "8",
        "--no-timestamp",
    ]);
    let res3 = hetlab_env(
        &[
            "find",
            "--mode",
            "table1_literal",
            "--box",
            box_path.to_str().unwrap(),
            "--seed",
            "1",
            "--max",
            "8",
            "--no-timestamp",
        ],
        &[("HETLAB_THREADS", "1")],
    );
    assert_eq!(res2.stdout, res3.stdout, "worker count changed the result");

    // lower > upper: exit 1
    let mut iv = CoefficientBox::point(&reference).intervals();
    iv[0] = [2.0, 1.0];
    let bad_box = dir.path().join("bad_box.json");
    std::fs::write(
        &bad_box,
        serde_json::to_string(&CoefficientBox::from_intervals(iv)).unwrap(),
    )
    .unwrap();
    let res = hetlab(&[
        "find",
        "--mode",
        "table1_literal",
        "--box",
        bad_box.to_str().unwrap(),
    ]);
    assert_eq!(res.code, 1);

    // infeasible box: exit 3 with a histogram
    let mut iv = CoefficientBox::point(&reference).intervals();
    iv[16] = [0.5, 2.0]; // c1 > 0
    let inf_box = dir.path().join("inf_box.json");
    std::fs::write(
        &inf_box,
        serde_json::to_string(&CoefficientBox::from_intervals(iv)).unwrap(),
    )
    .unwrap();
    let res = hetlab(&[
        "find",
        "--mode",
        "direct_conditions",
        "--box",
        inf_box.to_str().unwrap(),
        "--seed",
        "2",
        "--max",
        "32",
        "--no-timestamp",
    ]);
    assert_eq!(res.code, 3, "stdout: {}", res.stdout);
    let doc: serde_json::Value = serde_json::from_str(&res.stdout).unwrap();
    assert!(doc["payload"]["histogram"]["C9"].as_u64().unwrap() >= 32);
}

#[test]
fn simulate_axis_run_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = write_reference(dir.path());
    let csv_path = dir.path().join("traj.csv");

    let res = hetlab(&[
        "simulate",
        "--coeffs",
        ref_path.to_str().unwrap(),
        "--x0",
        "0.1,0,0,0",
        "--tmax",
        "50",
        "--out",
        csv_path.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(res.code, 0, "stderr: {}", res.stderr);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,x3,x4");
    let last = csv.lines().last().unwrap();
    let x1: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(
        (x1 - 3.302_775_637_731_994_6).abs() < 1e-6,
        "final x1 = {x1}"
    );
    assert!(csv_path.with_extension("manifest.json").exists());

    // stationary start: convergence noted in the payload
    let res = hetlab(&[
        "simulate",
        "--coeffs",
        ref_path.to_str().unwrap(),
        "--x0",
        "-0.302775637731994646,0,0,0",
        "--tmax",
        "50",
        "--out",
        dir.path().join("stat.csv").to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(res.code, 0);
    let doc: serde_json::Value = serde_json::from_str(&res.stdout).unwrap();
    assert_eq!(
        doc["payload"]["termination"],
        serde_json::json!("ConvergedToPoint")
    );

    // invalid horizon: exit 1
    let res = hetlab(&[
        "simulate",
        "--coeffs",
        ref_path.to_str().unwrap(),
        "--x0",
        "0.1,0,0,0",
        "--tmax",
        "-1",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.code, 1);

    // malformed state: exit 1
    let res = hetlab(&[
        "simulate",
        "--coeffs",
        ref_path.to_str().unwrap(),
        "--x0",
        "0.1,0,0",
        "--tmax",
        "1",
        "--out",
        dir.path().join("y.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.code, 1);
}

#[test]
fn adjudicate_skip_basin_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = write_reference(dir.path());
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let res = hetlab(&[
            "adjudicate",
            "--coeffs",
            ref_path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            "4",
            "--skip-basin",
            "--no-timestamp",
        ]);
        assert_eq!(res.code, 0, "stderr: {}", res.stderr);
        let mut bundle = vec![(
            "stdout".to_string(),
            res.stdout.replace(out_dir.to_str().unwrap(), "OUT"),
        )];
        for name in [
            "conditions.json",
            "construction.json",
            "connections.json",
            "basins.json",
            "adjudication.json",
        ] {
            let mut text = std::fs::read_to_string(out_dir.join(name)).unwrap();
            // the recorded output path differs between the two runs
            text = text.replace(out_dir.to_str().unwrap(), "OUT");
            bundle.push((name.to_string(), text));
        }
        outputs.push(bundle);
    }
    assert_eq!(outputs[0], outputs[1]);

    // skipped basins are marked
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a/adjudication.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        doc["payload"]["simulated_attracting_cycle"],
        serde_json::json!("skipped")
    );
    let skipped: Vec<String> = doc["payload"]["skipped"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(skipped.iter().any(|s| s.contains("disabled by budget")));
}

#[test]
fn adjudicate_fails_fast_on_unwritable_output() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = write_reference(dir.path());
    let file_in_the_way = dir.path().join("blocked");
    std::fs::write(&file_in_the_way, "not a directory").unwrap();
    let res = hetlab(&[
        "adjudicate",
        "--coeffs",
        ref_path.to_str().unwrap(),
        "--out",
        file_in_the_way.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(res.code, 1);
}

#[test]
fn bad_thread_env_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = write_reference(dir.path());
    let res = hetlab_env(
        &["check", "--coeffs", ref_path.to_str().unwrap()],
        &[("HETLAB_THREADS", "zero")],
    );
    assert_eq!(res.code, 1);
    assert!(res.stderr.contains("HETLAB_THREADS"));
}
