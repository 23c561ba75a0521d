//! End-to-end checks of the `steinweiss` binary: exit codes, config schema
//! enforcement, report reproducibility, and file outputs.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steinweiss"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("steinweiss-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, json: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(json).unwrap()).unwrap();
    path
}

fn bounded_instance() -> serde_json::Value {
    serde_json::json!({
        "dims": [1, 1],
        "alpha": ["3/5", "1/5"],
        "p": "2",
        "q": "2",
        "gamma": "3/10",
        "delta": "1/2"
    })
}

#[test]
fn verdict_exits_zero_on_bounded_instance() {
    let dir = scratch("verdict-ok");
    let cfg = write_config(&dir, "c.json", &serde_json::json!({"instance": bounded_instance()}));
    let out = bin().args(["verdict", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["body"]["verdict"]["status"], "Bounded");
    let ledger = report["body"]["ledger"].as_array().unwrap();
    let u_row = ledger
        .iter()
        .find(|row| row["constraint"] == "subset-sum-delta")
        .unwrap();
    assert_eq!(u_row["margin"], "2/5");
    assert_eq!(u_row["status"], "ok");
}

#[test]
fn invalid_alpha_exits_two_with_schema_error() {
    let dir = scratch("bad-alpha");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({"instance": {
            "dims": [1, 1],
            "alpha": ["1", "1/5"],
            "p": "2", "q": "2", "gamma": "0", "delta": "0"
        }}),
    );
    let out = bin().args(["verdict", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha"), "stderr: {err}");
}

#[test]
fn unknown_config_key_rejected() {
    let dir = scratch("unknown-key");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({"instance": bounded_instance(), "mystery_knob": 3}),
    );
    let out = bin().args(["verdict", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery_knob"));
}

#[test]
fn empty_sweep_lattice_exits_two() {
    let dir = scratch("empty-sweep");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": bounded_instance(),
            "sweep": {
                "gamma": {"min": "1", "max": "0", "step": "1/8"},
                "delta": {"min": "0", "max": "1", "step": "1/8"}
            }
        }),
    );
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_grid_has_81_rows_and_dual_symmetry() {
    let dir = scratch("sweep-81");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": bounded_instance(),
            "sweep": {
                "gamma": {"min": "0", "max": "1", "step": "1/8"},
                "delta": {"min": "0", "max": "1", "step": "1/8"},
                "dual_column": true
            }
        }),
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["body"]["rows"], 81);
    // Verdicts agree with the conjugate-dual instance on every cell.
    for row in report["body"]["table"].as_array().unwrap() {
        assert_eq!(row["status"], row["dual_status"], "row {row}");
    }
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 82); // header + 81 rows
    assert!(std::fs::read_to_string(out_dir.join("report.json")).is_ok());
}

#[test]
fn reports_reproduce_byte_for_byte_modulo_timestamp() {
    let dir = scratch("repro");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({"instance": bounded_instance(), "seed": 7}),
    );
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = bin()
            .args(["characteristic", "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["timestamp_unix"] = serde_json::Value::Null;
        outputs.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn reports_independent_of_thread_count() {
    let dir = scratch("threads");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": bounded_instance(),
            "lattice": {"log2_side_min": -6, "log2_side_max": 6, "center_offsets": [1.0, 4.0]}
        }),
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = bin()
            .args(["characteristic", "--threads", threads, "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["timestamp_unix"] = serde_json::Value::Null;
        outputs.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn characteristic_csv_has_itemized_columns() {
    let dir = scratch("char-csv");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": bounded_instance(),
            "lattice": {"log2_side_min": -3, "log2_side_max": 3, "center_offsets": [1.0]}
        }),
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["characteristic", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("characteristic.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "side_0,side_1,center_factor,center_offset,r,value,w_omega,w_sigma,geometry"
    );
    // 7 quotiented side tuples x 3 centers, plus the header.
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn operator_writes_grid_function_files() {
    let dir = scratch("operator-io");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": bounded_instance(),
            "grid": {"points": 32, "extent": 4.0, "aligned": false, "bump_width": 1.0}
        }),
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["operator", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["body"]["separable_vs_direct_max_rel"].as_f64().unwrap() < 1e-10);
    assert!(report["body"]["self_adjoint_rel"].as_f64().unwrap() < 1e-10);
    assert!(report["body"]["cone_cover"]["min_cover"].as_u64().unwrap() >= 1);

    // Flat little-endian f64 payload matching the JSON header.
    let header: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("image.json")).unwrap())
            .unwrap();
    let count = header["count"].as_u64().unwrap() as usize;
    assert_eq!(count, 32 * 32);
    let bin_data = std::fs::read(out_dir.join("image.bin")).unwrap();
    assert_eq!(bin_data.len(), count * 8);
    let first = f64::from_le_bytes(bin_data[..8].try_into().unwrap());
    assert!(first.is_finite() && first >= 0.0);
}

#[test]
fn witness_run_reports_blowup_for_violated_instance() {
    let dir = scratch("witness");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": {
                "dims": [1, 1],
                "alpha": ["3/5", "1/5"],
                "p": "2", "q": "2",
                "gamma": "3/10", "delta": "9/10"
            },
            "witness": {"k_max": 24}
        }),
    );
    let out = bin().args(["witness", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["body"]["any_blowup"], true);
}

#[test]
fn verify_disagreement_exits_three_under_corruption_hook() {
    let dir = scratch("corrupt");
    let cfg = write_config(&dir, "c.json", &serde_json::json!({"instance": bounded_instance()}));
    let out = bin()
        .args(["verify", "--corrupt-characteristic", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["consistency"]["all_agree"], false);
}

#[test]
fn decay_command_reports_positive_exponent() {
    let dir = scratch("decay");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": {
                "dims": [1, 1],
                "alpha": ["11/20", "1/5"],
                "p": "2", "q": "2",
                "gamma": "3/10", "delta": "9/20"
            },
            "r": "auto",
            "decay": {"k_max": 8}
        }),
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["decay", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["body"]["eps_hat"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(out_dir.join("decay_rungs.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,sum_t,value");
}

#[test]
fn endpoint_instance_reports_perturbation_certificate() {
    let dir = scratch("endpoint");
    let cfg = write_config(
        &dir,
        "c.json",
        &serde_json::json!({
            "instance": {
                "dims": [1, 1],
                "alpha": ["7/10", "1/5"],
                "p": "2", "q": "2",
                "gamma": "7/10", "delta": "1/5"
            }
        }),
    );
    let out = bin().args(["verdict", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["body"]["verdict"]["status"], "Endpoint");
    let cert = &report["body"]["endpoint_perturbation"];
    assert_eq!(cert["eps"], "1/100");
    assert_eq!(cert["minus"]["p"], "100/49");
    assert_eq!(cert["plus"]["p"], "100/51");
}

#[test]
fn bundled_configs_parse_and_run() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let cmd = if path.file_name().unwrap().to_str().unwrap().starts_with("sweep") {
            "sweep"
        } else {
            "verdict"
        };
        let out = bin().args([cmd, "--config"]).arg(&path).output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
