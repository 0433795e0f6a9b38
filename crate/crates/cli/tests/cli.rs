use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use saelab::traces::{synthesize_trace, TraceModel};
use serde_json::Value;

fn saelab(args: &[&str]) -> Output {
    saelab_in(args, None)
}

fn saelab_in(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_saelab"));
    cmd.args(args).env_remove("CI").env_remove("SAELAB_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("SAELAB_OUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn handshake_agrees_over_many_sessions() {
    let out = saelab(&[
        "handshake",
        "--mode",
        "sae",
        "--sessions",
        "100",
        "--seed",
        "7",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["sessions"], 100);
    assert_eq!(v["agreed"], 100);
}

#[test]
fn handshake_sae_pt_agrees() {
    let out = saelab(&[
        "handshake",
        "--mode",
        "sae-pt",
        "--curve",
        "p256",
        "--seed",
        "1",
    ]);
    assert_eq!(stdout_json(&out)["agreed"], 1);
}

#[test]
fn mismatched_passwords_from_two_configs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.conf");
    let b = dir.path().join("b.conf");
    std::fs::write(
        &a,
        "# station A\nmode = sae\npassword = hunter2\nseed = 3\n",
    )
    .unwrap();
    std::fs::write(&b, "password = hunter3\n").unwrap();
    let out = saelab(&[
        "handshake",
        "--config",
        a.to_str().unwrap(),
        "--peer-config",
        b.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["agreed"], 0);
    // the same peer password agrees
    std::fs::write(&b, "password = hunter2\n").unwrap();
    let out = saelab(&[
        "handshake",
        "--config",
        a.to_str().unwrap(),
        "--peer-config",
        b.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn transcript_has_two_records_per_session() {
    let dir = tempfile::tempdir().unwrap();
    let out = saelab_in(
        &[
            "handshake",
            "-n",
            "3",
            "--seed",
            "5",
            "--transcript",
            "t.jsonl",
        ],
        Some(dir.path()),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|r| r["confirmed"] == true));
    assert_eq!(lines[0]["pmk"], lines[1]["pmk"]);
}

#[test]
fn leaksim_builds_requested_sessions() {
    let out = saelab(&[
        "leaksim",
        "--profile",
        "openssl",
        "-n",
        "30",
        "-r",
        "3",
        "--seed",
        "11",
    ]);
    let v = stdout_json(&out);
    let sessions = v["sessions"].as_array().unwrap();
    assert_eq!(sessions.len(), 30);
    assert!(sessions.iter().all(|s| s["reliability"] == 3));
    let macs: std::collections::BTreeSet<_> =
        sessions.iter().map(|s| s["macB"].to_string()).collect();
    assert_eq!(macs.len(), 30);
}

#[test]
fn leaksim_with_noise_still_fills_the_fingerprint() {
    let out = saelab(&[
        "leaksim",
        "-n",
        "20",
        "-r",
        "3",
        "--flip-probability",
        "0.1",
        "--seed",
        "4",
    ]);
    assert_eq!(stdout_json(&out)["sessions"].as_array().unwrap().len(), 20);
}

#[test]
fn hardened_leaksim_warns_and_is_empty() {
    let out = saelab(&["leaksim", "--profile", "hardened", "-n", "5", "--seed", "1"]);
    let v = stdout_json(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let sessions = v["sessions"].as_array().unwrap();
    assert_eq!(sessions.len(), 5);
    assert!(sessions
        .iter()
        .all(|s| s["events"].as_array().unwrap().is_empty()));
}

#[test]
fn identical_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = saelab_in(
            &[
                "leaksim",
                "--profile",
                "wolfssl",
                "-n",
                "8",
                "-r",
                "3",
                "--flip-probability",
                "0.2",
                "--seed",
                "99",
                "-o",
                name,
            ],
            Some(dir.path()),
        );
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let c = saelab(&[
        "leaksim",
        "--profile",
        "wolfssl",
        "-n",
        "8",
        "-r",
        "3",
        "--flip-probability",
        "0.2",
        "--seed",
        "100",
    ]);
    assert_ne!(c.stdout, a);
}

#[test]
fn attack_keeps_the_planted_password() {
    let dir = tempfile::tempdir().unwrap();
    let d = |args: &[&str]| saelab_in(args, Some(dir.path()));
    let plant = "tr0ub4dor&3";
    assert!(d(&[
        "dictionary",
        "-n",
        "99999",
        "--plant",
        plant,
        "--seed",
        "1",
        "-o",
        "dict.txt"
    ])
    .status
    .success());
    assert!(d(&[
        "leaksim",
        "--password",
        plant,
        "-n",
        "22",
        "--channels",
        "decompression",
        "--seed",
        "2",
        "-o",
        "fp.json",
    ])
    .status
    .success());
    let dict = dir.path().join("dict.txt");
    let fp = dir.path().join("fp.json");
    let out = d(&[
        "attack",
        "--dictionary",
        dict.to_str().unwrap(),
        "--fingerprint",
        fp.to_str().unwrap(),
        "--survivors",
        "left.txt",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["dictionary_size"], 100_000);
    assert_eq!(v["measurements"], 22);
    assert!((v["efficiency_D"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let left = std::fs::read_to_string(dir.path().join("left.txt")).unwrap();
    assert!(left.lines().any(|l| l == plant));
    assert_eq!(
        left.lines().count() as u64,
        v["survivors"].as_u64().unwrap()
    );
    // 22 bits against 17 bits of dictionary: nearly always a unique survivor
    assert!(v["survivors"].as_u64().unwrap() <= 3);
}

#[test]
fn empty_fingerprint_keeps_the_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("d.txt");
    std::fs::write(&dict, "alpha\nbeta\ngamma\n").unwrap();
    let fp = dir.path().join("fp.json");
    std::fs::write(
        &fp,
        r#"{"version":1,"password_id":"x","mode":"sae","profile":"openssl","sessions":[]}"#,
    )
    .unwrap();
    let out = saelab(&[
        "attack",
        "--dictionary",
        dict.to_str().unwrap(),
        "--fingerprint",
        fp.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["survivors"], 3);
    assert_eq!(v["measurements"], 0);
    assert_eq!(
        v["candidates"],
        serde_json::json!(["alpha", "beta", "gamma"])
    );
}

#[test]
fn plan_reproduces_the_one_bit_row() {
    let out = saelab(&[
        "plan",
        "-d",
        "1.4e7,3.5e7,5.5e8,4.6e14",
        "--leak",
        "bit",
        "-r",
        "20",
    ]);
    let v = stdout_json(&out);
    let m: Vec<u64> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["measurements"].as_u64().unwrap())
        .collect();
    assert_eq!(m, [580, 600, 680, 1060]);
    assert!((v[0]["efficiency_D"].as_f64().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn plan_csv_and_unsatisfiable() {
    let out = saelab(&["plan", "-d", "1e5", "--leak", "bit", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("d,n_traces,measurements,"));
    let out = saelab(&["plan", "-d", "1e5", "--profile", "hardened"]);
    assert_eq!(out.status.code(), Some(1));
    let out = saelab(&["plan", "-d", "1e5", "--confidence", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let model = TraceModel::zero_noise();
    let mut paths = Vec::new();
    for (i, taken) in [true, false].into_iter().enumerate() {
        let t = synthesize_trace(&model, taken, &mut rng).unwrap();
        let p = dir.path().join(format!("t{i}.dat"));
        std::fs::write(&p, t.to_dat()).unwrap();
        paths.push(p.to_str().unwrap().to_string());
    }
    let mut args = vec!["classify", "--format", "csv"];
    args.extend(paths.iter().map(String::as_str));
    let out = saelab(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "trace_id,hits,verdict,confidence");
    assert!(rows[1].contains(",taken,"), "{text}");
    assert!(rows[2].contains(",not-taken,"), "{text}");
}

#[test]
fn classify_synthetic_repeated_is_exact() {
    let out = saelab(&["classify", "--synth", "200", "-r", "3", "--seed", "6"]);
    let v = stdout_json(&out);
    for row in v.as_array().unwrap() {
        let id = row["trace_id"].as_str().unwrap();
        let truth = if id.ends_with("-not-taken") {
            "not-taken"
        } else {
            "taken"
        };
        assert_eq!(row["verdict"], truth, "{id}");
    }
}

#[test]
fn stats_matches_analytic_for_decompression() {
    let out = saelab(&[
        "stats",
        "--profile",
        "ell",
        "--channels",
        "decompression",
        "-n",
        "50",
        "--seed",
        "2",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v[0]["empirical_bits"], 2.0);
    assert_eq!(v[0]["analytic_bits"], 2.0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(
        saelab(&["handshake", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        saelab(&["handshake", "--curve", "p999"]).status.code(),
        Some(2)
    );
    assert_eq!(
        saelab(&[
            "leaksim",
            "--mac-strategy",
            "fixed",
            "-n",
            "2",
            "--seed",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(saelab(&["classify"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_saelab"))
        .args(["handshake"])
        .env("CI", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
