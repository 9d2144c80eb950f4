use std::path::PathBuf;
use std::process::{Command, Output};

fn solvdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solvdiff"))
        .args(args)
        .output()
        .expect("run solvdiff")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const CEV: &str = r#"
[model]
kind = "cev"
r = 0.02
delta = 2500.0
beta = -2.0

[grid]
horizon = 0.5
steps = 16

[option]
strike = 100.0
"#;

/// CSV rows with the non-deterministic columns blanked.
fn mask_timing(csv: &str) -> Vec<Vec<String>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let timing: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.ends_with("time_s") || **h == "cost")
        .map(|(i, _)| i)
        .collect();
    lines
        .map(|l| {
            l.split(',')
                .enumerate()
                .map(|(i, v)| if timing.contains(&i) { String::new() } else { v.to_string() })
                .collect()
        })
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert!(solvdiff(&["--help"]).status.success());
    assert!(solvdiff(&["--version"]).status.success());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(solvdiff(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(solvdiff(&["price", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(solvdiff(&["price", "--paths", "0"]).status.code(), Some(1));
    assert_eq!(solvdiff(&["price", "--format", "binary"]).status.code(), Some(1));
    assert_eq!(solvdiff(&["price", "--config", "/nonexistent/run.toml"]).status.code(), Some(1));
}

#[test]
fn config_errors_exit_one() {
    let cases = [
        ("unknown_key.toml", "[model]\nkind = \"sqb\"\nmu = -0.5\nsigma = 2.0\n"),
        ("bad_kind.toml", "[model]\nkind = \"heston\"\n"),
        ("bad_scheme.toml", "[method]\nscheme = \"EULER\"\n"),
        ("bad_beta.toml", "[model]\nkind = \"cev\"\nr = 0.0\ndelta = 1.0\nbeta = 0.5\n"),
        ("wrong_command.toml", "command = \"sample\"\n"),
        ("weighted_cev.toml", &format!("{CEV}\n[method]\nkind = \"weighted\"\n")),
    ];
    for (name, body) in cases {
        let p = write_config(name, body);
        let o = solvdiff(&["price", "--paths", "100", "--config", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn price_is_deterministic_modulo_timing() {
    let p = write_config("cev_det.toml", CEV);
    let args = ["price", "--paths", "3000", "--seed", "5", "--config", p.to_str().unwrap()];
    let a = solvdiff(&args);
    let b = solvdiff(&[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success() && b.status.success());
    let (a, b) = (stdout(&a), stdout(&b));
    assert!(a.starts_with("model,payoff,price,stderr,variance,time_s,cost\n"));
    assert_eq!(a.lines().count(), 5);
    assert_eq!(mask_timing(&a), mask_timing(&b));

    let c = stdout(&solvdiff(&["price", "--paths", "3000", "--seed", "6", "--config", p.to_str().unwrap()]));
    assert_ne!(mask_timing(&a), mask_timing(&c));
}

#[test]
fn rqmc_and_jsonl() {
    let p = write_config("cev_rqmc.toml", &format!("{CEV}\n[method]\nkind = \"rqmc\"\nrandomizations = 4\n"));
    let o = solvdiff(&["price", "--paths", "1024", "--format", "jsonl", "--config", p.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["model"], "cev");
        assert!(v["price"].as_f64().unwrap() > 0.0);
        assert!(v["stderr"].as_f64().is_some());
    }
}

#[test]
fn sample_formats_agree() {
    let p = write_config(
        "sample.toml",
        "[model]\nkind = \"sqb\"\nmu = -0.5\n[grid]\ntimes = [0.0, 0.25, 0.5, 1.0]\n[method]\nseed = 3\n",
    );
    let cfg = p.to_str().unwrap();
    let csv = stdout(&solvdiff(&["sample", "--paths", "5", "--config", cfg]));
    let bin = solvdiff(&["sample", "--paths", "5", "--format", "binary", "--config", cfg]).stdout;
    let jsonl = stdout(&solvdiff(&["sample", "--paths", "5", "--format", "jsonl", "--config", cfg]));

    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("path_id,t,x"));
    let from_csv: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(from_csv.len(), 20);
    assert_eq!(bin.len(), 20 * 8);
    let from_bin: Vec<f64> = bin.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    assert_eq!(from_csv, from_bin);

    let rows: Vec<serde_json::Value> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 5);
    let from_json: Vec<f64> = rows
        .iter()
        .flat_map(|r| r["x"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()))
        .collect();
    assert_eq!(from_csv, from_json);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r["path_id"], i);
        assert_eq!(r["t"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn sample_writes_to_file() {
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("paths.csv");
    let o = solvdiff(&["sample", "--paths", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    // Default grid has 33 points.
    assert_eq!(text.lines().count(), 1 + 3 * 33);
}

#[test]
fn compare_and_bench_headers() {
    let o = solvdiff(&["compare-schemes", "--paths", "500"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("mu,scheme,n_paths,mae,max_stderr,mae_over_stderr,time_s\n"));
    assert_eq!(text.lines().count(), 10);

    let o = solvdiff(&["bench-randomizers", "--paths", "2000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with(
        "regime,n_draws,rejection_time_s,rejection_iterations,rejection_mean,chopdown_time_s,chopdown_iterations,chopdown_mean\n"
    ));
    assert_eq!(text.lines().count(), 6);
    let a = mask_timing(&text);
    let b = mask_timing(&stdout(&solvdiff(&["bench-randomizers", "--paths", "2000"])));
    assert_eq!(a, b);
}

#[test]
fn reference_batch_prices_every_cell() {
    let o = solvdiff(&["price", "--paths", "500", "--threads", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 13);
    for model in ["cev", "bessel_k", "confluent_u"] {
        assert_eq!(text.lines().filter(|l| l.starts_with(&format!("{model},"))).count(), 4);
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("reference"));
}

#[test]
fn selftest_small_run() {
    let o = solvdiff(&["selftest", "--paths", "3000", "--seed", "1"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("PASS determinism"));
    assert!(!text.contains("FAIL"));
    assert_eq!(solvdiff(&["selftest", "--format", "jsonl"]).status.code(), Some(1));
}
