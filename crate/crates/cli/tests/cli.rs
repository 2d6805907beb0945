use std::path::PathBuf;
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn llt(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_llt"));
    cmd.args(args).env_remove("LLT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn golden(name: &str, args: &[&str]) {
    let r = llt(args, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("LLT_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &r.stdout).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(r.stdout, expected, "output of {args:?} drifted from {name}");
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn params_row() {
    golden("params_k4.csv", &["params", "--k", "4"]);
    let r = llt(&["params", "--k", "4"], &[]);
    assert!(r.stdout.lines().any(|l| l == "4,16,65536,1/2048"));
}

#[test]
fn index_row() {
    golden("index_1000.csv", &["index", "--n", "1000"]);
    let r = llt(&["index", "--n", "1000"], &[]);
    assert!(r.stdout.ends_with("n,I,J\n1000,\"4,6,8\",\n"));
}

#[test]
fn block_law_golden() {
    golden("block_pmf_k2.csv", &["block-pmf", "--k", "2"]);
}

#[test]
fn llt_scan_golden() {
    golden("llt_scan_256.csv", &["llt-scan", "--n-list", "256"]);
}

#[test]
fn variance_scan_golden() {
    golden("variance_scan.csv", &["variance-scan", "--n-list", "1000,100"]);
}

#[test]
fn castle_golden() {
    golden("castle_l2.csv", &["castle", "--l", "2", "--xi-atoms", "2", "--seed", "7", "--marginal", "1/3,2/3"]);
    golden("castle_levels.csv", &["castle", "--levels", "2,2", "--marginal", "1/3,2/3", "--seed", "1"]);
}

#[test]
fn header_and_provenance() {
    let r = llt(&["charfn", "--n", "20", "--grid", "5", "--seed", "9"], &[]);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next().unwrap(), format!("# llt {} command=charfn seed=9 mode=float", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines.next().unwrap(), "t,phi_re,phi_im");
    assert_eq!(lines.count(), 5);
}

#[test]
fn json_mirrors_csv() {
    let r = llt(&["index", "--n", "1000", "--format", "json"], &[]);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["n", "I", "J"]));
    assert_eq!(v["rows"][0][1], "4,6,8");
    assert_eq!(v["provenance"]["command"], "index");
}

#[test]
fn threads_do_not_change_output() {
    let args = ["simulate", "--n", "100", "--samples", "40000", "--seed", "5"];
    let one = llt(&args, &[("LLT_THREADS", "1")]);
    let four = llt(&args, &[("LLT_THREADS", "4")]);
    assert_eq!(one.code, 0, "{}", one.stderr);
    assert_eq!(one.stdout, four.stdout);
    let flag = llt(&[&args[..], &["--threads", "2"]].concat(), &[]);
    assert_eq!(one.stdout, flag.stdout);
}

#[test]
fn env_overrides_thread_flag() {
    let r = llt(&["index", "--n", "1000", "--threads", "0"], &[("LLT_THREADS", "2")]);
    assert_eq!(r.code, 0);
    let bad = llt(&["index", "--n", "1000", "--threads", "0"], &[]);
    assert_eq!(bad.code, 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(llt(&["bogus"], &[]).code, 2);
    assert_eq!(llt(&["params", "--k", "4", "--nope"], &[]).code, 2);
    assert_eq!(llt(&["index", "--n", "1"], &[]).code, 2);
    let r = llt(&["params", "--k", "1"], &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("alpha undefined"));
}

#[test]
fn resource_cap_exits_3() {
    let r = llt(&["simulate", "--n", "200", "--samples", "10", "--truncate-k", "6"], &[]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let r = llt(&["castle", "--levels", "3,3,3", "--alphabet", "a,b,c", "--marginal", "1/3,1/3,1/3"], &[]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn corrupted_castle_exits_4_with_witness() {
    let r = llt(&["castle", "--l", "2", "--xi-atoms", "2", "--seed", "7", "--corrupt-cell", "3", "--dump-witness"], &[]);
    assert_eq!(r.code, 4);
    let first = r.stderr.lines().next().unwrap();
    let w: serde_json::Value = serde_json::from_str(first).unwrap();
    assert_ne!(w["lhs"], w["rhs"]);
    assert!(w["word"].as_array().is_some_and(|a| !a.is_empty()));
    assert!(r.stdout.contains(",false,"));
}

#[test]
fn unwritable_output_fails() {
    let r = llt(&["index", "--n", "1000", "--output", "/nonexistent-dir/out.csv"], &[]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.contains("cannot write"));
}

#[test]
fn config_file_with_flags_winning() {
    let cfg = tmp("cfg.json");
    std::fs::write(&cfg, r#"{"command": "params", "k": 6, "format": "json"}"#).unwrap();
    let r = llt(&["--config", cfg.to_str().unwrap(), "--format", "csv"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("k,p_k,d_k,alpha_sq\n6,64,"));
    let r = llt(&["--config", cfg.to_str().unwrap(), "--k", "4", "--format", "csv"], &[]);
    assert!(r.stdout.contains("4,16,65536,1/2048"));
}

#[test]
fn law_output_round_trips_into_noise() {
    let law = tmp("block.json");
    let r = llt(&["block-pmf", "--k", "2", "--format", "json", "--output", law.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0);
    let r = llt(&["noise", "--n", "4096", "--noise-law", law.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.trim_end().ends_with("true"));
}

#[test]
fn castle_json_has_rational_masses() {
    let r = llt(&["castle", "--l", "1", "--format", "json", "--emit-model", "--marginal", "1/3,2/3"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    let m = v["assignment"]["cells"][0]["mass"].as_str().unwrap();
    assert!(m.contains('/'));
    assert_eq!(v["castle"]["l"], 1);
}
