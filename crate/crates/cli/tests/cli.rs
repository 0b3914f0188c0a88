use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use stp_cli::artifacts::sha256_hex;

fn stp(dir: &Path, config: &str, extra: &[&str], env: &[(&str, &str)]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stp"));
    cmd.arg("run").arg(&path).args(extra).env_remove("STP_OUT_DIR").env_remove("STP_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn with_out(config: &str, out: &Path) -> String {
    format!("{config}out = {}\n", out.display())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimal_limsup_run_writes_complete_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = with_out("verb = limsup\nmap = rot:0.4142\nseq = harmonic:1\nn = 1000\nseed = 1\ngate = 0\n", &out);
    let o = stp(tmp.path(), &cfg, &[], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = json(&out.join("manifest.json"));
    let files = manifest["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["tails.csv", "samples.csv", "tails.svg", "summary.json"]);
    for f in files {
        let bytes = fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    let tails = fs::read_to_string(out.join("tails.csv")).unwrap();
    assert!(tails.starts_with("tail_start[index],hitting[count],samples[count],fraction[probability],stderr[probability],method\n"));
    assert!(!tails.contains('\r'));
    assert_eq!(tails.lines().count(), 5);
    let samples = fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1001);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["config_hash"], manifest["config_hash"]);
    assert_eq!(summary["config"]["alpha"], "sqrt2m1");
    let residue: u128 = summary["realized"]["alpha"]["residue"].as_str().unwrap().parse().unwrap();
    assert_eq!(residue % 2, 1);
    assert!(fs::read_to_string(out.join("tails.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn measure_vn_reports_twice_bprime() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("vn");
    let cfg = with_out("verb = measure-vn\nmap = rot:golden\nseq = bprime(harmonic:1)\nn = 3\nsamples = 100000\n", &out);
    let o = stp(tmp.path(), &cfg, &[], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("strips.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| h.starts_with(name)).unwrap();
    assert_eq!(row[col("n[")], "3");
    let closed: f64 = row[col("closed_form")].parse().unwrap();
    assert_eq!(closed, 2.0 / 48.0);
    assert_eq!(row[col("method")], "monte_carlo");
}

#[test]
fn gate_failure_exits_two_with_full_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fail");
    let cfg = with_out("verb = kurzweil\nseq = power:1:2\nn = 2000\ngate = 0.5\n", &out);
    let o = stp(tmp.path(), &cfg, &[], &[]);
    assert_eq!(o.status.code(), Some(2));
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["passed"], false);
    assert_eq!(manifest["gates"][0]["name"], "tail_fraction_at_half_horizon");
    assert_eq!(manifest["gates"][0]["passed"], false);
    assert!(json(&out.join("summary.json"))["notes"].as_array().unwrap().len() == 1);
}

#[test]
fn config_errors_exit_one_and_list_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let cfg = with_out("verb = limsup\nmap = times:4\nseq = harmonic:1\nn = 0\nq = 200\nfoo = 1\nseq = const:1\n", &out);
    let o = stp(tmp.path(), &cfg, &[], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    for needle in ["unknown key \"foo\"", "duplicate key \"seq\"", "line 3", "line 7", "q must lie", "n must be at least 1"] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_one() {
    let o = Command::new(env!("CARGO_BIN_EXE_stp")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_stp")).arg("run").arg("/nonexistent/cfg").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_empty_output_needs_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("dir");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    let cfg = with_out("verb = interval-lemma\nlemma_q = 4096\nsamples = 20\n", &out);
    assert_eq!(stp(tmp.path(), &cfg, &[], &[]).status.code(), Some(1));
    assert!(!out.join("manifest.json").exists());
    assert_eq!(stp(tmp.path(), &cfg, &["--overwrite"], &[]).status.code(), Some(0));
    assert!(out.join("manifest.json").exists());
    assert!(out.join("keep.txt").exists());
}

#[test]
fn environment_overrides_output_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let elsewhere = tmp.path().join("elsewhere");
    let cfg = with_out("verb = interval-lemma\nlemma_q = 4096\nsamples = 20\n", &tmp.path().join("ignored"));
    let o = stp(tmp.path(), &cfg, &[], &[("STP_OUT_DIR", elsewhere.to_str().unwrap()), ("STP_WORKERS", "2")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!tmp.path().join("ignored").exists());
    assert_eq!(json(&elsewhere.join("manifest.json"))["workers"], 2);
    let o = stp(tmp.path(), &cfg, &["--overwrite"], &[("STP_WORKERS", "many")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_prints_canonical_config() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.cfg");
    fs::write(&path, "verb = equidist\nmap = rot:golden\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stp")).arg("check").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("checkpoints = 1000,10000,100000,1000000\n"));
    assert!(text.contains("# hash "));
}

const SMALL_RUNS: [&str; 11] = [
    "verb = limsup\nmap = iet:3:3,2,1:random:1\nseq = harmonic:1\nn = 2000\ngate = 0\n",
    "verb = kurzweil\nseq = harmonic:1\nn = 2000\n",
    "verb = fixed-center\nmap = iet:4:4,3,2,1:random:2\nseq = harmonic:1\nn = 2000\ngate = 0\n",
    "verb = marchese\nmap = iet:3:3,2,1:random:5\nseq = harmonic:1/4\nn = 5000\ndraws = 4\ngate = 0\n",
    "verb = loglaw\nmap = iet:4:4,3,2,1:random:3\nradius_exponents = 3..7\nsamples = 8\ndraws = 2\ngate = 0\n",
    "verb = alpha-survey\nmap = rot:random:9\nseq = harmonic:1\nn = 500\nsamples = 100\nalpha_samples = 100\ngate = 0\n",
    "verb = equidist\nmap = rot:golden\ncheckpoints = 1000,10000\n",
    "verb = measure-vn\nmap = times:3\nseq = bprime(harmonic:1)\nn = 1,3\nsamples = 20000\nexhaustive_bits = 8\nsigmas = 6\n",
    "verb = measure-pair\nmap = rot:golden\nseq = bprime(harmonic:1)\npairs = 1:2,2:5\nsamples = 20000\nsigmas = 6\n",
    "verb = union-bound\nt = 1,2\nn0 = 1\nn = 100000\nsamples = 20000\n",
    "verb = interval-lemma\nlemma_q = 8192\nsamples = 50\n",
];

fn run_dir(tmp: &Path, name: &str, cfg: &str, workers: &str) -> std::path::PathBuf {
    let out = tmp.join(name);
    let o = stp(tmp, &with_out(cfg, &out), &[], &[("STP_WORKERS", workers)]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{cfg}\n{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn every_verb_is_reproducible_across_runs_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, cfg) in SMALL_RUNS.iter().enumerate() {
        let a = run_dir(tmp.path(), &format!("a{i}"), cfg, "1");
        let b = run_dir(tmp.path(), &format!("b{i}"), cfg, "4");
        let c = run_dir(tmp.path(), &format!("c{i}"), cfg, "4");
        let arts = artifacts(&a);
        assert!(arts.len() >= 2, "{cfg}");
        assert_eq!(arts, artifacts(&b), "{cfg}");
        assert_eq!(arts, artifacts(&c), "{cfg}");
        let (ma, mb) = (json(&a.join("manifest.json")), json(&b.join("manifest.json")));
        assert_eq!(ma["files"], mb["files"]);
        assert_eq!(ma["passed"], true, "{cfg}: {}", ma["gates"]);
    }
}
