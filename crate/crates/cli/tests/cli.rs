use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "[geometry]\nv_max = 6\n[mesh]\nR = sinh(3)\nn_v = 61\nn_theta = 8\n[ancient]\na = 1e-2\n[run]\nseed = 3\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ancient-mcf"));
    c.env("ANCIENT_MCF_LOG", "warn");
    c
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.ini");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(cfg).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn construct_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("run");
    let o = run(&["construct"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.ini", "solution.csv", "level_1.csv", "levels.csv", "residual.csv", "spectrum.csv", "construct.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let v = bin().arg("verify").arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.get("config_hash").is_some());
}

#[test]
fn worker_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("w1"), dir.path().join("w4"));
    assert_eq!(code(&bin().args(["construct", "--workers", "1", "--config"]).arg(&cfg).arg("--out").arg(&a).output().unwrap()), 0);
    assert_eq!(code(&bin().args(["construct", "--workers", "4", "--config"]).arg(&cfg).arg("--out").arg(&b).output().unwrap()), 0);
    for f in ["solution.csv", "level_1.csv", "levels.csv", "residual.csv", "spectrum.csv"] {
        assert!(fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn tampered_solution_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("run");
    assert_eq!(code(&run(&["construct"], &cfg, &out)), 0);
    let path = out.join("solution.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let value = |l: &str| l.rsplit(',').next().and_then(|s| s.parse::<f64>().ok()).unwrap_or(0.0);
    let (idx, _) = lines.iter().enumerate().skip(2).fold((0, 0.0f64), |best, (i, l)| if value(l).abs() > best.1 { (i, value(l).abs()) } else { best });
    let mut parts: Vec<String> = lines[idx].split(',').map(String::from).collect();
    let last = parts.len() - 1;
    parts[last] = format!("{:e}", 10.0 * value(&lines[idx]));
    lines[idx] = parts.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let v = bin().arg("verify").arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&v), 4, "{}", String::from_utf8_lossy(&v.stderr));
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");

    let stable = write_config(dir.path(), "[geometry]\nmodel = synthetic\npotential = zero\n[mesh]\nR = 5\nn_v = 61\n");
    assert_eq!(code(&run(&["spectrum"], &stable, &out)), 2);

    let big = write_config(dir.path(), "[geometry]\nv_max = 6\n[mesh]\nR = sinh(3)\nn_v = 61\n[ancient]\na = 5\n");
    assert_eq!(code(&run(&["construct"], &big, &out)), 3);

    let bogus = write_config(dir.path(), "[mesh]\nbogus = 1\n");
    assert_eq!(code(&run(&["construct"], &bogus, &out)), 64);
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 64);
    assert_eq!(code(&bin().arg("construct").output().unwrap()), 64);

    let missing = dir.path().join("does-not-exist");
    assert_eq!(code(&bin().arg("verify").arg("--out").arg(&missing).output().unwrap()), 66);
    assert_eq!(code(&bin().arg("construct").arg("--config").arg(&missing).output().unwrap()), 66);
}

#[test]
fn sweep_checks_its_radii() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let base = "[geometry]\nv_max = 6\n[mesh]\nR = sinh(3)\nn_v = 121\n[sweep]\n";
    let single = write_config(dir.path(), &format!("{base}R = sinh(2)\n"));
    assert_eq!(code(&run(&["sweep"], &single, &out)), 64);
    let dup = write_config(dir.path(), &format!("{base}R = sinh(2), sinh(2), sinh(3)\n"));
    assert_eq!(code(&run(&["sweep"], &dup, &out)), 64);
    let ok = write_config(dir.path(), &format!("{base}R = sinh(3), sinh(2), sinh(2.5), sinh(2)\ncompare_v = 1\n"));
    let o = run(&["sweep"], &ok, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 4);
}
