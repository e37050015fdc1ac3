use std::fs;
use std::path::Path;
use std::process::Command;

use growthlab_cli::{parse_str, run, Outcome, Subcommand};
use growthlab_core::production::{CustomKernel, Family, TechBias};

const CES_HARROD: &str = "\
[production]
family = ces
share = 0.4
sigma = 0.5

[technology]
bias = harrod
rate = 0.02

[model]
s = 0.2
delta = 0.05
n = 0.01
";

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_growthlab"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.ini");
    fs::write(&path, text).unwrap();
    path
}

fn report_value(report: &str, key: &str) -> String {
    let prefix = format!("{key} = ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in report"))
        .to_string()
}

#[test]
fn verdict_on_harrod_ces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CES_HARROD);
    let out = dir.path().join("out");
    let status = binary()
        .args(["verdict", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(out.join("verdict.txt")).unwrap();
    assert_eq!(report_value(&report, "verdict"), "BGP");
    let g: f64 = report_value(&report, "g_hat").parse().unwrap();
    assert!((g - 0.03).abs() <= 1e-4);
    // the resolved config travels with the result
    assert_eq!(report_value(&report, "sigma"), "0.5");
    assert_eq!(report_value(&report, "tail_fraction"), "0.25");
}

#[test]
fn broken_marginal_products_exit_two() {
    // f_K doubled: growth accounting no longer matches the kernel
    let kernel = CustomKernel::new("broken_cd", |k: f64, l: f64| k.sqrt() * l.sqrt())
        .with_gradient(|k: f64, l: f64| ((l / k).sqrt(), 0.5 * (k / l).sqrt()));
    let mut cfg = parse_str(CES_HARROD).unwrap();
    cfg.family = Family::Custom(kernel);
    cfg.bias = TechBias::harrod(0.02).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(Subcommand::Verdict, &cfg, dir.path()).unwrap();
    assert!(matches!(outcome, Outcome::Inconsistent(_)), "{outcome:?}");
    assert_eq!(outcome.exit_code(), 2);
}

#[test]
fn honest_custom_kernel_passes() {
    let kernel = CustomKernel::new("cd", |k: f64, l: f64| k.sqrt() * l.sqrt())
        .with_gradient(|k: f64, l: f64| (0.5 * (l / k).sqrt(), 0.5 * (k / l).sqrt()));
    let mut cfg = parse_str(CES_HARROD).unwrap();
    cfg.family = Family::Custom(kernel);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(Subcommand::Verdict, &cfg, dir.path()).unwrap(),
        Outcome::Success
    );
}

#[test]
fn bad_config_exits_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let text = CES_HARROD
        .replace("sigma = 0.5", "sigma_ces = 0.5")
        .replace("s = 0.2", "s = 1.2");
    let cfg = write_config(dir.path(), &text);
    let output = binary()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("unknown key `sigma_ces`"), "{stderr}");
    assert!(stderr.contains("line 4"), "{stderr}");
    assert!(stderr.contains("s out of range (0,1)"), "{stderr}");
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["simulate", "--config", "/nonexistent/scenario.ini", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("cannot read"));
}

#[test]
fn simulate_writes_full_precision_csv() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{CES_HARROD}\n[run]\nt_end = 10\ndt = 0.5\n\n[output]\nprefix = ces_\n");
    let cfg = write_config(dir.path(), &text);
    let status = binary()
        .args(["simulate", "--seed", "7", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("ces_trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "t,K,L,A,Y,gY,gK,share_K,share_L,eq1_residual,euler_residual"
    );
    assert_eq!(lines.len(), 1 + 21);
    assert!(!csv.contains('\r'));
    let first_k = lines[1].split(',').nth(1).unwrap();
    assert_eq!(first_k, "1.0000000000000000e0");
    assert!(dir.path().join("ces_simulate.txt").exists());
}

#[test]
fn timescale_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = CES_HARROD.replace(
        "family = ces\nshare = 0.4\nsigma = 0.5",
        "family = cobb_douglas\nalpha = 1/3",
    );
    let cfg = parse_str(&text).unwrap();
    assert_eq!(
        run(Subcommand::Timescale, &cfg, dir.path()).unwrap(),
        Outcome::Success
    );
    let csv = fs::read_to_string(dir.path().join("timescale_fractions.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("fraction,time"));
    assert_eq!(csv.lines().count(), 5);
    let report = fs::read_to_string(dir.path().join("timescale.txt")).unwrap();
    let h: f64 = report_value(&report, "half_life").parse().unwrap();
    assert!((h - 13.0).abs() <= 0.7);
}

#[test]
fn timescale_needs_labor_augmenting_technology() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_str(&CES_HARROD.replace("bias = harrod", "bias = hicks")).unwrap();
    assert!(run(Subcommand::Timescale, &cfg, dir.path()).is_err());
}

#[test]
fn pde_outputs_and_cfl() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_str(&format!("{CES_HARROD}\n[pde]\nprofile = log\nn_l = 32\n")).unwrap();
    assert_eq!(
        run(Subcommand::Pde, &cfg, dir.path()).unwrap(),
        Outcome::Success
    );
    let table = fs::read_to_string(dir.path().join("pde_refinement.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    let upwind = fs::read_to_string(dir.path().join("pde_upwind.csv")).unwrap();
    assert!(upwind.starts_with("t\\L,"));

    let cfg = parse_str(&format!("{CES_HARROD}\n[pde]\nc = 5\nn_t = 16\n")).unwrap();
    let err = run(Subcommand::Pde, &cfg, dir.path()).unwrap_err();
    assert!(err.to_string().contains("need at least"), "{err}");
}

#[test]
fn pde_needs_rate_for_hicks_ces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_str(&CES_HARROD.replace("bias = harrod", "bias = hicks")).unwrap();
    let err = run(Subcommand::Pde, &cfg, dir.path()).unwrap_err();
    assert!(err.to_string().contains("c is required"));
}
