use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use fracorlicz_cli::plan::{parse_domain, parse_grid, parse_halfspace};
use fracorlicz_cli::{parse_config, Command as Cmd, RunPlan};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracorlicz"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fracorlicz-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn verify_passes_on_builtin_setup() {
    let out = run(&["verify", "--seed", "20241016"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        code(&out),
        0,
        "{stdout}{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("all 12 criteria passed"));
}

#[test]
fn violating_young_function_exits_one() {
    let cfg = scratch("violating.cfg");
    fs::write(
        &cfg,
        "young = custom\ncoeffs = 1.5,-0.5\nexponents = 2,3\ncriteria = 1\n",
    )
    .unwrap();
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["all_pass"], false);
}

#[test]
fn missing_input_exits_two() {
    let out = run(&["modular", "--input", "/definitely/not/here.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}

#[test]
fn out_of_range_kernel_parameter_exits_two() {
    let cfg = scratch("bad-s.cfg");
    fs::write(&cfg, "kernel = fractional\ns = 1.5\n").unwrap();
    let out = run(&["kernels", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("s must lie in (0,1)"));
}

#[test]
fn malformed_config_reports_every_line() {
    let cfg = scratch("malformed.cfg");
    fs::write(&cfg, "colour = red\nseed\n").unwrap();
    let out = run(&["kernels", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("line 2"), "{err}");
}

#[test]
fn unknown_command_is_usage_error() {
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn same_plan_and_seed_give_identical_json() {
    let a = run(&["eigen", "--seed", "7", "--json", "--max-iter", "200"]);
    let b = run(&["eigen", "--seed", "7", "--json", "--max-iter", "200"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn field_commands_chain_through_csv() {
    let minimizer = scratch("minimizer.csv");
    let star = scratch("star.csv");
    let pol = scratch("pol.csv");
    let trace = scratch("trace.csv");
    let out = run(&["eigen", "--mu", "1", "--out", minimizer.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(&minimizer)
        .unwrap()
        .starts_with("n,h,K\n1,"));

    let out = run(&["modular", "--input", minimizer.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let lg = report["lg_norm"].as_f64().unwrap();
    assert!(
        (lg - 1.0).abs() < 1e-9,
        "minimizer at mu = 1 has unit L^G norm, got {lg}"
    );

    let cfg = scratch("rearrange.cfg");
    fs::write(&cfg, format!("trace_csv = {}\n", trace.display())).unwrap();
    let out = run(&[
        "rearrange",
        "--config",
        cfg.to_str().unwrap(),
        "--input",
        minimizer.to_str().unwrap(),
        "--out",
        star.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&trace).unwrap().starts_with("step,"));

    let cfg = scratch("polarize.cfg");
    fs::write(&cfg, "halfspace = x0 >= -1.5\n").unwrap();
    let out = run(&[
        "polarize",
        "--config",
        cfg.to_str().unwrap(),
        "--input",
        minimizer.to_str().unwrap(),
        "--out",
        pol.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["inequality_holds"], true);
}

#[test]
fn flags_override_config() {
    let cfg = parse_config("seed = 3\ngrid = 1,0.5,6\n").unwrap();
    let plan = RunPlan::build(Cmd::Eigen, &cfg).unwrap();
    assert_eq!(plan.seed, 3);
    assert_eq!(plan.grid.half(), 6);

    let mut cfg = cfg;
    cfg.set("seed", "11");
    cfg.set("grid", "2,0.25,4");
    let plan = RunPlan::build(Cmd::Eigen, &cfg).unwrap();
    assert_eq!(plan.seed, 11);
    assert_eq!(plan.grid.dim(), 2);
}

#[test]
fn plan_parsers() {
    let g = parse_grid("1, 0.25, 10").unwrap();
    assert_eq!((g.dim(), g.spacing(), g.half()), (1, 0.25, 10));
    assert!(parse_grid("3,0.25,10").is_err());
    assert!(parse_grid("1,-1,10").is_err());

    assert!(parse_halfspace("x0 >= -1.5").is_ok());
    assert!(parse_halfspace("x0-x1 <= 0").is_ok());
    assert!(parse_halfspace("x0 >= 0.3").is_err());

    assert_eq!(parse_domain("-2..1", 1).unwrap(), vec![([-2, 0], [1, 0])]);
    assert_eq!(parse_domain("-2..-1;1..2", 1).unwrap().len(), 2);
    assert!(parse_domain("3..1", 1).is_err());
}
