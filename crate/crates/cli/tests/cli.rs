use std::path::PathBuf;
use std::process::{Command, Output};

use qca_core::ReportRecord;

fn qca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qca"))
        .args(args)
        .env("QCA_THREADS", "0")
        .output()
        .expect("run qca")
}

fn scenario(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name]
        .iter()
        .collect();
    path.to_string_lossy().into_owned()
}

fn record(out: &Output) -> ReportRecord {
    ReportRecord::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

#[test]
fn probe_usd_and_breidbart() {
    let out = qca(&["probe", "--w", "0.6", "--eve-mu", "usd"]);
    assert!(out.status.success());
    let r = record(&out);
    assert!((r.get_float("p_correct").unwrap() - 0.4).abs() < 1e-10);
    assert!(r.get_float("p_error").unwrap().abs() < 1e-10);
    assert!((r.get_float("p_inconclusive").unwrap() - 0.6).abs() < 1e-10);

    let r = record(&qca(&["probe", "--w", "0.6", "--eve-mu", "breidbart"]));
    assert!((r.get_float("p_correct").unwrap() - 0.9).abs() < 1e-10);
    assert!((r.get_float("p_error").unwrap() - 0.1).abs() < 1e-10);
    assert!(r.get_float("p_inconclusive").unwrap().abs() < 1e-10);
}

#[test]
fn probe_constraint_violation_exits_2() {
    let out = qca(&["probe", "--w", "0.6", "--eve-mu", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: constraint_violated:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn unknown_config_field_exits_2_and_bad_json_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("u.json");
    std::fs::write(&unknown, r#"{"w": 0.6, "gain": 3}"#).unwrap();
    assert_eq!(
        qca(&["probe", "--config", unknown.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let broken = dir.path().join("b.json");
    std::fs::write(&broken, r#"{"w": 0.6,"#).unwrap();
    assert_eq!(
        qca(&["probe", "--config", broken.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn flags_override_file() {
    let r = record(&qca(&[
        "probe",
        "--config",
        &scenario("lossless.json"),
        "--w",
        "0.3",
    ]));
    assert_eq!(r.get_float("w"), Some(0.3));
    // eve_mu = "usd" from the file, resolved against the overridden w
    assert_eq!(r.get_float("eve_mu"), Some(0.3));
}

#[test]
fn sweep_two_steps_gives_endpoints() {
    let out = qca(&["sweep", "--w", "0.6", "--steps", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "mu,p_correct,p_error,p_inconclusive,ge_per_pulse,feasible,zeta"
    );
    assert_eq!(lines.len(), 3);
    let mus: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!((mus[0] - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(mus[1], 0.6);
    let pc: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((pc - 0.9).abs() < 1e-10);
}

#[test]
fn sweep_lossless_is_never_feasible_for_usd_side() {
    let out = qca(&[
        "sweep",
        "--config",
        &scenario("lossless.json"),
        "--steps",
        "5",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let feasible: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap())
        .collect();
    // only the Breidbart endpoint reaches G_E = N
    assert_eq!(feasible[1..], ["false"; 4]);
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let log1 = dir.path().join("a.csv");
    let log2 = dir.path().join("b.csv");
    let run = |log: &std::path::Path, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qca"))
            .args([
                "simulate",
                "--config",
                &scenario("matched_lossy.json"),
                "--n",
                "150000",
            ])
            .args(["--seed", "9", "--log", log.to_str().unwrap()])
            .env("QCA_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run(&log1, "1");
    let b = run(&log2, "4");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read(&log1).unwrap(), std::fs::read(&log2).unwrap());
}

#[test]
fn lossless_scenario_exits_3_with_report() {
    let out = qca(&["simulate", "--config", &scenario("lossless.json")]);
    assert_eq!(out.status.code(), Some(3));
    let r = record(&out);
    assert_eq!(r.fields["feasibility"], qca_core::ReportValue::Bool(false));
}

#[test]
fn monitor_separates_honest_and_attack_logs() {
    let dir = tempfile::tempdir().unwrap();
    let honest = dir.path().join("h.csv");
    let attack = dir.path().join("a.csv");
    let base = ["--config", &scenario("short_link.json"), "--n", "300000"];
    let sim = |extra: &[&str], log: &std::path::Path| {
        let mut args = vec!["simulate"];
        args.extend_from_slice(&base);
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--log", log.to_str().unwrap()]);
        assert!(qca(&args).status.success());
    };
    sim(&["--honest"], &honest);
    sim(&[], &attack);
    let mon = |log: &std::path::Path| {
        let mut args = vec!["monitor"];
        args.extend_from_slice(&base);
        args.extend_from_slice(&["--log", log.to_str().unwrap()]);
        record(&qca(&args))
    };
    let h = mon(&honest);
    assert_eq!(h.fields["rate_flagged"], qca_core::ReportValue::Bool(false));
    assert_eq!(
        h.fields["coincidence_flagged"],
        qca_core::ReportValue::Bool(false)
    );
    let a = mon(&attack);
    assert_eq!(a.fields["rate_flagged"], qca_core::ReportValue::Bool(false));
    assert_eq!(
        a.fields["coincidence_flagged"],
        qca_core::ReportValue::Bool(true)
    );
}

#[test]
fn truncated_log_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l.csv");
    let out = qca(&["simulate", "--n", "1000", "--log", log.to_str().unwrap()]);
    assert!(out.status.success());
    let bytes = std::fs::read(&log).unwrap();
    // cut inside the final record
    std::fs::write(&log, &bytes[..bytes.len() - 4]).unwrap();
    let out = qca(&[
        "monitor",
        "--n",
        "1000",
        "--window",
        "100",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}
