use std::path::Path;
use std::process::{Command, Output};

use stabcheck_core::binom_test::power_closed_form;
use stabcheck_core::harness::TestTrace;

fn stabcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabcheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.display().to_string()
}

/// Data rows as string fields, skipping `#` lines and the column header.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, body)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn zero_trials_is_a_usage_error() {
    let out = stabcheck(&["power-experiment", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));
}

#[test]
fn unknown_kind_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"kind": "sing-a-song"}"#);
    let out = stabcheck(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unresolvable_learner_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"learner": {"name": "oracle"}}"#);
    let out = stabcheck(&["estimate-stability", "--config", &cfg, "--trials", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle"));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["power-experiment", "estimate-stability", "adversarial-demo"] {
        let a = dir.path().join(format!("{kind}-a.csv"));
        let b = dir.path().join(format!("{kind}-b.csv"));
        for (path, workers) in [(&a, "1"), (&b, "4")] {
            let out = stabcheck(&[
                kind,
                "--seed",
                "42",
                "--trials",
                "500",
                "--workers",
                workers,
                "--out",
                path.to_str().unwrap(),
            ]);
            assert!(
                out.status.success(),
                "{kind}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert!(!ta.is_empty());
        assert_eq!(ta, tb, "{kind}");
    }
}

#[test]
fn header_records_seed_and_config_hash() {
    let a = stabcheck(&["bounds", "--seed", "7"]);
    let b = stabcheck(&["bounds", "--seed", "8"]);
    let ta = String::from_utf8(a.stdout).unwrap();
    let tb = String::from_utf8(b.stdout).unwrap();
    let ha = ta.lines().nth(1).unwrap();
    assert!(ha.starts_with("# seed=7 config_hash="));
    assert_ne!(ha, tb.lines().nth(1).unwrap());
}

#[test]
fn bounds_at_the_boundary_with_infinite_spaces_give_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.json",
        r#"{"delta": 0.1, "delta_star": 0.1, "alpha": 0.05, "n": 10,
            "b_train": "inf", "b_eval": "inf", "x_size": "inf", "y_size": "inf"}"#,
    );
    let out = stabcheck(&["bounds", "--config", &cfg]);
    assert!(out.status.success());
    let (h, r) = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][column(&h, "minimum")], "0.05");
    assert_eq!(r[0][column(&h, "deterministic_c_defaulted")], "true");
}

#[test]
fn power_rows_recompute_from_their_inputs() {
    let out = stabcheck(&["power-experiment", "--trials", "200"]);
    assert!(out.status.success());
    let (h, r) = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(
        h,
        "delta_star,delta,kappa_floor,alpha,mc_power,closed_form,std_error,trials"
            .split(',')
            .collect::<Vec<_>>()
    );
    assert_eq!(r.len(), 21);
    for row in &r {
        let f = |name: &str| row[column(&h, name)].parse::<f64>().unwrap();
        let k = row[column(&h, "kappa_floor")].parse::<u64>().unwrap();
        let want = power_closed_form(f("alpha"), f("delta_star"), f("delta"), k).unwrap();
        assert_eq!(f("closed_form"), want.value);
    }
}

#[test]
fn binomial_run_saves_a_replayable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("run.csv");
    let out = stabcheck(&[
        "run-binom-test",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (h, r) = rows(&std::fs::read_to_string(&out_path).unwrap());
    let trace_path = &r[0][column(&h, "trace")];
    let trace = TestTrace::load(Path::new(trace_path)).unwrap();
    assert_eq!(
        trace.verdict.as_u8().to_string(),
        r[0][column(&h, "verdict")]
    );
    assert_eq!(trace.rounds.len(), 10);
    assert!(trace.respects_budget());
}

#[test]
fn plot_format_comments_the_column_names() {
    let out = stabcheck(&["estimate-stability", "--trials", "100", "--format", "plot"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let third = text.lines().nth(2).unwrap();
    assert_eq!(third, "# method epsilon n trials estimate std_error");
    assert!(text
        .lines()
        .nth(3)
        .unwrap()
        .starts_with("monte-carlo 0.5 3 100 "));
}

#[test]
fn run_uses_the_configured_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.json", r#"{"kind": "bounds"}"#);
    let out = stabcheck(&["run", "--config", &cfg]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("# stabcheck bounds\n"));
    let clash = stabcheck(&["lemma-check", "--config", &cfg]);
    assert_eq!(clash.status.code(), Some(2));
}
