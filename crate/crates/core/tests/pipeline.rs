//! Longer end-to-end runs.

use std::fs;
use std::path::Path;

use distillery::cli::run;
use distillery::envs::EnvSpec;
use distillery::nn::{CapacityTier, Tier};
use distillery::persistence::read_eval_csv;
use distillery::ppo::{train, PpoConfig};

fn cli(args: &[String]) {
    let code = run(std::iter::once("distillery".to_string()).chain(args.iter().cloned()));
    assert_eq!(code, 0, "{args:?}");
}

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn mean(path: &Path) -> f64 {
    read_eval_csv(path).unwrap()[0].mean
}

#[test]
fn cli_pipeline_student_keeps_teacher_return_on_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    fs::write(
        dir.path().join("chain.conf"),
        "env.id = chain\nenv.n = 10\nenv.slip = 0.1\nppo.total_env_steps = 409600\n",
    )
    .unwrap();
    let conf = d("chain.conf");
    cli(&args(&["train-teacher", "--config", &conf, "--seed", "1", "--out", &d("teacher")]));
    cli(&args(&["collect", "--teacher", &d("teacher/teacher.ckpt"), "--records", "50000", "--seed", "1", "--out", &d("buf.adrb")]));
    cli(&args(&["distill", "--buffer", &d("buf.adrb"), "--tier", "low", "--epochs", "50", "--seed", "1", "--out", &d("student.ckpt")]));
    for (ckpt, out) in [("teacher/teacher.ckpt", "teacher.csv"), ("student.ckpt", "student.csv")] {
        cli(&args(&["evaluate", "--policy", &d(ckpt), "--config", &conf, "--steps", "50000", "--seed", "1", "--out", &d(out)]));
    }
    let (teacher, student) = (mean(&dir.path().join("teacher.csv")), mean(&dir.path().join("student.csv")));
    assert!(student >= 0.95 * teacher, "student {student} teacher {teacher}");
    let curve = fs::read_to_string(dir.path().join("teacher/learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 2 + 200);
}

#[test]
fn grid_teacher_reaches_the_goal_within_300_updates() {
    let config = PpoConfig {
        total_env_steps: 300 * PpoConfig::default().steps_per_update(),
        ..PpoConfig::default()
    };
    let out = train(&EnvSpec::grid(5), &CapacityTier::default_for(Tier::High), &config, 3).unwrap();
    let first = out.curve.iter().position(|p| p.mean_return > 0.0);
    assert!(first.is_some(), "never positive: {:?}", out.curve.last());
    assert!(out.curve.last().unwrap().mean_return > 0.0);
}
