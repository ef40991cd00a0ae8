use std::fs;
use std::path::Path;

use distillery::cli::{run, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_USAGE};
use distillery::envs::{thread_step_count, EnvSpec};
use distillery::nn::{ActorCriticNet, Topology};
use distillery::persistence::{load_checkpoint, save_checkpoint, Provenance};

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("distillery").chain(args.iter().copied()))
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn uniform_checkpoint(dir: &Path) -> std::path::PathBuf {
    // all-zero weights: equal logits in every state
    let net = ActorCriticNet::zeros(Topology::new(10, 2, &[8])).unwrap();
    let path = dir.join("uniform.ckpt");
    let prov = Provenance {
        algorithm: "none".into(),
        env: EnvSpec::chain(10, 0.1),
        seed: 0,
        env_steps: 0,
        config_hash: "0".into(),
    };
    save_checkpoint(&net, &prov, &path).unwrap();
    path
}

#[test]
fn evaluate_uniform_policy_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = uniform_checkpoint(dir.path());
    let conf = dir.path().join("c.conf");
    fs::write(&conf, "env.id = chain\nenv.n = 10\n").unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let code = cli(&[
            "evaluate", "--policy", &s(&ckpt), "--config", &s(&conf), "--steps", "3000", "--seed", "4",
            "--out", &s(out),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next().unwrap(), "env,agent,episodes,mean,std,high");
    assert!(lines.next().unwrap().starts_with("\"chain(n=10,slip=0.1)\",uniform,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "ppo.gama = 0.9\n").unwrap();
    let code = cli(&["train-teacher", "--config", &s(&conf), "--out", &s(dir.path())]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(fs::read_dir(dir.path()).unwrap().count() == 1, "nothing written on bad config");
}

#[test]
fn evaluate_rejects_mismatched_environment() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = uniform_checkpoint(dir.path());
    let conf = dir.path().join("grid.conf");
    fs::write(&conf, "env.id = grid\nenv.side = 3\n").unwrap();
    let code = cli(&["evaluate", "--policy", &s(&ckpt), "--config", &s(&conf), "--out", &s(&dir.path().join("x.csv"))]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn corrupt_files_exit_4_and_bad_flags_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = uniform_checkpoint(dir.path());
    let mut bytes = fs::read(&ckpt).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    fs::write(&ckpt, bytes).unwrap();
    let out = s(&dir.path().join("buf"));
    assert_eq!(cli(&["collect", "--teacher", &s(&ckpt), "--records", "10", "--out", &out]), EXIT_IO);
    assert_eq!(cli(&["collect", "--records", "10"]), EXIT_USAGE);
    assert_eq!(cli(&["distill", "--buffer", "b", "--tier", "tiny", "--out", "o"]), EXIT_USAGE);
}

#[test]
fn distill_subcommand_never_steps_an_environment() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = uniform_checkpoint(dir.path());
    let buf = dir.path().join("buf.adrb");
    assert_eq!(cli(&["collect", "--teacher", &s(&ckpt), "--records", "300", "--seed", "1", "--out", &s(&buf)]), EXIT_OK);
    let before = thread_step_count();
    let student = dir.path().join("student.ckpt");
    let code = cli(&["distill", "--buffer", &s(&buf), "--tier", "low", "--epochs", "2", "--seed", "1", "--out", &s(&student)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(thread_step_count(), before);
    let (net, prov) = load_checkpoint(&student).unwrap();
    assert_eq!(net.topology().hidden, vec![16, 16]);
    assert_eq!(prov.algorithm, "distill");
    assert_eq!(prov.env_steps, 0);
    let loss = fs::read_to_string(dir.path().join("student.loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 4, "{loss}");
}

fn write_column(path: &Path, agent: &str, means: &[f64]) {
    const GAMES: [&str; 10] = [
        "Beamrider", "Breakout", "Enduro", "Freeway", "Ms.Pacman", "Pong", "Q*bert", "Riverraid",
        "Seaquest", "Space Invaders",
    ];
    let mut text = String::from("# config_hash: published\nenv,agent,episodes,mean,std,high\n");
    for (g, m) in GAMES.iter().zip(means) {
        text.push_str(&format!("{g},{agent},1,{m},0,{m}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn report_reproduces_published_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let columns = [
        ("DQN", vec![8672.4, 303.9, 475.6, 25.8, 763.5, 16.2, 4589.8, 4065.3, 2793.3, 1449.7]),
        ("Teacher", vec![7500., 277., 722., 34., 3410., 21., 28367., 13916., 2471., 1653.]),
        ("Medium", vec![7018., 166., 827., 33., 4544., 21., 11646., 15601., 1908., 1624.]),
        ("Low", vec![6958., 187., 948., 34., 2085., 21., 18502., 9408., 2315., 1312.]),
    ];
    let mut spec = Vec::new();
    for (name, means) in &columns {
        let p = dir.path().join(format!("{name}.csv"));
        write_column(&p, name, means);
        spec.push(format!("{name}={}", s(&p)));
    }
    let out = dir.path().join("report.csv");
    let code = cli(&["report", "--columns", &spec.join(","), "--teacher", "Teacher", "--baseline", "DQN", "--out", &s(&out)]);
    assert_eq!(code, EXIT_OK);
    let csv = fs::read_to_string(&out).unwrap();
    let pct = |agent: &str| -> f64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("% of DQN,{agent},")))
            .and_then(|l| l.split(',').nth(2))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((pct("Teacher") - 169.0).abs() <= 1.0);
    assert!((pct("Medium") - 150.0).abs() <= 1.0);
    assert!((pct("Low") - 141.0).abs() <= 1.0);
    assert!((pct("DQN") - 100.0).abs() < 1e-9);
}

#[test]
fn report_names_missing_row() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "env,agent,episodes,mean,std,high\nx,a,1,1,0,1\ny,a,1,2,0,2\n").unwrap();
    fs::write(&b, "env,agent,episodes,mean,std,high\nx,b,1,1,0,1\n").unwrap();
    let code = cli(&["report", "--columns", &format!("a={},b={}", s(&a), s(&b)), "--teacher", "a"]);
    assert_eq!(code, EXIT_CONFIG);
}
