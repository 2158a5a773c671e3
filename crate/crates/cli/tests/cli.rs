use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepcross"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn cross_enum_json() {
    let o = run(&[
        "cross", "enum", "--d", "2", "--gamma", "1,1", "--n", "2", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Vec<Vec<u32>> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.len(), 6);
    assert!(v.contains(&vec![1, 1]));
}

#[test]
fn kernel_norm_parseval() {
    let o = run(&["kernel", "norm", "--s", "3", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((value - 2.0).abs() < 1e-6);
}

#[test]
fn kernel_eval_origin() {
    let o = run(&["kernel", "eval", "--s", "2,2", "--x", "0,0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 9.0).abs() < 1e-12);
}

#[test]
fn theorem2_single_block_spread() {
    let o = run(&[
        "rates", "theorem2", "--r", "1.5", "--theta", "1", "--q", "2", "--nmin", "4", "--nmax", "12",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,error,predicted,ratio"));
    let ratios: Vec<f64> = lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 9);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(hi / lo <= 1.02, "{}", hi / lo);
}

#[test]
fn hypothesis_violation_is_usage_error() {
    let o = run(&[
        "rates", "theorem1", "--r", "1,1", "--theta", "inf", "--nmin", "3", "--nmax", "5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("r_1 > 1"));
}

#[test]
fn unknown_flag_and_bad_tokens() {
    assert_eq!(
        run(&["cross", "enum", "--d", "1", "--gamma", "1", "--n", "2", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["kernel", "norm", "--s", "3", "--p", "infinity"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["cross", "enum", "--d", "2", "--gamma", "1", "--n", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["cross", "enum", "--d", "2", "--gamma", "2,2", "--n", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bracket_exceeded_exit_three() {
    // the tent factor at s_j = 1 breaks the single constant
    let o = run(&["verify", "lemma1", "--d", "2", "--smax", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!stdout(&o).is_empty());
    let ok = run(&["verify", "lemma1", "--d", "2", "--smin", "2", "--smax", "6"]);
    assert_eq!(ok.status.code(), Some(0));
    let tight = run(&[
        "verify",
        "lemma2",
        "--d",
        "2",
        "--smin",
        "2",
        "--smax",
        "6",
        "--p",
        "1",
        "--max-bracket",
        "1.01",
    ]);
    assert_eq!(tight.status.code(), Some(0));
}

#[test]
fn lacunary_sums() {
    let o = run(&[
        "verify", "lemma-v", "--d", "2", "--gamma", "1,1", "--alpha", "1", "--nmin", "3", "--nmax", "12",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let n: i32 = cols[0].parse().unwrap();
        let sum: f64 = cols[1].parse().unwrap();
        let closed = f64::from(n + 2) * 2f64.powi(1 - n);
        assert!((sum - closed).abs() <= 1e-10 * closed);
    }
    let g = run(&[
        "verify",
        "lemma-g",
        "--d",
        "2",
        "--gamma",
        "1,2",
        "--alt-gamma",
        "1,1.5",
        "--alpha",
        "1",
        "--nmin",
        "5",
        "--nmax",
        "12",
        "--max-bracket",
        "2",
    ]);
    assert_eq!(g.status.code(), Some(0), "{}", String::from_utf8_lossy(&g.stderr));
    let missing = run(&[
        "verify", "lemma-g", "--d", "2", "--gamma", "1,2", "--alpha", "1", "--nmin", "5", "--nmax", "6",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# theorem 1 run\nr = 2\ntheta = 1\nnmin = 3\nnmax = 6\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = run(&["rates", "theorem1", "--config", cfg]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a).lines().count(), 5);
    let b = run(&["rates", "theorem1", "--config", cfg, "--nmax", "4"]);
    assert_eq!(stdout(&b).lines().count(), 3);
}

#[test]
fn output_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    let base = [
        "rates", "theorem1", "--r", "2,2", "--theta", "inf", "--nmin", "4", "--nmax", "7",
    ];
    let mut a1: Vec<&str> = base.to_vec();
    a1.extend(["--output", p1.to_str().unwrap(), "--threads", "1"]);
    let mut a2: Vec<&str> = base.to_vec();
    a2.extend(["--output", p2.to_str().unwrap(), "--threads", "3"]);
    assert_eq!(run(&a1).status.code(), Some(0));
    assert_eq!(run(&a2).status.code(), Some(0));
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn grid_decompose_round_trip() {
    use stepcross::gridpath::sample;
    use stepcross::{BlockSum, MultiIndex};
    let dir = tempfile::tempdir().unwrap();
    let f = BlockSum::from_terms(
        2,
        [(MultiIndex::from(vec![1, 1]), 1.0), (MultiIndex::from(vec![3, 2]), 0.5)],
    )
    .unwrap();
    let g = sample(&f, 4.0, 128).unwrap();
    let header = dir.path().join("g.json");
    g.write(&header, &dir.path().join("g.bin")).unwrap();
    let out = dir.path().join("p.json");
    let o = run(&[
        "grid",
        "decompose",
        "--input",
        header.to_str().unwrap(),
        "--gamma",
        "1,1",
        "--n",
        "30",
        "--projected",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["residual_sup"].as_f64().unwrap() < 1e-10);
    let p = stepcross::gridpath::SampledGrid::read(&out).unwrap();
    assert_eq!(p.dim(), 2);
}
