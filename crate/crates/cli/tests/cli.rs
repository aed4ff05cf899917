use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tailcmp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailcmp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "status {:?}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) {
    let mut args = vec!["simulate", "--n", "2000", "--seed", "9", "--out", name];
    args.extend(extra);
    ok(tailcmp(&args, dir));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "a.csv", &[]);
    simulate(dir.path(), "b.csv", &[]);
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert!(a.starts_with("date,return\n2000-01-01,"));
    assert_eq!(a.lines().count(), 2001);

    let o = ok(tailcmp(
        &["simulate", "--n", "2000", "--seed", "9"],
        dir.path(),
    ));
    assert_eq!(stdout(&o), a);
}

#[test]
fn monte_carlo_output_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.txt"),
        "# small grid\nkappa = 1.3, 1.8\nn = 300\nreplications = 40\ntests = dm, alg1, algc1\n",
    )
    .unwrap();
    let run = |w: &str| {
        stdout(&ok(tailcmp(
            &[
                "mc-size",
                "--config",
                "exp.txt",
                "--seed",
                "3",
                "--workers",
                w,
            ],
            dir.path(),
        )))
    };
    let base = run("1");
    assert_eq!(
        base.lines().next().unwrap(),
        "kappa,n,delta,test,reject_pct,mc_se,M,seed"
    );
    assert_eq!(base.lines().count(), 7);
    for w in ["2", "5", "0"] {
        assert_eq!(run(w), base);
    }

    ok(tailcmp(
        &[
            "mc-power", "--config", "exp.txt", "--out", "p.csv", "--level", "0.1",
        ],
        dir.path(),
    ));
    assert_eq!(
        fs::read_to_string(dir.path().join("p.csv"))
            .unwrap()
            .lines()
            .count(),
        7
    );
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "kappa = 1.5\nkapa = 1.7\n").unwrap();
    let o = tailcmp(&["mc-size", "--config", "bad.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("kapa"), "{err}");

    for args in [
        &["ci", "--returns", "missing.csv"][..],
        &["no-such-command"],
        &["mc-size", "--lag", "sometimes"],
        &["epa", "--returns", "r.csv", "--garch"],
    ] {
        assert_eq!(tailcmp(args, dir.path()).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(tailcmp(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("r.csv"),
        "date,return\n2020-01-01,1\n2020-01-02,1\n2020-01-03,1\n2020-01-04,1\n2020-01-05,1\n2020-01-06,1\n",
    )
    .unwrap();
    let o = tailcmp(&["hill", "--returns", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn forecast_comparison_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    simulate(
        dir.path(),
        "r.csv",
        &["--noise", "student", "--kappa", "4", "--phi", "0"],
    );
    let common = [
        "--returns",
        "r.csv",
        "--rw",
        "100,400",
        "--garch",
        "--split",
        "2001-01-01",
    ];

    let mut args = vec!["epa"];
    args.extend(common);
    let o = ok(tailcmp(&args, dir.path()));
    let text = stdout(&o);
    assert!(String::from_utf8_lossy(&o.stderr).contains("G-N fit"));
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        // 2000 daily observations from 2000-01-01; the split drops 366 (a
        // leap year) and RW-400 has no forecast before observation 400.
        let n = if r[0] == "RW-400" || r[1] == "RW-400" {
            "1600"
        } else {
            "1634"
        };
        assert_eq!(r[2], n);
        let mirror = rows.iter().find(|m| m[0] == r[1] && m[1] == r[0]).unwrap();
        let neg = |s: &str| -s.parse::<f64>().unwrap();
        assert_eq!(neg(r[4]), mirror[4].parse::<f64>().unwrap());
        assert_eq!(neg(r[7]), mirror[7].parse::<f64>().unwrap());
    }

    let mut args = vec!["spa", "--benchmark", "RW-100"];
    args.extend(common);
    let text = stdout(&ok(tailcmp(&args, dir.path())));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["RW-100", "2", "1600"]);

    let mut args = vec!["spa", "--benchmark", "nobody"];
    args.extend(common);
    assert_eq!(tailcmp(&args, dir.path()).status.code(), Some(1));

    let text = stdout(&ok(tailcmp(
        &[
            "ci",
            "--returns",
            "r.csv",
            "--rw",
            "100,400",
            "--pair",
            "RW-100,RW-400",
            "--level",
            "0.1",
        ],
        dir.path(),
    )));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "RW-100-RW-400");
    assert_eq!(row[1], "1600");
    let (lo, hi): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
    assert!(lo <= hi);
}

#[test]
fn hill_writes_a_plot_table() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "r.csv", &["--kappa", "1.5", "--phi", "0"]);
    let o = ok(tailcmp(
        &[
            "hill",
            "--returns",
            "r.csv",
            "--k",
            "20,100,150",
            "--out",
            "h.csv",
        ],
        dir.path(),
    ));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tail_balance_p_plus="));
    let text = fs::read_to_string(dir.path().join("h.csv")).unwrap();
    let ks: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(text.lines().next().unwrap(), "k,kappa_hat");
    assert_eq!(ks, ["20", "100", "150"]);
}
