use std::path::Path;
use std::process::{Command, Output};

const OR: &str = ".model or\n.inputs a b\n.outputs y\n.names a b y\n1- 1\n-1 1\n.end\n";

fn rramkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rramkit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn mvl_add_prints_sum_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rramkit(dir.path(), &["--seed", "3", "mvl-add", "1", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("seed: 3"));
    assert!(out.contains("sum (base 3): 10"), "{out}");
    assert!(out.contains("sum (decimal): 3"), "{out}");
    let cfg = std::fs::read_to_string(dir.path().join("out/config.toml")).unwrap();
    assert!(cfg.starts_with("seed = 3"), "{cfg}");
}

#[test]
fn or_exhaustive_truth_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("or.blif"), OR).unwrap();
    let o = rramkit(
        dir.path(),
        &["--seed", "9", "--out", "res", "lim", "or.blif", "--exhaustive"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for line in ["00 -> 0", "10 -> 1", "01 -> 1", "11 -> 1"] {
        assert!(out.contains(line), "missing {line:?} in\n{out}");
    }
    assert!(out.contains("truth table: PASS"));
    for f in ["outputs.csv", "or.sp", "energy.csv", "config.toml"] {
        assert!(dir.path().join("res").join(f).is_file(), "{f}");
    }
}

#[test]
fn failed_check_exits_one() {
    // A pulse far above threshold always SETs, so the stream is all ones.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hot.toml"), "[trng]\npulse_amplitude = 3.0\n").unwrap();
    let o = rramkit(
        dir.path(),
        &["--config", "hot.toml", "--seed", "1", "trng", "--bits", "2000"],
    );
    assert_eq!(o.status.code(), Some(1), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stderr(&o).contains("verification failed"));
    assert!(dir.path().join("out/trng_stats.csv").is_file());
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = rramkit(dir.path(), &["lim", "missing.blif", "--inputs", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.blif"), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.toml"), "[device]\nr_onn = 5e3\n").unwrap();
    let o = rramkit(dir.path(), &["--config", "bad.toml", "mvl-add", "1", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r_onn"), "{}", stderr(&o));

    std::fs::write(dir.path().join("neg.toml"), "[device]\nr_on = -5.0\n").unwrap();
    let o = rramkit(dir.path(), &["--config", "neg.toml", "mvl-add", "1", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("[device]") && stderr(&o).contains("r_on"),
        "{}",
        stderr(&o)
    );

    let o = rramkit(dir.path(), &["mvl-add", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rramkit(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn printed_seed_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    // The verdict depends on the drawn chip; only the replay matters here.
    let first = rramkit(dir.path(), &["--out", "a", "trng", "--bits", "3000"]);
    assert!(matches!(first.status.code(), Some(0 | 1)), "{}", stderr(&first));
    let out = stdout(&first);
    let seed = out.lines().find_map(|l| l.strip_prefix("seed: ")).unwrap().to_owned();
    let again = rramkit(dir.path(), &["--out", "b", "--seed", &seed, "trng", "--bits", "3000"]);
    assert_eq!(first.status.code(), again.status.code());
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("wrote"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&out), strip(&stdout(&again)));
    for f in ["trng_stats.csv", "config.toml"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
