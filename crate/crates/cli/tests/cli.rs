use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn gbal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbal"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs the words of `line` followed by `rest`.
fn gbal_line(line: &str, rest: &[&str]) -> Output {
    let mut args: Vec<&str> = line.split_whitespace().collect();
    args.extend_from_slice(rest);
    gbal(&args)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_path(dir: &TempDir, k: &str) -> std::path::PathBuf {
    let path = dir.path().join(format!("path{k}.json"));
    let out = gbal_line(
        "generate adversarial-path --k",
        &[k, "--scale", "100", "--out", p(&path)],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for f in [&a, &b] {
        let out = gbal_line(
            "generate two-valued --m 4 --heavy 3 --light 5 --W 10 --w 3 --seed 1 --out",
            &[p(f)],
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let other = gbal_line(
        "generate two-valued --m 4 --heavy 3 --light 5 --W 10 --w 3 --seed 2",
        &[],
    );
    assert_ne!(other.stdout, fs::read(&a).unwrap());
}

#[test]
fn solve_then_verify_adversarial_path() {
    let dir = TempDir::new().unwrap();
    let inst = write_path(&dir, "2");
    let sol = dir.path().join("sol.json");
    let trace = dir.path().join("trace.jsonl");
    let out = gbal_line(
        "solve",
        &[
            p(&inst),
            "--mode",
            "general",
            "--beta",
            "7/10",
            "--out",
            p(&sol),
            "--trace",
            p(&trace),
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    let ratio = v["ratio_certified"].as_str().unwrap();
    let (num, den) = ratio.split_once('/').unwrap();
    let (num, den): (i64, i64) = (num.parse().unwrap(), den.parse().unwrap());
    assert!(num * 10 <= 19 * den, "ratio {ratio}");
    assert!(fs::read_to_string(&trace).unwrap().lines().count() > 0);

    let out = gbal(&["verify", p(&inst), p(&sol)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_rejects_tampered_solution() {
    let dir = TempDir::new().unwrap();
    let inst = write_path(&dir, "1");
    let out = gbal(&["solve", p(&inst), "--mode", "general", "--beta", "7/10"]);
    assert_eq!(code(&out), 0);
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    v["makespan"] = serde_json::json!(1);
    let sol = dir.path().join("bad.json");
    fs::write(&sol, v.to_string()).unwrap();
    assert_eq!(code(&gbal(&["verify", p(&inst), p(&sol)])), 1);

    v["assignment"]["r1"] = serde_json::json!("p3");
    fs::write(&sol, v.to_string()).unwrap();
    assert_eq!(code(&gbal(&["verify", p(&inst), p(&sol)])), 1);
}

#[test]
fn general_mode_needs_beta() {
    let dir = TempDir::new().unwrap();
    let inst = write_path(&dir, "1");
    let out = gbal(&["solve", p(&inst), "--mode", "general"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
    let out = gbal(&["solve", p(&inst), "--mode", "general", "--beta", "1/2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&gbal(&["solve", p(&missing)])), 1);
    let broken = dir.path().join("broken.json");
    fs::write(
        &broken,
        r#"{"machines":[{"id":"m1"}],"jobs":[{"id":"j1","weight":5,"eligible":["m9"]}]}"#,
    )
    .unwrap();
    assert_eq!(code(&gbal(&["solve", p(&broken), "--beta", "7/10"])), 1);
    assert_eq!(code(&gbal(&["solve", p(&broken), "--no-such-flag"])), 1);
}

#[test]
fn oracle_reports_opt_and_feasibility() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("small.json");
    fs::write(
        &inst,
        r#"{"machines":[{"id":"m1","dedicated_load":3},{"id":"m2"}],
            "jobs":[{"id":"a","weight":5,"eligible":["m1","m2"]},{"id":"b","weight":5,"eligible":["m1","m2"]}]}"#,
    )
    .unwrap();
    let out = gbal(&["oracle", p(&inst)]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["opt"], 8);
    let out = gbal(&["oracle", p(&inst), "--t", "7"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["feasible"], false);
}

#[test]
fn verify_checks_declarations() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst.json");
    fs::write(
        &inst,
        r#"{"machines":[{"id":"m1","dedicated_load":3},{"id":"m2"}],
            "jobs":[{"id":"a","weight":6,"eligible":["m1"]}]}"#,
    )
    .unwrap();
    let decl = dir.path().join("decl.json");
    fs::write(
        &decl,
        r#"{"t":8,"mode":"general","beta":"7/10","kind":"dedicated_overflow","payload":{"machine":"m1","load":9}}"#,
    )
    .unwrap();
    assert_eq!(code(&gbal(&["verify", p(&inst), p(&decl)])), 0);
    fs::write(
        &decl,
        r#"{"t":9,"mode":"general","beta":"7/10","kind":"dedicated_overflow","payload":{"machine":"m1","load":9}}"#,
    )
    .unwrap();
    assert_eq!(code(&gbal(&["verify", p(&inst), p(&decl)])), 1);
}

#[test]
fn bench_is_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    for seed in 0..6 {
        let f = corpus.join(format!("g{seed}.json"));
        let out = gbal_line(
            "generate general --m 4 --n 9 --beta 2/3 --w-max 20 --seed",
            &[&seed.to_string(), "--out", p(&f)],
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let strip = |out: &Output| -> Vec<String> {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let one = gbal(&["bench", "--dir", p(&corpus), "--jobs", "1", "--beta", "2/3"]);
    let eight = gbal(&["bench", "--dir", p(&corpus), "--jobs", "8", "--beta", "2/3"]);
    assert_eq!(code(&one), 0, "{}", String::from_utf8_lossy(&one.stderr));
    let rows = strip(&one);
    assert_eq!(rows[0], "instance,makespan,t_star,lower_bound,ratio,cores,pushes");
    assert_eq!(rows.len(), 7);
    assert_eq!(rows, strip(&eight));
}
