use std::path::Path;
use std::process::{Command, Output};

fn dopamine(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dopamine")).args(args).current_dir(cwd).output().expect("spawn dopamine")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "status {:?}\nstdout:\n{}\nstderr:\n{}", o.status, stdout(o), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_data_writes_a_normalized_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = dopamine(&["gen-data", "--system", "rossler", "--length", "300", "--normalize", "--out", "r.csv"], dir.path());
    assert_ok(&o);
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,y,z"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 300);
    for j in 1..4 {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
    }
}

#[test]
fn train_landscape_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ["xor-dopamine2", "xor-wp"] {
        let o = dopamine(
            &["train", "--preset", preset, "--seeds", "2", "--out", "runs", "--set", "training.epochs=200"],
            dir.path(),
        );
        assert_ok(&o);
        assert!(stdout(&o).contains("seed   1"), "{}", stdout(&o));
    }
    let run = dir.path().join("runs/xor-dopamine2/seed-0");
    for f in ["config.toml", "record.json", "loss_curve.csv", "params.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }

    let o = dopamine(&["landscape", "--model", "runs/xor-dopamine2/seed-0", "--steps", "11"], dir.path());
    assert_ok(&o);
    let grid = std::fs::read_to_string(run.join("landscape.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 11 * 11);

    let o = dopamine(&["compare", "runs", "--ci", "t", "--out", "cmp.csv"], dir.path());
    assert_ok(&o);
    let table = std::fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(table.contains("dopamine2") && table.contains("wp"));
}

#[test]
fn divergence_is_not_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = dopamine(
        &[
            "train", "--preset", "rossler-wp-scaled", "--seeds", "1", "--out", "runs",
            "--set", "task.length=200", "--set", "model.hidden=8", "--set", "training.epochs=5",
            "--set", "training.batch_size=16", "--set", "optimizer.eta=1e6",
        ],
        dir.path(),
    );
    assert_ok(&o);
    assert!(stdout(&o).contains("diverged"), "{}", stdout(&o));
}

#[test]
fn config_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["train", "--preset", "no-such-preset"][..],
        &["train", "--preset", "xor-wp", "--set", "optimizer.eta"],
        &["train", "--preset", "xor-wp", "--set", "optimizer.eta=-1"],
        &["timing", "--optimizers", "nope"],
        &["compare", "missing-dir"],
        &["frobnicate"],
    ] {
        let o = dopamine(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn timing_records_every_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = dopamine(
        &["timing", "--optimizers", "dopamine2,adam", "--seq-lens", "8..32", "--hidden", "8", "--samples", "2", "--trials", "2", "--warmup", "0", "--out", "t.csv"],
        dir.path(),
    );
    assert_ok(&o);
    let table = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 3, "{table}");
}

#[test]
fn presets_lists_all_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let o = dopamine(&["presets"], dir.path());
    assert_ok(&o);
    assert_eq!(stdout(&o).lines().count(), 32);
}
