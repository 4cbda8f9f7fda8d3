//! End-to-end tests of the `jamlab` binary: every subcommand is spawned
//! as a real process against small datasets in temp directories.

use std::path::Path;
use std::process::{Command, Output};

use jamlab::dataset::load_dataset;
use jamlab::model::ModelConfig;

fn jamlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_jamlab"));
    c.env_remove("JAMLAB_JOBS");
    c
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn jamlab");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout_of(&out),
        stderr_of(&out)
    );
    out
}

fn run_err(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn jamlab");
    assert!(
        !out.status.success(),
        "expected failure, got success\nstdout:\n{}",
        stdout_of(&out)
    );
    out
}

/// Generates a dataset at `dir` with one JSR level per entry of `jsr`.
fn gen(dir: &Path, classes: &str, jsr: &str, per: u32, test: u32) {
    run_ok(jamlab().args([
        "generate",
        "--classes",
        classes,
        "--jsr-min",
        jsr,
        "--jsr-max",
        jsr,
        "--per-class",
        &per.to_string(),
        "--test-per-class",
        &test.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]));
}

#[test]
fn help_exists_for_every_subcommand() {
    run_ok(jamlab().arg("--help"));
    for sub in ["generate", "train", "eval", "report-gates", "check"] {
        run_ok(jamlab().args([sub, "--help"]));
    }
    run_ok(jamlab().args(["check", "ambiguity", "--help"]));
    run_ok(jamlab().args(["check", "reliability", "--help"]));
}

#[test]
fn generate_refuses_overwrite_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    gen(&ds, "CWI", "50", 1, 0);

    let out = run_err(jamlab().args([
        "generate", "--classes", "CWI", "--jsr-min", "50", "--jsr-max", "50", "--per-class", "1",
        "--out", ds.to_str().unwrap(),
    ]));
    assert!(stderr_of(&out).contains("--force"), "stderr: {}", stderr_of(&out));

    run_ok(jamlab().args([
        "generate", "--classes", "CWI", "--jsr-min", "50", "--jsr-max", "50", "--per-class", "1",
        "--out", ds.to_str().unwrap(), "--force",
    ]));
}

#[test]
fn default_grid_with_one_per_stratum_yields_441_records() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    let out = run_ok(jamlab().args([
        "generate", "--per-class", "1", "--out", ds.to_str().unwrap(),
    ]));
    let text = stdout_of(&out);
    assert!(text.contains("441 records"), "stdout: {text}");
    assert!(text.contains("BPSK"), "per-class stratum counts missing: {text}");

    let loaded = load_dataset(&ds).unwrap();
    assert_eq!(loaded.records.len(), 441);
    assert_eq!(loaded.manifest.strata.len(), 441);
    assert_eq!(loaded.manifest.classes.len(), 21);
}

#[test]
fn epoch_zero_checkpoint_loads_and_gates_sit_at_half() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    gen(&ds, "CWI,QPSK", "40", 4, 2);
    let ckpt = tmp.path().join("init.ckpt");

    run_ok(jamlab().args([
        "train", "--data", ds.to_str().unwrap(), "--out", ckpt.to_str().unwrap(),
        "--epochs", "0", "--quiet",
    ]));
    assert!(ckpt.exists());

    // Untrained gate and auxiliary heads are zeroed, so both gates are
    // exactly 1/2 for every record.
    let out = run_ok(jamlab().args([
        "report-gates", "--ckpt", ckpt.to_str().unwrap(), "--data", ds.to_str().unwrap(),
    ]));
    let csv = stdout_of(&out);
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[3], "0.500000", "gate mean drifted: {line}");
        assert_eq!(fields[4], "0.000000", "gate std drifted: {line}");
        rows += 1;
    }
    assert_eq!(rows, 2, "one g row and one s row for the single JSR level");

    // The checkpoint also round-trips through eval.
    run_ok(jamlab().args([
        "eval", "--ckpt", ckpt.to_str().unwrap(), "--data", ds.to_str().unwrap(),
    ]));
}

#[test]
fn same_seed_trains_byte_identical_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    gen(&ds, "CWI,QPSK", "40", 4, 0);

    for name in ["a.ckpt", "b.ckpt"] {
        run_ok(jamlab().args([
            "train", "--data", ds.to_str().unwrap(),
            "--out", tmp.path().join(name).to_str().unwrap(),
            "--epochs", "1", "--batch-size", "8", "--seed", "7",
            "--val-fraction", "0.25", "--quiet",
        ]));
    }
    let a = std::fs::read(tmp.path().join("a.ckpt")).unwrap();
    let b = std::fs::read(tmp.path().join("b.ckpt")).unwrap();
    assert_eq!(a, b, "same data and seed must reproduce the checkpoint exactly");
}

#[test]
fn overfit_model_is_perfect_on_its_training_split() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    gen(&ds, "CWI,BLGNI", "50", 8, 2);
    let ckpt = tmp.path().join("fit.ckpt");

    run_ok(jamlab().args([
        "train", "--data", ds.to_str().unwrap(), "--out", ckpt.to_str().unwrap(),
        "--epochs", "25", "--batch-size", "8", "--val-fraction", "0", "--quiet",
    ]));

    let out = run_ok(jamlab().args([
        "eval", "--ckpt", ckpt.to_str().unwrap(), "--data", ds.to_str().unwrap(),
        "--split", "train",
    ]));
    let text = stdout_of(&out);
    assert!(
        text.contains("accuracy 1.0000"),
        "two easy classes memorized over 25 epochs should score 1.0 on their own training rows:\n{text}"
    );
}

#[test]
fn worker_count_never_changes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    let two = tmp.path().join("two");
    for (dir, jobs) in [(&one, "1"), (&two, "2")] {
        run_ok(jamlab().args([
            "--jobs", jobs, "generate", "--classes", "CWI,FH", "--jsr-min", "30",
            "--jsr-max", "50", "--jsr-step", "20", "--per-class", "3",
            "--out", dir.to_str().unwrap(),
        ]));
    }
    let mut names: Vec<String> = std::fs::read_dir(&one)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.len() > 1);
    for name in &names {
        let a = std::fs::read(one.join(name)).unwrap();
        let b = std::fs::read(two.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between --jobs 1 and --jobs 2");
    }

    // The env fallback goes through the same pool setup.
    let ckpt = tmp.path().join("init.ckpt");
    run_ok(jamlab().args([
        "train", "--data", one.to_str().unwrap(), "--out", ckpt.to_str().unwrap(),
        "--epochs", "0", "--quiet",
    ]));
    let flag = run_ok(jamlab().args([
        "--jobs", "1", "report-gates", "--ckpt", ckpt.to_str().unwrap(),
        "--data", one.to_str().unwrap(), "--split", "train",
    ]));
    let env = run_ok(
        jamlab()
            .env("JAMLAB_JOBS", "2")
            .args([
                "report-gates", "--ckpt", ckpt.to_str().unwrap(),
                "--data", one.to_str().unwrap(), "--split", "train",
            ]),
    );
    assert_eq!(stdout_of(&flag), stdout_of(&env));
}

#[test]
fn reliability_emits_one_row_per_jsr() {
    let tmp = tempfile::tempdir().unwrap();
    let csv_path = tmp.path().join("r.csv");
    run_ok(jamlab().args([
        "check", "reliability", "--jsr", "10,30", "--n", "50",
        "--out", csv_path.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(data.len(), 2);
    assert!(data[0].starts_with("10,"));
    assert!(data[1].starts_with("30,"));
}

#[test]
fn train_rejects_model_class_count_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    gen(&ds, "CWI,QPSK", "40", 2, 0);

    let mut cfg = jamlab::cli::RunConfig::default();
    cfg.model = Some(ModelConfig { n_classes: 5, ..ModelConfig::default() });
    let cfg_path = tmp.path().join("run.toml");
    std::fs::write(&cfg_path, toml::to_string(&cfg).unwrap()).unwrap();

    let out = run_err(jamlab().args([
        "train", "--config", cfg_path.to_str().unwrap(), "--data", ds.to_str().unwrap(),
        "--out", tmp.path().join("m.ckpt").to_str().unwrap(), "--quiet",
    ]));
    let err = stderr_of(&out);
    assert!(err.contains('5') && err.contains('2'), "stderr: {err}");
}

#[test]
fn eval_rejects_checkpoint_trained_for_other_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let two = tmp.path().join("two");
    let three = tmp.path().join("three");
    gen(&two, "CWI,QPSK", "40", 2, 1);
    gen(&three, "CWI,QPSK,FH", "40", 2, 1);
    let ckpt = tmp.path().join("two.ckpt");
    run_ok(jamlab().args([
        "train", "--data", two.to_str().unwrap(), "--out", ckpt.to_str().unwrap(),
        "--epochs", "0", "--quiet",
    ]));

    let out = run_err(jamlab().args([
        "eval", "--ckpt", ckpt.to_str().unwrap(), "--data", three.to_str().unwrap(),
    ]));
    assert!(stderr_of(&out).contains("classes"), "stderr: {}", stderr_of(&out));
}

#[test]
fn unknown_config_key_is_rejected_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.toml");
    std::fs::write(&cfg_path, "[train]\nlerning_rate = 0.1\n").unwrap();
    let out = run_err(jamlab().args([
        "train", "--config", cfg_path.to_str().unwrap(), "--quiet",
    ]));
    assert!(stderr_of(&out).contains("lerning_rate"), "stderr: {}", stderr_of(&out));
}
