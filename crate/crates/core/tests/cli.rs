use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = "
[experiment]
name = minimal
seeds = 7
[problem]
kind = quadratic
dim = 32
examples = 64
tau = 0.2
[defaults]
steps = 10
batch_size = 8
epsilon = 2
delta = 1e-5
clip = 1
lr = 0.1
[arm dpsgd]
method = dpsgd
";

fn fftkf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fftkf"))
        .args(args)
        .env_remove(fftkf::problems::DATA_DIR_ENV)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.ini");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn train(config: &str, out: &Path) -> Output {
    fftkf(&["train", config, "--output-dir", out.to_str().unwrap()])
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn minimal_train_writes_cell_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("out");
    let run = train(&config, &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    assert_eq!(sorted_files(&out), ["dpsgd_seed7.csv", "summary.csv"]);
    let cell = fs::read_to_string(out.join("dpsgd_seed7.csv")).unwrap();
    let mut lines = cell.lines();
    assert_eq!(lines.next(), Some(fftkf::harness::CELL_HEADER));
    assert_eq!(lines.count(), 10);
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL
        .replace("seeds = 7", "seeds = 1, 2")
        .replace("[arm dpsgd]", "[arm kf]\nmethod = fftkf\n[arm dpsgd]");
    let config = write_config(tmp.path(), &text);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(train(&config, &a).status.success());
    assert!(fftkf(&[
        "train",
        &config,
        "--output-dir",
        b.to_str().unwrap(),
        "--parallelism",
        "1"
    ])
    .status
    .success());
    let files = sorted_files(&a);
    assert_eq!(files.len(), 5);
    assert_eq!(files, sorted_files(&b));
    for f in &files {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn seed_override_replaces_seed_list() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("out");
    let run = fftkf(&[
        "train",
        &config,
        "--output-dir",
        out.to_str().unwrap(),
        "--seed-override",
        "3,4",
    ]);
    assert!(run.status.success());
    assert_eq!(
        sorted_files(&out),
        ["dpsgd_seed3.csv", "dpsgd_seed4.csv", "summary.csv"]
    );
}

#[test]
fn duplicate_seeds_are_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &MINIMAL.replace("seeds = 7", "seeds = 7, 8, 7"));
    let run = train(&config, &tmp.path().join("out"));
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("duplicate seed 7"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn malformed_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &MINIMAL.replace("clip = 1", "clip = -1"));
    let run = train(&config, &tmp.path().join("out"));
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("clip"));
}

#[test]
fn missing_config_is_a_validation_error() {
    let run = fftkf(&["train", "/nonexistent/run.ini"]);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn unreachable_epsilon_exits_with_infeasible_code() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &MINIMAL.replace("epsilon = 2", "epsilon = 1e-9"));
    let out = tmp.path().join("out");
    let run = train(&config, &out);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(!out.exists());
}

#[test]
fn mnist_without_dataset_root_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[experiment]\nseeds = 0\n[problem]\nkind = logistic\nmodel = multinomial\nsource = mnist\n[defaults]\nsteps = 1\nbatch_size = 8\nnoise_multiplier = 1\n[arm a]\nmethod = dpsgd\n";
    let config = write_config(tmp.path(), text);
    let run = train(&config, &tmp.path().join("out"));
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains(fftkf::problems::DATA_DIR_ENV));
}

#[test]
fn verify_passes_and_reports_reference_rho_star() {
    let run = fftkf(&["verify", "--samples", "20000"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let table = String::from_utf8_lossy(&run.stdout);
    assert!(table.contains("0.625"));
    assert!(table.contains("0 failed"));
}

#[test]
fn injected_mask_fault_fails_verification() {
    let run = fftkf(&["verify", "--samples", "20000", "--inject-fault", "mask-asymmetry"]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("FAILED") && err.contains("expected"), "{err}");
}

#[test]
fn bench_rejects_non_power_of_two() {
    let run = fftkf(&["bench", "--dims", "1000"]);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn bench_writes_timing_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let run = fftkf(&[
        "bench",
        "--dims",
        "256,512",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(tmp.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(String::from_utf8_lossy(&run.stdout).contains("fitted exponent"));
}

#[test]
fn sweep_without_grid_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), MINIMAL);
    let run = fftkf(&[
        "sweep",
        &config,
        "--output-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(1));
}
