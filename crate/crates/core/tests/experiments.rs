mod common;

use std::fs;

use fftkf::harness::{self, ExperimentConfig, RunOptions, GRID_HEADER};
use fftkf::problems::load_mnist_dir;

const SYNTHETIC_SWEEP: &str = "
[experiment]
name = tiny
seeds = 0, 1
[problem]
kind = logistic
model = multinomial
source = synthetic
examples = 300
features = 16
classes = 3
test_examples = 100
[defaults]
steps = 20
batch_size = 30
delta = 1e-5
clip = 1
lr = 0.2
gamma = 5
[arm kf]
method = fftkf
epsilon = 4
[sweep]
arm = kf
rho = 0.2, 0.6
epsilon = 1, 2, 8
";

fn options(dir: &std::path::Path) -> RunOptions {
    RunOptions {
        output_dir: Some(dir.to_path_buf()),
        ..RunOptions::default()
    }
}

#[test]
fn grid_has_one_row_per_rho_epsilon_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SYNTHETIC_SWEEP).unwrap();
    let report = harness::sweep(&cfg, &options(tmp.path())).unwrap();
    assert_eq!(report.grid.len(), 6);

    let csv = fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(GRID_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[4].starts_with("0.6,2,rho0.6_eps2,2,"), "{}", rows[4]);
    for (rho, eps, s) in &report.grid {
        assert!(
            s.epsilon <= *eps * (1.0 + 1e-9),
            "rho {rho}: spent {} of {eps}",
            s.epsilon
        );
        assert!(s.epsilon >= 0.99 * eps);
    }
}

#[test]
fn single_cell_grid_matches_train() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SYNTHETIC_SWEEP
        .replace("rho = 0.2, 0.6", "rho = 0.3")
        .replace("epsilon = 1, 2, 8", "epsilon = 2");
    let sweep = harness::sweep(
        &ExperimentConfig::parse(&text).unwrap(),
        &options(&tmp.path().join("s")),
    )
    .unwrap();

    let single = SYNTHETIC_SWEEP
        .replace("epsilon = 4", "epsilon = 2\nrho = 0.3")
        .split("[sweep]")
        .next()
        .unwrap()
        .to_owned();
    let train = harness::train(
        &ExperimentConfig::parse(&single).unwrap(),
        &options(&tmp.path().join("t")),
    )
    .unwrap();
    for seed in [0, 1] {
        let a = fs::read_to_string(tmp.path().join(format!("s/rho0.3_eps2_seed{seed}.csv"))).unwrap();
        let b = fs::read_to_string(tmp.path().join(format!("t/kf_seed{seed}.csv"))).unwrap();
        assert_eq!(a.replace("rho0.3_eps2,", "kf,"), b);
    }
    assert_eq!(sweep.grid[0].2.test_acc, train.summary("kf").unwrap().test_acc);
}

#[test]
fn official_mnist_files_parse() {
    let Some(dir) = common::mnist_dir() else {
        eprintln!("skipped: MNIST files not found");
        return;
    };
    let (train, test) = load_mnist_dir(&dir, None).unwrap();
    assert_eq!((train.len(), test.len()), (60_000, 10_000));
    assert_eq!((train.num_features, train.classes), (784, 10));
    assert_eq!(train.example(0).1, 5);
    assert_eq!(test.example(0).1, 7);
    assert!(train.features.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn rho_0_6_ranks_in_top_two_at_epsilon_4() {
    let Some(dir) = common::mnist_dir() else {
        eprintln!("skipped: MNIST files not found");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_file(&common::config_path("sweep.ini")).unwrap();
    cfg.sweep.as_mut().unwrap().epsilon = vec![4.0];
    let opts = RunOptions {
        data_dir: Some(dir),
        ..options(tmp.path())
    };
    let report = harness::sweep(&cfg, &opts).unwrap();
    let acc = |rho: f64| report.grid.iter().find(|g| g.0 == rho).unwrap().2.test_acc.0;
    let target = acc(0.6);
    let rank = 1 + report.grid.iter().filter(|g| g.2.test_acc.0 > target).count();
    let table: Vec<String> = report
        .grid
        .iter()
        .map(|g| format!("{}: {:.4}", g.0, g.2.test_acc.0))
        .collect();
    assert!(rank <= 2, "rank {rank}: {}", table.join(", "));
}
