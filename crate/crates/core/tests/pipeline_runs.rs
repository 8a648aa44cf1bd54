use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use dtsurv::cohort::{generate_synthetic, write_cohort, write_schema, SyntheticSpec};
use dtsurv::config::RunConfig;
use dtsurv::pipeline::{experiment_dir, run_experiment, run_matrix};

fn config(root: &Path, out: &str) -> RunConfig {
    let cohort = root.join("cohort.csv");
    if !cohort.exists() {
        let synth = generate_synthetic(&SyntheticSpec::informative(), 77).unwrap();
        write_cohort(&synth.cohort, &cohort).unwrap();
        write_schema(&synth.cohort.schema, root.join("cohort.schema")).unwrap();
    }
    RunConfig {
        cohort: Some(cohort),
        schema: Some(root.join("cohort.schema")),
        out_dir: root.join(out),
        seed: Some(5),
        experiments: "1-3".into(),
        max_epochs: 12,
        patience: 3,
        n_trees: 20,
        ..RunConfig::default()
    }
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn matrix_outputs_are_consistent_and_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let cfg = config(root.path(), "a");
    let summary = run_matrix(&cfg).unwrap();
    assert_eq!(summary.rows.len(), 3);
    assert!(summary.rows.iter().all(|r| r.result.is_some()));

    let out = &cfg.out_dir;
    let manifest = |id| lines(&experiment_dir(out, id).join("manifest.txt"));
    let (m1, m2, m3) = (manifest(1), manifest(2), manifest(3));
    assert_eq!(m1.len(), 32);
    assert!(m1.iter().all(|c| c.starts_with("feat_")));
    assert!(m2.iter().all(|c| c.starts_with("clin_")));
    let union: BTreeSet<&String> = m1.iter().chain(&m2).collect();
    assert_eq!(m3.iter().collect::<BTreeSet<_>>(), union);
    assert_eq!(m3.len(), m1.len() + m2.len());

    let train: BTreeSet<String> = lines(&out.join("split_train.txt")).into_iter().collect();
    let test: BTreeSet<String> = lines(&out.join("split_test.txt")).into_iter().collect();
    let inputs: BTreeSet<String> = lines(&out.join("selection_inputs.txt")).into_iter().collect();
    assert_eq!(inputs, train);
    assert!(inputs.is_disjoint(&test));

    // A second run into a fresh directory reproduces every artifact.
    let again = config(root.path(), "b");
    run_matrix(&again).unwrap();
    let read = |dir: &Path, name: &str| fs::read(dir.join(name)).unwrap();
    assert_eq!(read(out, "summary.csv"), read(&again.out_dir, "summary.csv"));
    for id in 1..=3 {
        let (a, b) = (experiment_dir(out, id), experiment_dir(&again.out_dir, id));
        for name in ["report.csv", "report.txt", "violin.svg", "curves.csv", "model.ckpt", "history.csv"] {
            assert_eq!(read(&a, name), read(&b, name), "exp{id}/{name}");
        }
    }

    let sequential = RunConfig {
        parallel: false,
        ..config(root.path(), "c")
    };
    run_matrix(&sequential).unwrap();
    assert_eq!(read(out, "summary.csv"), read(&sequential.out_dir, "summary.csv"));
}

#[test]
fn single_experiments_share_the_split() {
    let root = tempfile::tempdir().unwrap();
    let one = config(root.path(), "one");
    let two = config(root.path(), "two");
    let a = run_experiment(&one, 1).unwrap();
    let b = run_experiment(&two, 2).unwrap();
    for name in ["split_train.txt", "split_val.txt", "split_test.txt", "preprocess.json"] {
        assert_eq!(fs::read(a.dir.join(name)).unwrap(), fs::read(b.dir.join(name)).unwrap(), "{name}");
    }
    assert_eq!(a.evaluation.test_ids, b.evaluation.test_ids);
}
