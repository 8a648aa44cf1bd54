use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dtsurv::select::{
    average_ranks, fit_forest, select_variables, spearman, ForestParams, Node, RegressionTree, SelectionMode,
    VariableScore,
};
use dtsurv::cohort::{apply_preprocess, fit_preprocess, generate_synthetic, SyntheticSpec};
use dtsurv::select::score_spearman;
use dtsurv::Exec;

/// Quadratic-time average ranks: 1 + #smaller + (#equal - 1) / 2.
fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn spearman_matches_naive_rank_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..1000 {
        let n = rng.random_range(3..40);
        // Small integer ranges force plenty of ties.
        let levels = if trial % 2 == 0 { 5 } else { 1000 };
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect();
        let rx = naive_ranks(&x);
        assert_eq!(average_ranks(&x), rx);
        let got = spearman(&x, &y).unwrap();
        let ry = naive_ranks(&y);
        let constant = |r: &[f64]| r.iter().all(|&v| v == r[0]);
        if constant(&rx) || constant(&ry) {
            assert!(got.degenerate);
            assert_eq!(got.rho, 0.0);
        } else {
            let oracle = naive_pearson(&rx, &ry);
            assert!((got.rho - oracle).abs() < 1e-12, "trial {trial}: {} vs {oracle}", got.rho);
        }
    }
}

proptest! {
    #[test]
    fn spearman_ignores_monotone_transforms(
        pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..50)
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = spearman(&x, &y).unwrap().rho;
        let grown: Vec<f64> = x.iter().map(|v| v.exp() + v.powi(3)).collect();
        prop_assert_eq!(spearman(&grown, &y).unwrap().rho, base);
        let flipped: Vec<f64> = x.iter().map(|v| -2.0 * v).collect();
        prop_assert!((spearman(&flipped, &y).unwrap().rho + base).abs() < 1e-12);
    }

    #[test]
    fn higher_thresholds_select_subsets(
        raw in prop::collection::vec((-1.0f64..1.0, 0.0f64..1.0), 1..12),
        lo in 0.0f64..1.0,
        gap in 0.0f64..0.5,
    ) {
        let scores: Vec<VariableScore> = raw
            .iter()
            .enumerate()
            .map(|(k, &(s, i))| VariableScore { variable: format!("v{k}"), s_score: s, i_score: i, s_degenerate: false })
            .collect();
        for mode in [SelectionMode::Spearman, SelectionMode::Importance] {
            let wide = select_variables(&scores, mode, lo);
            let narrow = select_variables(&scores, mode, lo + gap);
            prop_assert!(narrow.iter().all(|v| wide.contains(v)));
        }
    }
}

fn no_bootstrap() -> ForestParams {
    ForestParams {
        n_trees: 1,
        bootstrap: false,
        ..ForestParams::default()
    }
}

#[test]
fn hand_traced_tree() {
    let x = array![[1.0, 1.0], [2.0, 0.0], [3.0, 1.0], [4.0, 0.0], [5.0, 1.0], [6.0, 0.0]];
    let y = [1.0, 1.0, 1.0, 5.0, 9.0, 5.0];
    let tree = RegressionTree::fit(x.view(), &y, &[0, 1, 2, 3, 4, 5], &no_bootstrap());
    // Root: x1 <= 3.5 separates {1,1,1} from {5,9,5}; total SSE 48 -> 16/3.
    match &tree.nodes[0] {
        Node::Split { var, threshold, sse_reduction, .. } => {
            assert_eq!((*var, *threshold), (0, 3.5));
            assert!((sse_reduction - 128.0 / 3.0).abs() < 1e-12);
        }
        other => panic!("root is {other:?}"),
    }
    assert_eq!(tree.predict_row(&[2.0, 1.0]), 1.0);
    assert_eq!(tree.predict_row(&[5.0, 1.0]), 9.0);
    assert_eq!(tree.predict_row(&[6.0, 0.0]), 5.0);
    let imp = fit_forest(x.view(), &y, &no_bootstrap(), 0, Exec::Sequential).unwrap().importance();
    // (128/3) : (32/3) = 0.8 : 0.2
    assert!((imp[0] - 0.8).abs() < 1e-12 && (imp[1] - 0.2).abs() < 1e-12, "{imp:?}");
}

fn random_problem(seed: u64, n: usize, p: usize) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0f64..1.0));
    let y = (0..n).map(|i| 3.0 * x[[i, 0]] + x[[i, 1]].powi(2) + rng.random_range(0.0..0.5)).collect();
    (x, y)
}

#[test]
fn importance_follows_column_permutation() {
    let (x, y) = random_problem(7, 80, 4);
    let params = ForestParams { n_trees: 20, ..ForestParams::default() };
    let perm = [2usize, 0, 3, 1];
    let xp = Array2::from_shape_fn((80, 4), |(i, j)| x[[i, perm[j]]]);
    let a = fit_forest(x.view(), &y, &params, 5, Exec::Sequential).unwrap();
    let b = fit_forest(xp.view(), &y, &params, 5, Exec::Sequential).unwrap();
    let (ia, ib) = (a.importance(), b.importance());
    for j in 0..4 {
        assert!((ib[j] - ia[perm[j]]).abs() < 1e-12);
    }
    for i in 0..80 {
        let row: Vec<f64> = x.row(i).to_vec();
        let rowp: Vec<f64> = xp.row(i).to_vec();
        assert_eq!(a.predict_row(&row), b.predict_row(&rowp));
    }
}

#[test]
fn scaling_targets_keeps_structure() {
    let (x, y) = random_problem(8, 60, 3);
    let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let params = ForestParams { n_trees: 10, ..ForestParams::default() };
    let a = fit_forest(x.view(), &y, &params, 9, Exec::Sequential).unwrap();
    let b = fit_forest(x.view(), &y2, &params, 9, Exec::Sequential).unwrap();
    for (ta, tb) in a.trees.iter().zip(&b.trees) {
        assert_eq!(ta.nodes.len(), tb.nodes.len());
        for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
            match (na, nb) {
                (Node::Split { var: va, threshold: sa, .. }, Node::Split { var: vb, threshold: sb, .. }) => {
                    assert_eq!((va, sa), (vb, sb));
                }
                (Node::Leaf { value: la, .. }, Node::Leaf { value: lb, .. }) => {
                    assert!((2.0 * la - lb).abs() < 1e-12 * lb.abs().max(1.0));
                }
                _ => panic!("tree shapes diverged"),
            }
        }
    }
    for (p, q) in a.importance().iter().zip(b.importance()) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn execution_strategy_does_not_change_forest() {
    let (x, y) = random_problem(10, 100, 5);
    let params = ForestParams { n_trees: 16, ..ForestParams::default() };
    let a = fit_forest(x.view(), &y, &params, 1, Exec::Sequential).unwrap();
    let b = fit_forest(x.view(), &y, &params, 1, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn spearman_null_and_single_signal_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let null_small = (0..100)
        .filter(|_| {
            let t: Vec<f64> = (0..250).map(|_| rng.random_range(0.0..3000.0)).collect();
            let x: Vec<f64> = (0..250).map(|_| rng.random_range(-1.0..1.0)).collect();
            spearman(&x, &t).unwrap().rho.abs() < 0.2
        })
        .count();
    assert!(null_small >= 95, "{null_small}/100");

    let mut spec = SyntheticSpec::informative().null();
    spec.event_rate = 0.5;
    let target = spec.clinical.iter().position(|v| v.name == "age").unwrap();
    spec.clinical[target].weight = 1.0;
    let hits = (0..100)
        .filter(|&seed| {
            let raw = generate_synthetic(&spec, seed).unwrap().cohort;
            let c = apply_preprocess(&raw, &fit_preprocess(&raw).unwrap()).unwrap();
            let s = score_spearman(&c).unwrap();
            (0..s.len()).max_by(|&a, &b| s[a].rho.abs().total_cmp(&s[b].rho.abs())) == Some(target)
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}
