//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so the lines are always printed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dtsurv::cohort::{
    apply_preprocess, fit_preprocess, generate_synthetic, load_cohort, read_schema, write_cohort, Patient,
    SyntheticSpec,
};
use dtsurv::curves::SurvivalCurve;
use dtsurv::metrics::{concordance_td, cumulative_dynamic_auc};
use dtsurv::select::{average_ranks, fit_forest, score_importance, spearman, ForestParams, RegressionTree};
use dtsurv::survnet::{loss, loss_grad_logits, NetworkConfig, SurvivalNetwork};
use dtsurv::timegrid::{make_target, SurvivalTarget, TimeGrid};
use dtsurv::Exec;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

/// Seeds for the end-to-end criteria. Disjoint from the seeds used while
/// choosing the generator's signal strength.
const E2E_SEEDS: [u64; 5] = [101, 102, 103, 104, 105];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

// 1 ---------------------------------------------------------------------

fn target_oracle() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(3000.0, 15).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for t in 0..=3000u32 {
        for event in [false, true] {
            let got = make_target(&grid, t as f64, event).map_err(|e| e.to_string())?;
            let (mut s, mut f) = (vec![0u8; 15], vec![0u8; 15]);
            for i in 1..=15u32 {
                let (lo, hi) = (200 * (i - 1), 200 * i);
                if event {
                    // survived interval i when t >= t_i; died in it when t_{i-1} <= t < t_i,
                    // with a death at the final boundary assigned to the last interval
                    s[i as usize - 1] = u8::from(t >= hi && !(t == 3000 && i == 15));
                    f[i as usize - 1] = u8::from((lo <= t && t < hi) || (t == 3000 && i == 15));
                } else {
                    s[i as usize - 1] = u8::from(2 * t >= lo + hi);
                }
            }
            if got.surv_s != s || got.surv_f != f {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("{mismatches} mismatches over 6002 targets in {elapsed:.2?}"),
    )
}

// 2 ---------------------------------------------------------------------

fn loss_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = TimeGrid::new(3000.0, 15).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rows = rng.random_range(1..=16);
        let targets: Vec<SurvivalTarget> = (0..rows)
            .map(|_| make_target(&grid, rng.random_range(0.0..=3000.0), rng.random_bool(0.3)).unwrap())
            .collect();
        let pred = Array2::from_shape_fn((rows, 15), |_| rng.random_range(0.001..0.999));
        let mut scalar = 0.0;
        for (r, t) in targets.iter().enumerate() {
            for k in 0..15 {
                let (p, s, f) = (pred[[r, k]], t.surv_s[k] as f64, t.surv_f[k] as f64);
                scalar -= (1.0 + s * (p - 1.0)).ln() + (1.0 - f * p).ln();
            }
        }
        let got = loss(pred.view(), &targets).map_err(|e| e.to_string())?;
        worst = worst.max((got - scalar).abs());
    }
    let dead = make_target(&grid, 450.0, true).unwrap();
    let perfect = Array2::from_shape_fn((1, 15), |(_, k)| if dead.surv_s[k] == 1 { 1.0 } else { 0.0 });
    let perfect_loss = loss(perfect.view(), &[dead]).unwrap();
    let first = make_target(&grid, 50.0, true).unwrap();
    let half = loss(Array2::from_elem((1, 15), 0.5).view(), &[first]).unwrap();
    let ln2_err = (half - std::f64::consts::LN_2).abs();
    check(
        worst < 1e-10 && perfect_loss.abs() < 1e-12 && ln2_err < 1e-12,
        format!("max batch deviation {worst:.1e}; perfect {perfect_loss:.1e}; ln 2 error {ln2_err:.1e}"),
    )
}

// 3 ---------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(10.0, 2).map_err(|e| e.to_string())?;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut n_params = 0;
    for seed in 0..5u64 {
        let config = NetworkConfig {
            hidden: vec![4, 3],
            ..NetworkConfig::standard(6, 2)
        };
        let mut net = SurvivalNetwork::init(config, seed).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        for slice in net.param_slices_mut() {
            slice.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
        }
        let x = Array2::from_shape_fn((4, 6), |_| rng.random_range(-2.0..2.0));
        let targets: Vec<SurvivalTarget> = (0..4)
            .map(|_| make_target(&grid, rng.random_range(0.0..=10.0), rng.random_bool(0.5)).unwrap())
            .collect();
        let masks = net.sample_masks(4, &mut dtsurv::rng::seeded(seed, 7));
        let objective = |net: &mut SurvivalNetwork| {
            let cache = net.forward_train_with_masks(x.view(), masks.clone(), false).unwrap();
            loss(cache.pred.view(), &targets).unwrap()
        };
        let cache = net.forward_train_with_masks(x.view(), masks.clone(), false).unwrap();
        let d = loss_grad_logits(cache.pred.view(), &targets).unwrap();
        let grads: Vec<Vec<f64>> = net.backward(&cache, d.view()).unwrap().slices().iter().map(|s| s.to_vec()).collect();
        for (g, group) in grads.iter().enumerate() {
            for (k, &analytic) in group.iter().enumerate() {
                let orig = net.param_slices_mut()[g][k];
                net.param_slices_mut()[g][k] = orig + h;
                let up = objective(&mut net);
                net.param_slices_mut()[g][k] = orig - h;
                let down = objective(&mut net);
                net.param_slices_mut()[g][k] = orig;
                let fd = (up - down) / (2.0 * h);
                worst = worst.max((analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6));
                n_params += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-4 && elapsed < Duration::from_secs(10),
        format!("worst relative error {worst:.1e} over {n_params} parameters in {elapsed:.2?}"),
    )
}

// 4 ---------------------------------------------------------------------

fn ctd_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut done = 0;
    let mut mismatches = 0;
    while done < 1000 {
        let n = rng.random_range(2..=50);
        let times: Vec<f64> = (0..n).map(|_| rng.random_range(1..60) as f64).collect();
        let events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let rate: Vec<f64> = (0..n).map(|_| rng.random_range(1..6) as f64 * 0.01).collect();
        let bend: Vec<f64> = (0..n).map(|_| rng.random_range(0..3) as f64 * 1e-3).collect();
        let surv = |k: usize, t: f64| (-(rate[k] * t + bend[k] * t * t)).exp();
        let (mut halves, mut pairs) = (0u64, 0u64);
        for i in 0..n {
            for j in 0..n {
                if events[i] && times[i] < times[j] {
                    pairs += 1;
                    let (a, b) = (surv(i, times[i]), surv(j, times[i]));
                    halves += if a < b { 2 } else if a == b { 1 } else { 0 };
                }
            }
        }
        if pairs == 0 {
            continue;
        }
        let got = concordance_td(&times, &events, surv, Exec::Parallel).map_err(|e| e.to_string())?;
        if got.n_comparable != pairs || got.c_td != halves as f64 / (2 * pairs) as f64 {
            mismatches += 1;
        }
        done += 1;
    }
    let perfect = concordance_td(&[100.0, 200.0], &[true, false], |k, _| [0.2, 0.9][k], Exec::Sequential)
        .map_err(|e| e.to_string())?
        .c_td;
    let tied = concordance_td(&[3.0, 1.0, 4.0, 2.0], &[true, true, false, true], |_, t| 1.0 - t / 10.0, Exec::Sequential)
        .map_err(|e| e.to_string())?
        .c_td;
    check(
        mismatches == 0 && perfect == 1.0 && tied == 0.5,
        format!("{mismatches} mismatches in 1000 cohorts; perfect pair {perfect}; identical curves {tied}"),
    )
}

// 5 ---------------------------------------------------------------------

fn spearman_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let below = v.iter().filter(|&&b| b < a).count() as f64;
                let same = v.iter().filter(|&&b| b == a).count() as f64;
                below + (same + 1.0) / 2.0
            })
            .collect()
    };
    let pearson = |x: &[f64], y: &[f64]| {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    };
    let (mut worst, mut worst_monotone): (f64, f64) = (0.0, 0.0);
    let mut compared = 0;
    while compared < 1000 {
        let n = rng.random_range(3..60);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..12) as f64 - 3.0).collect();
        let (rx, ry) = (ranks(&x), ranks(&y));
        if rx.iter().all(|&r| r == rx[0]) || ry.iter().all(|&r| r == ry[0]) {
            continue;
        }
        if average_ranks(&x) != rx {
            return Err(format!("average ranks disagree for {x:?}"));
        }
        let rho = spearman(&x, &y).map_err(|e| e.to_string())?.rho;
        worst = worst.max((rho - pearson(&rx, &ry)).abs());
        let bent: Vec<f64> = x.iter().map(|v| (v / 3.0).exp() + v.powi(3)).collect();
        let rho_bent = spearman(&bent, &y).map_err(|e| e.to_string())?.rho;
        worst_monotone = worst_monotone.max((rho - rho_bent).abs());
        compared += 1;
    }
    check(
        worst < 1e-12 && worst_monotone < 1e-12,
        format!("max deviation {worst:.1e}; monotone-transform deviation {worst_monotone:.1e}"),
    )
}

// 6 ---------------------------------------------------------------------

fn forest_sanity() -> Outcome {
    let mut spec = SyntheticSpec::informative().null();
    let target = spec.clinical.iter().position(|v| v.name == "tumor_size").expect("tumor_size in preset");
    spec.clinical[target].weight = 1.0;
    // At the preset's 15% event rate observed times are mostly uniform
    // censoring times and carry little of the signal for either selector.
    spec.event_rate = 0.5;
    let params = ForestParams::default();
    let (mut top, mut worst_sum): (usize, f64) = (0, 0.0);
    for seed in 0..100u64 {
        let synth = generate_synthetic(&spec, seed).map_err(|e| e.to_string())?;
        let state = fit_preprocess(&synth.cohort).map_err(|e| e.to_string())?;
        let cohort = apply_preprocess(&synth.cohort, &state).map_err(|e| e.to_string())?;
        let imp = score_importance(&cohort, &params, seed, Exec::Parallel).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max((imp.iter().sum::<f64>() - 1.0).abs());
        let best = (0..imp.len()).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
        top += usize::from(best == target);
    }
    // 6-point trace: x1 <= 3.5 first (gain 128/3), then x2 <= 0.5 on the
    // right (gain 32/3), so importances 0.8 and 0.2.
    let x = ndarray::array![[1.0, 1.0], [2.0, 0.0], [3.0, 1.0], [4.0, 0.0], [5.0, 1.0], [6.0, 0.0]];
    let y = [1.0, 1.0, 1.0, 5.0, 9.0, 5.0];
    let single = ForestParams { n_trees: 1, bootstrap: false, ..ForestParams::default() };
    let tree = RegressionTree::fit(x.view(), &y, &[0, 1, 2, 3, 4, 5], &single);
    let imp = fit_forest(x.view(), &y, &single, 0, Exec::Sequential).map_err(|e| e.to_string())?.importance();
    let traced = tree.nodes.len() == 5
        && (imp[0] - 0.8).abs() < 1e-12
        && (imp[1] - 0.2).abs() < 1e-12
        && [[2.0, 1.0, 1.0], [4.0, 0.0, 5.0], [5.0, 1.0, 9.0]]
            .iter()
            .all(|r| tree.predict_row(&r[..2]) == r[2]);
    check(
        top >= 95 && worst_sum < 1e-9 && traced,
        format!("signal variable ranked first in {top}/100 runs; max |sum - 1| {worst_sum:.1e}; hand trace {}", if traced { "matches" } else { "differs" }),
    )
}

// 7 ---------------------------------------------------------------------

fn auc_hand_case() -> Outcome {
    let times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let events = [true, false, true, true, false, true, false, false];
    let marker = [0.9, 0.5, 0.7, 0.4, 0.6, 0.3, 0.35, 0.4];
    // Censoring KM drops to 6/7 at t=2, so deaths at 3 and 4 weigh 7/6;
    // it is 9/14 just before 6, so that death weighs 14/9.
    let w = [1.0, 7.0 / 6.0, 7.0 / 6.0, 14.0 / 9.0];
    let case_marker = [0.9, 0.7, 0.4, 0.3];
    let hand = |n_cases: usize, controls: &[f64]| {
        let mut num = 0.0;
        for c in 0..n_cases {
            for &m in controls {
                num += w[c] * if case_marker[c] > m { 1.0 } else if case_marker[c] == m { 0.5 } else { 0.0 };
            }
        }
        num / (w[..n_cases].iter().sum::<f64>() * controls.len() as f64)
    };
    let a45 = hand(3, &[0.6, 0.3, 0.35, 0.4]);
    let a65 = hand(4, &[0.35, 0.4]);
    let got = cumulative_dynamic_auc(&times, &events, &[4.5, 6.5], |k, _| marker[k], Exec::Sequential)
        .map_err(|e| e.to_string())?;
    let dev = (got.points[0].auc - a45).abs().max((got.points[1].auc - a65).abs());
    let perfect = cumulative_dynamic_auc(&times, &events, &[4.5, 6.5], |k, _| -times[k], Exec::Sequential)
        .map_err(|e| e.to_string())?;
    let flat = cumulative_dynamic_auc(&times, &events, &[4.5, 6.5], |_, _| 0.25, Exec::Sequential)
        .map_err(|e| e.to_string())?;
    let trivial = perfect.points.iter().all(|p| p.auc == 1.0) && flat.points.iter().all(|p| p.auc == 0.5);
    check(
        dev < 1e-10 && trivial,
        format!("AUC(4.5)={:.6}, AUC(6.5)={:.6}, deviation {dev:.1e}; perfect/constant {}", a45, a65, if trivial { "1.0/0.5" } else { "wrong" }),
    )
}

// 8 ---------------------------------------------------------------------

fn interpolation_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0;
    for trial in 0..10_000 {
        let n = if trial % 2 == 0 { 15 } else { rng.random_range(2..=30) };
        let grid = TimeGrid::new(rng.random_range(10.0..5000.0), n).map_err(|e| e.to_string())?;
        let cond: Vec<f64> = (0..n).map(|_| rng.random_range(1e-7..=1.0 - 1e-7)).collect();
        let curve = SurvivalCurve::from_conditional(&grid, &cond, 100).map_err(|e| e.to_string())?;
        let sized = curve.dense.len() == n * 100;
        let at_knots = (1..=n).all(|k| curve.dense[k * 100 - 1] == (curve.knot_times[k], curve.knots[k]));
        let monotone = curve.dense.windows(2).all(|w| w[1].1 <= w[0].1) && curve.dense[0].1 <= 1.0;
        if !(sized && at_knots && monotone) {
            failures += 1;
        }
    }
    check(failures == 0, format!("{failures} violations in 10000 random curves (1500 samples for n=15)"))
}

// 9-11: end to end through the command-line binary ------------------------

fn dtsurv(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dtsurv"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot launch dtsurv: {e}"))?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("dtsurv {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

struct Cohorts {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Cohorts {
    fn new() -> Result<Self, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let root = dir.path().to_path_buf();
        for seed in E2E_SEEDS {
            let out = root.join(format!("cohort{seed}.csv"));
            dtsurv(&["synth", "--seed", &seed.to_string(), "--out", path_str(&out)])?;
            // The null comparison keeps every covariate and shuffles the
            // (time, event) labels across patients.
            let schema = read_schema(root.join(format!("cohort{seed}.schema"))).map_err(|e| e.to_string())?;
            let mut cohort = load_cohort(&out, &schema).map_err(|e| e.to_string())?;
            let mut labels: Vec<(f64, bool)> = cohort.patients.iter().map(|p| (p.time, p.event)).collect();
            labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            for (p, (t, e)) in cohort.patients.iter_mut().zip(labels) {
                *p = Patient { time: t, event: e, ..p.clone() };
            }
            write_cohort(&cohort, root.join(format!("permuted{seed}.csv"))).map_err(|e| e.to_string())?;
        }
        Ok(Cohorts { _dir: dir, root })
    }

    fn cohort(&self, stem: &str, seed: u64) -> PathBuf {
        self.root.join(format!("{stem}{seed}.csv"))
    }

    fn schema(&self, seed: u64) -> PathBuf {
        self.root.join(format!("cohort{seed}.schema"))
    }
}

fn report_value(path: &Path, key: &str) -> Result<f64, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("{key} missing from {}", path.display()))
}

fn run_experiment(c: &Cohorts, stem: &str, seed: u64) -> Result<(f64, Duration), String> {
    let out = c.root.join(format!("run_{stem}{seed}"));
    let start = Instant::now();
    dtsurv(&[
        "experiment",
        "--cohort", path_str(&c.cohort(stem, seed)),
        "--schema", path_str(&c.schema(seed)),
        "--out_dir", path_str(&out),
        "--seed", &seed.to_string(),
        "--experiment", "3",
    ])?;
    let elapsed = start.elapsed();
    Ok((report_value(&out.join("exp3").join("report.csv"), "c_td")?, elapsed))
}

fn learning_signal(c: &Cohorts) -> Outcome {
    let (mut real, mut null, mut slowest) = (Vec::new(), Vec::new(), Duration::ZERO);
    for seed in E2E_SEEDS {
        let (c_real, t) = run_experiment(c, "cohort", seed)?;
        slowest = slowest.max(t);
        real.push(c_real);
        null.push(run_experiment(c, "permuted", seed)?.0);
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    let (m_real, m_null) = (median(real.clone()), median(null.clone()));
    check(
        m_real >= 0.70 && (m_null - 0.5).abs() <= 0.07 && slowest < Duration::from_secs(120),
        format!(
            "median C^td {m_real:.3} [{}]; permuted labels {m_null:.3} [{}]; slowest run {slowest:.1?}",
            fmt(&real),
            fmt(&null)
        ),
    )
}

fn matrix(c: &Cohorts, seed: u64, out: &Path) -> Result<String, String> {
    dtsurv(&[
        "matrix",
        "--cohort", path_str(&c.cohort("cohort", seed)),
        "--schema", path_str(&c.schema(seed)),
        "--out_dir", path_str(out),
        "--seed", &seed.to_string(),
    ])?;
    fs::read_to_string(out.join("summary.csv")).map_err(|e| e.to_string())
}

fn multimodal_trend(c: &Cohorts) -> Outcome {
    let mut by_exp: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut shapes_ok = true;
    for seed in E2E_SEEDS {
        let summary = matrix(c, seed, &c.root.join(format!("matrix{seed}")))?;
        let rows: Vec<&str> = summary.lines().skip(1).collect();
        shapes_ok &= summary.starts_with("experiment,n_clinical_selected,c_td,integrated_auc\n") && rows.len() == 9;
        for (k, row) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            shapes_ok &= cells[0] == format!("Exp{}", k + 1);
            let c_td: f64 = cells[2].parse().map_err(|_| format!("seed {seed}: {row}"))?;
            by_exp.entry(k + 1).or_default().push(c_td);
        }
    }
    let med: BTreeMap<usize, f64> = by_exp.into_iter().map(|(k, v)| (k, median(v))).collect();
    let (e1, e2, e3) = (med[&1], med[&2], med[&3]);
    let all = med.iter().map(|(k, v)| format!("Exp{k} {v:.3}")).collect::<Vec<_>>().join(", ");
    check(
        shapes_ok && e3 >= e1.max(e2) - 0.02,
        format!("median C^td {all}; 9-row summaries {}", if shapes_ok { "ok" } else { "malformed" }),
    )
}

fn files_under(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn determinism(c: &Cohorts) -> Outcome {
    let seed = E2E_SEEDS[0];
    let out = c.root.join("determinism");
    let kept = c.root.join("determinism_first");
    // Same configuration both times, including the output directory.
    matrix(c, seed, &out)?;
    fs::rename(&out, &kept).map_err(|e| e.to_string())?;
    matrix(c, seed, &out)?;
    let (a, b) = (files_under(&kept)?, files_under(&out)?);
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    let key_files = ["summary.csv", "exp1/report.csv", "exp9/report.txt", "exp3/violin.svg"];
    let present = key_files.iter().all(|f| a.contains_key(Path::new(f)));
    check(
        differing.is_empty() && present,
        if differing.is_empty() {
            format!("{} files byte-identical across two matrix runs", a.len())
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {n:>2} {name}: {detail}");
    };
    report(1, "target construction", target_oracle());
    report(2, "loss oracle", loss_oracle());
    report(3, "gradient check", gradient_check());
    report(4, "C^td brute force", ctd_brute_force());
    report(5, "Spearman oracle", spearman_oracle());
    report(6, "forest sanity", forest_sanity());
    report(7, "AUC hand case", auc_hand_case());
    report(8, "interpolation contract", interpolation_contract());
    match Cohorts::new() {
        Ok(c) => {
            report(9, "end-to-end learning signal", learning_signal(&c));
            report(10, "multimodal trend", multimodal_trend(&c));
            report(11, "determinism", determinism(&c));
        }
        Err(e) => {
            for (n, name) in [(9, "end-to-end learning signal"), (10, "multimodal trend"), (11, "determinism")] {
                report(n, name, Err(format!("cohort generation failed: {e}")));
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 11 criteria failed");
        ExitCode::FAILURE
    }
}
