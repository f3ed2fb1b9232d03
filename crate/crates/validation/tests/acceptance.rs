//! Acceptance checks at pinned tolerances. Prints one line per criterion and
//! exits non-zero if any fails.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use lcqnn_core::coefficient::tree_probabilities;
use lcqnn_core::experiments::{
    group_block_variance, least_squares_slope, global_block_scan, scan_variance_vs_l, scan_variance_vs_n,
    su2_block_dims, BlockSpectrum, GroupOptions, ScanRecord, ScanSettings,
};
use lcqnn_core::mnist::{self, cell_accuracy, run_grid, TrainConfig};
use lcqnn_core::rng::uniform_angles;
use lcqnn_core::{BlockKind, CoefficientLayer, GradStats, RngStream, StateVector};
use rand::Rng;

use common::{lcqnn, stderr, stdout, synthetic_mnist};

const SAMPLES: usize = 500;
const SEEDS: [u64; 3] = [42, 7, 1234];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn slope_vs<F: Fn(&ScanRecord) -> f64>(records: &[ScanRecord], x: F) -> f64 {
    let xs: Vec<f64> = records.iter().map(&x).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.variance.log2()).collect();
    least_squares_slope(&xs, &ys)
}

fn settings(seed: u64, kind: BlockKind) -> ScanSettings {
    ScanSettings { samples: SAMPLES, root_seed: seed, kind, ..ScanSettings::default() }
}

/// Every mean within 4 standard errors, across the scans of the later checks.
struct ZeroMeanLog(Vec<(String, f64, f64)>);

impl ZeroMeanLog {
    fn records(&mut self, tag: &str, rs: &[ScanRecord]) {
        for r in rs {
            self.0.push((format!("{tag} m={} n={} L={} k={}", r.m, r.n, r.l, r.k), r.mean, r.stderr));
        }
    }

    fn stats(&mut self, tag: &str, s: &GradStats) {
        self.0.push((tag.to_string(), s.mean, s.stderr_mean()));
    }
}

fn grad_check() -> Outcome {
    let start = Instant::now();
    let out = lcqnn(&["grad-check", "--probes", "50", "--seed", "42", "--tol", "1e-5"]);
    let secs = start.elapsed().as_secs_f64();
    let ok = out.status.success() && secs < 120.0;
    let msg = if out.status.success() { stdout(&out) } else { stderr(&out) };
    outcome(ok, format!("{} ({secs:.1}s)", msg.trim()))
}

fn coefficient_layer() -> Outcome {
    let mut rng = RngStream::new(42, 0).rng();
    let mut worst: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.random_range(0..=4usize);
        let t = rng.random_range(0..=m);
        let l = 1usize << t;
        let alpha = uniform_angles(&mut rng, l - 1);
        let layer = CoefficientLayer::new(m, l, alpha.clone()).unwrap();
        let closed = tree_probabilities(t, &alpha);
        let sim = layer.circuit().unwrap().run(&alpha, &StateVector::zero(m).unwrap()).unwrap();
        for (j, a) in sim.amplitudes().iter().enumerate() {
            let p = closed.get(j).copied().unwrap_or(0.0);
            worst = worst.max((a.norm_sqr() - p).abs());
        }
        worst_sum = worst_sum.max((closed.iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        worst <= 1e-12 && worst_sum <= 1e-12,
        format!("200 layers, max |sim - closed form| {worst:.1e}, max |sum p - 1| {worst_sum:.1e}"),
    )
}

fn flatness(log: &mut ZeroMeanLog) -> Outcome {
    let recs = scan_variance_vs_n(3, 8, 3, &[3, 5], &[3, 4, 6, 8], &settings(42, BlockKind::Ansatz)).unwrap();
    log.records("flat", &recs);
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [3, 5] {
        let pts: Vec<&ScanRecord> = recs.iter().filter(|r| r.k == k && r.n >= k).collect();
        let lo = pts.iter().min_by_key(|r| r.n).unwrap();
        let hi = pts.iter().max_by_key(|r| r.n).unwrap();
        let ratio = hi.variance / lo.variance;
        ok &= (0.5..=2.0).contains(&ratio);
        parts.push(format!("k={k} Var(n={})/Var(n={}) = {ratio:.3}", hi.n, lo.n));
    }
    let global: Vec<ScanRecord> = (3..=8)
        .flat_map(|n| scan_variance_vs_n(3, 8, 3, &[n], &[n], &settings(42, BlockKind::Ansatz)).unwrap())
        .collect();
    log.records("global", &global);
    let slope = slope_vs(&global, |r| r.n as f64);
    ok &= (slope + 1.0).abs() <= 0.35;
    parts.push(format!("k=n slope {slope:.3} (want -1 +/- 0.35)"));
    outcome(ok, parts.join("; "))
}

fn layers(log: &mut ZeroMeanLog) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let recs = scan_variance_vs_l(3, 6, 5, 3, &[1, 2, 4, 8], &settings(seed, BlockKind::Ansatz)).unwrap();
        log.records("layers", &recs);
        let slope = slope_vs(&recs, |r| (r.l as f64).log2());
        ok &= (slope + 1.0).abs() <= 0.33;
        parts.push(format!("seed {seed}: {slope:.3}"));
    }
    outcome(ok, format!("slope of log2 Var vs log2 L (want -1 +/- 0.33): {}", parts.join(", ")))
}

fn global_blocks(log: &mut ZeroMeanLog) -> Outcome {
    let recs = global_block_scan(&[1, 2], &[3, 4, 5, 6], 3, &settings(42, BlockKind::Haar)).unwrap();
    log.records("global-blocks", &recs);
    let slope = slope_vs(&recs, |r| (r.m + r.n) as f64);
    outcome(
        (slope + 1.0).abs() <= 0.35 && recs.len() >= 4,
        format!("{} sizes, slope of log2 Var vs m+n {slope:.3} (want -1 +/- 0.35)", recs.len()),
    )
}

fn block_spectra(log: &mut ZeroMeanLog) -> Outcome {
    let run = |dims: &str| {
        let spec = BlockSpectrum::parse_dims(dims).unwrap();
        group_block_variance(&spec, &GroupOptions { samples: SAMPLES, ..GroupOptions::default() }).unwrap()
    };
    let (small, large, wide) = (run("16:1,16:1"), run("32:1,32:1"), run("16:1,16:1,16:1,16:1"));
    for (tag, v) in [("16x2", &small), ("32x2", &large), ("16x4", &wide)] {
        log.stats(&format!("group {tag} theta"), &v.theta);
        log.stats(&format!("group {tag} alpha"), v.alpha.as_ref().unwrap());
    }
    let d_ratio = large.theta.variance() / small.theta.variance();
    let l_ratio = wide.alpha.unwrap().variance() / small.alpha.unwrap().variance();
    outcome(
        (0.35..=0.7).contains(&d_ratio) && (0.35..=0.7).contains(&l_ratio),
        format!("d_max 16->32 theta ratio {d_ratio:.3}; L 2->4 alpha ratio {l_ratio:.3} (band [0.35, 0.7])"),
    )
}

fn su2() -> Outcome {
    let complete = (1..=20u64).all(|n| su2_block_dims(n).unwrap().total_dim().to_string() == (1u64 << n).to_string());
    let three: Vec<(u64, String)> =
        su2_block_dims(3).unwrap().blocks.iter().map(|b| (b.d, b.mult.to_string())).collect();
    let ok = complete && three == vec![(4, "1".to_string()), (2, "2".to_string())];
    outcome(ok, format!("sum d*mult = 2^N for N <= 20: {complete}; N=3 -> {three:?}"))
}

fn mnist_dir() -> PathBuf {
    std::env::var_os(mnist::DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| common::workspace_root().join("data/mnist"))
}

fn mnist_trends() -> Outcome {
    let dir = mnist_dir();
    if mnist::required_files(&dir).iter().any(|p| !p.is_file()) {
        return outcome(false, format!("MNIST files missing in {}; run scripts/fetch_mnist.sh", dir.display()));
    }
    let start = Instant::now();
    let base = TrainConfig::new(1, 1);
    let data = mnist::load_dataset(&dir, base.train_limit, base.test_limit).unwrap();
    let cells = run_grid(&[1, 4], &[1, 2, 4, 8], &base, &data).unwrap();
    let acc = |l, d| cell_accuracy(&cells, l, d).unwrap();
    let mut checks = vec![
        (format!("acc(4,8) {:.3} >= 0.60", acc(4, 8)), acc(4, 8) >= 0.60),
        (format!("acc(1,1) {:.3} in [0.25, 0.55]", acc(1, 1)), (0.25..=0.55).contains(&acc(1, 1))),
    ];
    for d in [2, 4, 8] {
        checks.push((format!("acc(4,{d}) {:.3} > acc(1,{d}) {:.3}", acc(4, d), acc(1, d)), acc(4, d) > acc(1, d)));
    }
    checks.push((format!("acc(4,8) {:.3} > acc(4,1) {:.3}", acc(4, 8), acc(4, 1)), acc(4, 8) > acc(4, 1)));
    let ok = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks.iter().map(|(s, p)| format!("{s} [{}]", if *p { "ok" } else { "no" })).collect();
    outcome(ok, format!("{} ({:.0}s)", detail.join("; "), start.elapsed().as_secs_f64()))
}

fn rows(out: &std::process::Output) -> Vec<String> {
    stdout(out).lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    synthetic_mnist(dir.path(), 400, 100);
    let data_dir = dir.path().to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["variance-scan", "--n-list", "3,4", "--samples", "100"],
        vec!["variance-layers", "--samples", "100", "--block", "haar"],
        vec!["global-scan", "--samples", "100"],
        vec!["group-scan", "--dims", "16:1,16:1", "--dims", "8:3,4:2", "--mode", "exact", "--samples", "100"],
        vec!["mnist", "--data-dir", &data_dir, "--L-list", "1,2", "--D-list", "2", "--runs", "2", "--train-limit", "200"],
    ];
    let mut bad = Vec::new();
    for cmd in &commands {
        let base = rows(&lcqnn(&[&["--threads", "1"], &cmd[..]].concat()));
        for threads in ["1", "4"] {
            let again = rows(&lcqnn(&[&["--threads", threads], &cmd[..]].concat()));
            if base.len() < 2 || again != base {
                bad.push(format!("{} (threads {threads})", cmd[0]));
            }
        }
    }
    outcome(bad.is_empty(), format!("{} commands x threads {{1,4}}; mismatches: {bad:?}", commands.len()))
}

fn main() {
    let mut log = ZeroMeanLog(Vec::new());
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        results.push((name, o, start.elapsed().as_secs_f64()));
    };
    run("gradient-correctness", &mut grad_check);
    run("coefficient-layer-exactness", &mut coefficient_layer);
    let mut flat_log = ZeroMeanLog(Vec::new());
    run("variance-flat-in-n", &mut || flatness(&mut flat_log));
    let mut layer_log = ZeroMeanLog(Vec::new());
    run("variance-vs-L-slope", &mut || layers(&mut layer_log));
    let mut global_log = ZeroMeanLog(Vec::new());
    run("global-blocks-slope", &mut || global_blocks(&mut global_log));
    let mut group_log = ZeroMeanLog(Vec::new());
    run("block-spectrum-halving", &mut || block_spectra(&mut group_log));
    for l in [flat_log, layer_log, global_log, group_log] {
        log.0.extend(l.0);
    }
    run("zero-mean-gradients", &mut || {
        let off: Vec<String> = log
            .0
            .iter()
            .filter(|(_, mean, se)| mean.abs() > 4.0 * se)
            .map(|(tag, mean, se)| format!("{tag}: {:.2} stderr", mean.abs() / se))
            .collect();
        let worst = log.0.iter().map(|(_, m, s)| m.abs() / s).fold(0.0, f64::max);
        outcome(off.is_empty(), format!("{} records, max |mean|/stderr {worst:.2}; over 4: {off:?}", log.0.len()))
    });
    run("su2-arithmetic", &mut su2);
    run("mnist-trends", &mut mnist_trends);
    run("determinism", &mut determinism);

    let mut failed = 0;
    for (name, o, secs) in &results {
        println!("ACCEPTANCE {name}: {} | {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("ACCEPTANCE summary: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
