use std::path::PathBuf;

use clap::Args;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use lcqnn_core::experiments::{
    group_block_variance, least_squares_slope, global_block_scan, scan_variance_vs_l, scan_variance_vs_n,
    su2_block_dims, BlockSpectrum, GroupMode, GroupOptions, ScanRecord, ScanSettings,
};
use lcqnn_core::gradients::{finite_diff_grad, param_shift_grad_with, ShiftRule};
use lcqnn_core::mnist::{self, Optimizer, TrainConfig};
use lcqnn_core::rng::uniform_angles;
use lcqnn_core::{Architecture, BlockKind, LcqnnModel, Observable, ParamId, Probe, RngStream, StateVector};

use crate::output::{write_json, write_records, write_rows, Format, Meta};
use crate::CliError;

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SamplingArgs {
    /// Parameter draws per configuration.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Observable on the working register, e.g. `Z0` or `Z0+0.5*Z1Z2`.
    #[arg(long, default_value = "Z0")]
    pub obs: String,
    /// `theta:<i>`, `alpha:<i>` or `alpha:random`.
    #[arg(long, default_value = "theta:0")]
    pub param_id: String,
    /// Block realisation: `ansatz` or `haar`.
    #[arg(long, default_value = "ansatz")]
    pub block: BlockKind,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl SamplingArgs {
    fn settings(&self) -> Result<ScanSettings, CliError> {
        let observable = Observable::parse(&self.obs).map_err(|e| CliError::Usage(e.to_string()))?;
        let probe: Probe = self.param_id.parse().map_err(|e: lcqnn_core::Error| CliError::Usage(e.to_string()))?;
        if self.samples < 2 {
            return Err(CliError::Usage("--samples must be at least 2".into()));
        }
        Ok(ScanSettings {
            samples: self.samples,
            root_seed: self.seed,
            observable,
            probe,
            kind: self.block,
        })
    }
}

fn require_nonempty(name: &str, list: &[usize]) -> Result<(), CliError> {
    if list.is_empty() {
        Err(CliError::Usage(format!("--{name} must not be empty")))
    } else {
        Ok(())
    }
}

fn log2_fit(records: &[ScanRecord], x: impl Fn(&ScanRecord) -> f64) -> Option<f64> {
    if records.len() < 2 || records.iter().any(|r| r.variance <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = records.iter().map(x).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.variance.log2()).collect();
    Some(least_squares_slope(&xs, &ys))
}

fn zero_mean_summary(records: &[ScanRecord]) -> Value {
    let worst = records
        .iter()
        .map(|r| if r.stderr > 0.0 { r.mean.abs() / r.stderr } else { 0.0 })
        .fold(0.0, f64::max);
    json!({ "max_abs_mean_over_stderr": worst, "all_within_4_stderr": records.iter().all(|r| r.mean_within(4.0)) })
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct VarianceScanArgs {
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long = "L", default_value_t = 8)]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,5")]
    pub k_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3,4,6,8")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

pub fn variance_scan(a: VarianceScanArgs) -> Result<(), CliError> {
    require_nonempty("k-list", &a.k_list)?;
    require_nonempty("n-list", &a.n_list)?;
    let settings = a.sampling.settings()?;
    let records = scan_variance_vs_n(a.m, a.l, a.depth, &a.k_list, &a.n_list, &settings)?;
    let ratios: Vec<Value> = a
        .k_list
        .iter()
        .filter_map(|&k| {
            let pts: Vec<&ScanRecord> = records.iter().filter(|r| r.k == k && r.k <= r.n).collect();
            let lo = pts.iter().min_by_key(|r| r.n)?;
            let hi = pts.iter().max_by_key(|r| r.n)?;
            Some(json!({ "k": k, "n_min": lo.n, "n_max": hi.n, "variance_ratio": hi.variance / lo.variance }))
        })
        .collect();
    let summary = json!({ "flatness": ratios, "zero_mean": zero_mean_summary(&records) });
    let meta = Meta::new("variance-scan", &a);
    write_records(a.sampling.out.as_deref(), a.sampling.format, &meta, &records, Some(summary))?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LayersArgs {
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long = "L-list", value_delimiter = ',', default_value = "1,2,4,8")]
    #[serde(rename = "L-list")]
    pub l_list: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

pub fn variance_layers(a: LayersArgs) -> Result<(), CliError> {
    require_nonempty("L-list", &a.l_list)?;
    if let Some(&bad) = a.l_list.iter().find(|&&l| !l.is_power_of_two()) {
        return Err(CliError::Usage(format!("--L-list entry {bad} is not a power of two")));
    }
    let settings = a.sampling.settings()?;
    let records = scan_variance_vs_l(a.m, a.n, a.k, a.depth, &a.l_list, &settings)?;
    let slope = log2_fit(&records, |r| (r.l as f64).log2());
    let summary = json!({
        "slope_log2_variance_vs_log2_L": slope,
        "zero_mean": zero_mean_summary(&records),
    });
    if let Some(s) = slope {
        log::info!("slope of log2 Var against log2 L: {s:.3}");
    }
    let meta = Meta::new("variance-layers", &a);
    write_records(a.sampling.out.as_deref(), a.sampling.format, &meta, &records, Some(summary))?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GlobalScanArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub m_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
    pub n_list: Vec<usize>,
    /// Ansatz depth (also recorded for Haar blocks).
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

pub fn global_scan(a: GlobalScanArgs) -> Result<(), CliError> {
    require_nonempty("m-list", &a.m_list)?;
    require_nonempty("n-list", &a.n_list)?;
    let settings = a.sampling.settings()?;
    let records = global_block_scan(&a.m_list, &a.n_list, a.depth, &settings)?;
    let summary = json!({
        "slope_log2_variance_vs_total_qubits": log2_fit(&records, |r| (r.m + r.n) as f64),
        "zero_mean": zero_mean_summary(&records),
    });
    let meta = Meta::new("global-scan", &a);
    write_records(a.sampling.out.as_deref(), a.sampling.format, &meta, &records, Some(summary))?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GroupScanArgs {
    /// Spectrum as `d:mult,...`; repeat the flag to compare spectra.
    #[arg(long)]
    pub dims: Vec<String>,
    /// Use the SU(2) spectrum of N qubits.
    #[arg(long = "su2-N")]
    #[serde(rename = "su2-N")]
    pub su2_n: Option<u64>,
    /// SU(2) labels j to retain (all when absent).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub select_j: Option<Vec<usize>>,
    #[arg(long, default_value = "haar")]
    pub mode: GroupMode,
    /// Ansatz depth for `--mode ansatz`.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct GroupRecord {
    spectrum: String,
    #[serde(rename = "L")]
    l: usize,
    d_max: usize,
    mode: String,
    param_id: String,
    samples: u64,
    seed: u64,
    mean: f64,
    variance: f64,
    stderr: f64,
}

fn spectrum_label(s: &BlockSpectrum) -> String {
    s.retained()
        .map(|b| format!("{}:{}", b.d, b.mult))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn group_scan(a: GroupScanArgs) -> Result<(), CliError> {
    let usage = |e: lcqnn_core::Error| CliError::Usage(e.to_string());
    let mut spectra = Vec::new();
    for d in &a.dims {
        spectra.push(BlockSpectrum::parse_dims(d).map_err(usage)?);
    }
    if let Some(n) = a.su2_n {
        let full = su2_block_dims(n).map_err(usage)?;
        let spectrum = match &a.select_j {
            Some(js) => full.select(js.clone()).map_err(usage)?,
            None => full,
        };
        spectra.push(spectrum);
    }
    if spectra.is_empty() {
        return Err(CliError::Usage("give --dims or --su2-N".into()));
    }
    if a.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    for s in &spectra {
        s.retained_dims().map_err(usage)?;
    }
    let opts = GroupOptions {
        mode: a.mode,
        depth: a.depth,
        samples: a.samples,
        root_seed: a.seed,
    };
    let mut records = Vec::new();
    let mut results = Vec::new();
    for s in &spectra {
        let v = group_block_variance(s, &opts)?;
        let label = spectrum_label(s);
        let mut push = |param_id: &str, st: &lcqnn_core::GradStats| {
            records.push(GroupRecord {
                spectrum: label.clone(),
                l: v.l,
                d_max: v.d_max,
                mode: a.mode.to_string(),
                param_id: param_id.into(),
                samples: st.count,
                seed: a.seed,
                mean: st.mean,
                variance: st.variance(),
                stderr: st.stderr_mean(),
            })
        };
        push("theta:probe", &v.theta);
        if let Some(al) = &v.alpha {
            push("alpha:random", al);
        }
        results.push(v);
    }
    let comparisons: Vec<Value> = results
        .windows(2)
        .map(|w| {
            json!({
                "from": { "L": w[0].l, "d_max": w[0].d_max },
                "to": { "L": w[1].l, "d_max": w[1].d_max },
                "theta_variance_ratio": w[1].theta.variance() / w[0].theta.variance(),
                "alpha_variance_ratio": match (&w[0].alpha, &w[1].alpha) {
                    (Some(x), Some(y)) => Some(y.variance() / x.variance()),
                    _ => None,
                },
            })
        })
        .collect();
    let spectra_json: Vec<Value> = spectra.iter().map(|s| json!(s)).collect();
    let summary = json!({ "spectra": spectra_json, "scaling": comparisons });
    let meta = Meta::new("group-scan", &a);
    write_records(a.out.as_deref(), a.format, &meta, &records, Some(summary))?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MnistArgs {
    /// Directory holding the four IDX files (default: $LCQNN_DATA_DIR or data/mnist).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long = "L-list", value_delimiter = ',', default_value = "1,2,4")]
    #[serde(rename = "L-list")]
    pub l_list: Vec<usize>,
    #[arg(long = "D-list", value_delimiter = ',', default_value = "1,2,4,8")]
    #[serde(rename = "D-list")]
    pub d_list: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.008)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 4000)]
    pub train_limit: usize,
    #[arg(long, default_value_t = 1000)]
    pub test_limit: usize,
    /// Use every 0-3 example of both splits instead of the stratified limits.
    #[arg(long)]
    pub full_split: bool,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value = "adam")]
    pub optimizer: Optimizer,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Per-run CSV; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Table summary as JSON.
    #[arg(long)]
    #[serde(skip)]
    pub summary: Option<PathBuf>,
}

const FETCH_HINT: &str = "run scripts/fetch_mnist.sh or point --data-dir / LCQNN_DATA_DIR at the IDX files";

pub fn mnist(a: MnistArgs) -> Result<(), CliError> {
    require_nonempty("L-list", &a.l_list)?;
    require_nonempty("D-list", &a.d_list)?;
    if a.runs == 0 || a.epochs == 0 || a.batch == 0 {
        return Err(CliError::Usage("--runs, --epochs and --batch must be positive".into()));
    }
    let dir = a.data_dir.clone().unwrap_or_else(mnist::default_data_dir);
    if let Some(missing) = mnist::required_files(&dir).iter().find(|p| !p.is_file()) {
        return Err(CliError::Usage(format!("missing {}; {FETCH_HINT}", missing.display())));
    }
    let limits = (!a.full_split).then_some((a.train_limit, a.test_limit));
    let data = mnist::load_dataset(&dir, limits.map(|l| l.0), limits.map(|l| l.1))?;
    let base = TrainConfig {
        m: a.m,
        n: 4,
        k: a.k,
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        runs: a.runs,
        train_limit: limits.map(|l| l.0),
        test_limit: limits.map(|l| l.1),
        root_seed: a.seed,
        optimizer: a.optimizer,
        ..TrainConfig::new(1, 1)
    };
    let cells = mnist::run_grid(&a.l_list, &a.d_list, &base, &data)?;

    let mut resolved = a.clone();
    resolved.data_dir = Some(dir);
    let meta = Meta::new("mnist", &resolved);
    let mut header: Vec<String> = ["L", "D", "run", "seed"].map(String::from).to_vec();
    header.extend((1..=a.epochs).map(|e| format!("loss_epoch{e}")));
    header.push("test_accuracy".into());
    let rows: Vec<Vec<String>> = cells
        .iter()
        .flat_map(|c| &c.runs)
        .map(|r| {
            let mut row = vec![r.l.to_string(), r.depth.to_string(), r.run.to_string(), r.seed.to_string()];
            row.extend(r.epoch_losses.iter().map(|x| x.to_string()));
            row.push(r.test_accuracy.to_string());
            row
        })
        .collect();
    write_rows(a.out.as_deref(), &meta, &header, &rows)?;
    if let Some(path) = &a.summary {
        let doc = json!({
            "meta": meta,
            "dataset": data.summary(),
            "cells": cells,
            "trends": mnist::trend_report(&cells),
        });
        write_json(Some(path), &doc)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GradCheckArgs {
    #[arg(long, default_value_t = 50)]
    pub probes: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Absolute floor under which differences always pass.
    #[arg(long, default_value_t = 1e-9)]
    pub floor: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    /// Scales both shift constants (test hook).
    #[arg(long, hide = true)]
    pub corrupt_shift: Option<f64>,
    /// Write a JSON report to this path.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct ProbeResult {
    probe: usize,
    architecture: Architecture,
    param_id: String,
    observable: String,
    shift: f64,
    finite_difference: f64,
    abs_error: f64,
    rel_error: f64,
    pass: bool,
}

fn random_probe(seed: u64, index: usize, a: &GradCheckArgs, rule: ShiftRule) -> Result<ProbeResult, CliError> {
    let mut rng = RngStream::new(seed, index as u64).rng();
    let m = rng.random_range(0..=3usize);
    let l = 1usize << rng.random_range(0..=m);
    let n = rng.random_range(1..=6usize);
    let k = rng.random_range(1..=n);
    let depth = rng.random_range(1..=3usize);
    let model = LcqnnModel::new(Architecture::new(m, n, l, k, depth))?;
    let alpha = uniform_angles(&mut rng, model.alpha_len());
    let theta = uniform_angles(&mut rng, model.theta_layout_size());
    let x: Vec<f64> = (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let input = StateVector::amplitude_encode(&x)?;
    let obs = Observable::z(rng.random_range(0..n));
    let slot = rng.random_range(0..model.num_params());
    let id = if slot < model.alpha_len() {
        ParamId::Alpha(slot)
    } else {
        ParamId::Theta(slot - model.alpha_len())
    };
    let shift = param_shift_grad_with(&model, &alpha, &theta, &obs, Some(&input), id, rule)?;
    let fd = finite_diff_grad(&model, &alpha, &theta, &obs, Some(&input), id, a.step)?;
    let abs_error = (shift - fd).abs();
    let rel_error = abs_error / fd.abs().max(f64::MIN_POSITIVE);
    Ok(ProbeResult {
        probe: index,
        architecture: model.architecture().clone(),
        param_id: id.to_string(),
        observable: obs.to_string(),
        shift,
        finite_difference: fd,
        abs_error,
        rel_error,
        pass: abs_error <= (a.tol * fd.abs()).max(a.floor),
    })
}

pub fn grad_check(a: GradCheckArgs) -> Result<(), CliError> {
    if a.probes == 0 {
        return Err(CliError::Usage("--probes must be at least 1".into()));
    }
    let mut rule = ShiftRule::default();
    if let Some(f) = a.corrupt_shift {
        rule.theta_shift *= f;
        rule.alpha_shift *= f;
    }
    let results = (0..a.probes)
        .map(|i| random_probe(a.seed, i, &a, rule))
        .collect::<Result<Vec<_>, _>>()?;
    let failures = results.iter().filter(|r| !r.pass).count();
    let margin = |r: &ProbeResult| r.abs_error / (a.tol * r.finite_difference.abs()).max(a.floor);
    let worst = results
        .iter()
        .max_by(|x, y| margin(x).total_cmp(&margin(y)))
        .expect("at least one probe");
    if let Some(path) = &a.out {
        let meta = Meta::new("grad-check", &a);
        write_json(
            Some(path),
            &json!({ "meta": meta, "probes": results, "failures": failures }),
        )?;
    }
    let worst_line = format!(
        "probe {} ({}, {}, {}): shift {:.12e} vs fd {:.12e}, error/allowed {:.3}",
        worst.probe,
        serde_json::to_string(&worst.architecture).unwrap_or_default(),
        worst.param_id,
        worst.observable,
        worst.shift,
        worst.finite_difference,
        margin(worst)
    );
    if failures > 0 {
        return Err(CliError::Check(format!(
            "{failures}/{} probes failed; worst offender {worst_line}",
            a.probes
        )));
    }
    println!("grad-check: {} probes passed; worst {worst_line}", a.probes);
    Ok(())
}
