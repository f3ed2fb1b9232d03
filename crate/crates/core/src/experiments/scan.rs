use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gradients::{estimate_grad_stats_with, GradStats, Probe, SampleOptions};
use crate::model::{Architecture, BlockKind, LcqnnModel};
use crate::observable::Observable;

/// CSV column order of [`ScanRecord`].
pub const SCAN_COLUMNS: [&str; 12] = [
    "m", "n", "L", "k", "D", "observable", "param_id", "samples", "seed", "mean", "variance", "stderr",
];

/// One gradient-variance measurement. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub k: usize,
    #[serde(rename = "D")]
    pub depth: usize,
    pub observable: String,
    pub param_id: String,
    pub samples: usize,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

impl ScanRecord {
    pub fn new(arch: &Architecture, observable: &Observable, probe: Probe, seed: u64, stats: &GradStats) -> Self {
        Self {
            m: arch.m,
            n: arch.n,
            l: arch.l,
            k: arch.k,
            depth: arch.depth,
            observable: observable.to_string(),
            param_id: probe.to_string(),
            samples: stats.count as usize,
            seed,
            mean: stats.mean,
            variance: stats.variance(),
            stderr: stats.stderr_mean(),
        }
    }

    /// `|mean| ≤ z · stderr`.
    pub fn mean_within(&self, z: f64) -> bool {
        self.mean.abs() <= z * self.stderr
    }
}

#[derive(Debug, Clone)]
pub struct ScanSettings {
    pub samples: usize,
    pub root_seed: u64,
    pub observable: Observable,
    pub probe: Probe,
    pub kind: BlockKind,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            samples: 500,
            root_seed: 42,
            observable: Observable::z(0),
            probe: Probe::DEFAULT,
            kind: BlockKind::Ansatz,
        }
    }
}

fn measure(arch: Architecture, settings: &ScanSettings) -> Result<ScanRecord> {
    let model = LcqnnModel::with_kind(arch, settings.kind)?;
    let opts = SampleOptions::new(settings.probe, settings.samples, settings.root_seed);
    let stats = estimate_grad_stats_with(&model, &settings.observable, &opts)?;
    log::info!(
        "m={} n={} L={} k={} D={}: var={:.4e}",
        model.m(),
        model.n(),
        model.branches(),
        model.architecture().k,
        model.depth(),
        stats.variance()
    );
    Ok(ScanRecord::new(model.architecture(), &settings.observable, settings.probe, settings.root_seed, &stats))
}

/// Variance against working-register size, one record per `(k, n)`.
pub fn scan_variance_vs_n(
    m: usize,
    l: usize,
    depth: usize,
    k_list: &[usize],
    n_list: &[usize],
    settings: &ScanSettings,
) -> Result<Vec<ScanRecord>> {
    let mut out = Vec::with_capacity(k_list.len() * n_list.len());
    for &k in k_list {
        for &n in n_list {
            out.push(measure(Architecture::new(m, n, l, k, depth), settings)?);
        }
    }
    Ok(out)
}

/// Variance against the number of combined blocks, one record per `L`.
pub fn scan_variance_vs_l(
    m: usize,
    n: usize,
    k: usize,
    depth: usize,
    l_list: &[usize],
    settings: &ScanSettings,
) -> Result<Vec<ScanRecord>> {
    l_list
        .iter()
        .map(|&l| measure(Architecture::new(m, n, l, k, depth), settings))
        .collect()
}

/// Global blocks (`k = n`) with every control value in use (`L = 2^m`).
pub fn global_block_scan(
    m_list: &[usize],
    n_list: &[usize],
    depth: usize,
    settings: &ScanSettings,
) -> Result<Vec<ScanRecord>> {
    let mut out = Vec::with_capacity(m_list.len() * n_list.len());
    for &m in m_list {
        for &n in n_list {
            out.push(measure(Architecture::new(m, n, 1 << m, n, depth), settings)?);
        }
    }
    Ok(out)
}
