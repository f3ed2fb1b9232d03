//! Gradient-variance scans over architecture size and the block-spectrum
//! experiment.

mod group;
mod scan;

pub use group::{
    group_block_variance, su2_block_dims, BlockSpectrum, GroupMode, GroupOptions, GroupVariance, SpectrumBlock,
    MAX_BLOCK_DIM,
};
pub use scan::{
    global_block_scan, scan_variance_vs_l, scan_variance_vs_n, ScanRecord, ScanSettings, SCAN_COLUMNS,
};

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
