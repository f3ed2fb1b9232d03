use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Dataset, MnistExample, NUM_CLASSES};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::model::{Architecture, LcqnnModel};
use crate::observable::{Observable, ZTerm};
use crate::rng::{uniform_angles, RngStream};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Adam,
    Sgd,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Optimizer::Adam),
            "sgd" => Ok(Optimizer::Sgd),
            other => Err(Error::Argument(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "D")]
    pub depth: usize,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub runs: usize,
    /// `None` uses the full split.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub root_seed: u64,
    pub optimizer: Optimizer,
}

impl TrainConfig {
    pub fn new(l: usize, depth: usize) -> Self {
        Self {
            l,
            depth,
            m: 2,
            n: 4,
            k: 2,
            learning_rate: 0.008,
            epochs: 2,
            batch_size: 32,
            runs: 5,
            train_limit: Some(4000),
            test_limit: Some(1000),
            root_seed: 42,
            optimizer: Optimizer::Adam,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture::new(self.m, self.n, self.l, self.k, self.depth)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "D")]
    pub depth: usize,
    pub run: usize,
    pub seed: u64,
    /// Mean training loss at the initial parameters.
    pub initial_loss: f64,
    /// Mean training loss over each epoch's minibatches.
    pub epoch_losses: Vec<f64>,
    pub test_accuracy: f64,
}

/// Numerically stable softmax cross-entropy and its gradient in the logits.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() + max - logits[label];
    let grad = exps
        .iter()
        .enumerate()
        .map(|(i, e)| e / total - if i == label { 1.0 } else { 0.0 })
        .collect();
    (loss, grad)
}

/// `⟨Z_q⟩` for every qubit of the last `n` qubits.
fn z_expectations(state: &StateVector, n: usize) -> Vec<f64> {
    let mask = (1usize << n) - 1;
    let mut z = vec![0.0; n];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        let w = i & mask;
        for (q, zq) in z.iter_mut().enumerate() {
            if (w >> (n - 1 - q)) & 1 == 0 {
                *zq += p;
            } else {
                *zq -= p;
            }
        }
    }
    z
}

/// LCQNN classifier reading one logit per working qubit.
#[derive(Debug, Clone)]
pub struct Classifier {
    model: LcqnnModel,
    circuit: Circuit,
}

impl Classifier {
    pub fn new(model: LcqnnModel) -> Result<Self> {
        if model.n() != NUM_CLASSES {
            return Err(Error::Architecture(format!(
                "classifier needs n = {NUM_CLASSES} working qubits, got {}",
                model.n()
            )));
        }
        let circuit = model.circuit(None)?;
        Ok(Self { model, circuit })
    }

    pub fn model(&self) -> &LcqnnModel {
        &self.model
    }

    fn input(&self, example: &MnistExample) -> Result<StateVector> {
        self.model.initial_state(Some(&example.encode()?))
    }

    pub fn logits(&self, params: &[f64], example: &MnistExample) -> Result<Vec<f64>> {
        let out = self.circuit.run(params, &self.input(example)?)?;
        Ok(z_expectations(&out, self.model.n()))
    }

    pub fn loss(&self, params: &[f64], example: &MnistExample) -> Result<f64> {
        Ok(softmax_cross_entropy(&self.logits(params, example)?, example.label as usize).0)
    }

    /// Loss and its gradient: one adjoint pass with `Σ_q (∂loss/∂z_q) Z_q`.
    pub fn loss_and_grad(&self, params: &[f64], example: &MnistExample) -> Result<(f64, Vec<f64>)> {
        let input = self.input(example)?;
        let z = z_expectations(&self.circuit.run(params, &input)?, self.model.n());
        let (loss, dz) = softmax_cross_entropy(&z, example.label as usize);
        let obs = Observable::PauliZSum(
            dz.iter()
                .enumerate()
                .map(|(q, &w)| ZTerm {
                    weight: w,
                    qubits: vec![q],
                })
                .collect(),
        );
        let (_, grad) = self.circuit.adjoint_gradient(params, &input, &obs, self.model.m())?;
        Ok((loss, grad))
    }

    pub fn predict(&self, params: &[f64], example: &MnistExample) -> Result<usize> {
        let z = self.logits(params, example)?;
        Ok(argmax(&z))
    }

    pub fn accuracy(&self, params: &[f64], examples: &[MnistExample]) -> Result<f64> {
        let hits = examples
            .par_iter()
            .map(|e| Ok(usize::from(self.predict(params, e)? == e.label as usize)))
            .collect::<Result<Vec<usize>>>()?;
        Ok(hits.iter().sum::<usize>() as f64 / examples.len() as f64)
    }

    pub fn mean_loss(&self, params: &[f64], examples: &[MnistExample]) -> Result<f64> {
        let losses = examples
            .par_iter()
            .map(|e| self.loss(params, e))
            .collect::<Result<Vec<f64>>>()?;
        Ok(losses.iter().sum::<f64>() / examples.len() as f64)
    }
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// `⟨Z_q⟩` on each working qubit after encoding `example`.
pub fn classify_logits(model: &LcqnnModel, alpha: &[f64], theta: &[f64], example: &MnistExample) -> Result<Vec<f64>> {
    let params = model.pack(alpha, theta)?;
    Classifier::new(model.clone())?.logits(&params, example)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains one run; parameters and shuffles come from stream `run`.
pub fn train_run(config: &TrainConfig, data: &Dataset, run: usize) -> Result<RunMetrics> {
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::Dataset("empty training or test set".into()));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::Argument("batch size and epochs must be positive".into()));
    }
    let clf = Classifier::new(LcqnnModel::new(config.architecture())?)?;
    let mut rng = RngStream::new(config.root_seed, run as u64).rng();
    let mut params = uniform_angles(&mut rng, clf.model().num_params());
    let initial_loss = clf.mean_loss(&params, &data.train)?;
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let results = batch
                .par_iter()
                .map(|&i| clf.loss_and_grad(&params, &data.train[i]))
                .collect::<Result<Vec<_>>>()?;
            let mut grad = vec![0.0; params.len()];
            let mut batch_loss = 0.0;
            for (loss, g) in &results {
                batch_loss += loss;
                grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "L={} D={} run {run} epoch {epoch} batch {b}: batch loss {batch_loss}",
                    config.l, config.depth
                )));
            }
            total += batch_loss;
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            match config.optimizer {
                Optimizer::Adam => adam.step(&mut params, &grad, config.learning_rate),
                Optimizer::Sgd => params
                    .iter_mut()
                    .zip(&grad)
                    .for_each(|(p, g)| *p -= config.learning_rate * g),
            }
        }
        epoch_losses.push(total / order.len() as f64);
        log::debug!("L={} D={} run {run} epoch {epoch}: loss {:.4}", config.l, config.depth, epoch_losses[epoch]);
    }
    Ok(RunMetrics {
        l: config.l,
        depth: config.depth,
        run,
        seed: config.root_seed,
        initial_loss,
        epoch_losses,
        test_accuracy: clf.accuracy(&params, &data.test)?,
    })
}

/// All `config.runs` runs, in run order.
pub fn train(config: &TrainConfig, data: &Dataset) -> Result<Vec<RunMetrics>> {
    (0..config.runs)
        .into_par_iter()
        .map(|r| train_run(config, data, r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "D")]
    pub depth: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation over runs.
    pub std_accuracy: f64,
    pub runs: Vec<RunMetrics>,
}

impl GridCell {
    fn from_runs(l: usize, depth: usize, runs: Vec<RunMetrics>) -> Self {
        let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        let var = if accs.len() > 1 {
            accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            l,
            depth,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            runs,
        }
    }
}

/// The `(L, D)` accuracy grid, row-major in `l_list`.
pub fn run_grid(l_list: &[usize], d_list: &[usize], base: &TrainConfig, data: &Dataset) -> Result<Vec<GridCell>> {
    let mut cells = Vec::with_capacity(l_list.len() * d_list.len());
    for &l in l_list {
        for &d in d_list {
            let config = TrainConfig {
                l,
                depth: d,
                ..base.clone()
            };
            let runs = train(&config, data)?;
            let cell = GridCell::from_runs(l, d, runs);
            log::info!("L={l} D={d}: accuracy {:.4} ± {:.4}", cell.mean_accuracy, cell.std_accuracy);
            cells.push(cell);
        }
    }
    Ok(cells)
}

pub fn cell_accuracy(cells: &[GridCell], l: usize, depth: usize) -> Option<f64> {
    cells
        .iter()
        .find(|c| c.l == l && c.depth == depth)
        .map(|c| c.mean_accuracy)
}

/// Pairwise comparisons along rows (more blocks) and columns (more depth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub description: String,
    pub holds: bool,
}

pub fn trend_report(cells: &[GridCell]) -> Vec<TrendCheck> {
    let mut ls: Vec<usize> = cells.iter().map(|c| c.l).collect();
    let mut ds: Vec<usize> = cells.iter().map(|c| c.depth).collect();
    ls.dedup();
    ds.sort_unstable();
    ds.dedup();
    let (l_lo, l_hi) = (ls.iter().min(), ls.iter().max());
    let (d_lo, d_hi) = (ds.first(), ds.last());
    let mut out = Vec::new();
    if let (Some(&lo), Some(&hi)) = (l_lo, l_hi) {
        if lo != hi {
            for &d in &ds {
                if let (Some(a), Some(b)) = (cell_accuracy(cells, hi, d), cell_accuracy(cells, lo, d)) {
                    out.push(TrendCheck {
                        description: format!("acc(L={hi},D={d}) > acc(L={lo},D={d})"),
                        holds: a > b,
                    });
                }
            }
        }
    }
    if let (Some(&lo), Some(&hi)) = (d_lo, d_hi) {
        if lo != hi {
            for &l in &ls {
                if let (Some(a), Some(b)) = (cell_accuracy(cells, l, hi), cell_accuracy(cells, l, lo)) {
                    out.push(TrendCheck {
                        description: format!("acc(L={l},D={hi}) > acc(L={l},D={lo})"),
                        holds: a > b,
                    });
                }
            }
        }
    }
    out
}
