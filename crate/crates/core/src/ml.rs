//! A one-hidden-layer ReLU classifier trained with binary cross-entropy.
//!
//! Weights are flattened as `[W (h×p, row-major), b (h), v (h), c]` so the
//! network is `logit(x) = c + Σ_j v_j · relu(W_j·x + b_j)`, and the solver
//! sees an ordinary vector of dimension `h·p + 2h + 1`.
//!
//! Three oracles evaluate the loss:
//! * full batch, exact and repeatable;
//! * fixed mini-batch, redrawn on every function evaluation (not repeatable in
//!   `x`, so it sits outside the bounded-noise model on purpose);
//! * adaptive batch, grown by doubling until both the loss and gradient
//!   errors against the full batch are within tolerance.

use std::cell::{Cell, RefCell};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::oracle::{keyed_rng, Objective, Oracle};

pub const DEFAULT_HIDDEN: usize = 10;
const TAG_ADAPTIVE: &[u8] = b"ml/adaptive";
const FIRST_ADAPTIVE_BATCH: usize = 16;

/// Row-major feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    p: usize,
    labels: Vec<f64>,
    standardized: bool,
}

impl Dataset {
    pub fn new(features: Vec<f64>, p: usize, labels: Vec<f64>) -> Result<Self> {
        if p == 0 || labels.is_empty() || features.len() != p * labels.len() {
            return Err(Error::InvalidArgument(format!(
                "features ({} values) do not form {} rows of width {p}",
                features.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            features,
            p,
            labels,
            standardized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features_dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Column mean and population variance.
    pub fn column_stats(&self, j: usize) -> (f64, f64) {
        let n = self.len() as f64;
        let mean = (0..self.len()).map(|i| self.row(i)[j]).sum::<f64>() / n;
        let var = (0..self.len()).map(|i| (self.row(i)[j] - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    /// Shifts and scales every column to mean 0 and variance 1. Constant
    /// columns are only centred.
    pub fn standardize(&mut self) {
        for j in 0..self.p {
            let (mean, var) = self.column_stats(j);
            let sd = var.sqrt();
            for i in 0..self.len() {
                let v = &mut self.features[i * self.p + j];
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
        // A second centring pass removes the rounding residue of the first.
        for j in 0..self.p {
            let (mean, _) = self.column_stats(j);
            for i in 0..self.len() {
                self.features[i * self.p + j] -= mean;
            }
        }
        self.standardized = true;
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.p).map(|j| format!("f{j}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",label\n");
        for i in 0..self.len() {
            for v in self.row(i) {
                let _ = write!(out, "{v:?},");
            }
            let _ = writeln!(out, "{}", self.labels[i] as u8);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses the `f1..fp,label` format written by [`Dataset::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty dataset file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols.last() != Some(&"label") {
            return Err(Error::InvalidArgument("header must be f1..fp,label".into()));
        }
        let p = cols.len() - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != p + 1 {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 1,
                    fields.len(),
                    p + 1
                )));
            }
            for f in &fields[..p] {
                features.push(
                    f.parse::<f64>()
                        .map_err(|e| Error::InvalidArgument(format!("row {}: {e}", lineno + 1)))?,
                );
            }
            labels.push(match fields[p] {
                "0" => 0.0,
                "1" => 1.0,
                other => return Err(Error::InvalidArgument(format!("row {}: bad label '{other}'", lineno + 1))),
            });
        }
        let mut d = Dataset::new(features, p, labels)?;
        d.standardized = (0..p).all(|j| {
            let (m, v) = d.column_stats(j);
            m.abs() <= 1e-10 && (v - 1.0).abs() <= 1e-8
        });
        Ok(d)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Two unit-covariance Gaussian clusters centred at `±(separation/2)·e₁`,
/// alternating labels, then standardized.
pub fn synth_dataset(n: usize, p: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || p == 0 {
        return Err(Error::InvalidArgument(format!("need N >= 2 and p >= 1, got N={n}, p={p}")));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument(format!("separation must be nonnegative, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as f64;
        let shift = if y == 1.0 { separation / 2.0 } else { -separation / 2.0 };
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            features.push(if j == 0 { z + shift } else { z });
        }
        labels.push(y);
    }
    let mut d = Dataset::new(features, p, labels)?;
    d.standardize();
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpShape {
    pub p: usize,
    pub h: usize,
}

impl MlpShape {
    pub fn new(p: usize) -> Self {
        Self { p, h: DEFAULT_HIDDEN }
    }

    pub fn dim(&self) -> usize {
        self.h * self.p + 2 * self.h + 1
    }

    /// Uniform on `[-0.5, 0.5]` per coordinate.
    pub fn init_weights(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim()).map(|_| rng.random_range(-0.5..=0.5)).collect()
    }

    pub fn logit(&self, w: &[f64], x: &[f64]) -> f64 {
        let (wh, rest) = w.split_at(self.h * self.p);
        let (b, rest) = rest.split_at(self.h);
        let (v, c) = rest.split_at(self.h);
        let mut z = c[0];
        for j in 0..self.h {
            let row = &wh[j * self.p..(j + 1) * self.p];
            let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[j];
            if s > 0.0 {
                z += v[j] * s;
            }
        }
        z
    }

    /// Adds one sample's loss and gradient to the running sums.
    fn accumulate(&self, w: &[f64], x: &[f64], y: f64, loss: &mut f64, grad: &mut [f64]) {
        let hp = self.h * self.p;
        let (wh, rest) = w.split_at(hp);
        let (b, rest) = rest.split_at(self.h);
        let (v, c) = rest.split_at(self.h);
        let mut pre = [0.0f64; 64];
        let mut pre_vec;
        let pre: &mut [f64] = if self.h <= pre.len() {
            &mut pre[..self.h]
        } else {
            pre_vec = vec![0.0; self.h];
            &mut pre_vec
        };
        let mut z = c[0];
        for j in 0..self.h {
            let row = &wh[j * self.p..(j + 1) * self.p];
            pre[j] = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[j];
            if pre[j] > 0.0 {
                z += v[j] * pre[j];
            }
        }
        *loss += softplus(z) - y * z;
        let dz = sigmoid(z) - y;
        let (gw, grest) = grad.split_at_mut(hp);
        let (gb, grest) = grest.split_at_mut(self.h);
        let (gv, gc) = grest.split_at_mut(self.h);
        gc[0] += dz;
        for j in 0..self.h {
            if pre[j] > 0.0 {
                gv[j] += dz * pre[j];
                let back = dz * v[j];
                gb[j] += back;
                for (g, xi) in gw[j * self.p..(j + 1) * self.p].iter_mut().zip(x) {
                    *g += back * xi;
                }
            }
        }
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean loss and gradient over the samples in `indices`.
pub fn batch_loss_grad(shape: &MlpShape, data: &Dataset, w: &[f64], indices: &[usize]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut grad = vec![0.0; shape.dim()];
    for &i in indices {
        shape.accumulate(w, data.row(i), data.label(i), &mut loss, &mut grad);
    }
    let k = indices.len() as f64;
    grad.iter_mut().for_each(|g| *g /= k);
    (loss / k, grad)
}

pub fn full_loss_grad(shape: &MlpShape, data: &Dataset, w: &[f64]) -> (f64, Vec<f64>) {
    let all: Vec<usize> = (0..data.len()).collect();
    batch_loss_grad(shape, data, w, &all)
}

/// Fraction of samples whose predicted class matches the label; a logit of
/// exactly zero counts as the positive class.
pub fn accuracy(shape: &MlpShape, data: &Dataset, w: &[f64]) -> f64 {
    let hits = (0..data.len())
        .filter(|&i| {
            let pred = if shape.logit(w, data.row(i)) >= 0.0 { 1.0 } else { 0.0 };
            pred == data.label(i)
        })
        .count();
    hits as f64 / data.len() as f64
}

/// Exact full-batch loss.
#[derive(Debug, Clone)]
pub struct FullBatchObjective {
    data: Arc<Dataset>,
    shape: MlpShape,
}

impl FullBatchObjective {
    pub fn new(data: Arc<Dataset>, shape: MlpShape) -> Result<Self> {
        if shape.p != data.features_dim() {
            return Err(Error::DimensionMismatch {
                expected: data.features_dim(),
                got: shape.p,
            });
        }
        Ok(Self { data, shape })
    }
}

impl Objective for FullBatchObjective {
    fn dims(&self) -> usize {
        self.shape.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        full_loss_grad(&self.shape, &self.data, x).0
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        full_loss_grad(&self.shape, &self.data, x).1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchMode {
    Full,
    Fixed { batch_size: usize },
    Adaptive { eps_f: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveEval {
    pub f: f64,
    pub g: Vec<f64>,
    pub samples_used: usize,
}

/// Grows a batch `16, 32, 64, …` (capped at `N`) along a permutation keyed by
/// `(seed, w)` until `|f_B − f| ≤ eps_f` and `‖g_B − ∇f‖ ≤ √eps_f` against the
/// full-batch values. Batches are nested, so each step only adds new samples.
pub fn adaptive_batch_eval(shape: &MlpShape, data: &Dataset, w: &[f64], eps_f: f64, seed: u64) -> AdaptiveEval {
    let (f_full, g_full) = full_loss_grad(shape, data, w);
    adaptive_against(shape, data, w, eps_f, seed, f_full, &g_full)
}

fn adaptive_against(
    shape: &MlpShape,
    data: &Dataset,
    w: &[f64],
    eps_f: f64,
    seed: u64,
    f_full: f64,
    g_full: &[f64],
) -> AdaptiveEval {
    let n = data.len();
    let eps_g = eps_f.sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut keyed_rng(seed, TAG_ADAPTIVE, w));
    let mut loss = 0.0;
    let mut grad = vec![0.0; shape.dim()];
    let mut used = 0;
    let mut size = FIRST_ADAPTIVE_BATCH.min(n);
    loop {
        if size >= n {
            return AdaptiveEval {
                f: f_full,
                g: g_full.to_vec(),
                samples_used: n,
            };
        }
        for &i in &order[used..size] {
            shape.accumulate(w, data.row(i), data.label(i), &mut loss, &mut grad);
        }
        used = size;
        let k = used as f64;
        let f = loss / k;
        let g: Vec<f64> = grad.iter().map(|v| v / k).collect();
        if (f - f_full).abs() <= eps_f && dist(&g, g_full) <= eps_g {
            return AdaptiveEval { f, g, samples_used: used };
        }
        size *= 2;
    }
}

/// Mini-batch cross-entropy oracle.
///
/// Carries per-run mutable state (batch counter, cache, sample tally), so one
/// instance must not be shared across concurrent runs.
#[derive(Debug)]
pub struct BceOracle {
    truth: FullBatchObjective,
    mode: BatchMode,
    seed: u64,
    counter: Cell<u64>,
    batch: RefCell<Vec<usize>>,
    cache: RefCell<Option<(Vec<f64>, AdaptiveEval)>>,
    last_batch: Cell<usize>,
    total_samples: Cell<u64>,
}

impl BceOracle {
    pub fn new(data: Arc<Dataset>, shape: MlpShape, mode: BatchMode, seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        match mode {
            BatchMode::Fixed { batch_size } if batch_size == 0 || batch_size > data.len() => {
                return Err(Error::InvalidArgument(format!(
                    "batch size {batch_size} must lie in [1, {}]",
                    data.len()
                )));
            }
            BatchMode::Adaptive { eps_f } if !(eps_f >= 0.0) => {
                return Err(Error::InvalidArgument(format!("adaptive eps_f must be nonnegative, got {eps_f}")));
            }
            _ => {}
        }
        Ok(Self {
            truth: FullBatchObjective::new(data, shape)?,
            mode,
            seed,
            counter: Cell::new(0),
            batch: RefCell::new(Vec::new()),
            cache: RefCell::new(None),
            last_batch: Cell::new(0),
            total_samples: Cell::new(0),
        })
    }

    pub fn mode(&self) -> BatchMode {
        self.mode
    }

    /// Samples used by the most recent evaluation.
    pub fn last_batch_size(&self) -> usize {
        self.last_batch.get()
    }

    /// Samples consumed over all evaluations so far.
    pub fn total_samples(&self) -> u64 {
        self.total_samples.get()
    }

    fn record(&self, used: usize) {
        self.last_batch.set(used);
        self.total_samples.set(self.total_samples.get() + used as u64);
    }

    fn draw_batch(&self, batch_size: usize) {
        let c = self.counter.get() + 1;
        self.counter.set(c);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(c);
        *self.batch.borrow_mut() = index::sample(&mut rng, self.truth.data.len(), batch_size).into_vec();
    }

    fn adaptive(&self, x: &[f64], eps_f: f64) -> AdaptiveEval {
        if let Some((cx, ev)) = self.cache.borrow().as_ref() {
            if cx.as_slice() == x {
                self.last_batch.set(ev.samples_used);
                return ev.clone();
            }
        }
        let ev = adaptive_batch_eval(&self.truth.shape, &self.truth.data, x, eps_f, self.seed);
        self.record(ev.samples_used);
        *self.cache.borrow_mut() = Some((x.to_vec(), ev.clone()));
        ev
    }
}

impl Oracle for BceOracle {
    fn dims(&self) -> usize {
        self.truth.dims()
    }

    fn eval_f(&self, x: &[f64]) -> f64 {
        match self.mode {
            BatchMode::Full => {
                self.record(self.truth.data.len());
                self.truth.value(x)
            }
            BatchMode::Fixed { batch_size } => {
                self.draw_batch(batch_size);
                self.record(batch_size);
                batch_loss_grad(&self.truth.shape, &self.truth.data, x, &self.batch.borrow()).0
            }
            BatchMode::Adaptive { eps_f } => self.adaptive(x, eps_f).f,
        }
    }

    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        match self.mode {
            BatchMode::Full => {
                self.record(self.truth.data.len());
                self.truth.subgradient(x)
            }
            BatchMode::Fixed { batch_size } => {
                if self.batch.borrow().is_empty() {
                    self.draw_batch(batch_size);
                }
                self.record(batch_size);
                batch_loss_grad(&self.truth.shape, &self.truth.data, x, &self.batch.borrow()).1
            }
            BatchMode::Adaptive { eps_f } => self.adaptive(x, eps_f).g,
        }
    }

    fn truth(&self) -> Option<&dyn Objective> {
        Some(&self.truth)
    }

    fn is_repeatable(&self) -> bool {
        !matches!(self.mode, BatchMode::Fixed { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use noisy_gs_testkit::{finite_diff_grad, median};

    fn data(n: usize, p: usize, sep: f64, seed: u64) -> Arc<Dataset> {
        Arc::new(synth_dataset(n, p, sep, seed).unwrap())
    }

    #[test]
    fn synthetic_data_is_standardized() {
        for (n, p) in [(4, 1), (101, 3), (1024, 13)] {
            let d = synth_dataset(n, p, 4.0, 9).unwrap();
            assert!(d.is_standardized());
            for j in 0..p {
                let (m, v) = d.column_stats(j);
                assert!(m.abs() <= 1e-10, "{m}");
                assert!((v - 1.0).abs() <= 1e-8, "{v}");
            }
            let pos = (0..n).filter(|&i| d.label(i) == 1.0).count();
            assert_eq!(pos, n / 2);
        }
    }

    #[test]
    fn wide_separation_is_separable_on_first_feature() {
        let d = synth_dataset(4, 1, 100.0, 1).unwrap();
        assert!((0..4).all(|i| (d.row(i)[0] > 0.0) == (d.label(i) == 1.0)));
    }

    #[test]
    fn zero_weights_give_ln2_and_half_accuracy() {
        let d = data(64, 3, 2.0, 2);
        let shape = MlpShape::new(3);
        let w = vec![0.0; shape.dim()];
        let (f, _) = full_loss_grad(&shape, &d, &w);
        assert!((f - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(accuracy(&shape, &d, &w), 0.5);
    }

    #[test]
    fn shape_dimension() {
        assert_eq!(MlpShape::new(13).dim(), 10 * 13 + 21);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = data(50, 4, 2.0, 3);
        let shape = MlpShape::new(4);
        let obj = FullBatchObjective::new(d.clone(), shape).unwrap();
        let mut checked = 0;
        let mut seed = 0;
        while checked < 20 {
            seed += 1;
            let w = shape.init_weights(seed);
            // Skip points within finite-difference reach of a ReLU kink.
            let near_kink = (0..d.len()).any(|i| {
                (0..shape.h).any(|j| {
                    let row = &w[j * shape.p..(j + 1) * shape.p];
                    let s: f64 = row.iter().zip(d.row(i)).map(|(a, b)| a * b).sum::<f64>() + w[shape.h * shape.p + j];
                    s.abs() < 1e-4
                })
            });
            if near_kink {
                continue;
            }
            checked += 1;
            let g = obj.subgradient(&w);
            let fd = finite_diff_grad(|x| obj.value(x), &w, 1e-6).unwrap();
            let scale = g.iter().map(|v| v.abs()).fold(1e-3, f64::max);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-5 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn full_mode_is_bitwise_repeatable() {
        let d = data(40, 2, 2.0, 4);
        let shape = MlpShape::new(2);
        let o = BceOracle::new(d, shape, BatchMode::Full, 0).unwrap();
        let w = shape.init_weights(1);
        assert_eq!(o.eval_f(&w).to_bits(), o.eval_f(&w).to_bits());
        assert_eq!(o.eval_g(&w), o.eval_g(&w));
        assert!(o.is_repeatable());
    }

    #[test]
    fn disjoint_batches_average_to_full_batch() {
        let d = data(1024, 5, 3.0, 5);
        let shape = MlpShape::new(5);
        let w = shape.init_weights(2);
        let (full, _) = full_loss_grad(&shape, &d, &w);
        let idx: Vec<usize> = (0..d.len()).collect();
        let chunks: Vec<f64> = idx.chunks(128).map(|c| batch_loss_grad(&shape, &d, &w, c).0).collect();
        let avg = chunks.iter().sum::<f64>() / chunks.len() as f64;
        assert!((avg - full).abs() <= 1e-12);
    }

    #[test]
    fn fixed_mode_redraws_per_function_call() {
        let d = data(256, 2, 2.0, 6);
        let shape = MlpShape::new(2);
        let o = BceOracle::new(d, shape, BatchMode::Fixed { batch_size: 32 }, 1).unwrap();
        let w = shape.init_weights(3);
        let a = o.eval_f(&w);
        let b = o.eval_f(&w);
        assert_ne!(a, b);
        assert!(!o.is_repeatable());
        assert_eq!(o.last_batch_size(), 32);
        assert!(BceOracle::new(data(10, 1, 1.0, 0), MlpShape::new(1), BatchMode::Fixed { batch_size: 11 }, 0).is_err());
    }

    #[test]
    fn adaptive_extremes() {
        let d = data(200, 3, 2.0, 7);
        let shape = MlpShape::new(3);
        let w = shape.init_weights(4);
        let loose = adaptive_batch_eval(&shape, &d, &w, f64::INFINITY, 0);
        assert_eq!(loose.samples_used, 16);
        let tight = adaptive_batch_eval(&shape, &d, &w, 0.0, 0);
        assert_eq!(tight.samples_used, 200);
        let (f, g) = full_loss_grad(&shape, &d, &w);
        assert_eq!(tight.f, f);
        assert_eq!(tight.g, g);
    }

    #[test]
    fn adaptive_samples_shrink_as_tolerance_grows() {
        let d = data(1024, 4, 2.0, 8);
        let shape = MlpShape::new(4);
        for seed in 0..5 {
            let w = shape.init_weights(seed);
            let mut last = usize::MAX;
            for eps in [0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 1.0, f64::INFINITY] {
                let used = adaptive_batch_eval(&shape, &d, &w, eps, seed).samples_used;
                assert!(used <= last);
                last = used;
            }
        }
    }

    #[test]
    fn adaptive_median_fixture() {
        let d = data(1024, 13, 4.0, 0);
        let shape = MlpShape::new(13);
        let used: Vec<f64> = (0..20)
            .map(|s| adaptive_batch_eval(&shape, &d, &shape.init_weights(s), 0.05, s).samples_used as f64)
            .collect();
        let med = median(&used);
        assert!(med > 16.0 && med < 1024.0, "{med}");
    }

    #[test]
    fn csv_round_trip() {
        let d = synth_dataset(10, 3, 2.0, 9).unwrap();
        let back = Dataset::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back, d);
        assert!(d.to_csv().starts_with("f1,f2,f3,label\n"));
        assert!(Dataset::from_csv("f1,label\n0.5,2\n").is_err());
        assert!(Dataset::from_csv("f1,f2\n0.5,1\n").is_err());
    }

    #[test]
    fn separator_gives_full_accuracy() {
        let d = synth_dataset(4, 1, 100.0, 1).unwrap();
        let shape = MlpShape::new(1);
        // Two units give logit = relu(x) - relu(-x) = x.
        let mut w = vec![0.0; shape.dim()];
        w[0] = 1.0; // W_0
        w[1] = -1.0; // W_1
        w[shape.h * shape.p + shape.h] = 1.0; // v_0
        w[shape.h * shape.p + shape.h + 1] = -1.0; // v_1
        assert_eq!(accuracy(&shape, &d, &w), 1.0);
    }
}
