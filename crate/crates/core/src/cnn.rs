//! Compact convolutional classifier for multi-class authentication.
//!
//! Architecture: `conv3×3 (c1) → ReLU → maxpool2 → conv3×3 (c2) → ReLU →
//! maxpool2 → dense → softmax`, with zero "same" padding. Feature maps are
//! stored pixel-major (`rows = pixels, cols = channels`) so convolutions
//! reduce to im2col matrix products.
//!
//! Training is minibatch SGD with momentum on cross-entropy. Each trainable
//! layer gets `lr_base × multiplier`, with multipliers non-decreasing in
//! depth.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{group_into_images, FingerprintImage, ImageSet, ImagingSpec};
use crate::iqcore::{partition, seeded_rng, Dataset, SatId, SplitSpec};

/// Layer shapes of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CnnArch {
    pub input_side: usize,
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    pub n_classes: usize,
}

impl CnnArch {
    pub fn validate(&self) -> Result<()> {
        if self.input_side < 4 || self.input_side % 4 != 0 {
            return Err(Error::invalid(format!(
                "input side must be a positive multiple of 4, got {}",
                self.input_side
            )));
        }
        if self.conv1_channels == 0 || self.conv2_channels == 0 {
            return Err(Error::invalid("channel counts must be >= 1"));
        }
        if self.n_classes < 2 {
            return Err(Error::invalid("at least 2 classes required"));
        }
        Ok(())
    }

    fn dense_inputs(&self) -> usize {
        (self.input_side / 4).pow(2) * self.conv2_channels
    }

    /// Start offsets of `[W1, b1, W2, b2, Wf, bf, end]` in the flat vector.
    fn offsets(&self) -> [usize; 7] {
        let k1 = 9 * self.conv1_channels;
        let k2 = 9 * self.conv1_channels * self.conv2_channels;
        let kf = self.dense_inputs() * self.n_classes;
        let mut o = [0; 7];
        let sizes = [k1, self.conv1_channels, k2, self.conv2_channels, kf, self.n_classes];
        for i in 0..6 {
            o[i + 1] = o[i] + sizes[i];
        }
        o
    }

    pub fn n_params(&self) -> usize {
        self.offsets()[6]
    }
}

/// Training configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct CnnSpec {
    pub input_side: usize,
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    pub lr_base: f64,
    /// One multiplier per trainable layer: conv1, conv2, dense.
    pub lr_multipliers: [f64; 3],
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for CnnSpec {
    fn default() -> Self {
        CnnSpec {
            input_side: 64,
            conv1_channels: 16,
            conv2_channels: 32,
            lr_base: 0.01,
            lr_multipliers: [1.0, 2.0, 4.0],
            epochs: 20,
            batch_size: 16,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl CnnSpec {
    pub fn arch(&self, n_classes: usize) -> CnnArch {
        CnnArch {
            input_side: self.input_side,
            conv1_channels: self.conv1_channels,
            conv2_channels: self.conv2_channels,
            n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr_multipliers.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid(format!(
                "learning-rate multipliers must be non-decreasing with depth: {:?}",
                self.lr_multipliers
            )));
        }
        if self.lr_multipliers.iter().any(|&m| !(m >= 0.0)) || !(self.lr_base >= 0.0) {
            return Err(Error::invalid("learning rates must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Effective learning rate of each trainable layer, shallow to deep.
    pub fn layer_rates(&self) -> [f64; 3] {
        self.lr_multipliers.map(|m| self.lr_base * m)
    }

    pub fn to_kv(&self, cfg: &mut crate::config::KvConfig, prefix: &str) {
        let m = self.lr_multipliers;
        cfg.set(format!("{prefix}input_side"), self.input_side)
            .set(format!("{prefix}conv1_channels"), self.conv1_channels)
            .set(format!("{prefix}conv2_channels"), self.conv2_channels)
            .set(format!("{prefix}lr_base"), self.lr_base)
            .set(format!("{prefix}lr_multipliers"), format!("{},{},{}", m[0], m[1], m[2]))
            .set(format!("{prefix}epochs"), self.epochs)
            .set(format!("{prefix}batch_size"), self.batch_size)
            .set(format!("{prefix}momentum"), self.momentum)
            .set(format!("{prefix}seed"), self.seed);
    }

    pub fn from_kv(mut self, cfg: &crate::config::KvConfig, prefix: &str) -> Result<Self> {
        let key = |k: &str| format!("{prefix}{k}");
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = cfg.get(&key(stringify!($field)))? {
                    self.$field = v;
                }
            };
        }
        take!(input_side);
        take!(conv1_channels);
        take!(conv2_channels);
        take!(lr_base);
        take!(epochs);
        take!(batch_size);
        take!(momentum);
        take!(seed);
        if let Some(text) = cfg.get_str(&key("lr_multipliers")) {
            let v: Vec<f64> = text
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::invalid(format!("bad lr_multipliers {text:?}")))?;
            self.lr_multipliers = v
                .try_into()
                .map_err(|_| Error::invalid("lr_multipliers needs exactly 3 values"))?;
        }
        self.validate()?;
        Ok(self)
    }
}

/// Trained network plus the class-index ↔ satellite mapping.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactCnnModel {
    pub arch: CnnArch,
    pub params: Vec<f64>,
    /// `labels[k]` is the satellite of output `k`; strictly increasing.
    pub labels: Vec<SatId>,
}

struct Tape {
    cols1: Array2<f64>,
    z1: Array2<f64>,
    idx1: Vec<usize>,
    cols2: Array2<f64>,
    z2: Array2<f64>,
    idx2: Vec<usize>,
    flat: Vec<f64>,
    probs: Vec<f64>,
}

fn im2col(input: ArrayView2<'_, f64>, side: usize) -> Array2<f64> {
    let c = input.ncols();
    let mut cols = Array2::zeros((side * side, 9 * c));
    for y in 0..side {
        for x in 0..side {
            let mut row = cols.row_mut(y * side + x);
            let row = row.as_slice_mut().unwrap();
            for ky in 0..3 {
                let sy = y + ky;
                if sy == 0 || sy > side {
                    continue;
                }
                for kx in 0..3 {
                    let sx = x + kx;
                    if sx == 0 || sx > side {
                        continue;
                    }
                    let src = input.row((sy - 1) * side + sx - 1);
                    let k = (ky * 3 + kx) * c;
                    row[k..k + c].copy_from_slice(src.as_slice().unwrap());
                }
            }
        }
    }
    cols
}

fn col2im(dcols: &Array2<f64>, side: usize, c: usize) -> Array2<f64> {
    let mut out = Array2::zeros((side * side, c));
    for y in 0..side {
        for x in 0..side {
            let row = dcols.row(y * side + x);
            for ky in 0..3 {
                let sy = y + ky;
                if sy == 0 || sy > side {
                    continue;
                }
                for kx in 0..3 {
                    let sx = x + kx;
                    if sx == 0 || sx > side {
                        continue;
                    }
                    let k = (ky * 3 + kx) * c;
                    let mut dst = out.row_mut((sy - 1) * side + sx - 1);
                    for ci in 0..c {
                        dst[ci] += row[k + ci];
                    }
                }
            }
        }
    }
    out
}

/// 2×2 max pool; returns the pooled map and, per output entry, the source
/// pixel of the maximum (first one on ties).
fn maxpool(a: &Array2<f64>, side: usize) -> (Array2<f64>, Vec<usize>) {
    let c = a.ncols();
    let half = side / 2;
    let mut out = Array2::zeros((half * half, c));
    let mut idx = vec![0; half * half * c];
    for oy in 0..half {
        for ox in 0..half {
            let o = oy * half + ox;
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let p = (2 * oy + dy) * side + 2 * ox + dx;
                    if a[[p, ch]] > best {
                        best = a[[p, ch]];
                        arg = p;
                    }
                }
                out[[o, ch]] = best;
                idx[o * c + ch] = arg;
            }
        }
    }
    (out, idx)
}

fn unpool(d: ArrayView2<'_, f64>, idx: &[usize], side: usize) -> Array2<f64> {
    let c = d.ncols();
    let mut out = Array2::zeros((side * side, c));
    for (o, row) in d.rows().into_iter().enumerate() {
        for ch in 0..c {
            out[[idx[o * c + ch], ch]] += row[ch];
        }
    }
    out
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

impl CompactCnnModel {
    /// He-uniform convolutions, Glorot-uniform dense layer, zero biases.
    pub fn init(arch: CnnArch, labels: Vec<SatId>, seed: u64) -> Result<Self> {
        arch.validate()?;
        if labels.len() != arch.n_classes || labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("labels must be strictly increasing, one per class"));
        }
        let mut rng = seeded_rng(seed, 0xC0);
        let o = arch.offsets();
        let mut params = vec![0.0; arch.n_params()];
        let bounds = [
            (6.0 / 9.0f64).sqrt(),
            (6.0 / (9 * arch.conv1_channels) as f64).sqrt(),
            (6.0 / (arch.dense_inputs() + arch.n_classes) as f64).sqrt(),
        ];
        for (layer, b) in bounds.iter().enumerate() {
            for p in &mut params[o[2 * layer]..o[2 * layer + 1]] {
                *p = rng.random_range(-b..*b);
            }
        }
        Ok(CompactCnnModel { arch, params, labels })
    }

    fn views(&self) -> [ArrayView2<'_, f64>; 3] {
        let a = &self.arch;
        let o = a.offsets();
        [
            ArrayView2::from_shape((a.conv1_channels, 9), &self.params[o[0]..o[1]]).unwrap(),
            ArrayView2::from_shape((a.conv2_channels, 9 * a.conv1_channels), &self.params[o[2]..o[3]]).unwrap(),
            ArrayView2::from_shape((a.n_classes, a.dense_inputs()), &self.params[o[4]..o[5]]).unwrap(),
        ]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        let need = self.arch.input_side * self.arch.input_side;
        if x.len() != need {
            return Err(Error::DimensionMismatch {
                expected: need,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn run(&self, x: &[f64]) -> Tape {
        let a = &self.arch;
        let o = a.offsets();
        let [w1, w2, wf] = self.views();
        let s = a.input_side;
        let input = ArrayView2::from_shape((s * s, 1), x).unwrap();

        let cols1 = im2col(input, s);
        let mut z1 = Array2::zeros((s * s, a.conv1_channels));
        general_mat_mul(1.0, &cols1, &w1.t(), 0.0, &mut z1);
        z1 += &ndarray::ArrayView1::from(&self.params[o[1]..o[2]]);
        let (p1, idx1) = maxpool(&z1.mapv(|v| v.max(0.0)), s);

        let cols2 = im2col(p1.view(), s / 2);
        let mut z2 = Array2::zeros(((s / 2) * (s / 2), a.conv2_channels));
        general_mat_mul(1.0, &cols2, &w2.t(), 0.0, &mut z2);
        z2 += &ndarray::ArrayView1::from(&self.params[o[3]..o[4]]);
        let (p2, idx2) = maxpool(&z2.mapv(|v| v.max(0.0)), s / 2);

        let flat: Vec<f64> = p2.iter().copied().collect();
        let mut logits = wf.dot(&ndarray::ArrayView1::from(&flat));
        logits += &ndarray::ArrayView1::from(&self.params[o[5]..o[6]]);
        let probs = softmax(logits.as_slice().unwrap());
        Tape {
            cols1,
            z1,
            idx1,
            cols2,
            z2,
            idx2,
            flat,
            probs,
        }
    }

    /// Class probabilities for one image given as `side²` values in `[0, 1]`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.run(x).probs)
    }

    pub fn predict(&self, x: &[f64]) -> Result<SatId> {
        let p = self.forward(x)?;
        let k = (0..p.len()).fold(0, |b, k| if p[k] > p[b] { k } else { b });
        Ok(self.labels[k])
    }

    pub fn predict_images(&self, images: &[FingerprintImage]) -> Result<Vec<SatId>> {
        images.par_iter().map(|im| self.predict(&im.to_unit())).collect()
    }

    pub fn class_of(&self, sat: SatId) -> Option<usize> {
        self.labels.binary_search(&sat).ok()
    }

    /// Cross-entropy of one example and its gradient, accumulated into `grad`.
    fn backprop(&self, x: &[f64], class: usize, grad: &mut [f64]) -> f64 {
        let a = self.arch;
        let s = a.input_side;
        let o = a.offsets();
        let [_, w2, wf] = self.views();
        let t = self.run(x);
        let loss = -t.probs[class].max(f64::MIN_POSITIVE).ln();

        let mut dlogits = t.probs.clone();
        dlogits[class] -= 1.0;
        let (g_head, g_f) = grad.split_at_mut(o[4]);
        let (g_wf, g_bf) = g_f.split_at_mut(o[5] - o[4]);
        for (k, &dl) in dlogits.iter().enumerate() {
            g_bf[k] += dl;
            let row = &mut g_wf[k * t.flat.len()..(k + 1) * t.flat.len()];
            for (g, &f) in row.iter_mut().zip(&t.flat) {
                *g += dl * f;
            }
        }
        let dflat = wf.t().dot(&ndarray::ArrayView1::from(&dlogits));
        let q = s / 4;
        let dp2 = ArrayView2::from_shape((q * q, a.conv2_channels), dflat.as_slice().unwrap()).unwrap();

        let mut dz2 = unpool(dp2, &t.idx2, s / 2);
        ndarray::Zip::from(&mut dz2).and(&t.z2).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let (g_1, g_2) = g_head.split_at_mut(o[2]);
        let (g_w2, g_b2) = g_2.split_at_mut(o[3] - o[2]);
        let mut gw2 = ArrayViewMut2::from_shape((a.conv2_channels, 9 * a.conv1_channels), g_w2).unwrap();
        general_mat_mul(1.0, &dz2.t(), &t.cols2, 1.0, &mut gw2);
        ArrayViewMut1::from(g_b2).scaled_add(1.0, &dz2.sum_axis(Axis(0)));

        let mut dcols2 = Array2::zeros(t.cols2.dim());
        general_mat_mul(1.0, &dz2, &w2, 0.0, &mut dcols2);
        let dp1 = col2im(&dcols2, s / 2, a.conv1_channels);
        let mut dz1 = unpool(dp1.view(), &t.idx1, s);
        ndarray::Zip::from(&mut dz1).and(&t.z1).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let (g_w1, g_b1) = g_1.split_at_mut(o[1]);
        let mut gw1 = ArrayViewMut2::from_shape((a.conv1_channels, 9), g_w1).unwrap();
        general_mat_mul(1.0, &dz1.t(), &t.cols1, 1.0, &mut gw1);
        ArrayViewMut1::from(g_b1).scaled_add(1.0, &dz1.sum_axis(Axis(0)));
        loss
    }

    /// Mean cross-entropy over `(image, class index)` pairs and its gradient.
    pub fn loss_and_gradient(&self, batch: &[(&[f64], usize)]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        for (x, c) in batch {
            self.check_input(x)?;
            if *c >= self.arch.n_classes {
                return Err(Error::invalid(format!("class index {c} out of range")));
            }
        }
        let n = self.params.len();
        let (loss, mut grad) = batch
            .par_iter()
            .fold(
                || (0.0, vec![0.0; n]),
                |(l, mut g), (x, c)| {
                    let li = self.backprop(x, *c, &mut g);
                    (l + li, g)
                },
            )
            .reduce(
                || (0.0, vec![0.0; n]),
                |(la, mut ga), (lb, gb)| {
                    ga.iter_mut().zip(&gb).for_each(|(a, b)| *a += b);
                    (la + lb, ga)
                },
            );
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok((loss * inv, grad))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let a = &self.arch;
        w.write_all(b"CNN1")?;
        for v in [a.input_side, a.conv1_channels, a.conv2_channels, a.n_classes] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        for l in &self.labels {
            w.write_all(&u32::from(l.0).to_le_bytes())?;
        }
        for p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != b"CNN1" {
            return Err(bad("bad magic, expected CNN1"));
        }
        let next_u32 = |r: &mut R| -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            Ok(u32::from_le_bytes(b))
        };
        let dims: Vec<usize> = (0..4).map(|_| next_u32(&mut r).map(|v| v as usize)).collect::<Result<_>>()?;
        let arch = CnnArch {
            input_side: dims[0],
            conv1_channels: dims[1],
            conv2_channels: dims[2],
            n_classes: dims[3],
        };
        arch.validate().map_err(|e| bad(&e.to_string()))?;
        let labels = (0..arch.n_classes)
            .map(|_| {
                let v = next_u32(&mut r)?;
                u16::try_from(v).map(SatId).map_err(|_| bad("label out of range"))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut buf = vec![0u8; arch.n_params() * 8];
        r.read_exact(&mut buf).map_err(|_| bad("truncated weights"))?;
        let params: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(bad("non-finite weight"));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("labels not strictly increasing"));
        }
        Ok(CompactCnnModel { arch, params, labels })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(bytes.as_slice())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct CnnFit {
    /// Weights of the epoch with the best validation accuracy.
    pub model: CompactCnnModel,
    pub trace: Vec<EpochRecord>,
    /// 0 means the untrained initialization was never beaten.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
}

pub fn write_trace(path: impl AsRef<Path>, trace: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch,train_loss,val_accuracy\n");
    for r in trace {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_accuracy));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Fraction of images predicted as their own satellite.
pub fn accuracy(model: &CompactCnnModel, images: &[FingerprintImage]) -> Result<f64> {
    if images.is_empty() {
        return Ok(0.0);
    }
    let pred = model.predict_images(images)?;
    let hits = pred.iter().zip(images).filter(|(p, im)| **p == im.sat_id).count();
    Ok(hits as f64 / images.len() as f64)
}

/// Trains on `train`, picking the epoch with the best accuracy on `val`.
/// Classes are the satellites present in `train`.
pub fn train(spec: &CnnSpec, train: &[FingerprintImage], val: &[FingerprintImage]) -> Result<CnnFit> {
    spec.validate()?;
    let mut labels: Vec<SatId> = train.iter().map(|im| im.sat_id).collect();
    labels.sort_unstable();
    labels.dedup();
    let arch = spec.arch(labels.len());
    let mut model = CompactCnnModel::init(arch, labels, spec.seed)?;
    let mut data = Vec::with_capacity(train.len());
    for im in train {
        if im.side != spec.input_side {
            return Err(Error::DimensionMismatch {
                expected: spec.input_side,
                actual: im.side,
            });
        }
        data.push((im.to_unit(), model.class_of(im.sat_id).unwrap()));
    }
    if let Some(im) = val.iter().find(|im| model.class_of(im.sat_id).is_none()) {
        return Err(Error::MissingSatellite(im.sat_id));
    }

    let rates = spec.layer_rates();
    let o = arch.offsets();
    let layer_of = |k: usize| if k < o[2] { 0 } else if k < o[4] { 1 } else { 2 };
    let lr: Vec<f64> = (0..arch.n_params()).map(|k| rates[layer_of(k)]).collect();
    let mut velocity = vec![0.0; arch.n_params()];

    let mut best = model.clone();
    let mut best_acc = accuracy(&model, val)?;
    let mut best_epoch = 0;
    let mut trace = Vec::with_capacity(spec.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=spec.epochs {
        let stable = model.clone();
        let mut rng = seeded_rng(spec.seed, epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(spec.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| (data[i].0.as_slice(), data[i].1)).collect();
            let (loss, grad) = model.loss_and_gradient(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    checkpoint: Box::new(stable),
                });
            }
            loss_sum += loss * chunk.len() as f64;
            for k in 0..velocity.len() {
                velocity[k] = spec.momentum * velocity[k] - lr[k] * grad[k];
                model.params[k] += velocity[k];
            }
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                checkpoint: Box::new(stable),
            });
        }
        let train_loss = loss_sum / data.len().max(1) as f64;
        let val_accuracy = accuracy(&model, val)?;
        log::debug!("epoch {epoch}: train loss {train_loss:.4}, val accuracy {val_accuracy:.4}");
        trace.push(EpochRecord {
            epoch,
            train_loss,
            val_accuracy,
        });
        if val_accuracy > best_acc {
            best_acc = val_accuracy;
            best_epoch = epoch;
            best = model.clone();
        }
    }
    Ok(CnnFit {
        model: best,
        trace,
        best_epoch,
        best_val_accuracy: best_acc,
    })
}

/// Per-satellite 60/20/20 (or `split`) partition of an image set.
pub fn split_images(set: &ImageSet, split: &SplitSpec) -> Result<[Vec<FingerprintImage>; 3]> {
    split.validate()?;
    let mut out: [Vec<FingerprintImage>; 3] = Default::default();
    for (k, sat) in set.labels().into_iter().enumerate() {
        let imgs: Vec<FingerprintImage> = set.of(sat).into_iter().cloned().collect();
        if imgs.len() < crate::iqcore::MIN_SPLIT_ITEMS {
            return Err(Error::InsufficientImages {
                sat_id: sat,
                have: imgs.len(),
                need: crate::iqcore::MIN_SPLIT_ITEMS,
            });
        }
        let p = partition(&imgs, split, k as u64);
        out[0].extend(p.train);
        out[1].extend(p.val);
        out[2].extend(p.test);
    }
    Ok(out)
}

/// Validation accuracy for each candidate number of samples per image.
pub fn sweep_samples_per_image(
    d: &Dataset,
    candidates: &[usize],
    spec: &CnnSpec,
    split: &SplitSpec,
) -> Result<Vec<(usize, f64)>> {
    candidates
        .iter()
        .map(|&n| {
            let set = group_into_images(d, &ImagingSpec::new(spec.input_side, n))?;
            let [tr, va, _] = split_images(&set, split)?;
            let fit = train(spec, &tr, &va)?;
            log::info!("{n} samples/image: validation accuracy {:.4}", fit.best_val_accuracy);
            Ok((n, fit.best_val_accuracy))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_arch(side: usize, classes: usize) -> CnnArch {
        CnnArch {
            input_side: side,
            conv1_channels: 3,
            conv2_channels: 4,
            n_classes: classes,
        }
    }

    fn labels(n: usize) -> Vec<SatId> {
        (1..=n as u16).map(SatId).collect()
    }

    fn random_input(side: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded_rng(seed, 2);
        (0..side * side).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    #[test]
    fn softmax_sums_to_one() {
        let m = CompactCnnModel::init(tiny_arch(8, 5), labels(5), 1).unwrap();
        for s in 0..10 {
            let p = m.forward(&random_input(8, s)).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zeroed_head_is_uniform() {
        let arch = CnnArch { n_classes: 66, ..tiny_arch(8, 66) };
        let mut m = CompactCnnModel::init(arch, labels(66), 1).unwrap();
        let o = arch.offsets();
        m.params[o[4]..].iter_mut().for_each(|p| *p = 0.0);
        let p = m.forward(&random_input(8, 0)).unwrap();
        assert_eq!(p.len(), 66);
        assert!(p.iter().all(|&v| (v - 1.0 / 66.0).abs() < 1e-15));
    }

    #[test]
    fn wrong_size_rejected() {
        let m = CompactCnnModel::init(tiny_arch(8, 2), labels(2), 1).unwrap();
        assert!(matches!(m.forward(&[0.0; 63]), Err(Error::DimensionMismatch { .. })));
        assert!(CnnArch { input_side: 10, ..tiny_arch(8, 2) }.validate().is_err());
    }

    #[test]
    fn im2col_col2im_are_adjoint() {
        let side = 4;
        let x = Array2::from_shape_fn((16, 2), |(p, c)| (p * 3 + c) as f64 * 0.1);
        let cols = im2col(x.view(), side);
        let y = Array2::from_shape_fn(cols.dim(), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let lhs: f64 = (&cols * &y).sum();
        let rhs: f64 = (&x * &col2im(&y, side, 2)).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = CompactCnnModel::init(tiny_arch(8, 3), labels(3), 4).unwrap();
        let xs: Vec<Vec<f64>> = (0..3).map(|s| random_input(8, s)).collect();
        let batch: Vec<(&[f64], usize)> = xs.iter().enumerate().map(|(k, x)| (x.as_slice(), k)).collect();
        let (_, g) = m.loss_and_gradient(&batch).unwrap();
        let mut probe = m.clone();
        let mut worst: f64 = 0.0;
        for k in 0..m.params.len() {
            let h = 1e-6;
            probe.params[k] = m.params[k] + h;
            let up = probe.loss_and_gradient(&batch).unwrap().0;
            probe.params[k] = m.params[k] - h;
            let dn = probe.loss_and_gradient(&batch).unwrap().0;
            probe.params[k] = m.params[k];
            let fd = (up - dn) / (2.0 * h);
            worst = worst.max((fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-7));
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn multipliers_must_increase() {
        let spec = CnnSpec { lr_multipliers: [1.0, 0.5, 2.0], ..Default::default() };
        assert!(spec.validate().is_err());
        let rates = CnnSpec::default().layer_rates();
        assert!(rates.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn file_round_trip() {
        let m = CompactCnnModel::init(tiny_arch(8, 3), vec![SatId(2), SatId(7), SatId(9)], 3).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"CNN1");
        assert_eq!(CompactCnnModel::read_from(buf.as_slice()).unwrap(), m);
        assert!(CompactCnnModel::read_from(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn spec_kv_round_trip() {
        let spec = CnnSpec { lr_multipliers: [0.5, 1.0, 3.0], seed: 42, ..Default::default() };
        let mut cfg = crate::config::KvConfig::new();
        spec.to_kv(&mut cfg, "cnn.");
        assert_eq!(CnnSpec::default().from_kv(&cfg, "cnn.").unwrap(), spec);
    }
}
