//! Sparse autoencoder used as a one-class authenticator.
//!
//! One hidden layer, logistic sigmoid on both sides. Trained full-batch
//! with scaled conjugate gradient on
//!
//! ```text
//! E = mse + λ·½Σw² + β·Σᵢ KL(ρ ‖ ρ̂ᵢ)
//! ```
//!
//! where `mse` averages the squared reconstruction error over every entry
//! of the batch, biases are excluded from the weight penalty, and `ρ̂ᵢ` is
//! the mean activation of hidden unit `i` over the batch (natural log).
//! A satellite's model scores an image by its reconstruction error.

pub mod scg;

use std::io::{Read, Write};
use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::iqcore::seeded_rng;

pub use scg::{ScgOptions, ScgTrace, StopReason};

/// Clamp applied to `ρ̂` before taking logarithms.
pub const RHO_HAT_CLAMP: f64 = 1e-10;

/// How the reconstruction term is averaged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MseNorm {
    /// Divide by `N·K` (every matrix entry).
    PerEntry,
    /// Divide by `N` only.
    PerSample,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AeHyperparams {
    pub hidden_size: usize,
    pub max_epochs: usize,
    pub l2_lambda: f64,
    pub sparsity_beta: f64,
    pub sparsity_rho: f64,
    pub scale_data: bool,
    pub mse_norm: MseNorm,
}

impl Default for AeHyperparams {
    fn default() -> Self {
        AeHyperparams {
            hidden_size: 1024,
            max_epochs: 100,
            l2_lambda: 0.001,
            sparsity_beta: 1.0,
            sparsity_rho: 0.05,
            scale_data: true,
            mse_norm: MseNorm::PerEntry,
        }
    }
}

impl AeHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(Error::invalid("hidden_size must be >= 1"));
        }
        if !(self.sparsity_rho > 0.0 && self.sparsity_rho < 1.0) {
            return Err(Error::invalid(format!("sparsity_rho must lie in (0, 1), got {}", self.sparsity_rho)));
        }
        if !(self.l2_lambda >= 0.0 && self.sparsity_beta >= 0.0) {
            return Err(Error::invalid("l2_lambda and sparsity_beta must be >= 0"));
        }
        Ok(())
    }

    pub fn to_kv(&self, cfg: &mut crate::config::KvConfig, prefix: &str) {
        cfg.set(format!("{prefix}hidden_size"), self.hidden_size)
            .set(format!("{prefix}max_epochs"), self.max_epochs)
            .set(format!("{prefix}l2_lambda"), self.l2_lambda)
            .set(format!("{prefix}sparsity_beta"), self.sparsity_beta)
            .set(format!("{prefix}sparsity_rho"), self.sparsity_rho)
            .set(format!("{prefix}scale_data"), self.scale_data);
    }

    /// Reads any keys present, keeping `self` for the rest.
    pub fn from_kv(mut self, cfg: &crate::config::KvConfig, prefix: &str) -> Result<Self> {
        let key = |k: &str| format!("{prefix}{k}");
        if let Some(v) = cfg.get(&key("hidden_size"))? {
            self.hidden_size = v;
        }
        if let Some(v) = cfg.get(&key("max_epochs"))? {
            self.max_epochs = v;
        }
        if let Some(v) = cfg.get(&key("l2_lambda"))? {
            self.l2_lambda = v;
        }
        if let Some(v) = cfg.get(&key("sparsity_beta"))? {
            self.sparsity_beta = v;
        }
        if let Some(v) = cfg.get(&key("sparsity_rho"))? {
            self.sparsity_rho = v;
        }
        if let Some(v) = cfg.get(&key("scale_data"))? {
            self.scale_data = v;
        }
        self.validate()?;
        Ok(self)
    }
}

/// Numerically stable logistic sigmoid.
pub fn logsig(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli KL divergence `KL(ρ ‖ ρ̂)` in nats, with `ρ̂` clamped.
pub fn kl_divergence(rho: f64, rho_hat: f64) -> f64 {
    let r = rho_hat.clamp(RHO_HAT_CLAMP, 1.0 - RHO_HAT_CLAMP);
    rho * (rho / r).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - r)).ln()
}

fn kl_slope(rho: f64, rho_hat: f64) -> f64 {
    if !(RHO_HAT_CLAMP..=1.0 - RHO_HAT_CLAMP).contains(&rho_hat) {
        return 0.0;
    }
    -rho / rho_hat + (1.0 - rho) / (1.0 - rho_hat)
}

/// Objective value and its parts; `total = mse + λ·omega_w + β·omega_s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AeLoss {
    pub total: f64,
    pub mse: f64,
    pub omega_w: f64,
    pub omega_s: f64,
}

/// Weights, biases and input rescaling of a trained autoencoder.
///
/// Parameters live in one flat vector laid out as `W1 (hidden×input)`,
/// `b1`, `W2 (input×hidden)`, `b2`, all row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseAeModel {
    pub input_dim: usize,
    pub hidden_size: usize,
    pub params: Vec<f64>,
    pub scale_min: Vec<f64>,
    pub scale_max: Vec<f64>,
}

impl SparseAeModel {
    pub fn n_params(input_dim: usize, hidden: usize) -> usize {
        2 * input_dim * hidden + input_dim + hidden
    }

    /// Uniform weights in `±√(6 / (fan_in + fan_out))`, zero biases, identity
    /// rescaling.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed, 0xAE);
        let bound = (6.0 / (input_dim + hidden) as f64).sqrt();
        let mut params = vec![0.0; Self::n_params(input_dim, hidden)];
        let w = input_dim * hidden;
        for p in &mut params[..w] {
            *p = rng.random_range(-bound..bound);
        }
        for p in &mut params[w + hidden..2 * w + hidden] {
            *p = rng.random_range(-bound..bound);
        }
        SparseAeModel {
            input_dim,
            hidden_size: hidden,
            params,
            scale_min: vec![0.0; input_dim],
            scale_max: vec![1.0; input_dim],
        }
    }

    fn offsets(&self) -> [usize; 4] {
        let (d, h) = (self.input_dim, self.hidden_size);
        [0, h * d, h * d + h, 2 * h * d + h]
    }

    pub fn w1(&self) -> ArrayView2<'_, f64> {
        let o = self.offsets();
        ArrayView2::from_shape((self.hidden_size, self.input_dim), &self.params[o[0]..o[1]]).unwrap()
    }

    pub fn b1(&self) -> ArrayView1<'_, f64> {
        let o = self.offsets();
        ArrayView1::from(&self.params[o[1]..o[2]])
    }

    pub fn w2(&self) -> ArrayView2<'_, f64> {
        let o = self.offsets();
        ArrayView2::from_shape((self.input_dim, self.hidden_size), &self.params[o[2]..o[3]]).unwrap()
    }

    pub fn b2(&self) -> ArrayView1<'_, f64> {
        let o = self.offsets();
        ArrayView1::from(&self.params[o[3]..])
    }

    /// Sets per-feature min/max from raw training rows.
    pub fn fit_scaler(&mut self, raw: ArrayView2<'_, f64>) {
        for (k, col) in raw.axis_iter(Axis(1)).enumerate() {
            self.scale_min[k] = col.fold(f64::INFINITY, |a, &b| a.min(b));
            self.scale_max[k] = col.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        }
    }

    /// Maps raw features into the activation range. Constant training
    /// features are only shifted.
    pub fn rescale(&self, raw: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if raw.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: raw.ncols(),
            });
        }
        let mut out = raw.to_owned();
        for mut row in out.rows_mut() {
            for (k, v) in row.iter_mut().enumerate() {
                let span = self.scale_max[k] - self.scale_min[k];
                *v -= self.scale_min[k];
                if span > 0.0 {
                    *v /= span;
                }
            }
        }
        Ok(out)
    }

    /// Hidden activations and reconstructions of already-scaled rows.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let n = x.nrows();
        let mut a1 = Array2::zeros((n, self.hidden_size));
        general_mat_mul(1.0, &x, &self.w1().t(), 0.0, &mut a1);
        a1 += &self.b1();
        a1.mapv_inplace(logsig);
        let mut out = Array2::zeros((n, self.input_dim));
        general_mat_mul(1.0, &a1, &self.w2().t(), 0.0, &mut out);
        out += &self.b2();
        out.mapv_inplace(logsig);
        (a1, out)
    }

    /// Reconstruction error of each raw row: `(1/K)·Σₖ(xₖ − x̂ₖ)²` in scaled
    /// units.
    pub fn score_batch(&self, raw: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let x = self.rescale(raw)?;
        let chunk = 64;
        let rows: Vec<usize> = (0..x.nrows()).step_by(chunk).collect();
        let parts: Vec<Vec<f64>> = rows
            .par_iter()
            .map(|&r0| {
                let xs = x.slice(s![r0..(r0 + chunk).min(x.nrows()), ..]);
                let (_, xhat) = self.forward(xs);
                (&xhat - &xs)
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|e| e * e).sum::<f64>() / self.input_dim as f64)
                    .collect()
            })
            .collect();
        Ok(parts.concat())
    }

    pub fn score(&self, raw: &[f64]) -> Result<f64> {
        let v = ArrayView2::from_shape((1, raw.len()), raw).unwrap();
        Ok(self.score_batch(v)?[0])
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"SAE1")?;
        w.write_all(&(self.input_dim as u32).to_le_bytes())?;
        w.write_all(&(self.hidden_size as u32).to_le_bytes())?;
        for v in self.params.iter().chain(&self.scale_min).chain(&self.scale_max) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != b"SAE1" {
            return Err(bad("bad magic, expected SAE1"));
        }
        let mut u = [0u8; 4];
        r.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
        let input_dim = u32::from_le_bytes(u) as usize;
        r.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
        let hidden = u32::from_le_bytes(u) as usize;
        if input_dim == 0 || hidden == 0 {
            return Err(bad("zero dimension"));
        }
        let np = Self::n_params(input_dim, hidden);
        let mut read_vec = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; n * 8];
            r.read_exact(&mut buf).map_err(|_| bad("truncated payload"))?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        };
        let params = read_vec(np)?;
        let scale_min = read_vec(input_dim)?;
        let scale_max = read_vec(input_dim)?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite weight"));
        }
        Ok(SparseAeModel {
            input_dim,
            hidden_size: hidden,
            params,
            scale_min,
            scale_max,
        })
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

fn check_batch(model: &SparseAeModel, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::invalid("empty training batch"));
    }
    if x.ncols() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            actual: x.ncols(),
        });
    }
    Ok(())
}

fn mse_denominator(hp: &AeHyperparams, x: ArrayView2<'_, f64>) -> f64 {
    match hp.mse_norm {
        MseNorm::PerEntry => (x.nrows() * x.ncols()) as f64,
        MseNorm::PerSample => x.nrows() as f64,
    }
}

fn loss_parts(
    model: &SparseAeModel,
    hp: &AeHyperparams,
    x: ArrayView2<'_, f64>,
    a1: &Array2<f64>,
    xhat: &Array2<f64>,
) -> (AeLoss, Array1<f64>) {
    let mse = (xhat - &x).iter().map(|e| e * e).sum::<f64>() / mse_denominator(hp, x);
    let o = model.offsets();
    let omega_w = 0.5
        * (model.params[o[0]..o[1]].iter().map(|w| w * w).sum::<f64>()
            + model.params[o[2]..o[3]].iter().map(|w| w * w).sum::<f64>());
    let rho_hat = a1.mean_axis(Axis(0)).unwrap();
    let omega_s = rho_hat.iter().map(|&r| kl_divergence(hp.sparsity_rho, r)).sum::<f64>();
    let loss = AeLoss {
        total: mse + hp.l2_lambda * omega_w + hp.sparsity_beta * omega_s,
        mse,
        omega_w,
        omega_s,
    };
    (loss, rho_hat)
}

/// Objective on an already-scaled batch (rows are samples).
pub fn ae_loss(model: &SparseAeModel, hp: &AeHyperparams, x: ArrayView2<'_, f64>) -> Result<AeLoss> {
    check_batch(model, x)?;
    let (a1, xhat) = model.forward(x);
    Ok(loss_parts(model, hp, x, &a1, &xhat).0)
}

/// Objective and its exact gradient in the flat parameter layout.
pub fn ae_gradient(model: &SparseAeModel, hp: &AeHyperparams, x: ArrayView2<'_, f64>) -> Result<(AeLoss, Vec<f64>)> {
    check_batch(model, x)?;
    Ok(loss_and_grad(model, hp, x))
}

fn loss_and_grad(model: &SparseAeModel, hp: &AeHyperparams, x: ArrayView2<'_, f64>) -> (AeLoss, Vec<f64>) {
    let (d, h) = (model.input_dim, model.hidden_size);
    let n = x.nrows() as f64;
    let (a1, xhat) = model.forward(x);
    let (loss, rho_hat) = loss_parts(model, hp, x, &a1, &xhat);

    // output delta: dE/dz2
    let scale = 2.0 / mse_denominator(hp, x);
    let mut d2 = &xhat - &x;
    ndarray::Zip::from(&mut d2)
        .and(&xhat)
        .for_each(|e, &y| *e *= scale * y * (1.0 - y));

    let mut grad = vec![0.0; model.params.len()];
    let o = model.offsets();
    let (g_w1, rest) = grad.split_at_mut(o[1]);
    let (g_b1, rest) = rest.split_at_mut(h);
    let (g_w2, g_b2) = rest.split_at_mut(d * h);

    let mut gw2 = ndarray::ArrayViewMut2::from_shape((d, h), g_w2).unwrap();
    gw2.assign(&model.w2());
    general_mat_mul(1.0, &d2.t(), &a1, hp.l2_lambda, &mut gw2);
    ndarray::ArrayViewMut1::from(g_b2).assign(&d2.sum_axis(Axis(0)));

    // hidden delta: (d2·W2 + β·KL'(ρ̂)/N) ⊙ a1(1 − a1)
    let sparse: Array1<f64> = rho_hat.mapv(|r| hp.sparsity_beta * kl_slope(hp.sparsity_rho, r) / n);
    let mut d1 = Array2::zeros((x.nrows(), h));
    general_mat_mul(1.0, &d2, &model.w2(), 0.0, &mut d1);
    d1 += &sparse;
    ndarray::Zip::from(&mut d1).and(&a1).for_each(|e, &a| *e *= a * (1.0 - a));

    let mut gw1 = ndarray::ArrayViewMut2::from_shape((h, d), g_w1).unwrap();
    gw1.assign(&model.w1());
    general_mat_mul(1.0, &d1.t(), &x, hp.l2_lambda, &mut gw1);
    ndarray::ArrayViewMut1::from(g_b1).assign(&d1.sum_axis(Axis(0)));

    (loss, grad)
}

/// Outcome of [`train_autoencoder`].
#[derive(Clone, Debug)]
pub struct AeFit {
    pub model: SparseAeModel,
    pub trace: ScgTrace,
}

/// Runs SCG from `init` on an already-scaled batch, one iteration per epoch.
pub fn train_scg(init: &SparseAeModel, x: ArrayView2<'_, f64>, hp: &AeHyperparams) -> Result<AeFit> {
    hp.validate()?;
    check_batch(init, x)?;
    let mut model = init.clone();
    let mut w = model.params.clone();
    let opts = ScgOptions {
        max_iter: hp.max_epochs,
        ..ScgOptions::default()
    };
    let mut scratch = model.clone();
    let trace = scg::minimize(&mut w, &opts, |p| {
        scratch.params.copy_from_slice(p);
        let (l, g) = loss_and_grad(&scratch, hp, x);
        (l.total, g)
    })?;
    model.params = w;
    log::debug!(
        "scg: {} iterations, {} accepted, objective {:.6} -> {:.6} ({:?})",
        trace.objective.len() - 1,
        trace.accepted,
        trace.initial(),
        trace.last(),
        trace.stop
    );
    Ok(AeFit { model, trace })
}

/// Fits the rescaling on `raw` (rows are flattened images), initializes
/// from `seed` and trains.
pub fn train_autoencoder(raw: ArrayView2<'_, f64>, hp: &AeHyperparams, seed: u64) -> Result<AeFit> {
    hp.validate()?;
    if raw.nrows() == 0 {
        return Err(Error::invalid("no training images"));
    }
    let mut model = SparseAeModel::init(raw.ncols(), hp.hidden_size, seed);
    if hp.scale_data {
        model.fit_scaler(raw);
    }
    let x = model.rescale(raw)?;
    train_scg(&model, x.view(), hp)
}

/// Stacks equally sized feature vectors into a row matrix.
pub fn stack_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let k = rows.first().map_or(0, Vec::len);
    let mut out = Array2::zeros((rows.len(), k));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: r.len(),
            });
        }
        out.row_mut(i).assign(&ArrayView1::from(r.as_slice()));
    }
    Ok(out)
}
