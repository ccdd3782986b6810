//! Contrastive fine-tuning of a linear adapter over frozen embeddings.
//!
//! Both sides are projected, `h = W·x / ‖W·x‖`, and scored with
//! `S_ij = τ⟨h_qi, h_tj⟩`. The loss treats every `S_ij` as a logit:
//!
//! ```text
//! L = (1/B) Σ_i BCE(S_ii, y_i) + λ · 1/(B(B−1)) Σ_{i≠j} BCE(S_ij, 0)
//! BCE(s, y) = max(s, 0) − y·s + ln(1 + e^{−|s|})
//! ```
//!
//! Gradient: with `G_ij = ∂L/∂S_ij`, `∂L/∂h_qi = τ Σ_j G_ij h_tj`, the
//! normalization Jacobian `(I − h hᵀ)/‖u‖` maps it back to `u = W·x`, and
//! `∂L/∂W = Σ (∂L/∂u) xᵀ` over queries and targets.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::EmbeddingVector;
use crate::scalar::{dot, l2_norm, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams<T: Scalar> {
    pub dim: usize,
    /// Row-major `dim × dim`.
    pub weights: Vec<T>,
    pub temperature: T,
    pub reg_weight: T,
}

impl<T: Scalar> AdapterParams<T> {
    pub fn identity(dim: usize, temperature: T, reg_weight: T) -> Self {
        let mut weights = vec![T::zero(); dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = T::one();
        }
        AdapterParams { dim, weights, temperature, reg_weight }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim * self.dim, actual: self.weights.len() });
        }
        if !(self.temperature > T::zero()) {
            return Err(Error::InvalidArgument("temperature must be > 0".into()));
        }
        if !(self.reg_weight >= T::zero()) {
            return Err(Error::InvalidArgument("regularizer weight must be >= 0".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("adapter weights must be finite".into()));
        }
        Ok(())
    }

    fn project(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        Ok(self.weights.chunks_exact(self.dim).map(|row| dot(row, x)).collect())
    }

    /// Checkpoint layout: `u32 dim`, `f64 τ`, `f64 λ`, then `dim²` row-major
    /// `f64` weights, all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 8 * self.weights.len());
        out.extend((self.dim as u32).to_le_bytes());
        out.extend(self.temperature.as_f64().to_le_bytes());
        out.extend(self.reg_weight.as_f64().to_le_bytes());
        for w in &self.weights {
            out.extend(w.as_f64().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 20 {
            return Err("truncated checkpoint header".into());
        }
        let dim = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let f = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
        let body = &bytes[20..];
        if body.len() != dim * dim * 8 {
            return Err(format!("expected {} weight bytes, found {}", dim * dim * 8, body.len()));
        }
        let params = AdapterParams {
            dim,
            temperature: T::of(f(&bytes[4..12])),
            reg_weight: T::of(f(&bytes[12..20])),
            weights: body.chunks_exact(8).map(|c| T::of(f(c))).collect(),
        };
        params.validate().map_err(|e| e.to_string())?;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io("writing adapter checkpoint", path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io("reading adapter checkpoint", path, e))?;
        Self::from_bytes(&bytes).map_err(|reason| Error::Format { path: path.to_path_buf(), reason })
    }
}

/// `W·x` followed by L2 normalization.
pub fn apply_adapter<T: Scalar>(params: &AdapterParams<T>, x: &EmbeddingVector<T>) -> Result<EmbeddingVector<T>> {
    EmbeddingVector::new(params.project(&x.values)?).normalized().ok_or(Error::DegenerateProjection)
}

/// `B` aligned query/target rows; row `i` of `targets` is the positive for
/// query `i`, other rows act as in-batch negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch<T: Scalar> {
    pub queries: Vec<Vec<T>>,
    pub targets: Vec<Vec<T>>,
    /// Binary labels in {0, 1}.
    pub labels: Vec<T>,
}

impl<T: Scalar> TrainBatch<T> {
    pub fn positives(queries: Vec<Vec<T>>, targets: Vec<Vec<T>>) -> Self {
        let labels = vec![T::one(); queries.len()];
        TrainBatch { queries, targets, labels }
    }

    pub fn size(&self) -> usize {
        self.queries.len()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let b = self.queries.len();
        if b == 0 || self.targets.len() != b || self.labels.len() != b {
            return Err(Error::InvalidArgument(format!(
                "batch needs equal nonzero row counts, got {}/{}/{}",
                b,
                self.targets.len(),
                self.labels.len()
            )));
        }
        if let Some(bad) = self.queries.iter().chain(&self.targets).find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
        }
        if self.labels.iter().any(|&y| y != T::zero() && y != T::one()) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T: Scalar> {
    pub size: usize,
    /// Row-major `size × size`.
    pub values: Vec<T>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.size + j]
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        SimilarityMatrix { size: rows.len(), values: rows.iter().flatten().copied().collect() }
    }
}

struct Projected<T> {
    /// Unit vectors.
    h: Vec<Vec<T>>,
    /// Norms before normalization.
    norms: Vec<T>,
}

fn project_all<T: Scalar>(params: &AdapterParams<T>, rows: &[Vec<T>]) -> Result<Projected<T>> {
    let mut h = Vec::with_capacity(rows.len());
    let mut norms = Vec::with_capacity(rows.len());
    for r in rows {
        let u = params.project(r)?;
        let n = l2_norm(&u);
        if !(n > T::zero()) {
            return Err(Error::DegenerateProjection);
        }
        h.push(u.into_iter().map(|x| x / n).collect());
        norms.push(n);
    }
    Ok(Projected { h, norms })
}

fn scores<T: Scalar>(tau: T, q: &Projected<T>, t: &Projected<T>) -> SimilarityMatrix<T> {
    let b = q.h.len();
    let mut values = Vec::with_capacity(b * b);
    for hq in &q.h {
        for ht in &t.h {
            values.push(tau * dot(hq, ht));
        }
    }
    SimilarityMatrix { size: b, values }
}

pub fn similarity_matrix<T: Scalar>(params: &AdapterParams<T>, batch: &TrainBatch<T>) -> Result<SimilarityMatrix<T>> {
    batch.validate(params.dim)?;
    let q = project_all(params, &batch.queries)?;
    let t = project_all(params, &batch.targets)?;
    Ok(scores(params.temperature, &q, &t))
}

/// Logistic binary cross-entropy of logit `s` against label `y`.
pub fn bce_with_logit<T: Scalar>(s: T, y: T) -> T {
    s.max(T::zero()) - y * s + (-s.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

/// Diagonal BCE plus the λ-weighted in-batch regularizer.
pub fn loss<T: Scalar>(s: &SimilarityMatrix<T>, labels: &[T], reg_weight: T) -> Result<T> {
    let b = s.size;
    if labels.len() != b || b == 0 {
        return Err(Error::DimensionMismatch { expected: b, actual: labels.len() });
    }
    let n = T::of(b as f64);
    let diagonal: T = (0..b).map(|i| bce_with_logit(s.get(i, i), labels[i])).sum::<T>() / n;
    if reg_weight == T::zero() {
        return Ok(diagonal);
    }
    if b == 1 {
        return Err(Error::RegularizerUndefined);
    }
    let off: T = (0..b)
        .flat_map(|i| (0..b).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| bce_with_logit(s.get(i, j), T::zero()))
        .sum();
    Ok(diagonal + reg_weight * off / (n * (n - T::one())))
}

/// Loss value and `∂L/∂W` (row-major, same shape as the weights).
pub fn loss_gradient<T: Scalar>(params: &AdapterParams<T>, batch: &TrainBatch<T>) -> Result<(T, Vec<T>)> {
    batch.validate(params.dim)?;
    let dim = params.dim;
    let b = batch.size();
    let tau = params.temperature;
    let lambda = params.reg_weight;
    let q = project_all(params, &batch.queries)?;
    let t = project_all(params, &batch.targets)?;
    let s = scores(tau, &q, &t);
    let value = loss(&s, &batch.labels, lambda)?;

    let n = T::of(b as f64);
    let off_scale = if b > 1 { lambda / (n * (n - T::one())) } else { T::zero() };
    let g = |i: usize, j: usize| {
        if i == j {
            (sigmoid(s.get(i, i)) - batch.labels[i]) / n
        } else {
            off_scale * sigmoid(s.get(i, j))
        }
    };

    let mut grad = vec![T::zero(); dim * dim];
    let mut accumulate = |h: &[T], norm: T, g_h: Vec<T>, x: &[T]| {
        let along = dot(h, &g_h);
        for r in 0..dim {
            let g_u = (g_h[r] - along * h[r]) / norm;
            if g_u == T::zero() {
                continue;
            }
            for (c, &xc) in x.iter().enumerate() {
                grad[r * dim + c] += g_u * xc;
            }
        }
    };
    for i in 0..b {
        let mut g_h = vec![T::zero(); dim];
        for j in 0..b {
            let w = tau * g(i, j);
            for (acc, &v) in g_h.iter_mut().zip(&t.h[j]) {
                *acc += w * v;
            }
        }
        accumulate(&q.h[i], q.norms[i], g_h, &batch.queries[i]);
    }
    for j in 0..b {
        let mut g_h = vec![T::zero(); dim];
        for i in 0..b {
            let w = tau * g(i, j);
            for (acc, &v) in g_h.iter_mut().zip(&q.h[i]) {
                *acc += w * v;
            }
        }
        accumulate(&t.h[j], t.norms[j], g_h, &batch.targets[j]);
    }
    Ok((value, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub reg_weight: f64,
    pub temperature: f64,
    pub batch_size: usize,
    pub init_noise: f64,
    /// Keep a copy of the weights after every epoch.
    pub record_weights: bool,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            learning_rate: 0.05,
            epochs: 50,
            seed: 0,
            reg_weight: 1.0,
            temperature: 20.0,
            batch_size: 16,
            init_noise: 1e-3,
            record_weights: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T: Scalar> {
    pub params: AdapterParams<T>,
    /// Mean batch loss before training, then after each epoch.
    pub loss_trace: Vec<T>,
    pub weight_trace: Vec<Vec<T>>,
}

/// Identity plus seeded uniform noise of the given scale.
pub fn init_params<T: Scalar>(dim: usize, hyper: &TrainHyper) -> AdapterParams<T> {
    let mut params = AdapterParams::identity(dim, T::of(hyper.temperature), T::of(hyper.reg_weight));
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    for w in &mut params.weights {
        *w += T::of(hyper.init_noise * rng.gen_range(-1.0..=1.0));
    }
    params
}

fn mean_loss<T: Scalar>(params: &AdapterParams<T>, data: &[TrainBatch<T>], epoch: usize) -> Result<T> {
    let mut total = T::zero();
    for (bi, batch) in data.iter().enumerate() {
        let s = similarity_matrix(params, batch)?;
        let l = loss(&s, &batch.labels, params.reg_weight)?;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: bi, value: l.as_f64() });
        }
        total += l;
    }
    Ok(total / T::of(data.len() as f64))
}

/// Plain mini-batch gradient descent over `data`, in order, for
/// `hyper.epochs` epochs. Deterministic for a given seed.
pub fn train_adapter<T: Scalar>(data: &[TrainBatch<T>], hyper: &TrainHyper) -> Result<TrainOutcome<T>> {
    let first = data.first().ok_or_else(|| Error::InvalidArgument("no training batches".into()))?;
    let dim = first.queries.first().map(Vec::len).unwrap_or(0);
    let mut params = init_params::<T>(dim, hyper);
    params.validate()?;
    let lr = T::of(hyper.learning_rate);
    let mut loss_trace = vec![mean_loss(&params, data, 0)?];
    let mut weight_trace = Vec::new();
    for epoch in 1..=hyper.epochs {
        for (bi, batch) in data.iter().enumerate() {
            let (l, grad) = loss_gradient(&params, batch)?;
            if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch: bi, value: l.as_f64() });
            }
            for (w, g) in params.weights.iter_mut().zip(grad) {
                *w -= lr * g;
            }
        }
        loss_trace.push(mean_loss(&params, data, epoch)?);
        if hyper.record_weights {
            weight_trace.push(params.weights.clone());
        }
        log::debug!("epoch {epoch}: loss {}", loss_trace[epoch]);
    }
    Ok(TrainOutcome { params, loss_trace, weight_trace })
}

/// A positive query/target pair with the keys used to keep batches free of
/// accidental positives among the off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair<T: Scalar> {
    pub query_key: String,
    pub target_key: String,
    pub query: Vec<T>,
    pub target: Vec<T>,
}

/// Shuffles pairs with `seed` and packs them into batches of at most
/// `batch_size` rows in which no query key and no target key repeats.
/// Singleton batches are dropped when `reg_weight > 0`.
pub fn assemble_batches<T: Scalar>(
    pairs: &[TrainPair<T>],
    batch_size: usize,
    seed: u64,
    reg_weight: f64,
) -> Vec<TrainBatch<T>> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut open: Vec<(Vec<usize>, HashSet<&str>, HashSet<&str>)> = Vec::new();
    for i in order {
        let p = &pairs[i];
        let slot = open.iter_mut().find(|(rows, qs, ts)| {
            rows.len() < batch_size && !qs.contains(p.query_key.as_str()) && !ts.contains(p.target_key.as_str())
        });
        match slot {
            Some((rows, qs, ts)) => {
                rows.push(i);
                qs.insert(&p.query_key);
                ts.insert(&p.target_key);
            }
            None => open.push((vec![i], HashSet::from([p.query_key.as_str()]), HashSet::from([p.target_key.as_str()]))),
        }
    }
    open.into_iter()
        .filter(|(rows, _, _)| rows.len() > 1 || reg_weight == 0.0)
        .map(|(rows, _, _)| {
            TrainBatch::positives(
                rows.iter().map(|&i| pairs[i].query.clone()).collect(),
                rows.iter().map(|&i| pairs[i].target.clone()).collect(),
            )
        })
        .collect()
}
