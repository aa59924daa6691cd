//! Triplet embedding network over 64-d edge vectors.
//!
//! The network is a small tanh MLP (`64 -> 128 -> 64 -> 32`) whose linear
//! output is L2-normalized, so every embedding lies on the unit sphere. It
//! is trained with the squared-distance triplet hinge
//!
//! ```text
//! loss = mean_i max(0, |e_a - e_p|^2 - |e_a - e_n|^2 + margin)
//! ```
//!
//! where the positive is the true complement of the anchor edge and the
//! negative is any other edge from the positive's group. Match confidence is
//! `exp(-|e_a - e_b|)`, which lies in `[exp(-2), 1]`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datastore::{DatasetManifest, Group};
use crate::error::{Error, Result};
use crate::evaluation::{EdgeTable, Scorer};
use crate::features::EdgeVector;

pub const LAYER_DIMS: [usize; 4] = [64, 128, 64, 32];
pub const DEFAULT_MARGIN: f64 = 0.2;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Fully connected layer, `rows` outputs by `cols` inputs, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, weights: vec![0.0; rows * cols], biases: vec![0.0; rows] }
    }

    fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let weights = (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect();
        Self { rows, cols, weights, biases: vec![0.0; rows] }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.cols).zip(&self.biases).map(|(row, b)| {
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.biases.iter())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Mean triplet loss per epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Dense>,
    pub margin: f64,
    pub training: TrainingMeta,
}

/// Values kept from a forward pass for backpropagation.
struct Trace {
    /// Input followed by each hidden activation.
    activations: Vec<Vec<f64>>,
    /// Normalized output.
    embedding: Vec<f64>,
    raw_norm: f64,
}

impl EmbeddingModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(layer_dims: &[usize], margin: f64, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::Shape(format!("invalid layer dims {layer_dims:?}")));
        }
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::Input(format!("margin must be > 0, got {margin}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims.windows(2).map(|w| Dense::glorot(w[1], w[0], &mut rng)).collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            margin,
            training: TrainingMeta { seed, ..Default::default() },
        })
    }

    pub fn with_default_shape(seed: u64) -> Self {
        Self::new(&LAYER_DIMS, DEFAULT_MARGIN, seed).expect("default shape is valid")
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn embedding_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layers.len() != self.layer_dims.len() - 1 {
            return Err(Error::Shape(format!(
                "{} layers for dims {:?}",
                self.layers.len(),
                self.layer_dims
            )));
        }
        for (i, (layer, w)) in self.layers.iter().zip(self.layer_dims.windows(2)).enumerate() {
            if layer.cols != w[0]
                || layer.rows != w[1]
                || layer.weights.len() != w[0] * w[1]
                || layer.biases.len() != w[1]
            {
                return Err(Error::Shape(format!(
                    "layer {i} is {}x{} ({} weights, {} biases), dims call for {}x{}",
                    layer.rows,
                    layer.cols,
                    layer.weights.len(),
                    layer.biases.len(),
                    w[1],
                    w[0]
                )));
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!("input has {} values, model expects {}", x.len(), self.input_dim())));
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut activations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward(activations.last().unwrap(), &mut out);
            if i < last {
                activations.push(out.iter().map(|z| z.tanh()).collect());
            }
        }
        let raw_norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        let embedding = if raw_norm > 0.0 {
            out.iter().map(|v| v / raw_norm).collect()
        } else {
            // direction is undefined at the origin; pick the first axis
            let mut e = vec![0.0; out.len()];
            e[0] = 1.0;
            e
        };
        Trace { activations, embedding, raw_norm }
    }

    /// Unit-norm embedding of a raw 64-value input.
    pub fn embed_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).embedding)
    }

    pub fn embed(&self, v: &EdgeVector) -> Result<Vec<f64>> {
        self.embed_values(&v.values)
    }

    /// Accumulates parameter gradients given dLoss/dEmbedding.
    fn backward(&self, trace: &Trace, grad_embedding: &[f64], grads: &mut [Dense]) {
        if trace.raw_norm == 0.0 {
            return;
        }
        let e = &trace.embedding;
        let proj: f64 = e.iter().zip(grad_embedding).map(|(a, b)| a * b).sum();
        // through y / |y|
        let mut delta: Vec<f64> =
            grad_embedding.iter().zip(e).map(|(g, ei)| (g - ei * proj) / trace.raw_norm).collect();

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.activations[l];
            let g = &mut grads[l];
            for (r, &d) in delta.iter().enumerate() {
                g.biases[r] += d;
                let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                for (w, x) in row.iter_mut().zip(input) {
                    *w += d * x;
                }
            }
            if l == 0 {
                break;
            }
            // into the previous tanh layer
            let mut prev = vec![0.0; layer.cols];
            for (r, &d) in delta.iter().enumerate() {
                let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            for (p, a) in prev.iter_mut().zip(input) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }

    fn zero_grads(&self) -> Vec<Dense> {
        self.layers.iter().map(|l| Dense::zeros(l.rows, l.cols)).collect()
    }

    /// Per-triplet hinge arguments `|a-p|^2 - |a-n|^2 + margin`.
    fn hinge_arguments(&self, batch: &TripletBatch) -> Vec<f64> {
        (0..batch.len())
            .map(|i| {
                let a = self.trace(&batch.anchors[i].values).embedding;
                let p = self.trace(&batch.positives[i].values).embedding;
                let n = self.trace(&batch.negatives[i].values).embedding;
                sq_dist(&a, &p) - sq_dist(&a, &n) + self.margin
            })
            .collect()
    }

    fn loss_and_grad(&self, triplets: &[(&[f64], &[f64], &[f64])]) -> (f64, Vec<Dense>) {
        let mut grads = self.zero_grads();
        let scale = 1.0 / triplets.len() as f64;
        let mut loss = 0.0;
        for &(a, p, n) in triplets {
            let (ta, tp, tn) = (self.trace(a), self.trace(p), self.trace(n));
            let (ea, ep, en) = (&ta.embedding, &tp.embedding, &tn.embedding);
            let z = sq_dist(ea, ep) - sq_dist(ea, en) + self.margin;
            if z <= 0.0 {
                continue;
            }
            loss += z * scale;
            let ga: Vec<f64> = ep.iter().zip(en).map(|(p, n)| 2.0 * scale * (n - p)).collect();
            let gp: Vec<f64> = ea.iter().zip(ep).map(|(a, p)| -2.0 * scale * (a - p)).collect();
            let gn: Vec<f64> = ea.iter().zip(en).map(|(a, n)| 2.0 * scale * (a - n)).collect();
            self.backward(&ta, &ga, &mut grads);
            self.backward(&tp, &gp, &mut grads);
            self.backward(&tn, &gn, &mut grads);
        }
        (loss, grads)
    }

    fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for layer in &mut self.layers {
            let n = layer.param_count();
            if idx < n {
                return if idx < layer.weights.len() {
                    &mut layer.weights[idx]
                } else {
                    &mut layer.biases[idx - layer.weights.len()]
                };
            }
            idx -= n;
        }
        panic!("parameter index out of range");
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletBatch {
    pub anchors: Vec<EdgeVector>,
    pub positives: Vec<EdgeVector>,
    pub negatives: Vec<EdgeVector>,
}

impl TripletBatch {
    pub fn new(anchors: Vec<EdgeVector>, positives: Vec<EdgeVector>, negatives: Vec<EdgeVector>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Input("empty triplet batch".into()));
        }
        if anchors.len() != positives.len() || anchors.len() != negatives.len() {
            return Err(Error::Input(format!(
                "triplet lists differ in length: {}/{}/{}",
                anchors.len(),
                positives.len(),
                negatives.len()
            )));
        }
        Ok(Self { anchors, positives, negatives })
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    fn check(&self, model: &EmbeddingModel) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Input("empty triplet batch".into()));
        }
        for v in self.anchors.iter().chain(&self.positives).chain(&self.negatives) {
            model.check_input(&v.values)?;
        }
        Ok(())
    }

    fn as_slices(&self) -> Vec<(&[f64], &[f64], &[f64])> {
        (0..self.len())
            .map(|i| {
                (
                    self.anchors[i].values.as_slice(),
                    self.positives[i].values.as_slice(),
                    self.negatives[i].values.as_slice(),
                )
            })
            .collect()
    }
}

pub fn triplet_loss(model: &EmbeddingModel, batch: &TripletBatch) -> Result<f64> {
    model.validate()?;
    batch.check(model)?;
    let n = batch.len() as f64;
    Ok(model.hinge_arguments(batch).into_iter().map(|z| z.max(0.0)).sum::<f64>() / n)
}

/// Confidence that `a` and `b` are complementary edges.
pub fn score_pair(model: &EmbeddingModel, a: &EdgeVector, b: &EdgeVector) -> Result<f64> {
    let ea = model.embed(a)?;
    let eb = model.embed(b)?;
    Ok(confidence(&ea, &eb))
}

/// `exp(-distance)` between two embeddings.
pub fn confidence(ea: &[f64], eb: &[f64]) -> f64 {
    (-sq_dist(ea, eb).sqrt()).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 30, learning_rate: 1e-3, batch_size: 64, seed: 0 }
    }
}

struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    step: i32,
}

impl Adam {
    fn new(model: &EmbeddingModel) -> Self {
        Self { m: model.zero_grads(), v: model.zero_grads(), step: 0 }
    }

    fn update(&mut self, model: &mut EmbeddingModel, grads: &[Dense], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        for (((layer, g), m), v) in model.layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let params = layer.params_mut();
            let moments = m.params_mut().zip(v.params_mut());
            for ((p, g), (m, v)) in params.zip(g.params()).zip(moments) {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Mini-batch Adam on the triplet loss.
///
/// Each epoch visits every ground-truth pair once in shuffled order. The
/// anchor side is drawn at random, the positive is its complement and the
/// negative is a uniformly drawn non-matching edge of the positive's group.
pub fn train(model: &EmbeddingModel, dataset: &DatasetManifest, config: &TrainConfig) -> Result<EmbeddingModel> {
    model.validate()?;
    if dataset.ground_truth.is_empty() {
        return Err(Error::Input(format!("dataset {:?} has no ground-truth pairs", dataset.name)));
    }
    if config.batch_size == 0 || config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::Input("batch_size and learning_rate must be positive".into()));
    }
    if config.epochs == 0 {
        return Ok(model.clone());
    }

    let table = EdgeTable::new(dataset)?;
    // position of each fragment within its own group
    let index: HashMap<&str, usize> = [Group::Upper, Group::Lower]
        .into_iter()
        .flat_map(|g| table.group(g).iter().enumerate().map(|(i, e)| (e.source_fragment_id.as_str(), i)))
        .collect();
    for v in table.all() {
        model.check_input(&v.values)?;
    }
    // (upper index, lower index) per pair
    let pairs: Vec<(usize, usize)> = dataset
        .ground_truth
        .iter()
        .map(|gt| (index[gt.upper_id.as_str()], index[gt.lower_id.as_str()]))
        .collect();
    if table.upper.len() < 2 || table.lower.len() < 2 {
        return Err(Error::Input("need at least two edges per group to draw negatives".into()));
    }

    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(&model);
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let triplets: Vec<(&[f64], &[f64], &[f64])> = order
            .iter()
            .map(|&pi| {
                let (u, l) = pairs[pi];
                let (anchor, pos_group, pos) = if rng.gen_bool(0.5) {
                    (&table.upper[u], Group::Lower, l)
                } else {
                    (&table.lower[l], Group::Upper, u)
                };
                let pool = table.group(pos_group);
                let mut neg = rng.gen_range(0..pool.len() - 1);
                if neg >= pos {
                    neg += 1;
                }
                (anchor.values.as_slice(), pool[pos].values.as_slice(), pool[neg].values.as_slice())
            })
            .collect();

        let mut epoch_loss = 0.0;
        for chunk in triplets.chunks(config.batch_size) {
            let (loss, grads) = model.loss_and_grad(chunk);
            epoch_loss += loss * chunk.len() as f64;
            adam.update(&mut model, &grads, config.learning_rate);
        }
        history.push(epoch_loss / triplets.len() as f64);
    }

    let mut loss_history = std::mem::take(&mut model.training.loss_history);
    loss_history.extend(history);
    model.training = TrainingMeta {
        epochs: model.training.epochs + config.epochs,
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        seed: config.seed,
        loss_history,
    };
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Parameters whose gradient magnitude cleared the comparison floor.
    pub checked_params: usize,
    /// Triplets dropped for sitting on the hinge kink.
    pub excluded_triplets: usize,
}

pub const GRADCHECK_STEP: f64 = 1e-5;
const GRADCHECK_FLOOR: f64 = 1e-8;
/// Triplets whose hinge argument is this close to zero are left out.
const KINK_BAND: f64 = 1e-3;

/// Compares backprop gradients of the triplet loss with central finite
/// differences over every parameter.
pub fn gradient_check(model: &EmbeddingModel, batch: &TripletBatch) -> Result<GradientCheck> {
    model.validate()?;
    batch.check(model)?;
    let args = model.hinge_arguments(batch);
    let keep: Vec<usize> = (0..batch.len()).filter(|&i| args[i].abs() > KINK_BAND).collect();
    let excluded_triplets = batch.len() - keep.len();
    if keep.is_empty() {
        return Ok(GradientCheck { max_relative_error: 0.0, checked_params: 0, excluded_triplets });
    }
    let all = batch.as_slices();
    let triplets: Vec<_> = keep.iter().map(|&i| all[i]).collect();

    let (_, grads) = model.loss_and_grad(&triplets);
    let analytic: Vec<f64> = grads.iter().flat_map(|g| g.params().copied().collect::<Vec<_>>()).collect();

    let loss_of = |m: &EmbeddingModel| m.loss_and_grad_value(&triplets);
    let chunk = 256;
    let numeric: Vec<f64> = (0..analytic.len())
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .flat_map_iter(|idxs| {
            let mut m = model.clone();
            idxs.iter()
                .map(|&i| {
                    let orig = *m.param_mut(i);
                    *m.param_mut(i) = orig + GRADCHECK_STEP;
                    let up = loss_of(&m);
                    *m.param_mut(i) = orig - GRADCHECK_STEP;
                    let down = loss_of(&m);
                    *m.param_mut(i) = orig;
                    (up - down) / (2.0 * GRADCHECK_STEP)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut max_rel: f64 = 0.0;
    let mut checked = 0;
    for (a, n) in analytic.iter().zip(&numeric) {
        let denom = a.abs() + n.abs();
        if denom > GRADCHECK_FLOOR {
            checked += 1;
            max_rel = max_rel.max((a - n).abs() / denom);
        }
    }
    Ok(GradientCheck { max_relative_error: max_rel, checked_params: checked, excluded_triplets })
}

impl EmbeddingModel {
    fn loss_and_grad_value(&self, triplets: &[(&[f64], &[f64], &[f64])]) -> f64 {
        let scale = 1.0 / triplets.len() as f64;
        triplets
            .iter()
            .map(|&(a, p, n)| {
                let (ea, ep, en) = (self.trace(a).embedding, self.trace(p).embedding, self.trace(n).embedding);
                (sq_dist(&ea, &ep) - sq_dist(&ea, &en) + self.margin).max(0.0) * scale
            })
            .sum()
    }
}

/// Ranks candidates by embedding confidence, with a cache of known
/// fragment embeddings keyed by fragment id.
pub struct MatcherScorer {
    model: EmbeddingModel,
    cache: HashMap<String, Vec<f64>>,
}

impl MatcherScorer {
    pub fn new(model: EmbeddingModel) -> Result<Self> {
        model.validate()?;
        Ok(Self { model, cache: HashMap::new() })
    }

    /// Precomputes embeddings for `edges`.
    pub fn with_cache<'a>(mut self, edges: impl IntoIterator<Item = &'a EdgeVector>) -> Result<Self> {
        let edges: Vec<&EdgeVector> = edges.into_iter().collect();
        let embedded = edges.par_iter().map(|e| self.model.embed(e)).collect::<Result<Vec<_>>>()?;
        for (e, emb) in edges.into_iter().zip(embedded) {
            self.cache.insert(e.source_fragment_id.clone(), emb);
        }
        Ok(self)
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn embedding(&self, v: &EdgeVector) -> Vec<f64> {
        match self.cache.get(&v.source_fragment_id) {
            Some(e) => e.clone(),
            None => self.model.embed(v).unwrap_or_else(|_| vec![f64::NAN; self.model.embedding_dim()]),
        }
    }
}

impl Scorer for MatcherScorer {
    fn name(&self) -> &str {
        "wisepanda"
    }

    fn score(&self, target: &EdgeVector, candidate: &EdgeVector) -> f64 {
        confidence(&self.embedding(target), &self.embedding(candidate))
    }

    fn score_pool(&self, target: &EdgeVector, pool: &[EdgeVector]) -> Vec<f64> {
        let t = self.embedding(target);
        pool.iter().map(|c| confidence(&t, &self.embedding(c))).collect()
    }
}
