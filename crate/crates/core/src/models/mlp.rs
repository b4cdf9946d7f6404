//! Feed-forward softmax classifier: input → dropout → dense(ReLU) →
//! dropout → dense → softmax, trained by mini-batch gradient descent with
//! momentum on mean cross-entropy.
//!
//! Dropout is inverted (kept activations are scaled by `1/(1-rate)` during
//! training), so inference uses the weights as-is.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::features::FeatureVector;
use crate::rng::seeded;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn is_consistent(&self) -> bool {
        self.data.len() == self.rows * self.cols
    }
}

/// Network weights. `w1` is hidden × input, `w2` is classes × hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(inputs: usize, hidden: usize, classes: usize) -> Self {
        MlpParams {
            w1: Matrix::zeros(hidden, inputs),
            b1: vec![0.0; hidden],
            w2: Matrix::zeros(classes, hidden),
            b2: vec![0.0; classes],
        }
    }

    pub fn inputs(&self) -> usize {
        self.w1.cols
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows
    }

    pub fn classes(&self) -> usize {
        self.w2.rows
    }

    /// All parameters as mutable slices, in (w1, b1, w2, b2) order.
    pub fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.w1.data,
            &mut self.b1,
            &mut self.w2.data,
            &mut self.b2,
        ]
    }

    pub fn slices(&self) -> [&[f64]; 4] {
        [&self.w1.data, &self.b1, &self.w2.data, &self.b2]
    }

    pub fn check_shapes(&self) -> Result<()> {
        let ok = self.w1.is_consistent()
            && self.w2.is_consistent()
            && self.b1.len() == self.w1.rows
            && self.w2.cols == self.w1.rows
            && self.b2.len() == self.w2.rows
            && self.w1.rows > 0
            && self.w2.rows > 0;
        if ok {
            Ok(())
        } else {
            Err(TriageError::Artifact(
                "parameters: weight shapes are inconsistent".into(),
            ))
        }
    }

    fn scale_add(&mut self, other: &MlpParams, factor: f64) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += factor * s;
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub hidden_units: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 8,
            hidden_units: 40,
            dropout_rate: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(TriageError::invalid(m));
        if self.epochs < 1 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.batch_size < 1 || self.hidden_units < 1 {
            return fail("batch_size and hidden_units must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        Ok(())
    }
}

/// Training-set loss and accuracy after an epoch, measured without dropout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub params: MlpParams,
    pub dropout_rate: f64,
}

/// Max-subtracted softmax.
/// Rectifier that lets NaN through, so divergence shows up in the loss.
fn relu(a: f64) -> f64 {
    if a < 0.0 {
        0.0
    } else {
        a
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index and value of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

struct SparseInput {
    entries: Vec<(usize, f64)>,
}

impl SparseInput {
    fn from_dense(x: &[f64]) -> Self {
        SparseInput {
            entries: x
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }
}

impl Network {
    pub fn new(params: MlpParams, dropout_rate: f64) -> Result<Self> {
        params.check_shapes()?;
        Ok(Network {
            params,
            dropout_rate,
        })
    }

    pub fn inputs(&self) -> usize {
        self.params.inputs()
    }

    pub fn classes(&self) -> usize {
        self.params.classes()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs() {
            return Err(TriageError::Dimension {
                expected: self.inputs(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn hidden_pre(&self, x: &SparseInput) -> Vec<f64> {
        let p = &self.params;
        (0..p.hidden())
            .map(|h| {
                let row = p.w1.row(h);
                p.b1[h] + x.entries.iter().map(|&(i, v)| row[i] * v).sum::<f64>()
            })
            .collect()
    }

    fn logits_from_hidden(&self, hidden: &[f64]) -> Vec<f64> {
        let p = &self.params;
        (0..p.classes())
            .map(|c| {
                p.b2[c]
                    + p.w2
                        .row(c)
                        .iter()
                        .zip(hidden)
                        .map(|(w, h)| w * h)
                        .sum::<f64>()
            })
            .collect()
    }

    fn logits_sparse(&self, x: &SparseInput) -> Vec<f64> {
        let hidden: Vec<f64> = self.hidden_pre(x).into_iter().map(relu).collect();
        self.logits_from_hidden(&hidden)
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.logits_sparse(&SparseInput::from_dense(x)))
    }

    /// Class probabilities with dropout inactive.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Most probable class index and its probability.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, f64)> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    fn check_batch(&self, xs: &[FeatureVector], ys: &[usize]) -> Result<()> {
        if xs.is_empty() {
            return Err(TriageError::EmptyCorpus);
        }
        if xs.len() != ys.len() {
            return Err(TriageError::Dimension {
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        for x in xs {
            self.check_dim(x)?;
        }
        if let Some(&y) = ys.iter().find(|&&y| y >= self.classes()) {
            return Err(TriageError::invalid(format!(
                "label {y} out of range for {} classes",
                self.classes()
            )));
        }
        Ok(())
    }

    /// Mean cross-entropy over a set, without dropout.
    pub fn loss(&self, xs: &[FeatureVector], ys: &[usize]) -> Result<f64> {
        self.check_batch(xs, ys)?;
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                let p = softmax(&self.logits_sparse(&SparseInput::from_dense(x)));
                -p[y].ln()
            })
            .sum();
        Ok(total / xs.len() as f64)
    }

    /// Mean cross-entropy and its gradient by backpropagation, without dropout.
    pub fn loss_and_gradient(&self, xs: &[FeatureVector], ys: &[usize]) -> Result<(f64, MlpParams)> {
        self.check_batch(xs, ys)?;
        let p = &self.params;
        let mut grad = MlpParams::zeros(p.inputs(), p.hidden(), p.classes());
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let sx = SparseInput::from_dense(x);
            loss += self.accumulate(&sx, y, None, &mut grad);
        }
        let n = xs.len() as f64;
        grad.scale(1.0 / n);
        Ok((loss / n, grad))
    }

    /// Forward and backward pass for one sample, adding its gradient into
    /// `grad`. With `masks`, the input and hidden activations are multiplied
    /// by the given (already scaled) dropout factors.
    fn accumulate(
        &self,
        x: &SparseInput,
        y: usize,
        masks: Option<(&[f64], &[f64])>,
        grad: &mut MlpParams,
    ) -> f64 {
        let p = &self.params;
        let input: Vec<(usize, f64)> = match masks {
            Some((m_in, _)) => x
                .entries
                .iter()
                .zip(m_in)
                .map(|(&(i, v), &m)| (i, v * m))
                .collect(),
            None => x.entries.clone(),
        };
        let input = SparseInput { entries: input };
        let pre = self.hidden_pre(&input);
        let relu: Vec<f64> = pre.iter().copied().map(relu).collect();
        let hidden: Vec<f64> = match masks {
            Some((_, m_h)) => relu.iter().zip(m_h).map(|(h, m)| h * m).collect(),
            None => relu,
        };
        let probs = softmax(&self.logits_from_hidden(&hidden));
        let loss = -probs[y].ln();

        let mut d_logits = probs;
        d_logits[y] -= 1.0;
        let mut d_hidden = vec![0.0; p.hidden()];
        for (c, &dz) in d_logits.iter().enumerate() {
            grad.b2[c] += dz;
            let row = &mut grad.w2.data[c * p.hidden()..(c + 1) * p.hidden()];
            for (h, g) in row.iter_mut().enumerate() {
                *g += dz * hidden[h];
            }
            for (h, w) in p.w2.row(c).iter().enumerate() {
                d_hidden[h] += dz * w;
            }
        }
        for h in 0..p.hidden() {
            let mut d = d_hidden[h];
            if let Some((_, m_h)) = masks {
                d *= m_h[h];
            }
            if pre[h] <= 0.0 {
                continue;
            }
            grad.b1[h] += d;
            let row = &mut grad.w1.data[h * p.inputs()..(h + 1) * p.inputs()];
            for &(i, v) in &input.entries {
                row[i] += d * v;
            }
        }
        loss
    }

    fn accuracy(&self, xs: &[SparseInput], ys: &[usize]) -> f64 {
        let correct = xs
            .iter()
            .zip(ys)
            .filter(|(x, &y)| argmax(&self.logits_sparse(x)).0 == y)
            .count();
        correct as f64 / xs.len() as f64
    }

    fn mean_loss(&self, xs: &[SparseInput], ys: &[usize]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| -softmax(&self.logits_sparse(x))[y].ln())
            .sum::<f64>()
            / xs.len() as f64
    }
}

/// Output of [`train`]: the network plus per-epoch training metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNetwork {
    pub network: Network,
    pub history: Vec<EpochStats>,
}

/// Glorot-uniform initialization with zero biases.
pub fn init_params<R: Rng + ?Sized>(inputs: usize, hidden: usize, classes: usize, rng: &mut R) -> MlpParams {
    let mut p = MlpParams::zeros(inputs, hidden, classes);
    let a1 = (6.0 / (inputs + hidden) as f64).sqrt();
    p.w1.data.iter_mut().for_each(|w| *w = rng.random_range(-a1..a1));
    let a2 = (6.0 / (hidden + classes) as f64).sqrt();
    p.w2.data.iter_mut().for_each(|w| *w = rng.random_range(-a2..a2));
    p
}

pub fn train(xs: &[FeatureVector], ys: &[usize], n_classes: usize, cfg: &TrainConfig) -> Result<TrainedNetwork> {
    cfg.validate()?;
    if n_classes == 0 {
        return Err(TriageError::invalid("need at least one class"));
    }
    let dim = xs.first().ok_or(TriageError::EmptyCorpus)?.len();
    if dim == 0 {
        return Err(TriageError::invalid("feature vectors are empty"));
    }
    let mut rng = seeded(cfg.seed);
    let params = init_params(dim, cfg.hidden_units, n_classes, &mut rng);
    let mut net = Network::new(params, cfg.dropout_rate)?;
    net.check_batch(xs, ys)?;

    let sparse: Vec<SparseInput> = xs.iter().map(|x| SparseInput::from_dense(x)).collect();
    let keep = 1.0 - cfg.dropout_rate;
    let mask = |len: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..len)
            .map(|_| {
                if cfg.dropout_rate == 0.0 || rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect()
    };

    let mut velocity = MlpParams::zeros(dim, cfg.hidden_units, n_classes);
    let mut grad = MlpParams::zeros(dim, cfg.hidden_units, n_classes);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.scale(0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                let m_in = mask(sparse[i].entries.len(), &mut rng);
                let m_h = mask(cfg.hidden_units, &mut rng);
                batch_loss += net.accumulate(&sparse[i], ys[i], Some((&m_in, &m_h)), &mut grad);
            }
            if batch_loss.is_nan() {
                return Err(TriageError::NanLoss { epoch });
            }
            velocity.scale(cfg.momentum);
            velocity.scale_add(&grad, -cfg.learning_rate / batch.len() as f64);
            net.params.scale_add(&velocity, 1.0);
        }
        let loss = net.mean_loss(&sparse, ys);
        if loss.is_nan() {
            return Err(TriageError::NanLoss { epoch });
        }
        history.push(EpochStats {
            epoch,
            loss,
            accuracy: net.accuracy(&sparse, ys),
        });
    }
    Ok(TrainedNetwork {
        network: net,
        history,
    })
}
