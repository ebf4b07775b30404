//! One-hidden-layer reference classifier over mean token vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::ig::Differentiable;
use super::{mean_rows, AttributionError, TurnTokens};

/// `P(class a) = σ(w2 · tanh(W1 z + b1) + b2)` with `z` the standardized
/// mean of the token vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceClassifier {
    d: usize,
    h: usize,
    shift: Vec<f64>,
    scale: Vec<f64>,
    /// `h × d`, row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Even in `s`, so negating the score negates the gradient exactly.
fn sigmoid_slope(s: f64) -> f64 {
    let c = (0.5 * s).cosh();
    0.25 / (c * c)
}

fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

impl ReferenceClassifier {
    /// Random weights; identity standardization.
    pub fn init(d: usize, h: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize, scale: f64| -> Vec<f64> {
            (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); scale * z }).collect::<Vec<f64>>()
        };
        let w1 = draw(h * d, 1.0 / (d as f64).sqrt());
        let w2 = draw(h, 1.0 / (h as f64).sqrt());
        ReferenceClassifier { d, h, shift: vec![0.0; d], scale: vec![1.0; d], w1, b1: vec![0.0; h], w2, b2: 0.0 }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn hidden(&self) -> usize {
        self.h
    }

    /// Same network scoring class b: `P'(x) = 1 - P(x)`.
    pub fn flipped(&self) -> Self {
        let mut m = self.clone();
        m.w2.iter_mut().for_each(|w| *w = -*w);
        m.b2 = -m.b2;
        m
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.w1.clone();
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    fn standardize(&self, mean: &[f64]) -> Vec<f64> {
        mean.iter().zip(&self.shift).zip(&self.scale).map(|((x, m), s)| (x - m) * s).collect()
    }

    fn hidden_act(&self, z: &[f64]) -> Vec<f64> {
        (0..self.h)
            .map(|j| {
                let row = &self.w1[j * self.d..(j + 1) * self.d];
                (row.iter().zip(z).map(|(w, z)| w * z).sum::<f64>() + self.b1[j]).tanh()
            })
            .collect()
    }

    fn score_z(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let a = self.hidden_act(z);
        let s = self.w2.iter().zip(&a).map(|(w, a)| w * a).sum::<f64>() + self.b2;
        (s, a)
    }

    /// Logit of class a for a mean token vector.
    pub fn score(&self, mean: &[f64]) -> f64 {
        self.score_z(&self.standardize(mean)).0
    }

    pub fn predict(&self, turn: &TurnTokens) -> f64 {
        sigmoid(self.score(&turn.mean()))
    }

    /// `∂P/∂mean`.
    fn grad_mean(&self, mean: &[f64]) -> Vec<f64> {
        let (s, a) = self.score_z(&self.standardize(mean));
        let outer = sigmoid_slope(s);
        let mut g = vec![0.0; self.d];
        for j in 0..self.h {
            let back = self.w2[j] * (1.0 - a[j] * a[j]);
            let row = &self.w1[j * self.d..(j + 1) * self.d];
            g.iter_mut().zip(row).for_each(|(g, w)| *g += back * w);
        }
        g.iter_mut().zip(&self.scale).for_each(|(g, s)| *g *= outer * s);
        g
    }
}

impl Differentiable for ReferenceClassifier {
    fn value(&self, input: &[Vec<f64>]) -> f64 {
        sigmoid(self.score(&mean_rows(input)))
    }

    fn gradient(&self, input: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = input.len() as f64;
        let g: Vec<f64> = self.grad_mean(&mean_rows(input)).into_iter().map(|v| v / n).collect();
        vec![g; input.len()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOptions {
    pub hidden: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Train / validation / test fractions.
    pub split: (f64, f64, f64),
    pub seed: u64,
    pub min_per_class: usize,
    pub max_imbalance: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            hidden: 16,
            learning_rate: 0.5,
            max_epochs: 2000,
            patience: 50,
            split: (0.8, 0.1, 0.1),
            seed: 0,
            min_per_class: 50,
            max_imbalance: 9.0,
        }
    }
}

/// Test-set metrics, class a as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub epochs: usize,
    pub best_validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: ReferenceClassifier,
    pub metrics: ClassifierMetrics,
}

struct Sample {
    z: Vec<f64>,
    y: f64,
}

fn mean_loss(model: &ReferenceClassifier, data: &[Sample]) -> f64 {
    data.iter()
        .map(|s| {
            let (score, _) = model.score_z(&s.z);
            softplus(score) - s.y * score
        })
        .sum::<f64>()
        / data.len() as f64
}

fn gradient_step(model: &mut ReferenceClassifier, data: &[Sample], lr: f64) {
    let (d, h) = (model.d, model.h);
    let mut gw1 = vec![0.0; h * d];
    let mut gb1 = vec![0.0; h];
    let mut gw2 = vec![0.0; h];
    let mut gb2 = 0.0;
    for s in data {
        let (score, a) = model.score_z(&s.z);
        let err = sigmoid(score) - s.y;
        gb2 += err;
        for j in 0..h {
            gw2[j] += err * a[j];
            let delta = err * model.w2[j] * (1.0 - a[j] * a[j]);
            gb1[j] += delta;
            gw1[j * d..(j + 1) * d].iter_mut().zip(&s.z).for_each(|(g, z)| *g += delta * z);
        }
    }
    let k = lr / data.len() as f64;
    model.w1.iter_mut().zip(&gw1).for_each(|(w, g)| *w -= k * g);
    model.b1.iter_mut().zip(&gb1).for_each(|(w, g)| *w -= k * g);
    model.w2.iter_mut().zip(&gw2).for_each(|(w, g)| *w -= k * g);
    model.b2 -= k * gb2;
}

/// Stratified seeded split of `n` indices.
fn split_indices(n: usize, split: (f64, f64, f64), rng: &mut ChaCha8Rng) -> [Vec<usize>; 3] {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let total = split.0 + split.1 + split.2;
    let n_train = ((split.0 / total) * n as f64).round() as usize;
    let n_val = ((split.1 / total) * n as f64).round() as usize;
    let test = idx.split_off((n_train + n_val).min(n));
    let val = idx.split_off(n_train.min(idx.len()));
    [idx, val, test]
}

/// Full-batch gradient descent on cross-entropy with early stopping on
/// validation loss; class a is label 1.
pub fn train_classifier(
    class_a: &[TurnTokens],
    class_b: &[TurnTokens],
    opts: &TrainOptions,
) -> Result<Trained, AttributionError> {
    for (name, set) in [("a", class_a), ("b", class_b)] {
        if set.len() < opts.min_per_class {
            return Err(AttributionError::TooFewTurns { class: name.into(), found: set.len(), needed: opts.min_per_class });
        }
    }
    let (na, nb) = (class_a.len(), class_b.len());
    if na.max(nb) as f64 > opts.max_imbalance * na.min(nb) as f64 {
        return Err(AttributionError::Imbalance { a: na, b: nb });
    }
    if opts.hidden == 0 || !(opts.learning_rate > 0.0) {
        return Err(AttributionError::Options("hidden width and learning rate must be positive".into()));
    }
    let d = class_a[0].vectors.first().map_or(0, |v| v.len());
    if d == 0 || class_a.iter().chain(class_b).any(|t| t.vectors.is_empty() || t.vectors.iter().any(|v| v.len() != d)) {
        return Err(AttributionError::Shape(format!("every turn needs at least one token vector of dimension {d}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let [ta, va, sa] = split_indices(na, opts.split, &mut rng);
    let [tb, vb, sb] = split_indices(nb, opts.split, &mut rng);
    let means_a: Vec<Vec<f64>> = class_a.iter().map(|t| t.mean()).collect();
    let means_b: Vec<Vec<f64>> = class_b.iter().map(|t| t.mean()).collect();

    let mut model = ReferenceClassifier::init(d, opts.hidden, opts.seed ^ 0x5eed);
    let train_raw: Vec<&Vec<f64>> = ta.iter().map(|&i| &means_a[i]).chain(tb.iter().map(|&i| &means_b[i])).collect();
    for j in 0..d {
        let n = train_raw.len() as f64;
        let m = train_raw.iter().map(|x| x[j]).sum::<f64>() / n;
        let sd = (train_raw.iter().map(|x| (x[j] - m).powi(2)).sum::<f64>() / n).sqrt();
        model.shift[j] = m;
        model.scale[j] = if sd > 1e-12 { 1.0 / sd } else { 1.0 };
    }
    let samples = |ia: &[usize], ib: &[usize]| -> Vec<Sample> {
        ia.iter()
            .map(|&i| Sample { z: model.standardize(&means_a[i]), y: 1.0 })
            .chain(ib.iter().map(|&i| Sample { z: model.standardize(&means_b[i]), y: 0.0 }))
            .collect()
    };
    let (train, val, test) = (samples(&ta, &tb), samples(&va, &vb), samples(&sa, &sb));

    let mut best = (mean_loss(&model, &val), model.clone());
    let mut since_best = 0;
    let mut epochs = 0;
    for epoch in 1..=opts.max_epochs {
        gradient_step(&mut model, &train, opts.learning_rate);
        epochs = epoch;
        let train_loss = mean_loss(&model, &train);
        let val_loss = mean_loss(&model, &val);
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(AttributionError::NonFiniteLoss { epoch });
        }
        if val_loss < best.0 {
            best = (val_loss, model.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= opts.patience {
                break;
            }
        }
    }
    let (best_validation_loss, model) = best;

    let (mut tp, mut fp, mut fneg, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for s in &test {
        let pred_a = sigmoid(model.score_z(&s.z).0) >= 0.5;
        let is_a = s.y == 1.0;
        correct += usize::from(pred_a == is_a);
        tp += usize::from(pred_a && is_a);
        fp += usize::from(pred_a && !is_a);
        fneg += usize::from(!pred_a && is_a);
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let metrics = ClassifierMetrics {
        accuracy: ratio(correct, test.len()),
        precision,
        recall,
        f1,
        n_train: train.len(),
        n_validation: val.len(),
        n_test: test.len(),
        epochs,
        best_validation_loss,
    };
    Ok(Trained { model, metrics })
}
