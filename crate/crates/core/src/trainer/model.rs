//! Flat-parameter networks: feature extractor `g`, classifier `h`,
//! domain discriminator `d`.
//!
//! `g: R^2 -> R^F` is `W2 tanh(W1 x + b1) + b2` with `H` hidden units,
//! `h: R^F -> R^C` is a linear softmax layer and `d: R^F -> (0, 1)` a
//! logistic unit giving the probability that a feature came from the source.

use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::synth::{stream_rng, Domain, Purpose, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hidden: usize,
    pub features: usize,
    pub n_classes: usize,
    /// All parameters, laid out as `W1 b1 W2 b2 | V c | u e`.
    pub theta: Vec<f64>,
}

/// Intermediate activations of `g` for one input.
#[derive(Clone, Debug)]
pub struct Forward {
    pub hidden: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ModelParams {
    pub fn n_params(hidden: usize, features: usize, n_classes: usize) -> usize {
        3 * hidden + features * hidden + features + n_classes * features + n_classes + features + 1
    }

    pub fn zeros(hidden: usize, features: usize, n_classes: usize) -> Self {
        ModelParams {
            hidden,
            features,
            n_classes,
            theta: vec![0.0; Self::n_params(hidden, features, n_classes)],
        }
    }

    /// Gaussian weights scaled by `scale / sqrt(fan_in)`, zero biases.
    pub fn random(hidden: usize, features: usize, n_classes: usize, scale: f64, seed: u64) -> Self {
        let mut m = Self::zeros(hidden, features, n_classes);
        let mut rng = stream_rng(seed, Purpose::Init, Domain::Source, 0);
        let mut fill = |r: Range<usize>, fan_in: usize, theta: &mut [f64]| {
            let s = scale / (fan_in as f64).sqrt();
            for v in &mut theta[r] {
                *v = s * rng.sample::<f64, _>(StandardNormal);
            }
        };
        let (w1, w2, v, u) = (m.w1(), m.w2(), m.v(), m.u());
        fill(w1, 2, &mut m.theta);
        fill(w2, hidden, &mut m.theta);
        fill(v, features, &mut m.theta);
        fill(u, features, &mut m.theta);
        m
    }

    pub fn w1(&self) -> Range<usize> {
        0..2 * self.hidden
    }

    pub fn b1(&self) -> Range<usize> {
        let s = 2 * self.hidden;
        s..s + self.hidden
    }

    pub fn w2(&self) -> Range<usize> {
        let s = 3 * self.hidden;
        s..s + self.features * self.hidden
    }

    pub fn b2(&self) -> Range<usize> {
        let s = self.w2().end;
        s..s + self.features
    }

    pub fn v(&self) -> Range<usize> {
        let s = self.b2().end;
        s..s + self.n_classes * self.features
    }

    pub fn c(&self) -> Range<usize> {
        let s = self.v().end;
        s..s + self.n_classes
    }

    pub fn u(&self) -> Range<usize> {
        let s = self.c().end;
        s..s + self.features
    }

    pub fn e(&self) -> usize {
        self.u().end
    }

    /// Parameters of the feature extractor.
    pub fn g_range(&self) -> Range<usize> {
        0..self.b2().end
    }

    /// Parameters of the classifier.
    pub fn h_range(&self) -> Range<usize> {
        self.v().start..self.c().end
    }

    /// Parameters of the discriminator.
    pub fn d_range(&self) -> Range<usize> {
        self.u().start..self.e() + 1
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &Vec2) -> Forward {
        let (h, f) = (self.hidden, self.features);
        let t = &self.theta;
        let (w1, b1, w2, b2) = (self.w1().start, self.b1().start, self.w2().start, self.b2().start);
        let hidden: Vec<f64> = (0..h)
            .map(|k| (t[w1 + 2 * k] * x[0] + t[w1 + 2 * k + 1] * x[1] + t[b1 + k]).tanh())
            .collect();
        let z = (0..f)
            .map(|j| {
                let row = &t[w2 + j * h..w2 + (j + 1) * h];
                row.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>() + t[b2 + j]
            })
            .collect();
        Forward { hidden, z }
    }

    pub fn features_of(&self, x: &Vec2) -> Vec<f64> {
        self.forward(x).z
    }

    pub fn logits(&self, z: &[f64]) -> Vec<f64> {
        let f = self.features;
        let (v, c) = (self.v().start, self.c().start);
        (0..self.n_classes)
            .map(|k| {
                let row = &self.theta[v + k * f..v + (k + 1) * f];
                row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + self.theta[c + k]
            })
            .collect()
    }

    /// Discriminator logit; `sigmoid` of it is `P(source | z)`.
    pub fn disc_logit(&self, z: &[f64]) -> f64 {
        let u = self.u().start;
        self.theta[u..u + self.features]
            .iter()
            .zip(z)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.theta[self.e()]
    }

    pub fn predict(&self, x: &Vec2) -> usize {
        let l = self.logits(&self.features_of(x));
        l.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
            .0
    }

    /// Accumulates into `grad` the gradient flowing back from `dz` through
    /// `g` at input `x`.
    pub fn backprop_g(&self, x: &Vec2, fw: &Forward, dz: &[f64], grad: &mut [f64]) {
        let (h, f) = (self.hidden, self.features);
        let (w1, b1, w2, b2) = (self.w1().start, self.b1().start, self.w2().start, self.b2().start);
        let mut ds = vec![0.0; h];
        for j in 0..f {
            if dz[j] == 0.0 {
                continue;
            }
            grad[b2 + j] += dz[j];
            for k in 0..h {
                grad[w2 + j * h + k] += dz[j] * fw.hidden[k];
                ds[k] += dz[j] * self.theta[w2 + j * h + k];
            }
        }
        for k in 0..h {
            let da = ds[k] * (1.0 - fw.hidden[k] * fw.hidden[k]);
            grad[w1 + 2 * k] += da * x[0];
            grad[w1 + 2 * k + 1] += da * x[1];
            grad[b1 + k] += da;
        }
    }
}
