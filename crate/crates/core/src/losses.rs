//! Classification losses and their closed-form gradients.
//!
//! The calibration surrogate `aligncal_loss` is
//! `p_y*(1 - p_max) + (1 - p_y)*p_max`: the expected per-instance
//! confidence-correctness gap when the predicted label is drawn from the
//! model's own softmax, which makes its dataset mean an estimate of the
//! empirical UBCE. The combined objective adds it to focal loss with
//! weight lambda.
//!
//! Gradients are analytic (no autodiff); `finite_diff_grad` is the
//! independent oracle the tests check them against.

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

/// Floor applied inside logarithms and divisions so p -> 0 stays finite.
const PROB_EPS: f64 = 1e-12;

/// Pre-softmax scores for K >= 2 classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logits {
    values: Vec<f64>,
}

impl Logits {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(CalibError::InvalidParam(format!(
                "logits need at least 2 classes, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CalibError::NonFinite("logits"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A categorical distribution: entries in [0,1] summing to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CalibError::EmptyInput("probability vector"));
        }
        if probs.iter().any(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
            return Err(CalibError::InvalidParam("probabilities must lie in [0,1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CalibError::InvalidParam(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, y: usize) -> Result<f64> {
        self.probs
            .get(y)
            .copied()
            .ok_or(CalibError::IndexOutOfRange { index: y, len: self.probs.len() })
    }

    /// Index of the largest probability, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }
}

/// Hyperparameters for the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Focal focusing parameter.
    pub gamma: f64,
    /// Weight of the calibration term.
    pub lambda: f64,
    /// Label-smoothing mass.
    pub alpha: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { gamma: 2.0, lambda: 2.0, alpha: 0.1 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(CalibError::InvalidParam("gamma must be >= 0".into()));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(CalibError::InvalidParam("lambda must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(CalibError::InvalidParam("alpha must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// Shift-stable softmax.
pub fn softmax(logits: &Logits) -> ProbDist {
    let max = logits.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.values.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    ProbDist { probs: exps.iter().map(|e| e / sum).collect() }
}

/// Calibration surrogate `p_y*(1 - p_max) + (1 - p_y)*p_max`.
///
/// Zero exactly when p_y = 1; ranges over [0,1].
pub fn aligncal_loss(p: &ProbDist, y: usize) -> Result<f64> {
    let p_y = p.get(y)?;
    let p_max = p.max_prob();
    Ok(p_y * (1.0 - p_max) + (1.0 - p_y) * p_max)
}

/// Focal loss `-(1 - p_y)^gamma * ln(p_y)`; gamma = 0 is cross-entropy.
pub fn focal_loss(p: &ProbDist, y: usize, gamma: f64) -> Result<f64> {
    let p_y = p.get(y)?.max(PROB_EPS);
    Ok(-(1.0 - p_y).powf(gamma) * p_y.ln())
}

/// Cross-entropy against the smoothed target `q_y = 1 - alpha`,
/// `q_j = alpha / (K-1)` elsewhere.
pub fn label_smoothing_loss(p: &ProbDist, y: usize, alpha: f64) -> Result<f64> {
    let k = p.len();
    if k < 2 {
        return Err(CalibError::InvalidParam(
            "label smoothing is undefined for a single class".into(),
        ));
    }
    p.get(y)?;
    let off = alpha / (k - 1) as f64;
    Ok(-p
        .probs
        .iter()
        .enumerate()
        .map(|(j, &pj)| {
            let q = if j == y { 1.0 - alpha } else { off };
            q * pj.max(PROB_EPS).ln()
        })
        .sum::<f64>())
}

/// Combined objective: focal + lambda * calibration term, both on
/// `softmax(logits)`.
pub fn total_loss(logits: &Logits, y: usize, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    let p = softmax(logits);
    Ok(focal_loss(&p, y, cfg.gamma)? + cfg.lambda * aligncal_loss(&p, y)?)
}

/// Gradient of `aligncal_loss(softmax(z), y)` with respect to the logits:
///
/// `(1 - 2*p_y) * p_m * (d[i==m] - p_i) + (1 - 2*p_m) * p_y * (d[i==y] - p_i)`
///
/// where `m` is the argmax (lowest index on ties, a fixed subgradient
/// choice). Components sum to zero.
pub fn aligncal_grad(logits: &Logits, y: usize) -> Result<Vec<f64>> {
    let p = softmax(logits);
    let p_y = p.get(y)?;
    let m = p.argmax();
    let p_m = p.probs[m];
    let a = (1.0 - 2.0 * p_y) * p_m;
    let b = (1.0 - 2.0 * p_m) * p_y;
    Ok((0..p.len())
        .map(|i| {
            let d_m = if i == m { 1.0 } else { 0.0 };
            let d_y = if i == y { 1.0 } else { 0.0 };
            a * (d_m - p.probs[i]) + b * (d_y - p.probs[i])
        })
        .collect())
}

/// d focal / d p_y, with the same epsilon floor as the loss.
fn focal_dloss_dp(p_y: f64, gamma: f64) -> f64 {
    let p = p_y.max(PROB_EPS);
    let om = 1.0 - p;
    let term1 = if gamma == 0.0 || om <= 0.0 { 0.0 } else { gamma * om.powf(gamma - 1.0) * p.ln() };
    term1 - om.powf(gamma) / p
}

/// Gradient of the combined objective: analytic focal gradient plus
/// lambda times `aligncal_grad`.
pub fn total_grad(logits: &Logits, y: usize, cfg: &LossConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let p = softmax(logits);
    let p_y = p.get(y)?;
    let dfocal_dp = focal_dloss_dp(p_y, cfg.gamma);
    let cal = aligncal_grad(logits, y)?;
    Ok((0..p.len())
        .map(|i| {
            let d_y = if i == y { 1.0 } else { 0.0 };
            dfocal_dp * p_y * (d_y - p.probs[i]) + cfg.lambda * cal[i]
        })
        .collect())
}

/// Central-difference gradient oracle:
/// `(f(z + eps*e_i) - f(z - eps*e_i)) / (2*eps)` per coordinate.
pub fn finite_diff_grad<F>(f: F, logits: &Logits, epsilon: f64) -> Result<Vec<f64>>
where
    F: Fn(&Logits) -> Result<f64>,
{
    if epsilon <= 0.0 {
        return Err(CalibError::InvalidParam("epsilon must be positive".into()));
    }
    let mut grad = Vec::with_capacity(logits.len());
    for i in 0..logits.len() {
        let mut plus = logits.values.clone();
        plus[i] += epsilon;
        let mut minus = logits.values.clone();
        minus[i] -= epsilon;
        let fp = f(&Logits { values: plus })?;
        let fm = f(&Logits { values: minus })?;
        grad.push((fp - fm) / (2.0 * epsilon));
    }
    Ok(grad)
}
