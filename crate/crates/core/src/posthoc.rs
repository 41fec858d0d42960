//! Post-hoc temperature scaling fitted by grid search.
//!
//! Records in this crate carry only a top-label confidence, so scaling uses
//! the two-class reduction `sigmoid(logit(c) / T)` — the unique monotone
//! analogue of dividing a full logit vector by T. The temperature is fitted
//! by minimizing the binary NLL of correctness on a holdout set over a fixed
//! grid (default 0.1 to 10.0 in steps of 0.1).

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};
use crate::losses::{softmax, Logits, ProbDist};
use crate::records::PredictionRecord;

/// Confidences are clamped into (eps, 1-eps) before the logit transform.
pub const CONF_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        Self { lo: 0.1, hi: 10.0, step: 0.1 }
    }
}

impl TemperatureGrid {
    pub fn validate(&self) -> Result<()> {
        if self.lo <= 0.0 || self.hi < self.lo || self.step <= 0.0 {
            return Err(CalibError::InvalidParam(format!(
                "invalid temperature grid [{}, {}] step {}",
                self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }

    /// Grid points lo, lo+step, ... up to hi (inclusive within fp slack).
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let t = self.lo + f64::from(i) * self.step;
            if t > self.hi + 1e-9 {
                break;
            }
            out.push(t);
            i += 1;
        }
        out
    }
}

fn clamp_conf(c: f64) -> f64 {
    c.clamp(CONF_EPS, 1.0 - CONF_EPS)
}

/// `sigmoid(logit(c) / T)`. T = 1 is the identity; higher T pulls
/// confidences toward 0.5.
pub fn scale_confidence(confidence: f64, temperature: f64) -> Result<f64> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(CalibError::InvalidParam(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if temperature == 1.0 {
        return Ok(confidence);
    }
    let c = clamp_conf(confidence);
    let z = (c / (1.0 - c)).ln() / temperature;
    Ok(1.0 / (1.0 + (-z).exp()))
}

/// Full-vector variant for callers that still hold logits: divide by T and
/// renormalize through softmax.
pub fn scale_distribution(logits: &Logits, temperature: f64) -> Result<ProbDist> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(CalibError::InvalidParam(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let scaled = Logits::new(logits.values().iter().map(|z| z / temperature).collect())?;
    Ok(softmax(&scaled))
}

/// Binary NLL of correctness at temperature `t` over the holdout.
fn nll_at(records: &[PredictionRecord], t: f64) -> Result<f64> {
    let mut total = 0.0;
    for r in records {
        let c = scale_confidence(clamp_conf(r.confidence), t)?.clamp(CONF_EPS, 1.0 - CONF_EPS);
        total -= if r.is_correct() { c.ln() } else { (1.0 - c).ln() };
    }
    Ok(total)
}

/// Grid-search temperature minimizing holdout NLL; ties break toward
/// smaller T.
pub fn fit_temperature(holdout: &[PredictionRecord], grid: &TemperatureGrid) -> Result<f64> {
    grid.validate()?;
    if holdout.is_empty() {
        return Err(CalibError::EmptyInput("temperature holdout"));
    }
    let mut best_t = f64::NAN;
    let mut best_nll = f64::INFINITY;
    for t in grid.points() {
        let nll = nll_at(holdout, t)?;
        if nll < best_nll {
            best_nll = nll;
            best_t = t;
        }
    }
    Ok(best_t)
}

/// Rescale every confidence; answers are untouched, so accuracy and the
/// classification report are invariant.
pub fn apply_temperature(
    records: &[PredictionRecord],
    temperature: f64,
) -> Result<Vec<PredictionRecord>> {
    records
        .iter()
        .map(|r| {
            Ok(PredictionRecord {
                confidence: scale_confidence(r.confidence, temperature)?,
                ..r.clone()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{classification_report, ece};
    use crate::rng::SplitRng;

    fn rec(id: usize, correct: bool, conf: f64) -> PredictionRecord {
        PredictionRecord::new(
            format!("r{id}"),
            if correct { "yes" } else { "no" },
            "yes",
            conf,
        )
        .unwrap()
    }

    /// Confidence levels where observed accuracy exactly matches the level.
    fn calibrated_set() -> Vec<PredictionRecord> {
        let mut records = Vec::new();
        let mut id = 0;
        for &level in &[0.6, 0.7, 0.8, 0.9] {
            let per_level = 1000;
            let correct = (level * per_level as f64).round() as usize;
            for i in 0..per_level {
                records.push(rec(id, i < correct, level));
                id += 1;
            }
        }
        records
    }

    fn overconfident_set() -> Vec<PredictionRecord> {
        (0..1000).map(|i| rec(i, i % 5 < 3, 0.95)).collect()
    }

    #[test]
    fn identity_at_t1() {
        assert_eq!(scale_confidence(0.9, 1.0).unwrap(), 0.9);
    }

    #[test]
    fn huge_t_collapses_to_half() {
        for &c in &[0.05, 0.3, 0.9, 0.99] {
            let s = scale_confidence(c, 1e6).unwrap();
            assert!((s - 0.5).abs() < 1e-3, "{c} -> {s}");
        }
    }

    #[test]
    fn hand_evaluated_point() {
        // logit(0.9) = ln 9, halved is ln 3, and sigmoid(ln 3) = 0.75.
        let s = scale_confidence(0.9, 2.0).unwrap();
        assert!((s - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_temperature() {
        assert!(scale_confidence(0.5, 0.0).is_err());
        assert!(scale_confidence(0.5, -1.0).is_err());
    }

    #[test]
    fn monotone_in_confidence_and_temperature() {
        for &t in &[0.3, 1.0, 2.5, 7.0] {
            let mut prev = scale_confidence(0.01, t).unwrap();
            for i in 1..100 {
                let c = 0.01 + 0.0098 * f64::from(i);
                let s = scale_confidence(c, t).unwrap();
                assert!(s > prev, "not increasing at c={c}, T={t}");
                prev = s;
            }
        }
        let mut prev = scale_confidence(0.9, 0.5).unwrap();
        for &t in &[1.0, 2.0, 4.0, 8.0] {
            let s = scale_confidence(0.9, t).unwrap();
            assert!(s < prev, "not decreasing in T at {t}");
            prev = s;
        }
    }

    #[test]
    fn calibrated_set_fits_t_near_one() {
        let t = fit_temperature(&calibrated_set(), &TemperatureGrid::default()).unwrap();
        assert!((t - 1.0).abs() <= 0.1 + 1e-9, "T* = {t}");
    }

    #[test]
    fn overconfident_set_fits_t_above_one() {
        let t = fit_temperature(&overconfident_set(), &TemperatureGrid::default()).unwrap();
        assert!(t > 1.0, "T* = {t}");
    }

    #[test]
    fn fit_matches_exhaustive_rescan() {
        let records = overconfident_set();
        let grid = TemperatureGrid::default();
        let t_star = fit_temperature(&records, &grid).unwrap();
        // Independent re-scan over the same grid.
        let mut best = (f64::NAN, f64::INFINITY);
        for t in grid.points() {
            let mut nll = 0.0;
            for r in &records {
                let c = scale_confidence(r.confidence, t).unwrap().clamp(CONF_EPS, 1.0 - CONF_EPS);
                nll -= if r.is_correct() { c.ln() } else { (1.0 - c).ln() };
            }
            if nll < best.1 {
                best = (t, nll);
            }
        }
        assert_eq!(t_star, best.0);
    }

    #[test]
    fn apply_preserves_answers_and_accuracy() {
        let mut rng = SplitRng::new(4);
        let records: Vec<_> =
            (0..50).map(|i| rec(i, rng.next_f64() < 0.5, 0.2 + 0.6 * rng.next_f64())).collect();
        let before = classification_report(&records).unwrap();
        for &t in &[0.5, 1.0, 3.0] {
            let scaled = apply_temperature(&records, t).unwrap();
            for (a, b) in records.iter().zip(&scaled) {
                assert_eq!(a.predicted_answer, b.predicted_answer);
            }
            let after = classification_report(&scaled).unwrap();
            assert_eq!(before.accuracy, after.accuracy);
        }
        let identity = apply_temperature(&records, 1.0).unwrap();
        assert_eq!(records, identity);
    }

    #[test]
    fn fitted_temperature_reduces_ece_on_overconfident_set() {
        let records = overconfident_set();
        let t = fit_temperature(&records, &TemperatureGrid::default()).unwrap();
        let scaled = apply_temperature(&records, t).unwrap();
        let before = ece(&records, 10).unwrap();
        let after = ece(&scaled, 10).unwrap();
        assert!(after <= before, "ece {before} -> {after}");
    }

    #[test]
    fn scale_distribution_sharpens_and_softens() {
        let z = Logits::new(vec![2.0, 0.0, -1.0]).unwrap();
        let base = softmax(&z);
        let soft = scale_distribution(&z, 4.0).unwrap();
        let sharp = scale_distribution(&z, 0.25).unwrap();
        assert!(soft.max_prob() < base.max_prob());
        assert!(sharp.max_prob() > base.max_prob());
    }
}
