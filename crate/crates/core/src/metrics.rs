//! Binned and per-instance calibration metrics over prediction logs.
//!
//! The binned family (ECE / MCE / ACE) measures the gap between per-bin
//! accuracy and per-bin mean confidence; the per-instance UBCE averages
//! `t*(1-c) + (1-t)*c` and upper-bounds ECE for every binning because signed
//! gaps cancel inside a bin while per-instance gaps do not. Classification
//! metrics (accuracy, macro precision/recall/F1) share the same record type.
//!
//! All functions are pure over immutable slices and safe to call
//! concurrently.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};
use crate::records::{normalize_answer, PredictionRecord};

/// How records are grouped into confidence bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinKind {
    /// Fixed intervals [(m-1)/M, m/M), last bin closed at 1.0.
    EqualWidth,
    /// Confidence-sorted records split into M groups of near-equal size.
    EqualCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub kind: BinKind,
    pub num_bins: usize,
}

impl BinningScheme {
    pub fn equal_width(num_bins: usize) -> Self {
        Self { kind: BinKind::EqualWidth, num_bins }
    }

    pub fn equal_count(num_bins: usize) -> Self {
        Self { kind: BinKind::EqualCount, num_bins }
    }
}

/// One confidence bin. Empty bins carry no statistics rather than zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

fn validate(records: &[PredictionRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(CalibError::EmptyInput("no prediction records"));
    }
    for r in records {
        if !(0.0..=1.0).contains(&r.confidence) || !r.confidence.is_finite() {
            return Err(CalibError::InvalidConfidence { value: r.confidence });
        }
    }
    Ok(())
}

/// Partition records into confidence bins.
///
/// Equal-width membership: bin `m` holds confidences in `[m/M, (m+1)/M)`,
/// with the last bin closed so confidence 1.0 is always binned. Equal-count
/// membership: records are stably sorted by confidence (ties keep input
/// order) and split into `M` contiguous groups whose sizes differ by at
/// most one; this requires `M <= n` so every bin is occupied.
pub fn bin_records(
    records: &[PredictionRecord],
    scheme: BinningScheme,
) -> Result<Vec<ReliabilityBin>> {
    validate(records)?;
    if scheme.num_bins == 0 {
        return Err(CalibError::InvalidBinning("num_bins must be >= 1".into()));
    }
    let m = scheme.num_bins;
    match scheme.kind {
        BinKind::EqualWidth => {
            let mut groups: Vec<Vec<&PredictionRecord>> = vec![Vec::new(); m];
            for r in records {
                let idx = ((r.confidence * m as f64) as usize).min(m - 1);
                groups[idx].push(r);
            }
            Ok(groups
                .into_iter()
                .enumerate()
                .map(|(i, members)| {
                    let lo = i as f64 / m as f64;
                    let hi = (i + 1) as f64 / m as f64;
                    summarize_bin(lo, hi, &members)
                })
                .collect())
        }
        BinKind::EqualCount => {
            let n = records.len();
            if m > n {
                return Err(CalibError::InvalidBinning(format!(
                    "cannot form {m} equal-count bins from {n} records"
                )));
            }
            let mut sorted: Vec<&PredictionRecord> = records.iter().collect();
            sorted.sort_by(|a, b| a.confidence.partial_cmp(&b.confidence).unwrap());
            let mut bins = Vec::with_capacity(m);
            for b in 0..m {
                let start = b * n / m;
                let end = (b + 1) * n / m;
                let members = &sorted[start..end];
                let lo = members.first().map(|r| r.confidence).unwrap_or(0.0);
                let hi = members.last().map(|r| r.confidence).unwrap_or(0.0);
                bins.push(summarize_bin(lo, hi, members));
            }
            Ok(bins)
        }
    }
}

fn summarize_bin(lo: f64, hi: f64, members: &[&PredictionRecord]) -> ReliabilityBin {
    if members.is_empty() {
        return ReliabilityBin { lo, hi, count: 0, mean_confidence: None, accuracy: None };
    }
    let n = members.len() as f64;
    let conf = members.iter().map(|r| r.confidence).sum::<f64>() / n;
    let acc = members.iter().filter(|r| r.is_correct()).count() as f64 / n;
    ReliabilityBin { lo, hi, count: members.len(), mean_confidence: Some(conf), accuracy: Some(acc) }
}

/// Expected calibration error over equal-width bins:
/// count-weighted mean of |accuracy - mean confidence| per bin.
pub fn ece(records: &[PredictionRecord], num_bins: usize) -> Result<f64> {
    let bins = bin_records(records, BinningScheme::equal_width(num_bins))?;
    let n = records.len() as f64;
    Ok(bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.count as f64 / n) * (b.accuracy.unwrap() - b.mean_confidence.unwrap()).abs())
        .sum())
}

/// Maximum calibration error: the largest per-bin gap, empty bins excluded.
pub fn mce(records: &[PredictionRecord], num_bins: usize) -> Result<f64> {
    let bins = bin_records(records, BinningScheme::equal_width(num_bins))?;
    Ok(bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.accuracy.unwrap() - b.mean_confidence.unwrap()).abs())
        .fold(0.0, f64::max))
}

/// Adaptive calibration error: unweighted mean gap over equal-count bins.
pub fn ace(records: &[PredictionRecord], num_bins: usize) -> Result<f64> {
    let bins = bin_records(records, BinningScheme::equal_count(num_bins))?;
    let b = bins.len() as f64;
    Ok(bins
        .iter()
        .map(|bin| (bin.accuracy.unwrap() - bin.mean_confidence.unwrap()).abs())
        .sum::<f64>()
        / b)
}

/// Mean per-instance gap `t*(1-c) + (1-t)*c`; upper-bounds ECE at any bin
/// count because binning cancels signed gaps.
pub fn ubce_empirical(records: &[PredictionRecord]) -> Result<f64> {
    validate(records)?;
    let n = records.len() as f64;
    Ok(records
        .iter()
        .map(|r| if r.is_correct() { 1.0 - r.confidence } else { r.confidence })
        .sum::<f64>()
        / n)
}

/// Accuracy plus macro-averaged precision / recall / F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Per-class precision/recall/F1 macro-averaged over the union of normalized
/// predicted and true classes. A class never predicted contributes
/// precision 0; zero denominators yield 0, never NaN.
pub fn classification_report(records: &[PredictionRecord]) -> Result<ClassificationReport> {
    validate(records)?;
    // (true positives, predicted count, truth count) per class.
    let mut table: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut correct = 0usize;
    for r in records {
        let pred = normalize_answer(&r.predicted_answer);
        let truth = normalize_answer(&r.true_answer);
        if pred == truth {
            correct += 1;
            table.entry(pred.clone()).or_default().0 += 1;
        }
        table.entry(pred).or_default().1 += 1;
        table.entry(truth).or_default().2 += 1;
    }
    let classes = table.len() as f64;
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for &(tp, pred_n, true_n) in table.values() {
        let p = if pred_n > 0 { tp as f64 / pred_n as f64 } else { 0.0 };
        let r = if true_n > 0 { tp as f64 / true_n as f64 } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    Ok(ClassificationReport {
        accuracy: correct as f64 / records.len() as f64,
        f1: f_sum / classes,
        precision: p_sum / classes,
        recall: r_sum / classes,
    })
}

/// Bins ordered ascending by lower edge, ready for CSV/SVG emission.
pub fn reliability_table(
    records: &[PredictionRecord],
    scheme: BinningScheme,
) -> Result<Vec<ReliabilityBin>> {
    let mut bins = bin_records(records, scheme)?;
    bins.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    Ok(bins)
}

/// CSV with header `bin_lo,bin_hi,count,mean_confidence,accuracy`.
/// Absent statistics are written as empty fields. Float formatting uses the
/// shortest round-trip representation, so read-back is lossless.
pub fn write_reliability_csv(bins: &[ReliabilityBin]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count,mean_confidence,accuracy\n");
    for b in bins {
        let conf = b.mean_confidence.map(|v| v.to_string()).unwrap_or_default();
        let acc = b.accuracy.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", b.lo, b.hi, b.count, conf, acc));
    }
    out
}

pub fn read_reliability_csv(text: &str) -> Result<Vec<ReliabilityBin>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == "bin_lo,bin_hi,count,mean_confidence,accuracy" => {}
        _ => {
            return Err(CalibError::MalformedLine {
                line: 1,
                message: "missing reliability CSV header".into(),
            })
        }
    }
    let mut bins = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CalibError::MalformedLine {
                line: i + 1,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str| {
            s.parse::<f64>().map_err(|e| CalibError::MalformedLine {
                line: i + 1,
                message: e.to_string(),
            })
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() { Ok(None) } else { Ok(Some(parse_f64(s)?)) }
        };
        bins.push(ReliabilityBin {
            lo: parse_f64(fields[0])?,
            hi: parse_f64(fields[1])?,
            count: fields[2].parse().map_err(|e: std::num::ParseIntError| {
                CalibError::MalformedLine { line: i + 1, message: e.to_string() }
            })?,
            mean_confidence: opt(fields[3])?,
            accuracy: opt(fields[4])?,
        });
    }
    Ok(bins)
}

/// The full metrics report emitted by the CLI.
///
/// `ace` is computed at `min(bins, n)` quantile bins so small logs still
/// produce a report; the strict `ace()` contract is unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub bins: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub ece: f64,
    pub ace: f64,
    pub mce: f64,
    pub ubce: f64,
}

pub fn metrics_report(records: &[PredictionRecord], num_bins: usize) -> Result<MetricsReport> {
    let class = classification_report(records)?;
    Ok(MetricsReport {
        n: records.len(),
        bins: num_bins,
        accuracy: class.accuracy,
        f1: class.f1,
        precision: class.precision,
        recall: class.recall,
        ece: ece(records, num_bins)?,
        ace: ace(records, num_bins.min(records.len()))?,
        mce: mce(records, num_bins)?,
        ubce: ubce_empirical(records)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitRng;

    fn rec(id: &str, correct: bool, conf: f64) -> PredictionRecord {
        let truth = "yes";
        let pred = if correct { "yes" } else { "no" };
        PredictionRecord::new(id, pred, truth, conf).unwrap()
    }

    /// Five records at confidence 0.9, three of them correct.
    fn tumor_records() -> Vec<PredictionRecord> {
        (0..5).map(|i| rec(&format!("p{i}"), i < 3, 0.9)).collect()
    }

    fn random_records(rng: &mut SplitRng, n: usize) -> Vec<PredictionRecord> {
        (0..n)
            .map(|i| rec(&format!("r{i}"), rng.next_f64() < 0.6, rng.next_f64()))
            .collect()
    }

    // Independent oracles: straight double loops over explicit bin edges.

    fn oracle_equal_width_gaps(records: &[PredictionRecord], m: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for b in 0..m {
            let lo = b as f64 / m as f64;
            let hi = (b + 1) as f64 / m as f64;
            let members: Vec<_> = records
                .iter()
                .filter(|r| r.confidence >= lo && (r.confidence < hi || (b == m - 1 && r.confidence <= 1.0)))
                .collect();
            if members.is_empty() {
                out.push((0, 0.0));
                continue;
            }
            let acc = members.iter().filter(|r| r.is_correct()).count() as f64
                / members.len() as f64;
            let conf =
                members.iter().map(|r| r.confidence).sum::<f64>() / members.len() as f64;
            out.push((members.len(), (acc - conf).abs()));
        }
        out
    }

    fn oracle_ece(records: &[PredictionRecord], m: usize) -> f64 {
        let n = records.len() as f64;
        oracle_equal_width_gaps(records, m)
            .iter()
            .map(|&(count, gap)| count as f64 / n * gap)
            .sum()
    }

    fn oracle_mce(records: &[PredictionRecord], m: usize) -> f64 {
        oracle_equal_width_gaps(records, m)
            .iter()
            .filter(|&&(count, _)| count > 0)
            .map(|&(_, gap)| gap)
            .fold(0.0, f64::max)
    }

    fn oracle_ace(records: &[PredictionRecord], m: usize) -> f64 {
        let n = records.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| records[a].confidence.partial_cmp(&records[b].confidence).unwrap());
        let mut total = 0.0;
        for b in 0..m {
            let members: Vec<_> =
                idx[b * n / m..(b + 1) * n / m].iter().map(|&i| &records[i]).collect();
            let acc = members.iter().filter(|r| r.is_correct()).count() as f64
                / members.len() as f64;
            let conf =
                members.iter().map(|r| r.confidence).sum::<f64>() / members.len() as f64;
            total += (acc - conf).abs();
        }
        total / m as f64
    }

    fn oracle_ubce(records: &[PredictionRecord]) -> f64 {
        records
            .iter()
            .map(|r| {
                let t = if r.is_correct() { 1.0 } else { 0.0 };
                t * (1.0 - r.confidence) + (1.0 - t) * r.confidence
            })
            .sum::<f64>()
            / records.len() as f64
    }

    #[test]
    fn tumor_example_single_occupied_bin() {
        let bins = bin_records(&tumor_records(), BinningScheme::equal_width(10)).unwrap();
        assert_eq!(bins.len(), 10);
        let occupied: Vec<_> = bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(occupied[0].count, 5);
        assert!((occupied[0].lo - 0.9).abs() < 1e-12);
        assert!((occupied[0].mean_confidence.unwrap() - 0.9).abs() < 1e-12);
        assert!((occupied[0].accuracy.unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn confidence_one_lands_in_closed_last_bin() {
        let records = vec![rec("p", true, 1.0)];
        let bins = bin_records(&records, BinningScheme::equal_width(10)).unwrap();
        assert_eq!(bins[9].count, 1);
        assert_eq!(bins[9].accuracy, Some(1.0));
    }

    #[test]
    fn equal_count_sizes_differ_by_at_most_one() {
        let mut rng = SplitRng::new(42);
        let records = random_records(&mut rng, 20);
        let bins = bin_records(&records, BinningScheme::equal_count(4)).unwrap();
        let sizes: Vec<usize> = bins.iter().map(|b| b.count).collect();
        assert_eq!(sizes, vec![5, 5, 5, 5]);

        // Brute-force sorter oracle: same membership per bin.
        let mut sorted: Vec<f64> = records.iter().map(|r| r.confidence).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (b, bin) in bins.iter().enumerate() {
            assert_eq!(bin.lo, sorted[b * 5]);
            assert_eq!(bin.hi, sorted[b * 5 + 4]);
        }
    }

    #[test]
    fn ece_tumor_is_0_3() {
        assert!((ece(&tumor_records(), 10).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn ece_zero_for_perfect_confident_predictions() {
        let records: Vec<_> = (0..4).map(|i| rec(&format!("p{i}"), true, 1.0)).collect();
        assert_eq!(ece(&records, 10).unwrap(), 0.0);
    }

    #[test]
    fn metrics_match_oracles_on_random_records() {
        let mut rng = SplitRng::new(7);
        let records = random_records(&mut rng, 30);
        assert!((ece(&records, 10).unwrap() - oracle_ece(&records, 10)).abs() < 1e-12);
        assert!((mce(&records, 10).unwrap() - oracle_mce(&records, 10)).abs() < 1e-12);
        assert!((ubce_empirical(&records).unwrap() - oracle_ubce(&records)).abs() < 1e-12);
        let records40 = random_records(&mut rng, 40);
        assert!((ace(&records40, 5).unwrap() - oracle_ace(&records40, 5)).abs() < 1e-12);
    }

    #[test]
    fn mce_equals_ece_for_single_occupied_bin() {
        let records = tumor_records();
        let e = ece(&records, 10).unwrap();
        let m = mce(&records, 10).unwrap();
        assert!((e - m).abs() < 1e-12);
        assert!((m - 0.3).abs() < 1e-9);
    }

    #[test]
    fn mce_zero_for_calibrated_two_bin_set() {
        // Bin [0.2,0.3): conf 0.25, 1 of 4 correct. Bin [0.7,0.8): conf 0.75, 3 of 4 correct.
        let mut records = Vec::new();
        for i in 0..4 {
            records.push(rec(&format!("lo{i}"), i == 0, 0.25));
            records.push(rec(&format!("hi{i}"), i != 0, 0.75));
        }
        assert!(mce(&records, 10).unwrap() < 1e-12);
    }

    #[test]
    fn ace_single_bin_reduces_to_global_gap() {
        assert!((ace(&tumor_records(), 1).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn ace_zero_for_all_correct_full_confidence() {
        let records: Vec<_> = (0..4).map(|i| rec(&format!("p{i}"), true, 1.0)).collect();
        assert_eq!(ace(&records, 2).unwrap(), 0.0);
    }

    #[test]
    fn ace_rejects_more_bins_than_records() {
        let records = tumor_records();
        assert!(matches!(ace(&records, 6), Err(CalibError::InvalidBinning(_))));
    }

    #[test]
    fn ubce_tumor_is_0_42() {
        assert!((ubce_empirical(&tumor_records()).unwrap() - 0.42).abs() < 1e-9);
    }

    #[test]
    fn ubce_dominates_ece_across_bin_counts() {
        let mut rng = SplitRng::new(99);
        let records = random_records(&mut rng, 30);
        let u = ubce_empirical(&records).unwrap();
        for m in [1, 5, 10, 15] {
            assert!(ece(&records, m).unwrap() <= u + 1e-12);
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(ece(&[], 10), Err(CalibError::EmptyInput(_))));
        assert!(matches!(ubce_empirical(&[]), Err(CalibError::EmptyInput(_))));
        assert!(matches!(classification_report(&[]), Err(CalibError::EmptyInput(_))));
    }

    #[test]
    fn classification_all_correct() {
        let records: Vec<_> = (0..5).map(|i| rec(&format!("p{i}"), true, 0.8)).collect();
        let report = classification_report(&records).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.f1, 1.0);
    }

    #[test]
    fn classification_matches_confusion_matrix_oracle() {
        // yes/no with TP=3, FP=1, FN=1, TN=5 (yes as positive).
        let mut records = Vec::new();
        for i in 0..3 {
            records.push(PredictionRecord::new(format!("tp{i}"), "yes", "yes", 0.5).unwrap());
        }
        records.push(PredictionRecord::new("fp0", "yes", "no", 0.5).unwrap());
        records.push(PredictionRecord::new("fn0", "no", "yes", 0.5).unwrap());
        for i in 0..5 {
            records.push(PredictionRecord::new(format!("tn{i}"), "no", "no", 0.5).unwrap());
        }
        let report = classification_report(&records).unwrap();

        // Hand-computed from the confusion matrix.
        let p_yes = 3.0 / 4.0;
        let r_yes = 3.0 / 4.0;
        let f_yes = 2.0 * p_yes * r_yes / (p_yes + r_yes);
        let p_no = 5.0 / 6.0;
        let r_no = 5.0 / 6.0;
        let f_no = 2.0 * p_no * r_no / (p_no + r_no);
        assert!((report.accuracy - 0.8).abs() < 1e-12);
        assert!((report.precision - (p_yes + p_no) / 2.0).abs() < 1e-12);
        assert!((report.recall - (r_yes + r_no) / 2.0).abs() < 1e-12);
        assert!((report.f1 - (f_yes + f_no) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn never_predicted_class_scores_zero() {
        // Truth has "maybe" but it is never predicted.
        let records = vec![
            PredictionRecord::new("a", "yes", "yes", 0.5).unwrap(),
            PredictionRecord::new("b", "yes", "maybe", 0.5).unwrap(),
        ];
        let report = classification_report(&records).unwrap();
        // Classes: yes (p=0.5, r=1, f=2/3), maybe (0,0,0).
        assert!((report.precision - 0.25).abs() < 1e-12);
        assert!((report.recall - 0.5).abs() < 1e-12);
        assert!((report.f1 - (2.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn reliability_table_rows_ascending_and_flagged() {
        let table = reliability_table(&tumor_records(), BinningScheme::equal_width(10)).unwrap();
        assert_eq!(table.len(), 10);
        assert!(table.windows(2).all(|w| w[0].lo <= w[1].lo));
        assert_eq!(table.iter().filter(|b| b.count > 0).count(), 1);
        for b in &table {
            if b.count == 0 {
                assert!(b.mean_confidence.is_none() && b.accuracy.is_none());
            }
        }
    }

    #[test]
    fn reliability_csv_round_trips() {
        let mut rng = SplitRng::new(3);
        let records = random_records(&mut rng, 25);
        let table = reliability_table(&records, BinningScheme::equal_width(10)).unwrap();
        let csv = write_reliability_csv(&table);
        let back = read_reliability_csv(&csv).unwrap();
        assert_eq!(table.len(), back.len());
        for (a, b) in table.iter().zip(&back) {
            assert!((a.lo - b.lo).abs() < 1e-9);
            assert!((a.hi - b.hi).abs() < 1e-9);
            assert_eq!(a.count, b.count);
            match (a.mean_confidence, b.mean_confidence) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9),
                (None, None) => {}
                _ => panic!("absence not preserved"),
            }
        }
    }

    #[test]
    fn ece_one_bin_is_global_gap() {
        let mut rng = SplitRng::new(17);
        let records = random_records(&mut rng, 30);
        let acc = records.iter().filter(|r| r.is_correct()).count() as f64 / 30.0;
        let conf = records.iter().map(|r| r.confidence).sum::<f64>() / 30.0;
        assert!((ece(&records, 1).unwrap() - (acc - conf).abs()).abs() < 1e-12);
    }

    #[test]
    fn report_on_small_log_clamps_ace_bins() {
        let report = metrics_report(&tumor_records(), 10).unwrap();
        assert!((report.ece - 0.3).abs() < 1e-9);
        assert!((report.ubce - 0.42).abs() < 1e-9);
        assert_eq!(report.n, 5);
        assert!((report.ace - ace(&tumor_records(), 5).unwrap()).abs() < 1e-12);
    }
}
