//! Metrics and experiment drivers.
//!
//! Multi-class experiments produce confusion matrices (rows are the true
//! satellite, columns the prediction). Authenticator experiments produce
//! ROC curves where an image is accepted as legitimate when its
//! reconstruction error is below the threshold.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::autoenc::{stack_rows, train_autoencoder, AeHyperparams, ScgTrace, SparseAeModel};
use crate::cnn::{self, CnnFit, CnnSpec};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::imaging::{FingerprintImage, ImageSet};
use crate::iqcore::{derive_seed, holdout, SatId, SplitSpec};

/// Counts accumulated over one or more runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<SatId>,
    /// Row-major, `labels.len()²` entries.
    pub counts: Vec<u64>,
    pub runs: usize,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<SatId>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![0; n * n],
            runs: 0,
        }
    }

    /// One run's matrix. Predictions outside `labels` are rejected.
    pub fn from_predictions(labels: Vec<SatId>, truth: &[SatId], pred: &[SatId]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                actual: pred.len(),
            });
        }
        let mut cm = ConfusionMatrix::new(labels);
        cm.runs = 1;
        for (t, p) in truth.iter().zip(pred) {
            let (r, c) = (cm.index(*t)?, cm.index(*p)?);
            let n = cm.n();
            cm.counts[r * n + c] += 1;
        }
        Ok(cm)
    }

    fn index(&self, s: SatId) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == s)
            .ok_or(Error::MissingSatellite(s))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n() + pred]
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth * self.n()..(truth + 1) * self.n()].iter().sum()
    }

    /// Adds another run (or batch of runs) with the same labels.
    pub fn accumulate(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.labels != self.labels {
            return Err(Error::invalid("confusion matrices have different labels"));
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.runs += other.runs;
        Ok(())
    }

    /// Entry-wise mean over runs.
    pub fn mean(&self) -> Vec<f64> {
        let r = self.runs.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / r).collect()
    }

    pub fn accuracy(&self) -> f64 {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let diag: u64 = (0..self.n()).map(|k| self.get(k, k)).sum();
        diag as f64 / total as f64
    }

    /// Class order by descending hit rate, ties broken by lower sat id.
    pub fn diagonal_order(&self) -> Vec<usize> {
        let rate = |k: usize| {
            let s = self.row_sum(k);
            if s == 0 {
                0.0
            } else {
                self.get(k, k) as f64 / s as f64
            }
        };
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| rate(b).total_cmp(&rate(a)).then(self.labels[a].cmp(&self.labels[b])));
        order
    }

    /// Same matrix with rows and columns reordered by [`Self::diagonal_order`].
    pub fn sorted_by_diagonal(&self) -> ConfusionMatrix {
        self.permuted(&self.diagonal_order())
    }

    pub fn permuted(&self, order: &[usize]) -> ConfusionMatrix {
        let n = self.n();
        let mut out = ConfusionMatrix::new(order.iter().map(|&k| self.labels[k]).collect());
        out.runs = self.runs;
        for (i, &r) in order.iter().enumerate() {
            for (j, &c) in order.iter().enumerate() {
                out.counts[i * n + j] = self.get(r, c);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassRates {
    pub sat_id: SatId,
    pub hit: f64,
    pub miss: f64,
}

/// Per-class `TP/(TP+FN)` and `FN/(TP+FN)`.
pub fn hit_miss_rates(cm: &ConfusionMatrix) -> Result<Vec<ClassRates>> {
    (0..cm.n())
        .map(|k| {
            let total = cm.row_sum(k);
            if total == 0 {
                return Err(Error::EmptyClass(cm.labels[k]));
            }
            let tp = cm.get(k, k);
            Ok(ClassRates {
                sat_id: cm.labels[k],
                hit: tp as f64 / total as f64,
                miss: (total - tp) as f64 / total as f64,
            })
        })
        .collect()
}

/// Sums `k` runs of `run(index, seed)`, each with a seed derived from
/// `master_seed`. Any failure discards the partial result.
pub fn repeated_runs<F>(k: usize, master_seed: u64, run: F) -> Result<ConfusionMatrix>
where
    F: Fn(usize, u64) -> Result<ConfusionMatrix>,
{
    if k == 0 {
        return Err(Error::invalid("at least one run required"));
    }
    let mut total = run(0, derive_seed(master_seed, 0))?;
    for i in 1..k {
        total.accumulate(&run(i, derive_seed(master_seed, i as u64))?)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExclusionStep {
    pub n_removed: usize,
    /// Class dropped after this step was evaluated.
    pub removed_next: Option<SatId>,
    pub accuracy: f64,
    pub matrix: ConfusionMatrix,
}

/// Evaluates `labels`, drops the class with the lowest hit rate (lowest sat
/// id on ties), and repeats `max_removals` times.
pub fn exclusion_sweep<F>(labels: &[SatId], max_removals: usize, mut evaluate: F) -> Result<Vec<ExclusionStep>>
where
    F: FnMut(&[SatId]) -> Result<ConfusionMatrix>,
{
    if max_removals + 1 >= labels.len() {
        return Err(Error::invalid(format!(
            "cannot remove {max_removals} of {} classes",
            labels.len()
        )));
    }
    let mut keep = labels.to_vec();
    let mut steps: Vec<ExclusionStep> = Vec::new();
    for n_removed in 0..=max_removals {
        let cm = evaluate(&keep)?;
        let worst = {
            let rates = hit_miss_rates(&cm)?;
            rates
                .iter()
                .min_by(|a, b| a.hit.total_cmp(&b.hit).then(a.sat_id.cmp(&b.sat_id)))
                .map(|r| r.sat_id)
                .unwrap()
        };
        log::info!(
            "exclusion sweep: {} classes, accuracy {:.4}, worst {worst}",
            keep.len(),
            cm.accuracy()
        );
        steps.push(ExclusionStep {
            n_removed,
            removed_next: (n_removed < max_removals).then_some(worst),
            accuracy: cm.accuracy(),
            matrix: cm,
        });
        keep.retain(|&s| s != worst);
    }
    Ok(steps)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// Ordered by increasing threshold, from (0, 0) to (1, 1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
    /// Point maximizing `tpr − fpr`.
    pub optimal: RocPoint,
}

impl RocCurve {
    /// Euclidean distance of the optimal point from (0, 1).
    pub fn optimal_distance(&self) -> f64 {
        self.optimal.fpr.hypot(1.0 - self.optimal.tpr)
    }
}

/// ROC of the rule "accept when score < threshold", swept over every
/// observed score plus guards below and above the range.
pub fn roc_auc(in_scores: &[f64], out_scores: &[f64]) -> Result<RocCurve> {
    if in_scores.is_empty() || out_scores.is_empty() {
        return Err(Error::invalid("ROC needs in-class and out-of-class scores"));
    }
    if in_scores.iter().chain(out_scores).any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let mut ins = in_scores.to_vec();
    let mut outs = out_scores.to_vec();
    ins.sort_by(f64::total_cmp);
    outs.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = ins.iter().chain(&outs).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let (lo, hi) = (thresholds[0], *thresholds.last().unwrap());
    let eps = 1e-9 * (hi - lo).max(1.0);
    thresholds.insert(0, lo - eps);
    thresholds.push(hi + eps);

    let (n_in, n_out) = (ins.len() as f64, outs.len() as f64);
    let (mut i, mut o) = (0, 0);
    let points: Vec<RocPoint> = thresholds
        .iter()
        .map(|&thr| {
            while i < ins.len() && ins[i] < thr {
                i += 1;
            }
            while o < outs.len() && outs[o] < thr {
                o += 1;
            }
            RocPoint {
                threshold: thr,
                fpr: o as f64 / n_out,
                tpr: i as f64 / n_in,
            }
        })
        .collect();
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5)
        .sum();
    let optimal = *points
        .iter()
        .reduce(|best, p| if p.tpr - p.fpr > best.tpr - best.fpr { p } else { best })
        .unwrap();
    Ok(RocCurve { points, auc, optimal })
}

/// Probability that an in-class score is below an out-of-class one, ties
/// counting one half.
pub fn mann_whitney_auc(in_scores: &[f64], out_scores: &[f64]) -> f64 {
    let mut outs = out_scores.to_vec();
    outs.sort_by(f64::total_cmp);
    let wins: f64 = in_scores
        .iter()
        .map(|&a| {
            let below = outs.partition_point(|&b| b <= a);
            let strictly_below = outs.partition_point(|&b| b < a);
            (outs.len() - below) as f64 + 0.5 * (below - strictly_below) as f64
        })
        .sum();
    wins / (in_scores.len() as f64 * outs.len() as f64)
}

/// Linear-interpolation quantile (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (k, frac) = (pos.floor() as usize, pos.fract());
    if k + 1 < v.len() {
        v[k] + frac * (v[k + 1] - v[k])
    } else {
        v[k]
    }
}

/// 5th, 50th and 95th percentiles.
pub fn quantiles_5_50_95(values: &[f64]) -> [f64; 3] {
    [0.05, 0.5, 0.95].map(|q| quantile(values, q))
}

/// Multi-class run: split, train, test.
#[derive(Clone, Debug)]
pub struct MulticlassRun {
    pub matrix: ConfusionMatrix,
    pub fit: CnnFit,
    pub test_accuracy: f64,
}

pub fn run_multiclass(set: &ImageSet, spec: &CnnSpec, split: &SplitSpec) -> Result<MulticlassRun> {
    let [train, val, test] = cnn::split_images(set, split)?;
    let fit = cnn::train(spec, &train, &val)?;
    let pred = fit.model.predict_images(&test)?;
    let truth: Vec<SatId> = test.iter().map(|im| im.sat_id).collect();
    let matrix = ConfusionMatrix::from_predictions(fit.model.labels.clone(), &truth, &pred)?;
    Ok(MulticlassRun {
        test_accuracy: matrix.accuracy(),
        matrix,
        fit,
    })
}

/// Settings shared by the authenticator experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuthConfig {
    pub hp: AeHyperparams,
    /// Fraction of the reference satellite's images used for training.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for AuthConfig {
    fn default() -> Self {
        AuthConfig {
            hp: AeHyperparams::default(),
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// A reference satellite's autoencoder and the scores it gives every image
/// outside its training set.
#[derive(Clone, Debug)]
pub struct ReferenceScores {
    pub sat_id: SatId,
    pub model: SparseAeModel,
    pub trace: ScgTrace,
    /// Held-out images of the reference satellite.
    pub in_scores: Vec<f64>,
    /// All images of every other satellite.
    pub out_scores: BTreeMap<SatId, Vec<f64>>,
}

impl ReferenceScores {
    pub fn pooled_out(&self) -> Vec<f64> {
        self.out_scores.values().flatten().copied().collect()
    }
}

fn unit_rows(images: &[&FingerprintImage]) -> Result<ndarray::Array2<f64>> {
    stack_rows(&images.iter().map(|im| im.to_unit()).collect::<Vec<_>>())
}

/// Trains the reference autoencoder on `train_fraction` of `sat`'s images
/// and scores the rest of the set.
pub fn score_reference(set: &ImageSet, sat: SatId, cfg: &AuthConfig) -> Result<ReferenceScores> {
    let own = set.of(sat);
    if own.is_empty() {
        return Err(Error::MissingSatellite(sat));
    }
    let (train, test) = holdout(&own, cfg.train_fraction, cfg.seed, u64::from(sat.0));
    if train.is_empty() || test.is_empty() {
        return Err(Error::InsufficientImages {
            sat_id: sat,
            have: own.len(),
            need: 2,
        });
    }
    let fit = train_autoencoder(unit_rows(&train)?.view(), &cfg.hp, derive_seed(cfg.seed, u64::from(sat.0)))?;
    let in_scores = fit.model.score_batch(unit_rows(&test)?.view())?;
    let mut out_scores = BTreeMap::new();
    for other in set.labels().into_iter().filter(|&s| s != sat) {
        out_scores.insert(other, fit.model.score_batch(unit_rows(&set.of(other))?.view())?);
    }
    log::info!(
        "reference {sat}: {} training images, objective {:.5} -> {:.5}",
        train.len(),
        fit.trace.initial(),
        fit.trace.last()
    );
    Ok(ReferenceScores {
        sat_id: sat,
        model: fit.model,
        trace: fit.trace,
        in_scores,
        out_scores,
    })
}

/// Scores every satellite of the set as a reference. References are
/// trained in parallel.
pub fn score_all_references(set: &ImageSet, cfg: &AuthConfig) -> Result<Vec<ReferenceScores>> {
    set.labels()
        .into_par_iter()
        .map(|s| score_reference(set, s, cfg))
        .collect()
}

/// Reference against the pooled rest of the constellation.
pub fn one_vs_rest(r: &ReferenceScores) -> Result<RocCurve> {
    roc_auc(&r.in_scores, &r.pooled_out())
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneVsOne {
    pub sat_id: SatId,
    pub opponents: Vec<(SatId, f64)>,
    /// 5th, 50th and 95th percentile of the opponent AUCs.
    pub quantiles: [f64; 3],
}

/// Reference against each other satellite separately.
pub fn one_vs_one(r: &ReferenceScores) -> Result<OneVsOne> {
    if r.out_scores.is_empty() {
        return Err(Error::invalid("one-vs-one needs at least two satellites"));
    }
    let opponents: Vec<(SatId, f64)> = r
        .out_scores
        .iter()
        .map(|(&s, out)| Ok((s, roc_auc(&r.in_scores, out)?.auc)))
        .collect::<Result<_>>()?;
    let aucs: Vec<f64> = opponents.iter().map(|(_, a)| *a).collect();
    Ok(OneVsOne {
        sat_id: r.sat_id,
        quantiles: quantiles_5_50_95(&aucs),
        opponents,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Mean confusion matrix, rows and columns sorted by the diagonal.
pub fn write_confusion_csv(path: impl AsRef<Path>, cm: &ConfusionMatrix) -> Result<()> {
    let s = cm.sorted_by_diagonal();
    let mean = s.mean();
    let mut out = String::from("true\\pred");
    for l in &s.labels {
        let _ = write!(out, ",{l}");
    }
    out.push('\n');
    for (r, l) in s.labels.iter().enumerate() {
        let _ = write!(out, "{l}");
        for c in 0..s.n() {
            let _ = write!(out, ",{}", mean[r * s.n() + c]);
        }
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

pub fn write_rates_csv(path: impl AsRef<Path>, rates: &[ClassRates]) -> Result<()> {
    let mut out = String::from("sat_id,hit_rate,miss_rate\n");
    for r in rates {
        let _ = writeln!(out, "{},{},{}", r.sat_id, r.hit, r.miss);
    }
    write_text(path.as_ref(), &out)
}

pub fn write_roc_csv(path: impl AsRef<Path>, roc: &RocCurve) -> Result<()> {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &roc.points {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    write_text(path.as_ref(), &out)
}

pub fn write_auc_table(path: impl AsRef<Path>, rows: &[(SatId, RocCurve)]) -> Result<()> {
    let mut out = String::from("sat_id,auc,optimal_fpr,optimal_tpr,optimal_threshold\n");
    for (s, r) in rows {
        let _ = writeln!(out, "{s},{},{},{},{}", r.auc, r.optimal.fpr, r.optimal.tpr, r.optimal.threshold);
    }
    write_text(path.as_ref(), &out)
}

pub fn write_one_vs_one_csv(path: impl AsRef<Path>, rows: &[OneVsOne]) -> Result<()> {
    let mut out = String::from("reference,opponent,auc\n");
    for r in rows {
        for (o, a) in &r.opponents {
            let _ = writeln!(out, "{},{o},{a}", r.sat_id);
        }
    }
    write_text(path.as_ref(), &out)
}

pub fn write_quantiles_csv(path: impl AsRef<Path>, rows: &[OneVsOne]) -> Result<()> {
    let mut out = String::from("sat_id,q05,q50,q95\n");
    for r in rows {
        let [a, b, c] = r.quantiles;
        let _ = writeln!(out, "{},{a},{b},{c}", r.sat_id);
    }
    write_text(path.as_ref(), &out)
}

pub fn write_exclusion_csv(path: impl AsRef<Path>, steps: &[ExclusionStep]) -> Result<()> {
    let mut out = String::from("n_removed,accuracy,removed_next\n");
    for s in steps {
        let next = s.removed_next.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(out, "{},{},{next}", s.n_removed, s.accuracy);
    }
    write_text(path.as_ref(), &out)
}

/// Key-value summary file: the echoed configuration plus results.
pub fn write_summary(path: impl AsRef<Path>, config: &KvConfig, results: &[(&str, String)]) -> Result<()> {
    let mut all = config.clone();
    for (k, v) in results {
        all.set(format!("result.{k}"), v);
    }
    all.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sats(ids: &[u16]) -> Vec<SatId> {
        ids.iter().map(|&i| SatId(i)).collect()
    }

    #[test]
    fn two_class_rates() {
        let cm = ConfusionMatrix {
            labels: sats(&[1, 2]),
            counts: vec![3, 1, 0, 4],
            runs: 1,
        };
        let r = hit_miss_rates(&cm).unwrap();
        assert_eq!((r[0].hit, r[1].hit), (0.75, 1.0));
        assert!(r.iter().all(|c| c.hit + c.miss == 1.0));
        assert_eq!(cm.accuracy(), 7.0 / 8.0);
    }

    #[test]
    fn empty_class_is_error() {
        let cm = ConfusionMatrix {
            labels: sats(&[1, 2]),
            counts: vec![3, 0, 0, 0],
            runs: 1,
        };
        assert!(matches!(hit_miss_rates(&cm), Err(Error::EmptyClass(SatId(2)))));
    }

    #[test]
    fn sorted_by_diagonal_with_tiebreak() {
        let cm = ConfusionMatrix {
            labels: sats(&[5, 3, 9]),
            counts: vec![1, 1, 0, 0, 2, 0, 0, 0, 2],
            runs: 1,
        };
        let s = cm.sorted_by_diagonal();
        assert_eq!(s.labels, sats(&[3, 9, 5]));
        assert_eq!(s.get(2, 2), 1);
        assert_eq!(s.get(2, 0), 1);
    }

    #[test]
    fn identical_runs_average_to_one_run() {
        let one = ConfusionMatrix::from_predictions(sats(&[1, 2]), &sats(&[1, 1, 2]), &sats(&[1, 2, 2])).unwrap();
        let total = repeated_runs(5, 3, |_, _| Ok(one.clone())).unwrap();
        assert_eq!(total.runs, 5);
        assert_eq!(total.mean(), one.mean());
        assert_eq!(total.row_sum(0), 10);
    }

    #[test]
    fn run_seeds_differ() {
        let seen = std::sync::Mutex::new(Vec::new());
        repeated_runs(3, 11, |_, seed| {
            seen.lock().unwrap().push(seed);
            Ok(ConfusionMatrix::from_predictions(sats(&[1, 2]), &sats(&[1]), &sats(&[1]))?)
        })
        .unwrap();
        let s = seen.into_inner().unwrap();
        assert!(s[0] != s[1] && s[1] != s[2]);
    }

    #[test]
    fn exclusion_drops_worst_first() {
        // class k is classified correctly with probability k/4
        let steps = exclusion_sweep(&sats(&[1, 2, 3, 4]), 2, |keep| {
            let mut truth = Vec::new();
            let mut pred = Vec::new();
            for &s in keep {
                for i in 0..4 {
                    truth.push(s);
                    let other = *keep.iter().find(|&&x| x != s).unwrap();
                    pred.push(if i < s.0 { s } else { other });
                }
            }
            ConfusionMatrix::from_predictions(keep.to_vec(), &truth, &pred)
        })
        .unwrap();
        assert_eq!(steps.len(), 3);
        assert_eq!(steps[0].removed_next, Some(SatId(1)));
        assert_eq!(steps[2].removed_next, None);
        assert!(steps[2].accuracy >= steps[0].accuracy);
        assert!(exclusion_sweep(&sats(&[1, 2]), 1, |_| unreachable!()).is_err());
    }

    #[test]
    fn roc_examples() {
        let r = roc_auc(&[0.2, 0.3, 0.4], &[0.35, 0.7, 0.9]).unwrap();
        assert!((r.auc - 8.0 / 9.0).abs() < 1e-12);
        let first = r.points[0];
        let last = *r.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));

        let sep = roc_auc(&[0.1, 0.2], &[0.7, 1.4]).unwrap();
        assert_eq!(sep.auc, 1.0);
        assert_eq!((sep.optimal.fpr, sep.optimal.tpr), (0.0, 1.0));
        assert_eq!(sep.optimal_distance(), 0.0);
    }

    #[test]
    fn tied_scores_count_half() {
        let r = roc_auc(&[0.5, 0.5], &[0.5]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(mann_whitney_auc(&[0.5, 0.5], &[0.5]), 0.5);
        assert!((mann_whitney_auc(&[0.2, 0.3, 0.4], &[0.35, 0.7, 0.9]) - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_values() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(quantiles_5_50_95(&v), [5.0, 50.0, 95.0]);
        assert_eq!(quantiles_5_50_95(&[0.97]), [0.97; 3]);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }
}
