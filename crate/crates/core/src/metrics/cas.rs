//! Classification accuracy score: fit a classifier on generated samples,
//! score it on held-out real samples.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{logreg_fit, LogRegModel};
use crate::data::LabeledDataset;
use crate::geometry::phi;
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_C_GRID: [f64; 9] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];

/// Area under the ROC curve as the Mann–Whitney statistic; ties count one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels("ROC-AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average 1-based ranks over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg_rank * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// `2TP / (2TP + FP + FN)`; zero when there are no positives at all.
pub fn f1_score(predicted: &[bool], positive: &[bool]) -> Result<f64> {
    if predicted.len() != positive.len() {
        return Err(Error::invalid("predictions and labels differ in length"));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(positive) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let den = 2 * tp + fp + fn_;
    Ok(if den == 0 { 0.0 } else { 2.0 * tp as f64 / den as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CasConfig {
    pub c_grid: Vec<f64>,
    pub folds: usize,
    pub balanced: bool,
    pub seed: u64,
}

impl Default for CasConfig {
    fn default() -> Self {
        CasConfig {
            c_grid: DEFAULT_C_GRID.to_vec(),
            folds: 5,
            balanced: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasReport {
    pub roc_auc: f64,
    pub f1: f64,
    pub chosen_c: f64,
    /// Held-out ROC-AUC of each fold at the chosen `C`.
    pub cv_scores: Vec<f64>,
    /// Mean cross-validated ROC-AUC for every grid value, in grid order.
    pub cv_mean_by_c: Vec<f64>,
    pub classes: Vec<i64>,
}

/// One-vs-rest logistic models; a single model when there are two classes.
struct Classifier {
    classes: Vec<i64>,
    models: Vec<LogRegModel>,
}

impl Classifier {
    fn fit(x: &[Vec<f64>], y: &[i64], classes: &[i64], c: f64, balanced: bool) -> Result<Self> {
        let targets: &[i64] = if classes.len() == 2 { &classes[1..] } else { classes };
        let models = targets
            .iter()
            .map(|&k| {
                let pos: Vec<bool> = y.iter().map(|&l| l == k).collect();
                logreg_fit(x, &pos, c, balanced)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Classifier {
            classes: classes.to_vec(),
            models,
        })
    }

    /// Macro ROC-AUC and macro F1 on labeled points.
    fn score(&self, x: &[Vec<f64>], y: &[i64]) -> Result<(f64, f64)> {
        if self.classes.len() == 2 {
            let m = &self.models[0];
            let pos: Vec<bool> = y.iter().map(|&l| l == self.classes[1]).collect();
            let scores: Vec<f64> = x.iter().map(|xi| m.decision(xi)).collect();
            let pred: Vec<bool> = x.iter().map(|xi| m.predict_proba(xi) >= 0.5).collect();
            return Ok((roc_auc(&scores, &pos)?, f1_score(&pred, &pos)?));
        }
        let probs: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| self.models.iter().map(|m| m.predict_proba(xi)).collect())
            .collect();
        let argmax: Vec<usize> = probs
            .iter()
            .map(|p| (0..p.len()).fold(0, |best, k| if p[k] > p[best] { k } else { best }))
            .collect();
        let (mut auc, mut f1) = (0.0, 0.0);
        for (k, &label) in self.classes.iter().enumerate() {
            let pos: Vec<bool> = y.iter().map(|&l| l == label).collect();
            let scores: Vec<f64> = x.iter().map(|xi| self.models[k].decision(xi)).collect();
            auc += roc_auc(&scores, &pos)?;
            let pred: Vec<bool> = argmax.iter().map(|&a| a == k).collect();
            f1 += f1_score(&pred, &pos)?;
        }
        let k = self.classes.len() as f64;
        Ok((auc / k, f1 / k))
    }
}

/// Stratified fold index per sample; classes are shuffled independently and
/// dealt round-robin so fold sizes differ by at most one.
fn stratified_folds(y: &[i64], classes: &[i64], folds: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed, rng::STREAM_FOLDS);
    let mut fold_of = vec![0; y.len()];
    let mut next = 0;
    for &k in classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == k).collect();
        members.shuffle(&mut r);
        for i in members {
            fold_of[i] = next % folds;
            next += 1;
        }
    }
    fold_of
}

/// CAS on pre-computed features.
///
/// With two classes the larger label is the positive one. With more, scores
/// are macro averages of one-vs-rest ROC-AUC and of per-class F1 under
/// argmax prediction.
pub fn cas_evaluate_embedded(
    gen_x: &[Vec<f64>],
    gen_y: &[i64],
    test_x: &[Vec<f64>],
    test_y: &[i64],
    cfg: &CasConfig,
) -> Result<CasReport> {
    if gen_x.len() != gen_y.len() || test_x.len() != test_y.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    if cfg.c_grid.is_empty() || cfg.c_grid.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::invalid("C grid must be non-empty and positive"));
    }
    let mut classes = gen_y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut test_classes = test_y.to_vec();
    test_classes.sort_unstable();
    test_classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "generated data holds {} class(es)",
            classes.len()
        )));
    }
    if classes != test_classes {
        return Err(Error::DegenerateLabels(format!(
            "class sets differ: generated {classes:?}, test {test_classes:?}"
        )));
    }
    let min_count = classes
        .iter()
        .map(|&k| gen_y.iter().filter(|&&l| l == k).count())
        .min()
        .unwrap_or(0);
    let folds = cfg.folds.min(min_count);
    if folds < 2 {
        return Err(Error::DegenerateLabels(
            "too few samples per class for cross-validation".into(),
        ));
    }
    let fold_of = stratified_folds(gen_y, &classes, folds, cfg.seed);

    let jobs: Vec<(usize, usize)> = (0..cfg.c_grid.len())
        .flat_map(|ci| (0..folds).map(move |f| (ci, f)))
        .collect();
    let fold_scores = jobs
        .par_iter()
        .map(|&(ci, f)| {
            let (mut tr_x, mut tr_y, mut va_x, mut va_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..gen_x.len() {
                if fold_of[i] == f {
                    va_x.push(gen_x[i].clone());
                    va_y.push(gen_y[i]);
                } else {
                    tr_x.push(gen_x[i].clone());
                    tr_y.push(gen_y[i]);
                }
            }
            let clf = Classifier::fit(&tr_x, &tr_y, &classes, cfg.c_grid[ci], cfg.balanced)?;
            Ok(clf.score(&va_x, &va_y)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;

    let cv_mean_by_c: Vec<f64> = fold_scores
        .chunks(folds)
        .map(|s| s.iter().sum::<f64>() / folds as f64)
        .collect();
    // First maximum wins, so ties go to the stronger regularization.
    let best = (0..cv_mean_by_c.len()).fold(0, |b, k| if cv_mean_by_c[k] > cv_mean_by_c[b] { k } else { b });
    let chosen_c = cfg.c_grid[best];
    let clf = Classifier::fit(gen_x, gen_y, &classes, chosen_c, cfg.balanced)?;
    let (roc_auc, f1) = clf.score(test_x, test_y)?;
    Ok(CasReport {
        roc_auc,
        f1,
        chosen_c,
        cv_scores: fold_scores[best * folds..(best + 1) * folds].to_vec(),
        cv_mean_by_c,
        classes,
    })
}

/// CAS with `φ`-embeddings as features.
pub fn cas_evaluate(gen: &LabeledDataset, real_test: &LabeledDataset, cfg: &CasConfig) -> Result<CasReport> {
    if gen.manifold != real_test.manifold || gen.dim != real_test.dim {
        return Err(Error::invalid("generated and test data live on different spaces"));
    }
    let embed = |ds: &LabeledDataset| -> Result<Vec<Vec<f64>>> {
        ds.matrices
            .par_iter()
            .map(|m| phi(m).map(|z| z.into_values()))
            .collect()
    };
    cas_evaluate_embedded(&embed(gen)?, &gen.labels, &embed(real_test)?, &real_test.labels, cfg)
}
