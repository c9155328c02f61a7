use super::BaselineError;

/// Area under the ROC curve as the Mann-Whitney statistic, with tied scores
/// assigned their average rank (each tied positive/negative pair counts ½).
pub fn roc_auc(scores: &[(f64, bool)]) -> Result<f64, BaselineError> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(BaselineError::SingleClass);
    }
    if scores.iter().any(|s| s.0.is_nan()) {
        return Err(BaselineError::NonFiniteScore);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].0 == scores[order[i]].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| scores[k].1).count();
        rank_sum += avg * tied_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Scores of positives and negatives merged into one labelled list.
pub fn auc_of(pos: &[f64], neg: &[f64]) -> Result<f64, BaselineError> {
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).collect();
    all.extend(neg.iter().map(|&s| (s, false)));
    roc_auc(&all)
}
