use crate::error::{Error, Result};

use super::features::FeatureVec;

/// One-way ANOVA F statistic of a binary feature between two classes.
///
/// `ones_pos` and `ones_neg` count the instances of each class where the
/// feature is present. Zero within-class variance gives `+inf` when the class
/// means differ and `0` otherwise.
pub fn f_statistic(ones_pos: usize, n_pos: usize, ones_neg: usize, n_neg: usize) -> f64 {
    let n = (n_pos + n_neg) as f64;
    let (s1, s0) = (ones_pos as f64, ones_neg as f64);
    let (n1, n0) = (n_pos as f64, n_neg as f64);
    let m1 = s1 / n1;
    let m0 = s0 / n0;
    let m = (s1 + s0) / n;
    let between = n1 * (m1 - m).powi(2) + n0 * (m0 - m).powi(2);
    // Sum of squared deviations of a 0/1 sample: ones * (1 - mean).
    let within = s1 * (1.0 - m1) + s0 * (1.0 - m0);
    if within <= 0.0 {
        return if between > 0.0 { f64::INFINITY } else { 0.0 };
    }
    between / (within / (n - 2.0))
}

/// F statistic of every feature in `0..n_features` over the given instances.
pub fn f_scores(label: &str, rows: &[&FeatureVec], targets: &[bool], n_features: usize) -> Result<Vec<f64>> {
    let n_pos = targets.iter().filter(|&&t| t).count();
    let n_neg = targets.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabel(label.to_string()));
    }
    let mut pos = vec![0usize; n_features];
    let mut neg = vec![0usize; n_features];
    for (row, &t) in rows.iter().zip(targets) {
        let counts = if t { &mut pos } else { &mut neg };
        for &f in row.iter() {
            counts[f as usize] += 1;
        }
    }
    Ok((0..n_features)
        .map(|f| f_statistic(pos[f], n_pos, neg[f], n_neg))
        .collect())
}

/// Ids of the `k` features with the highest F, ties to the lower id. The
/// result is sorted by id.
pub fn top_k(scores: &[f64], k: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..scores.len() as u32).collect();
    order.sort_by(|&a, &b| {
        scores[b as usize]
            .total_cmp(&scores[a as usize])
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order.sort_unstable();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_f() {
        // Six instances, three per class. Feature present in 2 positives and
        // 1 negative: means 2/3 and 1/3, grand mean 1/2.
        // between = 3(1/6)^2 * 2 = 1/6; within = 2(1/3) + 1(2/3) = 4/3;
        // F = (1/6) / ((4/3) / 4) = 0.5.
        assert!((f_statistic(2, 3, 1, 3) - 0.5).abs() < 1e-12);
        // Present in all positives, one negative: means 1 and 1/3.
        // between = 3(1/3)^2 * 2 = 2/3; within = 0 + 2/3; F = (2/3)/(1/6) = 4.
        assert!((f_statistic(3, 3, 1, 3) - 4.0).abs() < 1e-12);
        assert_eq!(f_statistic(3, 3, 0, 3), f64::INFINITY);
        assert_eq!(f_statistic(3, 3, 3, 3), 0.0);
        assert_eq!(f_statistic(0, 3, 0, 3), 0.0);
    }

    #[test]
    fn ranking_and_degenerate() {
        let rows: Vec<FeatureVec> = vec![
            vec![0, 1, 3],
            vec![0, 3],
            vec![1, 3],
            vec![3],
            vec![0, 2, 3],
            vec![3],
        ];
        let refs: Vec<&FeatureVec> = rows.iter().collect();
        let y = [true, true, true, false, false, false];
        let s = f_scores("L", &refs, &y, 4).unwrap();
        let expected = [0.5, 4.0, 1.0, 0.0];
        for (a, b) in s.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{s:?}");
        }
        assert_eq!(top_k(&s, 2), vec![1, 2]);
        assert_eq!(top_k(&[1.0, 2.0, 2.0, 0.0], 2), vec![1, 2]);
        assert_eq!(top_k(&[0.0, 0.0, 0.0], 2), vec![0, 1]);
        assert!(matches!(f_scores("L", &refs, &[true; 6], 4), Err(Error::DegenerateLabel(_))));
    }
}
