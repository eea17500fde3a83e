//! Small numeric helpers shared across modules.

/// Arithmetic mean. Returns 0.0 for an empty slice so callers that average
/// over possibly-empty provenance groups do not need a special case.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divide by n, not n - 1). Stability reports
/// treat the seed list as the whole population of interest.
pub fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    var.sqrt()
}

/// Midranks (1-based, ties share the average of the positions they span).
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation. `None` when either input has zero variance or the
/// lengths are below two, where the coefficient is undefined.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "pearson requires equal-length inputs");
    if xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        dx += (x - mx) * (x - mx);
        dy += (y - my) * (y - my);
    }
    if dx == 0.0 || dy == 0.0 {
        return None;
    }
    Some(num / (dx.sqrt() * dy.sqrt()))
}

/// Spearman rank correlation with midrank tie handling.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "spearman requires equal-length inputs");
    pearson(&midranks(xs), &midranks(ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_std_known_values() {
        assert_eq!(mean(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(population_std(&[2.0, 2.0, 2.0]), 0.0);
        // Var([2,4,4,4,5,5,7,9]) = 4 for the population convention.
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((population_std(&xs) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn midranks_share_tied_positions() {
        assert_eq!(midranks(&[10.0, 20.0, 20.0, 30.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(midranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_monotone_extremes() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = [10.0, 20.0, 30.0, 40.0, 50.0];
        let down = [9.0, 7.0, 5.0, 3.0, 1.0];
        assert!((spearman(&xs, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_tie_case_matches_oracle() {
        // Oracle value from an independent statistics package.
        let xs = [1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 5.0, 8.0];
        let ys = [3.0, 1.0, 4.0, 4.0, 2.0, 6.0, 6.0, 7.0];
        assert!((spearman(&xs, &ys).unwrap() - 0.6647116801916952).abs() < 1e-12);
    }

    #[test]
    fn degenerate_series_yield_none() {
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        assert_eq!(pearson(&[1.0], &[2.0]), None);
    }
}
