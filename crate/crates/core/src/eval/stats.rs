use crate::{Error, Result, Scalar};

/// Fraction of predictions that differ from the labels.
pub fn error_rate(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::Input(format!(
            "error rate needs equal non-empty inputs, got {} predictions and {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let wrong = predictions.iter().zip(labels).filter(|(p, l)| p != l).count();
    Ok(wrong as f64 / predictions.len() as f64)
}

/// Mean over samples of the largest class probability.
pub fn mean_confidence<T: Scalar, V: AsRef<[T]>>(distributions: &[V]) -> Result<T> {
    if distributions.is_empty() {
        return Err(Error::Input("mean confidence of zero samples".into()));
    }
    let mut total = T::zero();
    for d in distributions {
        let d = d.as_ref();
        if d.is_empty() {
            return Err(Error::Input("empty probability vector".into()));
        }
        total += d.iter().copied().fold(T::neg_infinity(), T::max);
    }
    Ok(total / T::lit(distributions.len() as f64))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN in ranked data"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = T::lit((start + 1 + end) as f64 / 2.0);
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Input(format!(
            "correlation needs two equal-length inputs of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("correlation input contains NaN or infinity".into()));
    }
    let n = T::lit(xs.len() as f64);
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::Numeric("correlation is undefined for constant input".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one()))
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
pub fn spearman<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::Numeric("spearman input contains NaN".into()));
    }
    if xs.len() != ys.len() {
        return Err(Error::Input(format!("spearman inputs differ in length: {} vs {}", xs.len(), ys.len())));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// `mean(source errors) / mean(source uncertainties)`.
pub fn scale_factor<T: Scalar>(errors_source: &[T], uncertainties_source: &[T]) -> Result<T> {
    if errors_source.is_empty() || uncertainties_source.is_empty() {
        return Err(Error::Input("scaling needs source-domain errors and uncertainties".into()));
    }
    let mean = |v: &[T]| v.iter().copied().sum::<T>() / T::lit(v.len() as f64);
    let mu = mean(uncertainties_source);
    if !(mu > T::zero()) {
        return Err(Error::Numeric(format!(
            "mean source uncertainty is {mu}; cannot scale by it"
        )));
    }
    Ok(mean(errors_source) / mu)
}

/// Multiplies every value by [`scale_factor`], putting uncertainties on the error scale.
pub fn scale_uncertainties<T: Scalar>(values: &[T], errors_source: &[T], uncertainties_source: &[T]) -> Result<Vec<T>> {
    let factor = scale_factor(errors_source, uncertainties_source)?;
    Ok(values.iter().map(|&v| v * factor).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn error_rate_examples() {
        assert_eq!(error_rate(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(error_rate(&[0, 0], &[1, 1]).unwrap(), 1.0);
        assert_eq!(error_rate(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.25);
        assert!(error_rate(&[], &[]).is_err());
        assert!(error_rate(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn mean_confidence_examples() {
        let one_hot = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(mean_confidence::<f64, _>(&one_hot).unwrap(), 1.0);
        let uniform = vec![vec![0.1; 10]; 3];
        assert!((mean_confidence::<f64, _>(&uniform).unwrap() - 0.1).abs() < 1e-15);
        let mixed = [[0.6, 0.4], [0.8, 0.2]];
        assert!((mean_confidence::<f64, _>(&mixed).unwrap() - 0.7).abs() < 1e-15);
        assert!(mean_confidence::<f64, Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0f64, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0f64, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0f64, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Numeric(_))));
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn scaling_examples() {
        let v = [0.1f64, 0.2, 0.05];
        assert_eq!(scale_uncertainties(&v, &[0.3, 0.3], &[0.3]).unwrap(), v.to_vec());
        let doubled = scale_uncertainties(&v, &[0.2], &[0.1]).unwrap();
        for (a, b) in doubled.iter().zip(v) {
            assert!((a - 2.0 * b).abs() < 1e-15);
        }
        assert!(matches!(scale_uncertainties(&v, &[0.2], &[0.0]), Err(Error::Numeric(_))));
    }

    fn distinct_values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 3..30)
            .prop_filter("need at least two distinct values", |v| v.iter().any(|&x| x != v[0]))
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_increasing_maps(xs in distinct_values(), seed in 0u64..1000) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| (x * 0.3 + ((i as u64 * 7919 + seed) % 13) as f64).sin()).collect();
            prop_assume!(ys.iter().any(|&y| y != ys[0]));
            let base = spearman(&xs, &ys).unwrap();
            let exp_x: Vec<f64> = xs.iter().map(|x| (x / 50.0).exp()).collect();
            let affine_y: Vec<f64> = ys.iter().map(|y| 3.0 * y + 11.0).collect();
            prop_assert!((spearman(&exp_x, &ys).unwrap() - base).abs() < 1e-12);
            prop_assert!((spearman(&xs, &affine_y).unwrap() - base).abs() < 1e-12);
            prop_assert!((spearman(&ys, &xs).unwrap() - base).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }

        #[test]
        fn spearman_self_and_negated(xs in distinct_values()) {
            let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
            prop_assert!((spearman(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((spearman(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        }

        #[test]
        fn scaling_preserves_rank_order(values in prop::collection::vec(0.0f64..1.0, 2..30), e in 0.01f64..1.0, u in 0.01f64..1.0) {
            let scaled = scale_uncertainties(&values, &[e], &[u]).unwrap();
            prop_assert_eq!(average_ranks(&values), average_ranks(&scaled));
            let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
            prop_assert_eq!(argmax(&values), argmax(&scaled));
            if values.iter().any(|&x| x != values[0]) {
                prop_assert!((spearman(&values, &scaled).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }
}
