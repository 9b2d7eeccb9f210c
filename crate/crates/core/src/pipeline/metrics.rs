//! Correlation coefficients and their qualitative reading.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            op: "correlation",
            lhs: vec![x.len()],
            rhs: vec![y.len()],
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    Ok(())
}

/// Sample Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    // Tested on the inputs: the rounded mean of identical values can miss them by an
    // ulp, which would leave a tiny non-zero variance.
    if is_constant(x) || is_constant(y) {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    if !r.is_finite() {
        return Err(Error::NonFinite {
            op: "pearson".into(),
        });
    }
    Ok(r.clamp(-1.0, 1.0))
}

fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|v| *v == values[0])
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Number of tied pairs, summed over runs of equal values in a sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of inversions (pairs out of order).
fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b, computed in `O(n log n)` with Knight's merge-sort method.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| match a.0.total_cmp(&b.0) {
        Ordering::Equal => a.1.total_cmp(&b.1),
        o => o,
    });

    let n0 = n * (n - 1) / 2;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tie_x = tied_pairs(&xs);
    let tie_xy = tied_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = count_inversions(&mut ys, &mut buf);
    let tie_y = tied_pairs(&ys);

    let denom_x = n0 - tie_x;
    let denom_y = n0 - tie_y;
    if denom_x == 0 || denom_y == 0 {
        return Err(Error::UndefinedCorrelation("all values tied"));
    }
    // concordant − discordant
    let numerator = n0 as i128 - tie_x as i128 - tie_y as i128 + tie_xy as i128 - 2 * swaps as i128;
    let tau = numerator as f64 / ((denom_x as f64) * (denom_y as f64)).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationStrength {
    VeryWeak,
    Weak,
    Moderate,
    Strong,
}

impl fmt::Display for CorrelationStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationStrength::VeryWeak => "very weak",
            CorrelationStrength::Weak => "weak",
            CorrelationStrength::Moderate => "moderate",
            CorrelationStrength::Strong => "strong",
        })
    }
}

/// Reads `|r|`: below 0.2 very weak, below 0.3 weak, below 0.5 moderate, else strong.
pub fn interpret_correlation(r: f64) -> CorrelationStrength {
    let a = r.abs();
    if a < 0.20 {
        CorrelationStrength::VeryWeak
    } else if a < 0.30 {
        CorrelationStrength::Weak
    } else if a < 0.50 {
        CorrelationStrength::Moderate
    } else {
        CorrelationStrength::Strong
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);

        // cov/σ by hand: means 2.75 and 3; dx = (-1.75,-0.75,0.25,2.25), dy = (-1,-2,1,2)
        let r = pearson(&[1.0, 2.0, 3.0, 5.0], &[2.0, 1.0, 4.0, 5.0]).unwrap();
        let sxy = 1.75 + 1.5 + 0.25 + 4.5;
        let sxx = 1.75f64.powi(2) + 0.75f64.powi(2) + 0.25f64.powi(2) + 2.25f64.powi(2);
        let syy = 1.0 + 4.0 + 1.0 + 4.0;
        assert!((r - sxy / (sxx * syy).sqrt()).abs() < 1e-9);

        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        // the mean of 925 copies of 0.1 is not exactly 0.1
        let flat = vec![0.1; 925];
        let other: Vec<f64> = (0..925).map(f64::from).collect();
        assert!(matches!(
            pearson(&flat, &other),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(
            average_ranks(&[1.0, 2.0, 2.0, 4.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(average_ranks(&[3.0, 3.0, 3.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[1.0, 4.0, 9.0, 16.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[0.0, -1.0, -5.0, -6.0]).unwrap() + 1.0).abs() < 1e-15);
        // ranks x = (1, 2.5, 2.5, 4), y = (1, 3, 2, 4)
        let got = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        let expected = pearson(&[1.0, 2.5, 2.5, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(kendall_tau(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap(), 2.0 / 3.0);
        assert!(matches!(
            kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn interpretation_bands() {
        assert_eq!(interpret_correlation(0.431), CorrelationStrength::Moderate);
        assert_eq!(interpret_correlation(0.096), CorrelationStrength::VeryWeak);
        assert_eq!(interpret_correlation(-0.55), CorrelationStrength::Strong);
        assert_eq!(interpret_correlation(0.2), CorrelationStrength::Weak);
        assert_eq!(interpret_correlation(0.3), CorrelationStrength::Moderate);
        assert_eq!(interpret_correlation(0.5), CorrelationStrength::Strong);
        assert_eq!(interpret_correlation(0.297), CorrelationStrength::Weak);
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..40).prop_flat_map(|n| {
            let v = prop::collection::vec((-20i32..20).prop_map(|k| k as f64 * 0.5), n);
            (v.clone(), v)
        })
    }

    proptest! {
        #[test]
        fn symmetric((x, y) in arb_pair()) {
            for f in [pearson, spearman, kendall_tau] {
                match (f(&x, &y), f(&y, &x)) {
                    (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false),
                }
            }
        }

        #[test]
        fn affine_and_monotone_invariance((x, y) in arb_pair(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let affine: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let cubed: Vec<f64> = x.iter().map(|v| v * v * v + v).collect();
            if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&affine, &y)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            for f in [spearman, kendall_tau] {
                if let Ok(a) = f(&x, &y) {
                    prop_assert!((a - f(&affine, &y).unwrap()).abs() < 1e-12);
                    prop_assert!((a - f(&cubed, &y).unwrap()).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn bounded((x, y) in arb_pair()) {
            for f in [pearson, spearman, kendall_tau] {
                if let Ok(r) = f(&x, &y) {
                    prop_assert!((-1.0..=1.0).contains(&r));
                }
            }
        }
    }
}
