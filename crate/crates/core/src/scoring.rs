//! Golden-label computation.
//!
//! An anime's label is MyAnimeList's weighted average score: the mean user
//! score `S` blended with the community default `C` according to how many
//! people voted. Labels are min-max scaled to `[0, 1]` for training.

use serde::{Deserialize, Serialize};

use crate::corpus::VoteAggregate;
use crate::error::{Error, Result};

/// Statistical bound used by MyAnimeList.
pub const DEFAULT_VOTE_BOUND: u32 = 50;
/// Community default score at the time the reference corpus was collected.
pub const DEFAULT_COMMUNITY_SCORE: f64 = 6.605;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    /// Statistical bound `m`; must be at least 1.
    pub vote_bound: u32,
    /// Community default score `C` in `[0, 10]`.
    pub community_default: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            vote_bound: DEFAULT_VOTE_BOUND,
            community_default: DEFAULT_COMMUNITY_SCORE,
        }
    }
}

impl ScoreParams {
    pub fn new(vote_bound: u32, community_default: f64) -> Result<Self> {
        if vote_bound == 0 {
            return Err(Error::Config("vote bound m must be >= 1".into()));
        }
        if !(0.0..=10.0).contains(&community_default) {
            return Err(Error::Config(format!(
                "community default {community_default} outside [0, 10]"
            )));
        }
        Ok(Self {
            vote_bound,
            community_default,
        })
    }
}

/// Mean of all user scores.
pub fn naive_score(votes: &VoteAggregate) -> Result<f64> {
    if votes.vote_count == 0 {
        return Err(Error::UndefinedScore);
    }
    Ok(votes.vote_sum / votes.vote_count as f64)
}

/// Weight of the user mean, `v / (v + m)`.
pub fn score_weight(vote_count: u64, vote_bound: u32) -> f64 {
    let v = vote_count as f64;
    v / (v + f64::from(vote_bound))
}

/// Weight of the community default, `m / (v + m)`.
///
/// Computed as the complement of [`score_weight`] so that the two weights
/// sum to exactly 1.0 in floating point.
pub fn default_weight(vote_count: u64, vote_bound: u32) -> f64 {
    1.0 - score_weight(vote_count, vote_bound)
}

/// Weighted average score `W = s·S + c·C`. Equals `C` exactly when nobody voted.
pub fn weighted_score(votes: &VoteAggregate, params: &ScoreParams) -> f64 {
    if votes.vote_count == 0 {
        return params.community_default;
    }
    let s = score_weight(votes.vote_count, params.vote_bound);
    let c = default_weight(votes.vote_count, params.vote_bound);
    let mean = votes.vote_sum / votes.vote_count as f64;
    s * mean + c * params.community_default
}

/// Min-max scaling parameters for labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub min_score: f64,
    pub max_score: f64,
}

impl ScaleParams {
    pub fn new(min_score: f64, max_score: f64) -> Result<Self> {
        if min_score.is_nan() || max_score.is_nan() || min_score >= max_score {
            return Err(Error::Config(format!(
                "scale requires min < max, got {min_score} and {max_score}"
            )));
        }
        Ok(Self {
            min_score,
            max_score,
        })
    }

    /// Maps a score linearly so that `min -> 0` and `max -> 1`. No clamping.
    pub fn scale(&self, score: f64) -> f64 {
        (score - self.min_score) / (self.max_score - self.min_score)
    }

    pub fn unscale(&self, y: f64) -> f64 {
        y * (self.max_score - self.min_score) + self.min_score
    }
}

/// Fits scaling to the extremes of the (training) scores.
pub fn fit_scale(train_scores: &[f64]) -> Result<ScaleParams> {
    let mut iter = train_scores.iter().copied();
    let first = iter
        .next()
        .ok_or(Error::DegenerateScale { value: f64::NAN })?;
    let (min, max) = iter.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if min == max {
        return Err(Error::DegenerateScale { value: min });
    }
    Ok(ScaleParams {
        min_score: min,
        max_score: max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn votes(vote_count: u64, vote_sum: f64) -> VoteAggregate {
        VoteAggregate {
            vote_count,
            vote_sum,
        }
    }

    #[test]
    fn naive_score_examples() {
        assert_eq!(naive_score(&votes(1, 7.0)).unwrap(), 7.0);
        assert_eq!(naive_score(&votes(4, 30.0)).unwrap(), 7.5);
        assert!(matches!(
            naive_score(&votes(0, 0.0)),
            Err(Error::UndefinedScore)
        ));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(score_weight(0, 50), 0.0);
        assert!((score_weight(1, 50) - 1.0 / 51.0).abs() < 1e-15);
        assert_eq!(score_weight(50, 50), 0.5);
        assert_eq!(default_weight(0, 50), 1.0);
        assert_eq!(default_weight(50, 50), 0.5);
        assert!((default_weight(1, 50) - 50.0 / 51.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_score_examples() {
        let params = ScoreParams::default();
        assert_eq!(weighted_score(&votes(0, 0.0), &params), 6.605);

        let w = weighted_score(&votes(1, 10.0), &params);
        assert!((w - 340.25 / 51.0).abs() < 1e-12);
        assert!((w - 6.67157).abs() < 1e-5);

        let big = 1_000_000_000u64;
        let w = weighted_score(&votes(big, 8.0 * big as f64), &params);
        assert!((w - 8.0).abs() < 1e-6);
    }

    #[test]
    fn fit_scale_examples() {
        let p = fit_scale(&[1.86, 9.06, 7.25]).unwrap();
        assert_eq!((p.min_score, p.max_score), (1.86, 9.06));
        let p = fit_scale(&[0.0, 10.0]).unwrap();
        assert_eq!((p.min_score, p.max_score), (0.0, 10.0));
        assert!(matches!(
            fit_scale(&[5.0, 5.0, 5.0]),
            Err(Error::DegenerateScale { .. })
        ));
        assert!(fit_scale(&[]).is_err());
    }

    #[test]
    fn scale_examples() {
        let p = ScaleParams::new(1.86, 9.06).unwrap();
        assert_eq!(p.scale(1.86), 0.0);
        assert_eq!(p.scale(9.06), 1.0);
        assert!((p.unscale(p.scale(7.25)) - 7.25).abs() < 1e-12);
        // out-of-range maps linearly
        assert!(p.scale(1.0) < 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(ScoreParams::new(0, 6.0).is_err());
        assert!(ScoreParams::new(50, 10.5).is_err());
        assert!(ScaleParams::new(2.0, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(v in 0u64..10_000_000, m in 1u32..100_000) {
            prop_assert_eq!(score_weight(v, m) + default_weight(v, m), 1.0);
        }

        #[test]
        fn weighted_score_monotone_in_sum(
            v in 1u64..100_000,
            m in 1u32..1000,
            c in 0.0f64..=10.0,
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let params = ScoreParams { vote_bound: m, community_default: c };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let cap = 10.0 * v as f64;
            let w_lo = weighted_score(&votes(v, lo * cap), &params);
            let w_hi = weighted_score(&votes(v, hi * cap), &params);
            prop_assert!(w_lo <= w_hi);
        }

        #[test]
        fn unscale_inverts_scale(lo in -5.0f64..5.0, span in 0.01f64..10.0, t in 0.0f64..=1.0) {
            let p = ScaleParams::new(lo, lo + span).unwrap();
            let x = lo + t * span;
            prop_assert!((p.unscale(p.scale(x)) - x).abs() < 1e-12);
        }
    }
}
