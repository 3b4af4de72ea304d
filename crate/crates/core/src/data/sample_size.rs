use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum positives per input feature.
pub const POSITIVES_PER_FEATURE: usize = 10;
/// Below this many positive cases no model should be developed at all.
pub const MIN_POSITIVES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizeVerdict {
    Ok,
    Insufficient,
    NotRecommended,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeAdvice {
    pub required_positives: usize,
    pub required_total: usize,
    pub verdict: SampleSizeVerdict,
}

/// Ten-positives-per-feature rule of thumb, with a hard floor of 100 positives.
pub fn sample_size_check(
    n_features: usize,
    incidence: f64,
    n_available: usize,
    n_positive: usize,
) -> Result<SampleSizeAdvice> {
    if !(incidence > 0.0 && incidence < 1.0) {
        return Err(Error::InvalidIncidence(incidence));
    }
    if n_features == 0 {
        return Err(Error::Config("sample size check needs at least one feature".into()));
    }
    let required_positives = POSITIVES_PER_FEATURE * n_features;
    let required_total = (required_positives as f64 / incidence - 1e-9).ceil() as usize;
    let verdict = if n_positive < MIN_POSITIVES {
        SampleSizeVerdict::NotRecommended
    } else if n_positive < required_positives || n_available < required_total {
        SampleSizeVerdict::Insufficient
    } else {
        SampleSizeVerdict::Ok
    };
    Ok(SampleSizeAdvice { required_positives, required_total, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_features_ten_percent() {
        let a = sample_size_check(10, 0.10, 1000, 100).unwrap();
        assert_eq!(a.required_positives, 100);
        assert_eq!(a.required_total, 1000);
        assert_eq!(a.verdict, SampleSizeVerdict::Ok);
    }

    #[test]
    fn fewer_than_hundred_positives() {
        let a = sample_size_check(1, 0.5, 10_000, 50).unwrap();
        assert_eq!(a.verdict, SampleSizeVerdict::NotRecommended);
    }

    #[test]
    fn single_feature_balanced() {
        let a = sample_size_check(1, 0.5, 1000, 500).unwrap();
        assert_eq!(a.required_positives, 10);
        assert_eq!(a.required_total, 20);
        assert_eq!(a.verdict, SampleSizeVerdict::Ok);
    }

    #[test]
    fn insufficient_total() {
        let a = sample_size_check(20, 0.1, 1500, 150).unwrap();
        assert_eq!(a.required_total, 2000);
        assert_eq!(a.verdict, SampleSizeVerdict::Insufficient);
    }

    #[test]
    fn incidence_bounds() {
        assert!(matches!(sample_size_check(1, 0.0, 1, 1), Err(Error::InvalidIncidence(_))));
        assert!(matches!(sample_size_check(1, 1.0, 1, 1), Err(Error::InvalidIncidence(_))));
    }
}
