//! Order statistics used by the reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no samples to summarize")]
pub struct EmptySample;

/// Quantile `q` in `[0, 1]` of ascending `sorted` data, interpolating
/// linearly between closest ranks.
pub fn quantile(sorted: &[f64], q: f64) -> Result<f64, EmptySample> {
    if sorted.is_empty() {
        return Err(EmptySample);
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Result<Self, EmptySample> {
        let mut v: Vec<f64> = values.into_iter().collect();
        v.sort_by(f64::total_cmp);
        Ok(FiveNumber {
            min: quantile(&v, 0.0)?,
            q1: quantile(&v, 0.25)?,
            median: quantile(&v, 0.5)?,
            q3: quantile(&v, 0.75)?,
            max: quantile(&v, 1.0)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&v, 0.25).unwrap(), 1.75);
        assert_eq!(quantile(&[7.0], 0.9).unwrap(), 7.0);
        assert_eq!(quantile(&[], 0.5), Err(EmptySample));
    }

    #[test]
    fn five_number_of_constant() {
        let s = FiveNumber::of([1.0; 5]).unwrap();
        assert_eq!((s.min, s.median, s.max), (1.0, 1.0, 1.0));
    }

    proptest! {
        #[test]
        fn summary_is_ordered(values in prop::collection::vec(-1e6f64..1e6, 1..200)) {
            let s = FiveNumber::of(values.iter().copied()).unwrap();
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(s.min, lo);
        }
    }
}
