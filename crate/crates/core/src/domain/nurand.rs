use rand::Rng;
use serde::{Deserialize, Serialize};

use super::random::uniform;
use super::DomainError;

/// TPC-C non-uniform random selection:
/// `(((rand(0, A) | rand(x, y)) + C) mod (y - x + 1)) + x`.
pub fn nurand<R: Rng + ?Sized>(a: u64, x: u64, y: u64, c: u64, rng: &mut R) -> Result<u64, DomainError> {
    if x > y {
        return Err(DomainError::InvalidRange { low: x, high: y });
    }
    let mixed = uniform(rng, 0, a) | uniform(rng, x, y);
    Ok(((mixed + c) % (y - x + 1)) + x)
}

/// The run-wide `C` constants of the three NURand call sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NurandConstants {
    /// `A = 255`, customer last names.
    pub c_last: u64,
    /// `A = 1023`, customer ids.
    pub c_id: u64,
    /// `A = 8191`, item ids.
    pub c_ol_i_id: u64,
}

impl NurandConstants {
    pub fn for_load<R: Rng + ?Sized>(rng: &mut R) -> Self {
        NurandConstants { c_last: uniform(rng, 0, 255), c_id: uniform(rng, 0, 1023), c_ol_i_id: uniform(rng, 0, 8191) }
    }

    /// Constants for the measurement interval. `c_last` must differ from the
    /// load value by a delta in 65..=119, excluding 96 and 112.
    pub fn for_run<R: Rng + ?Sized>(load: &NurandConstants, rng: &mut R) -> Self {
        let c_last = loop {
            let candidate = uniform(rng, 0, 255);
            if Self::valid_last_delta(load.c_last, candidate) {
                break candidate;
            }
        };
        NurandConstants { c_last, c_id: uniform(rng, 0, 1023), c_ol_i_id: uniform(rng, 0, 8191) }
    }

    pub fn valid_last_delta(load: u64, run: u64) -> bool {
        let delta = load.abs_diff(run);
        (65..=119).contains(&delta) && delta != 96 && delta != 112
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(nurand(0, 5, 5, 0, &mut rng), Ok(5));
    }

    #[test]
    fn inverted_range_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(nurand(255, 10, 1, 0, &mut rng), Err(DomainError::InvalidRange { low: 10, high: 1 }));
    }

    #[test]
    fn customer_id_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let v = nurand(255, 1, 3000, 0, &mut rng).unwrap();
            assert!((1..=3000).contains(&v));
        }
    }

    // Histogram oracle: the distribution must be visibly skewed.
    #[test]
    fn histogram_is_non_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bins = 30usize;
        let mut hist = vec![0u64; bins];
        for _ in 0..1_000_000 {
            let v = nurand(1023, 1, 3000, 0, &mut rng).unwrap();
            hist[((v - 1) as usize * bins) / 3000] += 1;
        }
        let max = *hist.iter().max().unwrap() as f64;
        let min = *hist.iter().min().unwrap() as f64;
        assert!(max / min > 1.5, "max/min = {}", max / min);
    }

    #[test]
    fn run_constants_respect_delta_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let load = NurandConstants::for_load(&mut rng);
            let run = NurandConstants::for_run(&load, &mut rng);
            assert!(NurandConstants::valid_last_delta(load.c_last, run.c_last));
        }
        assert!(!NurandConstants::valid_last_delta(0, 96));
        assert!(!NurandConstants::valid_last_delta(200, 88));
        assert!(NurandConstants::valid_last_delta(0, 65));
    }

    proptest::proptest! {
        #[test]
        fn output_within_bounds(a in 0u64..10_000, x in 0u64..5_000, span in 0u64..5_000, c in 0u64..10_000, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = x + span;
            let v = nurand(a, x, y, c, &mut rng).unwrap();
            proptest::prop_assert!(v >= x && v <= y);
        }
    }
}
