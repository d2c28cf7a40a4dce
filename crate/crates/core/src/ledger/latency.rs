//! Service-time models for endorsement and commit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::time::{SimDuration, SimTime};

/// Distribution of a single service-time draw, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceTime {
    Constant { secs: f64 },
    Exponential { mean_secs: f64 },
}

impl ServiceTime {
    pub const ZERO: ServiceTime = ServiceTime::Constant { secs: 0.0 };

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimDuration {
        match *self {
            ServiceTime::Constant { secs } => SimDuration::from_secs_f64(secs),
            ServiceTime::Exponential { mean_secs } => {
                // 1 - u lies in (0, 1], so the logarithm is finite.
                let u: f64 = rng.random();
                SimDuration::from_secs_f64(-mean_secs * (1.0 - u).ln())
            }
        }
    }

    pub fn mean_secs(&self) -> f64 {
        match *self {
            ServiceTime::Constant { secs } => secs,
            ServiceTime::Exponential { mean_secs } => mean_secs,
        }
    }
}

/// How concurrent work on the peer affects latency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contention {
    /// Every draw is the latency.
    None,
    /// Draws are multiplied by the number of endorsements executing on the
    /// peer (at least 1).
    LoadScaling,
    /// Endorsements and block commits are jobs on one FIFO processor; the
    /// latency includes the wait for earlier jobs.
    SharedCpu,
}

/// Peer service times and their contention model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub endorsement: ServiceTime,
    pub commit_per_block: ServiceTime,
    pub commit_per_tx: ServiceTime,
    pub contention: Contention,
}

/// Peer resource state the latency model reads and updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PeerLoad {
    /// Endorsements executing, including the one being scheduled.
    pub active_endorsements: u32,
    /// When the shared processor finishes its queued work.
    pub cpu_free_at: SimTime,
}

impl LatencyModel {
    /// Fixed, load-independent costs.
    pub fn constant() -> Self {
        LatencyModel {
            endorsement: ServiceTime::Constant { secs: 0.020 },
            commit_per_block: ServiceTime::Constant { secs: 0.005 },
            commit_per_tx: ServiceTime::Constant { secs: 0.002 },
            contention: Contention::None,
        }
    }

    /// Exponential service demands on a shared processor. One warehouse sees
    /// few conflicts at 10 terminals, about half at 100, saturation beyond.
    pub fn calibrated() -> Self {
        LatencyModel {
            endorsement: ServiceTime::Exponential { mean_secs: 0.010 },
            commit_per_block: ServiceTime::Exponential { mean_secs: 0.005 },
            commit_per_tx: ServiceTime::Exponential { mean_secs: 0.010 },
            contention: Contention::SharedCpu,
        }
    }

    pub fn zero() -> Self {
        LatencyModel { endorsement: ServiceTime::ZERO, commit_per_block: ServiceTime::ZERO, commit_per_tx: ServiceTime::ZERO, contention: Contention::None }
    }

    fn apply(&self, demand: SimDuration, now: SimTime, load: &mut PeerLoad) -> SimDuration {
        match self.contention {
            Contention::None => demand,
            Contention::LoadScaling => demand.mul_f64(f64::from(load.active_endorsements.max(1))),
            Contention::SharedCpu => {
                let done = load.cpu_free_at.max(now) + demand;
                load.cpu_free_at = done;
                done - now
            }
        }
    }

    /// Time from proposal arrival at `now` to the endorsement response.
    pub fn endorsement_latency<R: Rng + ?Sized>(&self, now: SimTime, load: &mut PeerLoad, rng: &mut R) -> SimDuration {
        let demand = self.endorsement.sample(rng);
        self.apply(demand, now, load)
    }

    /// Time to validate and commit a block of `tx_count` transactions
    /// starting at `now`.
    pub fn commit_duration<R: Rng + ?Sized>(&self, tx_count: usize, now: SimTime, load: &mut PeerLoad, rng: &mut R) -> SimDuration {
        let mut demand = self.commit_per_block.sample(rng);
        for _ in 0..tx_count {
            demand = demand + self.commit_per_tx.sample(rng);
        }
        self.apply(demand, now, load)
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self::constant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let st = ServiceTime::Exponential { mean_secs: 0.05 };
        let n = 200_000;
        let sum: f64 = (0..n).map(|_| st.sample(&mut rng).as_secs_f64()).sum();
        assert!((sum / n as f64 - 0.05).abs() < 0.001);
    }

    #[test]
    fn load_scaling_multiplies() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = LatencyModel::constant();
        let mut load = PeerLoad { active_endorsements: 7, ..PeerLoad::default() };
        assert_eq!(m.endorsement_latency(SimTime::ZERO, &mut load, &mut rng), SimDuration::from_millis(20));
        m.contention = Contention::LoadScaling;
        assert_eq!(m.endorsement_latency(SimTime::ZERO, &mut load, &mut rng), SimDuration::from_millis(140));
        load.active_endorsements = 0;
        assert_eq!(m.endorsement_latency(SimTime::ZERO, &mut load, &mut rng), SimDuration::from_millis(20));
    }

    #[test]
    fn shared_cpu_queues_jobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = LatencyModel { contention: Contention::SharedCpu, ..LatencyModel::constant() };
        let mut load = PeerLoad::default();
        let t = SimTime::from_millis(100);
        assert_eq!(m.endorsement_latency(t, &mut load, &mut rng), SimDuration::from_millis(20));
        assert_eq!(m.endorsement_latency(t, &mut load, &mut rng), SimDuration::from_millis(40));
        assert_eq!(m.commit_duration(3, t + SimDuration::from_millis(10), &mut load, &mut rng), SimDuration::from_millis(41));
        // An idle processor starts fresh.
        let later = SimTime::from_millis(1_000);
        assert_eq!(m.endorsement_latency(later, &mut load, &mut rng), SimDuration::from_millis(20));
    }

    #[test]
    fn commit_sums_block_and_tx_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = LatencyModel::constant();
        assert_eq!(m.commit_duration(3, SimTime::ZERO, &mut PeerLoad::default(), &mut rng), SimDuration::from_millis(11));
    }
}
