//! Emulated TPC-C terminals: weighted profile choice, keying and think
//! times, deferred Delivery and resubmission of invalidated requests.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{InputGenerator, ProfileInput, ProfileType, TerminalHome, DISTRICTS_PER_WAREHOUSE};
use crate::ledger::{TxId, TxStatus};
use crate::time::{SimDuration, SimTime};

/// Profile shares in percent, indexed like [`ProfileType::ALL`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mix {
    pub weights: [u32; 5],
}

impl Default for Mix {
    fn default() -> Self {
        Mix { weights: [45, 43, 4, 4, 4] }
    }
}

impl Mix {
    pub fn total(&self) -> u32 {
        self.weights.iter().sum()
    }

    pub fn next_profile<R: Rng + ?Sized>(&self, rng: &mut R) -> ProfileType {
        let mut draw = rng.random_range(0..self.total());
        for (profile, &w) in ProfileType::ALL.iter().zip(&self.weights) {
            if draw < w {
                return *profile;
            }
            draw -= w;
        }
        unreachable!("draw below total weight")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileTiming {
    pub keying_secs: f64,
    pub think_mean_secs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingPreset {
    TpccStandard,
    Calibrated,
}

/// Menu response time plus per-profile keying and mean think times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingConstraints {
    pub menu_secs: f64,
    /// Indexed like [`ProfileType::ALL`].
    pub profiles: [ProfileTiming; 5],
}

/// Factor applied to keying and think times by the calibrated preset; it
/// brings the mean cycle to about ten seconds.
pub const CALIBRATION_SCALE: f64 = 0.465;

impl TimingConstraints {
    pub fn tpcc_standard() -> Self {
        let t = |keying_secs, think_mean_secs| ProfileTiming { keying_secs, think_mean_secs };
        TimingConstraints { menu_secs: 0.1, profiles: [t(18.0, 12.0), t(3.0, 12.0), t(2.0, 10.0), t(2.0, 5.0), t(2.0, 5.0)] }
    }

    pub fn calibrated() -> Self {
        Self::tpcc_standard().scaled(CALIBRATION_SCALE)
    }

    pub fn preset(preset: TimingPreset) -> Self {
        match preset {
            TimingPreset::TpccStandard => Self::tpcc_standard(),
            TimingPreset::Calibrated => Self::calibrated(),
        }
    }

    /// Scales keying and think times; the menu time is kept.
    pub fn scaled(mut self, factor: f64) -> Self {
        for p in &mut self.profiles {
            p.keying_secs *= factor;
            p.think_mean_secs *= factor;
        }
        self
    }

    pub fn of(&self, profile: ProfileType) -> ProfileTiming {
        self.profiles[profile_index(profile)]
    }

    /// `-mean * ln(u)`, truncated at ten times the mean.
    pub fn think_time<R: Rng + ?Sized>(&self, profile: ProfileType, rng: &mut R) -> SimDuration {
        let mean = self.of(profile).think_mean_secs;
        let u: f64 = 1.0 - rng.random::<f64>();
        SimDuration::from_secs_f64((-mean * u.ln()).min(10.0 * mean))
    }

    /// Menu plus keying time before `profile` is submitted.
    pub fn lead_time(&self, profile: ProfileType) -> SimDuration {
        SimDuration::from_secs_f64(self.menu_secs + self.of(profile).keying_secs)
    }

    /// Expected request cycle under `mix`, excluding response time.
    pub fn mean_cycle_secs(&self, mix: &Mix) -> f64 {
        let total = f64::from(mix.total());
        let truncation = 1.0 - (-10.0f64).exp();
        ProfileType::ALL
            .iter()
            .zip(&mix.weights)
            .map(|(&p, &w)| f64::from(w) / total * (self.of(p).keying_secs + self.of(p).think_mean_secs * truncation))
            .sum::<f64>()
            + self.menu_secs
    }
}

fn profile_index(profile: ProfileType) -> usize {
    ProfileType::ALL.iter().position(|&p| p == profile).expect("listed")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff: SimDuration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 5, backoff: SimDuration::ZERO }
    }
}

/// One profile invocation waiting for its submission time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalRequest {
    pub terminal_id: u32,
    pub seq: u64,
    pub attempt: u32,
    /// When the terminal produced this request.
    pub created_at: SimTime,
    pub scheduled_at: SimTime,
    pub input: ProfileInput,
    /// Submitted without the terminal waiting for its completion.
    pub deferred: bool,
}

impl TerminalRequest {
    pub fn tx_id(&self) -> TxId {
        TxId::new(self.terminal_id, self.seq, self.attempt)
    }

    pub fn profile(&self) -> ProfileType {
        self.input.profile()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Menu and keying before the next submission.
    Keying,
    AwaitingResponse,
    /// Thinking after a response, folded into the next request's schedule.
    Thinking,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TerminalError {
    #[error("terminal {terminal}: no outstanding request {tx_id}")]
    UnknownRequest { terminal: u32, tx_id: TxId },
}

/// What the harness should record for a finished submission.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    /// Final status for this submission; conflicts past the retry budget
    /// become `Abandoned`.
    pub status: TxStatus,
    /// Requests to schedule as a consequence (next cycle or a resubmission).
    pub follow_up: Vec<TerminalRequest>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalStats {
    pub business_requests: u64,
    pub submissions: u64,
    pub resubmissions: u64,
    pub abandoned: u64,
}

/// Home of the terminal with 1-based id `terminal_id`.
pub fn terminal_home(terminal_id: u32, warehouse_count: u32) -> TerminalHome {
    let i = terminal_id - 1;
    TerminalHome { w_id: i % warehouse_count + 1, d_id: (i / warehouse_count) % DISTRICTS_PER_WAREHOUSE + 1 }
}

pub fn client_id(terminal_id: u32) -> String {
    format!("terminal-{terminal_id}")
}

/// Passive terminal state machine.
#[derive(Debug, Clone)]
pub struct Terminal {
    id: u32,
    home: TerminalHome,
    rng: ChaCha8Rng,
    generator: InputGenerator,
    timing: TimingConstraints,
    mix: Mix,
    retry: RetryPolicy,
    phase: Phase,
    next_seq: u64,
    /// Submitted or queued requests the terminal still expects an answer for.
    outstanding: BTreeMap<(u64, u32), TerminalRequest>,
    stats: TerminalStats,
}

impl Terminal {
    pub fn new(id: u32, seed: u64, generator: InputGenerator, timing: TimingConstraints, mix: Mix, retry: RetryPolicy) -> Self {
        assert!(id >= 1, "terminal ids start at 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(id));
        Terminal {
            id,
            home: terminal_home(id, generator.warehouse_count),
            rng,
            generator,
            timing,
            mix,
            retry,
            phase: Phase::Keying,
            next_seq: 0,
            outstanding: BTreeMap::new(),
            stats: TerminalStats::default(),
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn home(&self) -> TerminalHome {
        self.home
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn stats(&self) -> TerminalStats {
        self.stats
    }

    /// First request: menu and keying time after `now`.
    pub fn start(&mut self, now: SimTime) -> TerminalRequest {
        self.new_request(now, now)
    }

    /// First request after an idle offset drawn uniformly from one mean
    /// cycle, so that terminals started together do not move in lockstep.
    pub fn start_staggered(&mut self, now: SimTime) -> TerminalRequest {
        let cycle = self.timing.mean_cycle_secs(&self.mix);
        let offset = SimDuration::from_secs_f64(self.rng.random::<f64>() * cycle);
        self.start(now + offset)
    }

    fn new_request(&mut self, created_at: SimTime, after: SimTime) -> TerminalRequest {
        let profile = self.mix.next_profile(&mut self.rng);
        let scheduled_at = after + self.timing.lead_time(profile);
        let input = self
            .generator
            .generate(profile, self.home, scheduled_at.as_micros(), &client_id(self.id), &mut self.rng)
            .expect("terminal home is within the configured warehouses");
        let request = TerminalRequest {
            terminal_id: self.id,
            seq: self.next_seq,
            attempt: 0,
            created_at,
            scheduled_at,
            deferred: profile == ProfileType::Delivery,
            input,
        };
        self.next_seq += 1;
        self.stats.business_requests += 1;
        self.phase = Phase::Keying;
        self.outstanding.insert((request.seq, 0), request.clone());
        request
    }

    /// The multiplexer submitted `request` at `now`. For a deferred request
    /// the cycle continues right away and the next request is returned.
    pub fn on_dispatched(&mut self, request: &TerminalRequest, now: SimTime) -> Option<TerminalRequest> {
        self.stats.submissions += 1;
        if request.deferred {
            if request.attempt > 0 {
                return None;
            }
            let think = self.timing.think_time(request.profile(), &mut self.rng);
            Some(self.new_request(now, now + think))
        } else {
            self.phase = Phase::AwaitingResponse;
            None
        }
    }

    /// Handles the ledger's answer for `tx_id` received at `now`.
    pub fn advance(&mut self, tx_id: TxId, status: TxStatus, now: SimTime) -> Result<Resolution, TerminalError> {
        let request = self
            .outstanding
            .remove(&(tx_id.seq, tx_id.attempt))
            .filter(|_| tx_id.client == self.id)
            .ok_or(TerminalError::UnknownRequest { terminal: self.id, tx_id })?;
        if status == TxStatus::MvccConflict {
            if request.attempt < self.retry.max_retries {
                return Ok(Resolution { status, follow_up: vec![self.on_invalidated(&request, now)] });
            }
            self.stats.abandoned += 1;
            return Ok(Resolution { status: TxStatus::Abandoned, follow_up: self.continue_cycle(&request, now) });
        }
        Ok(Resolution { status, follow_up: self.continue_cycle(&request, now) })
    }

    /// Resubmits the same arguments under a fresh attempt number.
    pub fn on_invalidated(&mut self, request: &TerminalRequest, now: SimTime) -> TerminalRequest {
        let retry = TerminalRequest { attempt: request.attempt + 1, created_at: now, scheduled_at: now + self.retry.backoff, ..request.clone() };
        self.stats.resubmissions += 1;
        self.outstanding.insert((retry.seq, retry.attempt), retry.clone());
        retry
    }

    fn continue_cycle(&mut self, request: &TerminalRequest, now: SimTime) -> Vec<TerminalRequest> {
        if request.deferred {
            return Vec::new();
        }
        self.phase = Phase::Thinking;
        let think = self.timing.think_time(request.profile(), &mut self.rng);
        vec![self.new_request(now, now + think)]
    }
}
