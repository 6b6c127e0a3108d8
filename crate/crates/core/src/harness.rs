//! Session runner and statistics.
//!
//! Round `i` of a session draws all of its randomness from a ChaCha8 stream
//! keyed by the session seed with stream number `i`, so rounds can run in any
//! order or in parallel and still reproduce bit for bit. Aggregation only
//! sums integer counters; rates are derived once at the end.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::adversaries::{StrategyError, StrategyKind};
use crate::protocols::{self, ConfigError, Mode, ProtocolConfig, ProtocolKind, RoundRecord};
use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("invalid protocol config: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid attack: {0}")]
    Strategy(#[from] StrategyError),
    #[error("round {round} failed: {source}")]
    Round { round: u64, source: QuantumError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no message rounds to evaluate")]
    NoMessageRounds,
    #[error("joint count table is empty")]
    EmptyTable,
}

/// Empirical joint distribution of (Alice's message, Eve's guess).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JointCounts {
    cells: BTreeMap<(u8, u8), u64>,
}

impl JointCounts {
    pub fn new() -> Self {
        JointCounts::default()
    }

    pub fn add(&mut self, alice: u8, eve: u8, count: u64) {
        if count > 0 {
            *self.cells.entry((alice, eve)).or_default() += count;
        }
    }

    pub fn get(&self, alice: u8, eve: u8) -> u64 {
        self.cells.get(&(alice, eve)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = ((u8, u8), u64)> + '_ {
        self.cells.iter().map(|(&k, &v)| (k, v))
    }

    pub fn merge(&mut self, other: &JointCounts) {
        for (&(a, e), &n) in &other.cells {
            self.add(a, e, n);
        }
    }

    fn marginals(&self) -> (BTreeMap<u8, u64>, BTreeMap<u8, u64>) {
        let mut alice = BTreeMap::new();
        let mut eve = BTreeMap::new();
        for (&(a, e), &n) in &self.cells {
            *alice.entry(a).or_default() += n;
            *eve.entry(e).or_default() += n;
        }
        (alice, eve)
    }
}

impl FromIterator<((u8, u8), u64)> for JointCounts {
    fn from_iter<T: IntoIterator<Item = ((u8, u8), u64)>>(iter: T) -> Self {
        let mut counts = JointCounts::new();
        for ((a, e), n) in iter {
            counts.add(a, e, n);
        }
        counts
    }
}

/// Plug-in mutual information in bits, `Σ p(a,e) log2[p(a,e) / p(a)p(e)]`
/// over the non-empty cells.
pub fn mutual_information(counts: &JointCounts) -> Result<f64, StatsError> {
    let total = counts.total();
    if total == 0 {
        return Err(StatsError::EmptyTable);
    }
    let n = total as f64;
    let (alice, eve) = counts.marginals();
    let mi: f64 = counts
        .cells()
        .map(|((a, e), c)| {
            let p = c as f64 / n;
            let pa = alice[&a] as f64 / n;
            let pe = eve[&e] as f64 / n;
            p * (p / (pa * pe)).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// Mutual information of the estimated channel `P(e | a)` when the message
/// is fed uniformly over the message values that were observed.
///
/// Alice's messages are drawn uniformly by construction, so only the channel
/// is estimated from data. A channel that copies its input yields exactly
/// `log2(#messages)` regardless of how balanced the sample happened to be.
pub fn channel_information(counts: &JointCounts) -> Result<f64, StatsError> {
    if counts.total() == 0 {
        return Err(StatsError::EmptyTable);
    }
    let (alice, _) = counts.marginals();
    let prior = 1.0 / alice.len() as f64;
    let mut output: BTreeMap<u8, f64> = BTreeMap::new();
    for ((a, e), c) in counts.cells() {
        *output.entry(e).or_default() += prior * c as f64 / alice[&a] as f64;
    }
    let mi: f64 = counts
        .cells()
        .map(|((a, e), c)| {
            let conditional = c as f64 / alice[&a] as f64;
            prior * conditional * (conditional / output[&e]).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// Fraction of message rounds Bob decoded wrongly; erasures and
/// out-of-code outcomes count as errors.
pub fn qber(records: &[RoundRecord]) -> Result<f64, StatsError> {
    let (errors, total) = records
        .iter()
        .filter_map(RoundRecord::is_error)
        .fold((0u64, 0u64), |(e, t), err| (e + u64::from(err), t + 1));
    if total == 0 {
        return Err(StatsError::NoMessageRounds);
    }
    Ok(errors as f64 / total as f64)
}

/// Aggregated statistics for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub seed: u64,
    pub rounds: u64,
    pub message_rounds: u64,
    pub control_rounds: u64,
    pub control_rounds_evaluated: u64,
    pub message_errors: u64,
    pub erasures: u64,
    pub control_failures: u64,
    /// Errored message rounds over message rounds; 0 when there were none.
    pub qber: f64,
    /// Failed checks over evaluated control rounds; 0 when there were none.
    pub control_failure_rate: f64,
    pub anomaly_count: u64,
    pub absorbed_total: u64,
    /// Message rounds where Eve's probe never came back.
    pub blind_rounds: u64,
    pub eve_guesses: u64,
    pub eve_correct: u64,
    pub eve_accuracy: Option<f64>,
    /// Channel information under the uniform message prior, see
    /// [`channel_information`].
    pub eve_mutual_info_bits: Option<f64>,
    /// Plain plug-in estimate, see [`mutual_information`].
    pub eve_mi_plugin_bits: Option<f64>,
    pub joint: JointCounts,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Tally {
    rounds: u64,
    message_rounds: u64,
    control_rounds: u64,
    control_rounds_evaluated: u64,
    message_errors: u64,
    erasures: u64,
    control_failures: u64,
    anomaly_count: u64,
    absorbed_total: u64,
    blind_rounds: u64,
    eve_correct: u64,
    joint: JointCounts,
}

impl Tally {
    fn record(mut self, rec: &RoundRecord) -> Self {
        self.rounds += 1;
        self.anomaly_count += u64::from(rec.anomaly);
        self.absorbed_total += rec.absorbed_count as u64;
        match rec.mode {
            Mode::Control => {
                self.control_rounds += 1;
                if let Some(pass) = rec.control_pass {
                    self.control_rounds_evaluated += 1;
                    self.control_failures += u64::from(!pass);
                }
            }
            Mode::Message => {
                self.message_rounds += 1;
                self.message_errors += u64::from(rec.is_error() == Some(true));
                self.erasures += u64::from(rec.bob == Some(protocols::Decoded::Erasure));
                if let (Some(a), Some(e)) = (rec.alice_bits, rec.eve_guess) {
                    self.joint.add(a, e, 1);
                    self.eve_correct += u64::from(a == e);
                    self.blind_rounds += u64::from(rec.eve_blind);
                }
            }
        }
        self
    }

    fn merge(mut self, other: Tally) -> Self {
        self.rounds += other.rounds;
        self.message_rounds += other.message_rounds;
        self.control_rounds += other.control_rounds;
        self.control_rounds_evaluated += other.control_rounds_evaluated;
        self.message_errors += other.message_errors;
        self.erasures += other.erasures;
        self.control_failures += other.control_failures;
        self.anomaly_count += other.anomaly_count;
        self.absorbed_total += other.absorbed_total;
        self.blind_rounds += other.blind_rounds;
        self.eve_correct += other.eve_correct;
        self.joint.merge(&other.joint);
        self
    }

    fn finish(self, seed: u64) -> RunStats {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let eve_guesses = self.joint.total();
        let guessed = eve_guesses > 0;
        RunStats {
            seed,
            rounds: self.rounds,
            message_rounds: self.message_rounds,
            control_rounds: self.control_rounds,
            control_rounds_evaluated: self.control_rounds_evaluated,
            message_errors: self.message_errors,
            erasures: self.erasures,
            control_failures: self.control_failures,
            qber: ratio(self.message_errors, self.message_rounds),
            control_failure_rate: ratio(self.control_failures, self.control_rounds_evaluated),
            anomaly_count: self.anomaly_count,
            absorbed_total: self.absorbed_total,
            blind_rounds: self.blind_rounds,
            eve_guesses,
            eve_correct: self.eve_correct,
            eve_accuracy: guessed.then(|| ratio(self.eve_correct, eve_guesses)),
            eve_mutual_info_bits: channel_information(&self.joint).ok(),
            eve_mi_plugin_bits: mutual_information(&self.joint).ok(),
            joint: self.joint,
        }
    }
}

/// Summarizes a round log the same way [`run_session`] does.
pub fn summarize(records: &[RoundRecord], seed: u64) -> RunStats {
    records
        .iter()
        .fold(Tally::default(), Tally::record)
        .finish(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutput {
    pub stats: RunStats,
    /// Per-round transcript, present when `log_rounds` is set.
    pub log: Option<Vec<RoundRecord>>,
}

/// Random stream for round `index` of a session seeded with `seed`.
pub fn round_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The config the rounds actually run with; a probe that is told Alice's
/// angle pins that angle.
fn effective_config(cfg: &ProtocolConfig, strategy: &StrategyKind) -> ProtocolConfig {
    let mut cfg = cfg.clone();
    if let StrategyKind::KkkpProbe {
        theta_known: Some(theta),
        ..
    } = *strategy
    {
        if cfg.kind == ProtocolKind::Kkkp {
            cfg.kkkp_fixed_theta = Some(theta);
        }
    }
    cfg
}

/// Plays round `index` with a fresh adversary and its own random stream.
pub fn play_indexed_round(
    cfg: &ProtocolConfig,
    strategy: &StrategyKind,
    index: u64,
) -> Result<RoundRecord, SessionError> {
    let mut adversary = strategy.build()?;
    let mut rng = round_rng(cfg.seed, index);
    protocols::play_round(cfg, adversary.as_mut(), &mut rng).map_err(|source| SessionError::Round {
        round: index,
        source,
    })
}

pub fn run_session(
    cfg: &ProtocolConfig,
    strategy: &StrategyKind,
) -> Result<SessionOutput, SessionError> {
    run_session_with(cfg, strategy, Execution::default())
}

pub fn run_session_with(
    cfg: &ProtocolConfig,
    strategy: &StrategyKind,
    execution: Execution,
) -> Result<SessionOutput, SessionError> {
    cfg.validate()?;
    strategy.validate()?;
    let cfg = effective_config(cfg, strategy);
    let play = |i| play_indexed_round(&cfg, strategy, i);

    if cfg.log_rounds {
        let log: Vec<RoundRecord> = match execution {
            Execution::Sequential => (0..cfg.rounds).map(play).collect::<Result<_, _>>()?,
            Execution::Parallel => (0..cfg.rounds)
                .into_par_iter()
                .map(play)
                .collect::<Result<_, _>>()?,
        };
        let stats = summarize(&log, cfg.seed);
        return Ok(SessionOutput {
            stats,
            log: Some(log),
        });
    }

    let tally = match execution {
        Execution::Sequential => (0..cfg.rounds).try_fold(Tally::default(), |t, i| {
            Ok::<_, SessionError>(t.record(&play(i)?))
        })?,
        Execution::Parallel => (0..cfg.rounds)
            .into_par_iter()
            .try_fold(Tally::default, |t, i| {
                Ok::<_, SessionError>(t.record(&play(i)?))
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?,
    };
    Ok(SessionOutput {
        stats: tally.finish(cfg.seed),
        log: None,
    })
}

/// `3·sqrt(p(1−p)/n)`: the binomial band used throughout the tests.
pub fn three_sigma(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
