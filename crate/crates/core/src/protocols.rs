//! Round-level state machines for the four protocols.
//!
//! Each `*_round` function plays one complete round against an adversary
//! and returns its transcript. Randomness comes only from the supplied
//! generator, so a round is a pure function of `(config, strategy, rng)`.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::adversaries::{dense_bits, Adversary};
use crate::optics::{Detector, Lab, Leg, OpticalFilter, Photon, Pulse, SIGNAL_WAVELENGTH_NM};
use crate::quantum::{
    BellKind, MeasureBasis, QuantumError, QuantumRegister, SingleState, UnitaryKind,
};

/// Alice's encoding rotation magnitude in the blind-polarization protocol.
pub const ENC_ANGLE: f64 = FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// Entangled-pair ping-pong with `Z^j` encoding.
    PpEpr,
    /// Single-photon ping-pong over conjugate bases.
    PpSingle,
    /// Entangled-pair ping-pong with two-bit dense coding.
    PpDense,
    /// Three-pass blind-polarization protocol.
    Kkkp,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::PpEpr,
        ProtocolKind::PpSingle,
        ProtocolKind::PpDense,
        ProtocolKind::Kkkp,
    ];

    /// Message bits carried per message round.
    pub fn message_width(self) -> u32 {
        match self {
            ProtocolKind::PpDense => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::PpEpr => "pp_epr",
            ProtocolKind::PpSingle => "pp_single",
            ProtocolKind::PpDense => "pp_dense",
            ProtocolKind::Kkkp => "kkkp",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown protocol `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("control_prob must lie strictly between 0 and 1, got {0}")]
    ControlProb(f64),
    #[error("kkkp defines no control mode; control_prob must be 0, got {0}")]
    KkkpControlProb(f64),
    #[error("rounds must be at least 1")]
    Rounds,
    #[error("signal_wavelength_nm must be positive, got {0}")]
    SignalWavelength(f64),
    #[error("kkkp_fixed_theta must be finite")]
    FixedTheta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Probability that a round is a control round.
    pub control_prob: f64,
    pub signal_wavelength_nm: f64,
    /// Filter at Alice's input port, if fitted.
    pub filter: Option<OpticalFilter>,
    /// Alice's and Bob's single-photon detectors.
    pub detector: Detector,
    pub rounds: u64,
    pub seed: u64,
    pub log_rounds: bool,
    /// Pins Alice's blind angle instead of drawing it uniformly. Only used
    /// for the known-angle probe scenario.
    pub kkkp_fixed_theta: Option<f64>,
}

impl ProtocolConfig {
    /// Built-in scenario: 800 nm signal, silicon detector, no filter,
    /// 10^4 rounds, seed 42, control probability 0.5 (0 for KKKP).
    pub fn canonical(kind: ProtocolKind) -> Self {
        ProtocolConfig {
            kind,
            control_prob: if kind == ProtocolKind::Kkkp { 0.0 } else { 0.5 },
            signal_wavelength_nm: SIGNAL_WAVELENGTH_NM,
            filter: None,
            detector: Detector::default(),
            rounds: 10_000,
            seed: 42,
            log_rounds: false,
            kkkp_fixed_theta: None,
        }
    }

    pub fn with_filter(mut self, filter: OpticalFilter) -> Self {
        self.filter = Some(filter);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = self.control_prob;
        if self.kind == ProtocolKind::Kkkp {
            if c != 0.0 {
                return Err(ConfigError::KkkpControlProb(c));
            }
        } else if !(c > 0.0 && c < 1.0) {
            return Err(ConfigError::ControlProb(c));
        }
        if self.rounds == 0 {
            return Err(ConfigError::Rounds);
        }
        if !(self.signal_wavelength_nm.is_finite() && self.signal_wavelength_nm > 0.0) {
            return Err(ConfigError::SignalWavelength(self.signal_wavelength_nm));
        }
        if self.kkkp_fixed_theta.is_some_and(|t| !t.is_finite()) {
            return Err(ConfigError::FixedTheta);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Control,
    Message,
}

/// Bob's decoding result for a message round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoded {
    Bits(u8),
    /// The signal photon never reached Bob.
    Erasure,
    /// A Bell outcome outside the code (Φ± in the phase-only protocol).
    Undecodable,
}

/// Transcript of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub mode: Mode,
    pub alice_bits: Option<u8>,
    pub bob: Option<Decoded>,
    /// `None` for message rounds and for discarded (basis-mismatched) checks.
    pub control_pass: Option<bool>,
    pub eve_guess: Option<u8>,
    pub eve_blind: bool,
    pub anomaly: bool,
    pub absorbed_count: usize,
    pub kkkp_angles: Option<(f64, f64)>,
}

impl RoundRecord {
    fn control(control_pass: Option<bool>, anomaly: bool, absorbed_count: usize) -> Self {
        RoundRecord {
            mode: Mode::Control,
            alice_bits: None,
            bob: None,
            control_pass,
            eve_guess: None,
            eve_blind: false,
            anomaly,
            absorbed_count,
            kkkp_angles: None,
        }
    }

    /// Whether a message round decoded incorrectly; `None` for control rounds.
    pub fn is_error(&self) -> Option<bool> {
        match (self.alice_bits, self.bob) {
            (Some(a), Some(Decoded::Bits(b))) => Some(a != b),
            (Some(_), Some(_)) => Some(true),
            _ => None,
        }
    }
}

/// Plays one round of whichever protocol `cfg.kind` names.
pub fn play_round(
    cfg: &ProtocolConfig,
    adv: &mut (impl Adversary + ?Sized),
    rng: &mut dyn RngCore,
) -> Result<RoundRecord, QuantumError> {
    match cfg.kind {
        ProtocolKind::PpEpr => pp_epr_round(cfg, adv, rng),
        ProtocolKind::PpSingle => pp_single_round(cfg, adv, rng),
        ProtocolKind::PpDense => pp_dense_round(cfg, adv, rng),
        ProtocolKind::Kkkp => kkkp_round(cfg, adv, rng),
    }
}

fn alice_input(cfg: &ProtocolConfig, pulse: Pulse) -> (Pulse, usize) {
    match &cfg.filter {
        Some(f) => f.apply(pulse),
        None => (pulse, 0),
    }
}

fn draw_mode(cfg: &ProtocolConfig, rng: &mut dyn RngCore) -> Mode {
    if cfg.control_prob > 0.0 && rng.random_bool(cfg.control_prob) {
        Mode::Control
    } else {
        Mode::Message
    }
}

/// Alice's control measurement: every visible photon clicks. Returns the
/// signal's outcome (if it clicked) and whether more than one photon did.
fn control_clicks(
    cfg: &ProtocolConfig,
    lab: &mut Lab,
    pulse: &Pulse,
    signal: &Photon,
    basis: MeasureBasis,
    rng: &mut dyn RngCore,
) -> Result<(Option<u8>, bool), QuantumError> {
    let visible: Vec<Photon> = pulse.visible_to(&cfg.detector).copied().collect();
    let mut signal_outcome = None;
    for photon in &visible {
        let outcome = lab.measure(photon, basis, rng)?;
        if photon.id == signal.id {
            signal_outcome = Some(outcome);
        }
    }
    Ok((signal_outcome, visible.len() >= 2))
}

/// Alice's apparatus acts on every photon it holds, whatever the wavelength.
fn encode_all(lab: &mut Lab, pulse: &Pulse, ops: &[UnitaryKind]) -> Result<(), QuantumError> {
    for photon in pulse.photons() {
        for &u in ops {
            lab.apply(photon, u)?;
        }
    }
    Ok(())
}

/// Bob's decoder input: the signal (if it arrived) plus a multi-click flag
/// for any other photon his detector can see.
fn bob_receives(cfg: &ProtocolConfig, pulse: &Pulse, signal: &Photon) -> (Option<Photon>, bool) {
    let arrived = pulse.get(signal.id).copied();
    let extra = pulse.visible_to(&cfg.detector).any(|p| p.id != signal.id);
    (arrived, extra)
}

/// Entangled-pair ping-pong; `width` is 1 for phase coding, 2 for dense coding.
fn entangled_round(
    cfg: &ProtocolConfig,
    adv: &mut (impl Adversary + ?Sized),
    rng: &mut dyn RngCore,
    width: u32,
) -> Result<RoundRecord, QuantumError> {
    let mut lab = Lab::new();
    let pair = lab.add_register(QuantumRegister::bell(BellKind::PsiPlus));
    let home = lab.emit(pair, 0, cfg.signal_wavelength_nm)?;
    let travel = lab.emit(pair, 1, cfg.signal_wavelength_nm)?;

    let pulse = Pulse::with_photons(Leg::BToA, vec![travel]);
    let pulse = adv.on_b_to_a(pulse, &mut lab, rng)?;
    let (pulse, absorbed) = alice_input(cfg, pulse);

    if draw_mode(cfg, rng) == Mode::Control {
        let (alice, anomaly) =
            control_clicks(cfg, &mut lab, &pulse, &travel, MeasureBasis::Z, rng)?;
        let bob = lab.measure(&home, MeasureBasis::Z, rng)?;
        adv.finalize(&mut lab, rng)?;
        let pass = alice.is_some_and(|a| a != bob);
        return Ok(RoundRecord::control(Some(pass), anomaly, absorbed));
    }

    let bits: u8 = rng.random_range(0..1u8 << width);
    let encoding = if width == 1 {
        if bits == 1 {
            UnitaryKind::Z
        } else {
            UnitaryKind::I
        }
    } else {
        dense_encoding(bits)
    };
    encode_all(&mut lab, &pulse, &[encoding])?;

    let pulse = adv.on_a_to_b(pulse.turn_around(Leg::AToB), &mut lab, rng)?;
    let (arrived, anomaly) = bob_receives(cfg, &pulse, &travel);
    let bob = match arrived {
        None => Decoded::Erasure,
        Some(t) => {
            let outcome = lab.measure_bell(&home, &t, rng)?;
            if width == 1 {
                match outcome {
                    BellKind::PsiPlus => Decoded::Bits(0),
                    BellKind::PsiMinus => Decoded::Bits(1),
                    _ => Decoded::Undecodable,
                }
            } else {
                Decoded::Bits(dense_bits(outcome))
            }
        }
    };
    let guess = adv.finalize(&mut lab, rng)?;
    Ok(RoundRecord {
        mode: Mode::Message,
        alice_bits: Some(bits),
        bob: Some(bob),
        control_pass: None,
        eve_guess: guess.map(|g| g.bits),
        eve_blind: guess.is_some_and(|g| g.blind),
        anomaly,
        absorbed_count: absorbed,
        kkkp_angles: None,
    })
}

/// Dense-coding map `b1 b0 → Z^{b1} X^{b0}`.
pub fn dense_encoding(bits: u8) -> UnitaryKind {
    match bits & 0b11 {
        0b00 => UnitaryKind::I,
        0b01 => UnitaryKind::X,
        0b10 => UnitaryKind::Z,
        _ => UnitaryKind::ZX,
    }
}

pub fn pp_epr_round(
    cfg: &ProtocolConfig,
    adv: &mut (impl Adversary + ?Sized),
    rng: &mut dyn RngCore,
) -> Result<RoundRecord, QuantumError> {
    debug_assert_eq!(cfg.kind, ProtocolKind::PpEpr);
    entangled_round(cfg, adv, rng, 1)
}

pub fn pp_dense_round(
    cfg: &ProtocolConfig,
    adv: &mut (impl Adversary + ?Sized),
    rng: &mut dyn RngCore,
) -> Result<RoundRecord, QuantumError> {
    debug_assert_eq!(cfg.kind, ProtocolKind::PpDense);
    entangled_round(cfg, adv, rng, 2)
}

pub fn pp_single_round(
    cfg: &ProtocolConfig,
    adv: &mut (impl Adversary + ?Sized),
    rng: &mut dyn RngCore,
) -> Result<RoundRecord, QuantumError> {
    debug_assert_eq!(cfg.kind, ProtocolKind::PpSingle);
    let mut lab = Lab::new();
    let bob_basis = if rng.random_bool(0.5) {
        MeasureBasis::X
    } else {
        MeasureBasis::Z
    };
    let bob_value: u8 = rng.random_range(0..2);
    let state = match (bob_basis, bob_value) {
        (MeasureBasis::Z, 0) => SingleState::Zero,
        (MeasureBasis::Z, _) => SingleState::One,
        (_, 0) => SingleState::Plus,
        (_, _) => SingleState::Minus,
    };
    let signal = lab.prepare(QuantumRegister::single(state), cfg.signal_wavelength_nm);

    let pulse = Pulse::with_photons(Leg::BToA, vec![signal]);
    let pulse = adv.on_b_to_a(pulse, &mut lab, rng)?;
    let (pulse, absorbed) = alice_input(cfg, pulse);

    if draw_mode(cfg, rng) == Mode::Control {
        let alice_basis = if rng.random_bool(0.5) {
            MeasureBasis::X
        } else {
            MeasureBasis::Z
        };
        let (outcome, anomaly) = control_clicks(cfg, &mut lab, &pulse, &signal, alice_basis, rng)?;
        adv.finalize(&mut lab, rng)?;
        let pass = (alice_basis == bob_basis).then(|| outcome == Some(bob_value));
        return Ok(RoundRecord::control(pass, anomaly, absorbed));
    }

    let bits: u8 = rng.random_range(0..2);
    let encoding = if bits == 1 {
        UnitaryKind::IY
    } else {
        UnitaryKind::I
    };
    encode_all(&mut lab, &pulse, &[encoding])?;

    let pulse = adv.on_a_to_b(pulse.turn_around(Leg::AToB), &mut lab, rng)?;
    let (arrived, anomaly) = bob_receives(cfg, &pulse, &signal);
    let bob = match arrived {
        None => Decoded::Erasure,
        Some(s) => Decoded::Bits(u8::from(lab.measure(&s, bob_basis, rng)? != bob_value)),
    };
    let guess = adv.finalize(&mut lab, rng)?;
    Ok(RoundRecord {
        mode: Mode::Message,
        alice_bits: Some(bits),
        bob: Some(bob),
        control_pass: None,
        eve_guess: guess.map(|g| g.bits),
        eve_blind: guess.is_some_and(|g| g.blind),
        anomaly,
        absorbed_count: absorbed,
        kkkp_angles: None,
    })
}

/// Three-pass blind-polarization round. There is no control mode.
pub fn kkkp_round(
    cfg: &ProtocolConfig,
    adv: &mut (impl Adversary + ?Sized),
    rng: &mut dyn RngCore,
) -> Result<RoundRecord, QuantumError> {
    debug_assert_eq!(cfg.kind, ProtocolKind::Kkkp);
    let mut lab = Lab::new();
    let theta = match cfg.kkkp_fixed_theta {
        Some(t) => t,
        None => rng.random_range(0.0..TAU),
    };
    let phi = rng.random_range(0.0..TAU);

    // Leg 1, A → B.
    let signal = lab.prepare(
        QuantumRegister::single(SingleState::Angle(theta)),
        cfg.signal_wavelength_nm,
    );
    let pulse = Pulse::with_photons(Leg::AToB, vec![signal]);

    // Leg 2, B → A.
    lab.apply(&signal, UnitaryKind::Rot(phi))?;
    let pulse = adv.on_b_to_a(pulse.turn_around(Leg::BToA), &mut lab, rng)?;
    let (pulse, absorbed) = alice_input(cfg, pulse);

    let bits: u8 = rng.random_range(0..2);
    let s = if bits == 0 { 1.0 } else { -1.0 };
    encode_all(
        &mut lab,
        &pulse,
        &[UnitaryKind::Rot(-theta), UnitaryKind::Rot(s * ENC_ANGLE)],
    )?;

    // Leg 3, A → B.
    let pulse = adv.on_a_to_b_leg3(pulse.turn_around(Leg::AToB), &mut lab, rng)?;
    let (arrived, anomaly) = bob_receives(cfg, &pulse, &signal);
    let bob = match arrived {
        None => Decoded::Erasure,
        Some(p) => {
            lab.apply(&p, UnitaryKind::Rot(-phi))?;
            Decoded::Bits(lab.measure(&p, MeasureBasis::X, rng)?)
        }
    };
    let guess = adv.finalize(&mut lab, rng)?;
    Ok(RoundRecord {
        mode: Mode::Message,
        alice_bits: Some(bits),
        bob: Some(bob),
        control_pass: None,
        eve_guess: guess.map(|g| g.bits),
        eve_blind: guess.is_some_and(|g| g.blind),
        anomaly,
        absorbed_count: absorbed,
        kkkp_angles: Some((theta, phi)),
    })
}
