//! Eavesdropping strategies.
//!
//! An [`Adversary`] sits on the channel and sees every pulse as it crosses a
//! leg. It may add its own photons, remove them later, and measure them; it
//! never touches the register of a photon it did not create, except for the
//! intercept-resend baseline which measures the signal in flight. One
//! instance serves exactly one round.

use std::fmt;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::optics::{Band, Lab, Photon, Pulse, EVE_WAVELENGTH_NM};
use crate::quantum::{
    BellKind, MeasureBasis, QuantumError, QuantumRegister, SingleState, UnitaryKind,
};

/// Half-width of the spectroscope band Eve uses to pick her probes back out.
pub const PROBE_BAND_HALF_WIDTH_NM: f64 = 1.0;

/// Eve's per-round message estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guess {
    pub bits: u8,
    /// Set when the probe never came back and `bits` is a coin flip.
    pub blind: bool,
}

impl Guess {
    fn informed(bits: u8) -> Self {
        Guess { bits, blind: false }
    }

    fn blind(rng: &mut dyn RngCore, width: u32) -> Self {
        Guess {
            bits: rng.random_range(0..1u8 << width),
            blind: true,
        }
    }
}

/// Channel hooks invoked by the protocol state machines.
///
/// The ping-pong protocols call `on_b_to_a` on the outbound leg and
/// `on_a_to_b` on the return leg. The three-pass protocol calls `on_b_to_a`
/// on its second leg and `on_a_to_b_leg3` on its last one.
pub trait Adversary {
    fn on_b_to_a(
        &mut self,
        pulse: Pulse,
        _lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        Ok(pulse)
    }

    fn on_a_to_b(
        &mut self,
        pulse: Pulse,
        _lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        Ok(pulse)
    }

    fn on_a_to_b_leg3(
        &mut self,
        pulse: Pulse,
        lab: &mut Lab,
        rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        self.on_a_to_b(pulse, lab, rng)
    }

    /// Called once at the end of every round.
    fn finalize(
        &mut self,
        lab: &mut Lab,
        rng: &mut dyn RngCore,
    ) -> Result<Option<Guess>, QuantumError>;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("probe wavelength must be positive, got {0} nm")]
    BadWavelength(f64),
    #[error("probe count must be at least 1")]
    NoProbes,
    #[error("theta_known must be finite")]
    BadTheta,
}

/// Declarative description of an attack; [`StrategyKind::build`] turns it
/// into a fresh per-round [`Adversary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    NoEve,
    Ipe {
        wavelength_nm: f64,
    },
    IpeDense {
        wavelength_nm: f64,
    },
    InterceptResend {
        basis: MeasureBasis,
    },
    KkkpProbe {
        probes: usize,
        wavelength_nm: f64,
        theta_known: Option<f64>,
    },
}

impl StrategyKind {
    pub fn ipe() -> Self {
        StrategyKind::Ipe {
            wavelength_nm: EVE_WAVELENGTH_NM,
        }
    }

    pub fn ipe_dense() -> Self {
        StrategyKind::IpeDense {
            wavelength_nm: EVE_WAVELENGTH_NM,
        }
    }

    pub fn kkkp_probe(probes: usize, theta_known: Option<f64>) -> Self {
        StrategyKind::KkkpProbe {
            probes,
            wavelength_nm: EVE_WAVELENGTH_NM,
            theta_known,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::NoEve => "no_eve",
            StrategyKind::Ipe { .. } => "ipe",
            StrategyKind::IpeDense { .. } => "ipe_dense",
            StrategyKind::InterceptResend { .. } => "intercept_resend",
            StrategyKind::KkkpProbe { .. } => "kkkp_probe",
        }
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        let check_wavelength = |nm: f64| {
            if nm.is_finite() && nm > 0.0 {
                Ok(())
            } else {
                Err(StrategyError::BadWavelength(nm))
            }
        };
        match *self {
            StrategyKind::NoEve | StrategyKind::InterceptResend { .. } => Ok(()),
            StrategyKind::Ipe { wavelength_nm } | StrategyKind::IpeDense { wavelength_nm } => {
                check_wavelength(wavelength_nm)
            }
            StrategyKind::KkkpProbe {
                probes,
                wavelength_nm,
                theta_known,
            } => {
                if probes == 0 {
                    return Err(StrategyError::NoProbes);
                }
                if theta_known.is_some_and(|t| !t.is_finite()) {
                    return Err(StrategyError::BadTheta);
                }
                check_wavelength(wavelength_nm)
            }
        }
    }

    pub fn build(&self) -> Result<Box<dyn Adversary + Send>, StrategyError> {
        self.validate()?;
        Ok(match *self {
            StrategyKind::NoEve => Box::new(NoEve),
            StrategyKind::Ipe { wavelength_nm } => Box::new(Ipe::new(wavelength_nm)),
            StrategyKind::IpeDense { wavelength_nm } => Box::new(IpeDense::new(wavelength_nm)),
            StrategyKind::InterceptResend { basis } => Box::new(InterceptResend::new(basis)),
            StrategyKind::KkkpProbe {
                probes,
                wavelength_nm,
                theta_known,
            } => Box::new(KkkpProbe::new(probes, wavelength_nm, theta_known)?),
        })
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::NoEve => f.write_str("no_eve"),
            StrategyKind::Ipe { wavelength_nm } => write!(f, "ipe({wavelength_nm} nm)"),
            StrategyKind::IpeDense { wavelength_nm } => write!(f, "ipe_dense({wavelength_nm} nm)"),
            StrategyKind::InterceptResend { basis } => write!(f, "intercept_resend({basis:?})"),
            StrategyKind::KkkpProbe {
                probes,
                theta_known,
                ..
            } => match theta_known {
                Some(t) => write!(f, "kkkp_probe(n={probes} theta_known={t})"),
                None => write!(f, "kkkp_probe(n={probes})"),
            },
        }
    }
}

fn probe_band(wavelength_nm: f64) -> Band {
    let lo = (wavelength_nm - PROBE_BAND_HALF_WIDTH_NM).max(wavelength_nm / 2.0);
    Band::new(lo, wavelength_nm + PROBE_BAND_HALF_WIDTH_NM).expect("positive probe wavelength")
}

/// Spectroscope capture: removes `probe` if it is still in the pulse and
/// inside Eve's band.
fn capture(pulse: &mut Pulse, probe: &Photon, band: &Band) -> Option<Photon> {
    let present = pulse
        .get(probe.id)
        .is_some_and(|p| band.contains(p.wavelength_nm));
    if present {
        pulse.take(probe.id)
    } else {
        None
    }
}

#[derive(Debug, Default)]
pub struct NoEve;

impl Adversary for NoEve {
    fn finalize(
        &mut self,
        _lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Option<Guess>, QuantumError> {
        Ok(None)
    }
}

/// Invisible-photon attack: a `|+⟩` probe rides along with the signal and is
/// read out in the X basis after Alice's phase encoding.
#[derive(Debug)]
pub struct Ipe {
    wavelength_nm: f64,
    band: Band,
    probe: Option<Photon>,
    captured: Option<Photon>,
}

impl Ipe {
    pub fn new(wavelength_nm: f64) -> Self {
        Ipe {
            wavelength_nm,
            band: probe_band(wavelength_nm),
            probe: None,
            captured: None,
        }
    }
}

impl Adversary for Ipe {
    fn on_b_to_a(
        &mut self,
        mut pulse: Pulse,
        lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        let probe = lab.prepare(
            QuantumRegister::single(SingleState::Plus),
            self.wavelength_nm,
        );
        pulse.push(probe);
        self.probe = Some(probe);
        Ok(pulse)
    }

    fn on_a_to_b(
        &mut self,
        mut pulse: Pulse,
        _lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        if let Some(probe) = &self.probe {
            self.captured = capture(&mut pulse, probe, &self.band);
        }
        Ok(pulse)
    }

    fn finalize(
        &mut self,
        lab: &mut Lab,
        rng: &mut dyn RngCore,
    ) -> Result<Option<Guess>, QuantumError> {
        Ok(Some(match self.captured.take() {
            Some(probe) => Guess::informed(lab.measure(&probe, MeasureBasis::X, rng)?),
            None => Guess::blind(rng, 1),
        }))
    }
}

/// Decodes a Bell outcome into the two-bit dense-coding message.
pub fn dense_bits(kind: BellKind) -> u8 {
    match kind {
        BellKind::PsiPlus => 0b00,
        BellKind::PhiPlus => 0b01,
        BellKind::PsiMinus => 0b10,
        BellKind::PhiMinus => 0b11,
    }
}

/// Dense-coding variant: Eve keeps half of her own `|Ψ+⟩` pair and sends
/// the other half to Alice, then Bell-measures the pair.
#[derive(Debug)]
pub struct IpeDense {
    wavelength_nm: f64,
    band: Band,
    stored: Option<Photon>,
    probe: Option<Photon>,
    captured: Option<Photon>,
}

impl IpeDense {
    pub fn new(wavelength_nm: f64) -> Self {
        IpeDense {
            wavelength_nm,
            band: probe_band(wavelength_nm),
            stored: None,
            probe: None,
            captured: None,
        }
    }
}

impl Adversary for IpeDense {
    fn on_b_to_a(
        &mut self,
        mut pulse: Pulse,
        lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        let pair = lab.add_register(QuantumRegister::bell(BellKind::PsiPlus));
        self.stored = Some(lab.emit(pair, 0, self.wavelength_nm)?);
        let probe = lab.emit(pair, 1, self.wavelength_nm)?;
        pulse.push(probe);
        self.probe = Some(probe);
        Ok(pulse)
    }

    fn on_a_to_b(
        &mut self,
        mut pulse: Pulse,
        _lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        if let Some(probe) = &self.probe {
            self.captured = capture(&mut pulse, probe, &self.band);
        }
        Ok(pulse)
    }

    fn finalize(
        &mut self,
        lab: &mut Lab,
        rng: &mut dyn RngCore,
    ) -> Result<Option<Guess>, QuantumError> {
        Ok(Some(match (self.stored, self.captured.take()) {
            (Some(stored), Some(probe)) => {
                Guess::informed(dense_bits(lab.measure_bell(&stored, &probe, rng)?))
            }
            _ => Guess::blind(rng, 2),
        }))
    }
}

/// Baseline: measures every photon on the outbound leg and forwards the
/// collapsed photons. Makes no message guess.
#[derive(Debug)]
pub struct InterceptResend {
    basis: MeasureBasis,
}

impl InterceptResend {
    pub fn new(basis: MeasureBasis) -> Self {
        InterceptResend { basis }
    }
}

impl Adversary for InterceptResend {
    fn on_b_to_a(
        &mut self,
        pulse: Pulse,
        lab: &mut Lab,
        rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        for photon in pulse.photons() {
            lab.measure(photon, self.basis, rng)?;
        }
        Ok(pulse)
    }

    fn finalize(
        &mut self,
        _lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Option<Guess>, QuantumError> {
        Ok(None)
    }
}

/// `n`-photon probe against the blind-polarization protocol.
///
/// Probes start in `Rot(0)|0⟩ = |0⟩`, pick up Alice's `Rot(sπ/4 − θ)` and are
/// read out after capture. Without knowledge of θ each probe is measured in
/// the Z basis; with `theta_known` the probe is counter-rotated by θ and read
/// in the X basis, which separates the two encodings perfectly.
#[derive(Debug)]
pub struct KkkpProbe {
    count: usize,
    wavelength_nm: f64,
    band: Band,
    theta_known: Option<f64>,
    probes: Vec<Photon>,
    captured: Vec<Photon>,
    outcomes: Vec<u8>,
}

impl KkkpProbe {
    pub fn new(
        count: usize,
        wavelength_nm: f64,
        theta_known: Option<f64>,
    ) -> Result<Self, StrategyError> {
        StrategyKind::KkkpProbe {
            probes: count,
            wavelength_nm,
            theta_known,
        }
        .validate()?;
        Ok(KkkpProbe {
            count,
            wavelength_nm,
            band: probe_band(wavelength_nm),
            theta_known,
            probes: Vec::new(),
            captured: Vec::new(),
            outcomes: Vec::new(),
        })
    }

    /// Raw readout of the captured probes from the last `finalize`.
    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn zero_count(&self) -> usize {
        self.outcomes.iter().filter(|&&o| o == 0).count()
    }
}

impl Adversary for KkkpProbe {
    fn on_b_to_a(
        &mut self,
        mut pulse: Pulse,
        lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        for _ in 0..self.count {
            let probe = lab.prepare(
                QuantumRegister::single(SingleState::Angle(0.0)),
                self.wavelength_nm,
            );
            pulse.push(probe);
            self.probes.push(probe);
        }
        Ok(pulse)
    }

    fn on_a_to_b(
        &mut self,
        mut pulse: Pulse,
        _lab: &mut Lab,
        _rng: &mut dyn RngCore,
    ) -> Result<Pulse, QuantumError> {
        let band = self.band;
        let caught: Vec<Photon> = self
            .probes
            .iter()
            .filter_map(|probe| capture(&mut pulse, probe, &band))
            .collect();
        self.captured.extend(caught);
        Ok(pulse)
    }

    fn finalize(
        &mut self,
        lab: &mut Lab,
        rng: &mut dyn RngCore,
    ) -> Result<Option<Guess>, QuantumError> {
        self.outcomes.clear();
        if self.captured.is_empty() {
            return Ok(Some(Guess::blind(rng, 1)));
        }
        for probe in &self.captured {
            let outcome = match self.theta_known {
                Some(theta) => {
                    lab.apply(probe, UnitaryKind::Rot(theta))?;
                    lab.measure(probe, MeasureBasis::X, rng)?
                }
                None => lab.measure(probe, MeasureBasis::Rotated(0.0), rng)?,
            };
            self.outcomes.push(outcome);
        }
        self.captured.clear();
        // Guess 0 iff outcome 0 holds a strict majority; ties go to a coin.
        let zeros = 2 * self.zero_count();
        let n = self.outcomes.len();
        let bits = match zeros.cmp(&n) {
            std::cmp::Ordering::Greater => 0,
            std::cmp::Ordering::Less => 1,
            std::cmp::Ordering::Equal => rng.random_range(0..2u8),
        };
        Ok(Some(Guess::informed(bits)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{Leg, SIGNAL_WAVELENGTH_NM};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn signal_pulse(lab: &mut Lab) -> (Photon, Pulse) {
        let p = lab.prepare(
            QuantumRegister::single(SingleState::Zero),
            SIGNAL_WAVELENGTH_NM,
        );
        (p, Pulse::with_photons(Leg::BToA, vec![p]))
    }

    #[test]
    fn no_eve_is_identity() {
        let mut lab = Lab::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, pulse) = signal_pulse(&mut lab);
        let mut eve = NoEve;
        let out = eve.on_b_to_a(pulse.clone(), &mut lab, &mut rng).unwrap();
        assert_eq!(out, pulse);
        let out = eve.on_a_to_b(out, &mut lab, &mut rng).unwrap();
        assert_eq!(out, pulse);
        assert_eq!(eve.finalize(&mut lab, &mut rng).unwrap(), None);
    }

    fn ipe_guess_after(u: UnitaryKind, seed: u64) -> Guess {
        let mut lab = Lab::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, pulse) = signal_pulse(&mut lab);
        let mut eve = Ipe::new(EVE_WAVELENGTH_NM);
        let pulse = eve.on_b_to_a(pulse, &mut lab, &mut rng).unwrap();
        assert_eq!(pulse.len(), 2);
        for p in pulse.photons() {
            lab.apply(p, u).unwrap();
        }
        let pulse = eve
            .on_a_to_b(pulse.turn_around(Leg::AToB), &mut lab, &mut rng)
            .unwrap();
        assert_eq!(pulse.len(), 1);
        eve.finalize(&mut lab, &mut rng).unwrap().unwrap()
    }

    #[test]
    fn ipe_reads_phase_flip() {
        for seed in 0..50 {
            assert_eq!(ipe_guess_after(UnitaryKind::I, seed), Guess::informed(0));
            assert_eq!(ipe_guess_after(UnitaryKind::Z, seed), Guess::informed(1));
        }
    }

    #[test]
    fn ipe_guesses_blind_when_probe_is_lost() {
        let mut lab = Lab::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, pulse) = signal_pulse(&mut lab);
        let mut eve = Ipe::new(EVE_WAVELENGTH_NM);
        let pulse = eve.on_b_to_a(pulse, &mut lab, &mut rng).unwrap();
        let (passed, absorbed) = crate::optics::OpticalFilter::default().apply(pulse);
        assert_eq!(absorbed, 1);
        eve.on_a_to_b(passed, &mut lab, &mut rng).unwrap();
        assert!(eve.finalize(&mut lab, &mut rng).unwrap().unwrap().blind);
    }

    #[test]
    fn dense_probe_reads_both_bits() {
        let encodings = [
            (0b00, UnitaryKind::I),
            (0b01, UnitaryKind::X),
            (0b10, UnitaryKind::Z),
            (0b11, UnitaryKind::ZX),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (bits, u) in encodings {
            let mut lab = Lab::new();
            let (_, pulse) = signal_pulse(&mut lab);
            let mut eve = IpeDense::new(EVE_WAVELENGTH_NM);
            let pulse = eve.on_b_to_a(pulse, &mut lab, &mut rng).unwrap();
            for p in pulse.photons() {
                lab.apply(p, u).unwrap();
            }
            let pulse = eve.on_a_to_b(pulse, &mut lab, &mut rng).unwrap();
            assert_eq!(pulse.len(), 1);
            assert_eq!(
                eve.finalize(&mut lab, &mut rng).unwrap(),
                Some(Guess::informed(bits))
            );
        }
    }

    #[test]
    fn intercept_resend_collapses_signal() {
        let mut lab = Lab::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = lab.prepare(
            QuantumRegister::single(SingleState::Plus),
            SIGNAL_WAVELENGTH_NM,
        );
        let mut eve = InterceptResend::new(MeasureBasis::Z);
        eve.on_b_to_a(Pulse::with_photons(Leg::BToA, vec![p]), &mut lab, &mut rng)
            .unwrap();
        let reg = lab.register(p.qubit.register).unwrap();
        let p0 = reg.probability_zero(0, MeasureBasis::Z).unwrap();
        assert!(p0 == 0.0 || p0 == 1.0);
        assert_eq!(eve.finalize(&mut lab, &mut rng).unwrap(), None);
    }

    #[test]
    fn kkkp_probe_with_known_theta_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (j, s) in [(0u8, 1.0), (1u8, -1.0)] {
            for theta in [0.0, 0.9, 2.5, 5.9] {
                let mut lab = Lab::new();
                let mut eve = KkkpProbe::new(1, EVE_WAVELENGTH_NM, Some(theta)).unwrap();
                let pulse = eve
                    .on_b_to_a(Pulse::new(Leg::BToA), &mut lab, &mut rng)
                    .unwrap();
                for p in pulse.photons() {
                    lab.apply(p, UnitaryKind::Rot(-theta)).unwrap();
                    lab.apply(p, UnitaryKind::Rot(s * FRAC_PI_4)).unwrap();
                }
                let pulse = eve.on_a_to_b_leg3(pulse, &mut lab, &mut rng).unwrap();
                assert!(pulse.is_empty());
                assert_eq!(
                    eve.finalize(&mut lab, &mut rng).unwrap(),
                    Some(Guess::informed(j))
                );
            }
        }
    }

    #[test]
    fn strategy_validation() {
        assert_eq!(
            StrategyKind::kkkp_probe(0, None).build().err(),
            Some(StrategyError::NoProbes)
        );
        assert!(StrategyKind::Ipe { wavelength_nm: 0.0 }.build().is_err());
        assert!(StrategyKind::IpeDense {
            wavelength_nm: -3.0
        }
        .build()
        .is_err());
        assert!(StrategyKind::kkkp_probe(2, Some(f64::NAN))
            .validate()
            .is_err());
        assert!(StrategyKind::ipe().build().is_ok());
    }

    #[test]
    fn probe_band_stays_positive_for_short_wavelengths() {
        let band = probe_band(0.5);
        assert!(band.contains(0.5));
        assert!(band.lo() > 0.0);
        assert!(probe_band(800.0).contains(800.0));
    }
}
