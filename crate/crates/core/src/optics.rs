//! Wavelength-tagged photons, pulses, detectors and filters.
//!
//! Polarization lives in [`QuantumRegister`]s owned by a per-round [`Lab`];
//! a [`Photon`] is a classical wavelength tag plus a reference to one qubit.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::quantum::{BellKind, MeasureBasis, QuantumError, QuantumRegister, UnitaryKind};

/// Legitimate signal wavelength.
pub const SIGNAL_WAVELENGTH_NM: f64 = 800.0;
/// Sensitivity window of a silicon single-photon detector.
pub const DETECTOR_WINDOW_NM: (f64, f64) = (600.0, 900.0);
/// Far-infrared wavelength used for invisible probes.
pub const EVE_WAVELENGTH_NM: f64 = 190_000.0;
/// Half of the default filter passband.
pub const FILTER_HALF_WIDTH_NM: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("invalid wavelength interval [{lo}, {hi}] nm: need 0 < lo < hi")]
pub struct BandError {
    pub lo: f64,
    pub hi: f64,
}

/// Closed wavelength interval in nanometres with `0 < lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    lo: f64,
    hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self, BandError> {
        if lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi {
            Ok(Band { lo, hi })
        } else {
            Err(BandError { lo, hi })
        }
    }

    pub fn around(center: f64, half_width: f64) -> Result<Self, BandError> {
        Band::new(center - half_width, center + half_width)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, wavelength_nm: f64) -> bool {
        self.lo <= wavelength_nm && wavelength_nm <= self.hi
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] nm", self.lo, self.hi)
    }
}

/// Single-photon detector with a spectral sensitivity window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub window: Band,
}

impl Detector {
    pub fn new(window: Band) -> Self {
        Detector { window }
    }

    pub fn is_visible(&self, photon: &Photon) -> bool {
        self.window.contains(photon.wavelength_nm)
    }
}

impl Default for Detector {
    fn default() -> Self {
        let (lo, hi) = DETECTOR_WINDOW_NM;
        Detector {
            window: Band { lo, hi },
        }
    }
}

/// Narrow-band filter at Alice's input port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalFilter {
    pub passband: Band,
}

impl OpticalFilter {
    pub fn new(passband: Band) -> Self {
        OpticalFilter { passband }
    }

    /// Filter centred on `center_nm` with the default half-width.
    pub fn narrow(center_nm: f64) -> Result<Self, BandError> {
        Band::around(center_nm, FILTER_HALF_WIDTH_NM).map(OpticalFilter::new)
    }

    /// Returns the transmitted pulse and the number of absorbed photons.
    /// Absorbed photons are dropped; their qubits are never touched again.
    pub fn apply(&self, pulse: Pulse) -> (Pulse, usize) {
        let (passed, absorbed) = pulse.split_by_wavelength(&self.passband);
        (passed, absorbed.len())
    }
}

impl Default for OpticalFilter {
    fn default() -> Self {
        OpticalFilter {
            passband: Band {
                lo: SIGNAL_WAVELENGTH_NM - FILTER_HALF_WIDTH_NM,
                hi: SIGNAL_WAVELENGTH_NM + FILTER_HALF_WIDTH_NM,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegisterId(pub usize);

/// Location of a photon's polarization qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QubitRef {
    pub register: RegisterId,
    pub qubit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photon {
    pub id: PhotonId,
    pub wavelength_nm: f64,
    pub qubit: QubitRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    BToA,
    AToB,
}

/// Ordered photons travelling on one channel leg.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub leg: Leg,
    photons: Vec<Photon>,
}

impl Pulse {
    pub fn new(leg: Leg) -> Self {
        Pulse {
            leg,
            photons: Vec::new(),
        }
    }

    pub fn with_photons(leg: Leg, photons: Vec<Photon>) -> Self {
        let mut pulse = Pulse::new(leg);
        for p in photons {
            pulse.push(p);
        }
        pulse
    }

    /// Appends a photon. Panics on a duplicate id.
    pub fn push(&mut self, photon: Photon) {
        assert!(
            !self.contains(photon.id),
            "photon {:?} already in pulse",
            photon.id
        );
        self.photons.push(photon);
    }

    pub fn photons(&self) -> &[Photon] {
        &self.photons
    }

    pub fn len(&self) -> usize {
        self.photons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.photons.is_empty()
    }

    pub fn contains(&self, id: PhotonId) -> bool {
        self.photons.iter().any(|p| p.id == id)
    }

    pub fn get(&self, id: PhotonId) -> Option<&Photon> {
        self.photons.iter().find(|p| p.id == id)
    }

    /// Removes and returns the photon with `id`, if present.
    pub fn take(&mut self, id: PhotonId) -> Option<Photon> {
        let pos = self.photons.iter().position(|p| p.id == id)?;
        Some(self.photons.remove(pos))
    }

    /// Re-labels the pulse for the return trip.
    pub fn turn_around(mut self, leg: Leg) -> Self {
        self.leg = leg;
        self
    }

    /// Spectroscope: partitions the pulse into photons inside and outside
    /// `band`, preserving order in both parts.
    pub fn split_by_wavelength(self, band: &Band) -> (Pulse, Pulse) {
        let leg = self.leg;
        let (inside, outside): (Vec<_>, Vec<_>) = self
            .photons
            .into_iter()
            .partition(|p| band.contains(p.wavelength_nm));
        (
            Pulse {
                leg,
                photons: inside,
            },
            Pulse {
                leg,
                photons: outside,
            },
        )
    }

    pub fn visible_to<'a>(&'a self, detector: &'a Detector) -> impl Iterator<Item = &'a Photon> {
        self.photons.iter().filter(|p| detector.is_visible(p))
    }
}

/// Free-function form of [`Detector::is_visible`].
pub fn is_visible(detector: &Detector, photon: &Photon) -> bool {
    detector.is_visible(photon)
}

/// Free-function form of [`OpticalFilter::apply`].
pub fn apply_filter(filter: &OpticalFilter, pulse: Pulse) -> (Pulse, usize) {
    filter.apply(pulse)
}

/// Owns every register created during one protocol round and hands out
/// photons that reference them.
#[derive(Debug, Default)]
pub struct Lab {
    registers: Vec<QuantumRegister>,
    next_photon: u64,
}

impl Lab {
    pub fn new() -> Self {
        Lab::default()
    }

    pub fn add_register(&mut self, reg: QuantumRegister) -> RegisterId {
        self.registers.push(reg);
        RegisterId(self.registers.len() - 1)
    }

    pub fn register(&self, id: RegisterId) -> Result<&QuantumRegister, QuantumError> {
        self.registers
            .get(id.0)
            .ok_or(QuantumError::UnknownRegister(id.0))
    }

    fn register_mut(&mut self, id: RegisterId) -> Result<&mut QuantumRegister, QuantumError> {
        self.registers
            .get_mut(id.0)
            .ok_or(QuantumError::UnknownRegister(id.0))
    }

    /// Creates a photon carrying qubit `qubit` of register `register`.
    pub fn emit(
        &mut self,
        register: RegisterId,
        qubit: usize,
        wavelength_nm: f64,
    ) -> Result<Photon, QuantumError> {
        let qubits = self.register(register)?.qubits();
        if qubit >= qubits {
            return Err(QuantumError::QubitOutOfRange {
                index: qubit,
                qubits,
            });
        }
        assert!(wavelength_nm > 0.0, "wavelength must be positive");
        let id = PhotonId(self.next_photon);
        self.next_photon += 1;
        Ok(Photon {
            id,
            wavelength_nm,
            qubit: QubitRef { register, qubit },
        })
    }

    /// Prepares a fresh one-qubit register and the photon carrying it.
    pub fn prepare(&mut self, reg: QuantumRegister, wavelength_nm: f64) -> Photon {
        debug_assert_eq!(reg.qubits(), 1);
        let id = self.add_register(reg);
        self.emit(id, 0, wavelength_nm)
            .expect("fresh register has qubit 0")
    }

    pub fn apply(&mut self, photon: &Photon, u: UnitaryKind) -> Result<(), QuantumError> {
        self.register_mut(photon.qubit.register)?
            .apply(photon.qubit.qubit, u)
    }

    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        photon: &Photon,
        basis: MeasureBasis,
        rng: &mut R,
    ) -> Result<u8, QuantumError> {
        self.register_mut(photon.qubit.register)?
            .measure(photon.qubit.qubit, basis, rng)
    }

    pub fn measure_bell<R: Rng + ?Sized>(
        &mut self,
        a: &Photon,
        b: &Photon,
        rng: &mut R,
    ) -> Result<BellKind, QuantumError> {
        if a.qubit.register != b.qubit.register {
            return Err(QuantumError::DifferentRegisters);
        }
        self.register_mut(a.qubit.register)?
            .measure_bell(a.qubit.qubit, b.qubit.qubit, rng)
    }
}
