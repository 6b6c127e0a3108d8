//! Pure-state simulation of a handful of polarization qubits.
//!
//! Amplitudes are stored over the computational basis with qubit 0 as the
//! most significant bit, so a two-qubit register lists `|00⟩, |01⟩, |10⟩, |11⟩`.
//! Every scenario the simulator runs is lossless and pure, so no density
//! matrices are needed.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Largest register the simulator will build.
pub const MAX_QUBITS: usize = 8;

/// Tolerance used by the normalization checks.
pub const NORM_TOLERANCE: f64 = 1e-10;

type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("qubit index {index} out of range for a {qubits}-qubit register")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("Bell measurement needs two distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("Bell measurement across different registers")]
    DifferentRegisters,
    #[error("register would hold {0} qubits, the cap is {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("register id {0} does not resolve")]
    UnknownRegister(usize),
}

/// Single-qubit operations used by the protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitaryKind {
    I,
    X,
    Z,
    /// `Z·X`, i.e. X applied first.
    ZX,
    /// Real matrix `[[0, 1], [-1, 0]]`; flips both Z and X eigenstates.
    IY,
    /// Real polarization rotation by the given angle in radians.
    Rot(f64),
}

impl UnitaryKind {
    pub fn matrix(self) -> Matrix2 {
        let r = |a: f64, b: f64, c: f64, d: f64| {
            [
                [Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
                [Complex64::new(c, 0.0), Complex64::new(d, 0.0)],
            ]
        };
        match self {
            UnitaryKind::I => r(1.0, 0.0, 0.0, 1.0),
            UnitaryKind::X => r(0.0, 1.0, 1.0, 0.0),
            UnitaryKind::Z => r(1.0, 0.0, 0.0, -1.0),
            UnitaryKind::ZX | UnitaryKind::IY => r(0.0, 1.0, -1.0, 0.0),
            UnitaryKind::Rot(theta) => {
                let (s, c) = theta.sin_cos();
                r(c, -s, s, c)
            }
        }
    }
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellKind {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiPlus,
        BellKind::PhiMinus,
    ];

    /// Amplitudes over `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn amplitudes(self) -> [f64; 4] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellKind::PsiPlus => [0.0, h, h, 0.0],
            BellKind::PsiMinus => [0.0, h, -h, 0.0],
            BellKind::PhiPlus => [h, 0.0, 0.0, h],
            BellKind::PhiMinus => [h, 0.0, 0.0, -h],
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
        };
        f.write_str(s)
    }
}

/// Projective single-qubit measurement bases. Outcome 0 is always the first
/// basis vector (`|0⟩`, `|+⟩`, or `Rot(θ)|0⟩`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureBasis {
    Z,
    X,
    Rotated(f64),
}

impl MeasureBasis {
    /// Unitary whose columns are the basis vectors.
    fn frame(self) -> Matrix2 {
        match self {
            MeasureBasis::Z => UnitaryKind::I.matrix(),
            MeasureBasis::X => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            MeasureBasis::Rotated(theta) => UnitaryKind::Rot(theta).matrix(),
        }
    }

    /// The two basis vectors as `(outcome 0, outcome 1)`.
    pub fn vectors(self) -> [[Complex64; 2]; 2] {
        let m = self.frame();
        [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
    }
}

/// Named single-qubit preparations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleState {
    Zero,
    One,
    Plus,
    Minus,
    /// `Rot(θ)|0⟩ = (cos θ, sin θ)`.
    Angle(f64),
}

/// Joint pure state of 1..=8 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRegister {
    amplitudes: Vec<Complex64>,
    qubits: usize,
}

impl QuantumRegister {
    /// Builds a register from raw amplitudes, normalizing them.
    ///
    /// Returns `None` if the length is not a power of two within the qubit cap
    /// or the vector is all zeros.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Option<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return None;
        }
        let qubits = len.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return None;
        }
        let mut reg = QuantumRegister { amplitudes, qubits };
        let norm = reg.norm_sqr().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        reg.scale(1.0 / norm);
        Some(reg)
    }

    pub fn bell(kind: BellKind) -> Self {
        let amplitudes = kind
            .amplitudes()
            .iter()
            .map(|&a| Complex64::new(a, 0.0))
            .collect();
        QuantumRegister {
            amplitudes,
            qubits: 2,
        }
    }

    pub fn single(state: SingleState) -> Self {
        let h = FRAC_1_SQRT_2;
        let (a, b) = match state {
            SingleState::Zero => (1.0, 0.0),
            SingleState::One => (0.0, 1.0),
            SingleState::Plus => (h, h),
            SingleState::Minus => (h, -h),
            SingleState::Angle(theta) => (theta.cos(), theta.sin()),
        };
        QuantumRegister {
            amplitudes: vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
            qubits: 1,
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|⟨self|other⟩|`; equals 1 for states that agree up to global phase.
    pub fn overlap(&self, other: &QuantumRegister) -> f64 {
        assert_eq!(self.qubits, other.qubits, "overlap of mismatched registers");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }

    pub fn equals_up_to_phase(&self, other: &QuantumRegister, tol: f64) -> bool {
        self.qubits == other.qubits && (self.overlap(other) - 1.0).abs() <= tol
    }

    /// Tensor product; qubits of `other` follow those of `self`.
    pub fn merge(&self, other: &QuantumRegister) -> Result<QuantumRegister, QuantumError> {
        let qubits = self.qubits + other.qubits;
        if qubits > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(qubits));
        }
        let mut amplitudes = Vec::with_capacity(1 << qubits);
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(QuantumRegister { amplitudes, qubits })
    }

    fn check(&self, qubit: usize) -> Result<(), QuantumError> {
        if qubit < self.qubits {
            Ok(())
        } else {
            Err(QuantumError::QubitOutOfRange {
                index: qubit,
                qubits: self.qubits,
            })
        }
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.qubits - 1 - qubit)
    }

    fn scale(&mut self, factor: f64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    fn apply_matrix(&mut self, qubit: usize, m: &Matrix2) {
        let mask = self.mask(qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn apply(&mut self, qubit: usize, u: UnitaryKind) -> Result<(), QuantumError> {
        self.check(qubit)?;
        self.apply_matrix(qubit, &u.matrix());
        Ok(())
    }

    /// Probability that measuring `qubit` in `basis` yields outcome 0.
    pub fn probability_zero(&self, qubit: usize, basis: MeasureBasis) -> Result<f64, QuantumError> {
        self.check(qubit)?;
        let mask = self.mask(qubit);
        let [v0, _] = basis.vectors();
        let p = (0..self.amplitudes.len())
            .filter(|i| i & mask == 0)
            .map(|i| {
                (v0[0].conj() * self.amplitudes[i] + v0[1].conj() * self.amplitudes[i | mask])
                    .norm_sqr()
            })
            .sum::<f64>();
        Ok(p.clamp(0.0, 1.0))
    }

    /// Born-rule measurement; the qubit stays in the register, collapsed onto
    /// the observed basis vector.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: MeasureBasis,
        rng: &mut R,
    ) -> Result<u8, QuantumError> {
        let p0 = self.probability_zero(qubit, basis)?;
        let outcome = u8::from(rng.random::<f64>() >= p0);
        let mask = self.mask(qubit);
        let v = basis.vectors()[outcome as usize];
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let c = v[0].conj() * self.amplitudes[i] + v[1].conj() * self.amplitudes[i | mask];
            self.amplitudes[i] = v[0] * c;
            self.amplitudes[i | mask] = v[1] * c;
        }
        let p = if outcome == 0 { p0 } else { 1.0 - p0 };
        self.scale(1.0 / p.sqrt());
        Ok(outcome)
    }

    /// Probabilities of the four Bell outcomes on `(qa, qb)`, in
    /// [`BellKind::ALL`] order.
    pub fn bell_probabilities(&self, qa: usize, qb: usize) -> Result<[f64; 4], QuantumError> {
        let projections = self.bell_projections(qa, qb)?;
        let mut probs = [0.0; 4];
        for (p, proj) in probs.iter_mut().zip(&projections) {
            *p = proj.iter().map(|c| c.norm_sqr()).sum();
        }
        Ok(probs)
    }

    /// For each Bell kind, the components `⟨B|ψ⟩` indexed by the base index
    /// (all amplitude indices with both measured bits cleared).
    fn bell_projections(&self, qa: usize, qb: usize) -> Result<[Vec<Complex64>; 4], QuantumError> {
        self.check(qa)?;
        self.check(qb)?;
        if qa == qb {
            return Err(QuantumError::SameQubit(qa));
        }
        let (ma, mb) = (self.mask(qa), self.mask(qb));
        let bases: Vec<usize> = (0..self.amplitudes.len())
            .filter(|i| i & (ma | mb) == 0)
            .collect();
        let offsets = [0, mb, ma, ma | mb];
        let project = |kind: BellKind| {
            let b = kind.amplitudes();
            bases
                .iter()
                .map(|&base| {
                    offsets
                        .iter()
                        .zip(b)
                        .map(|(&off, coef)| self.amplitudes[base | off] * coef)
                        .sum::<Complex64>()
                })
                .collect::<Vec<_>>()
        };
        Ok(BellKind::ALL.map(project))
    }

    pub fn measure_bell<R: Rng + ?Sized>(
        &mut self,
        qa: usize,
        qb: usize,
        rng: &mut R,
    ) -> Result<BellKind, QuantumError> {
        let projections = self.bell_projections(qa, qb)?;
        let probs: Vec<f64> = projections
            .iter()
            .map(|proj| proj.iter().map(|c| c.norm_sqr()).sum())
            .collect();
        let mut draw = rng.random::<f64>() * probs.iter().sum::<f64>();
        let mut index = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            if p > 0.0 && draw < p {
                index = k;
                break;
            }
            draw -= p;
        }
        // Guard against the fall-through landing on a zero-probability outcome.
        while probs[index] == 0.0 {
            index -= 1;
        }
        let kind = BellKind::ALL[index];
        let (ma, mb) = (self.mask(qa), self.mask(qb));
        let offsets = [0, mb, ma, ma | mb];
        let b = kind.amplitudes();
        let scale = 1.0 / probs[index].sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a = ZERO);
        let bases = (0..1usize << self.qubits).filter(|i| i & (ma | mb) == 0);
        for (base, c) in bases.zip(&projections[index]) {
            for (&off, coef) in offsets.iter().zip(b) {
                self.amplitudes[base | off] = c * coef * scale;
            }
        }
        Ok(kind)
    }
}

impl From<SingleState> for QuantumRegister {
    fn from(state: SingleState) -> Self {
        QuantumRegister::single(state)
    }
}

/// `U†U` for a unitary kind; used by the unitarity checks.
pub fn gram(u: UnitaryKind) -> Matrix2 {
    let m = u.matrix();
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
        }
    }
    out
}

/// Largest entry-wise deviation of `U†U` from the identity.
pub fn unitarity_defect(u: UnitaryKind) -> f64 {
    let g = gram(u);
    let id = [[ONE, ZERO], [ZERO, ONE]];
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((g[i][j] - id[i][j]).norm());
        }
    }
    worst
}
