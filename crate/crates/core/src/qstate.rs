//! Dense statevector simulation for small registers.
//!
//! Qubit 0 is the leftmost symbol of a ket and the most significant bit of
//! the amplitude index: in a 4-qubit register `|1001⟩` is index `0b1001`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 16;

/// Entrywise tolerance on `U†U - I` for a matrix to count as unitary.
pub const UNITARITY_TOL: f64 = 1e-10;

const NORM_TOL: f64 = 1e-10;

#[inline]
fn c(re: f64, im: f64) -> Amplitude {
    Complex64::new(re, im)
}

/// Seed for every random draw in the crate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for stream `index` (splitmix64 finalizer).
    /// Lets parallel workers draw without sharing a generator.
    pub fn derive(self, index: u64) -> RngSeed {
        let mut z = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

/// Formats the low `width` bits of `value`, most significant first.
pub fn bits_to_string(value: usize, width: usize) -> String {
    (0..width).map(|i| if value >> (width - 1 - i) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Parses a string of `0`/`1` characters, leftmost most significant.
pub fn parse_bits(bits: &str) -> Result<usize> {
    if bits.is_empty() || bits.len() > usize::BITS as usize - 1 {
        return Err(Error::Size(format!("bad bitstring length {}", bits.len())));
    }
    bits.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        other => Err(Error::Parameter(format!("invalid character {other:?} in bitstring {bits:?}"))),
    })
}

/// Value of the sub-register `qubits` of an `n_qubits` register inside
/// amplitude index `index`, first listed qubit most significant.
pub fn extract_bits(n_qubits: usize, index: usize, qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |acc, &q| acc << 1 | (index >> (n_qubits - 1 - q) & 1))
}

/// A 2×2 unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    m: [[Amplitude; 2]; 2],
}

impl Gate {
    /// Validates finiteness and unitarity within [`UNITARITY_TOL`].
    pub fn new(m: [[Amplitude; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Gate("matrix has non-finite entries".into()));
        }
        let err = unitarity_error(&m);
        if err > UNITARITY_TOL {
            return Err(Error::Gate(format!("matrix is not unitary (max |U†U - I| entry = {err:.3e})")));
        }
        Ok(Gate { m })
    }

    pub(crate) fn from_unitary(m: [[Amplitude; 2]; 2]) -> Self {
        debug_assert!(unitarity_error(&m) <= 1e-9);
        Gate { m }
    }

    pub fn matrix(&self) -> &[[Amplitude; 2]; 2] {
        &self.m
    }

    pub fn identity() -> Self {
        Gate::from_unitary([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]])
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Gate::from_unitary([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
    }

    pub fn pauli_x() -> Self {
        Gate::from_unitary([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
    }

    pub fn pauli_z() -> Self {
        Gate::from_unitary([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Gate { m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]] }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Gate) -> Self {
        Gate::from_unitary(mat_mul(&self.m, &rhs.m))
    }

    /// Projects an approximately unitary matrix onto the closest unitary
    /// (the unitary polar factor), returning it with the largest entrywise
    /// change. Fails when the matrix is singular.
    pub fn nearest_unitary(m: [[Amplitude; 2]; 2]) -> Result<(Gate, f64)> {
        if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Data("matrix has non-finite entries".into()));
        }
        // Newton iteration X <- (X + X^{-†}) / 2 converges quadratically to
        // the polar factor for any non-singular start.
        let mut x = m;
        for _ in 0..100 {
            let det = x[0][0] * x[1][1] - x[0][1] * x[1][0];
            if det.norm() < 1e-12 {
                return Err(Error::Data("matrix is singular".into()));
            }
            // inverse transpose-conjugate of a 2×2
            let inv_dag =
                [[(x[1][1] / det).conj(), (-x[1][0] / det).conj()], [(-x[0][1] / det).conj(), (x[0][0] / det).conj()]];
            let mut next = x;
            let mut delta: f64 = 0.0;
            for r in 0..2 {
                for k in 0..2 {
                    next[r][k] = (x[r][k] + inv_dag[r][k]) * 0.5;
                    delta = delta.max((next[r][k] - x[r][k]).norm());
                }
            }
            x = next;
            if delta < 1e-15 {
                break;
            }
        }
        let dist = (0..2)
            .flat_map(|r| (0..2).map(move |k| (r, k)))
            .map(|(r, k)| (x[r][k] - m[r][k]).norm())
            .fold(0.0, f64::max);
        Gate::new(x).map(|g| (g, dist))
    }
}

fn mat_mul(a: &[[Amplitude; 2]; 2], b: &[[Amplitude; 2]; 2]) -> [[Amplitude; 2]; 2] {
    let mut out = [[Amplitude::default(); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            out[r][k] = a[r][0] * b[0][k] + a[r][1] * b[1][k];
        }
    }
    out
}

/// Largest entry of `|U†U - I|`.
pub fn unitarity_error(m: &[[Amplitude; 2]; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for k in 0..2 {
            let dot = m[0][r].conj() * m[0][k] + m[1][r].conj() * m[1][k];
            let target = if r == k { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// Checks that an entangler angle lies in the open interval (0, π).
pub fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 && gamma < PI {
        Ok(())
    } else {
        Err(Error::Parameter(format!("gamma = {gamma} is outside (0, π)")))
    }
}

/// Register of `n_qubits` qubits stored as `2^n_qubits` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits, `1 ≤ n_qubits ≤ 16`.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Size(format!("n_qubits = {n_qubits} outside 1..={MAX_QUBITS}")));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![Amplitude::default(); dim];
        amps[index] = c(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Basis state spelled as a ket label, e.g. `"1001"`.
    pub fn from_bits(bits: &str) -> Result<Self> {
        Self::basis(bits.len(), parse_bits(bits)?)
    }

    /// Wraps explicit amplitudes. The length must be a power of two and the
    /// vector normalized within 1e-10.
    pub fn from_amplitudes(amps: Vec<Amplitude>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(Error::Size(format!("amplitude count {len} is not 2^n, 1 ≤ n ≤ 16")));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter("non-finite amplitude".into()));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Parameter(format!("state is not normalized (|ψ|² = {norm})")));
        }
        Ok(StateVector { n_qubits: len.trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Bit mask selecting qubit `q` inside an amplitude index.
    #[inline]
    pub fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n_qubits {
            Ok(())
        } else {
            Err(Error::Size(format!("qubit {q} out of range for a {}-qubit register", self.n_qubits)))
        }
    }

    pub(crate) fn check_distinct(&self, qubits: &[usize]) -> Result<()> {
        for (i, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..i].contains(&q) {
                return Err(Error::Index(format!("qubit {q} listed twice")));
            }
        }
        Ok(())
    }

    /// Value of the sub-register `qubits` (first listed = most significant)
    /// inside amplitude index `index`.
    pub fn extract(&self, index: usize, qubits: &[usize]) -> usize {
        extract_bits(self.n_qubits, index, qubits)
    }

    /// Applies `I ⊗ … ⊗ U ⊗ … ⊗ I` with `U` on qubit `q`.
    pub fn apply_single(&mut self, gate: &Gate, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let m = gate.matrix();
        let mask = self.mask(q);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!("CNOT control and target are both {control}")));
        }
        let (cm, tm) = (self.mask(control), self.mask(target));
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    /// Applies a 4×4 matrix to the pair `(q1, q2)`, `q1` being the more
    /// significant bit of the local two-qubit index.
    pub fn apply_two_qubit(&mut self, m: &[[Amplitude; 4]; 4], q1: usize, q2: usize) -> Result<()> {
        self.check_distinct(&[q1, q2])?;
        let (m1, m2) = (self.mask(q1), self.mask(q2));
        for base in 0..self.amps.len() {
            if base & (m1 | m2) != 0 {
                continue;
            }
            let idx = [base, base | m2, base | m1, base | m1 | m2];
            let v = idx.map(|i| self.amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amps[i] = (0..4).map(|k| m[r][k] * v[k]).sum();
            }
        }
        Ok(())
    }

    /// Entangler `cos(γ/2)·I + i·sin(γ/2)·σx⊗σx` on `(q1, q2)`, so that
    /// `|00⟩ → cos(γ/2)|00⟩ + i·sin(γ/2)|11⟩`.
    pub fn apply_entangler(&mut self, q1: usize, q2: usize, gamma: f64) -> Result<()> {
        check_gamma(gamma)?;
        self.apply_two_qubit(&entangler_matrix(gamma, false), q1, q2)
    }

    /// Inverse of [`StateVector::apply_entangler`].
    pub fn apply_entangler_adjoint(&mut self, q1: usize, q2: usize, gamma: f64) -> Result<()> {
        check_gamma(gamma)?;
        self.apply_two_qubit(&entangler_matrix(gamma, true), q1, q2)
    }

    /// Applies the basis permutation `|i⟩ → |f(i)⟩`. Rejects maps that are
    /// not bijections on the register.
    pub fn apply_basis_map<F>(&mut self, f: F) -> Result<()>
    where
        F: Fn(usize) -> usize,
    {
        let dim = self.amps.len();
        let mut out = vec![Amplitude::default(); dim];
        let mut hit = vec![false; dim];
        for (i, &amp) in self.amps.iter().enumerate() {
            let j = f(i);
            if j >= dim || hit[j] {
                return Err(Error::Gate(format!("basis map is not a permutation (at input {i})")));
            }
            hit[j] = true;
            out[j] = amp;
        }
        self.amps = out;
        Ok(())
    }

    /// Multiplies every amplitude whose index satisfies `pred` by -1.
    pub fn apply_phase_flip<F>(&mut self, pred: F)
    where
        F: Fn(usize) -> bool,
    {
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if pred(i) {
                *amp = -*amp;
            }
        }
    }

    /// Born-rule marginal over `qubits`. Entry `v` is the probability of
    /// reading the bitstring `bits_to_string(v, qubits.len())`.
    pub fn probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        if qubits.is_empty() {
            return Err(Error::Index("empty qubit subset".into()));
        }
        self.check_distinct(qubits)?;
        let mut out = vec![0.0; 1 << qubits.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            out[self.extract(i, qubits)] += amp.norm_sqr();
        }
        Ok(out)
    }

    /// Draws one outcome of measuring `qubits`, seeded.
    pub fn sample(&self, qubits: &[usize], seed: RngSeed) -> Result<String> {
        let mut rng = seed.rng();
        let v = self.sample_with(qubits, &mut rng)?;
        Ok(bits_to_string(v, qubits.len()))
    }

    /// Draws `count` outcomes (as integers) from one seeded stream.
    pub fn sample_many(&self, qubits: &[usize], seed: RngSeed, count: usize) -> Result<Vec<usize>> {
        let probs = self.probabilities(qubits)?;
        let mut rng = seed.rng();
        Ok((0..count).map(|_| draw(&probs, &mut rng)).collect())
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, qubits: &[usize], rng: &mut R) -> Result<usize> {
        let probs = self.probabilities(qubits)?;
        Ok(draw(&probs, rng))
    }
}

/// Inverse-CDF draw from a discrete distribution.
pub(crate) fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn entangler_matrix(gamma: f64, adjoint: bool) -> [[Amplitude; 4]; 4] {
    let cs = c((gamma / 2.0).cos(), 0.0);
    let s = (gamma / 2.0).sin();
    let is = if adjoint { c(0.0, -s) } else { c(0.0, s) };
    let z = Amplitude::default();
    // σx⊗σx reverses the local index 00↔11, 01↔10
    [[cs, z, z, is], [z, cs, is, z], [z, is, cs, z], [is, z, z, cs]]
}
