//! Resonant Jaynes-Cummings evolution of each qubit with its mode, on/off
//! detection of both modes, and the dense conditional map on the qubits.
//!
//! The conditional map is computed from scratch in the full
//! `qubit ⊗ qubit ⊗ mode ⊗ mode` space and is the ground truth that the
//! closed-form series elsewhere in the crate are tested against.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::{check_efficiency, click_probability, AncillaState};
use crate::linalg::CMat;
use crate::metrics::TwoQubitState;
use crate::scalar::Real;

/// Resonant JC propagator on `qubit ⊗ mode`, mode truncated to photon
/// numbers `0..=lmax+1`.
///
/// Basis index is `q * (lmax + 2) + m` with `q = 0` for `g` and `1` for `e`.
/// Each doublet `{|g,l⟩, |e,l-1⟩}` rotates by `Δτ√l`:
/// `|g,l⟩ → cos(Δτ√l)|g,l⟩ - i sin(Δτ√l)|e,l-1⟩`. The top state
/// `|e,lmax+1⟩` has no partner inside the truncation and is left fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct JcUnitary<T> {
    dtau: T,
    lmax: usize,
    matrix: CMat<T>,
}

impl<T: Real> JcUnitary<T> {
    pub fn dtau(&self) -> T {
        self.dtau
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Number of mode levels, `lmax + 2`.
    pub fn mode_dim(&self) -> usize {
        self.lmax + 2
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    #[inline]
    pub fn index(&self, excited: bool, photons: usize) -> usize {
        usize::from(excited) * self.mode_dim() + photons
    }
}

/// Survival amplitude `𝒬_l = cos(Δτ√l)`.
#[inline]
pub fn survival<T: Real>(dtau: T, l: usize) -> T {
    (dtau * T::count(l).sqrt()).cos()
}

pub fn jc_unitary<T: Real>(dtau: T, lmax: usize) -> Result<JcUnitary<T>> {
    if !dtau.is_finite() {
        return Err(crate::error::domain(
            "dtau",
            format!("must be finite, got {dtau}"),
        ));
    }
    let d = lmax + 2;
    let mut matrix = CMat::identity(2 * d);
    for l in 1..d {
        let angle = dtau * T::count(l).sqrt();
        let (s, c) = angle.sin_cos();
        let g = l;
        let e = d + l - 1;
        matrix[(g, g)] = Complex::new(c, T::zero());
        matrix[(e, e)] = Complex::new(c, T::zero());
        matrix[(e, g)] = Complex::new(T::zero(), -s);
        matrix[(g, e)] = Complex::new(T::zero(), -s);
    }
    Ok(JcUnitary { dtau, lmax, matrix })
}

/// Response of one on/off detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Click,
    NoClick,
}

impl Outcome {
    /// Amplitude `√Π(m)` of the measurement operator on an `m`-photon state.
    fn amplitude<T: Real>(self, eta: T, m: usize) -> T {
        let p_click = click_probability(eta, m);
        match self {
            Outcome::Click => p_click.sqrt(),
            Outcome::NoClick => (T::one() - p_click).max(T::zero()).sqrt(),
        }
    }
}

/// Joint outcome of detectors `a` (mode of qubit 1) and `b` (mode of qubit 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomeLabel {
    pub a: Outcome,
    pub b: Outcome,
}

impl OutcomeLabel {
    /// Coincidence: both detectors click.
    pub const POSITIVE: Self = Self {
        a: Outcome::Click,
        b: Outcome::Click,
    };
    /// No signal at either detector.
    pub const NEGATIVE: Self = Self {
        a: Outcome::NoClick,
        b: Outcome::NoClick,
    };
    /// Only detector `a` clicks.
    pub const ONLY_A: Self = Self {
        a: Outcome::Click,
        b: Outcome::NoClick,
    };
    /// Only detector `b` clicks.
    pub const ONLY_B: Self = Self {
        a: Outcome::NoClick,
        b: Outcome::Click,
    };

    pub const ALL: [Self; 4] = [Self::POSITIVE, Self::ONLY_A, Self::ONLY_B, Self::NEGATIVE];

    /// Sequence letter: `P` both click, `N` neither, `A`/`B` only that one.
    pub fn code(self) -> char {
        match (self.a, self.b) {
            (Outcome::Click, Outcome::Click) => 'P',
            (Outcome::NoClick, Outcome::NoClick) => 'N',
            (Outcome::Click, Outcome::NoClick) => 'A',
            (Outcome::NoClick, Outcome::Click) => 'B',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'P' => Some(Self::POSITIVE),
            'N' => Some(Self::NEGATIVE),
            'A' => Some(Self::ONLY_A),
            'B' => Some(Self::ONLY_B),
            _ => None,
        }
    }

    /// Parses a whole sequence such as `"PPNP"`.
    pub fn parse_sequence(s: &str) -> Result<Vec<Self>> {
        let seq: Option<Vec<_>> = s.chars().map(Self::from_code).collect();
        match seq {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(crate::error::domain(
                "sequence",
                format!("expected a nonempty string over P, N, A, B, got {s:?}"),
            )),
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Joint state vector on `qubit1 ⊗ qubit2 ⊗ mode_a ⊗ mode_b`.
struct JointVector<T> {
    d: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> JointVector<T> {
    fn zeros(d: usize) -> Self {
        Self {
            d,
            data: vec![Complex::zero(); 4 * d * d],
        }
    }

    #[inline]
    fn idx(&self, q1: usize, q2: usize, ma: usize, mb: usize) -> usize {
        ((q1 * 2 + q2) * self.d + ma) * self.d + mb
    }

    /// `|q1 q2⟩ ⊗ Σ_l c(l)|l,l⟩`.
    fn product(d: usize, qubits: usize, weights: &[T]) -> Self {
        let mut v = Self::zeros(d);
        let (q1, q2) = (qubits / 2, qubits % 2);
        for (l, &c) in weights.iter().enumerate() {
            let k = v.idx(q1, q2, l, l);
            v.data[k] = Complex::new(c, T::zero());
        }
        v
    }

    /// Applies `U ⊗ 1` on (qubit 1, mode a).
    fn apply_first(&mut self, u: &CMat<T>) {
        let d = self.d;
        let mut slice = vec![Complex::zero(); 2 * d];
        for q2 in 0..2 {
            for mb in 0..d {
                for q1 in 0..2 {
                    for ma in 0..d {
                        slice[q1 * d + ma] = self.data[self.idx(q1, q2, ma, mb)];
                    }
                }
                let out = u.mul_vec(&slice);
                for q1 in 0..2 {
                    for ma in 0..d {
                        let k = self.idx(q1, q2, ma, mb);
                        self.data[k] = out[q1 * d + ma];
                    }
                }
            }
        }
    }

    /// Applies `1 ⊗ U` on (qubit 2, mode b).
    fn apply_second(&mut self, u: &CMat<T>) {
        let d = self.d;
        let mut slice = vec![Complex::zero(); 2 * d];
        for q1 in 0..2 {
            for ma in 0..d {
                for q2 in 0..2 {
                    for mb in 0..d {
                        slice[q2 * d + mb] = self.data[self.idx(q1, q2, ma, mb)];
                    }
                }
                let out = u.mul_vec(&slice);
                for q2 in 0..2 {
                    for mb in 0..d {
                        let k = self.idx(q1, q2, ma, mb);
                        self.data[k] = out[q2 * d + mb];
                    }
                }
            }
        }
    }

    fn measure(&mut self, amp_a: &[T], amp_b: &[T]) {
        // data is laid out as [q][ma][mb]
        for block in self.data.chunks_mut(self.d * self.d) {
            for (row, &xa) in block.chunks_mut(self.d).zip(amp_a) {
                for (z, &xb) in row.iter_mut().zip(amp_b) {
                    *z = *z * (xa * xb);
                }
            }
        }
    }
}

/// The linear conditional map `X ↦ Tr_ab[M (U⊗U)(X ⊗ |χ⟩⟨χ|)(U⊗U)† M†]`
/// for one detection outcome, with `M = √Π_a ⊗ √Π_b`.
///
/// Built once per (ancilla, Δτ, η, outcome); [`ConditionalMap::apply`] then
/// acts on any 4x4 operator, including non-Hermitian matrix units.
pub struct ConditionalMap<T> {
    d: usize,
    /// `M (U⊗U)(|k⟩⊗|χ⟩)` for each two-qubit basis state `k`.
    branches: [Vec<Complex<T>>; 4],
}

impl<T: Real> ConditionalMap<T> {
    pub fn new(
        ancilla: &AncillaState<T>,
        unitary: &JcUnitary<T>,
        eta: T,
        outcome: OutcomeLabel,
    ) -> Result<Self> {
        check_efficiency(eta)?;
        if unitary.lmax() != ancilla.lmax() {
            return Err(Error::Dimension(format!(
                "unitary truncated at lmax = {} but ancilla at lmax = {}",
                unitary.lmax(),
                ancilla.lmax()
            )));
        }
        let d = unitary.mode_dim();
        let amp_a: Vec<T> = (0..d).map(|m| outcome.a.amplitude(eta, m)).collect();
        let amp_b: Vec<T> = (0..d).map(|m| outcome.b.amplitude(eta, m)).collect();
        let branches = [0, 1, 2, 3].map(|k| {
            let mut v = JointVector::product(d, k, ancilla.weights());
            v.apply_first(unitary.matrix());
            v.apply_second(unitary.matrix());
            v.measure(&amp_a, &amp_b);
            v.data
        });
        Ok(Self { d, branches })
    }

    pub fn apply(&self, input: &CMat<T>) -> CMat<T> {
        assert_eq!(input.dim(), 4);
        let block = self.d * self.d;
        let mut out = CMat::zeros(4);
        for k in 0..4 {
            for l in 0..4 {
                let w = input[(k, l)];
                if w.is_zero() {
                    continue;
                }
                let (bk, bl) = (&self.branches[k], &self.branches[l]);
                for i in 0..4 {
                    for j in 0..4 {
                        let xi = &bk[i * block..(i + 1) * block];
                        let xj = &bl[j * block..(j + 1) * block];
                        let s = xi
                            .iter()
                            .zip(xj)
                            .fold(Complex::zero(), |acc, (a, b)| acc + *a * b.conj());
                        out[(i, j)] = out[(i, j)] + w * s;
                    }
                }
            }
        }
        out
    }
}

/// Unnormalized conditional qubit state and its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState<T> {
    pub matrix: CMat<T>,
    pub probability: T,
}

impl<T: Real> ConditionalState<T> {
    /// Normalized state; fails on a zero-probability branch.
    pub fn normalized(&self) -> Result<TwoQubitState<T>> {
        Ok(TwoQubitState::from_unnormalized(self.matrix.clone())?.0)
    }
}

/// One round of the protocol evaluated densely: prepare `ρ ⊗ |χ⟩⟨χ|`, evolve
/// with `U₁ₐ ⊗ U₂_b`, detect both modes with efficiency `eta`, trace out the
/// modes.
pub fn oracle_step<T: Real>(
    rho: &TwoQubitState<T>,
    ancilla: &AncillaState<T>,
    dtau: T,
    eta: T,
    outcome: OutcomeLabel,
) -> Result<ConditionalState<T>> {
    let u = jc_unitary(dtau, ancilla.lmax())?;
    let map = ConditionalMap::new(ancilla, &u, eta, outcome)?;
    let matrix = map.apply(rho.matrix());
    let probability = matrix.trace().re;
    Ok(ConditionalState {
        matrix,
        probability,
    })
}

/// Ancilla-projected propagator `⟨χ|U₁ₐ ⊗ U₂_b|χ⟩` on the two qubits.
pub fn projected_operator<T: Real>(ancilla: &AncillaState<T>, dtau: T) -> Result<CMat<T>> {
    let u = jc_unitary(dtau, ancilla.lmax())?;
    let d = u.mode_dim();
    let mut out = CMat::zeros(4);
    for k in 0..4 {
        let mut v = JointVector::product(d, k, ancilla.weights());
        v.apply_first(u.matrix());
        v.apply_second(u.matrix());
        for i in 0..4 {
            let (q1, q2) = (i / 2, i % 2);
            let amp = ancilla
                .weights()
                .iter()
                .enumerate()
                .fold(Complex::zero(), |acc, (l, &c)| {
                    acc + v.data[v.idx(q1, q2, l, l)] * c
                });
            out[(i, k)] = amp;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{pss_state, DEFAULT_TAIL_TOL};
    use crate::metrics::GG;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_interval_is_identity() {
        let u = jc_unitary(0.0, 5).unwrap();
        assert_eq!(u.matrix(), &CMat::identity(14));
    }

    #[test]
    fn quarter_period_swaps_single_excitation() {
        let u = jc_unitary(std::f64::consts::FRAC_PI_2, 3).unwrap();
        let g1 = u.index(false, 1);
        let e0 = u.index(true, 0);
        assert_abs_diff_eq!(u.matrix()[(g1, g1)].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.matrix()[(e0, g1)].im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn four_photon_survival_amplitude() {
        for dtau in [0.3_f64, 1.0, 4.5] {
            let u = jc_unitary(dtau, 6).unwrap();
            let g4 = u.index(false, 4);
            assert_abs_diff_eq!(u.matrix()[(g4, g4)].re, (2.0 * dtau).cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(survival(dtau, 4), (2.0 * dtau).cos(), epsilon = 1e-14);
        }
    }

    #[test]
    fn joint_application_matches_kronecker_product() {
        // Build U₁ₐ ⊗ U₂_b explicitly in (q1, q2, ma, mb) ordering and compare
        // with the slice-wise application used by the oracle.
        let anc = pss_state(0.6, DEFAULT_TAIL_TOL).unwrap().with_cutoff(2);
        let u = jc_unitary(1.7, anc.lmax()).unwrap();
        let d = u.mode_dim();
        let big = u.matrix().kron(u.matrix()); // ordering (q1, ma, q2, mb)
        let perm = |q1: usize, q2: usize, ma: usize, mb: usize| ((q1 * d + ma) * 2 + q2) * d + mb;
        for k in 0..4 {
            let mut v = JointVector::product(d, k, anc.weights());
            let mut flat = vec![Complex::zero(); 4 * d * d];
            for q1 in 0..2 {
                for q2 in 0..2 {
                    for ma in 0..d {
                        for mb in 0..d {
                            flat[perm(q1, q2, ma, mb)] = v.data[v.idx(q1, q2, ma, mb)];
                        }
                    }
                }
            }
            let expected = big.mul_vec(&flat);
            v.apply_first(u.matrix());
            v.apply_second(u.matrix());
            for q1 in 0..2 {
                for q2 in 0..2 {
                    for ma in 0..d {
                        for mb in 0..d {
                            let diff =
                                v.data[v.idx(q1, q2, ma, mb)] - expected[perm(q1, q2, ma, mb)];
                            assert!(diff.norm() < 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_interval_click_click_removes_vacuum() {
        let anc = pss_state(0.3, DEFAULT_TAIL_TOL).unwrap();
        let rho = TwoQubitState::<f64>::basis(GG);
        let pos = oracle_step(&rho, &anc, 0.0, 1.0, OutcomeLabel::POSITIVE).unwrap();
        assert_abs_diff_eq!(
            pos.probability,
            1.0 - anc.normalization_sq(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(pos.probability, 0.29350, epsilon = 1e-4);
        let st = pos.normalized().unwrap();
        assert!(st.matrix().max_abs_diff(rho.matrix()) < 1e-12);

        let neg = oracle_step(&rho, &anc, 0.0, 1.0, OutcomeLabel::NEGATIVE).unwrap();
        assert_abs_diff_eq!(neg.probability, anc.normalization_sq(), epsilon = 1e-12);
        assert!(
            neg.normalized()
                .unwrap()
                .matrix()
                .max_abs_diff(rho.matrix())
                < 1e-12
        );
    }

    #[test]
    fn mismatched_truncation_is_rejected() {
        let anc = pss_state(0.3, DEFAULT_TAIL_TOL).unwrap();
        let u = jc_unitary(1.0, anc.lmax() + 1).unwrap();
        assert!(matches!(
            ConditionalMap::new(&anc, &u, 1.0, OutcomeLabel::POSITIVE),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn sequence_codes_round_trip() {
        let seq = OutcomeLabel::parse_sequence("PNab").unwrap();
        let s: String = seq.iter().map(|o| o.code()).collect();
        assert_eq!(s, "PNAB");
        assert!(OutcomeLabel::parse_sequence("").is_err());
        assert!(OutcomeLabel::parse_sequence("PX").is_err());
    }
}
