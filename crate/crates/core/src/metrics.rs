//! Two-qubit density matrices and the figures of merit used to track the
//! protocol: NPT negativity, linearized entropy, overlap with `|φ₋⟩` and the
//! Bell-basis populations.
//!
//! Basis order is `(gg, ge, eg, ee)`, qubit 1 being the most significant.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::Real;

pub const GG: usize = 0;
pub const GE: usize = 1;
pub const EG: usize = 2;
pub const EE: usize = 3;

/// Which qubit a partial transpose acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Validated two-qubit density matrix: Hermitian, unit trace, PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState<T> {
    matrix: CMat<T>,
}

impl<T: Real> TwoQubitState<T> {
    /// Validates `matrix` against [`Real::state_tol`].
    pub fn new(matrix: CMat<T>) -> Result<Self> {
        Self::with_tolerance(matrix, T::state_tol())
    }

    pub fn with_tolerance(matrix: CMat<T>, tol: T) -> Result<Self> {
        if matrix.dim() != 4 {
            return Err(Error::Dimension(format!(
                "two-qubit state needs a 4x4 matrix, got {0}x{0}",
                matrix.dim()
            )));
        }
        if matrix
            .as_slice()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = matrix.hermiticity_defect();
        if herm > tol {
            return Err(Error::InvalidState(format!("hermiticity defect {herm}")));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} ≠ 1")));
        }
        let min = matrix.hermitian_eigenvalues()[0];
        if min < -tol {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min}")));
        }
        Ok(Self { matrix })
    }

    /// Normalizes a positive (unnormalized) conditional state and returns
    /// it together with its trace.
    pub fn from_unnormalized(matrix: CMat<T>) -> Result<(Self, T)> {
        let tr = matrix.trace().re;
        if !(tr > T::zero()) {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        let state = Self::new(matrix.scale(T::one() / tr))?;
        Ok((state, tr))
    }

    /// Pure state `|ψ⟩⟨ψ|` from (not necessarily normalized) amplitudes.
    pub fn pure(amplitudes: [Complex<T>; 4]) -> Result<Self> {
        let norm = amplitudes
            .iter()
            .fold(T::zero(), |a, z| a + z.norm_sqr())
            .sqrt();
        if !(norm > T::zero()) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v: Vec<_> = amplitudes.iter().map(|z| *z / norm).collect();
        Self::new(CMat::outer(&v, &v))
    }

    /// Computational-basis projector, e.g. `basis(GG)` for `|gg⟩⟨gg|`.
    pub fn basis(index: usize) -> Self {
        assert!(index < 4);
        Self {
            matrix: CMat::unit(4, index, index),
        }
    }

    /// Maximally mixed state `I/4`.
    pub fn maximally_mixed() -> Self {
        Self {
            matrix: CMat::identity(4).scale(T::lit(0.25)),
        }
    }

    /// Bell-state projector.
    pub fn bell(which: BellState) -> Self {
        let v = which.vector::<T>();
        Self {
            matrix: CMat::outer(&v, &v),
        }
    }

    /// Product `ρ₁ ⊗ ρ₂` of single-qubit density matrices (2x2, validated
    /// only through the resulting 4x4 state).
    pub fn product(rho1: &CMat<T>, rho2: &CMat<T>) -> Result<Self> {
        Self::new(rho1.kron(rho2))
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.matrix
    }

    pub fn element(&self, i: usize, j: usize) -> Complex<T> {
        self.matrix[(i, j)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        self.matrix.hermitian_eigenvalues()
    }

    /// Conjugation by a two-qubit unitary, `U ρ U†`.
    pub fn conjugated(&self, unitary: &CMat<T>) -> Result<Self> {
        let m = &(unitary * &self.matrix) * &unitary.adjoint();
        Self::new(m)
    }

    pub fn purity(&self) -> T {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix
            .as_slice()
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }
}

/// Partial transpose of a 4x4 two-qubit operator.
pub fn partial_transpose<T: Real>(m: &CMat<T>, side: Subsystem) -> CMat<T> {
    let mut out = CMat::zeros(4);
    for i1 in 0..2 {
        for i2 in 0..2 {
            for j1 in 0..2 {
                for j2 in 0..2 {
                    let (r, c) = match side {
                        Subsystem::Second => ((i1, j2), (j1, i2)),
                        Subsystem::First => ((j1, i2), (i1, j2)),
                    };
                    out[(2 * i1 + i2, 2 * j1 + j2)] = m[(2 * r.0 + r.1, 2 * c.0 + c.1)];
                }
            }
        }
    }
    out
}

/// Spectrum (ascending) of the partial transpose on `side`.
pub fn partial_transpose_spectrum<T: Real>(rho: &TwoQubitState<T>, side: Subsystem) -> Vec<T> {
    partial_transpose(rho.matrix(), side).hermitian_eigenvalues()
}

/// NPT negativity `max{0, -2ε⁻}`, with `ε⁻` the smallest eigenvalue of the
/// partial transpose over qubit 2. Values below [`Real::zero_tol`] snap to 0.
pub fn negativity<T: Real>(rho: &TwoQubitState<T>) -> T {
    let eps = partial_transpose_spectrum(rho, Subsystem::Second)[0];
    let e = -T::lit(2.0) * eps;
    if e < T::zero_tol() {
        T::zero()
    } else {
        e
    }
}

/// Linearized entropy `(4/3)(1 - Tr ρ²)`: 0 for pure, 1 for `I/4`.
pub fn linear_entropy<T: Real>(rho: &TwoQubitState<T>) -> T {
    // purity of a valid state never exceeds 1; clamp rounding overshoot
    (T::lit(4.0 / 3.0) * (T::one() - rho.purity())).max(T::zero())
}

/// `⟨φ₋|ρ|φ₋⟩` with `|φ₋⟩ = (|gg⟩ - |ee⟩)/√2`.
pub fn fidelity_phi_minus<T: Real>(rho: &TwoQubitState<T>) -> T {
    let m = rho.matrix();
    let v = m[(GG, GG)] + m[(EE, EE)] - m[(GG, EE)] - m[(EE, GG)];
    v.re * T::lit(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes in the `(gg, ge, eg, ee)` basis.
    pub fn vector<T: Real>(self) -> [Complex<T>; 4] {
        let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        let z = Complex::zero();
        match self {
            BellState::PhiPlus => [h, z, z, h],
            BellState::PhiMinus => [h, z, z, -h],
            BellState::PsiPlus => [z, h, h, z],
            BellState::PsiMinus => [z, h, -h, z],
        }
    }
}

/// Populations of the Bell mixture `α(ψ₊ + ψ₋) + βφ₊ + γφ₋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellWeights<T> {
    /// Mean of the `ψ₊` and `ψ₋` populations.
    pub alpha: T,
    /// `φ₊` population.
    pub beta: T,
    /// `φ₋` population.
    pub gamma: T,
    /// Frobenius norm of the strictly upper off-diagonal part of ρ in the
    /// Bell basis; 0 iff ρ is exactly Bell-diagonal.
    pub residual: T,
}

pub fn bell_decomposition<T: Real>(rho: &TwoQubitState<T>) -> BellWeights<T> {
    let basis = BellState::ALL.map(|b| b.vector::<T>());
    let m = rho.matrix();
    let element = |a: usize, b: usize| -> Complex<T> {
        let mut acc = Complex::zero();
        for i in 0..4 {
            for j in 0..4 {
                acc = acc + basis[a][i].conj() * m[(i, j)] * basis[b][j];
            }
        }
        acc
    };
    let mut off = T::zero();
    for a in 0..4 {
        for b in (a + 1)..4 {
            off = off + element(a, b).norm_sqr();
        }
    }
    BellWeights {
        alpha: (element(2, 2).re + element(3, 3).re) * T::lit(0.5),
        beta: element(0, 0).re,
        gamma: element(1, 1).re,
        residual: off.sqrt(),
    }
}

/// The three tracked figures of merit for one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T> {
    pub linear_entropy: T,
    pub negativity: T,
    pub fidelity: T,
}

impl<T: Real> Metrics<T> {
    pub fn of(rho: &TwoQubitState<T>) -> Self {
        Self {
            linear_entropy: linear_entropy(rho),
            negativity: negativity(rho),
            fidelity: fidelity_phi_minus(rho),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn werner(p: f64) -> TwoQubitState<f64> {
        let phi = TwoQubitState::<f64>::bell(BellState::PhiMinus);
        let mix = TwoQubitState::<f64>::maximally_mixed();
        let m = &phi.matrix().scale(p) + &mix.matrix().scale(1.0 - p);
        TwoQubitState::new(m).unwrap()
    }

    #[test]
    fn negativity_reference_points() {
        let phi = TwoQubitState::<f64>::bell(BellState::PhiMinus);
        assert_abs_diff_eq!(negativity(&phi), 1.0, epsilon = 1e-12);
        assert_eq!(negativity(&TwoQubitState::<f64>::basis(GG)), 0.0);
        assert_abs_diff_eq!(negativity(&werner(0.5)), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn werner_negativity_brute_force() {
        // PT of the Werner state over qubit 2 has eigenvalues (1+p)/4 (x3)
        // and (1-3p)/4, so E = max{0, (3p-1)/2}.
        for k in 0..=20 {
            let p = k as f64 / 20.0;
            let expected = ((3.0 * p - 1.0) / 2.0).max(0.0);
            assert_abs_diff_eq!(negativity(&werner(p)), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_entropy_extremes() {
        assert_abs_diff_eq!(
            linear_entropy(&TwoQubitState::<f64>::bell(BellState::PsiPlus)),
            0.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            linear_entropy(&TwoQubitState::<f64>::maximally_mixed()),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn fidelity_with_target() {
        assert_abs_diff_eq!(
            fidelity_phi_minus(&TwoQubitState::<f64>::bell(BellState::PhiMinus)),
            1.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            fidelity_phi_minus(&TwoQubitState::<f64>::bell(BellState::PhiPlus)),
            0.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            fidelity_phi_minus(&TwoQubitState::<f64>::basis(GG)),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn bell_decomposition_reference_points() {
        let w = bell_decomposition(&TwoQubitState::<f64>::bell(BellState::PhiMinus));
        assert_abs_diff_eq!(w.gamma, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.beta, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.alpha, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.residual, 0.0, epsilon = 1e-14);

        let w = bell_decomposition(&TwoQubitState::<f64>::maximally_mixed());
        for x in [w.alpha, w.beta, w.gamma] {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(w.residual, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = CMat::<f64>::identity(4).scale(0.25);
        m[(0, 1)] = Complex::new(0.1, 0.0);
        assert!(matches!(TwoQubitState::new(m), Err(Error::InvalidState(_))));

        let m = CMat::<f64>::identity(4).scale(0.3);
        assert!(matches!(TwoQubitState::new(m), Err(Error::InvalidState(_))));

        let m = CMat::from_real(
            4,
            &[
                1.2, 0.0, 0.0, 0.0, //
                0.0, -0.2, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert!(matches!(TwoQubitState::new(m), Err(Error::InvalidState(_))));

        assert!(matches!(
            TwoQubitState::new(CMat::<f64>::identity(2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn pure_state_normalizes() {
        let st = TwoQubitState::pure([c(3.0), c(0.0), c(0.0), c(-4.0)]).unwrap();
        assert_abs_diff_eq!(st.element(GG, GG).re, 0.36, epsilon = 1e-14);
        assert_abs_diff_eq!(linear_entropy(&st), 0.0, epsilon = 1e-14);
        // E = 2|c_gg c_ee| for a gg/ee superposition.
        assert_abs_diff_eq!(negativity(&st), 2.0 * 0.6 * 0.8, epsilon = 1e-12);
    }

    #[test]
    fn single_precision_metrics() {
        let phi = TwoQubitState::<f32>::bell(BellState::PhiMinus);
        assert!((negativity(&phi) - 1.0).abs() < 1e-5);
        assert!((fidelity_phi_minus(&phi) - 1.0).abs() < 1e-6);
    }
}
