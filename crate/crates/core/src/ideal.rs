//! Idealized purification: the ancilla is projected back onto its own state
//! after every interaction, so the qubits evolve under the effective operator
//! `O_χ = ⟨χ|U₁ₐ ⊗ U₂_b|χ⟩`.

use num_complex::Complex;

use crate::dynamics::survival;
use crate::error::{Error, Result};
use crate::fock::{pss_state, AncillaState};
use crate::guidance::{ProtocolTrace, TraceStep};
use crate::linalg::{symmetric_eigen, CMat};
use crate::metrics::{Metrics, TwoQubitState, EE, EG, GE, GG};
use crate::scalar::Real;

/// Real symmetric effective operator
///
/// ```text
/// O = o11|gg⟩⟨gg| + o44|ee⟩⟨ee| + o12(|ge⟩⟨ge| + |eg⟩⟨eg|) - o14(|gg⟩⟨ee| + |ee⟩⟨gg|)
/// ```
///
/// with `o11 = Σ c²(l)𝒬²_l`, `o44 = Σ c²(l)𝒬²_{l+1}`, `o12 = Σ c²(l)𝒬_l𝒬_{l+1}`
/// and `o14 = Σ c(l)c(l+1)(1 - 𝒬²_{l+1})`. The `o14` series carries the
/// product of the two doublet mixing amplitudes, `(-i sin)² = -(1 - 𝒬²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOperator<T> {
    pub o11: T,
    pub o44: T,
    pub o12: T,
    pub o14: T,
    pub lmax: usize,
}

impl<T: Real> EffectiveOperator<T> {
    /// Row-major 4x4 matrix in the `(gg, ge, eg, ee)` basis.
    pub fn matrix(&self) -> [T; 16] {
        let mut m = [T::zero(); 16];
        m[GG * 4 + GG] = self.o11;
        m[EE * 4 + EE] = self.o44;
        m[GE * 4 + GE] = self.o12;
        m[EG * 4 + EG] = self.o12;
        m[GG * 4 + EE] = -self.o14;
        m[EE * 4 + GG] = -self.o14;
        m
    }

    pub fn to_cmat(&self) -> CMat<T> {
        CMat::from_real(4, &self.matrix())
    }

    pub fn from_ancilla(ancilla: &AncillaState<T>, dtau: T) -> Self {
        let c = ancilla.weights();
        let mut o11 = T::zero();
        let mut o44 = T::zero();
        let mut o12 = T::zero();
        let mut o14 = T::zero();
        for (l, &cl) in c.iter().enumerate() {
            let q = survival(dtau, l);
            let q1 = survival(dtau, l + 1);
            o11 = o11 + cl * cl * q * q;
            o44 = o44 + cl * cl * q1 * q1;
            o12 = o12 + cl * cl * q * q1;
            if let Some(&cn) = c.get(l + 1) {
                o14 = o14 + cl * cn * (T::one() - q1 * q1);
            }
        }
        Self {
            o11,
            o44,
            o12,
            o14,
            lmax: ancilla.lmax(),
        }
    }
}

/// Effective operator for a photon-subtracted ancilla of squeezing `s`.
pub fn effective_operator<T: Real>(s: T, dtau: T, tail_tol: T) -> Result<EffectiveOperator<T>> {
    if !dtau.is_finite() {
        return Err(crate::error::domain(
            "dtau",
            format!("must be finite, got {dtau}"),
        ));
    }
    let ancilla = pss_state(s, tail_tol)?;
    Ok(EffectiveOperator::from_ancilla(&ancilla, dtau))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpectrum<T> {
    /// Larger-magnitude eigenvalue of the gg/ee block.
    pub e_plus: T,
    /// Other eigenvalue of the gg/ee block.
    pub e_minus: T,
    /// Doubly degenerate eigenvalue on the ge/eg block, equal to `o12`.
    pub e_zero: T,
    /// Unit eigenvectors `(⟨gg|v⟩, ⟨ee|v⟩)`, gg component non-negative.
    pub v_plus: [T; 2],
    pub v_minus: [T; 2],
    /// All four eigenvalues of the full matrix, ascending.
    pub full: [T; 4],
    /// `[(o11-o44) ± √((o11-o44)² + 4p²)] / 2p` with the series
    /// `p = -Σ c(l)c(l+1)|sin(Δτ√(l+1))|`. With `p` equal to the gg/ee
    /// coupling this is the eigenvector component ratio `⟨gg|v⟩/⟨ee|v⟩`,
    /// not an eigenvalue. Kept for comparison only; `None` when `p = 0`.
    pub formula_e_plus: Option<T>,
    pub formula_e_minus: Option<T>,
}

fn block_eigen<T: Real>(a: T, off: T, f: T) -> ([T; 2], [[T; 2]; 2]) {
    let (vals, vecs) = symmetric_eigen(2, &[a, off, off, f]);
    let fix = |v: &Vec<T>| {
        if v[0] < T::zero() || (v[0] == T::zero() && v[1] < T::zero()) {
            [-v[0], -v[1]]
        } else {
            [v[0], v[1]]
        }
    };
    ([vals[0], vals[1]], [fix(&vecs[0]), fix(&vecs[1])])
}

fn formula_series<T: Real>(ancilla: &AncillaState<T>, dtau: T) -> T {
    let c = ancilla.weights();
    -c.windows(2).enumerate().fold(T::zero(), |acc, (l, w)| {
        let q1 = survival(dtau, l + 1);
        acc + w[0] * w[1] * (T::one() - q1 * q1).max(T::zero()).sqrt()
    })
}

pub fn operator_spectrum<T: Real>(op: &EffectiveOperator<T>) -> OperatorSpectrum<T> {
    let (vals, vecs) = block_eigen(op.o11, -op.o14, op.o44);
    let (ip, im) = if vals[1].abs() >= vals[0].abs() {
        (1, 0)
    } else {
        (0, 1)
    };
    let (full_vals, _) = symmetric_eigen(4, &op.matrix());
    OperatorSpectrum {
        e_plus: vals[ip],
        e_minus: vals[im],
        e_zero: op.o12,
        v_plus: vecs[ip],
        v_minus: vecs[im],
        full: [full_vals[0], full_vals[1], full_vals[2], full_vals[3]],
        formula_e_plus: None,
        formula_e_minus: None,
    }
}

/// [`operator_spectrum`] plus the shortcut formula values evaluated from
/// the ancilla.
pub fn operator_spectrum_with_formula<T: Real>(
    ancilla: &AncillaState<T>,
    dtau: T,
) -> OperatorSpectrum<T> {
    let op = EffectiveOperator::from_ancilla(ancilla, dtau);
    let mut spec = operator_spectrum(&op);
    let p = formula_series(ancilla, dtau);
    if p != T::zero() {
        let d = op.o11 - op.o44;
        let root = (d * d + T::lit(4.0) * p * p).sqrt();
        spec.formula_e_plus = Some((d + root) / (T::lit(2.0) * p));
        spec.formula_e_minus = Some((d - root) / (T::lit(2.0) * p));
    }
    spec
}

/// Repeats `ρ → OρO† / Tr(OρO†)` `n` times.
pub fn ideal_iterate<T: Real>(
    rho0: &TwoQubitState<T>,
    op: &EffectiveOperator<T>,
    n: usize,
) -> Result<ProtocolTrace<T>> {
    if n == 0 {
        return Err(crate::error::domain("n", "need at least one iteration"));
    }
    let o = op.to_cmat();
    let o_dag = o.adjoint();
    let mut rho = rho0.clone();
    let mut cumulative = T::one();
    let mut steps = Vec::with_capacity(n);
    for step in 1..=n {
        let next = &(&o * rho.matrix()) * &o_dag;
        let weight = next.trace().re;
        if !(weight > T::lit(1e-15)) {
            return Err(Error::DeadBranch {
                step,
                probability: weight.to_f64().unwrap_or(f64::NAN),
            });
        }
        rho = TwoQubitState::new(next.scale(T::one() / weight))?;
        cumulative = cumulative * weight;
        steps.push(TraceStep {
            step,
            outcome: None,
            metrics: Metrics::of(&rho),
            trapped: None,
            state: rho.clone(),
            success_probability: weight,
            cumulative_probability: cumulative,
        });
    }
    Ok(ProtocolTrace::new(steps))
}

/// Projector onto the normalized dominant eigenvector `v₊`.
pub fn dominant_projector<T: Real>(spec: &OperatorSpectrum<T>) -> TwoQubitState<T> {
    let z = Complex::new(T::zero(), T::zero());
    let v = [
        Complex::new(spec.v_plus[0], T::zero()),
        z,
        z,
        Complex::new(spec.v_plus[1], T::zero()),
    ];
    TwoQubitState::pure(v).expect("unit eigenvector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::DEFAULT_TAIL_TOL;
    use crate::metrics::{fidelity_phi_minus, negativity};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_interval_gives_identity() {
        let op = effective_operator(0.3, 0.0, DEFAULT_TAIL_TOL).unwrap();
        assert_abs_diff_eq!(op.o11, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(op.o44, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(op.o12, 1.0, epsilon = 1e-12);
        assert_eq!(op.o14, 0.0);
        let spec = operator_spectrum(&op);
        for e in spec.full {
            assert_abs_diff_eq!(e, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(spec.e_plus, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.e_minus, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn series_match_dense_projection() {
        let anc = pss_state(0.3, DEFAULT_TAIL_TOL).unwrap();
        for dtau in [0.0, 1.0, 3.3, 4.5, 6.0] {
            let op = EffectiveOperator::from_ancilla(&anc, dtau);
            let dense = crate::dynamics::projected_operator(&anc, dtau).unwrap();
            assert!(op.to_cmat().max_abs_diff(&dense) < 1e-10, "dtau = {dtau}");
        }
    }

    #[test]
    fn spectrum_is_ordered_and_consistent() {
        let op = effective_operator(0.3, 4.5, DEFAULT_TAIL_TOL).unwrap();
        let spec = operator_spectrum(&op);
        assert!(spec.e_plus.abs() >= spec.e_minus.abs());
        assert!(spec.e_plus.abs() >= spec.e_zero.abs());
        let m = op.matrix();
        for (e, v) in [(spec.e_plus, spec.v_plus), (spec.e_minus, spec.v_minus)] {
            let full = [v[0], 0.0, 0.0, v[1]];
            for i in 0..4 {
                let mv: f64 = (0..4).map(|j| m[i * 4 + j] * full[j]).sum();
                assert_abs_diff_eq!(mv, e * full[i], epsilon = 1e-10);
            }
        }
        let mut expected = [spec.e_plus, spec.e_minus, spec.e_zero, spec.e_zero];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in expected.iter().zip(spec.full.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn dominant_vector_overlaps_target() {
        let op = effective_operator(0.3, 4.5, DEFAULT_TAIL_TOL).unwrap();
        let spec = operator_spectrum(&op);
        assert!(fidelity_phi_minus(&dominant_projector(&spec)) > 0.9);
    }

    #[test]
    fn iteration_converges_to_dominant_projector() {
        let op = effective_operator(0.3, 4.5, DEFAULT_TAIL_TOL).unwrap();
        let spec = operator_spectrum(&op);
        let target = dominant_projector(&spec);
        let trace = ideal_iterate(&TwoQubitState::basis(GG), &op, 200).unwrap();
        let last = trace.last().unwrap();
        assert!(last.state.matrix().max_abs_diff(target.matrix()) < 1e-8);
        assert_abs_diff_eq!(negativity(&last.state), negativity(&target), epsilon = 1e-8);
    }

    #[test]
    fn infidelity_decays_with_squared_eigenvalue_ratio() {
        let op = effective_operator(0.3, 4.5, DEFAULT_TAIL_TOL).unwrap();
        let spec = operator_spectrum(&op);
        // weight on v₋ directly, so the ratio does not drown in cancellation
        let v = spec.v_minus;
        let trace = ideal_iterate(&TwoQubitState::basis(GG), &op, 5).unwrap();
        let infid: Vec<f64> = trace
            .steps()
            .iter()
            .map(|s| {
                let m = s.state.matrix();
                v[0] * v[0] * m[(GG, GG)].re
                    + v[1] * v[1] * m[(EE, EE)].re
                    + 2.0 * v[0] * v[1] * m[(GG, EE)].re
            })
            .collect();
        let expected = (spec.e_minus / spec.e_plus).powi(2);
        for w in infid.windows(2) {
            assert!((w[1] / w[0] / expected - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn shortcut_formula_is_not_the_spectrum() {
        let anc = pss_state(0.3, DEFAULT_TAIL_TOL).unwrap();
        let spec = operator_spectrum_with_formula(&anc, 4.5);
        let f = spec.formula_e_plus.unwrap();
        assert!(f.is_finite());
        assert!((f - spec.e_plus).abs() > 1e-3);
        assert!(operator_spectrum_with_formula(&anc, 0.0)
            .formula_e_plus
            .is_none());
    }

    #[test]
    fn orthogonal_start_is_a_dead_branch() {
        // At Δτ = 0 the operator is the identity; an operator that kills
        // |gg⟩ must produce a dead-branch error.
        let op = EffectiveOperator {
            o11: 0.0,
            o44: 1.0,
            o12: 1.0,
            o14: 0.0,
            lmax: 0,
        };
        let err = ideal_iterate(&TwoQubitState::<f64>::basis(GG), &op, 1).unwrap_err();
        assert!(matches!(err, Error::DeadBranch { step: 1, .. }));
    }
}
