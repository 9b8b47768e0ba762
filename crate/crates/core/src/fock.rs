//! Truncated two-mode photon-number-correlated ancilla states
//! `Σ_l c(l)|l,l⟩` and their single-mode photon statistics.

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Default probability mass allowed beyond the Fock cutoff.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Hard ceiling on the adaptive cutoff.
pub const MAX_LEVELS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AncillaKind {
    /// Photon-subtracted squeezed state, `λ(l) = tanh(s)^l (l+1)`.
    PhotonSubtracted,
    /// Two-mode squeezed vacuum, `λ(l) = tanh(s)^l`.
    SqueezedVacuum,
}

impl AncillaKind {
    pub fn name(self) -> &'static str {
        match self {
            AncillaKind::PhotonSubtracted => "pss",
            AncillaKind::SqueezedVacuum => "tmsv",
        }
    }
}

/// Amplitudes `c(l)` of `Σ_l c(l)|l,l⟩`, truncated at `lmax`.
///
/// The amplitudes carry the normalization of the untruncated state, so
/// `Σ c(l)² = 1 - tail_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaState<T> {
    kind: AncillaKind,
    squeezing: T,
    weights: Vec<T>,
    tail_mass: T,
}

impl<T: Real> AncillaState<T> {
    pub fn kind(&self) -> AncillaKind {
        self.kind
    }

    pub fn squeezing(&self) -> T {
        self.squeezing
    }

    /// Highest photon number kept.
    pub fn lmax(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Probability mass discarded by the truncation.
    pub fn tail_mass(&self) -> T {
        self.tail_mass
    }

    /// `Σ weights²`, equal to `1 - tail_mass` up to rounding.
    pub fn retained_mass(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, &c| acc + c * c)
    }

    /// Squared normalization `𝒩²` of the untruncated state.
    pub fn normalization_sq(&self) -> T {
        let x = self.squeezing.tanh().powi(2);
        match self.kind {
            AncillaKind::PhotonSubtracted => (T::one() - x).powi(3) / (T::one() + x),
            AncillaKind::SqueezedVacuum => T::one() - x,
        }
    }

    /// Unnormalized amplitude `λ(l)`.
    pub fn lambda(&self, l: usize) -> T {
        lambda(self.kind, self.squeezing.tanh(), l)
    }

    /// Same state with the cutoff moved to `lmax` (the tail estimate is
    /// recomputed, not checked against any tolerance).
    pub fn with_cutoff(&self, lmax: usize) -> Self {
        build_with_cutoff(self.kind, self.squeezing, lmax)
    }
}

fn lambda<T: Real>(kind: AncillaKind, t: T, l: usize) -> T {
    let p = pow_usize(t, l);
    match kind {
        AncillaKind::PhotonSubtracted => p * T::count(l + 1),
        AncillaKind::SqueezedVacuum => p,
    }
}

fn pow_usize<T: Real>(x: T, n: usize) -> T {
    match i32::try_from(n) {
        Ok(k) => x.powi(k),
        Err(_) => x.powf(T::count(n)),
    }
}

fn check_squeezing<T: Real>(s: T) -> Result<()> {
    if !(s >= T::zero()) || !s.is_finite() {
        return Err(domain(
            "s",
            format!("squeezing must be finite and ≥ 0, got {s}"),
        ));
    }
    Ok(())
}

fn check_tail_tol<T: Real>(tail_tol: T) -> Result<()> {
    if !(tail_tol > T::zero() && tail_tol < T::one()) {
        return Err(domain(
            "tail_tol",
            format!("tail tolerance must lie in (0, 1), got {tail_tol}"),
        ));
    }
    Ok(())
}

/// Exact probability beyond `lmax`, summed term by term (all terms positive,
/// geometric decay, no cancellation).
fn tail_beyond<T: Real>(kind: AncillaKind, s: T, lmax: usize) -> T {
    let t = s.tanh();
    let x = t * t;
    match kind {
        AncillaKind::SqueezedVacuum => pow_usize(x, lmax + 1),
        AncillaKind::PhotonSubtracted => {
            let n2 = (T::one() - x).powi(3) / (T::one() + x);
            let mut sum = T::zero();
            let mut l = lmax + 1;
            let mut term = n2 * pow_usize(x, l) * T::count((l + 1) * (l + 1));
            while term > T::epsilon() * sum && term > T::min_positive_value() {
                sum = sum + term;
                l += 1;
                let r = T::count(l + 1) / T::count(l);
                term = term * x * r * r;
                if l > lmax + 10 * MAX_LEVELS {
                    break;
                }
            }
            sum
        }
    }
}

/// Rigorous upper bound on the PSS tail beyond `lmax` from the ratio test:
/// the term ratio `x((l+2)/(l+1))²` decreases in `l`.
fn pss_tail_bound<T: Real>(x: T, lmax: usize) -> T {
    let n2 = (T::one() - x).powi(3) / (T::one() + x);
    let l = lmax + 1;
    let first = n2 * pow_usize(x, l) * T::count((l + 1) * (l + 1));
    let q = T::count(l + 2) / T::count(l + 1);
    let ratio = x * q * q;
    if ratio >= T::one() {
        T::infinity()
    } else {
        first / (T::one() - ratio)
    }
}

fn build_with_cutoff<T: Real>(kind: AncillaKind, s: T, lmax: usize) -> AncillaState<T> {
    let t = s.tanh();
    let x = t * t;
    let norm = match kind {
        AncillaKind::PhotonSubtracted => ((T::one() - x).powi(3) / (T::one() + x)).sqrt(),
        AncillaKind::SqueezedVacuum => (T::one() - x).sqrt(),
    };
    let weights = (0..=lmax).map(|l| norm * lambda(kind, t, l)).collect();
    let tail_mass = if t == T::zero() {
        T::zero()
    } else {
        tail_beyond(kind, s, lmax)
    };
    AncillaState {
        kind,
        squeezing: s,
        weights,
        tail_mass,
    }
}

fn adaptive<T: Real>(kind: AncillaKind, s: T, tail_tol: T) -> Result<AncillaState<T>> {
    check_squeezing(s)?;
    check_tail_tol(tail_tol)?;
    let t = s.tanh();
    let x = t * t;
    if t == T::zero() {
        return Ok(build_with_cutoff(kind, s, 0));
    }
    let lmax = (0..=MAX_LEVELS)
        .find(|&l| match kind {
            AncillaKind::SqueezedVacuum => pow_usize(x, l + 1) < tail_tol,
            AncillaKind::PhotonSubtracted => pss_tail_bound(x, l) < tail_tol,
        })
        .ok_or(Error::Truncation {
            max: MAX_LEVELS,
            tail_tol: tail_tol.to_f64().unwrap_or(f64::NAN),
        })?;
    Ok(build_with_cutoff(kind, s, lmax))
}

/// Photon-subtracted state `𝒩 Σ_l tanh(s)^l (l+1) |l,l⟩`, truncated so the
/// discarded probability is below `tail_tol`.
pub fn pss_state<T: Real>(s: T, tail_tol: T) -> Result<AncillaState<T>> {
    adaptive(AncillaKind::PhotonSubtracted, s, tail_tol)
}

/// Two-mode squeezed vacuum `Σ_l tanh(s)^l / cosh(s) |l,l⟩`, truncated so the
/// discarded probability is below `tail_tol`.
pub fn tmsv_state<T: Real>(s: T, tail_tol: T) -> Result<AncillaState<T>> {
    adaptive(AncillaKind::SqueezedVacuum, s, tail_tol)
}

/// Probability that an on/off detector of efficiency `eta` clicks on an
/// `m`-photon Fock state: `1 - (1-η)^m`.
#[inline]
pub fn click_probability<T: Real>(eta: T, m: usize) -> T {
    T::one() - pow_usize(T::one() - eta, m)
}

pub(crate) fn check_efficiency<T: Real>(eta: T) -> Result<()> {
    if !(eta >= T::zero() && eta <= T::one()) {
        return Err(domain(
            "eta",
            format!("detector efficiency must lie in [0, 1], got {eta}"),
        ));
    }
    Ok(())
}

/// Inefficiency-damped amplitudes `[1 - (1-η)^l] c(l)`, left unnormalized.
pub fn damped_weights<T: Real>(state: &AncillaState<T>, eta: T) -> Result<Vec<T>> {
    check_efficiency(eta)?;
    Ok(state
        .weights
        .iter()
        .enumerate()
        .map(|(l, &c)| click_probability(eta, l) * c)
        .collect())
}

/// Schmidt (single-mode photon-number) distribution `p(l) = c(l)²`.
pub fn photon_distribution<T: Real>(state: &AncillaState<T>) -> Vec<T> {
    state.weights.iter().map(|&c| c * c).collect()
}

/// Mean photon number of one mode, over the retained levels.
pub fn mean_photon_number<T: Real>(state: &AncillaState<T>) -> T {
    photon_distribution(state)
        .into_iter()
        .enumerate()
        .fold(T::zero(), |acc, (l, p)| acc + T::count(l) * p)
}

/// Von Neumann entropy of either reduced mode, in nats.
pub fn schmidt_entropy<T: Real>(state: &AncillaState<T>) -> T {
    photon_distribution(state)
        .into_iter()
        .filter(|&p| p > T::zero())
        .fold(T::zero(), |acc, p| acc - p * p.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = DEFAULT_TAIL_TOL;

    #[test]
    fn vacuum_at_zero_squeezing() {
        for st in [pss_state(0.0, TOL).unwrap(), tmsv_state(0.0, TOL).unwrap()] {
            assert_eq!(st.lmax(), 0);
            assert_eq!(st.weights(), &[1.0]);
            assert_eq!(st.tail_mass(), 0.0);
            assert_eq!(photon_distribution(&st), vec![1.0]);
            assert_eq!(schmidt_entropy(&st), 0.0);
        }
    }

    #[test]
    fn pss_normalization_matches_geometric_series() {
        let st = pss_state(0.3, TOL).unwrap();
        let x = 0.3f64.tanh().powi(2);
        assert_abs_diff_eq!(x, 0.084864, epsilon = 1e-6);
        // Σ x^l (l+1)² summed directly to l = 200.
        let direct: f64 = (0..=200)
            .map(|l| x.powi(l) * ((l + 1) as f64).powi(2))
            .sum();
        assert_abs_diff_eq!(st.normalization_sq(), 1.0 / direct, epsilon = 1e-14);
        assert_abs_diff_eq!(st.normalization_sq(), 0.70650, epsilon = 1e-4);
        let sum: f64 = st.weights().iter().map(|c| c * c).sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(st.tail_mass() < TOL);
    }

    #[test]
    fn pss_unnormalized_amplitudes() {
        let st = pss_state(0.3, TOL).unwrap();
        assert_abs_diff_eq!(st.lambda(0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.lambda(1), 0.58262, epsilon = 1e-5);
        assert_abs_diff_eq!(st.lambda(2), 0.25459, epsilon = 1e-5);
    }

    #[test]
    fn tmsv_amplitudes_and_ratio() {
        let s = 0.3f64;
        let st = tmsv_state(s, TOL).unwrap();
        for (l, &w) in st.weights().iter().enumerate() {
            assert_abs_diff_eq!(w, s.tanh().powi(l as i32) / s.cosh(), epsilon = 1e-15);
        }
        for pair in st.weights().windows(2) {
            assert_abs_diff_eq!(pair[1] / pair[0], s.tanh(), epsilon = 1e-14);
        }
    }

    #[test]
    fn damped_weight_factors() {
        let st = pss_state(0.3, TOL).unwrap();
        let ideal = damped_weights(&st, 1.0).unwrap();
        assert_eq!(ideal[0], 0.0);
        assert_eq!(ideal[1..], st.weights()[1..]);
        assert!(damped_weights(&st, 0.0).unwrap().iter().all(|&w| w == 0.0));
        let d = damped_weights(&st, 0.7).unwrap();
        assert_abs_diff_eq!(d[2] / st.weights()[2], 0.91, epsilon = 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            pss_state(-0.1, TOL),
            Err(Error::Domain { name: "s", .. })
        ));
        assert!(matches!(pss_state(0.3, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(tmsv_state(0.3, 1.5), Err(Error::Domain { .. })));
        assert!(matches!(
            pss_state(f64::NAN, TOL),
            Err(Error::Domain { .. })
        ));
        let st = pss_state(0.3, TOL).unwrap();
        assert!(damped_weights(&st, 1.2).is_err());
        assert!(damped_weights(&st, -0.1).is_err());
    }

    #[test]
    fn pss_shifted_to_higher_photon_numbers() {
        let pss = pss_state(0.3, TOL).unwrap();
        let tmsv = tmsv_state(0.3, TOL).unwrap();
        // Direct series: <l>_PSS = Σ l x^l (l+1)² / Σ x^l (l+1)², <l>_TMSV = x/(1-x).
        let x = 0.3f64.tanh().powi(2);
        let num: f64 = (0..400)
            .map(|l| l as f64 * x.powi(l) * ((l + 1) as f64).powi(2))
            .sum();
        let den: f64 = (0..400).map(|l| x.powi(l) * ((l + 1) as f64).powi(2)).sum();
        assert_abs_diff_eq!(mean_photon_number(&pss), num / den, epsilon = 1e-11);
        assert_abs_diff_eq!(mean_photon_number(&tmsv), x / (1.0 - x), epsilon = 1e-11);
        assert!(mean_photon_number(&pss) > mean_photon_number(&tmsv));
    }

    #[test]
    fn entropy_ordering_on_grid() {
        for s in [0.1, 0.3, 0.5, 1.0] {
            let pss = pss_state(s, TOL).unwrap();
            let tmsv = tmsv_state(s, TOL).unwrap();
            assert!(
                schmidt_entropy(&pss) > schmidt_entropy(&tmsv),
                "entropy ordering fails at s = {s}"
            );
        }
    }

    #[test]
    fn cutoff_override_reports_larger_tail() {
        let st = pss_state(0.3, TOL).unwrap();
        let short = st.with_cutoff(3);
        assert!(short.tail_mass() > 1e-6);
        let sum: f64 = photon_distribution(&short).iter().sum();
        assert_abs_diff_eq!(sum + short.tail_mass(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn single_precision_state() {
        let st = pss_state(0.3f32, 1e-6).unwrap();
        let sum: f32 = st.weights().iter().map(|c| c * c).sum();
        assert!((sum - 1.0).abs() < 1e-5);
    }
}
