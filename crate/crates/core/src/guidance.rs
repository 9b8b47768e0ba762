//! Feedback-free guidance: a fresh ancilla every round, on/off detection of
//! both modes, and post-selection on the prescribed outcomes.
//!
//! Starting from `|gg⟩`, every coincidence (both detectors click) keeps the
//! qubits in the four-parameter trapped family
//!
//! ```text
//! ρ = a|gg⟩⟨gg| + b(|ge⟩⟨ge| + |eg⟩⟨eg|) + f|ee⟩⟨ee| + g(|gg⟩⟨ee| + |ee⟩⟨gg|)
//! ```
//!
//! so one round reduces to a 4x4 linear map on `(a, b, f, g)` followed by
//! renormalization. The map's coefficients come from a [`StepCoefficientTable`].

use num_complex::Complex;

use crate::dynamics::{jc_unitary, survival, ConditionalMap, OutcomeLabel};
use crate::error::{Error, Result};
use crate::fock::{
    check_efficiency, click_probability, damped_weights, pss_state, AncillaState, DEFAULT_TAIL_TOL,
};
use crate::linalg::{symmetric_eigen, CMat};
use crate::metrics::{Metrics, TwoQubitState, EE, EG, GE, GG};
use crate::scalar::Real;

/// Probability below which a post-selected branch counts as dead.
pub const DEAD_BRANCH_PROBABILITY: f64 = 1e-15;

/// Fixed-point iteration stops once the max-norm change drops below this.
pub const FIXED_POINT_TOL: f64 = 1e-12;

pub const FIXED_POINT_MAX_ITERATIONS: usize = 10_000;

/// Normalized member of the trapped family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappedState<T> {
    /// `⟨gg|ρ|gg⟩`
    pub a: T,
    /// `⟨ge|ρ|ge⟩ = ⟨eg|ρ|eg⟩`
    pub b: T,
    /// `⟨ee|ρ|ee⟩`
    pub f: T,
    /// `⟨gg|ρ|ee⟩ = ⟨ee|ρ|gg⟩`
    pub g: T,
}

impl<T: Real> TrappedState<T> {
    pub fn new(a: T, b: T, f: T, g: T) -> Result<Self> {
        let tol = T::state_tol();
        if ![a, b, f, g].iter().all(|x| x.is_finite()) {
            return Err(Error::NotTrapped("non-finite coordinate".into()));
        }
        let tr = a + T::lit(2.0) * b + f;
        if (tr - T::one()).abs() > tol {
            return Err(Error::NotTrapped(format!("a + 2b + f = {tr}")));
        }
        if a < -tol || b < -tol || f < -tol {
            return Err(Error::NotTrapped(format!(
                "negative population ({a}, {b}, {f})"
            )));
        }
        if g * g > a * f + tol {
            return Err(Error::NotTrapped(format!(
                "g² = {} exceeds a·f = {}",
                g * g,
                a * f
            )));
        }
        Ok(Self { a, b, f, g })
    }

    /// Normalizes unnormalized coordinates, returning the state and the
    /// trace `a + 2b + f` that was divided out.
    pub fn normalize(coords: [T; 4]) -> Result<(Self, T)> {
        let [a, b, f, g] = coords;
        let p = a + T::lit(2.0) * b + f;
        if !(p > T::zero()) {
            return Err(Error::NotTrapped(format!("non-positive trace {p}")));
        }
        Ok((Self::new(a / p, b / p, f / p, g / p)?, p))
    }

    /// `|gg⟩⟨gg|`, the default initial state.
    pub fn ground() -> Self {
        Self {
            a: T::one(),
            b: T::zero(),
            f: T::zero(),
            g: T::zero(),
        }
    }

    pub fn coords(&self) -> [T; 4] {
        [self.a, self.b, self.f, self.g]
    }

    pub fn to_matrix(&self) -> CMat<T> {
        let mut m = CMat::zeros(4);
        let r = |x: T| Complex::new(x, T::zero());
        m[(GG, GG)] = r(self.a);
        m[(GE, GE)] = r(self.b);
        m[(EG, EG)] = r(self.b);
        m[(EE, EE)] = r(self.f);
        m[(GG, EE)] = r(self.g);
        m[(EE, GG)] = r(self.g);
        m
    }

    pub fn to_state(&self) -> Result<TwoQubitState<T>> {
        TwoQubitState::new(self.to_matrix())
    }

    /// Reads the trapped coordinates off a general state, failing if the
    /// state has components outside the family.
    pub fn from_state(rho: &TwoQubitState<T>) -> Result<Self> {
        let m = rho.matrix();
        let tol = T::state_tol();
        let allowed = |i: usize, j: usize| i == j || (i, j) == (GG, EE) || (i, j) == (EE, GG);
        for i in 0..4 {
            for j in 0..4 {
                if !allowed(i, j) && m[(i, j)].norm() > tol {
                    return Err(Error::NotTrapped(format!(
                        "coherence ρ[{i}][{j}] = {}",
                        m[(i, j)]
                    )));
                }
            }
        }
        if (m[(GE, GE)].re - m[(EG, EG)].re).abs() > tol {
            return Err(Error::NotTrapped("unequal ge/eg populations".into()));
        }
        if m[(GG, EE)].im.abs() > tol {
            return Err(Error::NotTrapped("complex gg/ee coherence".into()));
        }
        let c = coords_of(m);
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coords()
            .iter()
            .zip(other.coords().iter())
            .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).abs()))
    }

    /// Eigenvalues `(block_max, block_min, b)`: the two of the gg/ee block
    /// and the doubly degenerate ge/eg one.
    pub fn spectrum(&self) -> (T, T, T) {
        let (vals, _) = symmetric_eigen(2, &[self.a, self.g, self.g, self.f]);
        (vals[1], vals[0], self.b)
    }

    pub fn metrics(&self) -> Result<Metrics<T>> {
        Ok(Metrics::of(&self.to_state()?))
    }
}

/// Trapped coordinates `(a, b, f, g)` of an arbitrary (possibly
/// unnormalized or non-Hermitian) 4x4 operator; `b` averages the two
/// single-excitation populations.
pub fn coords_of<T: Real>(m: &CMat<T>) -> [T; 4] {
    [
        m[(GG, GG)].re,
        (m[(GE, GE)].re + m[(EG, EG)].re) * T::lit(0.5),
        m[(EE, EE)].re,
        m[(GG, EE)].re,
    ]
}

/// Source matrix unit pushed through one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// `|gg⟩⟨gg|`
    Gggg,
    /// `|eg⟩⟨eg|`
    Egeg,
    /// `|ge⟩⟨ge|`
    Gege,
    /// `|ee⟩⟨ee|`
    Eeee,
    /// `|ee⟩⟨gg|`
    Eegg,
    /// `|gg⟩⟨ee|`
    Ggee,
}

impl Source {
    pub const ALL: [Source; 6] = [
        Source::Gggg,
        Source::Egeg,
        Source::Gege,
        Source::Eeee,
        Source::Eegg,
        Source::Ggee,
    ];

    pub fn unit<T: Real>(self) -> CMat<T> {
        let (i, j) = match self {
            Source::Gggg => (GG, GG),
            Source::Egeg => (EG, EG),
            Source::Gege => (GE, GE),
            Source::Eeee => (EE, EE),
            Source::Eegg => (EE, GG),
            Source::Ggee => (GG, EE),
        };
        CMat::unit(4, i, j)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Target coordinate of the trapped family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    A,
    B,
    F,
    G,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::A, Target::B, Target::F, Target::G];

    fn index(self) -> usize {
        self as usize
    }
}

/// Transfer coefficients `M_source` for one round with a given outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCoefficientTable<T> {
    /// `columns[source][target]`
    columns: [[T; 4]; 6],
    pub squeezing: T,
    pub dtau: T,
    pub eta: T,
    pub lmax: usize,
    pub outcome: OutcomeLabel,
}

impl<T: Real> StepCoefficientTable<T> {
    pub fn get(&self, target: Target, source: Source) -> T {
        self.columns[source.index()][target.index()]
    }

    pub fn column(&self, source: Source) -> [T; 4] {
        self.columns[source.index()]
    }

    /// Every column obtained by pushing the matrix units through the dense
    /// conditional map.
    pub fn from_oracle(
        ancilla: &AncillaState<T>,
        dtau: T,
        eta: T,
        outcome: OutcomeLabel,
    ) -> Result<Self> {
        let u = jc_unitary(dtau, ancilla.lmax())?;
        let map = ConditionalMap::new(ancilla, &u, eta, outcome)?;
        let columns = Source::ALL.map(|src| coords_of(&map.apply(&src.unit())));
        Ok(Self {
            columns,
            squeezing: ancilla.squeezing(),
            dtau,
            eta,
            lmax: ancilla.lmax(),
            outcome,
        })
    }

    /// Linear map on `(a, b, f, g)`: `out = T · in`.
    pub fn transfer_matrix(&self) -> [[T; 4]; 4] {
        let col = |s: Source| self.columns[s.index()];
        let (gg, eg, ge, ee, eegg, ggee) = (
            col(Source::Gggg),
            col(Source::Egeg),
            col(Source::Gege),
            col(Source::Eeee),
            col(Source::Eegg),
            col(Source::Ggee),
        );
        let mut t = [[T::zero(); 4]; 4];
        for r in 0..4 {
            t[r] = [gg[r], eg[r] + ge[r], ee[r], eegg[r] + ggee[r]];
        }
        t
    }

    /// Unnormalized image of trapped coordinates.
    pub fn push(&self, coords: [T; 4]) -> [T; 4] {
        let t = self.transfer_matrix();
        let mut out = [T::zero(); 4];
        for r in 0..4 {
            out[r] = (0..4).fold(T::zero(), |acc, c| acc + t[r][c] * coords[c]);
        }
        out
    }

    /// Largest entry-wise difference from another table.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for s in 0..6 {
            for t in 0..4 {
                worst = worst.max((self.columns[s][t] - other.columns[s][t]).abs());
            }
        }
        worst
    }
}

/// The `|gg⟩⟨gg|` column in closed form, for a coincidence detected with
/// efficiency `eta`. Each term is damped by the click probabilities of the
/// photon numbers actually left in the two modes.
pub fn coincidence_series<T: Real>(ancilla: &AncillaState<T>, dtau: T, eta: T) -> Result<[T; 4]> {
    let c = ancilla.weights();
    let damped = damped_weights(ancilla, eta)?;
    let d = |m: usize| click_probability(eta, m);
    let (mut a, mut b, mut f, mut g) = (T::zero(), T::zero(), T::zero(), T::zero());
    for l in 1..c.len() {
        let q2 = survival(dtau, l).powi(2);
        let s2 = T::one() - q2;
        // |gg⟩|l,l⟩ survives with both modes still holding l photons
        a = a + damped[l] * damped[l] * q2 * q2;
        // one qubit excited: modes hold (l, l-1)
        b = b + c[l] * c[l] * q2 * s2 * d(l) * d(l - 1);
        // both excited: modes hold (l-1, l-1)
        f = f + c[l] * c[l] * s2 * s2 * d(l - 1) * d(l - 1);
        // coherence between |gg⟩|l,l⟩ (from l) and |ee⟩|l,l⟩ (from l+1)
        if let Some(&cn) = c.get(l + 1) {
            let s2n = T::one() - survival(dtau, l + 1).powi(2);
            g = g - c[l] * cn * q2 * s2n * d(l) * d(l);
        }
    }
    Ok([a, b, f, g])
}

/// Coincidence table for a photon-subtracted ancilla: closed-form `|gg⟩⟨gg|`
/// column, remaining columns from the dense conditional map.
pub fn step_coefficients<T: Real>(
    s: T,
    dtau: T,
    eta: T,
    tail_tol: T,
) -> Result<StepCoefficientTable<T>> {
    check_efficiency(eta)?;
    let ancilla = pss_state(s, tail_tol)?;
    coincidence_table(&ancilla, dtau, eta)
}

pub fn coincidence_table<T: Real>(
    ancilla: &AncillaState<T>,
    dtau: T,
    eta: T,
) -> Result<StepCoefficientTable<T>> {
    let mut table = StepCoefficientTable::from_oracle(ancilla, dtau, eta, OutcomeLabel::POSITIVE)?;
    table.columns[Source::Gggg.index()] = coincidence_series(ancilla, dtau, eta)?;
    Ok(table)
}

fn apply_step_at<T: Real>(
    state: &TrappedState<T>,
    table: &StepCoefficientTable<T>,
    step: usize,
) -> Result<(TrappedState<T>, T)> {
    let out = table.push(state.coords());
    let p = out[0] + T::lit(2.0) * out[1] + out[2];
    if !(p >= T::lit(DEAD_BRANCH_PROBABILITY)) {
        return Err(Error::DeadBranch {
            step,
            probability: p.to_f64().unwrap_or(f64::NAN),
        });
    }
    TrappedState::normalize(out)
}

/// One round of the recurrence: unnormalized image of `state` under the
/// table, its trace (the outcome probability) and the renormalized state.
pub fn apply_step<T: Real>(
    state: &TrappedState<T>,
    table: &StepCoefficientTable<T>,
) -> Result<(TrappedState<T>, T)> {
    apply_step_at(state, table, 1)
}

/// One row of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep<T> {
    /// 1-based round index.
    pub step: usize,
    /// Post-selected outcome; `None` for the idealized projection.
    pub outcome: Option<OutcomeLabel>,
    pub state: TwoQubitState<T>,
    /// Trapped coordinates when the state lies in the family.
    pub trapped: Option<TrappedState<T>>,
    pub success_probability: T,
    pub cumulative_probability: T,
    pub metrics: Metrics<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace<T> {
    steps: Vec<TraceStep<T>>,
}

impl<T: Real> ProtocolTrace<T> {
    pub fn new(steps: Vec<TraceStep<T>>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[TraceStep<T>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&TraceStep<T>> {
        self.steps.last()
    }

    /// Step `n` (1-based).
    pub fn at(&self, n: usize) -> Option<&TraceStep<T>> {
        n.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    pub fn linear_entropies(&self) -> Vec<T> {
        self.steps
            .iter()
            .map(|s| s.metrics.linear_entropy)
            .collect()
    }

    pub fn negativities(&self) -> Vec<T> {
        self.steps.iter().map(|s| s.metrics.negativity).collect()
    }

    pub fn fidelities(&self) -> Vec<T> {
        self.steps.iter().map(|s| s.metrics.fidelity).collect()
    }
}

fn trapped_step<T: Real>(
    step: usize,
    outcome: OutcomeLabel,
    state: TrappedState<T>,
    p: T,
    cumulative: T,
) -> Result<TraceStep<T>> {
    let rho = state.to_state()?;
    Ok(TraceStep {
        step,
        outcome: Some(outcome),
        metrics: Metrics::of(&rho),
        state: rho,
        trapped: Some(state),
        success_probability: p,
        cumulative_probability: cumulative,
    })
}

/// Iterates a fixed table `n` times (a fresh, identical ancilla every round).
pub fn evolve_with_table<T: Real>(
    rho0: &TrappedState<T>,
    n: usize,
    table: &StepCoefficientTable<T>,
) -> Result<ProtocolTrace<T>> {
    if n == 0 {
        return Err(crate::error::domain("n", "need at least one iteration"));
    }
    let mut state = *rho0;
    let mut cumulative = T::one();
    let mut steps = Vec::with_capacity(n);
    for step in 1..=n {
        let (next, p) = apply_step_at(&state, table, step)?;
        cumulative = cumulative * p;
        state = next;
        steps.push(trapped_step(step, table.outcome, state, p, cumulative)?);
    }
    Ok(ProtocolTrace::new(steps))
}

/// `n` post-selected coincidences starting from `rho0`.
pub fn guided_evolution<T: Real>(
    rho0: &TrappedState<T>,
    n: usize,
    s: T,
    dtau: T,
    eta: T,
) -> Result<ProtocolTrace<T>> {
    let table = step_coefficients(s, dtau, eta, T::lit(DEFAULT_TAIL_TOL))?;
    evolve_with_table(rho0, n, &table)
}

/// Largest eigenvalue of a trapped state and its gg/ee-plane eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantEigenpair<T> {
    pub beta_plus: T,
    /// Unit `(⟨gg|v⟩, ⟨ee|v⟩)`, gg component non-negative.
    pub eigvec: [T; 2],
    /// All four eigenvalues, descending.
    pub spectrum: [T; 4],
    /// `[(a-f) + √((a-f)² + 4g²)] / 2g`, which is the component ratio
    /// `⟨gg|v⟩/⟨ee|v⟩` of the dominant eigenvector rather than its
    /// eigenvalue. For comparison only; `None` when `g = 0`.
    pub formula_beta_plus: Option<T>,
}

pub fn dominant_eigenpair<T: Real>(state: &TrappedState<T>) -> DominantEigenpair<T> {
    let m = state.to_matrix();
    let mut full = [T::zero(); 16];
    for i in 0..4 {
        for j in 0..4 {
            full[i * 4 + j] = m[(i, j)].re;
        }
    }
    let (vals, _) = symmetric_eigen(4, &full);
    let (bvals, bvecs) = symmetric_eigen(2, &[state.a, state.g, state.g, state.f]);
    let mut v = [bvecs[1][0], bvecs[1][1]];
    if v[0] < T::zero() || (v[0] == T::zero() && v[1] < T::zero()) {
        v = [-v[0], -v[1]];
    }
    let formula = if state.g != T::zero() {
        let d = state.a - state.f;
        Some((d + (d * d + T::lit(4.0) * state.g * state.g).sqrt()) / (T::lit(2.0) * state.g))
    } else {
        None
    };
    DominantEigenpair {
        beta_plus: vals[3].max(bvals[1]),
        eigvec: v,
        spectrum: [vals[3], vals[2], vals[1], vals[0]],
        formula_beta_plus: formula,
    }
}

/// Conditional state after a round in which neither detector fires.
pub fn negative_event_step<T: Real>(
    state: &TrappedState<T>,
    s: T,
    dtau: T,
    eta: T,
) -> Result<(TrappedState<T>, T)> {
    let ancilla = pss_state(s, T::lit(DEFAULT_TAIL_TOL))?;
    let table = StepCoefficientTable::from_oracle(&ancilla, dtau, eta, OutcomeLabel::NEGATIVE)?;
    apply_step(state, &table)
}

/// Runs a prescribed list of outcomes. Coincidence and no-signal rounds on
/// trapped states go through the coefficient tables; single-click rounds
/// (which break the ge/eg symmetry) and anything after them use the dense
/// conditional map on the full state.
pub fn outcome_sequence<T: Real>(
    rho0: &TrappedState<T>,
    sequence: &[OutcomeLabel],
    s: T,
    dtau: T,
    eta: T,
) -> Result<ProtocolTrace<T>> {
    if sequence.is_empty() {
        return Err(crate::error::domain(
            "sequence",
            "must contain at least one outcome",
        ));
    }
    check_efficiency(eta)?;
    let ancilla = pss_state(s, T::lit(DEFAULT_TAIL_TOL))?;
    let unitary = jc_unitary(dtau, ancilla.lmax())?;
    let mut positive: Option<StepCoefficientTable<T>> = None;
    let mut negative: Option<StepCoefficientTable<T>> = None;

    let mut rho = rho0.to_state()?;
    let mut trapped = Some(*rho0);
    let mut cumulative = T::one();
    let mut steps = Vec::with_capacity(sequence.len());
    for (i, &outcome) in sequence.iter().enumerate() {
        let step = i + 1;
        let table = match (trapped, outcome) {
            (Some(_), OutcomeLabel::POSITIVE) => Some(match &positive {
                Some(t) => t,
                None => positive.insert(coincidence_table(&ancilla, dtau, eta)?),
            }),
            (Some(_), OutcomeLabel::NEGATIVE) => Some(match &negative {
                Some(t) => t,
                None => negative.insert(StepCoefficientTable::from_oracle(
                    &ancilla,
                    dtau,
                    eta,
                    OutcomeLabel::NEGATIVE,
                )?),
            }),
            _ => None,
        };
        let record = match (table, trapped) {
            (Some(table), Some(current)) => {
                let (next, p) = apply_step_at(&current, table, step)?;
                cumulative = cumulative * p;
                trapped_step(step, outcome, next, p, cumulative)?
            }
            _ => {
                let map = ConditionalMap::new(&ancilla, &unitary, eta, outcome)?;
                let out = map.apply(rho.matrix());
                let p = out.trace().re;
                if !(p >= T::lit(DEAD_BRANCH_PROBABILITY)) {
                    return Err(Error::DeadBranch {
                        step,
                        probability: p.to_f64().unwrap_or(f64::NAN),
                    });
                }
                let state = TwoQubitState::new(out.scale(T::one() / p))?;
                cumulative = cumulative * p;
                TraceStep {
                    step,
                    outcome: Some(outcome),
                    metrics: Metrics::of(&state),
                    trapped: TrappedState::from_state(&state).ok(),
                    state,
                    success_probability: p,
                    cumulative_probability: cumulative,
                }
            }
        };
        rho = record.state.clone();
        trapped = record.trapped;
        steps.push(record);
    }
    Ok(ProtocolTrace::new(steps))
}

/// Asymptotic state of repeated coincidences.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint<T> {
    /// Closed-form approximation; `None` when its denominators vanish.
    pub closed_form: Option<ClosedForm<T>>,
    pub iterated: TrappedState<T>,
    pub iterations: usize,
}

/// Closed-form asymptotic state. Keeping only the `|gg⟩⟨gg|` and
/// `|ee⟩⟨ee|` columns (subscripts g and e), the recurrence becomes
///
/// ```text
/// A' ∝ F·Aₑ + A·A_g,  F' ∝ F·Fₑ + A·F_g,  G' ∝ F·Gₑ + A·G_g,  B' ≈ 0,
/// ```
///
/// and with `F_g` dropped its fixed point is
///
/// ```text
/// a = Aₑ/D,  f = (Fₑ - A_g)/D,  g = [AₑG_g + (Fₑ - A_g)Gₑ] / (Fₑ D),
/// D = Fₑ + Aₑ - A_g.
/// ```
///
/// The coordinates are not validated: the truncation can push `g²` past
/// `a·f`, and [`ClosedForm::is_physical`] reports this.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm<T> {
    pub a: T,
    pub f: T,
    pub g: T,
    /// `g` as `AₑG_g/Fₑ + (Fₑ - A_g)Gₑ/Fₑ` divided by the trace `Fₑ` only,
    /// i.e. without the `1/D` that makes it consistent with `a` and `f`.
    pub unscaled_g: T,
}

impl<T: Real> ClosedForm<T> {
    pub fn coords(&self) -> [T; 4] {
        [self.a, T::zero(), self.f, self.g]
    }

    pub fn is_physical(&self) -> bool {
        let tol = T::state_tol();
        self.a >= -tol && self.f >= -tol && self.g * self.g <= self.a * self.f + tol
    }

    pub fn to_state(&self) -> Result<TrappedState<T>> {
        TrappedState::new(self.a, T::zero(), self.f, self.g)
    }

    /// Benchmarks evaluated from the family formulas, so they are defined
    /// even when the matrix is not positive semidefinite.
    pub fn metrics(&self) -> Metrics<T> {
        let two = T::lit(2.0);
        let purity = self.a * self.a + self.f * self.f + two * self.g * self.g;
        // partial transpose spectrum: a, f, ±|g|
        let lowest = self.a.min(self.f).min(-self.g.abs());
        let negativity = (-two * lowest).max(T::zero());
        Metrics {
            linear_entropy: T::lit(4.0 / 3.0) * (T::one() - purity),
            negativity: if negativity < T::zero_tol() {
                T::zero()
            } else {
                negativity
            },
            fidelity: (self.a + self.f) / two - self.g,
        }
    }
}

pub fn closed_form_fixed_point<T: Real>(table: &StepCoefficientTable<T>) -> Option<ClosedForm<T>> {
    let ae = table.get(Target::A, Source::Eeee);
    let fe = table.get(Target::F, Source::Eeee);
    let ge = table.get(Target::G, Source::Eeee);
    let ag = table.get(Target::A, Source::Gggg);
    let gg = table.get(Target::G, Source::Gggg);
    let den = fe + ae - ag;
    let tiny = T::lit(DEAD_BRANCH_PROBABILITY);
    if den.abs() < tiny || fe.abs() < tiny {
        return None;
    }
    let g_raw = ae * gg / fe + (fe - ag) * ge / fe;
    Some(ClosedForm {
        a: ae / den,
        f: (fe - ag) / den,
        g: g_raw / den,
        unscaled_g: g_raw / fe,
    })
}

pub fn fixed_point<T: Real>(s: T, dtau: T, eta: T) -> Result<FixedPoint<T>> {
    let table = step_coefficients(s, dtau, eta, T::lit(DEFAULT_TAIL_TOL))?;
    fixed_point_with_table(&TrappedState::ground(), &table)
}

pub fn fixed_point_with_table<T: Real>(
    rho0: &TrappedState<T>,
    table: &StepCoefficientTable<T>,
) -> Result<FixedPoint<T>> {
    let tol = T::lit(FIXED_POINT_TOL).max(T::epsilon() * T::lit(16.0));
    let mut state = *rho0;
    let mut residual = T::infinity();
    for k in 1..=FIXED_POINT_MAX_ITERATIONS {
        let (next, _) = apply_step_at(&state, table, k)?;
        residual = next.max_abs_diff(&state);
        state = next;
        if residual < tol {
            return Ok(FixedPoint {
                closed_form: closed_form_fixed_point(table),
                iterated: state,
                iterations: k,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: FIXED_POINT_MAX_ITERATIONS,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}
