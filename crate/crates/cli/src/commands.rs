//! Table builders behind each subcommand. Grid points run in parallel and
//! are collected in grid order, so output never depends on scheduling.

use rayon::prelude::*;

use qguide::dynamics::OutcomeLabel;
use qguide::fock::{photon_distribution, pss_state, tmsv_state};
use qguide::guidance::{
    apply_step, evolve_with_table, fixed_point_with_table, outcome_sequence, step_coefficients,
    StepCoefficientTable, TrappedState,
};
use qguide::ideal::{effective_operator, ideal_iterate, operator_spectrum};
use qguide::metrics::{Metrics, TwoQubitState, EE, EG, GE, GG};
use qguide::{Error, Result};

use crate::table::{Cell, Table};

pub const STATUS_OK: &str = "ok";
pub const STATUS_DEAD: &str = "dead_branch";
pub const STATUS_NO_CONVERGENCE: &str = "no_convergence";

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub s: f64,
    pub eta: f64,
    pub tail_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            s: 0.3,
            eta: 1.0,
            tail_tol: qguide::DEFAULT_TAIL_TOL,
        }
    }
}

/// Interaction times to evaluate: one value or `points` evenly spaced
/// values from `min` to `max` inclusive.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Single(f64),
    Range { min: f64, max: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Single(x) => vec![x],
            Grid::Range { min, max, points } => {
                let step = (max - min) / (points - 1) as f64;
                (0..points)
                    .map(|k| {
                        if k + 1 == points {
                            max
                        } else {
                            min + step * k as f64
                        }
                    })
                    .collect()
            }
        }
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    /// `MIN:MAX:POINTS`
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, points] = parts[..] else {
            return Err(format!("expected MIN:MAX:POINTS, got {s:?}"));
        };
        let min: f64 = min.trim().parse().map_err(|e| format!("MIN: {e}"))?;
        let max: f64 = max.trim().parse().map_err(|e| format!("MAX: {e}"))?;
        let points: usize = points.trim().parse().map_err(|e| format!("POINTS: {e}"))?;
        if points < 2 {
            return Err("a range needs at least 2 points".into());
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(format!("need finite MIN < MAX, got {min} and {max}"));
        }
        Ok(Grid::Range { min, max, points })
    }
}

fn check_dtau(grid: &Grid) -> Result<()> {
    for d in grid.values() {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::Domain {
                name: "dtau",
                detail: format!("interaction time must be finite and ≥ 0, got {d}"),
            });
        }
    }
    Ok(())
}

fn par_rows<F>(grid: &Grid, f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(f64) -> Result<Vec<Vec<Cell>>> + Sync,
{
    check_dtau(grid)?;
    let blocks: Vec<Result<Vec<Vec<Cell>>>> = grid.values().into_par_iter().map(&f).collect();
    let mut rows = Vec::new();
    for block in blocks {
        rows.extend(block?);
    }
    Ok(rows)
}

fn metric_cells(m: &Metrics<f64>) -> [Cell; 3] {
    [
        m.linear_entropy.into(),
        m.negativity.into(),
        m.fidelity.into(),
    ]
}

fn missing(n: usize) -> impl Iterator<Item = Cell> {
    std::iter::repeat_n(Cell::Missing, n)
}

fn is_dead(e: &Error) -> Option<usize> {
    match e {
        Error::DeadBranch { step, .. } => Some(*step),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Eigenvalues of the ancilla-projected operator.
    Operator,
    /// Eigenvalues of the state after one coincidence.
    Density,
}

pub fn spectrum(kind: SpectrumKind, p: &Params, grid: &Grid) -> Result<Table> {
    match kind {
        SpectrumKind::Operator => {
            let mut t = Table::new(&["dtau", "e_plus", "e_minus", "e_zero"]);
            t.extend(par_rows(grid, |dtau| {
                let spec = operator_spectrum(&effective_operator(p.s, dtau, p.tail_tol)?);
                Ok(vec![vec![
                    dtau.into(),
                    spec.e_plus.into(),
                    spec.e_minus.into(),
                    spec.e_zero.into(),
                ]])
            })?);
            Ok(t)
        }
        SpectrumKind::Density => {
            let mut t = Table::new(&["dtau", "beta_plus", "beta_2", "beta_3_degenerate", "status"]);
            t.extend(par_rows(grid, |dtau| {
                let table = step_coefficients(p.s, dtau, p.eta, p.tail_tol)?;
                let row = match apply_step(&TrappedState::ground(), &table) {
                    Ok((st, _)) => {
                        let (hi, lo, b) = st.spectrum();
                        vec![
                            dtau.into(),
                            hi.into(),
                            lo.into(),
                            b.into(),
                            Cell::text(STATUS_OK),
                        ]
                    }
                    Err(e) if is_dead(&e).is_some() => {
                        let mut r = vec![dtau.into()];
                        r.extend(missing(3));
                        r.push(Cell::text(STATUS_DEAD));
                        r
                    }
                    Err(e) => return Err(e),
                };
                Ok(vec![row])
            })?);
            Ok(t)
        }
    }
}

const EVOLVE_COLUMNS: [&str; 8] = [
    "n",
    "dtau",
    "S_L",
    "E_NPT",
    "fidelity",
    "step_probability",
    "cumulative_probability",
    "status",
];

fn dead_rows(from: usize, to: usize, dtau: f64, width: usize) -> Vec<Vec<Cell>> {
    (from..=to)
        .map(|n| {
            let mut r = vec![Cell::from(n), dtau.into()];
            r.extend(missing(width - 3));
            r.push(Cell::text(STATUS_DEAD));
            r
        })
        .collect()
}

/// Steps `1..=n` of the post-selected coincidence protocol from `|gg⟩`.
pub fn evolve(p: &Params, grid: &Grid, n: usize) -> Result<Table> {
    check_n(n)?;
    let mut t = Table::new(&EVOLVE_COLUMNS);
    t.extend(par_rows(grid, |dtau| {
        let table = step_coefficients(p.s, dtau, p.eta, p.tail_tol)?;
        evolve_rows(&table, dtau, n)
    })?);
    Ok(t)
}

fn evolve_rows(table: &StepCoefficientTable<f64>, dtau: f64, n: usize) -> Result<Vec<Vec<Cell>>> {
    // run step by step so rows before a dead branch survive
    let mut rows = Vec::with_capacity(n);
    let mut state = TrappedState::ground();
    let mut cumulative = 1.0;
    for step in 1..=n {
        match evolve_with_table(&state, 1, table) {
            Ok(trace) => {
                let s = &trace.steps()[0];
                cumulative *= s.success_probability;
                state = s.trapped.expect("coincidences stay in the family");
                let mut r = vec![Cell::from(step), dtau.into()];
                r.extend(metric_cells(&s.metrics));
                r.extend([
                    s.success_probability.into(),
                    cumulative.into(),
                    Cell::text(STATUS_OK),
                ]);
                rows.push(r);
            }
            Err(e) if is_dead(&e).is_some() => {
                rows.extend(dead_rows(step, n, dtau, EVOLVE_COLUMNS.len()));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Idealized iteration with the ancilla-projected operator.
pub fn ideal(p: &Params, grid: &Grid, n: usize) -> Result<Table> {
    check_n(n)?;
    let columns = ["n", "dtau", "S_L", "E_NPT", "fidelity", "status"];
    let mut t = Table::new(&columns);
    t.extend(par_rows(grid, |dtau| {
        let op = effective_operator(p.s, dtau, p.tail_tol)?;
        match ideal_iterate(&TwoQubitState::basis(GG), &op, n) {
            Ok(trace) => Ok(trace
                .steps()
                .iter()
                .map(|s| {
                    let mut r = vec![Cell::from(s.step), dtau.into()];
                    r.extend(metric_cells(&s.metrics));
                    r.push(Cell::text(STATUS_OK));
                    r
                })
                .collect()),
            Err(e) => match is_dead(&e) {
                Some(step) => {
                    // the prefix is still well defined
                    let mut rows = if step > 1 {
                        ideal_prefix(&op, step - 1, dtau)?
                    } else {
                        Vec::new()
                    };
                    rows.extend(dead_rows(step, n, dtau, columns.len()));
                    Ok(rows)
                }
                None => Err(e),
            },
        }
    })?);
    Ok(t)
}

fn ideal_prefix(
    op: &qguide::EffectiveOperator<f64>,
    n: usize,
    dtau: f64,
) -> Result<Vec<Vec<Cell>>> {
    let trace = ideal_iterate(&TwoQubitState::basis(GG), op, n)?;
    Ok(trace
        .steps()
        .iter()
        .map(|s| {
            let mut r = vec![Cell::from(s.step), dtau.into()];
            r.extend(metric_cells(&s.metrics));
            r.push(Cell::text(STATUS_OK));
            r
        })
        .collect())
}

const SEQUENCE_COLUMNS: [&str; 15] = [
    "step",
    "outcome",
    "dtau",
    "S_L",
    "E_NPT",
    "fidelity",
    "step_probability",
    "cumulative_probability",
    "rho_gggg",
    "rho_gege",
    "rho_egeg",
    "rho_eeee",
    "re_rho_ggee",
    "im_rho_ggee",
    "status",
];

/// A prescribed list of outcomes from `|gg⟩`.
pub fn sequence(p: &Params, grid: &Grid, outcomes: &[OutcomeLabel]) -> Result<Table> {
    if outcomes.is_empty() {
        return Err(Error::Domain {
            name: "sequence",
            detail: "must contain at least one outcome".into(),
        });
    }
    // surfaces domain errors before any sweep
    pss_state(p.s, p.tail_tol)?;
    let mut t = Table::new(&SEQUENCE_COLUMNS);
    t.extend(par_rows(grid, |dtau| {
        let start = TrappedState::ground();
        let (trace, dead_at) = match outcome_sequence(&start, outcomes, p.s, dtau, p.eta) {
            Ok(trace) => (trace, None),
            Err(e) => match is_dead(&e) {
                Some(1) => (qguide::ProtocolTrace::new(Vec::new()), Some(1)),
                Some(step) => (
                    outcome_sequence(&start, &outcomes[..step - 1], p.s, dtau, p.eta)?,
                    Some(step),
                ),
                None => return Err(e),
            },
        };
        let mut rows: Vec<Vec<Cell>> = trace
            .steps()
            .iter()
            .map(|s| {
                let m = s.state.matrix();
                let mut r = vec![
                    Cell::from(s.step),
                    Cell::text(s.outcome.map(|o| o.code().to_string()).unwrap_or_default()),
                    dtau.into(),
                ];
                r.extend(metric_cells(&s.metrics));
                r.extend([
                    s.success_probability.into(),
                    s.cumulative_probability.into(),
                    m[(GG, GG)].re.into(),
                    m[(GE, GE)].re.into(),
                    m[(EG, EG)].re.into(),
                    m[(EE, EE)].re.into(),
                    m[(GG, EE)].re.into(),
                    m[(GG, EE)].im.into(),
                    Cell::text(STATUS_OK),
                ]);
                r
            })
            .collect();
        if let Some(step) = dead_at {
            for (k, o) in outcomes.iter().enumerate().skip(step - 1) {
                let mut r = vec![
                    Cell::from(k + 1),
                    Cell::text(o.code().to_string()),
                    dtau.into(),
                ];
                r.extend(missing(SEQUENCE_COLUMNS.len() - 4));
                r.push(Cell::text(STATUS_DEAD));
                rows.push(r);
            }
        }
        Ok(rows)
    })?);
    Ok(t)
}

const FIXED_POINT_COLUMNS: [&str; 12] = [
    "dtau",
    "method",
    "iterations",
    "a",
    "b",
    "f",
    "g",
    "S_L",
    "E_NPT",
    "fidelity",
    "physical",
    "status",
];

/// Iterated and closed-form asymptotic states.
pub fn fixed_point(p: &Params, grid: &Grid) -> Result<Table> {
    let mut t = Table::new(&FIXED_POINT_COLUMNS);
    t.extend(par_rows(grid, |dtau| {
        let table = step_coefficients(p.s, dtau, p.eta, p.tail_tol)?;
        let flagged = |method: &str, status: &str| {
            let mut r = vec![dtau.into(), Cell::text(method)];
            r.extend(missing(FIXED_POINT_COLUMNS.len() - 3));
            r.push(Cell::text(status));
            r
        };
        let mut rows = Vec::with_capacity(2);
        match fixed_point_with_table(&TrappedState::ground(), &table) {
            Ok(fp) => {
                let st = fp.iterated;
                let mut r = vec![
                    dtau.into(),
                    Cell::text("iterated"),
                    Cell::from(fp.iterations),
                ];
                r.extend(st.coords().map(Cell::from));
                r.extend(metric_cells(&st.metrics()?));
                r.extend([true.into(), Cell::text(STATUS_OK)]);
                rows.push(r);
                rows.push(match fp.closed_form {
                    Some(cf) => {
                        let mut r = vec![dtau.into(), Cell::text("closed_form"), Cell::Missing];
                        r.extend(cf.coords().map(Cell::from));
                        r.extend(metric_cells(&cf.metrics()));
                        r.extend([cf.is_physical().into(), Cell::text(STATUS_OK)]);
                        r
                    }
                    None => flagged("closed_form", "undefined"),
                });
            }
            Err(Error::DeadBranch { .. }) => {
                rows.push(flagged("iterated", STATUS_DEAD));
                rows.push(flagged("closed_form", STATUS_DEAD));
            }
            Err(Error::NoConvergence { .. }) => {
                rows.push(flagged("iterated", STATUS_NO_CONVERGENCE));
                rows.push(flagged("closed_form", STATUS_NO_CONVERGENCE));
            }
            Err(e) => return Err(e),
        }
        Ok(rows)
    })?);
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncillaChoice {
    PhotonSubtracted,
    SqueezedVacuum,
}

/// Photon-number distribution of one mode.
pub fn ancilla(p: &Params, kind: AncillaChoice) -> Result<Table> {
    let state = match kind {
        AncillaChoice::PhotonSubtracted => pss_state(p.s, p.tail_tol)?,
        AncillaChoice::SqueezedVacuum => tmsv_state(p.s, p.tail_tol)?,
    };
    let mut t = Table::new(&["l", "probability"]);
    for (l, q) in photon_distribution(&state).into_iter().enumerate() {
        t.push(vec![l.into(), q.into()]);
    }
    Ok(t)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            detail: "need at least one iteration".into(),
        });
    }
    Ok(())
}
