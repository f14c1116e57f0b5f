//! First-order Kirchhoff-Heisenberg equations and their classical solution.
//!
//! With state `x = (q₁..q_N, φ₁..φ_N)` the circuit obeys `ẋ = M x + g(x)`
//! where
//!
//! ```text
//! M = [ −R⁻¹C⁻¹   −L⁻¹ ]
//!     [   C⁻¹       0  ]
//! ```
//!
//! and each junction adds `−I_c0 sin(k_J φ_k)` to `q̇_k`. The flux rows carry
//! no dissipative term: resistors only ever act on the charge equations,
//! through the node voltages `φ̇ = C⁻¹ q`.

use nalgebra::{DVector, DMatrix};
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::RMatrix;
use crate::topology::{capacitance_inverse, linearized_params, CircuitModel, TopologyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EomError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("end time must be non-negative and finite, got {0}")]
    BadEndTime(f64),
    #[error("non-finite state at step {step} (t = {time:e} s)")]
    NonFinite { step: usize, time: f64 },
    #[error("system has junction terms; linearize before computing eigenfrequencies")]
    Nonlinear,
    #[error("state has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("no degree of freedom has a natural period")]
    NoNaturalPeriod,
}

impl EomError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, EomError::NonFinite { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionTerm {
    pub dof: usize,
    pub critical_current: f64,
    /// Josephson constant `2π/Φ₀` (1/Wb).
    pub k_j: f64,
}

impl JunctionTerm {
    /// Josephson energy `E_J0 = I_c0 / k_J`.
    pub fn energy_scale(&self) -> f64 {
        self.critical_current / self.k_j
    }

    /// Small-signal inductance `1/(I_c0 k_J)`.
    pub fn inductance(&self) -> f64 {
        1.0 / (self.critical_current * self.k_j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderSystem {
    pub n_dof: usize,
    /// `2N × 2N` linear part.
    pub m: RMatrix,
    pub cinv: RMatrix,
    pub linv: RMatrix,
    pub rinv: RMatrix,
    pub junction_terms: Vec<JunctionTerm>,
}

impl FirstOrderSystem {
    pub fn is_linear(&self) -> bool {
        self.junction_terms.is_empty()
    }

    /// Replaces every junction by its small-signal inductance.
    pub fn linearized(&self) -> FirstOrderSystem {
        let n = self.n_dof;
        let mut out = self.clone();
        for j in &self.junction_terms {
            let g = 1.0 / j.inductance();
            out.linv[(j.dof, j.dof)] += g;
            out.m[(j.dof, n + j.dof)] -= g;
        }
        out.junction_terms.clear();
        out
    }

    /// `ẋ = M x + g(x)`.
    pub fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut dx = &self.m * x;
        for j in &self.junction_terms {
            dx[j.dof] -= j.critical_current * (j.k_j * x[self.n_dof + j.dof]).sin();
        }
        dx
    }

    /// Stored energy: `½ qᵀC⁻¹q + ½ φᵀL⁻¹φ + Σ E_J0 (1 − cos k_J φ_k)`.
    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let n = self.n_dof;
        let q = x.rows(0, n);
        let phi = x.rows(n, n);
        let mut e = 0.5 * q.dot(&(&self.cinv * q)) + 0.5 * phi.dot(&(&self.linv * phi));
        for j in &self.junction_terms {
            e += j.energy_scale() * (1.0 - (j.k_j * phi[j.dof]).cos());
        }
        e
    }

    /// Rayleigh dissipation `½ φ̇ᵀ R⁻¹ φ̇` with `φ̇ = C⁻¹ q`; the power lost is `2D`.
    pub fn dissipation(&self, x: &DVector<f64>) -> f64 {
        let n = self.n_dof;
        let v = &self.cinv * x.rows(0, n);
        0.5 * v.dot(&(&self.rinv * &v))
    }
}

/// Assembles `M` from the circuit matrices; junction terms stay symbolic.
pub fn build_system(model: &CircuitModel, k_j: f64) -> Result<FirstOrderSystem, EomError> {
    let n = model.n_dof;
    let cinv = capacitance_inverse(model)?;
    let mut m = RMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-(&model.rinv * &cinv)));
    m.view_mut((0, n), (n, n)).copy_from(&(-&model.linv));
    m.view_mut((n, 0), (n, n)).copy_from(&cinv);
    let junction_terms = model
        .junctions
        .iter()
        .map(|j| JunctionTerm {
            dof: j.dof,
            critical_current: j.critical_current,
            k_j,
        })
        .collect();
    Ok(FirstOrderSystem {
        n_dof: n,
        m,
        cinv,
        linv: model.linv.clone(),
        rinv: model.rinv.clone(),
        junction_terms,
    })
}

/// Warnings for nodes where a junction and a linear inductor coexist.
pub fn coexistence_warnings(model: &CircuitModel) -> Vec<String> {
    model
        .junctions
        .iter()
        .filter(|j| {
            // the diagonal of linv is positive iff an inductor touches the node
            model.linv[(j.dof, j.dof)] > 0.0
        })
        .map(|j| {
            format!(
                "junction {} shares node {} with a linear inductor; currents are summed",
                j.name,
                j.dof + 1
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalState {
    /// Node charges (C).
    pub q: DVector<f64>,
    /// Node fluxes (Wb).
    pub phi: DVector<f64>,
    /// Time (s).
    pub t: f64,
}

impl ClassicalState {
    pub fn new(q: Vec<f64>, phi: Vec<f64>) -> Self {
        ClassicalState {
            q: DVector::from_vec(q),
            phi: DVector::from_vec(phi),
            t: 0.0,
        }
    }

    pub fn zeros(n: usize) -> Self {
        ClassicalState {
            q: DVector::zeros(n),
            phi: DVector::zeros(n),
            t: 0.0,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.q.len();
        let mut x = DVector::zeros(2 * n);
        x.rows_mut(0, n).copy_from(&self.q);
        x.rows_mut(n, n).copy_from(&self.phi);
        x
    }

    pub fn from_vector(x: &DVector<f64>, t: f64) -> Self {
        let n = x.len() / 2;
        ClassicalState {
            q: x.rows(0, n).into_owned(),
            phi: x.rows(n, n).into_owned(),
            t,
        }
    }
}

pub fn classical_rhs(sys: &FirstOrderSystem, x: &ClassicalState) -> ClassicalState {
    let dx = sys.rhs(&x.to_vector());
    ClassicalState::from_vector(&dx, x.t)
}

/// Vector spaces the RK4 stepper can work in.
pub trait OdeState: Clone {
    /// `self += a · x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn all_finite(&self) -> bool;
}

impl OdeState for DVector<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_apply(x, |s, xi| *s += a * xi);
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for DMatrix<Complex64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_apply(x, |s, xi| *s += xi * a);
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<S: OdeState>(f: impl Fn(&S) -> S, x: &S, dt: f64) -> S {
    let k1 = f(x);
    let mut tmp = x.clone();
    tmp.axpy(0.5 * dt, &k1);
    let k2 = f(&tmp);
    tmp = x.clone();
    tmp.axpy(0.5 * dt, &k2);
    let k3 = f(&tmp);
    tmp = x.clone();
    tmp.axpy(dt, &k3);
    let k4 = f(&tmp);
    let mut out = x.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    out
}

/// Number of fixed steps of size `dt` that fit in `[0, t_end]`.
pub fn step_count(dt: f64, t_end: f64) -> Result<usize, EomError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EomError::BadTimeStep(dt));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(EomError::BadEndTime(t_end));
    }
    Ok((t_end / dt + 1e-9).floor() as usize)
}

/// Fixed-step RK4 trajectory including the initial state, one sample per step.
pub fn integrate_classical(
    sys: &FirstOrderSystem,
    x0: &ClassicalState,
    dt: f64,
    t_end: f64,
) -> Result<Vec<ClassicalState>, EomError> {
    let steps = step_count(dt, t_end)?;
    if x0.q.len() != sys.n_dof || x0.phi.len() != sys.n_dof {
        return Err(EomError::Dimension {
            expected: sys.n_dof,
            got: x0.q.len().min(x0.phi.len()),
        });
    }
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vector();
    out.push(ClassicalState::from_vector(&x, x0.t));
    for step in 1..=steps {
        x = rk4_step(|v| sys.rhs(v), &x, dt);
        let t = x0.t + step as f64 * dt;
        if !x.all_finite() {
            return Err(EomError::NonFinite { step, time: t });
        }
        out.push(ClassicalState::from_vector(&x, t));
    }
    Ok(out)
}

/// A conjugate pair (or a lone real eigenvalue) of the linear system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// `α = −Re s` (1/s).
    pub damping: f64,
    /// `|Im s|` (rad/s).
    pub angular_frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// All `2N` eigenvalues (rad/s), sorted by `|Im s|` then `Im s`.
    pub eigenvalues: Vec<Complex64>,
    pub modes: Vec<Mode>,
}

/// Complex eigenfrequencies of the linear part of the system.
pub fn eigenfrequencies(sys: &FirstOrderSystem) -> Result<EigenReport, EomError> {
    if !sys.is_linear() {
        return Err(EomError::Nonlinear);
    }
    let mut eigenvalues: Vec<Complex64> = sys.m.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        a.im.abs()
            .total_cmp(&b.im.abs())
            .then(a.im.total_cmp(&b.im))
            .then(a.re.total_cmp(&b.re))
    });
    let scale = eigenvalues.iter().map(|s| s.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let mut used = vec![false; eigenvalues.len()];
    let mut modes = Vec::new();
    for i in 0..eigenvalues.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let s = eigenvalues[i];
        if s.im.abs() > tol {
            let partner = (0..eigenvalues.len())
                .filter(|&j| !used[j])
                .min_by(|&a, &b| {
                    (eigenvalues[a] - s.conj())
                        .norm()
                        .total_cmp(&(eigenvalues[b] - s.conj()).norm())
                });
            if let Some(j) = partner {
                used[j] = true;
            }
        }
        modes.push(Mode {
            damping: -s.re,
            angular_frequency: s.im.abs(),
        });
    }
    Ok(EigenReport { eigenvalues, modes })
}

/// `(E, D)` for a classical state of the circuit described by `model`.
pub fn energy_and_dissipation(model: &CircuitModel, k_j: f64, x: &ClassicalState) -> Result<(f64, f64), EomError> {
    let sys = build_system(model, k_j)?;
    let v = x.to_vector();
    Ok((sys.energy(&v), sys.dissipation(&v)))
}

/// Linearized natural period `2π√(L̃_k C̃_k)` of every DOF that has one.
pub fn natural_periods(model: &CircuitModel, k_j: f64) -> Vec<(usize, f64)> {
    (0..model.n_dof)
        .filter_map(|k| linearized_params(model, k, Some(k_j)).ok().map(|p| (k, p.period())))
        .collect()
}

/// `T_min / 200` over the linearized natural periods.
pub fn default_time_step(model: &CircuitModel, k_j: f64) -> Result<f64, EomError> {
    natural_periods(model, k_j)
        .into_iter()
        .map(|(_, t)| t)
        .reduce(f64::min)
        .map(|t| t / 200.0)
        .ok_or(EomError::NoNaturalPeriod)
}
