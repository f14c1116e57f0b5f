//! Quantized Kirchhoff-Heisenberg dynamics on truncated Fock spaces.
//!
//! Each degree of freedom gets a bosonic mode truncated to `n_k` levels.
//! At `t0` the charge and flux operators are
//!
//! ```text
//! q̂_k = Q_k0 (a − a†)/i,    φ̂_k = Φ_k0 (a + a†)
//! ```
//!
//! embedded into the tensor-product space, and they then evolve under the
//! same real coefficient matrix as the classical equations. The state stays
//! fixed (Heisenberg picture); expectation values are taken against it.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::eom::{rk4_step, step_count, EomError, FirstOrderSystem, OdeState};
use crate::linalg::{commutator, expm, hermitian_function, hermiticity_defect, to_complex, CMatrix, RMatrix};
use crate::topology::{effective_params, linearized_params, CircuitModel, TopologyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("Fock dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("expected {expected} per-DOF entries, got {got}")]
    DofCount { expected: usize, got: usize },
    #[error("operator is {got}×{got}, slot {slot} expects {expected}×{expected}")]
    DimensionMismatch { slot: usize, expected: usize, got: usize },
    #[error("slot {0} is out of range")]
    SlotOutOfRange(usize),
    #[error("DOF {0}: both amplitudes are zero")]
    ZeroAmplitude(usize),
    #[error("matrix is not Hermitian (relative defect {0:e})")]
    NonHermitian(f64),
    #[error("expectation of operator {index} has imaginary residue {residue:e}")]
    ImaginaryResidue { index: usize, residue: f64 },
    #[error("the linear propagator cannot integrate junction terms")]
    MethodMismatch,
    #[error("non-finite operator entries at step {step} (t = {time:e} s)")]
    NonFinite { step: usize, time: f64 },
    #[error("impedance must be positive, got {0}")]
    NonPositiveImpedance(f64),
    #[error("circuit has no auxiliary degree of freedom")]
    NoAuxiliary,
    #[error("sample interval must be at least one step")]
    BadSampling,
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Eom(#[from] EomError),
}

impl QuantumError {
    pub fn is_numerical(&self) -> bool {
        match self {
            QuantumError::NonFinite { .. } | QuantumError::ImaginaryResidue { .. } | QuantumError::NonHermitian(_) => true,
            QuantumError::Eom(e) => e.is_numerical(),
            _ => false,
        }
    }
}

/// SI constants. `h` and `e` are exact by definition; `ħ = h/2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub h: f64,
    pub e_charge: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        let h = 6.626_070_15e-34;
        PhysicalConstants {
            hbar: h / std::f64::consts::TAU,
            h,
            e_charge: 1.602_176_634e-19,
        }
    }
}

impl PhysicalConstants {
    /// `Φ₀ = h/2e`.
    pub fn flux_quantum(&self) -> f64 {
        self.h / (2.0 * self.e_charge)
    }

    /// `k_J = 2π/Φ₀`.
    pub fn josephson_constant(&self) -> f64 {
        std::f64::consts::TAU / self.flux_quantum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpec {
    dims: Vec<usize>,
}

impl FockSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self, QuantumError> {
        if dims.is_empty() {
            return Err(QuantumError::DofCount { expected: 1, got: 0 });
        }
        if let Some(&n) = dims.iter().find(|&&n| n < 2) {
            return Err(QuantumError::DimensionTooSmall(n));
        }
        Ok(FockSpec { dims })
    }

    pub fn uniform(n_dof: usize, n: usize) -> Result<Self, QuantumError> {
        FockSpec::new(vec![n; n_dof])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension `Π n_k`.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Truncated annihilation operator with `a[i, i+1] = √(i+1)` (zero-based).
pub fn annihilation(n: usize) -> Result<CMatrix, QuantumError> {
    if n < 2 {
        return Err(QuantumError::DimensionTooSmall(n));
    }
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = Complex64::new(((i + 1) as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` in slot `k` (DOF order).
pub fn embed_operator(op: &CMatrix, k: usize, fock: &FockSpec) -> Result<CMatrix, QuantumError> {
    let dims = fock.dims();
    if k >= dims.len() {
        return Err(QuantumError::SlotOutOfRange(k));
    }
    if op.nrows() != dims[k] || op.ncols() != dims[k] {
        return Err(QuantumError::DimensionMismatch {
            slot: k,
            expected: dims[k],
            got: op.nrows(),
        });
    }
    let left: usize = dims[..k].iter().product();
    let right: usize = dims[k + 1..].iter().product();
    let out = CMatrix::identity(left, left).kronecker(op);
    Ok(out.kronecker(&CMatrix::identity(right, right)))
}

/// Zero-point scales of one DOF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    /// `Q_k0 = √(ħ / 2Z)` (C).
    pub charge: f64,
    /// `Φ_k0 = Z Q_k0` (Wb).
    pub flux: f64,
    /// Characteristic impedance used (Ω).
    pub impedance: f64,
}

impl Scales {
    pub fn from_impedance(impedance: f64, constants: &PhysicalConstants) -> Result<Self, QuantumError> {
        if !(impedance.is_finite() && impedance > 0.0) {
            return Err(QuantumError::NonPositiveImpedance(impedance));
        }
        let charge = (constants.hbar / (2.0 * impedance)).sqrt();
        Ok(Scales {
            charge,
            flux: impedance * charge,
            impedance,
        })
    }
}

/// Zero-point charge and flux of DOF `k`. Junction DOFs use the linearized
/// impedance `√(L_J/C)` in place of `Z̃_k`.
pub fn zero_point_scales(model: &CircuitModel, constants: &PhysicalConstants, k: usize) -> Result<Scales, QuantumError> {
    zero_point_scales_at(model, constants, k, constants.josephson_constant())
}

/// [`zero_point_scales`] with an explicit Josephson constant.
pub fn zero_point_scales_at(model: &CircuitModel, constants: &PhysicalConstants, k: usize, k_j: f64) -> Result<Scales, QuantumError> {
    let params = if model.junctions.iter().any(|j| j.dof == k) {
        linearized_params(model, k, Some(k_j))?
    } else {
        effective_params(model, k)?
    };
    Scales::from_impedance(params.impedance, constants)
}

/// Per-DOF amplitudes `(α_k, β_k)` of `α|0⟩ + β|1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialStateSpec {
    pub amplitudes: Vec<(Complex64, Complex64)>,
}

impl InitialStateSpec {
    pub fn vacuum(n_dof: usize) -> Self {
        InitialStateSpec {
            amplitudes: vec![(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)); n_dof],
        }
    }

    pub fn with(mut self, dof: usize, alpha: f64, beta: f64) -> Self {
        self.amplitudes[dof] = (Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0));
        self
    }
}

/// Product of normalized two-level superpositions; higher levels start empty.
pub fn build_initial_state(spec: &InitialStateSpec, fock: &FockSpec) -> Result<DVector<Complex64>, QuantumError> {
    let dims = fock.dims();
    if spec.amplitudes.len() != dims.len() {
        return Err(QuantumError::DofCount {
            expected: dims.len(),
            got: spec.amplitudes.len(),
        });
    }
    let mut state = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for (k, (&(alpha, beta), &n)) in spec.amplitudes.iter().zip(dims).enumerate() {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(QuantumError::ZeroAmplitude(k + 1));
        }
        let mut local = CMatrix::zeros(n, 1);
        local[0] = alpha / norm;
        local[1] = beta / norm;
        state = state.kronecker(&local);
    }
    Ok(DVector::from_column_slice(state.as_slice()))
}

fn checked_hermitian(m: &CMatrix) -> Result<(), QuantumError> {
    let defect = hermiticity_defect(m);
    if defect > 1e-10 {
        return Err(QuantumError::NonHermitian(defect));
    }
    Ok(())
}

/// `sin(k_J φ̂)` through the Hermitian eigendecomposition.
pub fn matrix_sine(phi: &CMatrix, k_j: f64) -> Result<CMatrix, QuantumError> {
    checked_hermitian(phi)?;
    Ok(hermitian_function(phi, |x| (k_j * x).sin()))
}

/// `cos(k_J φ̂)`, used for the junction energy.
pub fn matrix_cosine(phi: &CMatrix, k_j: f64) -> Result<CMatrix, QuantumError> {
    checked_hermitian(phi)?;
    Ok(hermitian_function(phi, |x| (k_j * x).cos()))
}

/// Time derivative of every operator: `Ẋ_i = Σ_j M_ij X_j`, plus
/// `−I_c0 sin(k_J φ̂_k)` on the charge of each junction DOF.
///
/// `ops` holds `q̂_1..q̂_N` followed by `φ̂_1..φ̂_N`.
pub fn quantum_rhs(sys: &FirstOrderSystem, ops: &[CMatrix]) -> Result<Vec<CMatrix>, QuantumError> {
    let n = 2 * sys.n_dof;
    if ops.len() != n {
        return Err(QuantumError::DofCount { expected: n, got: ops.len() });
    }
    let d = ops[0].nrows();
    if let Some((i, op)) = ops.iter().enumerate().find(|(_, op)| op.nrows() != d || op.ncols() != d) {
        return Err(QuantumError::DimensionMismatch {
            slot: i,
            expected: d,
            got: op.nrows(),
        });
    }
    let mut out = vec![CMatrix::zeros(d, d); n];
    for (i, dst) in out.iter_mut().enumerate() {
        for (j, src) in ops.iter().enumerate() {
            let c = sys.m[(i, j)];
            if c != 0.0 {
                dst.zip_apply(src, |a, b| *a += b * c);
            }
        }
    }
    for j in &sys.junction_terms {
        let s = matrix_sine(&ops[sys.n_dof + j.dof], j.k_j)?;
        out[j.dof] -= s * Complex64::new(j.critical_current, 0.0);
    }
    Ok(out)
}

/// Operators stacked row-wise: row `i` is the column-major flattening of `X_i`.
#[derive(Debug, Clone, PartialEq)]
struct OperatorStack {
    rows: CMatrix,
    dim: usize,
}

impl OperatorStack {
    fn from_operators(ops: &[CMatrix]) -> Self {
        let dim = ops[0].nrows();
        let mut rows = CMatrix::zeros(ops.len(), dim * dim);
        for (i, op) in ops.iter().enumerate() {
            for (j, v) in op.iter().enumerate() {
                rows[(i, j)] = *v;
            }
        }
        OperatorStack { rows, dim }
    }

    fn operator(&self, i: usize) -> CMatrix {
        CMatrix::from_iterator(self.dim, self.dim, self.rows.row(i).iter().copied())
    }

    fn operators(&self) -> Vec<CMatrix> {
        (0..self.rows.nrows()).map(|i| self.operator(i)).collect()
    }
}

impl OdeState for OperatorStack {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.rows.axpy(a, &x.rows);
    }

    fn all_finite(&self) -> bool {
        self.rows.all_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumWorkspace {
    pub fock: FockSpec,
    /// Operators at `t0`: `q̂_1..q̂_N, φ̂_1..φ̂_N`.
    pub ops: Vec<CMatrix>,
    pub state: DVector<Complex64>,
    pub scales: Vec<Scales>,
}

impl QuantumWorkspace {
    pub fn new(
        model: &CircuitModel,
        constants: &PhysicalConstants,
        fock: FockSpec,
        initial: &InitialStateSpec,
    ) -> Result<Self, QuantumError> {
        let scales = (0..model.n_dof)
            .map(|k| zero_point_scales(model, constants, k))
            .collect::<Result<Vec<_>, _>>()?;
        QuantumWorkspace::with_scales(scales, fock, initial)
    }

    /// Builds the `t0` operators from precomputed zero-point scales.
    pub fn with_scales(scales: Vec<Scales>, fock: FockSpec, initial: &InitialStateSpec) -> Result<Self, QuantumError> {
        let n = scales.len();
        if fock.dims().len() != n {
            return Err(QuantumError::DofCount {
                expected: n,
                got: fock.dims().len(),
            });
        }
        let mut charges = Vec::with_capacity(n);
        let mut fluxes = Vec::with_capacity(n);
        let minus_i = Complex64::new(0.0, -1.0);
        for (k, s) in scales.iter().enumerate() {
            let a = annihilation(fock.dims()[k])?;
            let ad = a.adjoint();
            let q = (&a - &ad) * minus_i * Complex64::new(s.charge, 0.0);
            let phi = (&a + &ad) * Complex64::new(s.flux, 0.0);
            charges.push(embed_operator(&q, k, &fock)?);
            fluxes.push(embed_operator(&phi, k, &fock)?);
        }
        charges.extend(fluxes);
        let state = build_initial_state(initial, &fock)?;
        Ok(QuantumWorkspace {
            fock,
            ops: charges,
            state,
            scales,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.scales.len()
    }

    /// Scale that normalizes operator `i` of the stacked ordering.
    fn scale(&self, i: usize) -> f64 {
        let n = self.n_dof();
        if i < n {
            self.scales[i].charge
        } else {
            self.scales[i - n].flux
        }
    }

    /// `⟨ψ|X_i|ψ⟩` in SI units, after checking the imaginary residue.
    pub fn expectations(&self, ops: &[CMatrix]) -> Result<Vec<f64>, QuantumError> {
        ops.iter()
            .enumerate()
            .map(|(i, op)| {
                let v = self.state.dotc(&(op * &self.state));
                let residue = v.im.abs() / self.scale(i);
                if residue > 1e-9 {
                    return Err(QuantumError::ImaginaryResidue { index: i, residue });
                }
                Ok(v.re)
            })
            .collect()
    }

    /// Second moments `⟨X_i X_j⟩`.
    fn second_moments(&self, ops: &[CMatrix]) -> CMatrix {
        let vs: Vec<DVector<Complex64>> = ops.iter().map(|op| op * &self.state).collect();
        // X_i Hermitian: ⟨X_i X_j⟩ = (X_i ψ)† (X_j ψ)
        CMatrix::from_fn(ops.len(), ops.len(), |i, j| vs[i].dotc(&vs[j]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// RK4 on the full stacked operator matrices.
    Rk4Full,
    /// Exact propagation of the `2N × 2N` coefficient matrix (linear circuits only).
    LinearPropagator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Record every `sample_every`-th step.
    pub sample_every: usize,
    /// Record commutator and Hermiticity diagnostics.
    pub diagnostics: bool,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            sample_every: 1,
            diagnostics: true,
        }
    }
}

/// Sampled expectation traces, normalized by the zero-point scales.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// `⟨q̂_k⟩/Q_k0`, one trace per DOF.
    pub charge: Vec<Vec<f64>>,
    /// `⟨φ̂_k⟩/Φ_k0`, one trace per DOF.
    pub flux: Vec<Vec<f64>>,
    /// `⟨Ĥ⟩` (J).
    pub energy: Vec<f64>,
    /// `⟨D̂⟩` (W); the dissipated power is twice this.
    pub dissipation: Vec<f64>,
    /// `max_k ‖[φ̂_k, q̂_k](t) − [φ̂_k, q̂_k](t0)‖ / ‖[φ̂_k, q̂_k](t0)‖`; empty if not recorded.
    pub commutator_deviation: Vec<f64>,
    /// `max_i ‖X_i − X_i†‖ / ‖X_i‖`; empty if not recorded.
    pub hermiticity_defect: Vec<f64>,
    pub scales: Vec<Scales>,
}

impl TimeSeries {
    pub fn with_dofs(scales: Vec<Scales>) -> Self {
        let n = scales.len();
        TimeSeries {
            charge: vec![Vec::new(); n],
            flux: vec![Vec::new(); n],
            scales,
            ..Default::default()
        }
    }

    pub fn n_dof(&self) -> usize {
        self.charge.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends one sample of SI expectations `⟨q̂_1..q̂_N, φ̂_1..φ̂_N⟩`.
    pub fn push(&mut self, t: f64, expectations: &[f64], energy: f64, dissipation: f64) {
        let n = self.n_dof();
        self.times.push(t);
        for k in 0..n {
            self.charge[k].push(expectations[k] / self.scales[k].charge);
            self.flux[k].push(expectations[n + k] / self.scales[k].flux);
        }
        self.energy.push(energy);
        self.dissipation.push(dissipation);
    }

    /// SI expectation of stacked operator `i` at sample `s`.
    pub fn raw(&self, i: usize, s: usize) -> f64 {
        let n = self.n_dof();
        if i < n {
            self.charge[i][s] * self.scales[i].charge
        } else {
            self.flux[i - n][s] * self.scales[i - n].flux
        }
    }
}

fn energy_from_moments(sys: &FirstOrderSystem, moments: &CMatrix) -> (f64, f64) {
    let n = sys.n_dof;
    let quadratic = |w: &RMatrix, offset: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += w[(i, j)] * moments[(offset + i, offset + j)].re;
            }
        }
        0.5 * acc
    };
    let energy = quadratic(&sys.cinv, 0) + quadratic(&sys.linv, n);
    let loss = &sys.cinv * &sys.rinv * &sys.cinv;
    (energy, quadratic(&loss, 0))
}

struct Recorder<'a> {
    ws: &'a QuantumWorkspace,
    sys: &'a FirstOrderSystem,
    diagnostics: bool,
    initial_commutators: Vec<CMatrix>,
    series: TimeSeries,
}

impl<'a> Recorder<'a> {
    fn new(ws: &'a QuantumWorkspace, sys: &'a FirstOrderSystem, diagnostics: bool) -> Self {
        let n = ws.n_dof();
        let initial_commutators = (0..n).map(|k| commutator(&ws.ops[n + k], &ws.ops[k])).collect();
        Recorder {
            ws,
            sys,
            diagnostics,
            initial_commutators,
            series: TimeSeries::with_dofs(ws.scales.clone()),
        }
    }

    fn junction_energy(&self, ops: &[CMatrix]) -> Result<f64, QuantumError> {
        let n = self.sys.n_dof;
        let mut e = 0.0;
        for j in &self.sys.junction_terms {
            let cos = matrix_cosine(&ops[n + j.dof], j.k_j)?;
            let c = self.ws.state.dotc(&(cos * &self.ws.state)).re;
            e += j.energy_scale() * (1.0 - c);
        }
        Ok(e)
    }

    fn record_operators(&mut self, t: f64, ops: &[CMatrix]) -> Result<(), QuantumError> {
        let exp = self.ws.expectations(ops)?;
        let (energy, dissipation) = energy_from_moments(self.sys, &self.ws.second_moments(ops));
        let energy = energy + self.junction_energy(ops)?;
        self.series.push(t, &exp, energy, dissipation);
        if self.diagnostics {
            self.record_diagnostics(ops);
        }
        Ok(())
    }

    fn record_diagnostics(&mut self, ops: &[CMatrix]) {
        let n = self.ws.n_dof();
        let deviation = (0..n)
            .map(|k| {
                let c0 = &self.initial_commutators[k];
                (commutator(&ops[n + k], &ops[k]) - c0).norm() / c0.norm()
            })
            .fold(0.0, f64::max);
        let herm = ops.iter().map(hermiticity_defect).fold(0.0, f64::max);
        self.series.commutator_deviation.push(deviation);
        self.series.hermiticity_defect.push(herm);
    }
}

/// Integrates the operator equations from `t0 = 0` to `t_end` with fixed step `dt`.
pub fn integrate_quantum(
    ws: &QuantumWorkspace,
    sys: &FirstOrderSystem,
    dt: f64,
    t_end: f64,
    method: Method,
    options: IntegrationOptions,
) -> Result<TimeSeries, QuantumError> {
    let steps = step_count(dt, t_end)?;
    if options.sample_every == 0 {
        return Err(QuantumError::BadSampling);
    }
    if sys.n_dof != ws.n_dof() {
        return Err(QuantumError::DofCount {
            expected: sys.n_dof,
            got: ws.n_dof(),
        });
    }
    match method {
        Method::Rk4Full => integrate_rk4(ws, sys, dt, steps, options),
        Method::LinearPropagator => integrate_propagator(ws, sys, dt, steps, options),
    }
}

fn integrate_rk4(
    ws: &QuantumWorkspace,
    sys: &FirstOrderSystem,
    dt: f64,
    steps: usize,
    options: IntegrationOptions,
) -> Result<TimeSeries, QuantumError> {
    let mut recorder = Recorder::new(ws, sys, options.diagnostics);
    let coefficients = to_complex(&sys.m);
    let rhs = |x: &OperatorStack| -> OperatorStack {
        let mut rows = &coefficients * &x.rows;
        for j in &sys.junction_terms {
            let phi = x.operator(sys.n_dof + j.dof);
            // Hermiticity was checked at t0 and every recorded sample
            let s = hermitian_function(&phi, |v| (j.k_j * v).sin());
            for (col, v) in s.iter().enumerate() {
                rows[(j.dof, col)] -= v * j.critical_current;
            }
        }
        OperatorStack { rows, dim: x.dim }
    };

    let mut x = OperatorStack::from_operators(&ws.ops);
    recorder.record_operators(0.0, &ws.ops)?;
    for step in 1..=steps {
        x = rk4_step(rhs, &x, dt);
        let t = step as f64 * dt;
        if !x.all_finite() {
            return Err(QuantumError::NonFinite { step, time: t });
        }
        if step % options.sample_every == 0 {
            let ops = x.operators();
            if !sys.junction_terms.is_empty() {
                for j in &sys.junction_terms {
                    checked_hermitian(&ops[sys.n_dof + j.dof])?;
                }
            }
            recorder.record_operators(t, &ops)?;
        }
    }
    Ok(recorder.series)
}

fn integrate_propagator(
    ws: &QuantumWorkspace,
    sys: &FirstOrderSystem,
    dt: f64,
    steps: usize,
    options: IntegrationOptions,
) -> Result<TimeSeries, QuantumError> {
    if !sys.is_linear() {
        return Err(QuantumError::MethodMismatch);
    }
    let step = expm(&(&sys.m * dt));
    let x0 = DVector::from_vec(ws.expectations(&ws.ops)?);
    let moments0 = ws.second_moments(&ws.ops);
    let mut recorder = Recorder::new(ws, sys, options.diagnostics);
    let mut propagator = RMatrix::identity(2 * sys.n_dof, 2 * sys.n_dof);

    let record = |recorder: &mut Recorder, p: &RMatrix, t: f64| {
        let exp = p * &x0;
        let pc = to_complex(p);
        let moments = &pc * &moments0 * pc.transpose();
        let (energy, dissipation) = energy_from_moments(sys, &moments);
        recorder.series.push(t, exp.as_slice(), energy, dissipation);
        if recorder.diagnostics {
            let ops: Vec<CMatrix> = (0..p.nrows())
                .map(|i| {
                    let mut acc = CMatrix::zeros(ws.fock.total(), ws.fock.total());
                    for (j, op) in ws.ops.iter().enumerate() {
                        acc += op * Complex64::new(p[(i, j)], 0.0);
                    }
                    acc
                })
                .collect();
            recorder.record_diagnostics(&ops);
        }
    };

    record(&mut recorder, &propagator, 0.0);
    for n in 1..=steps {
        propagator = &step * &propagator;
        let t = n as f64 * dt;
        if !propagator.iter().all(|v| v.is_finite()) {
            return Err(QuantumError::NonFinite { step: n, time: t });
        }
        if n % options.sample_every == 0 {
            record(&mut recorder, &propagator, t);
        }
    }
    Ok(recorder.series)
}

/// Builds a [`TimeSeries`] from a recorded operator history `(t, ops)`.
pub fn expectation_traces(
    ws: &QuantumWorkspace,
    sys: &FirstOrderSystem,
    history: &[(f64, Vec<CMatrix>)],
) -> Result<TimeSeries, QuantumError> {
    let mut recorder = Recorder::new(ws, sys, true);
    for (t, ops) in history {
        recorder.record_operators(*t, ops)?;
    }
    Ok(recorder.series)
}

/// Current through the auxiliary capacitor, normalized by `I_0 = √(ħω/2L)`
/// of the auxiliary resonator.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryCurrent {
    /// Zero-based auxiliary DOF.
    pub dof: usize,
    /// Zero-point current `I_0` (A).
    pub scale: f64,
    /// From the charge equation of the auxiliary DOF (KCL at its node).
    pub kcl: Vec<f64>,
    /// Central differences of `⟨q̂⟩`; one-sided at the ends.
    pub finite_difference: Vec<f64>,
}

pub fn auxiliary_current_trace(
    model: &CircuitModel,
    sys: &FirstOrderSystem,
    constants: &PhysicalConstants,
    series: &TimeSeries,
) -> Result<AuxiliaryCurrent, QuantumError> {
    let &dof = model.auxiliary_nodes.first().ok_or(QuantumError::NoAuxiliary)?;
    let params = effective_params(model, dof)?;
    let scale = (constants.hbar * params.angular_frequency() / (2.0 * params.inductance)).sqrt();
    let n_ops = 2 * sys.n_dof;
    let samples = series.len();
    let kcl = (0..samples)
        .map(|s| (0..n_ops).map(|j| sys.m[(dof, j)] * series.raw(j, s)).sum::<f64>() / scale)
        .collect();
    let q = |s: usize| series.raw(dof, s);
    let t = &series.times;
    let finite_difference = (0..samples)
        .map(|s| {
            let (a, b) = match s {
                0 => (0, 1.min(samples - 1)),
                s if s + 1 == samples => (s - 1, s),
                s => (s - 1, s + 1),
            };
            if a == b {
                0.0
            } else {
                (q(b) - q(a)) / (t[b] - t[a]) / scale
            }
        })
        .collect();
    Ok(AuxiliaryCurrent {
        dof,
        scale,
        kcl,
        finite_difference,
    })
}

/// Largest normalized-trace difference between runs at the given Fock
/// truncations and at a uniform truncation `n + 1`.
pub fn truncation_sensitivity(
    model: &CircuitModel,
    sys: &FirstOrderSystem,
    constants: &PhysicalConstants,
    dims: &[usize],
    initial: &InitialStateSpec,
    dt: f64,
    t_end: f64,
) -> Result<f64, QuantumError> {
    let run = |dims: Vec<usize>| -> Result<TimeSeries, QuantumError> {
        let ws = QuantumWorkspace::new(model, constants, FockSpec::new(dims)?, initial)?;
        let options = IntegrationOptions {
            sample_every: 1,
            diagnostics: false,
        };
        integrate_quantum(&ws, sys, dt, t_end, Method::Rk4Full, options)
    };
    let base = run(dims.to_vec())?;
    let bigger = run(dims.iter().map(|n| n + 1).collect())?;
    let mut worst = 0.0f64;
    for k in 0..base.n_dof() {
        for (a, b) in base.charge[k].iter().zip(&bigger.charge[k]) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in base.flux[k].iter().zip(&bigger.flux[k]) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}
