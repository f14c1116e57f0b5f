//! Circuit matrices under KVL constraints.
//!
//! Every degree of freedom is a node flux/charge pair. Capacitors,
//! inductors and resistors are stamped into the capacitance, inverse
//! inductance and inverse resistance matrices the usual nodal way; junctions
//! are kept aside because their current is nonlinear in the flux.
//!
//! A node that no capacitor touches has no conjugate charge, so the
//! Hamiltonian is incomplete there. [`insert_auxiliary_capacitor`] closes the
//! gap with a small capacitor placed across the node's first inductor. When
//! that inductor ends on another node, the auxiliary degree of freedom is the
//! branch flux across the capacitor rather than the node flux; the matrices
//! are then expressed in those branch coordinates (a congruence `Tᵀ X T`).

use nalgebra::Cholesky;
use thiserror::Error;

use crate::linalg::RMatrix;
use crate::netlist::{CircuitSpec, ElementDecl, ElementKind, AUX_PREFIX};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("junction `{0}` must connect a node to ground")]
    JunctionNotGrounded(String),
    #[error("junction `{0}` sits on an auxiliary branch coordinate")]
    JunctionOnAuxiliary(String),
    #[error("element `{0}` has a zero value")]
    ZeroValue(String),
    #[error("node {0} is not singular; no auxiliary capacitor needed")]
    NotSingular(usize),
    #[error("node {0} does not exist")]
    NoSuchNode(usize),
    #[error("auxiliary capacitance must be positive, got {0}")]
    BadAuxiliaryValue(f64),
    #[error("auxiliary capacitors form a cycle through node {0}")]
    AuxiliaryCycle(usize),
    #[error("capacitance matrix is singular at nodes {0:?}; insert auxiliary capacitors")]
    Pathological(Vec<usize>),
    #[error("capacitance matrix is rank deficient without a zero row; unsupported topology")]
    RankDeficient,
    #[error("degree of freedom {0} has no {1}")]
    MissingDiagonal(usize, &'static str),
    #[error(transparent)]
    Netlist(#[from] crate::netlist::NetlistError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub name: String,
    /// Zero-based degree-of-freedom index.
    pub dof: usize,
    pub critical_current: f64,
}

/// Assembled circuit matrices. Degree-of-freedom indices are zero-based;
/// DOF `k` corresponds to canonical node `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitModel {
    pub n_dof: usize,
    /// Capacitance matrix (F).
    pub cmat: RMatrix,
    /// Inverse inductance matrix (1/H).
    pub linv: RMatrix,
    /// Inverse resistance matrix (1/Ω).
    pub rinv: RMatrix,
    pub junctions: Vec<Junction>,
    pub node_names: Vec<String>,
    /// DOFs carrying an auxiliary capacitor.
    pub auxiliary_nodes: Vec<usize>,
    /// Node fluxes as a function of the model coordinates, `Φ_node = T φ`.
    pub coordinates: RMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintLaw {
    Kvl,
    Kcl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintCount {
    pub kvl_count: usize,
    pub kcl_count: usize,
    pub chosen: ConstraintLaw,
}

/// Effective single-DOF parameters: inductance (H), capacitance (F), impedance (Ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub inductance: f64,
    pub capacitance: f64,
    pub impedance: f64,
}

impl EffectiveParams {
    pub fn angular_frequency(&self) -> f64 {
        1.0 / (self.inductance * self.capacitance).sqrt()
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU * (self.inductance * self.capacitance).sqrt()
    }
}

/// Nodal stamp of one element kind into an `n × n` matrix; additive over elements.
pub(crate) fn stamp(elements: &[ElementDecl], n: usize, kind: ElementKind) -> RMatrix {
    let mut m = RMatrix::zeros(n, n);
    for e in elements.iter().filter(|e| e.kind == kind) {
        let g = match kind {
            ElementKind::Capacitor => e.value,
            _ => 1.0 / e.value,
        };
        let (a, b) = (e.node_a, e.node_b);
        if a != 0 {
            m[(a - 1, a - 1)] += g;
        }
        if b != 0 {
            m[(b - 1, b - 1)] += g;
        }
        if a != 0 && b != 0 {
            m[(a - 1, b - 1)] -= g;
            m[(b - 1, a - 1)] -= g;
        }
    }
    m
}

/// Node an auxiliary capacitor regularizes: the number in its name, or its first terminal.
fn auxiliary_node(e: &ElementDecl) -> usize {
    e.name[AUX_PREFIX.len()..]
        .parse::<usize>()
        .ok()
        .filter(|&n| n == e.node_a || n == e.node_b)
        .unwrap_or(e.node_a)
}

pub fn assemble_matrices(spec: &CircuitSpec) -> Result<CircuitModel, TopologyError> {
    let n = spec.n_nodes();
    if let Some(e) = spec.elements().iter().find(|e| e.value == 0.0) {
        return Err(TopologyError::ZeroValue(e.name.clone()));
    }

    // reference node per DOF for auxiliary branch coordinates
    let mut reference: Vec<Option<usize>> = vec![None; n];
    let mut auxiliary_nodes = Vec::new();
    for e in spec.elements().iter().filter(|e| e.is_auxiliary()) {
        let node = auxiliary_node(e);
        if node == 0 {
            continue;
        }
        let other = e.other_terminal(node).unwrap_or(0);
        if other != 0 {
            reference[node - 1] = Some(other - 1);
        }
        if !auxiliary_nodes.contains(&(node - 1)) {
            auxiliary_nodes.push(node - 1);
        }
    }
    let coordinates = coordinate_map(&reference)?;

    let mut junctions = Vec::new();
    for e in spec.elements().iter().filter(|e| e.kind == ElementKind::Junction) {
        let node = match (e.node_a, e.node_b) {
            (0, k) | (k, 0) => k,
            _ => return Err(TopologyError::JunctionNotGrounded(e.name.clone())),
        };
        if reference[node - 1].is_some() {
            return Err(TopologyError::JunctionOnAuxiliary(e.name.clone()));
        }
        junctions.push(Junction {
            name: e.name.clone(),
            dof: node - 1,
            critical_current: e.value,
        });
    }

    let congruence = |m: RMatrix| coordinates.transpose() * m * &coordinates;
    let node_names = (0..n)
        .map(|k| match reference[k] {
            Some(r) => format!("{}-{}", k + 1, r + 1),
            None => format!("{}", k + 1),
        })
        .collect();
    Ok(CircuitModel {
        n_dof: n,
        cmat: congruence(stamp(spec.elements(), n, ElementKind::Capacitor)),
        linv: congruence(stamp(spec.elements(), n, ElementKind::Inductor)),
        rinv: congruence(stamp(spec.elements(), n, ElementKind::Resistor)),
        junctions,
        node_names,
        auxiliary_nodes,
        coordinates,
    })
}

/// Builds `T` with `Φ_k = φ_k + Φ_ref(k)`.
fn coordinate_map(reference: &[Option<usize>]) -> Result<RMatrix, TopologyError> {
    let n = reference.len();
    let mut t = RMatrix::identity(n, n);
    for k in 0..n {
        let mut node = k;
        let mut hops = 0;
        while let Some(r) = reference[node] {
            t[(k, r)] += 1.0;
            node = r;
            hops += 1;
            if hops > n {
                return Err(TopologyError::AuxiliaryCycle(k + 1));
            }
        }
    }
    Ok(t)
}

/// Zero-based DOFs whose capacitance row is identically zero.
pub fn detect_singular_capacitance(model: &CircuitModel) -> Vec<usize> {
    (0..model.n_dof)
        .filter(|&k| model.cmat.row(k).iter().all(|&c| c == 0.0))
        .collect()
}

/// Inverse capacitance matrix, or why it does not exist.
pub fn capacitance_inverse(model: &CircuitModel) -> Result<RMatrix, TopologyError> {
    let singular = detect_singular_capacitance(model);
    if !singular.is_empty() {
        return Err(TopologyError::Pathological(singular.iter().map(|k| k + 1).collect()));
    }
    let chol = Cholesky::new(model.cmat.clone()).ok_or(TopologyError::RankDeficient)?;
    let l = chol.l();
    let diag_min = l.diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let diag_max = l.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    // condition estimate of C is roughly (max/min)² of the Cholesky diagonal
    if diag_min.is_nan() || diag_min <= 0.0 || (diag_max / diag_min).powi(2) > 1e14 {
        return Err(TopologyError::RankDeficient);
    }
    Ok(chol.inverse())
}

/// Smallest circuit capacitance divided by 100.
pub fn default_auxiliary_value(spec: &CircuitSpec) -> Option<f64> {
    spec.elements()
        .iter()
        .filter(|e| e.kind == ElementKind::Capacitor)
        .map(|e| e.value)
        .reduce(f64::min)
        .map(|c| c / 100.0)
}

/// Adds capacitor `Caux<node>` at a singular node (one-based `node`).
///
/// The capacitor goes in parallel with the first inductor incident on the
/// node, or to ground when there is none.
pub fn insert_auxiliary_capacitor(spec: &CircuitSpec, node: usize, value: f64) -> Result<CircuitSpec, TopologyError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(TopologyError::BadAuxiliaryValue(value));
    }
    if node == 0 || node > spec.n_nodes() {
        return Err(TopologyError::NoSuchNode(node));
    }
    let model = assemble_matrices(spec)?;
    if !detect_singular_capacitance(&model).contains(&(node - 1)) {
        return Err(TopologyError::NotSingular(node));
    }
    let other = spec
        .elements()
        .iter()
        .filter(|e| e.kind == ElementKind::Inductor)
        .find_map(|e| e.other_terminal(node))
        .unwrap_or(0);
    let aux = ElementDecl::new(ElementKind::Capacitor, format!("{AUX_PREFIX}{node}"), node, other, value);
    Ok(spec.with_element(aux)?)
}

/// Inserts auxiliary capacitors at every singular node. Returns the new spec
/// and the one-based nodes that were regularized.
pub fn regularize(spec: &CircuitSpec, value: Option<f64>) -> Result<(CircuitSpec, Vec<usize>), TopologyError> {
    let model = assemble_matrices(spec)?;
    let singular: Vec<usize> = detect_singular_capacitance(&model).iter().map(|k| k + 1).collect();
    if singular.is_empty() {
        return Ok((spec.clone(), singular));
    }
    let value = value
        .or_else(|| default_auxiliary_value(spec))
        .ok_or(TopologyError::Pathological(singular.clone()))?;
    let mut out = spec.clone();
    for &node in &singular {
        out = insert_auxiliary_capacitor(&out, node, value)?;
    }
    Ok((out, singular))
}

pub fn constraint_counts(spec: &CircuitSpec) -> ConstraintCount {
    let branches = spec.elements().len();
    let nodes = spec.n_nodes() + 1;
    ConstraintCount {
        kvl_count: branches + 1 - nodes,
        kcl_count: nodes - 1,
        chosen: ConstraintLaw::Kvl,
    }
}

/// `L̃_k = 1/linv[k,k]`, `C̃_k = cmat[k,k]`, `Z̃_k = √(L̃_k/C̃_k)`.
pub fn effective_params(model: &CircuitModel, k: usize) -> Result<EffectiveParams, TopologyError> {
    linearized_params(model, k, None)
}

/// Like [`effective_params`], but a junction on DOF `k` contributes its
/// Josephson inductance `1/(I_c0 k_J)` in parallel with the linear inductors.
pub fn linearized_params(model: &CircuitModel, k: usize, k_j: Option<f64>) -> Result<EffectiveParams, TopologyError> {
    let mut inv_l = model.linv[(k, k)];
    if let Some(k_j) = k_j {
        inv_l += model
            .junctions
            .iter()
            .filter(|j| j.dof == k)
            .map(|j| j.critical_current * k_j)
            .sum::<f64>();
    }
    let c = model.cmat[(k, k)];
    if inv_l.is_nan() || inv_l <= 0.0 {
        return Err(TopologyError::MissingDiagonal(k + 1, "inductance"));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(TopologyError::MissingDiagonal(k + 1, "capacitance"));
    }
    let l = 1.0 / inv_l;
    Ok(EffectiveParams {
        inductance: l,
        capacitance: c,
        impedance: (l / c).sqrt(),
    })
}
