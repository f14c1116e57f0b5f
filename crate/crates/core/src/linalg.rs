//! Small dense linear-algebra helpers shared by the numeric modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The series is summed until the next term falls below machine epsilon
/// relative to the partial sum, which keeps the result well inside 1e-13.
pub fn expm(a: &RMatrix) -> RMatrix {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let mut sum = RMatrix::identity(n, n);
    let mut term = RMatrix::identity(n, n);
    for k in 1..64 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if norm1(&term) <= f64::EPSILON * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Maximum absolute column sum.
pub fn norm1(a: &RMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `‖m − m†‖_F / max(‖m‖_F, tiny)`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / scale
}

/// Applies a real scalar function to a Hermitian matrix through its
/// eigendecomposition `U diag(f(λ)) U†`.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    // symmetrize first so that round-off in the input cannot leak into U
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(lambda));
    }
    scaled * u.adjoint()
}

/// Commutator `[a, b] = ab − ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
