//! Field-of-values enclosures for nonnegative matrices.
//!
//! For `A >= 0` the numerical radius is the largest eigenvalue of the
//! Hermitian part `(A + A^T)/2`, found here by Lanczos from the all-ones
//! vector (which overlaps the nonnegative Perron vector).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{MatrixKind, NodeId};
use crate::krylov::{dot, norm, project_out, sub_scaled};
use crate::sparse::{CsrMatrix, LinearOperator};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("numerical radius not converged after {iterations} iterations: estimate {estimate:.6e}, residual {residual:.3e}")]
    NotConverged {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("matrix has a negative entry at ({row}, {col})")]
    Negative { row: usize, col: usize },
    #[error("matrices have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid single-entry perturbation: {0}")]
    InvalidShift(String),
}

/// Convex set symmetric about the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Disk {
        center: f64,
        radius: f64,
    },
    /// Real interval `[center - half_length, center + half_length]`.
    Segment {
        center: f64,
        half_length: f64,
    },
    /// Horizontal ellipse, `semi_major >= semi_minor > 0`.
    Ellipse {
        center: f64,
        semi_major: f64,
        semi_minor: f64,
    },
}

impl Region {
    pub fn validate(&self) -> Result<(), SpectralError> {
        let ok = match *self {
            Region::Disk { center, radius } => {
                center.is_finite() && radius > 0.0 && radius.is_finite()
            }
            Region::Segment {
                center,
                half_length,
            } => center.is_finite() && half_length > 0.0 && half_length.is_finite(),
            Region::Ellipse {
                center,
                semi_major,
                semi_minor,
            } => {
                center.is_finite()
                    && semi_major.is_finite()
                    && semi_minor > 0.0
                    && semi_major >= semi_minor
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SpectralError::InvalidRegion(format!("{self:?}")))
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            Region::Disk { center, .. }
            | Region::Segment { center, .. }
            | Region::Ellipse { center, .. } => center,
        }
    }

    /// `(a, b)`: horizontal and vertical semi-axes.
    pub fn semi_axes(&self) -> (f64, f64) {
        match *self {
            Region::Disk { radius, .. } => (radius, radius),
            Region::Segment { half_length, .. } => (half_length, 0.0),
            Region::Ellipse {
                semi_major,
                semi_minor,
                ..
            } => (semi_major, semi_minor),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let (a, b) = self.semi_axes();
        let x = z.re - self.center();
        if b == 0.0 {
            return z.im == 0.0 && x.abs() <= a;
        }
        (x / a).powi(2) + (z.im / b).powi(2) <= 1.0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Region::Disk { .. } => "disk",
            Region::Segment { .. } => "segment",
            Region::Ellipse { .. } => "ellipse",
        }
    }
}

struct HermitianPart<'a>(&'a CsrMatrix);

impl LinearOperator for HermitianPart<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; x.len()];
        self.0.apply(x, y);
        self.0.matvec_transpose(x, &mut t);
        y.iter_mut().zip(&t).for_each(|(a, b)| *a = 0.5 * (*a + b));
    }
}

fn check_nonnegative(m: &CsrMatrix) -> Result<(), SpectralError> {
    match m.iter().find(|&(_, _, w)| w < 0.0) {
        Some((row, col, _)) => Err(SpectralError::Negative { row, col }),
        None => Ok(()),
    }
}

/// Largest Ritz value of a symmetric tridiagonal matrix and the last
/// component of its unit Ritz vector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let n = alpha.len();
    let mut t = DMatrix::zeros(n, n);
    for j in 0..n {
        t[(j, j)] = alpha[j];
        if j + 1 < n {
            t[(j, j + 1)] = beta[j];
            t[(j + 1, j)] = beta[j];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    (theta, eig.eigenvectors[(n - 1, idx)])
}

/// `nu(A) = rho((A + A^T)/2)` for nonnegative `A`, to relative tolerance `tol`
/// measured by the Ritz residual `|beta_j s_j|`.
pub fn numerical_radius(
    matrix: &CsrMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<f64, SpectralError> {
    check_nonnegative(matrix)?;
    let n = matrix.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let op = HermitianPart(matrix);
    let start = 1.0 / (n as f64).sqrt();
    let mut basis = vec![vec![start; n]];
    let (mut alpha, mut beta) = (Vec::new(), Vec::<f64>::new());
    let mut u = vec![0.0; n];
    let mut best = (0.0, f64::INFINITY);
    let limit = max_iter.min(n).max(1);
    for j in 0..limit {
        op.apply(&basis[j], &mut u);
        let unorm = norm(&u);
        let a = dot(&basis[j], &u);
        alpha.push(a);
        sub_scaled(&mut u, a, &basis[j]);
        if j > 0 {
            sub_scaled(&mut u, beta[j - 1], &basis[j - 1]);
        }
        project_out(&mut u, &basis, &basis);
        let b = norm(&u);
        let exhausted = b <= 1e-14 * unorm || j + 1 == n;
        let check = exhausted || j < 50 || j % 10 == 0 || j + 1 == limit;
        if check {
            let (theta, s_last) = top_ritz(&alpha, &beta);
            let residual = if exhausted { 0.0 } else { (b * s_last).abs() };
            best = (theta, residual);
            if residual <= tol * theta.abs() || exhausted {
                return Ok(theta.max(0.0));
            }
        }
        beta.push(b);
        basis.push(u.iter().map(|x| x / b).collect());
    }
    Err(SpectralError::NotConverged {
        estimate: best.0,
        residual: best.1,
        iterations: limit,
    })
}

/// Smallest radius used when both matrices have zero numerical radius.
const MIN_RADIUS: f64 = f64::MIN_POSITIVE;

/// Region containing the fields of values of `a` and (if given) `b`.
pub fn enclosing_region(
    a: &CsrMatrix,
    b: Option<&CsrMatrix>,
    kind: MatrixKind,
    tol: f64,
) -> Result<Region, SpectralError> {
    if let Some(b) = b {
        if b.dim() != a.dim() {
            return Err(SpectralError::DimensionMismatch(a.dim(), b.dim()));
        }
    }
    if kind == MatrixKind::NormalizedSymmetric {
        return Ok(Region::Segment {
            center: 0.0,
            half_length: 1.0,
        });
    }
    let max_iter = a.dim().max(1);
    let mut nu = numerical_radius(a, tol, max_iter)?;
    if let Some(b) = b {
        nu = nu.max(numerical_radius(b, tol, max_iter)?);
    }
    let radius = (nu * (1.0 + 10.0 * tol)).max(MIN_RADIUS);
    let symmetric = a.is_symmetric() && b.is_none_or(|b| b.is_symmetric());
    if kind == MatrixKind::PlainAdjacency && symmetric {
        Ok(Region::Segment {
            center: 0.0,
            half_length: radius,
        })
    } else {
        Ok(Region::Disk {
            center: 0.0,
            radius,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftCheck {
    pub nu_original: f64,
    pub nu_perturbed: f64,
    pub shift: f64,
}

/// Numerical radii of `A` and `A + eps e_m e_n^T`.
pub fn single_entry_shift_check(
    a: &CsrMatrix,
    m: NodeId,
    n: NodeId,
    eps: f64,
    tol: f64,
) -> Result<ShiftCheck, SpectralError> {
    if m == n {
        return Err(SpectralError::InvalidShift(
            "row and column must differ".into(),
        ));
    }
    if !(eps > 0.0) {
        return Err(SpectralError::InvalidShift(format!(
            "weight must be positive, got {eps}"
        )));
    }
    if m >= a.dim() || n >= a.dim() {
        return Err(SpectralError::InvalidShift(format!(
            "({m}, {n}) outside dimension {}",
            a.dim()
        )));
    }
    let perturbed = CsrMatrix::from_triplets(a.dim(), a.iter().chain(std::iter::once((m, n, eps))));
    let max_iter = a.dim();
    let nu_original = numerical_radius(a, tol, max_iter)?;
    let nu_perturbed = numerical_radius(&perturbed, tol, max_iter)?;
    Ok(ShiftCheck {
        nu_original,
        nu_perturbed,
        shift: nu_perturbed - nu_original,
    })
}
