//! Dense ground truth: matrix exponential, resolvent and general functions
//! of small matrices, and exact entry variations under a perturbation.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::func::FunctionDescriptor;
use crate::graph::{apply_delta, build_matrix, EdgeDelta, Graph, GraphError, MatrixKind, NodeId};
use crate::sparse::CsrMatrix;

pub const DEFAULT_DENSE_CAP: usize = 3000;

const TAYLOR_ORDER: usize = 18;
const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix exponential overflowed")]
    Overflow,
    #[error("I - alpha*M is singular for alpha = {alpha}")]
    Singular { alpha: f64 },
    #[error("I - alpha*M is ill-conditioned (cond_1 ~ {cond:.3e}) for alpha = {alpha}")]
    IllConditioned { alpha: f64, cond: f64 },
    #[error("resolvent pole hit: 1 - alpha*lambda = {denominator:.3e}")]
    Pole { denominator: f64 },
    #[error("{0} on a nonsymmetric matrix is not supported by the dense oracle")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A square dense matrix within a dimension cap.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: DMatrix<f64>,
}

impl DenseMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self, OracleError> {
        Self::with_cap(data, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(data: DMatrix<f64>, cap: usize) -> Result<Self, OracleError> {
        assert_eq!(data.nrows(), data.ncols(), "square matrix expected");
        if data.nrows() > cap {
            return Err(OracleError::TooLarge {
                dim: data.nrows(),
                cap,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(OracleError::NonFinite);
        }
        Ok(DenseMatrix { data })
    }

    pub fn from_csr(m: &CsrMatrix) -> Result<Self, OracleError> {
        if m.dim() > DEFAULT_DENSE_CAP {
            return Err(OracleError::TooLarge {
                dim: m.dim(),
                cap: DEFAULT_DENSE_CAP,
            });
        }
        Self::new(m.to_dense())
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    pub fn is_symmetric(&self) -> bool {
        is_symmetric(&self.data)
    }
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `exp(M)`: eigendecomposition for symmetric input, Taylor with scaling and
/// squaring otherwise.
pub fn dense_expm(m: &DenseMatrix) -> Result<DenseMatrix, OracleError> {
    let out = if m.is_symmetric() {
        symmetric_function(m.matrix(), |x| x.exp())?
    } else {
        expm_taylor(m.matrix())?
    };
    DenseMatrix::new(out).map_err(|_| OracleError::Overflow)
}

/// Degree-18 Taylor polynomial of `exp(M / 2^s)` squared `s` times, with `s`
/// the smallest integer giving `||M / 2^s||_1 <= 0.5`.
pub fn expm_taylor(m: &DMatrix<f64>) -> Result<DMatrix<f64>, OracleError> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0i32;
    while norm1 / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let x = m / 2f64.powi(s);
    let eye = DMatrix::<f64>::identity(n, n);
    let mut acc = eye.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        acc = &eye + (&x * acc) / k as f64;
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::Overflow);
    }
    Ok(acc)
}

/// `V diag(f(lambda)) V^T` for a symmetric matrix, symmetrized.
pub fn symmetric_function<F: Fn(f64) -> f64>(
    m: &DMatrix<f64>,
    f: F,
) -> Result<DMatrix<f64>, OracleError> {
    let eig = SymmetricEigen::new(m.clone());
    let fvals = eig.eigenvalues.map(&f);
    if fvals.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::Overflow);
    }
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&fvals);
    Ok(symmetrize(scaled * eig.eigenvectors.transpose()))
}

/// `(I - alpha M)^{-1}` by LU with partial pivoting.
pub fn dense_resolvent(m: &DenseMatrix, alpha: f64) -> Result<DenseMatrix, OracleError> {
    let out = resolvent_lu(m.matrix(), alpha)?;
    DenseMatrix::new(out)
}

fn resolvent_lu(m: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>, OracleError> {
    let n = m.nrows();
    let b = DMatrix::<f64>::identity(n, n) - m * alpha;
    let inv = b
        .clone()
        .lu()
        .try_inverse()
        .ok_or(OracleError::Singular { alpha })?;
    let cond = norm_1(&b) * norm_1(&inv);
    if !cond.is_finite() {
        return Err(OracleError::Singular { alpha });
    }
    if cond > MAX_CONDITION {
        return Err(OracleError::IllConditioned { alpha, cond });
    }
    Ok(inv)
}

fn norm_1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `f(M)` for any supported descriptor. Symmetric matrices go through the
/// eigendecomposition; nonsymmetric ones need `Exp` or `Resolvent`.
pub fn dense_function(
    m: &DMatrix<f64>,
    f: &FunctionDescriptor,
) -> Result<DMatrix<f64>, OracleError> {
    let symmetric = is_symmetric(m);
    match f {
        FunctionDescriptor::Exp if symmetric => symmetric_function(m, f64::exp),
        FunctionDescriptor::Exp => expm_taylor(m),
        FunctionDescriptor::Resolvent { alpha } if symmetric => {
            let eig = SymmetricEigen::new(m.clone());
            let scale = eig.eigenvalues.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if let Some(&lam) = eig
                .eigenvalues
                .iter()
                .find(|&&lam| (1.0 - alpha * lam).abs() <= 1e-14 * scale * alpha.abs().max(1.0))
            {
                return Err(OracleError::Pole {
                    denominator: 1.0 - alpha * lam,
                });
            }
            symmetric_function(m, |x| 1.0 / (1.0 - alpha * x))
        }
        FunctionDescriptor::Resolvent { alpha } => resolvent_lu(m, *alpha),
        FunctionDescriptor::Custom { .. } if symmetric => symmetric_function(m, |x| f.eval_real(x)),
        FunctionDescriptor::Custom { name, .. } => Err(OracleError::Unsupported(name.clone())),
    }
}

/// `|f(A)_{kl} - f(A~)_{kl}|` for every requested pair, `A~` being the matrix
/// of `g` perturbed by `d`.
pub fn exact_variation(
    g: &Graph,
    d: &EdgeDelta,
    kind: MatrixKind,
    f: &FunctionDescriptor,
    pairs: &[(NodeId, NodeId)],
) -> Result<Vec<f64>, OracleError> {
    for &(k, l) in pairs {
        g.check_node(k)?;
        g.check_node(l)?;
    }
    if g.n_nodes() > DEFAULT_DENSE_CAP {
        return Err(OracleError::TooLarge {
            dim: g.n_nodes(),
            cap: DEFAULT_DENSE_CAP,
        });
    }
    if d.is_empty() {
        return Ok(vec![0.0; pairs.len()]);
    }
    let perturbed = apply_delta(g, d)?;
    let a = build_matrix(g, kind)?.to_dense();
    let at = build_matrix(&perturbed, kind)?.to_dense();
    let (fa, fat) = rayon::join(|| dense_function(&a, f), || dense_function(&at, f));
    let (fa, fat) = (fa?, fat?);
    Ok(pairs
        .iter()
        .map(|&(k, l)| (fa[(k, l)] - fat[(k, l)]).abs())
        .collect())
}
