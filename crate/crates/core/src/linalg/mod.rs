//! Dense complex matrices, trace forms, Hermitian eigendecomposition, and the
//! unitary matrix exponential.
//!
//! Matrices are square, row-major, `Complex64`. The three domain types form a
//! small hierarchy: [`ComplexMatrix`] (finite entries), [`HermitianMatrix`]
//! (M = M* within [`tol::HERMITIAN_ABS`]), [`UnitaryMatrix`] (||M*M - I||_F
//! within [`tol::UNITARY_FRO`]). Invariants are enforced at construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UbmError};
use crate::tol;

pub mod reference;

#[cfg(feature = "fast-linalg")]
pub mod backend;

#[cfg(not(feature = "fast-linalg"))]
pub use reference as backend;

#[cfg(not(feature = "fast-linalg"))]
/// Reusable eigendecomposition state for one matrix dimension.
pub struct EigWorkspace {
    n: usize,
}

#[cfg(not(feature = "fast-linalg"))]
impl EigWorkspace {
    pub fn new(n: usize) -> Self {
        EigWorkspace { n }
    }

    pub fn decompose(
        &mut self,
        h: &[Complex64],
        evals: &mut [f64],
        evecs: &mut [Complex64],
    ) -> Result<()> {
        reference::hermitian_eig_into(h, self.n, evals, evecs)
    }
}

#[cfg(feature = "fast-linalg")]
pub use backend::EigWorkspace;

/// Dense square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds from row-major entries, checking shape and finiteness.
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(UbmError::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        for (idx, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(UbmError::NonFiniteEntry {
                    row: idx / n,
                    col: idx % n,
                });
            }
        }
        Ok(ComplexMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        ComplexMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Elementary matrix E_ij (1 at row i, column j; zero-based indices).
    pub fn elementary(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m.data[i * n + j] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(other)?;
        Ok(ComplexMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(other)?;
        Ok(ComplexMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Matrix product self * other.
    pub fn mul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(other)?;
        let mut out = ComplexMatrix::zeros(self.n);
        backend::matmul_into(&mut out.data, &self.data, &other.data, self.n);
        Ok(out)
    }

    fn check_dim(&self, other: &ComplexMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(UbmError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Max entrywise |M - M*|.
    pub fn hermitian_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                defect = defect.max(d);
            }
        }
        defect
    }

    /// ||M*M - I||_F.
    pub fn unitary_defect(&self) -> f64 {
        let n = self.n;
        let mut prod = vec![Complex64::new(0.0, 0.0); n * n];
        backend::matmul_adjoint_lhs_into(&mut prod, &self.data, &self.data, n);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut d = prod[i * n + j];
                if i == j {
                    d -= Complex64::new(1.0, 0.0);
                }
                acc += d.norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Hermitian matrix (M = M*), validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    base: ComplexMatrix,
}

impl HermitianMatrix {
    pub fn new(base: ComplexMatrix) -> Result<Self> {
        let defect = base.hermitian_defect();
        if defect > tol::HERMITIAN_ABS {
            return Err(UbmError::NotHermitian {
                defect,
                tol: tol::HERMITIAN_ABS,
            });
        }
        Ok(HermitianMatrix { base })
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            base: ComplexMatrix::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.base
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.base
    }

    /// Ascending eigenvalues and eigenvector columns: M = Q diag(evals) Q*.
    pub fn eig(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let n = self.dim();
        let mut evals = vec![0.0; n];
        let mut evecs = ComplexMatrix::zeros(n);
        backend::hermitian_eig_into(
            self.base.as_slice(),
            n,
            &mut evals,
            evecs.as_mut_slice(),
        )?;
        Ok((evals, evecs))
    }
}

/// Unitary matrix, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    base: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(base: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(base, tol::UNITARY_FRO)
    }

    pub fn with_tolerance(base: ComplexMatrix, tolerance: f64) -> Result<Self> {
        let defect = base.unitary_defect();
        if defect > tolerance {
            return Err(UbmError::NotUnitary {
                defect,
                tol: tolerance,
            });
        }
        Ok(UnitaryMatrix { base })
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix {
            base: ComplexMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.base
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.base
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix {
            base: self.base.adjoint(),
        }
    }

    /// Group product self * other.
    pub fn mul(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        Ok(UnitaryMatrix {
            base: self.base.mul(&other.base)?,
        })
    }
}

/// Tr(AB) evaluated as the bilinear sum over entries, without forming AB.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(UbmError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let n = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    Ok(acc)
}

/// exp(iH) for Hermitian H, via the eigendecomposition H = Q diag(l) Q*:
/// the result is Q diag(e^{il}) Q*, unitary up to eigensolver roundoff.
pub fn unitary_exp_i(h: &HermitianMatrix) -> Result<UnitaryMatrix> {
    let n = h.dim();
    let (evals, q) = h.eig()?;
    let mut scaled = q.clone();
    // Scale column j of Q by e^{i l_j}, then multiply by Q*.
    for (j, &l) in evals.iter().enumerate() {
        let phase = Complex64::new(0.0, l).exp();
        for i in 0..n {
            let v = scaled.get(i, j) * phase;
            scaled.set(i, j, v);
        }
    }
    let mut out = ComplexMatrix::zeros(n);
    backend::matmul_adjoint_rhs_into(out.as_mut_slice(), scaled.as_slice(), q.as_slice(), n);
    UnitaryMatrix::new(out)
}

/// The three trace inequalities for complex X, Y and Hermitian nonnegative
/// G, H, each evaluated with relative slack [`tol::TRACE_INEQ_REL`]:
///
/// 1. |Tr(XY)| <= sqrt(Tr(XX*)) sqrt(Tr(YY*))
/// 2. Tr(G^2) <= (Tr G)^2
/// 3. |Tr(GH)| <= Tr(G) Tr(H)
pub fn check_trace_inequalities(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    g: &ComplexMatrix,
    h: &ComplexMatrix,
) -> Result<(bool, bool, bool)> {
    for m in [g, h] {
        let defect = m.hermitian_defect();
        if defect > tol::HERMITIAN_ABS.max(1e-9 * m.frobenius_norm()) {
            return Err(UbmError::NotHermitian {
                defect,
                tol: tol::HERMITIAN_ABS,
            });
        }
    }
    let slack = |rhs: f64| rhs * (1.0 + tol::TRACE_INEQ_REL) + 1e-12;

    let lhs1 = trace_product(x, y)?.norm();
    let rhs1 = (trace_product(x, &x.adjoint())?.re * trace_product(y, &y.adjoint())?.re)
        .max(0.0)
        .sqrt();
    let ok1 = lhs1 <= slack(rhs1);

    let lhs2 = trace_product(g, g)?.re;
    let tg = g.trace().re;
    let ok2 = lhs2 <= slack(tg * tg);

    let lhs3 = trace_product(g, h)?.norm();
    let rhs3 = tg * h.trace().re;
    let ok3 = lhs3 <= slack(rhs3);

    Ok((ok1, ok2, ok3))
}

/// Hermitian square root of a Hermitian nonnegative matrix. Eigenvalues in
/// [-PSD_EIGENVALUE_CLAMP, 0) are clamped to zero; more negative is an error.
#[allow(clippy::needless_range_loop)]
pub fn hermitian_sqrt(q: &HermitianMatrix) -> Result<HermitianMatrix> {
    let n = q.dim();
    let (evals, vecs) = q.eig()?;
    let mut clamped = Vec::with_capacity(n);
    for &l in &evals {
        if l < -tol::PSD_EIGENVALUE_CLAMP {
            return Err(UbmError::NotNonnegative { min_eigenvalue: l });
        }
        clamped.push(l.max(0.0).sqrt());
    }
    let mut scaled = vecs.clone();
    for (j, &r) in clamped.iter().enumerate() {
        for i in 0..n {
            let v = scaled.get(i, j) * r;
            scaled.set(i, j, v);
        }
    }
    let mut out = ComplexMatrix::zeros(n);
    backend::matmul_adjoint_rhs_into(out.as_mut_slice(), scaled.as_slice(), vecs.as_slice(), n);
    // Symmetrize away roundoff so the constructor's check passes exactly.
    let sym = ComplexMatrix::from_fn(n, |i, j| (out.get(i, j) + out.get(j, i).conj()) * 0.5);
    HermitianMatrix::new(sym)
}
