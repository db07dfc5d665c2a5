//! Accelerated dense kernels backed by `faer`, with the same contract as
//! [`super::reference`]. Compiled when the `fast-linalg` feature is on.
//!
//! All faer calls run sequentially (`Parallelism::None`): parallelism in this
//! crate lives at the replication level, and sequential kernels keep results
//! independent of the worker count.

use faer::complex_native::c64;
use faer::dyn_stack::{GlobalPodBuffer, PodStack};
use faer::linalg::evd::{compute_hermitian_evd, compute_hermitian_evd_req, ComputeVectors};
use faer::{Mat, Parallelism};
use num_complex::Complex64;

use crate::error::{Result, UbmError};

const _: () = assert!(std::mem::size_of::<c64>() == std::mem::size_of::<Complex64>());
const _: () = assert!(std::mem::align_of::<c64>() == std::mem::align_of::<Complex64>());

fn cast(slice: &[Complex64]) -> &[c64] {
    // c64 and num_complex::Complex64 are both repr(C) {re: f64, im: f64}.
    unsafe { std::slice::from_raw_parts(slice.as_ptr() as *const c64, slice.len()) }
}

fn cast_mut(slice: &mut [Complex64]) -> &mut [c64] {
    unsafe { std::slice::from_raw_parts_mut(slice.as_mut_ptr() as *mut c64, slice.len()) }
}

fn as_ref(slice: &[Complex64], n: usize) -> faer::MatRef<'_, c64> {
    faer::mat::from_row_major_slice(cast(slice), n, n)
}

fn as_mut(slice: &mut [Complex64], n: usize) -> faer::MatMut<'_, c64> {
    faer::mat::from_row_major_slice_mut(cast_mut(slice), n, n)
}

const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// dst = a * b.
pub fn matmul_into(dst: &mut [Complex64], a: &[Complex64], b: &[Complex64], n: usize) {
    faer::linalg::matmul::matmul(
        as_mut(dst, n),
        as_ref(a, n),
        as_ref(b, n),
        None,
        ONE,
        Parallelism::None,
    );
}

/// dst = a * b^*.
pub fn matmul_adjoint_rhs_into(dst: &mut [Complex64], a: &[Complex64], b: &[Complex64], n: usize) {
    faer::linalg::matmul::matmul(
        as_mut(dst, n),
        as_ref(a, n),
        as_ref(b, n).adjoint(),
        None,
        ONE,
        Parallelism::None,
    );
}

/// dst = a^* * b.
pub fn matmul_adjoint_lhs_into(dst: &mut [Complex64], a: &[Complex64], b: &[Complex64], n: usize) {
    faer::linalg::matmul::matmul(
        as_mut(dst, n),
        as_ref(a, n).adjoint(),
        as_ref(b, n),
        None,
        ONE,
        Parallelism::None,
    );
}

/// Reusable workspace for repeated Hermitian eigendecompositions of the same
/// dimension. Avoids per-call allocation in the integrator's inner loop.
pub struct EigWorkspace {
    n: usize,
    buffer: GlobalPodBuffer,
    input: Mat<c64>,
    s: Mat<c64>,
    u: Mat<c64>,
}

impl EigWorkspace {
    pub fn new(n: usize) -> Self {
        let req = compute_hermitian_evd_req::<c64>(
            n,
            ComputeVectors::Yes,
            Parallelism::None,
            Default::default(),
        )
        .expect("workspace size");
        EigWorkspace {
            n,
            buffer: GlobalPodBuffer::new(req),
            input: Mat::zeros(n, n),
            s: Mat::zeros(n, 1),
            u: Mat::zeros(n, n),
        }
    }

    /// Decompose Hermitian `h` (row-major): ascending `evals`, eigenvectors in
    /// the columns of row-major `evecs`.
    pub fn decompose(
        &mut self,
        h: &[Complex64],
        evals: &mut [f64],
        evecs: &mut [Complex64],
    ) -> Result<()> {
        let n = self.n;
        let href = as_ref(h, n);
        self.input.copy_from(href);
        compute_hermitian_evd(
            self.input.as_ref(),
            self.s.as_mut().col_mut(0),
            Some(self.u.as_mut()),
            Parallelism::None,
            PodStack::new(self.buffer.as_mut()),
            Default::default(),
        );
        for i in 0..n {
            let v = self.s.read(i, 0);
            if !v.re.is_finite() {
                return Err(UbmError::EigFailed(format!(
                    "non-finite eigenvalue at index {i}"
                )));
            }
            evals[i] = v.re;
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.u.read(i, j);
                evecs[i * n + j] = Complex64::new(v.re, v.im);
            }
        }
        Ok(())
    }
}

/// Eigendecomposition of a Hermitian matrix; see [`EigWorkspace::decompose`].
pub fn hermitian_eig_into(
    h: &[Complex64],
    n: usize,
    evals: &mut [f64],
    evecs: &mut [Complex64],
) -> Result<()> {
    EigWorkspace::new(n).decompose(h, evals, evecs)
}

/// QR decomposition; returns the unitary factor (row-major) and the diagonal
/// of R.
pub fn qr_unitary(a: &[Complex64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    use faer::linalg::solvers::Qr;
    let qr = Qr::new(as_ref(a, n));
    let q = qr.compute_q();
    let r = qr.compute_r();
    let mut qout = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let v = q.read(i, j);
            qout[i * n + j] = Complex64::new(v.re, v.im);
        }
    }
    let rdiag: Vec<Complex64> = (0..n)
        .map(|i| {
            let v = r.read(i, i);
            Complex64::new(v.re, v.im)
        })
        .collect();
    (qout, rdiag)
}
