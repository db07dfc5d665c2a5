//! Portable dense kernels: naive matmul, cyclic Jacobi Hermitian
//! eigendecomposition, Householder QR.
//!
//! These are the default backend when the `fast-linalg` feature is off
//! (notably for wasm builds) and serve as an independent cross-check of the
//! accelerated backend in tests. All matrices are row-major `n x n` slices.

use num_complex::Complex64;

use crate::error::{Result, UbmError};

/// dst = a * b. Buffers must not alias.
pub fn matmul_into(dst: &mut [Complex64], a: &[Complex64], b: &[Complex64], n: usize) {
    dst.fill(Complex64::new(0.0, 0.0));
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            let drow = &mut dst[i * n..(i + 1) * n];
            for j in 0..n {
                drow[j] += aik * brow[j];
            }
        }
    }
}

/// dst = a * b^*. Buffers must not alias.
pub fn matmul_adjoint_rhs_into(dst: &mut [Complex64], a: &[Complex64], b: &[Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += a[i * n + k] * b[j * n + k].conj();
            }
            dst[i * n + j] = acc;
        }
    }
}

/// dst = a^* * b. Buffers must not alias.
pub fn matmul_adjoint_lhs_into(dst: &mut [Complex64], a: &[Complex64], b: &[Complex64], n: usize) {
    dst.fill(Complex64::new(0.0, 0.0));
    for k in 0..n {
        for i in 0..n {
            let aki = a[k * n + i].conj();
            if aki == Complex64::new(0.0, 0.0) {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            let drow = &mut dst[i * n..(i + 1) * n];
            for j in 0..n {
                drow[j] += aki * brow[j];
            }
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Writes ascending eigenvalues into `evals` and the corresponding
/// eigenvectors into the columns of `evecs` (row-major), so that
/// `h = evecs * diag(evals) * evecs^*`.
pub fn hermitian_eig_into(
    h: &[Complex64],
    n: usize,
    evals: &mut [f64],
    evecs: &mut [Complex64],
) -> Result<()> {
    let mut a = h.to_vec();
    // evecs starts as the identity and accumulates rotations.
    evecs.fill(Complex64::new(0.0, 0.0));
    for i in 0..n {
        evecs[i * n + i] = Complex64::new(1.0, 0.0);
    }

    let norm: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        evals.fill(0.0);
        return Ok(());
    }
    let tol = 1e-15 * norm;

    const MAX_SWEEPS: usize = 60;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    s += a[p * n + q].norm_sqr();
                }
            }
            s.sqrt()
        };
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Unitary rotation J annihilating the (p, q) entry of the
                // Hermitian block [[app, apq], [conj(apq), aqq]]:
                // J = [[c, s], [-s conj(phase), c conj(phase)]] with
                // phase = apq/|apq| and the classic real-Jacobi (c, s).
                let g = apq.norm();
                let phase = apq / g;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_conj_phase = phase.conj() * s;
                let c_conj_phase = phase.conj() * c;
                let s_phase = phase * s;
                let c_phase = phase * c;
                // A <- A J (column update).
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = aip * c - aiq * s_conj_phase;
                    a[i * n + q] = aip * s + aiq * c_conj_phase;
                }
                // A <- J* A (row update).
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = api * c - aqi * s_phase;
                    a[q * n + i] = api * s + aqi * c_phase;
                }
                // Accumulate eigenvectors: V <- V J.
                for i in 0..n {
                    let vip = evecs[i * n + p];
                    let viq = evecs[i * n + q];
                    evecs[i * n + p] = vip * c - viq * s_conj_phase;
                    evecs[i * n + q] = vip * s + viq * c_conj_phase;
                }
            }
        }
    }
    if !converged {
        // One final check: accept if the residual is merely close to tol.
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if off.sqrt() > tol * 100.0 {
            return Err(UbmError::EigFailed(format!(
                "Jacobi iteration did not converge: off-diagonal {:.3e}",
                off.sqrt()
            )));
        }
    }

    for i in 0..n {
        evals[i] = a[i * n + i].re;
    }
    // Sort ascending for a deterministic output order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let evals_sorted: Vec<f64> = order.iter().map(|&j| evals[j]).collect();
    let old = evecs.to_vec();
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            evecs[i * n + new_col] = old[i * n + old_col];
        }
    }
    evals.copy_from_slice(&evals_sorted);
    Ok(())
}

/// QR decomposition by Householder reflections; returns the unitary factor
/// (row-major) and the diagonal of R.
pub fn qr_unitary(a: &[Complex64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut r = a.to_vec();
    let mut q = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        q[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut norm_x = 0.0;
        for i in k..n {
            norm_x += r[i * n + k].norm_sqr();
        }
        let norm_x = norm_x.sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = r[k * n + k];
        let alpha = if x0.norm() == 0.0 {
            Complex64::new(-norm_x, 0.0)
        } else {
            -(x0 / x0.norm()) * norm_x
        };
        let mut vnorm = 0.0;
        for i in k..n {
            v[i] = r[i * n + k];
            if i == k {
                v[i] -= alpha;
            }
            vnorm += v[i].norm_sqr();
        }
        if vnorm == 0.0 {
            continue;
        }
        let scale = 2.0 / vnorm;
        // r <- (I - scale v v^*) r
        for j in k..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k..n {
                dot += v[i].conj() * r[i * n + j];
            }
            let dot = dot * scale;
            for i in k..n {
                r[i * n + j] -= v[i] * dot;
            }
        }
        // q <- q (I - scale v v^*)
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in k..n {
                dot += q[i * n + j] * v[j];
            }
            let dot = dot * scale;
            for j in k..n {
                q[i * n + j] -= dot * v[j].conj();
            }
        }
    }
    let rdiag: Vec<Complex64> = (0..n).map(|i| r[i * n + i]).collect();
    (q, rdiag)
}
