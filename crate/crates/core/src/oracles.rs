//! Closed-form moment values and limit covariances used as ground truth by
//! the statistical harness.
//!
//! Conventions: `(e^{-t/2} V_t)` is the unitary Brownian motion started at
//! the identity, so `V_t` solves the driftless equation dV = i dH V and
//! satisfies V_t V_t* = e^t I. `U` denotes a Haar unitary, `S` a uniform
//! permutation matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UbmError};
use crate::linalg::{hermitian_sqrt, trace_product, ComplexMatrix, HermitianMatrix};
use crate::tol;

/// Extended nonnegative real scale limit, kept as a tag so no floating-point
/// infinity enters the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    Zero,
    Finite(f64),
    Infinity,
}

impl Alpha {
    pub fn finite(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(UbmError::NonPositive {
                name: "alpha",
                value,
            });
        }
        Ok(Alpha::Finite(value))
    }
}

/// The regime interpolation function: t for alpha = 0, log(alpha t + 1)/alpha
/// for finite alpha, 0 for alpha = infinity. Continuous in alpha, and
/// f_alpha(t) <= t always.
pub fn f_alpha(alpha: Alpha, t: f64) -> f64 {
    match alpha {
        Alpha::Zero => t,
        Alpha::Finite(a) => (a * t).ln_1p() / a,
        Alpha::Infinity => 0.0,
    }
}

/// E[Tr(A V_t A V_t)] = Tr(A^2) cosh(t/n) - (Tr A)^2 sinh(t/n), exact at
/// every n >= 1.
pub fn mixed_moment(a: &ComplexMatrix, n: usize, t: f64) -> Complex64 {
    let (x, _) = mixed_moment_pair(a, a, n, t);
    x
}

/// Companion moment E[Tr(A V_t) Tr(A V_t)] (no conjugation).
pub fn mixed_moment_companion(a: &ComplexMatrix, n: usize, t: f64) -> Complex64 {
    let (_, y) = mixed_moment_pair(a, a, n, t);
    y
}

/// Two-matrix generalization: returns
/// (E[Tr(B V_t C V_t)], E[Tr(B V_t) Tr(C V_t)]). The pair (x, y) solves
/// x' = -y/n, y' = -x/n with x(0) = Tr(BC), y(0) = Tr(B) Tr(C).
pub fn mixed_moment_pair(
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    n: usize,
    t: f64,
) -> (Complex64, Complex64) {
    let s = t / n as f64;
    let x0 = trace_product(b, c).expect("same dimension");
    let y0 = b.trace() * c.trace();
    let x = x0 * s.cosh() - y0 * s.sinh();
    let y = y0 * s.cosh() - x0 * s.sinh();
    (x, y)
}

/// u_{C,D}(t) = E[Tr(V_t C V_t* D)] = (1/n)(e^t - 1) Tr C Tr D + Tr(CD).
pub fn u_cd(c: &ComplexMatrix, d: &ComplexMatrix, n: usize, t: f64) -> Result<Complex64> {
    let tr_cd = trace_product(c, d)?;
    Ok(c.trace() * d.trace() * (t.exp_m1() / n as f64) + tr_cd)
}

/// v_{C,D}(t) = E[Tr(V_t C) Tr(V_t* D)] = (1/n)(e^t - 1) Tr(CD) + Tr C Tr D.
pub fn v_cd(c: &ComplexMatrix, d: &ComplexMatrix, n: usize, t: f64) -> Result<Complex64> {
    let tr_cd = trace_product(c, d)?;
    Ok(tr_cd * (t.exp_m1() / n as f64) + c.trace() * d.trace())
}

/// Scalar ingredients of the fourth-moment formula, derived under the
/// normalization Tr(A A*) = n. `assemble` evaluates
/// E[|Tr(A V_t A V_t)|^2] for the normalized matrix.
#[derive(Debug, Clone)]
pub struct SecondMomentInternals {
    pub n: usize,
    pub kappa: f64,
    pub theta: f64,
    pub mu: f64,
    pub nu: f64,
    /// |Tr(A^2)|^2 of the normalized matrix; the value of the assembly at
    /// t = 0.
    pub tr_a2_sq: f64,
    /// Tr(A A A* A*) / n - 1 of the normalized matrix (coefficient of the
    /// (e^t - 1) source term in w).
    t2_over_n_minus_1: f64,
}

impl SecondMomentInternals {
    /// Requires n >= 3 (denominators n^2 - 1, n^2 - 4) and A != 0.
    pub fn new(a: &ComplexMatrix, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(UbmError::InvalidArgument(format!(
                "fourth-moment formula undefined below n=3 (got n={n})"
            )));
        }
        let a_adj = a.adjoint();
        let tr_aa = trace_product(a, &a_adj)?.re;
        if tr_aa <= 0.0 {
            return Err(UbmError::InvalidArgument(
                "fourth-moment formula requires A != 0".into(),
            ));
        }
        // Normalize so Tr(B B*) = n.
        let b = a.scale(Complex64::new((n as f64 / tr_aa).sqrt(), 0.0));
        let b_adj = b.adjoint();
        let nf = n as f64;

        let tr_b = b.trace();
        let tr_b2 = trace_product(&b, &b)?;
        let bbs = b.mul(&b_adj)?; // B B*
        let bsb = b_adj.mul(&b)?; // B* B
        let t1 = trace_product(&bbs, &bbs)?.re; // Tr(B B* B B*)
        let t2 = trace_product(&bbs, &bsb)?.re; // Tr(B B B* B*) via cyclic shift
        let t3 = trace_product(&b_adj, &bbs)?; // Tr(B* B B*)

        let kappa = t1 / nf - 1.0;
        let theta =
            2.0 - t1 / nf - t2 / nf - tr_b.norm_sqr() + (tr_b * t3).re;
        let denom1 = nf * nf - 1.0;
        let denom4 = nf * nf - 4.0;
        let part_e2t = 2.0 * nf * kappa / denom1;
        let part_et = 4.0 * nf * theta / denom4;
        let g0 = (tr_b * tr_b * tr_b2.conj()).re;
        let mu = g0 - part_e2t - part_et;
        let nu = -0.5 * tr_b2.norm_sqr() - 0.5 * tr_b.norm_sqr().powi(2)
            + 2.0 * (tr_b * t3).re
            - 2.0 * nf * nf * kappa / denom1
            - 2.0 * nf * nf * theta / denom4;

        Ok(SecondMomentInternals {
            n,
            kappa,
            theta,
            mu,
            nu,
            tr_a2_sq: tr_b2.norm_sqr(),
            t2_over_n_minus_1: t2 / nf - 1.0,
        })
    }

    /// Coefficients of (e^t - 1) and (e^{2t} - 1) in w, i.e. the exponential
    /// part of the assembled fourth moment for the normalized matrix.
    pub fn exp_coefficients(&self) -> (f64, f64) {
        let nf = self.n as f64;
        (
            -8.0 * self.theta / (nf * nf - 4.0) + 4.0 * self.t2_over_n_minus_1,
            -2.0 * self.kappa / (nf * nf - 1.0) + 2.0,
        )
    }

    /// The inhomogeneous part w(t); w(0) = 0.
    pub fn w(&self, t: f64) -> f64 {
        let nf = self.n as f64;
        let e2t = (2.0 * t).exp_m1();
        let et = t.exp_m1();
        -2.0 * self.kappa / (nf * nf - 1.0) * e2t - 8.0 * self.theta / (nf * nf - 4.0) * et
            + 2.0 * e2t
            + 4.0 * self.t2_over_n_minus_1 * et
    }

    /// E[|Tr(B V_t B V_t)|^2] for the normalized matrix B.
    pub fn assemble(&self, t: f64) -> f64 {
        let s = 2.0 * t / self.n as f64;
        self.tr_a2_sq - self.mu * s.sinh() - self.nu * (s.cosh() - 1.0) + self.w(t)
    }
}

/// E[|Tr(A V_t A V_t)|^2], exact for n >= 3. General A is handled by the
/// quartic rescaling A -> A sqrt(n / Tr(A A*)).
pub fn second_moment(a: &ComplexMatrix, n: usize, t: f64) -> Result<f64> {
    let internals = SecondMomentInternals::new(a, n)?;
    let tr_aa = trace_product(a, &a.adjoint())?.re;
    let scale = tr_aa / n as f64;
    Ok(scale * scale * internals.assemble(t))
}

/// Limit data for the rescaled linear-statistic process: limits a_l of
/// Tr(A_l)/n, p_{l,l'} of Tr(A_l A_l')/n, q_{l,l'} of Tr(A_l A_l'*)/n, and
/// the time-scale limit alpha.
#[derive(Debug, Clone)]
pub struct LimitData {
    pub a: Vec<Complex64>,
    pub p: ComplexMatrix,
    pub q: ComplexMatrix,
    pub alpha: Alpha,
}

impl LimitData {
    pub fn new(a: Vec<Complex64>, p: ComplexMatrix, q: ComplexMatrix, alpha: Alpha) -> Result<Self> {
        let k = a.len();
        if p.dim() != k || q.dim() != k {
            return Err(UbmError::DimensionMismatch {
                left: p.dim(),
                right: k,
            });
        }
        // p is symmetric (Tr(A_l A_l') does not depend on the order).
        for l in 0..k {
            for m in 0..k {
                if (p.get(l, m) - p.get(m, l)).norm() > 1e-9 {
                    return Err(UbmError::InvalidArgument(
                        "p matrix must be symmetric".into(),
                    ));
                }
            }
        }
        // q is Hermitian nonnegative.
        let herm = HermitianMatrix::new(q.clone())
            .map_err(|_| UbmError::InvalidArgument("q matrix must be Hermitian".into()))?;
        let (evals, _) = herm.eig()?;
        if let Some(&min) = evals.first() {
            if min < -tol::PSD_EIGENVALUE_CLAMP {
                return Err(UbmError::NotNonnegative {
                    min_eigenvalue: min,
                });
            }
        }
        Ok(LimitData { a, p, q, alpha })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }
}

/// Covariances of the Gaussian limit process at times (t, s): the Hermitian
/// part E[X_{t,l} conj(X_{s,l'})] = q_{l,l'} min(t,s), and the pseudo part
/// E[X_{t,l} X_{s,l'}] evaluated at m = min(t,s) with the three-regime
/// branch. Unequal times reduce to min(t,s) through independent increments.
pub fn limit_covariance(
    data: &LimitData,
    t: f64,
    s: f64,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if t < 0.0 || s < 0.0 {
        return Err(UbmError::InvalidArgument(format!(
            "times must be nonnegative (got t={t}, s={s})"
        )));
    }
    let m = t.min(s);
    let k = data.k();
    let herm = data.q.scale(Complex64::new(m, 0.0));
    let pseudo = match data.alpha {
        Alpha::Zero => data.p.scale(Complex64::new(-m, 0.0)),
        Alpha::Finite(alpha) => {
            let log_term = (alpha * m).ln_1p();
            let p_part = data.p.scale(Complex64::new(-log_term / alpha, 0.0));
            let a_coeff = log_term * log_term / (2.0 * alpha);
            ComplexMatrix::from_fn(k, |l, lp| {
                p_part.get(l, lp) + data.a[l] * data.a[lp] * a_coeff
            })
        }
        Alpha::Infinity => ComplexMatrix::zeros(k),
    };
    Ok((herm, pseudo))
}

/// Entrywise covariances of the limiting corner process M_t: returns
/// (E[M_ab conj(M_cd)], E[M_ab M_cd]) = (t d_ac d_bd, -f_alpha(t) d_ad d_bc).
/// Indices are zero-based.
pub fn corner_limit_covariance(
    alpha: Alpha,
    t: f64,
    indices: (usize, usize, usize, usize),
) -> (Complex64, Complex64) {
    let (a, b, c, d) = indices;
    let herm = if a == c && b == d { t } else { 0.0 };
    let pseudo = if a == d && b == c { -f_alpha(alpha, t) } else { 0.0 };
    (Complex64::new(herm, 0.0), Complex64::new(pseudo, 0.0))
}

/// E[|Tr(A U)|^2] = Tr(A A*) / n for Haar U.
pub fn haar_moment_second(a: &ComplexMatrix) -> Result<f64> {
    let n = a.dim() as f64;
    Ok(trace_product(a, &a.adjoint())?.re / n)
}

/// Ceiling for E[|Tr(A U A U)|^2] under Haar: 100 (Tr A A*)^2 / n^2.
/// Requires n >= 3.
pub fn haar_moment_fourth_bound(a: &ComplexMatrix) -> Result<f64> {
    let n = a.dim();
    if n < 3 {
        return Err(UbmError::InvalidArgument(format!(
            "fourth-moment bound requires n >= 3 (got n={n})"
        )));
    }
    let tr = trace_product(a, &a.adjoint())?.re;
    Ok(100.0 * tr * tr / (n as f64 * n as f64))
}

/// Number of exactly-nonzero entries.
pub fn nonzero_count(a: &ComplexMatrix) -> usize {
    let n = a.dim();
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            if a.get(i, j) != Complex64::new(0.0, 0.0) {
                count += 1;
            }
        }
    }
    count
}

/// Upper bounds for uniform-permutation trace moments:
/// E|Tr(A S)| <= sqrt(C_A) sqrt(Tr(A A*)) / n and
/// E|Tr(A S B S)| <= (n - 1 + sqrt(C_A C_B)) sqrt(Tr AA*) sqrt(Tr BB*) / (n(n-1)),
/// where C_X counts nonzero entries. Requires n >= 2.
pub fn permutation_trace_bounds(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(f64, f64)> {
    let n = a.dim();
    if n < 2 {
        return Err(UbmError::InvalidArgument(
            "permutation trace bounds require n >= 2".into(),
        ));
    }
    if b.dim() != n {
        return Err(UbmError::DimensionMismatch {
            left: n,
            right: b.dim(),
        });
    }
    let nf = n as f64;
    let ca = nonzero_count(a) as f64;
    let cb = nonzero_count(b) as f64;
    let fro_a = trace_product(a, &a.adjoint())?.re.max(0.0).sqrt();
    let fro_b = trace_product(b, &b.adjoint())?.re.max(0.0).sqrt();
    let first = ca.sqrt() * fro_a / nf;
    let second = (nf - 1.0 + (ca * cb).sqrt()) / (nf * (nf - 1.0)) * fro_a * fro_b;
    Ok((first, second))
}

/// Covariance of the time-t marginal of the permutation-start limit process,
/// with the initial value C removed: the limit vector is (Z_{1,t},...,Z_{k,t}) P
/// (row-vector convention, P Hermitian with P^2 = q), so
/// E[(ZP)_l conj (ZP)_{l'}] = t (P* P)_{l',l} = t q_{l',l} and the
/// pseudo-covariance vanishes.
#[derive(Debug, Clone)]
pub struct PermutationLimitLaw {
    /// Description of the law of C (the time-zero marginal), echoed verbatim.
    pub base_distribution: String,
    pub hermitian_covariance: ComplexMatrix,
    pub pseudo_covariance: ComplexMatrix,
}

pub fn permutation_limit_law(
    q: &ComplexMatrix,
    mu0: &str,
    t: f64,
) -> Result<PermutationLimitLaw> {
    let herm_q = HermitianMatrix::new(q.clone())
        .map_err(|_| UbmError::InvalidArgument("q matrix must be Hermitian".into()))?;
    let p = hermitian_sqrt(&herm_q)?;
    let p2 = p.as_matrix().mul(p.as_matrix())?;
    let k = q.dim();
    let herm = ComplexMatrix::from_fn(k, |l, lp| p2.get(lp, l) * t);
    Ok(PermutationLimitLaw {
        base_distribution: mu0.to_string(),
        hermitian_covariance: herm,
        pseudo_covariance: ComplexMatrix::zeros(k),
    })
}

/// Poisson(1) probability mass: e^{-1} / j!.
pub fn poisson_pmf(j: usize) -> f64 {
    let mut value = (-1.0_f64).exp();
    for i in 1..=j {
        value /= i as f64;
    }
    value
}

/// Exact identity-start moments of the rescaled linear statistic
/// X_t = alpha^{-1/2} Tr[A (V_{log(alpha t + 1)} - I)]. These hold at every
/// finite n, not only in the limit: E X_t = 0,
/// E|X_t|^2 = t Tr(A A*)/n, and E[X_t^2] = (y(s) - (Tr A)^2)/alpha with
/// y the companion moment at s = log(alpha t + 1).
pub fn statistic_hermitian_exact(a: &ComplexMatrix, t: f64) -> Result<f64> {
    let n = a.dim() as f64;
    Ok(t * trace_product(a, &a.adjoint())?.re / n)
}

pub fn statistic_pseudo_exact(a: &ComplexMatrix, n: usize, alpha_n: f64, t: f64) -> Complex64 {
    let s = (alpha_n * t).ln_1p();
    let y = mixed_moment_companion(a, n, s);
    let tr = a.trace();
    (y - tr * tr) / alpha_n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn em(n: usize, i: usize, j: usize) -> ComplexMatrix {
        ComplexMatrix::elementary(n, i, j)
    }

    #[test]
    fn f_alpha_branches_and_continuity() {
        assert_eq!(f_alpha(Alpha::Zero, 3.0), 3.0);
        let e_minus_1 = std::f64::consts::E - 1.0;
        assert!((f_alpha(Alpha::Finite(1.0), e_minus_1) - 1.0).abs() < 1e-14);
        assert_eq!(f_alpha(Alpha::Infinity, 5.0), 0.0);
        // Continuity guard near alpha = 0.
        assert!((f_alpha(Alpha::Finite(1e-8), 1.0) - 1.0).abs() < 1e-7);
        // f_alpha(t) <= t with equality only at alpha = 0.
        for &a in &[0.01, 1.0, 50.0] {
            for &t in &[0.1, 1.0, 7.0] {
                let f = f_alpha(Alpha::Finite(a), t);
                assert!(f < t && f > 0.0);
            }
        }
    }

    #[test]
    fn mixed_moment_trivial_cases() {
        // t = 0 gives Tr(A^2).
        let a = ComplexMatrix::from_fn(3, |i, j| Complex64::new((i + 2 * j) as f64, j as f64));
        let x0 = mixed_moment(&a, 3, 0.0);
        let tr_a2 = trace_product(&a, &a).unwrap();
        assert!((x0 - tr_a2).norm() < 1e-12);
        // n = 1, A = [1]: e^{-t}.
        let one = ComplexMatrix::identity(1);
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            assert!((mixed_moment(&one, 1, t).re - (-t).exp()).abs() < 1e-14);
        }
        // Traceless A: second term vanishes.
        let a = em(4, 0, 1);
        let t = 0.7_f64;
        let expect = trace_product(&a, &a).unwrap() * (t / 4.0).cosh();
        assert!((mixed_moment(&a, 4, t) - expect).norm() < 1e-14);
    }

    #[test]
    fn mixed_moment_solves_the_coupled_system() {
        // Finite differences: x' = -y/n and y' = -x/n to 1e-6.
        let a = ComplexMatrix::from_fn(5, |i, j| {
            Complex64::new((i * j) as f64 * 0.2 - 0.3, (i + j) as f64 * 0.1)
        });
        let n = 5;
        let h = 1e-5;
        for &t in &[0.2, 1.0, 2.3] {
            let (xp, yp) = mixed_moment_pair(&a, &a, n, t + h);
            let (xm, ym) = mixed_moment_pair(&a, &a, n, t - h);
            let (x, y) = mixed_moment_pair(&a, &a, n, t);
            let dx = (xp - xm) / (2.0 * h);
            let dy = (yp - ym) / (2.0 * h);
            assert!((dx + y / n as f64).norm() < 1e-6 * (1.0 + x.norm()));
            assert!((dy + x / n as f64).norm() < 1e-6 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn u_v_trivial_cases() {
        let n = 6;
        let c = ComplexMatrix::from_fn(n, |i, j| Complex64::new(i as f64 - j as f64, 0.4));
        let d = ComplexMatrix::from_fn(n, |i, j| Complex64::new((i * j) as f64 * 0.1, -0.2));
        // t = 0.
        let u0 = u_cd(&c, &d, n, 0.0).unwrap();
        let v0 = v_cd(&c, &d, n, 0.0).unwrap();
        assert!((u0 - trace_product(&c, &d).unwrap()).norm() < 1e-12);
        assert!((v0 - c.trace() * d.trace()).norm() < 1e-12);
        // C = D = I: u = n e^t.
        let id = ComplexMatrix::identity(n);
        let t = 0.9;
        let u = u_cd(&id, &id, n, t).unwrap();
        assert!((u.re - n as f64 * t.exp()).abs() < 1e-12 * n as f64 * t.exp());
        assert!(u.im.abs() < 1e-14);
    }

    #[test]
    fn second_moment_at_zero_is_tr_a2_squared() {
        for n in [3usize, 5, 8] {
            let a = ComplexMatrix::from_fn(n, |i, j| {
                Complex64::new(
                    ((i * 7 + j * 3) % 5) as f64 - 2.0,
                    ((i + 2 * j) % 3) as f64 * 0.5,
                )
            });
            let f0 = second_moment(&a, n, 0.0).unwrap();
            let tr_a2 = trace_product(&a, &a).unwrap().norm_sqr();
            assert!(
                (f0 - tr_a2).abs() <= 1e-10 * (1.0 + tr_a2),
                "n={n}: f(0)={f0}, |Tr A^2|^2={tr_a2}"
            );
        }
    }

    #[test]
    fn second_moment_scales_quartically() {
        let n = 4;
        let a = ComplexMatrix::from_fn(n, |i, j| Complex64::new(0.3 * i as f64, 0.2 * j as f64 - 0.1));
        let lambda = Complex64::new(1.3, -0.7);
        let scaled = a.scale(lambda);
        let t = 1.1;
        let f = second_moment(&a, n, t).unwrap();
        let fs = second_moment(&scaled, n, t).unwrap();
        let factor = lambda.norm_sqr().powi(2);
        assert!((fs - factor * f).abs() < 1e-9 * fs.abs().max(1.0));
    }

    #[test]
    fn second_moment_rejects_small_n() {
        let a = ComplexMatrix::identity(2);
        assert!(second_moment(&a, 2, 1.0).is_err());
    }

    #[test]
    fn limit_covariance_examples() {
        // alpha = 0, k = 1, q = p = 1, t = s = 2 gives (2, -2).
        let data = LimitData::new(
            vec![Complex64::new(1.0, 0.0)],
            ComplexMatrix::identity(1),
            ComplexMatrix::identity(1),
            Alpha::Zero,
        )
        .unwrap();
        let (h, p) = limit_covariance(&data, 2.0, 2.0).unwrap();
        assert!((h.get(0, 0).re - 2.0).abs() < 1e-14);
        assert!((p.get(0, 0).re + 2.0).abs() < 1e-14);

        // Finite alpha = 1, a = 1, p = 0, t = s = e - 1: pseudo = 1/2.
        let data = LimitData::new(
            vec![Complex64::new(1.0, 0.0)],
            ComplexMatrix::zeros(1),
            ComplexMatrix::identity(1),
            Alpha::Finite(1.0),
        )
        .unwrap();
        let t = std::f64::consts::E - 1.0;
        let (_, p) = limit_covariance(&data, t, t).unwrap();
        assert!((p.get(0, 0).re - 0.5).abs() < 1e-14);

        // t = s = 0: both zero.
        let (h, p) = limit_covariance(&data, 0.0, 0.0).unwrap();
        assert_eq!(h.get(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(p.get(0, 0), Complex64::new(0.0, 0.0));

        // Negative time rejected.
        assert!(limit_covariance(&data, -1.0, 0.0).is_err());
    }

    #[test]
    fn corner_limit_covariance_examples() {
        let (h, _) = corner_limit_covariance(Alpha::Finite(2.0), 1.0, (0, 1, 0, 1));
        assert_eq!(h.re, 1.0);
        let (_, p) = corner_limit_covariance(Alpha::Zero, 1.0, (0, 1, 1, 0));
        assert_eq!(p.re, -1.0);
        let (_, p) = corner_limit_covariance(Alpha::Infinity, 1.0, (0, 1, 1, 0));
        assert_eq!(p.re, 0.0);
        // Off-pattern indices vanish.
        let (h, p) = corner_limit_covariance(Alpha::Zero, 1.0, (0, 0, 1, 1));
        assert_eq!((h.re, p.re), (0.0, 0.0));
    }

    #[test]
    fn corner_covariance_reassembles_trace_form() {
        // sum_{ab,cd} X_ba Y_dc E[M_ab M_cd] = -f_alpha(t) Tr(XY) exactly.
        let p = 3;
        let x = ComplexMatrix::from_fn(p, |i, j| Complex64::new(0.3 * i as f64 - 0.1, j as f64 * 0.2));
        let y = ComplexMatrix::from_fn(p, |i, j| Complex64::new(0.05 * (i + j) as f64, -0.4 + i as f64 * 0.1));
        let alpha = Alpha::Finite(0.7);
        let t = 1.3;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut acc_h = Complex64::new(0.0, 0.0);
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for d in 0..p {
                        let (h, ps) = corner_limit_covariance(alpha, t, (a, b, c, d));
                        acc += x.get(b, a) * y.get(d, c) * ps;
                        acc_h += x.get(b, a) * y.get(d, c).conj() * h;
                    }
                }
            }
        }
        let expect = trace_product(&x, &y).unwrap() * (-f_alpha(alpha, t));
        assert!((acc - expect).norm() < 1e-12);
        // Hermitian side reassembles t Tr(X Y*).
        let expect_h = trace_product(&x, &y.adjoint()).unwrap() * t;
        assert!((acc_h - expect_h).norm() < 1e-12);
    }

    #[test]
    fn haar_moments() {
        let id8 = ComplexMatrix::identity(8);
        assert!((haar_moment_second(&id8).unwrap() - 1.0).abs() < 1e-15);
        let a = em(8, 0, 0).scale(Complex64::new((8.0_f64).sqrt(), 0.0));
        assert!((haar_moment_second(&a).unwrap() - 1.0).abs() < 1e-15);
        let id4 = ComplexMatrix::identity(4);
        assert!((haar_moment_fourth_bound(&id4).unwrap() - 100.0).abs() < 1e-12);
        assert!(haar_moment_fourth_bound(&ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn permutation_bound_examples() {
        // A = E_11, n = 4: first bound 1/4.
        let a = em(4, 0, 0);
        let (first, _) = permutation_trace_bounds(&a, &a).unwrap();
        assert!((first - 0.25).abs() < 1e-15);
        // Zero matrix: both bounds zero.
        let z = ComplexMatrix::zeros(4);
        let (f, s) = permutation_trace_bounds(&z, &z).unwrap();
        assert_eq!((f, s), (0.0, 0.0));
    }

    #[test]
    fn permutation_limit_law_cases() {
        // q = I_k: independent standard complex BMs.
        let law = permutation_limit_law(&ComplexMatrix::identity(3), "dirac", 2.0).unwrap();
        for l in 0..3 {
            for m in 0..3 {
                let expect = if l == m { 2.0 } else { 0.0 };
                assert!((law.hermitian_covariance.get(l, m).re - expect).abs() < 1e-10);
                assert_eq!(law.pseudo_covariance.get(l, m), Complex64::new(0.0, 0.0));
            }
        }
        // Scalar q = [2], t = 1: E|ZP|^2 = 2.
        let q = ComplexMatrix::identity(1).scale(Complex64::new(2.0, 0.0));
        let law = permutation_limit_law(&q, "poisson", 1.0).unwrap();
        assert!((law.hermitian_covariance.get(0, 0).re - 2.0).abs() < 1e-10);
        // t = 0: zero covariance.
        let law = permutation_limit_law(&q, "poisson", 0.0).unwrap();
        assert_eq!(law.hermitian_covariance.get(0, 0).norm(), 0.0);
        // Non-nonnegative q rejected.
        let bad = ComplexMatrix::identity(1).scale(Complex64::new(-1.0, 0.0));
        assert!(permutation_limit_law(&bad, "x", 1.0).is_err());
    }

    #[test]
    fn poisson_pmf_values() {
        let e1 = (-1.0_f64).exp();
        assert!((poisson_pmf(0) - e1).abs() < 1e-16);
        assert!((poisson_pmf(1) - e1).abs() < 1e-16);
        let total: f64 = (0..=20).map(poisson_pmf).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
