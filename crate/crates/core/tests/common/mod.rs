//! Shared support for the acceptance suite: an independent ODE-integration
//! oracle for the fourth-moment formula, random matrix generators, and a
//! small result collector that prints one line per criterion.

use num_complex::Complex64;
use ubm_core::linalg::{trace_product, ComplexMatrix};
use ubm_core::samplers::RngStream;

/// E[|Tr(A V_t A V_t)|^2] by numerically integrating the coupled system for
/// (f, g, h) = (E|Tr(AVAV)|^2, Re E[Tr(AV)^2 conj(Tr(AVAV))], E|Tr(AV)|^4)
/// with classic fourth-order Runge-Kutta. The only closed forms used are the
/// u/v source moments, so this route is independent of the
/// kappa/theta/mu/nu assembly it checks.
pub fn second_moment_by_ode(a: &ComplexMatrix, n: usize, ts: &[f64]) -> Vec<f64> {
    assert!(n >= 3);
    let nf = n as f64;
    let tr_aa = trace_product(a, &a.adjoint()).unwrap().re;
    let b = a.scale(Complex64::new((nf / tr_aa).sqrt(), 0.0));
    let b_adj = b.adjoint();
    let tr_b = b.trace();
    let tr_b2 = trace_product(&b, &b).unwrap();
    let bbs = b.mul(&b_adj).unwrap();
    let bsb = b_adj.mul(&b).unwrap();
    let t1 = trace_product(&bbs, &bbs).unwrap().re; // Tr(B B* B B*)
    let t2 = trace_product(&bbs, &bsb).unwrap().re; // Tr(B B B* B*)
    let t3 = trace_product(&b_adj, &bbs).unwrap(); // Tr(B* B B*)
    let tr_b_sq = tr_b.norm_sqr();

    let rhs = |t: f64, y: [f64; 3]| -> [f64; 3] {
        let [f, g, h] = y;
        let et = t.exp();
        let em1 = t.exp_m1();
        let u = nf * em1 + t2;
        let rv = em1 / nf * t1 + (tr_b * t3).re;
        let v2 = em1 + tr_b_sq;
        [
            (-2.0 * g + 4.0 * et * u) / nf,
            (-f - h + 4.0 * et * rv) / nf,
            (-2.0 * g + 4.0 * nf * et * v2) / nf,
        ]
    };

    let mut state = [
        tr_b2.norm_sqr(),
        (tr_b * tr_b * tr_b2.conj()).re,
        tr_b_sq * tr_b_sq,
    ];
    let mut t = 0.0;
    let scale = (tr_aa / nf).powi(2);
    let mut out = Vec::with_capacity(ts.len());
    for &target in ts {
        assert!(target >= t);
        let span = target - t;
        if span > 0.0 {
            let steps = (span / 2.5e-4).ceil().max(1.0) as usize;
            let h_step = span / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(t, state);
                let add = |s: [f64; 3], k: [f64; 3], c: f64| {
                    [s[0] + c * k[0], s[1] + c * k[1], s[2] + c * k[2]]
                };
                let k2 = rhs(t + h_step / 2.0, add(state, k1, h_step / 2.0));
                let k3 = rhs(t + h_step / 2.0, add(state, k2, h_step / 2.0));
                let k4 = rhs(t + h_step, add(state, k3, h_step));
                for i in 0..3 {
                    state[i] += h_step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                t += h_step;
            }
            t = target;
        }
        out.push(scale * state[0]);
    }
    out
}

pub fn random_matrix(n: usize, rng: &mut RngStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| {
        Complex64::new(rng.standard_normal(), rng.standard_normal())
    })
}

pub fn random_sparse(n: usize, density: f64, rng: &mut RngStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| {
        if rng.uniform() < density {
            Complex64::new(rng.standard_normal(), rng.standard_normal())
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Collects named checks for one criterion and prints the single verdict
/// line the suite is required to emit.
pub struct Criterion {
    id: &'static str,
    label: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    pub fn new(id: &'static str, label: &'static str) -> Self {
        Criterion {
            id,
            label,
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push((name.into(), ok));
    }

    /// Prints the verdict line and panics with the failed check names if any
    /// check failed.
    pub fn finish(self) {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(name, _)| name.as_str())
            .collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "ACCEPTANCE {} [{}]: {} ({}/{} checks)",
            self.id,
            self.label,
            verdict,
            self.checks.len() - failed.len(),
            self.checks.len()
        );
        for (name, ok) in &self.checks {
            println!("  {} {}", if *ok { "pass" } else { "FAIL" }, name);
        }
        assert!(
            failed.is_empty(),
            "criterion {} failed checks: {}",
            self.id,
            failed.join(", ")
        );
    }
}
