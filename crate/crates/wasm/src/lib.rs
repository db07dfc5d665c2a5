//! Browser demo bindings: three interactive views over the core simulator.
//!
//! The demo logic lives in plain functions returning flat `f64` buffers so it
//! can be unit-tested natively; the `#[wasm_bindgen]` wrappers only exist on
//! wasm32. Build the web bundle with
//! `wasm-pack build crates/wasm --target web --out-dir www/pkg`.

use num_complex::Complex64;
use ubm_core::engine::{corner_process, rescaled_grid, simulate_path, InitialLaw, TimeGrid};
use ubm_core::linalg::{trace_product, ComplexMatrix};
use ubm_core::oracles::{f_alpha, mixed_moment, poisson_pmf, Alpha};
use ubm_core::samplers::{random_permutation, RngStream};

/// One simulated 2x2 corner trajectory of sqrt(n/alpha)(V_{log(alpha t+1)} - I)
/// on a uniform outer grid.
///
/// Layout per grid point: t, then (re, im) for entries (0,0), (0,1), (1,0),
/// (1,1), then the running Hermitian and skew squared norms: 11 numbers.
pub fn corner_trajectory_data(
    n: usize,
    alpha: f64,
    t_max: f64,
    points: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if n < 2 || points < 2 || !(t_max > 0.0) || !(alpha > 0.0) {
        return Err("need n >= 2, points >= 2, t_max > 0, alpha > 0".into());
    }
    let outer: Vec<f64> = (0..=points)
        .map(|j| t_max * j as f64 / points as f64)
        .collect();
    // Resolve each outer interval with at least a few inner steps.
    let s_max = (alpha * t_max).ln_1p();
    let step_cap = (s_max / (3.0 * points as f64)).min(0.05).max(1e-6);
    let grid = rescaled_grid(alpha, &outer, step_cap).map_err(|e| e.to_string())?;
    let mut rng = RngStream::new(seed, 0);
    let path = simulate_path(n, &InitialLaw::Identity, &grid, &mut rng).map_err(|e| e.to_string())?;
    let corners = corner_process(&path, 2, alpha).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(corners.len() * 11);
    for (j, m) in corners.iter().enumerate() {
        out.push(outer[j]);
        let mut h2 = 0.0;
        let mut s2 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let z = m.get(a, b);
                out.push(z.re);
                out.push(z.im);
                let w = m.get(b, a).conj();
                h2 += ((z + w) * 0.5).norm_sqr();
                s2 += ((z - w) * 0.5).norm_sqr();
            }
        }
        out.push(h2);
        out.push(s2);
    }
    Ok(out)
}

/// Limit ratio (t - f_alpha(t)) / (t + f_alpha(t)) of Hermitian to skew
/// corner variance, at the finite scale value alpha.
pub fn corner_ratio_theory(alpha: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let f = f_alpha(Alpha::Finite(alpha), t);
    (t - f) / (t + f)
}

/// Fixed-point histogram of uniform random permutations against Poisson(1).
///
/// Layout: bins+1 empirical frequencies for counts 0..=bins (last bin lumps
/// the tail), then bins+1 Poisson(1) masses, then the total-variation
/// distance: 2(bins+1) + 1 numbers.
pub fn fixed_point_histogram_data(
    n: usize,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if n < 2 || samples < 10 || bins < 2 {
        return Err("need n >= 2, samples >= 10, bins >= 2".into());
    }
    let mut empirical = vec![0.0_f64; bins + 1];
    for rep in 0..samples {
        let mut rng = RngStream::new(seed, rep as u64);
        let perm = random_permutation(n, &mut rng);
        let fixed = perm.iter().enumerate().filter(|(i, &v)| *i == v).count();
        empirical[fixed.min(bins)] += 1.0 / samples as f64;
    }
    let mut pmf = vec![0.0_f64; bins + 1];
    let mut tail = 1.0;
    for (j, slot) in pmf.iter_mut().enumerate().take(bins) {
        *slot = poisson_pmf(j);
        tail -= *slot;
    }
    pmf[bins] = tail.max(0.0);
    let tv = 0.5
        * empirical
            .iter()
            .zip(&pmf)
            .map(|(e, p)| (e - p).abs())
            .sum::<f64>();
    let mut out = empirical;
    out.extend_from_slice(&pmf);
    out.push(tv);
    Ok(out)
}

/// Exact curve E[Tr(A V_t A V_t)] for A = sqrt(n) E_11 with a small Monte
/// Carlo overlay.
///
/// Layout per grid point: t, exact real part, Monte Carlo mean, Monte Carlo
/// standard error: 4 numbers.
pub fn mixed_moment_curve_data(
    n: usize,
    t_max: f64,
    points: usize,
    paths: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if n < 1 || points < 2 || paths < 10 || !(t_max > 0.0) {
        return Err("need n >= 1, points >= 2, paths >= 10, t_max > 0".into());
    }
    let a = ComplexMatrix::elementary(n, 0, 0).scale(Complex64::new((n as f64).sqrt(), 0.0));
    let times: Vec<f64> = (0..=points)
        .map(|j| t_max * j as f64 / points as f64)
        .collect();
    let grid = TimeGrid::new(times.clone(), (t_max / points as f64).min(0.05))
        .map_err(|e| e.to_string())?;
    let mut sums = vec![Complex64::new(0.0, 0.0); times.len()];
    let mut sq = vec![0.0_f64; times.len()];
    for rep in 0..paths {
        let mut rng = RngStream::new(seed, rep as u64);
        let path =
            simulate_path(n, &InitialLaw::Identity, &grid, &mut rng).map_err(|e| e.to_string())?;
        for (j, state) in path.states.iter().enumerate() {
            let growth = (0.5 * path.grid.times()[j]).exp();
            let v = state.as_matrix().scale(Complex64::new(growth, 0.0));
            let av = a.mul(&v).map_err(|e| e.to_string())?;
            let tr = trace_product(&av, &av).map_err(|e| e.to_string())?;
            sums[j] += tr;
            sq[j] += tr.re * tr.re;
        }
    }
    let mut out = Vec::with_capacity(times.len() * 4);
    for (j, &t) in times.iter().enumerate() {
        let mean = sums[j].re / paths as f64;
        let var = (sq[j] / paths as f64 - mean * mean).max(0.0);
        out.push(t);
        out.push(mixed_moment(&a, n, t).re);
        out.push(mean);
        out.push((var / paths as f64).sqrt());
    }
    Ok(out)
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    #[wasm_bindgen]
    pub fn corner_trajectory(
        n: usize,
        alpha: f64,
        t_max: f64,
        points: usize,
        seed: u64,
    ) -> Result<Vec<f64>, JsValue> {
        super::corner_trajectory_data(n, alpha, t_max, points, seed).map_err(JsValue::from)
    }

    #[wasm_bindgen]
    pub fn corner_ratio(alpha: f64, t: f64) -> f64 {
        super::corner_ratio_theory(alpha, t)
    }

    #[wasm_bindgen]
    pub fn fixed_point_histogram(
        n: usize,
        samples: usize,
        bins: usize,
        seed: u64,
    ) -> Result<Vec<f64>, JsValue> {
        super::fixed_point_histogram_data(n, samples, bins, seed).map_err(JsValue::from)
    }

    #[wasm_bindgen]
    pub fn mixed_moment_curve(
        n: usize,
        t_max: f64,
        points: usize,
        paths: usize,
        seed: u64,
    ) -> Result<Vec<f64>, JsValue> {
        super::mixed_moment_curve_data(n, t_max, points, paths, seed).map_err(JsValue::from)
    }
}
