//! Drift perturbation series, its convergence bounds, and small acceleration demos.
//!
//! In `z = 1/y` the drift loop (without the ε² forcing) reads
//!
//! ```text
//! ż - 2ε sin²(ωt) z + δ q(t) z² = sin ωt,     q(t) = q₀ e^{-δt}
//! ```
//!
//! Expanding `z = Σ zₙ δⁿ` gives the triangular hierarchy
//!
//! ```text
//! ż₀ - 2ε sin²(ωt) z₀ = sin ωt,                          z₀(0) = z(0)
//! żₙ - 2ε sin²(ωt) zₙ = -q(t) Σ_{j<n} z_j z_{n-1-j},      zₙ(0) = 0
//! ```

use std::f64::consts::{E, PI};

use crate::dynamics::{integrate_system, DriftParams, GridSpec, Trajectory};
use crate::error::{Error, Result};

/// Default truncation order of the drift series.
pub const DEFAULT_SERIES_ORDER: usize = 4;

/// Relative tolerance of [`decompose_scaled_periodic`].
pub const DECOMPOSE_TOL: f64 = 1e-8;

/// One term `zₙ` of the drift series on the shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerm {
    pub order: usize,
    pub samples: Trajectory,
}

fn series_rhs(params: &DriftParams, t: f64, z: &[f64], dz: &mut [f64]) {
    let w = params.omega();
    let s = (w * t).sin();
    let k = 2.0 * params.epsilon * s * s;
    let q = params.q(t);
    dz[0] = k * z[0] + s;
    for n in 1..z.len() {
        let conv: f64 = (0..n).map(|j| z[j] * z[n - 1 - j]).sum();
        dz[n] = k * z[n] - q * conv;
    }
}

/// Solves `z₀ .. z_N` jointly on the grid `[grid.t0, t_end]`.
///
/// The hierarchy is triangular, so integrating it as one vector system is the
/// same as solving order by order while giving every RK4 stage access to the
/// lower orders at the stage times.
pub fn solve_series_terms(
    params: &DriftParams,
    max_order: usize,
    grid: GridSpec,
    t_end: f64,
) -> Result<Vec<SeriesTerm>> {
    params.validate()?;
    let mut y0 = vec![0.0; max_order + 1];
    y0[0] = params.z_init;
    let trajs = integrate_system(|t, z, dz| series_rhs(params, t, z, dz), &y0, grid, t_end)?;
    Ok(trajs
        .into_iter()
        .enumerate()
        .map(|(order, samples)| SeriesTerm { order, samples })
        .collect())
}

/// Truncated sum `Σ zₙ(t) δⁿ` at a grid time `t`.
pub fn series_sum(terms: &[SeriesTerm], delta: f64, t: f64) -> Result<f64> {
    let mut acc = 0.0;
    for term in terms.iter().rev() {
        acc = acc * delta + term.samples.value_at(t)?;
    }
    Ok(acc)
}

/// Truncated sum at every grid point.
pub fn series_sum_trajectory(terms: &[SeriesTerm], delta: f64) -> Result<Trajectory> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidParams("no series terms".into()))?;
    let values = (0..first.samples.len())
        .map(|i| {
            terms
                .iter()
                .rev()
                .fold(0.0, |acc, term| acc * delta + term.samples.values[i])
        })
        .collect();
    Trajectory::new(first.samples.grid(), values)
}

/// Direct RK4 solve of the full equation with drift coupling `coupling` in
/// front of `q(t) z²`.
pub fn solve_full_riccati(
    params: &DriftParams,
    coupling: f64,
    grid: GridSpec,
    t_end: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let w = params.omega();
    let mut out = integrate_system(
        |t, z, dz| {
            let s = (w * t).sin();
            dz[0] = 2.0 * params.epsilon * s * s * z[0] + s - coupling * params.q(t) * z[0] * z[0];
        },
        &[params.z_init],
        grid,
        t_end,
    )?;
    Ok(out.pop().expect("one component"))
}

/// Full solution split as `z = z₀ + v`; returns the deviation `v`.
///
/// `v̇ = 2ε sin²(ωt) v - coupling · q(t) (z₀ + v)²` is integrated alongside
/// `z₀`, so `v` carries relative precision even when it is far below the
/// rounding level of `z`.
pub fn solve_full_deviation(
    params: &DriftParams,
    coupling: f64,
    grid: GridSpec,
    t_end: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let w = params.omega();
    let mut out = integrate_system(
        |t, y, dy| {
            let s = (w * t).sin();
            let k = 2.0 * params.epsilon * s * s;
            let z = y[0] + y[1];
            dy[0] = k * y[0] + s;
            dy[1] = k * y[1] - coupling * params.q(t) * z * z;
        },
        &[params.z_init, 0.0],
        grid,
        t_end,
    )?;
    Ok(out.pop().expect("two components"))
}

/// Largest `|Σ_{n≥1} zₙ δⁿ - v|` over grid points in `[t_from, t_to]`, where `v`
/// is the deviation from [`solve_full_deviation`] on the same grid.
pub fn series_discrepancy(
    terms: &[SeriesTerm],
    delta: f64,
    deviation: &Trajectory,
    t_from: f64,
    t_to: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, t) in deviation.times().enumerate() {
        if t < t_from - 1e-12 || t > t_to + 1e-12 {
            continue;
        }
        let mut acc = 0.0;
        for term in terms.iter().skip(1).rev() {
            acc = (acc + term.samples.values[i]) * delta;
        }
        worst = worst.max((acc - deviation.values[i]).abs());
    }
    Ok(worst)
}

/// Largest `|x(t)|` over grid points in `[t_from, t_to]`.
pub fn sup_abs_on(traj: &Trajectory, t_from: f64, t_to: f64) -> f64 {
    traj.times()
        .zip(&traj.values)
        .filter(|(t, _)| *t >= t_from - 1e-12 && *t <= t_to + 1e-12)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
}

/// Convergence certificate of the drift series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaReport {
    pub gamma: f64,
    /// `C = 4 (eδ)⁻¹ e^{ε/ω} |q₀|`.
    pub c_const: f64,
    /// `α₀ = |z(0)| e^{ε/(2ω) + ε t₀} + 2 e^{ε/ω} t₀`.
    pub alpha0: f64,
    /// `t₀ = 1/(2δ)`.
    pub horizon: f64,
    pub convergent: bool,
}

/// `Γ = 24 e^{2ε/ω} |q₀| (|z(0)| + 1/δ)`; the series converges on `[0, 1/(2δ)]`
/// when `Γ < 1`.
pub fn gamma_criterion(params: &DriftParams) -> GammaReport {
    let eps = params.epsilon;
    let delta = params.delta;
    let w = params.omega();
    let q0 = params.q0.abs();
    let z0 = params.z_init.abs();
    let gamma = 24.0 * (2.0 * eps / w).exp() * q0 * (z0 + 1.0 / delta);
    let horizon = 1.0 / (2.0 * delta);
    let c_const = 4.0 / (E * delta) * (eps / w).exp() * q0;
    let alpha0 = z0 * (eps / (2.0 * w) + eps * horizon).exp() + 2.0 * (eps / w).exp() * horizon;
    GammaReport {
        gamma,
        c_const,
        alpha0,
        horizon,
        convergent: gamma < 1.0,
    }
}

/// Majorizing sequence `α_{n+1} = C Σ_{j≤n} α_j α_{n-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSequence {
    pub values: Vec<f64>,
    /// Index at which the recursion left the finite range; `values` stops before it.
    pub overflow_at: Option<usize>,
}

pub fn alpha_sequence(c_const: f64, alpha0: f64, n_max: usize) -> AlphaSequence {
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(alpha0);
    for n in 0..n_max {
        let conv: f64 = (0..=n).map(|j| values[j] * values[n - j]).sum();
        let next = c_const * conv;
        if !next.is_finite() {
            return AlphaSequence {
                values,
                overflow_at: Some(n + 1),
            };
        }
        values.push(next);
    }
    AlphaSequence {
        values,
        overflow_at: None,
    }
}

/// n-th Taylor coefficient of `A(x) = (1 - √(1 - 4Cα₀x)) / (2Cx)`, i.e.
/// `-(1/2C) binom(1/2, n+1) (-4Cα₀)^{n+1}`.
pub fn generating_function_coefficient(c_const: f64, alpha0: f64, n: usize) -> f64 {
    // binom(1/2, m) (-4Cα₀)^m as one running product.
    let r = -4.0 * c_const * alpha0;
    let mut prod = 1.0;
    for i in 0..=n {
        let i = i as f64;
        prod *= (0.5 - i) / (i + 1.0) * r;
    }
    -prod / (2.0 * c_const)
}

/// Large-n asymptotic `(4C)ⁿ α₀^{n+1} / (√π (n+1)^{3/2})` of the coefficients.
pub fn stirling_coefficient(c_const: f64, alpha0: f64, n: usize) -> f64 {
    let m = (n + 1) as f64;
    (4.0 * c_const).powi(n as i32) * alpha0.powi(n as i32 + 1) / (PI.sqrt() * m.powf(1.5))
}

/// Splits `y(x) = α + a^{x/L} P(x)` with `P` periodic of period `L = shift`,
/// assuming `y(x) - a y(x - L)` is constant.
///
/// The constant is taken as the median of the grid residuals; both it and the
/// periodicity of `P` are checked to `1e-8` of the data scale.
pub fn decompose_scaled_periodic(
    samples: &Trajectory,
    a: f64,
    shift: f64,
) -> Result<(f64, Trajectory)> {
    if !(a > 0.0) || a == 1.0 || !a.is_finite() {
        return Err(Error::InvalidParams(format!(
            "scale factor must be positive and != 1, got {a}"
        )));
    }
    let m_f = shift / samples.step;
    let m = m_f.round();
    if m < 1.0 || (m_f - m).abs() > 1e-9 * m_f.abs() {
        return Err(Error::InvalidParams(format!(
            "shift {shift} is not a positive multiple of the grid step"
        )));
    }
    let m = m as usize;
    let y = &samples.values;
    if y.len() <= m {
        return Err(Error::HorizonExceeded {
            required_t_end: samples.t0 + shift,
            available_t_end: samples.t_end(),
        });
    }

    let mut residuals: Vec<f64> = (m..y.len()).map(|k| y[k] - a * y[k - m]).collect();
    let scale = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = DECOMPOSE_TOL * scale.max(f64::MIN_POSITIVE);
    residuals.sort_by(f64::total_cmp);
    let c = residuals[residuals.len() / 2];
    let spread = residuals.iter().fold(0.0f64, |s, r| s.max((r - c).abs()));
    if spread > tol * a.max(1.0) {
        return Err(Error::HypothesisViolated {
            max_residual: spread,
        });
    }

    let alpha = -c / (a - 1.0);
    let p = samples.map(|x, v| a.powf(-x / shift) * (v - alpha))?;
    let p_scale = p.values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let p_err = (m..p.len())
        .map(|k| (p.values[k] - p.values[k - m]).abs())
        .fold(0.0f64, f64::max);
    if p_err > DECOMPOSE_TOL * p_scale {
        return Err(Error::HypothesisViolated {
            max_residual: p_err,
        });
    }
    Ok((alpha, p))
}

/// Ascending coefficients of `Π (r - root)`.
pub fn annihilator(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &root in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= root * ci;
        }
        c = next;
    }
    c
}

/// Per-period growth factors expected in `zₙ`: `A` from the homogeneous part
/// and `A^k B^j` for `1 ≤ j ≤ n`, `0 ≤ k ≤ j + 1`. For `n = 0` the factors are
/// `{1, A}`.
pub fn series_growth_factors(a_factor: f64, b_factor: f64, order: usize) -> Vec<f64> {
    if order == 0 {
        return vec![1.0, a_factor];
    }
    let mut roots = vec![a_factor];
    for j in 1..=order {
        for k in 0..=j + 1 {
            roots.push(a_factor.powi(k as i32) * b_factor.powi(j as i32));
        }
    }
    roots
}

/// Largest relative residual of `Σ cᵢ x(t + iT)` over all grid `t` that fit,
/// with `c` the annihilator of `roots`.
pub fn annihilator_residual(traj: &Trajectory, roots: &[f64]) -> Result<f64> {
    let c = annihilator(roots);
    let deg = c.len() - 1;
    let m = traj.samples_per_period;
    if traj.len() <= deg * m {
        return Err(Error::HorizonExceeded {
            required_t_end: traj.t0 + deg as f64 * traj.period,
            available_t_end: traj.t_end(),
        });
    }
    let mut worst = 0.0f64;
    for k in 0..traj.len() - deg * m {
        let mut s = 0.0;
        let mut scale = 0.0;
        for (i, ci) in c.iter().enumerate() {
            let term = ci * traj.values[k + i * m];
            s += term;
            scale += term.abs();
        }
        if scale > 0.0 {
            worst = worst.max(s.abs() / scale);
        }
    }
    Ok(worst)
}

/// `S_n = Σ_{j=1}^{n} 1/j²`, summed from the small terms up.
pub fn partial_sum_basel(n: usize) -> f64 {
    (1..=n).rev().map(|j| 1.0 / (j as f64 * j as f64)).sum()
}

/// Richardson step `½ ((n+2)² S_{n+2} - 2 (n+1)² S_{n+1} + n² S_n)`, exact for
/// `S_n = L + a₁/n + a₂/n²`.
pub fn richardson_accelerate(s: impl Fn(usize) -> f64, n: usize) -> f64 {
    let w = |k: usize| (k * k) as f64;
    0.5 * (w(n + 2) * s(n + 2) - 2.0 * w(n + 1) * s(n + 1) + w(n) * s(n))
}
