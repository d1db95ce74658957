//! Extraction laws: the limit `L` and decay factor `θ` from period-shifted samples.
//!
//! For the basic loop, four consecutive samples `x_n = x(t + nT)` determine the
//! cross-ratio `g`, from which `θ` follows; three samples and `θ` then give `L`.
//! For the drift loop the laws act on `h_n = x_n - q(t + nT)`: a three-sample
//! zeroth-order law and an implicit six-sample first-order law.

use crate::dynamics::{DriftParams, Trajectory};
use crate::error::{Error, Result};

/// Relative tolerance for vanishing denominators.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Largest admissible cross-ratio; beyond it θ turns complex.
pub const G_MAX: f64 = 1.0 / 3.0;
pub const G_MIN: f64 = -1.0;

fn degeneracy_scale(xs: &[f64]) -> f64 {
    xs.iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE)
}

/// Four samples `x(t + nT)`, `n = 0..3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleQuadruple {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl SampleQuadruple {
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Self { x0, x1, x2, x3 }
    }

    /// Reads the quadruple at grid index `index`.
    pub fn from_trajectory(traj: &Trajectory, index: usize) -> Result<Self> {
        Ok(Self {
            x0: traj.shifted_by_index(index, 0)?,
            x1: traj.shifted_by_index(index, 1)?,
            x2: traj.shifted_by_index(index, 2)?,
            x3: traj.shifted_by_index(index, 3)?,
        })
    }
}

/// Cross-ratio `g = (x0 - x1)(x2 - x3) / ((x1 - x2)(x0 - x3))`, clamped to
/// `[-1, 1/3]`. The flag reports whether clamping happened.
pub fn compute_g(q: &SampleQuadruple) -> Result<(f64, bool)> {
    let tol = DEGENERACY_TOL * degeneracy_scale(&[q.x0, q.x1, q.x2, q.x3]);
    let d12 = q.x1 - q.x2;
    let d03 = q.x0 - q.x3;
    if d12.abs() <= tol || d03.abs() <= tol {
        return Err(Error::DegenerateSamples("x1 - x2 or x0 - x3 vanishes"));
    }
    let g = ((q.x0 - q.x1) * (q.x2 - q.x3)) / (d12 * d03);
    if g.is_nan() {
        return Err(Error::DegenerateSamples("g is undefined"));
    }
    if g > G_MAX {
        Ok((G_MAX, true))
    } else if g < G_MIN {
        Ok((G_MIN, true))
    } else {
        Ok((g, false))
    }
}

/// Decay factor from the cross-ratio: the smaller root of `g θ² - (1 - g) θ + g = 0`.
///
/// Evaluated as `2g / ((1 - g) + √((1 - 3g)(1 + g)))`, which avoids the
/// cancellation of the textbook form near `g = 0`.
pub fn extract_theta(g: f64) -> Result<f64> {
    if g == 0.0 || !g.is_finite() {
        return Err(Error::InvalidG(g));
    }
    if g >= G_MAX {
        // Double root θ = 1 at the boundary, complex beyond it.
        return if g == G_MAX {
            Err(Error::ExtractionOutOfRange(1.0))
        } else {
            Err(Error::InvalidG(g))
        };
    }
    let disc = (1.0 - 3.0 * g) * (1.0 + g);
    if disc < 0.0 {
        return Err(Error::InvalidG(g));
    }
    let theta = 2.0 * g / ((1.0 - g) + disc.sqrt());
    if theta > 0.0 && theta < 1.0 {
        Ok(theta)
    } else {
        Err(Error::ExtractionOutOfRange(theta))
    }
}

/// Limit from three samples and the decay factor:
/// `L = ((x0 - x1) x2 + θ x0 (x2 - x1)) / (x0 - (1 + θ) x1 + θ x2)`.
pub fn extract_l_basic(x0: f64, x1: f64, x2: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::ExtractionOutOfRange(theta));
    }
    // Same law written relative to x2.
    let d0 = x0 - x2;
    let d1 = x1 - x2;
    let den = d0 - (1.0 + theta) * d1;
    if den.abs() <= DEGENERACY_TOL * degeneracy_scale(&[d0, d1]) || den == 0.0 {
        return Err(Error::DegenerateSamples("L denominator vanishes"));
    }
    Ok(x2 - theta * d0 * d1 / den)
}

/// Per-time extraction output; all vectors share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionSeries {
    pub t_grid: Vec<f64>,
    /// Cross-ratio after clamping; `None` where the samples were degenerate.
    pub g_values: Vec<Option<f64>>,
    pub theta_hat: Vec<Option<f64>>,
    pub l_hat: Vec<Option<f64>>,
    pub clamped_flags: Vec<bool>,
    /// Loop period the samples were shifted by.
    pub period: f64,
}

impl ExtractionSeries {
    fn with_capacity(n: usize, period: f64) -> Self {
        Self {
            t_grid: Vec::with_capacity(n),
            g_values: Vec::with_capacity(n),
            theta_hat: Vec::with_capacity(n),
            l_hat: Vec::with_capacity(n),
            clamped_flags: Vec::with_capacity(n),
            period,
        }
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    /// Fraction of samples whose cross-ratio was clamped.
    pub fn clamp_fraction(&self) -> f64 {
        if self.clamped_flags.is_empty() {
            return 0.0;
        }
        let n = self.clamped_flags.iter().filter(|&&c| c).count();
        n as f64 / self.clamped_flags.len() as f64
    }

    /// Last valid θ̂, if any.
    pub fn last_valid_theta(&self) -> Option<f64> {
        self.theta_hat.iter().rev().find_map(|v| *v)
    }

    fn push(&mut self, t: f64, g: Option<f64>, theta: Option<f64>, l: Option<f64>, clamped: bool) {
        self.t_grid.push(t);
        self.g_values.push(g);
        self.theta_hat.push(theta);
        self.l_hat.push(l);
        self.clamped_flags.push(clamped);
    }
}

/// How the basic L law obtains θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSource {
    /// θ̂ extracted at the same time point.
    Instant,
    /// A known θ.
    Exact(f64),
    /// Mean of the instantaneous θ̂ over `[t0, t0 + kT]`.
    Averaged(usize),
}

/// Number of extraction points a trajectory supports when `lookahead` periods
/// of data are needed beyond each point.
fn extraction_points(traj: &Trajectory, lookahead: usize) -> Result<usize> {
    let need = lookahead * traj.samples_per_period;
    if traj.len() <= need {
        return Err(Error::HorizonExceeded {
            required_t_end: traj.t0 + lookahead as f64 * traj.period,
            available_t_end: traj.t_end(),
        });
    }
    Ok(traj.len() - need)
}

/// Basic-loop extraction with instantaneous θ̂ at every grid point.
pub fn accelerate_basic(traj: &Trajectory) -> Result<ExtractionSeries> {
    accelerate_basic_with(traj, ThetaSource::Instant)
}

/// Basic-loop extraction at every grid point `t` with `t + 3T` on the trajectory.
///
/// Failures at individual points leave invalid (`None`) entries.
pub fn accelerate_basic_with(traj: &Trajectory, source: ThetaSource) -> Result<ExtractionSeries> {
    let n = extraction_points(traj, 3)?;
    let mut series = ExtractionSeries::with_capacity(n, traj.period);
    let mut triples = Vec::with_capacity(n);
    for i in 0..n {
        let q = SampleQuadruple::from_trajectory(traj, i)?;
        let (g, clamped) = match compute_g(&q) {
            Ok((g, c)) => (Some(g), c),
            Err(_) => (None, false),
        };
        let theta = match g {
            Some(g) if !clamped => extract_theta(g).ok(),
            _ => None,
        };
        series.push(traj.time_at(i), g, theta, None, clamped);
        triples.push((q.x0, q.x1, q.x2));
    }

    let fixed = match source {
        ThetaSource::Instant => None,
        ThetaSource::Exact(theta) => Some(theta),
        ThetaSource::Averaged(k) => Some(average_theta(&series, k)?),
    };
    for (i, &(x0, x1, x2)) in triples.iter().enumerate() {
        let theta = fixed.or(series.theta_hat[i]);
        series.l_hat[i] = theta.and_then(|th| extract_l_basic(x0, x1, x2, th).ok());
    }
    Ok(series)
}

/// Trapezoid-rule mean of the valid θ̂ over `[t0, t0 + kT]`.
///
/// Clamped samples carry no θ̂ and are skipped; the trapezoid runs over the
/// remaining samples in time order.
pub fn average_theta(series: &ExtractionSeries, k: usize) -> Result<f64> {
    let window = k as f64 * series.period;
    if k == 0 {
        return Err(Error::InvalidParams("averaging window needs k >= 1".into()));
    }
    let Some(&t_start) = series.t_grid.first() else {
        return Err(Error::EmptyWindow { window });
    };
    let t_stop = t_start + window * (1.0 + 1e-12);
    let pts: Vec<(f64, f64)> = series
        .t_grid
        .iter()
        .zip(&series.theta_hat)
        .take_while(|(&t, _)| t <= t_stop)
        .filter_map(|(&t, th)| th.map(|v| (t, v)))
        .collect();
    match pts.len() {
        0 => Err(Error::EmptyWindow { window }),
        1 => Ok(pts[0].1),
        _ => {
            let span = pts[pts.len() - 1].0 - pts[0].0;
            let area: f64 = pts
                .windows(2)
                .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
                .sum();
            Ok(area / span)
        }
    }
}

/// Zeroth-order drift law on `h_n = x(t + nT) - q(t + nT)`:
/// `L = (h1 h0 - (1 + A) h2 h0 + A h2 h1) / (-h2 + (1 + A) h1 - A h0)`.
pub fn extract_l_drift_zeroth(h0: f64, h1: f64, h2: f64, a_factor: f64) -> Result<f64> {
    if !(a_factor > 1.0) {
        return Err(Error::InvalidParams(format!(
            "growth factor must exceed 1, got {a_factor}"
        )));
    }
    let d0 = h0 - h2;
    let d1 = h1 - h2;
    let den = (1.0 + a_factor) * d1 - a_factor * d0;
    if den.abs() <= DEGENERACY_TOL * a_factor * degeneracy_scale(&[d0, d1]) || den == 0.0 {
        return Err(Error::DegenerateSamples("drift L denominator vanishes"));
    }
    Ok(h2 + d0 * d1 / den)
}

/// Coefficients `μ0..μ5` of the six-term identity `Σ μ_i z(t + iT) = 0`
/// satisfied by every `z_n = p0 + Aⁿ p1 + Bⁿ (p2 + Aⁿ p3 + A²ⁿ p4)`.
pub fn drift_first_order_coefficients(a_factor: f64, b_factor: f64) -> [f64; 6] {
    let a = a_factor;
    let b = b_factor;
    let s = 1.0 + a + a * a;
    let mu5 = 1.0;
    let mu4 = -(1.0 + a + b * s);
    let mu3 = a + b * (1.0 + a) * s + b * b * a * s;
    let mu2 = -(a * b * s + (a + 1.0) * b * b * (a + a * a + a * a * a) + a.powi(3) * b.powi(3));
    let mu1 = a * b * b * (a + a * a + a * a * a) + a.powi(3) * b.powi(3) * (1.0 + a);
    let mu0 = -a.powi(4) * b.powi(3);
    [mu0, mu1, mu2, mu3, mu4, mu5]
}

/// `P(u) = Σ_i μ_i Π_{j≠i} (d_j - u)` and its derivative, `d_j = h_j - c`.
fn first_order_poly(mu: &[f64; 6], d: &[f64; 6], u: f64) -> (f64, f64) {
    let r: Vec<f64> = d.iter().map(|dj| dj - u).collect();
    let mut p = 0.0;
    let mut dp = 0.0;
    for (i, &mu_i) in mu.iter().enumerate() {
        let mut prod = 1.0;
        for (j, rj) in r.iter().enumerate() {
            if j != i {
                prod *= rj;
            }
        }
        p += mu_i * prod;
        for k in 0..6 {
            if k == i {
                continue;
            }
            let mut prod = 1.0;
            for (j, rj) in r.iter().enumerate() {
                if j != i && j != k {
                    prod *= rj;
                }
            }
            dp -= mu_i * prod;
        }
    }
    (p, dp)
}

/// Safeguarded Newton on a sign-changing bracket `[lo, hi]`.
fn solve_bracketed(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let (flo, _) = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let lo_sign = flo.signum();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > lo.min(hi) && newton < lo.max(hi) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let width = (hi - lo).abs();
        if (next - x).abs() <= 1e-16 * x.abs().max(1e-300) || width <= 4.0 * f64::EPSILON * x.abs()
        {
            return next;
        }
        x = next;
    }
    x
}

/// First-order drift law: the root `L` of `Σ_i μ_i Π_{j≠i} (h_j - L)` closest
/// to `l_seed`, with `h_j = x_j - q_j`.
///
/// The bracket grows geometrically on both sides of the seed; the first side
/// to change sign is refined by safeguarded Newton.
pub fn extract_l_drift_first(
    x_samples: &[f64; 6],
    q_samples: &[f64; 6],
    a_factor: f64,
    b_factor: f64,
    l_seed: f64,
) -> Result<f64> {
    if !l_seed.is_finite() {
        return Err(Error::InvalidParams("seed must be finite".into()));
    }
    let mu = drift_first_order_coefficients(a_factor, b_factor);
    let mut d = [0.0; 6];
    for j in 0..6 {
        d[j] = x_samples[j] - q_samples[j] - l_seed;
    }
    let f = |u: f64| first_order_poly(&mu, &d, u);
    let (p0, _) = f(0.0);
    if p0 == 0.0 {
        return Ok(l_seed);
    }
    let spread = degeneracy_scale(&d);
    let mut step = 1e-9 * spread;
    while step <= 1e3 * spread.max(1.0) {
        let (pl, _) = f(-step);
        let (pr, _) = f(step);
        let left = pl.signum() != p0.signum();
        let right = pr.signum() != p0.signum();
        let u = match (left, right) {
            (false, false) => {
                step *= 2.0;
                continue;
            }
            (true, false) => solve_bracketed(f, -step, 0.0),
            (false, true) => solve_bracketed(f, 0.0, step),
            (true, true) => {
                let ul = solve_bracketed(f, -step, 0.0);
                let ur = solve_bracketed(f, 0.0, step);
                if ul.abs() <= ur.abs() {
                    ul
                } else {
                    ur
                }
            }
        };
        return Ok(l_seed + u);
    }
    Err(Error::RootNotFound { residual: p0 })
}

/// Zeroth-order drift extraction at every grid point with `t + 2T` available.
pub fn accelerate_drift_zeroth(
    traj: &Trajectory,
    params: &DriftParams,
) -> Result<ExtractionSeries> {
    let n = extraction_points(traj, 2)?;
    let a = params.growth_factor();
    let mut series = ExtractionSeries::with_capacity(n, traj.period);
    for i in 0..n {
        let h = drift_h(traj, params, i, 3)?;
        let l = extract_l_drift_zeroth(h[0], h[1], h[2], a).ok();
        series.push(traj.time_at(i), None, None, l, false);
    }
    Ok(series)
}

/// First-order drift extraction at every grid point with `t + 5T` available,
/// seeded by the zeroth-order law.
pub fn accelerate_drift_first(traj: &Trajectory, params: &DriftParams) -> Result<ExtractionSeries> {
    let n = extraction_points(traj, 5)?;
    let a = params.growth_factor();
    let b = params.decay_factor();
    let mut series = ExtractionSeries::with_capacity(n, traj.period);
    for i in 0..n {
        let mut xs = [0.0; 6];
        let mut qs = [0.0; 6];
        for k in 0..6 {
            xs[k] = traj.shifted_by_index(i, k)?;
            qs[k] = params.q(traj.time_at(i + k * traj.samples_per_period));
        }
        let l = extract_l_drift_zeroth(xs[0] - qs[0], xs[1] - qs[1], xs[2] - qs[2], a)
            .and_then(|seed| extract_l_drift_first(&xs, &qs, a, b, seed))
            .ok();
        series.push(traj.time_at(i), None, None, l, false);
    }
    Ok(series)
}

fn drift_h(
    traj: &Trajectory,
    params: &DriftParams,
    index: usize,
    count: usize,
) -> Result<Vec<f64>> {
    (0..count)
        .map(|k| {
            let x = traj.shifted_by_index(index, k)?;
            Ok(x - params.q(traj.time_at(index + k * traj.samples_per_period)))
        })
        .collect()
}
