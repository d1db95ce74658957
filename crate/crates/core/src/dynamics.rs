//! Extremum-seeking loop dynamics.
//!
//! The plant is the static quadratic map `f(x) = a + b (x - L)^2`, probed with the
//! dither `ε sin(ωt)` and demodulated by `sin(ωt)`. Writing `y = x - L`, the loop
//! reduces to the scalar Riccati equation
//!
//! ```text
//! ẏ = -εb (1 - cos 2ωt) y - b y² sin ωt - b ε² sin³ ωt + ν(t) sin ωt
//! ```
//!
//! The drift variant tracks `f(x, t) = (x - L - q(t))²` with `q(t) = q₀ e^{-δt}`
//! and `y = x - L - q`:
//!
//! ```text
//! ẏ = -2ε sin²(ωt) y - y² sin ωt - ε² sin³ ωt + δ q(t) - ν(t) sin ωt
//! ```
//!
//! All trajectories live on a period-aligned grid (`step = T / divisor`), so a
//! period shift `x(t + nT)` is an index offset.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default number of RK4 steps per loop period.
pub const DEFAULT_STEP_DIVISOR: usize = 2048;

/// Integration is aborted once the state leaves this band.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Relative tolerance used to decide whether a time lies on the sample grid.
const GRID_TOL: f64 = 1e-9;

/// Parameters of the basic loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopParams {
    /// Dither amplitude ε.
    pub epsilon: f64,
    /// Curvature gain b of the quadratic map.
    pub b: f64,
    /// Dither period T.
    pub period: f64,
    /// Location L of the extremum.
    pub l_true: f64,
    /// Initial state x(0).
    pub x_init: f64,
}

impl LoopParams {
    pub fn validate(&self) -> Result<()> {
        check_finite("epsilon", self.epsilon)?;
        check_finite("b", self.b)?;
        check_finite("period", self.period)?;
        check_finite("l_true", self.l_true)?;
        check_finite("x_init", self.x_init)?;
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidParams("epsilon must be positive".into()));
        }
        if self.b == 0.0 {
            return Err(Error::InvalidParams("b must be nonzero".into()));
        }
        if self.period <= 0.0 {
            return Err(Error::InvalidParams("period must be positive".into()));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Per-period contraction `θ = exp(-ε b T)` of the homogeneous solution.
    pub fn theta(&self) -> f64 {
        (-self.epsilon * self.b * self.period).exp()
    }

    /// Integration constant of the closed-form solution, `C = 1 / (x(0) - L)`.
    pub fn c_const(&self) -> f64 {
        1.0 / (self.x_init - self.l_true)
    }
}

/// Parameters of the drifting-optimum loop (unit curvature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub epsilon: f64,
    /// Drift rate δ.
    pub delta: f64,
    /// Drift amplitude q₀.
    pub q0: f64,
    pub period: f64,
    pub l_true: f64,
    /// `z(0) = 1 / y(0)` with `y = x - L - q`.
    pub z_init: f64,
}

impl DriftParams {
    pub fn validate(&self) -> Result<()> {
        check_finite("epsilon", self.epsilon)?;
        check_finite("delta", self.delta)?;
        check_finite("q0", self.q0)?;
        check_finite("period", self.period)?;
        check_finite("l_true", self.l_true)?;
        check_finite("z_init", self.z_init)?;
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidParams("epsilon must be positive".into()));
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidParams("delta must be positive".into()));
        }
        if self.period <= 0.0 {
            return Err(Error::InvalidParams("period must be positive".into()));
        }
        if self.z_init == 0.0 {
            return Err(Error::InvalidParams("z_init must be nonzero".into()));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Growth factor `A = exp(ε T)`.
    pub fn growth_factor(&self) -> f64 {
        (self.epsilon * self.period).exp()
    }

    /// Decay factor `B = exp(-δ T)`.
    pub fn decay_factor(&self) -> f64 {
        (-self.delta * self.period).exp()
    }

    /// Drift of the optimum, `q(t) = q₀ exp(-δ t)`.
    pub fn q(&self, t: f64) -> f64 {
        self.q0 * (-self.delta * t).exp()
    }

    /// Initial loop state `x(0) = L + q₀ + 1/z(0)`.
    pub fn x_init(&self) -> f64 {
        self.l_true + self.q0 + 1.0 / self.z_init
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be finite")))
    }
}

/// Seeded piecewise-constant noise `ν(t)`.
///
/// On `[k dt, (k+1) dt)` the signal equals `offset + amplitude * u_k`, where `u_k`
/// is the k-th uniform draw on `[-1, 1)` of a ChaCha8 stream. Draws are addressed
/// by word position, so `ν(t)` is a pure function of `(seed, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// N₀.
    pub amplitude: f64,
    /// Hold interval dt.
    pub hold_interval: f64,
    pub offset: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        check_finite("amplitude", self.amplitude)?;
        check_finite("hold_interval", self.hold_interval)?;
        check_finite("offset", self.offset)?;
        if self.amplitude < 0.0 {
            return Err(Error::InvalidParams("noise amplitude must be >= 0".into()));
        }
        if self.hold_interval <= 0.0 {
            return Err(Error::InvalidParams(
                "hold_interval must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Interval index holding time `t`.
    pub fn interval_index(&self, t: f64) -> u64 {
        (t / self.hold_interval).floor().max(0.0) as u64
    }

    /// The k-th uniform draw on `[-1, 1)`.
    pub fn draw(&self, k: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(2 * k as u128);
        let u: f64 = rng.gen();
        2.0 * u - 1.0
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return self.offset;
        }
        self.offset + self.amplitude * self.draw(self.interval_index(t))
    }
}

/// `ν(t)` for the given noise description.
pub fn piecewise_noise(spec: &NoiseSpec, t: f64) -> f64 {
    spec.value_at(t)
}

/// Right-hand side of the basic loop in `y = x - L`, including the ε² dither
/// forcing and optional noise.
pub fn basic_rhs(params: &LoopParams, noise: Option<&NoiseSpec>, t: f64, y: f64) -> f64 {
    let w = params.omega();
    let s = (w * t).sin();
    let eb = params.epsilon * params.b;
    let mut dy = -eb * (1.0 - (2.0 * w * t).cos()) * y
        - params.b * y * y * s
        - params.b * params.epsilon * params.epsilon * s * s * s;
    if let Some(n) = noise {
        dy += n.value_at(t) * s;
    }
    dy
}

/// Basic loop with the ε² forcing dropped: a Bernoulli equation with the
/// closed-form solution [`analytic_basic_solution`].
pub fn bernoulli_rhs(params: &LoopParams, t: f64, y: f64) -> f64 {
    let w = params.omega();
    let s = (w * t).sin();
    -params.epsilon * params.b * (1.0 - (2.0 * w * t).cos()) * y - params.b * y * y * s
}

/// Right-hand side of the drift loop in `y = x - L - q(t)`.
pub fn drift_rhs(params: &DriftParams, noise: Option<&NoiseSpec>, t: f64, y: f64) -> f64 {
    let w = params.omega();
    let s = (w * t).sin();
    let eps = params.epsilon;
    let mut dy =
        -2.0 * eps * s * s * y - y * y * s - eps * eps * s * s * s + params.delta * params.q(t);
    if let Some(n) = noise {
        dy -= n.value_at(t) * s;
    }
    dy
}

/// A period-aligned sampling grid starting at `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t0: f64,
    pub period: f64,
    pub samples_per_period: usize,
}

impl GridSpec {
    pub fn new(t0: f64, period: f64, samples_per_period: usize) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParams("grid period must be positive".into()));
        }
        if samples_per_period == 0 {
            return Err(Error::InvalidParams(
                "samples_per_period must be >= 1".into(),
            ));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidParams("grid start must be finite".into()));
        }
        Ok(Self {
            t0,
            period,
            samples_per_period,
        })
    }

    pub fn step(&self) -> f64 {
        self.period / self.samples_per_period as f64
    }

    /// Number of steps needed so that the grid reaches at least `t_end`.
    pub fn steps_to(&self, t_end: f64) -> usize {
        let span = (t_end - self.t0) / self.step();
        let n = span.round();
        if (span - n).abs() <= GRID_TOL * span.abs().max(1.0) {
            n as usize
        } else {
            span.ceil() as usize
        }
    }
}

/// Uniformly sampled scalar solution on a period-aligned grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub period: f64,
    pub samples_per_period: usize,
}

impl Trajectory {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams(
                "trajectory needs at least one sample".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(
                "trajectory samples must be finite".into(),
            ));
        }
        Ok(Self {
            t0: grid.t0,
            step: grid.step(),
            values,
            period: grid.period,
            samples_per_period: grid.samples_per_period,
        })
    }

    /// Builds a trajectory by sampling `f` on the grid up to `t_end`.
    pub fn from_fn(grid: GridSpec, t_end: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = grid.steps_to(t_end);
        let step = grid.step();
        let values = (0..=n).map(|k| f(grid.t0 + k as f64 * step)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            t0: self.t0,
            period: self.period,
            samples_per_period: self.samples_per_period,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.step
    }

    pub fn t_end(&self) -> f64 {
        self.time_at(self.values.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.time_at(k))
    }

    /// Grid index of `t`; errors when `t` is not (to rounding) a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let pos = (t - self.t0) / self.step;
        let k = pos.round();
        if k < 0.0 || (pos - k).abs() > GRID_TOL * pos.abs().max(1.0) {
            return Err(Error::OffGrid {
                t,
                t0: self.t0,
                step: self.step,
            });
        }
        Ok(k as usize)
    }

    /// Sample at grid index `index + n * samples_per_period`.
    pub fn shifted_by_index(&self, index: usize, n: usize) -> Result<f64> {
        let j = index + n * self.samples_per_period;
        self.values
            .get(j)
            .copied()
            .ok_or_else(|| Error::HorizonExceeded {
                required_t_end: self.time_at(j),
                available_t_end: self.t_end(),
            })
    }

    /// `x(t + nT)` by direct lookup.
    pub fn sample_shifted(&self, t: f64, n: usize) -> Result<f64> {
        let i = self.index_of(t)?;
        self.shifted_by_index(i, n)
    }

    /// Sample at grid time `t`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        self.sample_shifted(t, 0)
    }

    /// Applies `f` pointwise, keeping the grid.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.time_at(k), v))
            .collect();
        Self::new(self.grid(), values)
    }
}

/// `x(t + nT)` for a grid-aligned `t`.
pub fn sample_shifted(traj: &Trajectory, t: f64, n: usize) -> Result<f64> {
    traj.sample_shifted(t, n)
}

/// Classical fixed-step RK4 for a scalar field, sampled at every grid point.
pub fn integrate(
    rhs: impl Fn(f64, f64) -> f64,
    y0: f64,
    grid: GridSpec,
    t_end: f64,
) -> Result<Trajectory> {
    let mut out = integrate_system(
        |t, y: &[f64], dy: &mut [f64]| dy[0] = rhs(t, y[0]),
        &[y0],
        grid,
        t_end,
    )?;
    Ok(out.pop().expect("one component"))
}

/// Classical fixed-step RK4 for a vector field `rhs(t, y, dy)`; returns one
/// trajectory per component.
pub fn integrate_system(
    rhs: impl Fn(f64, &[f64], &mut [f64]),
    y0: &[f64],
    grid: GridSpec,
    t_end: f64,
) -> Result<Vec<Trajectory>> {
    if !(t_end > grid.t0) {
        return Err(Error::InvalidParams(format!(
            "t_end ({t_end}) must exceed t0 ({})",
            grid.t0
        )));
    }
    let dim = y0.len();
    if dim == 0 {
        return Err(Error::InvalidParams("empty state".into()));
    }
    if y0
        .iter()
        .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
    {
        return Err(Error::IntegrationDiverged { t: grid.t0 });
    }

    let n = grid.steps_to(t_end);
    let h = grid.step();
    let mut series: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut v = Vec::with_capacity(n + 1);
            v.push(y0[i]);
            v
        })
        .collect();

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for step in 0..n {
        let t = grid.t0 + step as f64 * h;
        rhs(t, &y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
        {
            return Err(Error::IntegrationDiverged {
                t: grid.t0 + (step + 1) as f64 * h,
            });
        }
        for (s, &v) in series.iter_mut().zip(&y) {
            s.push(v);
        }
    }

    series
        .into_iter()
        .map(|values| Trajectory::new(grid, values))
        .collect()
}

/// Simulates the basic loop from `x(0)` and returns `x(t)` on `[0, t_end]`.
pub fn simulate_basic(
    params: &LoopParams,
    noise: Option<&NoiseSpec>,
    samples_per_period: usize,
    t_end: f64,
) -> Result<Trajectory> {
    params.validate()?;
    if let Some(n) = noise {
        n.validate()?;
    }
    let grid = GridSpec::new(0.0, params.period, samples_per_period)?;
    let y = integrate(
        |t, y| basic_rhs(params, noise, t, y),
        params.x_init - params.l_true,
        grid,
        t_end,
    )?;
    y.map(|_, v| v + params.l_true)
}

/// Simulates the basic loop with the ε² forcing dropped (the Bernoulli model).
pub fn simulate_bernoulli(
    params: &LoopParams,
    samples_per_period: usize,
    t_end: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let grid = GridSpec::new(0.0, params.period, samples_per_period)?;
    let y = integrate(
        |t, y| bernoulli_rhs(params, t, y),
        params.x_init - params.l_true,
        grid,
        t_end,
    )?;
    y.map(|_, v| v + params.l_true)
}

/// Simulates the drift loop and returns `x(t) = y(t) + L + q(t)`.
pub fn simulate_drift(
    params: &DriftParams,
    noise: Option<&NoiseSpec>,
    samples_per_period: usize,
    t_end: f64,
) -> Result<Trajectory> {
    params.validate()?;
    if let Some(n) = noise {
        n.validate()?;
    }
    let grid = GridSpec::new(0.0, params.period, samples_per_period)?;
    let y = integrate(
        |t, y| drift_rhs(params, noise, t, y),
        1.0 / params.z_init,
        grid,
        t_end,
    )?;
    y.map(|t, v| v + params.l_true + params.q(t))
}

/// Integrating factor `x₀(t) = exp[-εbt + (εb / 2ω) sin 2ωt]` of the Bernoulli model.
pub fn homogeneous_factor(params: &LoopParams, t: f64) -> f64 {
    let eb = params.epsilon * params.b;
    let w = params.omega();
    (-eb * t + eb / (2.0 * w) * (2.0 * w * t).sin()).exp()
}

const SINGULAR_TOL: f64 = 1e-12;

fn analytic_from_integral(params: &LoopParams, c_const: f64, t: f64, integral: f64) -> Result<f64> {
    let denominator = c_const + params.b * integral;
    if !(denominator.abs() > SINGULAR_TOL) {
        return Err(Error::SingularSolution { t, denominator });
    }
    Ok(params.l_true + homogeneous_factor(params, t) / denominator)
}

/// Closed-form solution of the Bernoulli model,
/// `x(t) = L + x₀(t) / (C + b ∫₀ᵗ sin(ωs) x₀(s) ds)`.
///
/// The integral uses composite Simpson with a panel width no larger than
/// `T / 2048`.
pub fn analytic_basic_solution(params: &LoopParams, c_const: f64, t: f64) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidParams(format!("t must be >= 0, got {t}")));
    }
    let w = params.omega();
    let integrand = |s: f64| (w * s).sin() * homogeneous_factor(params, s);
    let h_max = params.period / DEFAULT_STEP_DIVISOR as f64;
    let integral = if t == 0.0 {
        0.0
    } else {
        let panels = 2 * ((t / (2.0 * h_max)).ceil() as usize).max(1);
        let h = t / panels as f64;
        let mut sum = integrand(0.0) + integrand(t);
        for k in 1..panels {
            let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += weight * integrand(k as f64 * h);
        }
        sum * h / 3.0
    };
    analytic_from_integral(params, c_const, t, integral)
}

/// Closed-form solution evaluated on a whole grid with a cumulative quadrature.
///
/// Even indices use composite Simpson from 0; odd indices use Simpson up to
/// three panels short followed by Simpson's 3/8 rule (index 1 integrates the
/// quadratic through the first three nodes). With an even number of samples
/// per period every rule is shift-compatible with the period, so the samples
/// keep the exact `x₀(t + T) = θ x₀(t)` structure up to rounding.
pub fn analytic_basic_trajectory(
    params: &LoopParams,
    c_const: f64,
    grid: GridSpec,
    t_end: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let n = grid.steps_to(t_end);
    let h = grid.step();
    let w = params.omega();
    let f: Vec<f64> = (0..=n.max(2))
        .map(|k| {
            let s = grid.t0 + k as f64 * h;
            (w * s).sin() * homogeneous_factor(params, s)
        })
        .collect();

    // Even-index Simpson prefix: simpson[j] = ∫ over nodes 0..=2j.
    let mut simpson = vec![0.0; n / 2 + 2];
    for j in 1..simpson.len() {
        let i = 2 * j;
        if i > f.len() - 1 {
            break;
        }
        simpson[j] = simpson[j - 1] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
    }

    let mut values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let integral = if k == 0 {
            0.0
        } else if k % 2 == 0 {
            simpson[k / 2]
        } else if k == 1 {
            h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
        } else {
            let m = k - 3;
            simpson[m / 2] + 3.0 * h / 8.0 * (f[m] + 3.0 * f[m + 1] + 3.0 * f[m + 2] + f[m + 3])
        };
        let t = grid.t0 + k as f64 * h;
        values.push(analytic_from_integral(params, c_const, t, integral)?);
    }
    Trajectory::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> LoopParams {
        LoopParams {
            epsilon: 0.01,
            b: 2.0,
            period: 3.0,
            l_true: 0.0,
            x_init: 1.3,
        }
    }

    #[test]
    fn omega_times_period_is_two_pi() {
        for period in [0.1, 1.0, 3.0, 7.7] {
            let p = LoopParams { period, ..fig2() };
            assert!((p.omega() * p.period - 2.0 * PI).abs() < 1e-15);
        }
        assert!((fig2().theta() - (-0.06f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn zero_amplitude_noise_is_the_offset() {
        let spec = NoiseSpec {
            amplitude: 0.0,
            hold_interval: 0.5,
            offset: 0.0,
            seed: 1,
        };
        assert_eq!(piecewise_noise(&spec, 3.3), 0.0);
        let spec = NoiseSpec {
            offset: 0.3,
            ..spec
        };
        assert_eq!(piecewise_noise(&spec, 7.2), 0.3);
    }

    #[test]
    fn noise_holds_within_an_interval() {
        let spec = NoiseSpec {
            amplitude: 1e-4,
            hold_interval: 0.5,
            offset: 0.0,
            seed: 42,
        };
        let a = piecewise_noise(&spec, 0.0);
        let b = piecewise_noise(&spec, 0.49);
        let c = piecewise_noise(&spec, 0.51);
        assert_eq!(a, b);
        assert_eq!(c, spec.offset + spec.amplitude * spec.draw(1));
        assert_ne!(a, c);
        assert!(a.abs() <= 1e-4 && c.abs() <= 1e-4);
    }

    #[test]
    fn basic_rhs_vanishes_at_origin() {
        let p = LoopParams {
            epsilon: 0.37,
            b: -4.0,
            ..fig2()
        };
        assert_eq!(basic_rhs(&p, None, 0.0, 0.0), 0.0);
    }

    #[test]
    fn basic_rhs_matches_hand_evaluation() {
        // t = T/4: ωt = π/2, sin = 1, cos 2ωt = -1.
        let p = LoopParams {
            epsilon: 0.01,
            b: 2.0,
            period: 3.0,
            l_true: 0.0,
            x_init: 1.3,
        };
        let y = 1.3;
        let expected = -0.01 * 2.0 * 2.0 * y - 2.0 * y * y - 2.0 * 1e-4;
        let got = basic_rhs(&p, None, 0.75, y);
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn drift_rhs_edge_values() {
        let p = DriftParams {
            epsilon: 0.1,
            delta: 0.4,
            q0: 0.0,
            period: 3.0,
            l_true: 0.0,
            z_init: 0.5,
        };
        assert_eq!(drift_rhs(&p, None, 0.0, 0.0), 0.0);
        let p = DriftParams { q0: 0.01, ..p };
        assert!((drift_rhs(&p, None, 0.0, 0.0) - 0.004).abs() < 1e-18);
    }

    #[test]
    fn integrate_constant_field() {
        let grid = GridSpec::new(0.0, 1.0, 10).unwrap();
        let tr = integrate(|_, _| 0.0, 5.0, grid, 3.0).unwrap();
        assert_eq!(tr.len(), 31);
        assert!(tr.values.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn integrate_exponential_decay() {
        let grid = GridSpec::new(0.0, 1.0, 1000).unwrap();
        let tr = integrate(|_, y| -y, 1.0, grid, 1.0).unwrap();
        let end = tr.value_at(1.0).unwrap();
        assert!((end - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn integrate_reports_divergence_time() {
        // ẏ = y², y(0) = 1 blows up at t = 1.
        let grid = GridSpec::new(0.0, 1.0, 1000).unwrap();
        match integrate(|_, y| y * y, 1.0, grid, 2.0) {
            Err(Error::IntegrationDiverged { t }) => assert!(t > 0.99 && t < 1.01, "{t}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shifted_sampling() {
        let grid = GridSpec::new(0.0, 2.0, 4).unwrap();
        let tr = Trajectory::from_fn(grid, 8.0, |t| t * t).unwrap();
        assert_eq!(tr.sample_shifted(1.5, 0).unwrap(), 2.25);
        assert_eq!(tr.sample_shifted(1.5, 2).unwrap(), 5.5 * 5.5);
        assert!(matches!(
            tr.sample_shifted(1.5, 4),
            Err(Error::HorizonExceeded { .. })
        ));
        assert!(matches!(
            tr.sample_shifted(0.3, 0),
            Err(Error::OffGrid { .. })
        ));

        let flat = Trajectory::from_fn(grid, 8.0, |_| 4.0).unwrap();
        for n in 0..4 {
            assert_eq!(flat.sample_shifted(0.5, n).unwrap(), 4.0);
        }
    }

    #[test]
    fn analytic_at_zero_is_initial_value() {
        let p = fig2();
        let x = analytic_basic_solution(&p, p.c_const(), 0.0).unwrap();
        assert!((x - 1.3).abs() < 1e-15);
        let x = analytic_basic_solution(&p, 4.0, 0.0).unwrap();
        assert!((x - 0.25).abs() < 1e-15);
    }

    #[test]
    fn analytic_tends_to_limit() {
        let p = LoopParams {
            epsilon: 0.1,
            l_true: 2.5,
            x_init: 3.0,
            ..fig2()
        };
        let x = analytic_basic_solution(&p, p.c_const(), 150.0).unwrap();
        assert!((x - 2.5).abs() < 1e-6, "{x}");
    }

    #[test]
    fn analytic_singular_denominator() {
        let p = fig2();
        assert!(matches!(
            analytic_basic_solution(&p, 0.0, 0.0),
            Err(Error::SingularSolution { .. })
        ));
    }

    #[test]
    fn analytic_grid_matches_pointwise() {
        let p = fig2();
        let grid = GridSpec::new(0.0, p.period, DEFAULT_STEP_DIVISOR).unwrap();
        let tr = analytic_basic_trajectory(&p, p.c_const(), grid, 9.0).unwrap();
        for k in [0usize, 1, 2, 3, 7, 2048, 3001, 6144] {
            let t = tr.time_at(k);
            let a = analytic_basic_solution(&p, p.c_const(), t).unwrap();
            assert!(
                (a - tr.values[k]).abs() < 1e-9,
                "k={k}: {a} vs {}",
                tr.values[k]
            );
        }
    }

    #[test]
    fn homogeneous_factor_period_structure() {
        let p = fig2();
        let theta = p.theta();
        let h = p.period / 2048.0;
        for k in (0..6000).step_by(37) {
            let t = k as f64 * h;
            let r = homogeneous_factor(&p, t + p.period) / homogeneous_factor(&p, t);
            assert!((r - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_helpers() {
        let p = DriftParams {
            epsilon: 0.1,
            delta: 0.4,
            q0: 0.01,
            period: 3.0,
            l_true: 0.0,
            z_init: 0.5,
        };
        assert!(p.growth_factor() > 1.0);
        assert!(p.decay_factor() > 0.0 && p.decay_factor() < 1.0);
        assert!((p.q(2.5) - 0.01 * (-1.0f64).exp()).abs() < 1e-18);
        assert!((p.x_init() - 2.01).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = LoopParams {
            epsilon: 0.0,
            ..fig2()
        };
        assert!(p.validate().is_err());
        let p = LoopParams { b: 0.0, ..fig2() };
        assert!(p.validate().is_err());
        assert!(GridSpec::new(0.0, 3.0, 0).is_err());
    }
}
