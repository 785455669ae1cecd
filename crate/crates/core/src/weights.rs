//! Edge-weight laws.
//!
//! Two families matter: explosive-class weights (exponential) and the shifted
//! class `Y = 1 + X` with `inf supp X = 0`.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("parameter must be positive and finite, got {0}")]
    BadParameter(f64),
    #[error("grid cdf is invalid: {0}")]
    BadGrid(&'static str),
}

/// Piecewise-linear cdf through `(t_i, F_i)`; zero below the first point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCdf {
    t: Vec<f64>,
    f: Vec<f64>,
}

impl GridCdf {
    /// Points must have strictly increasing `t ≥ 0`, nondecreasing `F`,
    /// `F_0 = 0` (no atom) and `F_last = 1`.
    pub fn new(points: &[(f64, f64)]) -> Result<Self, WeightError> {
        if points.len() < 2 {
            return Err(WeightError::BadGrid("need at least two points"));
        }
        let (t, f): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if t[0] < 0.0 || t.iter().any(|x| !x.is_finite()) {
            return Err(WeightError::BadGrid("abscissae must be finite and nonnegative"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WeightError::BadGrid("abscissae must increase strictly"));
        }
        if f.windows(2).any(|w| w[1] < w[0]) || f.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(WeightError::BadGrid("cdf values must be nondecreasing in [0, 1]"));
        }
        if f[0] != 0.0 {
            return Err(WeightError::BadGrid("cdf must start at 0 (continuous law)"));
        }
        if (f[f.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(WeightError::BadGrid("cdf must end at 1"));
        }
        Ok(Self { t, f })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.t[0] {
            return 0.0;
        }
        let last = self.t.len() - 1;
        if x >= self.t[last] {
            return 1.0;
        }
        let i = self.t.partition_point(|&ti| ti <= x) - 1;
        let w = (x - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.f[i] + w * (self.f[i + 1] - self.f[i])
    }

    /// Smallest `x` with `F(x) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.t[0];
        }
        let i = self.f.partition_point(|&fi| fi < p);
        if i == 0 {
            return self.t[0];
        }
        if i >= self.f.len() {
            return self.t[self.t.len() - 1];
        }
        let (f0, f1) = (self.f[i - 1], self.f[i]);
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        t0 + (p - f0) / (f1 - f0) * (t1 - t0)
    }

    fn mean(&self) -> f64 {
        self.t
            .windows(2)
            .zip(self.f.windows(2))
            .map(|(t, f)| 0.5 * (t[0] + t[1]) * (f[1] - f[0]))
            .sum()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.f.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightLaw {
    Exponential { rate: f64 },
    /// `1 + Uniform(0, width)`.
    OnePlusUniform { width: f64 },
    /// `1 + Exponential(rate)`.
    OnePlusExponential { rate: f64 },
    Grid(GridCdf),
}

fn positive(x: f64) -> Result<f64, WeightError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(WeightError::BadParameter(x))
    }
}

impl WeightLaw {
    pub fn exponential(rate: f64) -> Result<Self, WeightError> {
        Ok(Self::Exponential { rate: positive(rate)? })
    }

    pub fn one_plus_uniform(width: f64) -> Result<Self, WeightError> {
        Ok(Self::OnePlusUniform { width: positive(width)? })
    }

    pub fn one_plus_exponential(rate: f64) -> Result<Self, WeightError> {
        Ok(Self::OnePlusExponential { rate: positive(rate)? })
    }

    /// `F_Y(t) = P(Y ≤ t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 && !matches!(self, Self::Grid(_)) {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -libm::expm1(-rate * t),
            Self::OnePlusUniform { width } => ((t - 1.0) / width).clamp(0.0, 1.0),
            Self::OnePlusExponential { rate } => {
                if t <= 1.0 {
                    0.0
                } else {
                    -libm::expm1(-rate * (t - 1.0))
                }
            }
            Self::Grid(g) => g.cdf(t),
        }
    }

    /// `P(Y - 1 ≤ x)` for shifted laws; `P(Y ≤ x)` otherwise. This is the
    /// retention probability of edges whose excess weight is at most `x`.
    pub fn excess_cdf(&self, x: f64) -> f64 {
        if self.is_shifted() {
            self.cdf(1.0 + x)
        } else {
            self.cdf(x)
        }
    }

    /// `y` with `P(Y > y) = c`, for `c ∈ (0, 1]`.
    pub fn quantile_upper(&self, c: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -libm::log(c) / rate,
            Self::OnePlusUniform { width } => 1.0 + width * (1.0 - c),
            Self::OnePlusExponential { rate } => 1.0 - libm::log(c) / rate,
            Self::Grid(g) => g.quantile(1.0 - c),
        }
    }

    /// `y` with `ln P(Y > y) = log_c`, for `log_c ≤ 0`. Keeps precision when
    /// the upper-tail probability is within rounding of 1.
    pub fn quantile_upper_log(&self, log_c: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -log_c / rate,
            Self::OnePlusUniform { width } => 1.0 - width * libm::expm1(log_c),
            Self::OnePlusExponential { rate } => 1.0 - log_c / rate,
            Self::Grid(g) => g.quantile(-libm::expm1(log_c)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = 1.0 - rng.random::<f64>();
        self.quantile_upper(c)
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::OnePlusUniform { width } => 1.0 + 0.5 * width,
            Self::OnePlusExponential { rate } => 1.0 + 1.0 / rate,
            Self::Grid(g) => g.mean(),
        }
    }

    /// Support bounded below by 1 with infimum exactly 1.
    pub fn is_shifted(&self) -> bool {
        match self {
            Self::Exponential { .. } => false,
            Self::OnePlusUniform { .. } | Self::OnePlusExponential { .. } => true,
            Self::Grid(g) => g.t[0] == 1.0,
        }
    }

    /// Constants `(α, β)` with `α t ≤ F_Y(t) ≤ β t` on `(0, T]`, if the cdf
    /// admits such a linear sandwich there.
    pub fn linear_sandwich(&self, horizon: f64) -> Option<(f64, f64)> {
        if !(horizon > 0.0) {
            return None;
        }
        match self {
            // F(t)/t is decreasing from `rate` at 0+.
            Self::Exponential { rate } => Some((self.cdf(horizon) / horizon, *rate)),
            Self::OnePlusUniform { .. } | Self::OnePlusExponential { .. } => None,
            Self::Grid(g) => {
                // F(t)/t is monotone on each linear piece, so the extremes sit
                // on grid points or at the horizon. The first piece must start
                // at the origin.
                if g.t[0] != 0.0 {
                    return None;
                }
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                let mut visit = |t: f64| {
                    let r = g.cdf(t) / t;
                    lo = lo.min(r);
                    hi = hi.max(r);
                };
                visit(horizon);
                for &t in g.t.iter().skip(1).take_while(|t| **t < horizon) {
                    visit(t);
                }
                // slope of the first piece is the limit at 0+
                let first = g.t[1].min(horizon);
                visit(first);
                if lo > 0.0 { Some((lo, hi)) } else { None }
            }
        }
    }
}
