//! Integer degree laws with power-law tails, size-biasing and binomial
//! thinning.
//!
//! A [`DegreePmf`] is one of three kinds:
//!
//! * `Zipf`: `P(D = k) = k^{-τ} / ζ(τ, k_min)` for `k ≥ k_min`,
//! * `ParetoDiscretized`: `D = ⌊k_min U^{-1/(τ-1)}⌋`, i.e. `P(D ≥ k) = (k_min/k)^{τ-1}`,
//! * `Table`: an explicit finite table.
//!
//! Every law exposes an exact survival function, so truncated sums always come
//! with a certified remainder. Probability generating functions are evaluated
//! through [`Pgf::complement_at`], which returns `1 - h(1 - u)`; working in
//! the complement keeps full precision close to `s = 1`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::special::{hurwitz_zeta, zeta_minus_polylog};

/// Survival tables are materialized for `k` up to this value; beyond it the
/// sampler inverts the analytic survival function.
pub const TABLE_LIMIT: u64 = 1 << 16;

/// Term budget for truncated pgf sums.
pub const PGF_TERM_BUDGET: u64 = 1 << 24;

/// Error bound attached to closed-form pgf evaluations.
const ANALYTIC_PGF_ERROR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("tail exponent tau={0} outside (2, 3)")]
    TauOutOfRange(f64),
    #[error("minimum degree k_min={0} must be at least 2")]
    MinDegree(u64),
    #[error("probability table is invalid: {0}")]
    BadTable(&'static str),
    #[error("law has no finite mean")]
    InfiniteMean,
    #[error("retention {0} outside (0, 1]")]
    BadRetention(f64),
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum PgfError {
    #[error("argument {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("truncation budget exhausted; certified error only {achieved:e}")]
    TermBudget { achieved: f64 },
}

/// A value with a certified absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub value: f64,
    pub error: f64,
}

/// Probability generating function access.
pub trait Pgf {
    /// `1 - h(1 - u)` for `u ∈ [0, 1]`.
    fn complement_at(&self, u: f64) -> Result<Certified, PgfError>;

    /// `h(s)` to absolute accuracy `tol`.
    fn pgf(&self, s: f64, tol: f64) -> Result<f64, PgfError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(PgfError::OutOfDomain(s));
        }
        let c = self.complement_at(1.0 - s)?;
        if c.error > tol {
            return Err(PgfError::TermBudget { achieved: c.error });
        }
        Ok(1.0 - c.value)
    }
}

/// A law on the nonnegative integers.
pub trait IntegerLaw: Pgf {
    fn pmf(&self, k: u64) -> f64;
    /// `P(X > k)`.
    fn survival(&self, k: u64) -> f64;
    /// May be `f64::INFINITY`.
    fn mean(&self) -> f64;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64
    where
        Self: Sized;

    fn sample_many<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u64>
    where
        Self: Sized,
    {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeKind {
    Zipf,
    ParetoDiscretized,
    Table,
}

#[derive(Debug, Clone)]
enum Shape {
    Zipf { norm: f64 },
    Pareto,
    Table { pmf: Vec<f64> },
}

/// Tail constants `(c, C)` with `c / k^a ≤ P(X > k) ≤ C / k^a` for `k ≥ k_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants {
    pub exponent: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Inverse-survival sampler backed by a table of `P(X > k)` for small `k`.
#[derive(Debug, Clone)]
struct SurvivalTable {
    /// `survival[k] = P(X > k)`, strictly nonincreasing.
    survival: Vec<f64>,
}

impl SurvivalTable {
    fn build(limit: u64, survival: impl Fn(u64) -> f64) -> Self {
        let survival = (0..=limit).map(survival).collect();
        Self { survival }
    }

    /// Smallest `k` with `P(X > k) < v`, for `v ∈ (0, 1]`.
    fn invert(&self, v: f64, tail: impl Fn(u64) -> f64) -> u64 {
        let idx = self.survival.partition_point(|&s| s >= v);
        if idx < self.survival.len() {
            return idx as u64;
        }
        let mut lo = (self.survival.len() - 1) as u64;
        let mut hi = lo.saturating_mul(2);
        while tail(hi) >= v {
            if hi == u64::MAX {
                return u64::MAX;
            }
            lo = hi;
            hi = hi.saturating_mul(2);
        }
        // tail(lo) >= v > tail(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if tail(mid) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// `v ∈ (0, 1]`, uniform.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// A degree law `D`.
#[derive(Debug, Clone)]
pub struct DegreePmf {
    kind: DegreeKind,
    tau: Option<f64>,
    k_min: u64,
    shape: Shape,
    mean: f64,
    tail: Option<TailConstants>,
    table: SurvivalTable,
}

impl DegreePmf {
    /// Zipf law on `k ≥ k_min`.
    pub fn zipf(tau: f64, k_min: u64) -> Result<Self, DistError> {
        check_power_law(tau, k_min)?;
        let norm = hurwitz_zeta(tau, k_min as f64);
        let mean = hurwitz_zeta(tau - 1.0, k_min as f64) / norm;
        Ok(Self::finish(DegreeKind::Zipf, Some(tau), k_min, Shape::Zipf { norm }, mean))
    }

    /// Discretized Pareto: `P(D ≥ k) = (k_min / k)^{τ-1}` for `k ≥ k_min`.
    pub fn pareto_discretized(tau: f64, k_min: u64) -> Result<Self, DistError> {
        check_power_law(tau, k_min)?;
        let a = tau - 1.0;
        let km = k_min as f64;
        let mean = km + libm::pow(km, a) * hurwitz_zeta(a, km + 1.0);
        Ok(Self::finish(DegreeKind::ParetoDiscretized, Some(tau), k_min, Shape::Pareto, mean))
    }

    /// Explicit table: `pmf[k] = P(D = k)`. Entries must be nonnegative and sum to 1.
    pub fn table(pmf: Vec<f64>) -> Result<Self, DistError> {
        if pmf.is_empty() {
            return Err(DistError::BadTable("empty"));
        }
        if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(DistError::BadTable("negative or non-finite entry"));
        }
        let total: f64 = pmf.iter().sum();
        if libm::fabs(total - 1.0) > 1e-12 {
            return Err(DistError::BadTable("probabilities do not sum to 1"));
        }
        let mut pmf = pmf;
        while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
            pmf.pop();
        }
        let k_min = pmf.iter().position(|p| *p > 0.0).unwrap_or(0) as u64;
        let mean = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        Ok(Self::finish(DegreeKind::Table, None, k_min, Shape::Table { pmf }, mean))
    }

    /// Table from `(k, probability)` pairs.
    pub fn from_pairs(pairs: &[(u64, f64)]) -> Result<Self, DistError> {
        let max = pairs.iter().map(|(k, _)| *k).max().ok_or(DistError::BadTable("empty"))?;
        let mut pmf = alloc::vec![0.0; max as usize + 1];
        for &(k, p) in pairs {
            pmf[k as usize] += p;
        }
        Self::table(pmf)
    }

    pub fn point_mass(k: u64) -> Self {
        Self::from_pairs(&[(k, 1.0)]).expect("point mass is a valid table")
    }

    fn finish(kind: DegreeKind, tau: Option<f64>, k_min: u64, shape: Shape, mean: f64) -> Self {
        let mut law = Self {
            kind,
            tau,
            k_min,
            shape,
            mean,
            tail: None,
            table: SurvivalTable { survival: Vec::new() },
        };
        let limit = match &law.shape {
            Shape::Table { pmf } => pmf.len() as u64,
            _ => TABLE_LIMIT,
        };
        law.table = SurvivalTable::build(limit, |k| law.survival_exact(k));
        if let Some(tau) = tau {
            let a = tau - 1.0;
            let limit_const = match law.shape {
                Shape::Zipf { norm } => 1.0 / (a * norm),
                _ => libm::pow(k_min as f64, a),
            };
            law.tail = Some(scan_tail_constants(k_min, a, limit_const, &law.table, |k| {
                law.survival_exact(k)
            }));
        }
        law
    }

    pub fn kind(&self) -> DegreeKind {
        self.kind
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn k_min(&self) -> u64 {
        self.k_min
    }

    /// `(c1, C1)` of the power-law tail bound; `None` for tables.
    pub fn tail_constants(&self) -> Option<TailConstants> {
        self.tail
    }

    /// `P(D ≥ 2) = 1`.
    pub fn has_min_degree_two(&self) -> bool {
        self.survival(1) >= 1.0 - 1e-15
    }

    /// `P(D > k)` without going through the table.
    fn survival_exact(&self, k: u64) -> f64 {
        if k < self.k_min {
            return 1.0;
        }
        match &self.shape {
            Shape::Zipf { norm } => {
                let tau = self.tau.unwrap();
                hurwitz_zeta(tau, k as f64 + 1.0) / norm
            }
            Shape::Pareto => {
                let a = self.tau.unwrap() - 1.0;
                libm::pow(self.k_min as f64 / (k as f64 + 1.0), a)
            }
            Shape::Table { pmf } => pmf.iter().skip(k as usize + 1).sum(),
        }
    }

    /// `Σ_{j ≥ m} j P(D = j)`.
    pub fn first_moment_from(&self, m: u64) -> f64 {
        if m <= self.k_min {
            return self.mean;
        }
        match &self.shape {
            Shape::Zipf { norm } => hurwitz_zeta(self.tau.unwrap() - 1.0, m as f64) / norm,
            Shape::Pareto => {
                let a = self.tau.unwrap() - 1.0;
                let km = self.k_min as f64;
                let m = m as f64;
                m * libm::pow(km / m, a) + libm::pow(km, a) * hurwitz_zeta(a, m + 1.0)
            }
            Shape::Table { pmf } => pmf
                .iter()
                .enumerate()
                .skip(m as usize)
                .map(|(j, p)| j as f64 * p)
                .sum(),
        }
    }

    /// `Σ_{k ≤ K} P(D = k) + P(D > K)`, which must equal 1.
    pub fn mass_with_certified_tail(&self, k_max: u64) -> f64 {
        (0..=k_max).map(|k| self.pmf(k)).sum::<f64>() + self.survival(k_max)
    }

    /// Partial second moment `Σ_{k ≤ K} k^2 P(D = k)`.
    pub fn partial_second_moment(&self, k_max: u64) -> f64 {
        (0..=k_max).map(|k| (k as f64) * (k as f64) * self.pmf(k)).sum()
    }
}

fn check_power_law(tau: f64, k_min: u64) -> Result<(), DistError> {
    if !(tau > 2.0 && tau < 3.0) {
        return Err(DistError::TauOutOfRange(tau));
    }
    if k_min < 2 {
        return Err(DistError::MinDegree(k_min));
    }
    Ok(())
}

/// Scan `P(X > k) k^a` over the table range and a geometric grid beyond it,
/// then fold in the `k → ∞` limit.
fn scan_tail_constants(
    k_min: u64,
    a: f64,
    limit: f64,
    table: &SurvivalTable,
    survival: impl Fn(u64) -> f64,
) -> TailConstants {
    let start = k_min.max(1);
    let mut lower = limit;
    let mut upper = limit;
    let mut visit = |k: u64, s: f64| {
        let v = s * libm::pow(k as f64, a);
        lower = lower.min(v);
        upper = upper.max(v);
    };
    let table_end = (table.survival.len() - 1) as u64;
    for k in start..=table_end {
        visit(k, table.survival[k as usize]);
    }
    let mut k = table_end as f64;
    while k < 1e15 {
        k *= 1.05;
        let ki = k as u64;
        visit(ki, survival(ki));
    }
    TailConstants { exponent: a, lower, upper }
}

impl Pgf for DegreePmf {
    fn complement_at(&self, u: f64) -> Result<Certified, PgfError> {
        check_unit(u)?;
        match &self.shape {
            Shape::Zipf { norm } => {
                let tau = self.tau.unwrap();
                Ok(Certified {
                    value: zipf_complement(tau, self.k_min, 0, *norm, u),
                    error: ANALYTIC_PGF_ERROR,
                })
            }
            Shape::Pareto => series_complement(u, |k| self.survival(k)),
            Shape::Table { pmf } => Ok(Certified { value: table_complement(pmf, u), error: 1e-15 }),
        }
    }
}

impl IntegerLaw for DegreePmf {
    fn pmf(&self, k: u64) -> f64 {
        if k < self.k_min {
            return 0.0;
        }
        match &self.shape {
            Shape::Zipf { norm } => libm::pow(k as f64, -self.tau.unwrap()) / norm,
            Shape::Pareto => {
                let a = self.tau.unwrap() - 1.0;
                let km = self.k_min as f64;
                let k = k as f64;
                libm::pow(km / k, a) - libm::pow(km / (k + 1.0), a)
            }
            Shape::Table { pmf } => pmf.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    fn survival(&self, k: u64) -> f64 {
        match self.table.survival.get(k as usize) {
            Some(s) => *s,
            None => self.survival_exact(k),
        }
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let v = open_unit(rng);
        self.table.invert(v, |k| self.survival_exact(k))
    }
}

/// `1 - h(1-u)` for the law `P(X = k - shift) ∝ k^{-σ}`, `k ≥ k_min`, where
/// `σ = tau - shift`. `norm = Σ_{k ≥ k_min} k^{-σ}`.
fn zipf_complement(tau: f64, k_min: u64, shift: i32, norm: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        // h(0) = P(X = 0) = 0 since k_min ≥ 2
        return 1.0;
    }
    let sigma = tau - shift as f64;
    let s = 1.0 - u;
    let log_s = libm::log1p(-u);
    // s^shift - s^j  =  s^shift (1 - s^{j - shift})
    let s_shift = if shift == 0 { 1.0 } else { s };
    let mut head = 0.0;
    for j in 1..k_min {
        let jf = j as f64;
        let gap = -libm::expm1((jf - shift as f64) * log_s);
        head += libm::pow(jf, -sigma) * s_shift * gap;
    }
    let zeta_sigma_term = if shift == 0 {
        0.0
    } else {
        // ζ(σ) (s - 1)
        -crate::special::zeta(sigma) * u
    };
    let numer = zeta_sigma_term + zeta_minus_polylog(sigma, u) - head;
    numer / (norm * s_shift)
}

fn table_complement(pmf: &[f64], u: f64) -> f64 {
    if u >= 1.0 {
        return 1.0 - pmf[0];
    }
    let log_s = libm::log1p(-u);
    pmf.iter()
        .enumerate()
        .skip(1)
        .map(|(k, p)| -p * libm::expm1(k as f64 * log_s))
        .sum()
}

/// `1 - h(1-u) = u Σ_{k ≥ 0} (1-u)^k P(X > k)`, truncated by doubling with
/// remainder bound `P(X > K) (1-u)^{K+1}`.
fn series_complement(u: f64, survival: impl Fn(u64) -> f64) -> Result<Certified, PgfError> {
    if u == 0.0 {
        return Ok(Certified { value: 0.0, error: 0.0 });
    }
    let s = 1.0 - u;
    let mut acc = 0.0;
    let mut sk = 1.0;
    let mut k = 0u64;
    let mut target = 64u64;
    loop {
        while k < target {
            acc += sk * survival(k);
            sk *= s;
            k += 1;
        }
        // Σ_{k ≥ K} (1-u)^k P(X > k) ≤ P(X > K-1) (1-u)^K / u
        let remainder = survival(k - 1) * sk;
        if remainder <= ANALYTIC_PGF_ERROR || sk == 0.0 {
            return Ok(Certified { value: u * acc, error: remainder.max(1e-15) });
        }
        if target >= PGF_TERM_BUDGET {
            return Err(PgfError::TermBudget { achieved: remainder });
        }
        target *= 2;
    }
}

fn check_unit(u: f64) -> Result<(), PgfError> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(PgfError::OutOfDomain(1.0 - u))
    }
}

/// The forward degree `B = D* - 1`, `P(B = k) = (k+1) P(D = k+1) / E[D]`.
#[derive(Debug, Clone)]
pub struct SizeBiasedPmf {
    base: DegreePmf,
    table: SurvivalTable,
    tail: Option<TailConstants>,
}

/// Size-bias a degree law.
pub fn size_biased(dist: &DegreePmf) -> Result<SizeBiasedPmf, DistError> {
    let mean = dist.mean();
    if !mean.is_finite() || mean <= 0.0 {
        return Err(DistError::InfiniteMean);
    }
    let mut law = SizeBiasedPmf {
        base: dist.clone(),
        table: SurvivalTable { survival: Vec::new() },
        tail: None,
    };
    let limit = match &dist.shape {
        Shape::Table { pmf } => pmf.len() as u64,
        _ => TABLE_LIMIT,
    };
    law.table = SurvivalTable::build(limit, |k| law.survival_exact(k));
    if let Some(tau) = dist.tau {
        let a = tau - 2.0;
        let limit_const = match dist.shape {
            Shape::Zipf { norm } => 1.0 / (a * norm * mean),
            _ => {
                // Σ_{j>k} j P(D=j) ~ k_min^{τ-1} (τ-1)/(τ-2) k^{2-τ}
                let km = dist.k_min as f64;
                libm::pow(km, tau - 1.0) * (tau - 1.0) / (a * mean)
            }
        };
        law.tail = Some(scan_tail_constants(1, a, limit_const, &law.table, |k| {
            law.survival_exact(k)
        }));
    }
    Ok(law)
}

impl SizeBiasedPmf {
    pub fn base(&self) -> &DegreePmf {
        &self.base
    }

    /// `(c1*, C1*)`: tail bound with exponent `τ - 2`.
    pub fn tail_constants(&self) -> Option<TailConstants> {
        self.tail
    }

    fn survival_exact(&self, k: u64) -> f64 {
        // P(B > k) = Σ_{j ≥ k+2} j P(D = j) / E[D]
        (self.base.first_moment_from(k.saturating_add(2)) / self.base.mean).min(1.0)
    }
}

impl Pgf for SizeBiasedPmf {
    fn complement_at(&self, u: f64) -> Result<Certified, PgfError> {
        check_unit(u)?;
        match &self.base.shape {
            Shape::Zipf { norm } => {
                let tau = self.base.tau.unwrap();
                // Σ_{k ≥ k_min} k^{1-τ} = norm * E[D]
                let norm1 = norm * self.base.mean;
                Ok(Certified {
                    value: zipf_complement(tau, self.base.k_min, 1, norm1, u),
                    error: ANALYTIC_PGF_ERROR,
                })
            }
            Shape::Pareto => series_complement(u, |k| self.survival(k)),
            Shape::Table { pmf } => {
                let biased: Vec<f64> = (0..pmf.len().saturating_sub(1))
                    .map(|k| self.pmf(k as u64))
                    .collect();
                Ok(Certified { value: table_complement(&biased, u), error: 1e-15 })
            }
        }
    }
}

impl IntegerLaw for SizeBiasedPmf {
    fn pmf(&self, k: u64) -> f64 {
        (k as f64 + 1.0) * self.base.pmf(k + 1) / self.base.mean
    }

    fn survival(&self, k: u64) -> f64 {
        match self.table.survival.get(k as usize) {
            Some(s) => *s,
            None => self.survival_exact(k),
        }
    }

    fn mean(&self) -> f64 {
        match self.base.shape {
            Shape::Table { .. } => (0..self.table.survival.len() as u64)
                .map(|k| k as f64 * self.pmf(k))
                .sum(),
            _ => f64::INFINITY,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let v = open_unit(rng);
        self.table.invert(v, |k| self.survival_exact(k))
    }
}

/// `BIN(X, r)`: each unit of `X` retained independently with probability `r`.
#[derive(Debug, Clone)]
pub struct ThinnedPmf<L> {
    base: L,
    retention: f64,
}

/// Certified truncation error for thinned pmf values.
pub const THINNED_PMF_TOL: f64 = 1e-12;

pub fn thin<L: IntegerLaw + Clone>(dist: &L, retention: f64) -> Result<ThinnedPmf<L>, DistError> {
    if !(retention > 0.0 && retention <= 1.0) {
        return Err(DistError::BadRetention(retention));
    }
    Ok(ThinnedPmf { base: dist.clone(), retention })
}

impl<L> ThinnedPmf<L> {
    pub fn retention(&self) -> f64 {
        self.retention
    }

    pub fn base(&self) -> &L {
        &self.base
    }
}

impl<L: IntegerLaw> Pgf for ThinnedPmf<L> {
    fn complement_at(&self, u: f64) -> Result<Certified, PgfError> {
        check_unit(u)?;
        // h_T(s) = h_X(1 - r + r s)  ⇒  1 - h_T(1-u) = 1 - h_X(1 - r u)
        self.base.complement_at(self.retention * u)
    }
}

impl<L: IntegerLaw> IntegerLaw for ThinnedPmf<L> {
    fn pmf(&self, j: u64) -> f64 {
        let r = self.retention;
        if r == 1.0 {
            return self.base.pmf(j);
        }
        let q = 1.0 - r;
        // b(d) = C(d, j) r^j q^{d-j}; start at d = j
        let mut b = libm::pow(r, j as f64);
        let mut d = j;
        let mode = libm::ceil(j as f64 / r) as u64;
        let mut acc = 0.0;
        loop {
            acc += self.base.pmf(d) * b;
            let next = b * (d as f64 + 1.0) / (d as f64 + 1.0 - j as f64) * q;
            // Past the mode b is decreasing, so the remainder is at most
            // P(X > d) * b(d+1).
            if d >= mode && self.base.survival(d) * next <= THINNED_PMF_TOL {
                break;
            }
            if next == 0.0 && d >= mode {
                break;
            }
            b = next;
            d += 1;
        }
        acc
    }

    fn survival(&self, k: u64) -> f64 {
        if self.retention == 1.0 {
            return self.base.survival(k);
        }
        let head: f64 = (0..=k).map(|j| self.pmf(j)).sum();
        (1.0 - head).max(0.0)
    }

    fn mean(&self) -> f64 {
        self.retention * self.base.mean()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let d = self.base.sample(rng);
        binomial(d, self.retention, rng)
    }
}

/// `BIN(n, p)` draw.
pub fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 || n == 0 {
        return n;
    }
    if p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
}

/// Closed-form generating functions used to exercise the explosion criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormPgf {
    /// `h(s) = s`.
    Identity,
    /// `h(s) = 1 - (1-s)^a`, `a ∈ (0, 1]`.
    PowerComplement(f64),
    /// Poisson(λ).
    Poisson(f64),
    /// `h(s) = s^k`.
    PointMass(u64),
}

impl Pgf for ClosedFormPgf {
    fn complement_at(&self, u: f64) -> Result<Certified, PgfError> {
        check_unit(u)?;
        let value = match *self {
            ClosedFormPgf::Identity => u,
            ClosedFormPgf::PowerComplement(a) => libm::pow(u, a),
            ClosedFormPgf::Poisson(lambda) => -libm::expm1(-lambda * u),
            ClosedFormPgf::PointMass(k) => {
                if u >= 1.0 {
                    if k == 0 { 0.0 } else { 1.0 }
                } else {
                    -libm::expm1(k as f64 * libm::log1p(-u))
                }
            }
        };
        Ok(Certified { value, error: 1e-16 })
    }
}

/// Hill estimate of the tail index `α` (with `P(X > x) ≈ c x^{-α}`) from the
/// largest `fraction` of the sample.
pub fn hill_estimate(samples: &[f64], fraction: f64) -> Option<f64> {
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| *x > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = ((sorted.len() as f64) * fraction) as usize;
    if k < 2 || k >= sorted.len() {
        return None;
    }
    let threshold = sorted[k];
    let sum: f64 = sorted[..k].iter().map(|x| libm::log(x / threshold)).sum();
    if sum <= 0.0 {
        return None;
    }
    Some(k as f64 / sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::zeta;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force `Σ_{k=k0}^{∞} k^{-s}` by direct summation with an integral tail.
    fn series_oracle(s: f64, k0: u64) -> f64 {
        let n = 2_000_000u64;
        let direct: f64 = (k0..n).map(|k| (k as f64).powf(-s)).sum();
        // Σ_{k ≥ n} k^{-s} ≈ ∫_{n-1/2}^∞ x^{-s} dx
        direct + (n as f64 - 0.5).powf(1.0 - s) / (s - 1.0)
    }

    #[test]
    fn zipf_pmf_examples() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        assert_eq!(d.pmf(1), 0.0);
        let expected = 2f64.powf(-2.5) / series_oracle(2.5, 2);
        assert!((d.pmf(2) - expected).abs() < 1e-12);
        let t = DegreePmf::from_pairs(&[(2, 0.5), (3, 0.5)]).unwrap();
        assert_eq!(t.pmf(3), 0.5);
    }

    #[test]
    fn zipf_mean_matches_series_oracle() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let oracle = series_oracle(1.5, 2) / series_oracle(2.5, 2);
        assert!((d.mean() - oracle).abs() < 1e-9 * oracle);
        assert!((d.mean() - (zeta(1.5) - 1.0) / (zeta(2.5) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(DegreePmf::zipf(3.5, 2).unwrap_err(), DistError::TauOutOfRange(3.5));
        assert_eq!(DegreePmf::zipf(2.5, 1).unwrap_err(), DistError::MinDegree(1));
        assert!(DegreePmf::table(alloc::vec![0.5, 0.4]).is_err());
        assert!(DegreePmf::table(alloc::vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn certified_mass_is_one() {
        for d in [
            DegreePmf::zipf(2.5, 2).unwrap(),
            DegreePmf::zipf(2.2, 3).unwrap(),
            DegreePmf::pareto_discretized(2.7, 2).unwrap(),
            DegreePmf::from_pairs(&[(2, 0.25), (5, 0.75)]).unwrap(),
        ] {
            for k_max in [0u64, 1, 2, 10, 1000, 100_000] {
                let m = d.mass_with_certified_tail(k_max);
                assert!((m - 1.0).abs() <= 1e-10, "{:?} K={k_max} mass={m}", d.kind());
            }
        }
    }

    #[test]
    fn second_moment_partial_sums_grow() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let a = d.partial_second_moment(1_000);
        let b = d.partial_second_moment(100_000);
        // Σ_{k≤K} k^{2-τ} grows like K^{3-τ}: a factor ~10 per 100x.
        assert!(b > 5.0 * a);
    }

    #[test]
    fn tail_constants_bound_survival() {
        for d in [DegreePmf::zipf(2.5, 2).unwrap(), DegreePmf::pareto_discretized(2.3, 3).unwrap()] {
            let t = d.tail_constants().unwrap();
            assert!(t.lower > 0.0 && t.lower <= t.upper);
            for k in [d.k_min(), 5, 17, 1000, 70_000, 10_000_000] {
                let scaled = d.survival(k) * (k as f64).powf(t.exponent);
                assert!(scaled >= t.lower * (1.0 - 1e-12) && scaled <= t.upper * (1.0 + 1e-12));
            }
        }
        assert!(DegreePmf::point_mass(2).tail_constants().is_none());
    }

    #[test]
    fn size_biased_examples() {
        let b = size_biased(&DegreePmf::point_mass(2)).unwrap();
        assert!((b.pmf(1) - 1.0).abs() < 1e-15);
        let t = size_biased(&DegreePmf::from_pairs(&[(2, 0.5), (4, 0.5)]).unwrap()).unwrap();
        assert!((t.pmf(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.pmf(3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.pmf(0), 0.0);
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let z = size_biased(&d).unwrap();
        let mean_oracle = series_oracle(1.5, 2) / series_oracle(2.5, 2);
        assert!((z.pmf(1) - 2.0 * d.pmf(2) / mean_oracle).abs() < 1e-10);
        assert!((z.survival(0) - 1.0).abs() < 1e-15);
        assert!(z.mean().is_infinite());
    }

    #[test]
    fn size_biasing_identity_for_tables() {
        let d = DegreePmf::from_pairs(&[(2, 0.1), (3, 0.2), (7, 0.7)]).unwrap();
        let b = size_biased(&d).unwrap();
        for k in 0..10 {
            assert!((b.pmf(k) * d.mean() - (k as f64 + 1.0) * d.pmf(k + 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn size_biased_survival_matches_partial_sums() {
        for d in [DegreePmf::zipf(2.5, 2).unwrap(), DegreePmf::pareto_discretized(2.5, 2).unwrap()] {
            let b = size_biased(&d).unwrap();
            let mut acc = 0.0;
            for k in 0..200u64 {
                acc += b.pmf(k);
                assert!((1.0 - acc - b.survival(k)).abs() < 1e-12, "k={k}");
            }
            let t = b.tail_constants().unwrap();
            assert!((t.exponent - 0.5).abs() < 1e-15);
            for k in [1u64, 10, 1000, 1_000_000] {
                let scaled = b.survival(k) * (k as f64).powf(t.exponent);
                assert!(scaled >= t.lower * (1.0 - 1e-12) && scaled <= t.upper * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn pgf_examples() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        assert!((d.pgf(1.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let b1 = size_biased(&DegreePmf::point_mass(2)).unwrap();
        assert!((b1.pgf(0.3, 1e-12).unwrap() - 0.3).abs() < 1e-14);
        assert!(d.pgf(1.2, 1e-12).is_err());
    }

    #[test]
    fn size_biased_zipf_pgf_matches_long_summation() {
        let b = size_biased(&DegreePmf::zipf(2.5, 2).unwrap()).unwrap();
        let s: f64 = 0.99;
        // Direct 10^7-term summation; remainder ≤ s^{10^7} (negligible).
        let mut direct = 0.0;
        let mut sk = s;
        for k in 1..10_000_000u64 {
            direct += b.pmf(k) * sk;
            sk *= s;
        }
        let h = b.pgf(s, 1e-12).unwrap();
        assert!((h - direct).abs() < 1e-11, "h={h} direct={direct}");
    }

    #[test]
    fn zipf_pgf_matches_direct_sums_on_grid() {
        let d = DegreePmf::zipf(2.3, 3).unwrap();
        let b = size_biased(&d).unwrap();
        for &s in &[0.0, 0.1, 0.5, 0.8, 0.95] {
            let mut dd = 0.0;
            let mut bb = 0.0;
            for k in 0..20_000u64 {
                let sk = libm::pow(s, k as f64);
                dd += d.pmf(k) * sk;
                bb += b.pmf(k) * sk;
            }
            assert!((d.pgf(s, 1e-12).unwrap() - dd).abs() < 1e-12, "D s={s}");
            assert!((b.pgf(s, 1e-12).unwrap() - bb).abs() < 1e-12, "B s={s}");
        }
    }

    #[test]
    fn pareto_pgf_budget_is_reported() {
        let b = size_biased(&DegreePmf::pareto_discretized(2.5, 2).unwrap()).unwrap();
        assert!(b.pgf(0.9, 1e-12).is_ok());
        match b.complement_at(1e-9) {
            Err(PgfError::TermBudget { achieved }) => assert!(achieved > 0.0),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn pgf_is_monotone_and_convex_on_grid() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let b = size_biased(&d).unwrap();
        let t = thin(&b, 0.6).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let laws: [&dyn Pgf; 3] = [&d, &b, &t];
        for h in laws {
            let v: Vec<f64> = grid.iter().map(|s| h.pgf(*s, 1e-12).unwrap()).collect();
            for w in v.windows(2) {
                assert!(w[1] >= w[0] - 1e-13);
            }
            for w in v.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
            }
        }
    }

    #[test]
    fn thinning_examples() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let same = thin(&d, 1.0).unwrap();
        for k in 0..20 {
            assert_eq!(same.pmf(k), d.pmf(k));
        }
        let two = thin(&DegreePmf::point_mass(2), 0.5).unwrap();
        assert!((two.pmf(0) - 0.25).abs() < 1e-15);
        assert!((two.pmf(1) - 0.5).abs() < 1e-15);
        assert!((two.pmf(2) - 0.25).abs() < 1e-15);
        assert!(thin(&d, 0.0).is_err());
        assert!(thin(&d, 1.5).is_err());
    }

    #[test]
    fn thinned_pmf_sums_to_one() {
        let t = thin(&DegreePmf::zipf(2.5, 2).unwrap(), 0.7).unwrap();
        let head: f64 = (0..2000).map(|j| t.pmf(j)).sum();
        let tail = t.base().survival(2000);
        assert!(head <= 1.0 + 1e-9 && head + tail >= 1.0 - 1e-9);
    }

    #[test]
    fn thinning_composes() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let twice = thin(&thin(&d, 0.8).unwrap(), 0.5).unwrap();
        let once = thin(&d, 0.4).unwrap();
        for j in 0..8 {
            assert!((twice.pmf(j) - once.pmf(j)).abs() < 1e-9, "j={j}");
        }
        for &s in &[0.2, 0.9, 0.999] {
            let a = twice.pgf(s, 1e-12).unwrap();
            let b = once.pgf(s, 1e-12).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn thinned_sampling_matches_pmf() {
        let t = thin(&DegreePmf::zipf(2.5, 2).unwrap(), 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            let x = t.sample(&mut rng);
            if (x as usize) < counts.len() {
                counts[x as usize] += 1;
            }
        }
        for (j, c) in counts.iter().enumerate() {
            let p = t.pmf(j as u64);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(((*c as f64 / n as f64) - p).abs() < 5.0 * se + 1e-12, "j={j}");
        }
    }

    #[test]
    fn thinned_tail_exponent_is_preserved() {
        let t = thin(&DegreePmf::zipf(2.5, 2).unwrap(), 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..1_000_000).map(|_| t.sample(&mut rng) as f64).collect();
        let alpha = hill_estimate(&xs, 0.01).unwrap();
        assert!((alpha - 1.5).abs() <= 0.15, "alpha={alpha}");
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p2 = DegreePmf::point_mass(2);
        assert!((0..1000).all(|_| p2.sample(&mut rng) == 2));

        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let n = 1_000_000;
        let xs = d.sample_many(n, &mut rng);
        let mean = xs.iter().map(|x| *x as f64).sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (*x as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let oracle = series_oracle(1.5, 2) / series_oracle(2.5, 2);
        assert!((mean - oracle).abs() < 3.0 * se, "mean={mean} oracle={oracle} se={se}");

        let t = d.tail_constants().unwrap();
        for k in [10u64, 100] {
            let frac = xs.iter().filter(|x| **x > k).count() as f64 / n as f64;
            let scaled = frac * (k as f64).powf(1.5);
            assert!(scaled >= t.lower && scaled <= t.upper, "k={k} scaled={scaled} {t:?}");
        }
    }

    #[test]
    fn sampling_chi_square() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000usize;
        let mut counts = alloc::vec![0usize; 52];
        for _ in 0..n {
            let x = d.sample(&mut rng) as usize;
            counts[x.min(51)] += 1;
        }
        let mut stat = 0.0;
        let mut cells = 0;
        for k in 2..=51u64 {
            let p = if k == 51 { d.survival(50) } else { d.pmf(k) };
            let e = p * n as f64;
            stat += (counts[k as usize] as f64 - e).powi(2) / e;
            cells += 1;
        }
        let pval = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
        assert!(pval > 0.001, "chi2={stat} p={pval}");
    }

    #[test]
    fn size_biased_sampler_reaches_far_tail() {
        let b = size_biased(&DegreePmf::zipf(2.5, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs = b.sample_many(200_000, &mut rng);
        let far = xs.iter().filter(|x| **x > TABLE_LIMIT).count() as f64 / xs.len() as f64;
        let p = b.survival(TABLE_LIMIT);
        assert!((far - p).abs() < 5.0 * (p / 200_000.0).sqrt());
        assert!(xs.iter().all(|x| *x >= 1));
    }

    #[test]
    fn hill_recovers_continuous_pareto_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f64> = (0..200_000).map(|_| open_unit(&mut rng).powf(-1.0 / 1.5)).collect();
        let a = hill_estimate(&xs, 0.01).unwrap();
        assert!((a - 1.5).abs() < 0.1);
        assert!(hill_estimate(&[1.0, 2.0], 0.01).is_none());
    }
}
