//! Two-stage age-dependent branching processes, explosion times and the
//! integral criterion for explosiveness.
//!
//! The root dies at time 0 leaving `D` children; every later individual lives
//! an independent lifetime `Y` and leaves `B` children at death.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::distributions::{IntegerLaw, Pgf, PgfError};
use crate::weights::WeightLaw;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BranchingError {
    #[error("lifetime cdf is not bounded above and below by linear functions near 0")]
    LifetimeNotLinearAtZero,
    #[error("generating function failed: {0}")]
    Pgf(#[from] PgfError),
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
}

#[derive(Debug, Clone)]
pub struct AgeDependentBp<D, B> {
    pub root: D,
    pub offspring: B,
    pub lifetime: WeightLaw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BpStop {
    /// Stop after this many non-root deaths.
    Deaths(usize),
    /// Stop before the first death after time `t`.
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedDeaths,
    ReachedTime,
    Extinct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Death {
    pub time: f64,
    pub offspring: u64,
    /// Alive individuals right after this death.
    pub alive_after: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpTrajectory {
    pub root_offspring: u64,
    /// Non-root deaths in time order; `deaths[m-1].time` is `V_m`.
    pub deaths: Vec<Death>,
    pub reason: StopReason,
}

impl BpTrajectory {
    /// `V_m`, the time of the `m`-th non-root death.
    pub fn v(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.deaths.get(i)).map(|d| d.time)
    }

    /// Alive count just after time `t`.
    pub fn alive_at(&self, t: f64) -> u128 {
        let i = self.deaths.partition_point(|d| d.time <= t);
        if i == 0 {
            self.root_offspring as u128
        } else {
            self.deaths[i - 1].alive_after
        }
    }
}

/// A sibling group whose members die in increasing order. Only the next death
/// is materialized: successive order statistics of `r` i.i.d. lifetimes are
/// generated from the upper-tail probability of the previous one.
#[derive(Debug, Clone, Copy)]
struct Family {
    birth: f64,
    remaining: u64,
    /// `ln P(Y > previous order statistic)`.
    log_tail: f64,
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    family: u32,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.family.cmp(&self.family))
    }
}

impl<D: IntegerLaw, B: IntegerLaw> AgeDependentBp<D, B> {
    pub fn new(root: D, offspring: B, lifetime: WeightLaw) -> Self {
        Self { root, offspring, lifetime }
    }

    /// Event-driven simulation, exact in distribution.
    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R, stop: BpStop) -> BpTrajectory {
        let root_offspring = self.root.sample(rng);
        let mut families: Vec<Family> = Vec::new();
        let mut queue = BinaryHeap::new();
        let mut alive = root_offspring as u128;
        let mut deaths = Vec::new();

        let schedule = |families: &mut Vec<Family>, queue: &mut BinaryHeap<Scheduled>, id: usize, rng: &mut R| {
            let f = &mut families[id];
            if f.remaining == 0 {
                return;
            }
            let v: f64 = 1.0 - rng.random::<f64>();
            f.log_tail += libm::log(v) / f.remaining as f64;
            f.remaining -= 1;
            let time = f.birth + self.lifetime.quantile_upper_log(f.log_tail);
            queue.push(Scheduled { time, family: id as u32 });
        };

        families.push(Family { birth: 0.0, remaining: root_offspring, log_tail: 0.0 });
        schedule(&mut families, &mut queue, 0, rng);
        let reason = loop {
            if let BpStop::Deaths(m) = stop {
                if deaths.len() >= m {
                    break StopReason::ReachedDeaths;
                }
            }
            let Some(next) = queue.pop() else {
                break StopReason::Extinct;
            };
            if let BpStop::Time(t) = stop {
                if next.time > t {
                    break StopReason::ReachedTime;
                }
            }
            schedule(&mut families, &mut queue, next.family as usize, rng);
            let k = self.offspring.sample(rng);
            alive = alive + k as u128 - 1;
            deaths.push(Death { time: next.time, offspring: k, alive_after: alive });
            if k > 0 {
                families.push(Family { birth: next.time, remaining: k, log_tail: 0.0 });
                let id = families.len() - 1;
                schedule(&mut families, &mut queue, id, rng);
            }
        };
        BpTrajectory { root_offspring, deaths, reason }
    }

    /// `V_M` with the convergence flag `|V_M - V_{M/2}| < tol`.
    pub fn explosion_time<R: Rng + ?Sized>(&self, rng: &mut R, m: usize, tol: f64) -> ExplosionEstimate {
        assert!(m >= 2, "explosion_time needs M >= 2");
        let t = self.simulate(rng, BpStop::Deaths(m));
        match (t.v(m), t.v(m / 2)) {
            (Some(vm), Some(vh)) => ExplosionEstimate { value: vm, half: vh, converged: vm - vh < tol, extinct: false },
            _ => {
                let last = t.deaths.last().map_or(0.0, |d| d.time);
                ExplosionEstimate { value: last, half: last, converged: false, extinct: true }
            }
        }
    }

    /// `R` independent explosion-time estimates.
    pub fn explosion_sample<R: Rng + ?Sized>(&self, rng: &mut R, replicas: usize, m: usize, tol: f64) -> Vec<ExplosionEstimate> {
        (0..replicas).map(|_| self.explosion_time(rng, m, tol)).collect()
    }
}

impl<D, B: Pgf> AgeDependentBp<D, B> {
    /// Integral criterion for the offspring law, refused unless the lifetime
    /// cdf is linearly sandwiched near 0.
    pub fn grey_verdict(&self, eps: f64, config: &QuadratureConfig) -> Result<ExplosivenessVerdict, BranchingError> {
        if self.lifetime.linear_sandwich(eps).is_none() {
            return Err(BranchingError::LifetimeNotLinearAtZero);
        }
        grey_criterion(&self.offspring, eps, config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplosionEstimate {
    /// `V_M`.
    pub value: f64,
    /// `V_{M/2}`.
    pub half: f64,
    pub converged: bool,
    /// Died out before `M` deaths; `value` is then the last death time.
    pub extinct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Smallest grid point `u`.
    pub floor: f64,
    /// Grid points used for the tail exponent fit.
    pub fit_points: usize,
    /// Relative change of `(1 - h(1-u))/u` below which the derivative is
    /// taken as finite.
    pub derivative_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { floor: 1e-12, fit_points: 10, derivative_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Explosive,
    Conservative,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplosivenessVerdict {
    pub verdict: Verdict,
    pub derivative_diverges: bool,
    /// `(1 - h(1-u))/u` at the smallest grid point.
    pub derivative_at_floor: f64,
    /// Fitted exponent `θ` in `s - h(s) ~ (1-s)^θ`, if `s - h(s) > 0` on the grid.
    pub theta: Option<f64>,
    /// `∫_{1-ε}^1 ds/(s - h(s))`; `None` when judged divergent.
    pub integral: Option<f64>,
    /// Share of the integral coming from the analytic tail below the floor.
    pub tail_share: f64,
    pub grid_points: usize,
}

// 8-point Gauss–Legendre on [-1, 1].
const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Numerical version of: explosive iff `h'(1) = ∞` and
/// `∫_{1-ε}^1 ds / (s - h(s)) < ∞`.
///
/// With `u = 1 - s` the integrand is `1 / (c(u) - u)`, `c(u) = 1 - h(1-u)`.
/// The integral is split into panels `[ε 2^{-j-1}, ε 2^{-j}]` integrated in
/// `ln u`, plus the tail `u_J / (f(u_J)(1-θ))` below the floor.
pub fn grey_criterion<P: Pgf + ?Sized>(h: &P, eps: f64, config: &QuadratureConfig) -> Result<ExplosivenessVerdict, BranchingError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BranchingError::BadEpsilon(eps));
    }
    let f = |u: f64| -> Result<f64, PgfError> { Ok(h.complement_at(u)?.value - u) };

    let mut grid = Vec::new();
    let mut u = eps;
    while u >= config.floor {
        grid.push(u);
        u *= 0.5;
    }
    let mut fs = Vec::with_capacity(grid.len());
    let mut derivative = Vec::with_capacity(grid.len());
    for &u in &grid {
        let c = h.complement_at(u)?.value;
        fs.push(c - u);
        derivative.push(c / u);
    }

    // derivative at 1: finite iff c(u)/u settles down
    let k = config.fit_points.min(derivative.len() - 1);
    let tail_d = &derivative[derivative.len() - k - 1..];
    let stable = tail_d
        .windows(2)
        .all(|w| libm::fabs(w[1] - w[0]) <= config.derivative_tol * libm::fabs(w[0]));
    let last_d = *derivative.last().unwrap();
    let growing = tail_d.windows(2).all(|w| w[1] > w[0]) && {
        let xs: Vec<f64> = grid[grid.len() - k - 1..].iter().map(|u| libm::log(*u)).collect();
        let ys: Vec<f64> = tail_d.iter().map(|d| libm::log(*d)).collect();
        least_squares_slope(&xs, &ys) < -0.02
    };
    let derivative_diverges = growing && !stable;

    let positive = fs.iter().all(|v| *v > 0.0);
    let theta = positive.then(|| {
        let tail_u = &grid[grid.len() - k - 1..];
        let tail_f = &fs[fs.len() - k - 1..];
        let xs: Vec<f64> = tail_u.iter().map(|u| libm::log(*u)).collect();
        let ys: Vec<f64> = tail_f.iter().map(|v| libm::log(*v)).collect();
        least_squares_slope(&xs, &ys)
    });

    let mut integral = None;
    let mut tail_share = 1.0;
    if let Some(th) = theta {
        if th < 0.98 {
            let mut total = 0.0;
            for w in grid.windows(2) {
                let (a, b) = (libm::log(w[1]), libm::log(w[0]));
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    for sgn in [-1.0, 1.0] {
                        let uu = libm::exp(mid + sgn * half * x);
                        total += wt * half * uu / f(uu)?;
                    }
                }
            }
            let u_last = *grid.last().unwrap();
            let tail = u_last / (fs[fs.len() - 1] * (1.0 - th));
            total += tail;
            tail_share = tail / total;
            if tail_share < 1e-3 {
                integral = Some(total);
            }
        }
    }

    let verdict = if !derivative_diverges && stable {
        Verdict::Conservative
    } else if theta.is_none_or(|t| t > 1.02) {
        Verdict::Conservative
    } else if derivative_diverges && integral.is_some() {
        Verdict::Explosive
    } else {
        Verdict::Inconclusive
    };
    Ok(ExplosivenessVerdict {
        verdict,
        derivative_diverges,
        derivative_at_floor: last_d,
        theta,
        integral,
        tail_share,
        grid_points: grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{size_biased, ClosedFormPgf, DegreePmf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn exp1() -> WeightLaw {
        WeightLaw::exponential(1.0).unwrap()
    }

    #[test]
    fn deterministic_chain_matches_pure_birth_mean() {
        // D = 2 alive at all times, each dying at rate 1: V_m is a sum of m
        // independent Exp(2) gaps, so E V_5 = 5/2 and Var V_5 = 5/4.
        let bp = AgeDependentBp::new(DegreePmf::point_mass(2), DegreePmf::point_mass(1), exp1());
        let mut r = rng(1);
        let reps = 100_000;
        let mean = (0..reps).map(|_| bp.simulate(&mut r, BpStop::Deaths(5)).v(5).unwrap()).sum::<f64>() / reps as f64;
        let se = libm::sqrt(1.25 / reps as f64);
        assert!((mean - 2.5).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn childless_offspring_goes_extinct_after_root_children() {
        let bp = AgeDependentBp::new(DegreePmf::point_mass(3), DegreePmf::point_mass(0), exp1());
        let t = bp.simulate(&mut rng(2), BpStop::Deaths(100));
        assert_eq!(t.reason, StopReason::Extinct);
        assert_eq!(t.deaths.len(), 3);
        assert_eq!(t.deaths.last().unwrap().alive_after, 0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let bp = AgeDependentBp::new(d.clone(), size_biased(&d).unwrap(), exp1());
        assert_eq!(bp.simulate(&mut rng(3), BpStop::Deaths(500)), bp.simulate(&mut rng(3), BpStop::Deaths(500)));
    }

    #[test]
    fn bookkeeping_and_monotonicity() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let bp = AgeDependentBp::new(d.clone(), size_biased(&d).unwrap(), exp1());
        let mut r = rng(4);
        for _ in 0..50 {
            let t = bp.simulate(&mut r, BpStop::Deaths(2000));
            let mut alive = t.root_offspring as u128;
            for w in t.deaths.windows(2) {
                assert!(w[0].time < w[1].time);
            }
            for d in &t.deaths {
                alive = alive + d.offspring as u128 - 1;
                assert_eq!(alive, d.alive_after);
            }
        }
    }

    #[test]
    fn time_stop_keeps_deaths_before_horizon() {
        let bp = AgeDependentBp::new(DegreePmf::point_mass(2), DegreePmf::point_mass(2), exp1());
        let t = bp.simulate(&mut rng(5), BpStop::Time(1.5));
        assert_eq!(t.reason, StopReason::ReachedTime);
        assert!(t.deaths.iter().all(|d| d.time <= 1.5));
        assert!(t.alive_at(1.5) >= 2);
    }

    #[test]
    fn conservative_process_does_not_converge() {
        let bp = AgeDependentBp::new(DegreePmf::point_mass(2), DegreePmf::point_mass(1), exp1());
        let mut r = rng(6);
        for m in [2, 100, 10_000] {
            assert!(!bp.explosion_time(&mut r, m, 1e-3).converged);
        }
    }

    #[test]
    fn m_equal_two_applies_rule() {
        let bp = AgeDependentBp::new(DegreePmf::point_mass(2), DegreePmf::point_mass(1), exp1());
        let e = bp.explosion_time(&mut rng(7), 2, 1e9);
        assert!(e.converged && e.value > e.half);
    }

    #[test]
    fn heavy_tailed_process_explodes() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let bp = AgeDependentBp::new(d.clone(), size_biased(&d).unwrap(), exp1());
        let sample = bp.explosion_sample(&mut rng(8), 300, 10_000, 1e-3);
        let ok = sample.iter().filter(|e| e.converged).count();
        assert!(ok as f64 >= 0.99 * 300.0, "{ok}");
        assert!(bp.explosion_sample(&mut rng(8), 0, 10, 1e-3).is_empty());
    }

    #[test]
    fn criterion_examples() {
        let cfg = QuadratureConfig::default();
        let v = grey_criterion(&ClosedFormPgf::Identity, 0.1, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Conservative);
        assert!(!v.derivative_diverges);

        let v = grey_criterion(&ClosedFormPgf::Poisson(2.0), 0.1, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Conservative);
        assert!((v.derivative_at_floor - 2.0).abs() < 1e-6);

        for k in 2..5 {
            let v = grey_criterion(&ClosedFormPgf::PointMass(k), 0.1, &cfg).unwrap();
            assert_eq!(v.verdict, Verdict::Conservative);
        }

        let v = grey_criterion(&ClosedFormPgf::PowerComplement(0.5), 0.1, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Explosive);
        // ∫_0^ε du/(√u - u) = -2 ln(1 - √ε)
        let exact = -2.0 * libm::log(1.0 - libm::sqrt(0.1));
        assert!((v.integral.unwrap() / exact - 1.0).abs() < 1e-6, "{v:?}");

        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let v = grey_criterion(&size_biased(&d).unwrap(), 0.1, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Explosive);
        assert!((v.theta.unwrap() - 0.5).abs() < 0.05);
    }

    #[test]
    fn criterion_refuses_shifted_lifetimes() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let bp = AgeDependentBp::new(d.clone(), size_biased(&d).unwrap(), WeightLaw::one_plus_uniform(1.0).unwrap());
        assert_eq!(bp.grey_verdict(0.1, &QuadratureConfig::default()).unwrap_err(), BranchingError::LifetimeNotLinearAtZero);
        let bp = AgeDependentBp::new(d.clone(), size_biased(&d).unwrap(), exp1());
        assert_eq!(bp.grey_verdict(0.1, &QuadratureConfig::default()).unwrap().verdict, Verdict::Explosive);
    }
}
