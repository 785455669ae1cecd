//! Predictions for bond-percolated configuration models and the layer
//! decomposition of the percolated graph by degree thresholds.
//!
//! Edge retention `p` acts on each half-edge as retention `√p`. With
//! `B = D* − 1` and `B^p = BIN(B, √p)`:
//!
//! * `ξ(p)` is the smallest fixed point of `s ↦ 1 − p + p·h_B(s)`: the
//!   probability that a given edge end does not lead to the giant.
//! * `χ(p)` is the smallest fixed point of `s ↦ 1 − √p + √p·h_{B^p}(s)`: the
//!   same quantity for a half-edge that survived thinning.
//! * They satisfy `ξ = 1 − √p + √p·χ`, the giant holds a fraction
//!   `1 − h_D(ξ)` of the vertices and a fraction `P(D^p = k)(1 − χ^k)` of
//!   vertices with thinned degree `k`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::distributions::{size_biased, thin, DegreePmf, DistError, IntegerLaw, Pgf, PgfError};
use crate::graph::MultiGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercolationError {
    #[error("generating function failed: {0}")]
    Pgf(#[from] PgfError),
    #[error("distribution error: {0}")]
    Dist(#[from] DistError),
    #[error("retention probability must lie in (0, 1], got {0}")]
    BadProbability(f64),
    #[error("rho0 = {rho0} must lie in (0, {max})")]
    Rho0OutOfRange { rho0: f64, max: f64 },
    #[error("constant C must be positive, got {0}")]
    BadConstant(f64),
    #[error("need at least 16 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("threshold recursion and closed form disagree at layer {layer}")]
    ThresholdMismatch { layer: usize },
}

/// Iteration increment below which a fixed point is accepted.
pub const FIXED_POINT_STEP: f64 = 1e-12;
pub const FIXED_POINT_CAP: u64 = 1_000_000;
const PGF_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub value: f64,
    pub iterations: u64,
    /// `|f(value) − value|`.
    pub residual: f64,
    pub capped: bool,
    /// Iterates never decreased.
    pub monotone: bool,
    /// `f(x) > x` just below the root, so no smaller root was skipped.
    pub smallest_verified: bool,
}

/// Smallest fixed point in `[0, 1]` of a nondecreasing map, by iteration
/// from 0.
///
/// Stops when the step is below [`FIXED_POINT_STEP`] and, for linearly
/// converging iterates, the extrapolated distance to the limit is below
/// a tenth of that.
pub fn smallest_fixed_point(f: impl Fn(f64) -> Result<f64, PgfError>) -> Result<FixedPoint, PgfError> {
    let mut s = 0.0;
    let mut prev_step = f64::INFINITY;
    let mut monotone = true;
    let mut iterations = 0;
    let mut capped = true;
    while iterations < FIXED_POINT_CAP {
        let next = f(s)?.clamp(0.0, 1.0);
        iterations += 1;
        let step = next - s;
        if step < -1e-15 {
            monotone = false;
        }
        s = next;
        let step = libm::fabs(step);
        if step == 0.0 {
            capped = false;
            break;
        }
        let ratio = step / prev_step;
        prev_step = step;
        if step < FIXED_POINT_STEP && ratio < 1.0 && step * ratio / (1.0 - ratio) < 0.1 * FIXED_POINT_STEP {
            capped = false;
            break;
        }
    }
    let residual = libm::fabs(f(s)? - s);
    let delta = 1e-6;
    let smallest_verified = s <= delta || f(s - delta)? > s - delta;
    Ok(FixedPoint { value: s, iterations, residual, capped, monotone, smallest_verified })
}

/// Extinction probability of a Galton–Watson process with offspring pgf `h`.
pub fn extinction_probability<P: Pgf + ?Sized>(offspring: &P) -> Result<FixedPoint, PgfError> {
    smallest_fixed_point(|s| offspring.pgf(s, PGF_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointReport {
    pub p: f64,
    pub xi: f64,
    pub chi: f64,
    pub iterations: u64,
    /// Largest of the two fixed-point residuals.
    pub residual: f64,
    /// `|ξ − (1 − √p + √p·χ)|`.
    pub identity_residual: f64,
    pub capped: bool,
    pub monotone: bool,
    pub smallest_verified: bool,
}

pub fn fixed_points(degree: &DegreePmf, p: f64) -> Result<FixedPointReport, PercolationError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(PercolationError::BadProbability(p));
    }
    let b = size_biased(degree)?;
    let r = libm::sqrt(p);
    let bp = thin(&b, r)?;
    let xi = smallest_fixed_point(|s| Ok(1.0 - p + p * b.pgf(s, PGF_TOL)?))?;
    let chi = smallest_fixed_point(|s| Ok(1.0 - r + r * bp.pgf(s, PGF_TOL)?))?;
    Ok(FixedPointReport {
        p,
        xi: xi.value,
        chi: chi.value,
        iterations: xi.iterations + chi.iterations,
        residual: xi.residual.max(chi.residual),
        identity_residual: libm::fabs(xi.value - (1.0 - r + r * chi.value)),
        capped: xi.capped || chi.capped,
        monotone: xi.monotone && chi.monotone,
        smallest_verified: xi.smallest_verified && chi.smallest_verified,
    })
}

/// `1 − h_D(ξ(p))`.
pub fn giant_fraction_prediction(degree: &DegreePmf, p: f64) -> Result<f64, PercolationError> {
    let report = fixed_points(degree, p)?;
    giant_fraction_from(degree, &report)
}

pub fn giant_fraction_from(degree: &DegreePmf, report: &FixedPointReport) -> Result<f64, PercolationError> {
    Ok(degree.complement_at(1.0 - report.xi)?.value)
}

/// `P(D^p = k)(1 − χ(p)^k)`.
pub fn degree_profile_prediction(degree: &DegreePmf, p: f64, k: u64) -> Result<f64, PercolationError> {
    let report = fixed_points(degree, p)?;
    degree_profile_from(degree, &report, k)
}

pub fn degree_profile_from(degree: &DegreePmf, report: &FixedPointReport, k: u64) -> Result<f64, PercolationError> {
    if k == 0 {
        return Ok(0.0);
    }
    let thinned = thin(degree, libm::sqrt(report.p))?;
    Ok(thinned.pmf(k) * (1.0 - libm::pow(report.chi, k as f64)))
}

/// Constants of the degree-threshold layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerParams {
    pub n: usize,
    pub tau: f64,
    pub rho0: f64,
    /// Multiplier of `log n` in the threshold recursion.
    pub c: f64,
    /// Upper bound `ρ` with `ρ0 < ρ(τ − 2)`.
    pub rho: f64,
}

/// `e_i = Σ_{k=1}^{i} (τ−2)^{−k} = ((τ−2)^{−i} − 1)/(3 − τ)`.
pub fn layer_exponent(tau: f64, i: u32) -> f64 {
    (libm::pow(tau - 2.0, -(i as f64)) - 1.0) / (3.0 - tau)
}

/// Layers with index below this bound are admissible.
pub fn depth_bound(tau: f64, rho0: f64) -> f64 {
    -libm::log((tau - 1.0) * rho0) / libm::fabs(libm::log(tau - 2.0))
}

/// `(n / (b log n))^{1/(τ−1)}`.
pub fn max_degree_bound(n: usize, tau: f64, b: f64) -> f64 {
    let n = n as f64;
    libm::pow(n / (b * libm::log(n)), 1.0 / (tau - 1.0))
}

/// `ln u_i` for `i < count`: by the recursion `u_{i+1} = (u_i / (C ln n))^{1/(τ−2)}`
/// from `u_0 = n^{ρ0}`, and by the closed form `u_i = n^{ρ0 (τ−2)^{−i}} (C ln n)^{−e_i}`.
pub fn log_thresholds(params: &LayerParams, count: usize) -> (Vec<f64>, Vec<f64>) {
    let ln_n = libm::log(params.n as f64);
    let ln_c = libm::log(params.c * ln_n);
    let a = params.tau - 2.0;
    let mut rec = Vec::with_capacity(count);
    let mut closed = Vec::with_capacity(count);
    let mut l = params.rho0 * ln_n;
    for i in 0..count {
        rec.push(l);
        closed.push(params.rho0 * libm::pow(a, -(i as f64)) * ln_n - layer_exponent(params.tau, i as u32) * ln_c);
        l = (l - ln_c) / a;
    }
    (rec, closed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `u_1 > u_0`: layers shrink towards the hubs.
    Increasing,
    /// `u_1 ≤ u_0`: thresholds fall and layers grow.
    Decreasing,
}

/// Materialized layers `Γ_i = {v : D^p_v > u_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDecomposition {
    pub params: LayerParams,
    pub log_thresholds: Vec<f64>,
    pub layers: Vec<Vec<u32>>,
    /// Last nonempty layer.
    pub i_star: Option<usize>,
    pub depth_bound: f64,
    pub regime: Regime,
    /// Layer count hit [`MAX_LAYERS`] before a layer came out empty.
    pub truncated: bool,
    pub v_star: u32,
    pub max_degree: u64,
}

pub const MAX_LAYERS: usize = 64;

pub fn build_layers<R: Rng + ?Sized>(
    degrees: &[u64],
    params: LayerParams,
    rng: &mut R,
) -> Result<LayerDecomposition, PercolationError> {
    if params.n < 16 {
        return Err(PercolationError::TooFewVertices(params.n));
    }
    let max = params.rho * (params.tau - 2.0);
    if !(params.rho0 > 0.0 && params.rho0 < max) {
        return Err(PercolationError::Rho0OutOfRange { rho0: params.rho0, max });
    }
    if !(params.c > 0.0) {
        return Err(PercolationError::BadConstant(params.c));
    }
    let (rec, closed) = log_thresholds(&params, MAX_LAYERS);
    for (i, (a, b)) in rec.iter().zip(&closed).enumerate() {
        if libm::fabs(a - b) > 1e-9 * libm::fabs(*b).max(1.0) {
            return Err(PercolationError::ThresholdMismatch { layer: i });
        }
    }
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let tied: Vec<u32> = (0..degrees.len() as u32).filter(|&v| degrees[v as usize] == max_degree).collect();
    let v_star = tied[rng.random_range(0..tied.len())];

    let mut layers = Vec::new();
    let mut truncated = true;
    for &l in &rec {
        let layer: Vec<u32> =
            (0..degrees.len() as u32).filter(|&v| libm::log(degrees[v as usize] as f64) > l).collect();
        if layer.is_empty() {
            layers.push(layer);
            truncated = false;
            break;
        }
        layers.push(layer);
    }
    let i_star = layers.iter().rposition(|l| !l.is_empty());
    let regime = if rec[1] > rec[0] { Regime::Increasing } else { Regime::Decreasing };
    Ok(LayerDecomposition {
        params,
        log_thresholds: rec[..layers.len()].to_vec(),
        layers,
        i_star,
        depth_bound: depth_bound(params.tau, params.rho0),
        regime,
        truncated,
        v_star,
        max_degree,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerRow {
    pub index: usize,
    pub size: usize,
    /// Members with a neighbour in the next layer.
    pub linked: usize,
    /// `None` for an empty layer.
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerConnectivity {
    pub rows: Vec<LayerRow>,
    /// Share of `Γ_{i*}` within two hops of `v*`.
    pub two_hop_fraction: Option<f64>,
}

pub fn check_layer_connectivity(dec: &LayerDecomposition, graph: &MultiGraph) -> LayerConnectivity {
    let n = graph.vertex_count();
    let mut rows = Vec::new();
    let Some(i_star) = dec.i_star else {
        return LayerConnectivity { rows, two_hop_fraction: None };
    };
    let mut in_next = vec![false; n];
    for i in 0..i_star {
        in_next.iter_mut().for_each(|x| *x = false);
        for &v in &dec.layers[i + 1] {
            in_next[v as usize] = true;
        }
        let layer = &dec.layers[i];
        let linked = layer.iter().filter(|&&v| graph.arcs(v).any(|a| in_next[a.to as usize])).count();
        rows.push(LayerRow {
            index: i,
            size: layer.len(),
            linked,
            fraction: (!layer.is_empty()).then(|| linked as f64 / layer.len() as f64),
        });
    }
    // distances up to 2 from v*
    let mut dist = vec![u8::MAX; n];
    let mut queue = VecDeque::from([dec.v_star]);
    dist[dec.v_star as usize] = 0;
    while let Some(x) = queue.pop_front() {
        if dist[x as usize] == 2 {
            continue;
        }
        for a in graph.arcs(x) {
            if dist[a.to as usize] == u8::MAX {
                dist[a.to as usize] = dist[x as usize] + 1;
                queue.push_back(a.to);
            }
        }
    }
    let top = &dec.layers[i_star];
    let near = top.iter().filter(|&&v| dist[v as usize] <= 2).count();
    LayerConnectivity { rows, two_hop_fraction: Some(near as f64 / top.len() as f64) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ClosedFormPgf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn min_degree_two_never_dies_out() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let r = fixed_points(&d, 1.0).unwrap();
        assert_eq!(r.xi, 0.0);
        assert_eq!(r.chi, 0.0);
        assert_eq!(giant_fraction_prediction(&d, 1.0).unwrap(), 1.0);
        let e = extinction_probability(&size_biased(&d).unwrap()).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn cycles_only_percolate_to_nothing() {
        let d = DegreePmf::point_mass(2);
        for p in [0.3, 0.5, 0.8, 0.99] {
            let r = fixed_points(&d, p).unwrap();
            assert!((r.chi - 1.0).abs() <= 1e-12, "{r:?}");
            assert!((r.xi - 1.0).abs() <= 1e-12);
            assert!(giant_fraction_prediction(&d, p).unwrap() <= 1e-11);
        }
    }

    #[test]
    fn identity_holds_for_power_law() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        for p in [0.05, 0.3, 0.49, 0.5, 0.8, 1.0] {
            let r = fixed_points(&d, p).unwrap();
            assert!(r.identity_residual <= 1e-9, "{r:?}");
            assert!(r.residual <= 1e-10);
            assert!(r.monotone && r.smallest_verified && !r.capped);
        }
    }

    #[test]
    fn extinction_of_simple_laws() {
        // h(s) = 1/4 + s^2 * 3/4 has roots 1/3 and 1
        let e = smallest_fixed_point(|s| Ok(0.25 + 0.75 * s * s)).unwrap();
        assert!((e.value - 1.0 / 3.0).abs() < 1e-11);
        assert!(e.smallest_verified);
        let e = extinction_probability(&ClosedFormPgf::Identity).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn thinned_extinction_matches_simulation() {
        // B^p with √p = 0.7: simulate Galton–Watson trees, call a tree
        // surviving once it holds 2000 individuals in a generation.
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        let b = size_biased(&d).unwrap();
        let bp = thin(&b, 0.7).unwrap();
        let chi = extinction_probability(&bp).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let reps = 100_000;
        let mut dead = 0;
        for _ in 0..reps {
            let mut gen: u64 = 1;
            while gen > 0 && gen < 2000 {
                let mut next = 0u64;
                for _ in 0..gen {
                    next = next.saturating_add(bp.sample(&mut rng));
                }
                gen = next;
            }
            if gen == 0 {
                dead += 1;
            }
        }
        let freq = dead as f64 / reps as f64;
        assert!((freq - chi).abs() <= 0.01, "{freq} vs {chi}");
    }

    #[test]
    fn profile_examples() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        assert_eq!(degree_profile_prediction(&d, 0.5, 0).unwrap(), 0.0);
        // ξ = χ = 0 at p = 1: the profile is the degree law itself
        for k in 1..6 {
            assert!((degree_profile_prediction(&d, 1.0, k).unwrap() - d.pmf(k)).abs() < 1e-15);
        }
        let r = fixed_points(&d, 0.5).unwrap();
        let total: f64 = (1..2000).map(|k| degree_profile_from(&d, &r, k).unwrap()).sum();
        let giant = giant_fraction_from(&d, &r).unwrap();
        assert!((total - giant).abs() < 5e-3, "{total} vs {giant}");
    }

    #[test]
    fn rejects_bad_p() {
        let d = DegreePmf::zipf(2.5, 2).unwrap();
        assert!(fixed_points(&d, 0.0).is_err());
        assert!(fixed_points(&d, 1.1).is_err());
    }

    #[test]
    fn threshold_formulas() {
        assert!((layer_exponent(2.5, 1) - 2.0).abs() < 1e-15);
        assert!((layer_exponent(2.5, 2) - 6.0).abs() < 1e-15);
        assert!((depth_bound(2.5, 0.1) - 2.737).abs() < 1e-3);
        let params = LayerParams { n: 1_000_000, tau: 2.5, rho0: 0.45, c: 1.0, rho: 1.0 };
        let (rec, closed) = log_thresholds(&params, 21);
        assert!((libm::exp(rec[0]) / libm::pow(10.0, 2.7) - 1.0).abs() < 1e-12);
        let u1 = libm::pow(libm::pow(10.0, 2.7) / libm::log(1e6), 2.0);
        assert!((libm::exp(rec[1]) / u1 - 1.0).abs() < 1e-12);
        for (a, b) in rec.iter().zip(&closed) {
            assert!((a - b).abs() <= 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn layers_on_explicit_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = LayerParams { n: 100, tau: 2.5, rho0: 0.45, c: 1.0, rho: 1.0 };
        let mut degrees = vec![1u64; 100];
        degrees[7] = 90;
        degrees[8] = 90;
        degrees[9] = 20;
        let dec = build_layers(&degrees, params, &mut rng).unwrap();
        // u_0 = 100^0.45 ≈ 7.9, u_1 = (7.9 / ln 100)^2 ≈ 2.96
        assert_eq!(dec.regime, Regime::Decreasing);
        assert_eq!(dec.layers[0], vec![7, 8, 9]);
        assert!([7, 8].contains(&dec.v_star));
        assert!(build_layers(&degrees, LayerParams { rho0: 0.5, ..params }, &mut rng).is_err());
        assert!(build_layers(&degrees, LayerParams { c: 0.0, ..params }, &mut rng).is_err());
    }

    #[test]
    fn v_star_ties_are_random() {
        let params = LayerParams { n: 16, tau: 2.5, rho0: 0.2, c: 1.0, rho: 1.0 };
        let degrees = [vec![5u64; 2], vec![1; 14]].concat();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picks: Vec<u32> = (0..200).map(|_| build_layers(&degrees, params, &mut rng).unwrap().v_star).collect();
        assert!(picks.contains(&0) && picks.contains(&1));
    }

    #[test]
    fn connectivity_report_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = LayerParams { n: 16, tau: 2.5, rho0: 0.45, c: 1.0, rho: 1.0 };
        // a single nonempty layer: only the two-hop check has content
        let mut degrees = vec![1u64; 16];
        degrees[0] = 10;
        let g = MultiGraph::from_edges(16, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let mut dec = build_layers(&degrees, params, &mut rng).unwrap();
        dec.layers = vec![vec![0], vec![]];
        dec.i_star = Some(0);
        let rep = check_layer_connectivity(&dec, &g);
        assert!(rep.rows.is_empty());
        assert_eq!(rep.two_hop_fraction, Some(1.0));
        // an empty inner layer gives a vacuous row
        dec.layers = vec![vec![], vec![0]];
        dec.i_star = Some(1);
        let rep = check_layer_connectivity(&dec, &g);
        assert_eq!(rep.rows[0].fraction, None);
    }
}
