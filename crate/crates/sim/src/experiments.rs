//! Experiment harness: replica orchestration, estimators and comparisons.
//!
//! A plan expands deterministically into jobs `(cell, replica)` with
//! `seed = base_seed + job index`; every random component of a job draws from
//! its own labelled stream of that seed. Jobs run on the rayon pool and are
//! merged in job order, so outputs do not depend on scheduling.

use std::collections::VecDeque;

use fpp_core::branching::{AgeDependentBp, QuadratureConfig, Verdict};
use fpp_core::distributions::{size_biased, DegreePmf, IntegerLaw, SizeBiasedPmf};
use fpp_core::fpp::{PathWorkspace, Stop, SwgTrace};
use fpp_core::graph::{half_edge_percolate, rebuild_percolated, GraphError, MultiGraph};
use fpp_core::percolation::{self, PercolationError};
use fpp_core::stats;
use fpp_core::weights::WeightLaw;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::output::{float, Table};
use crate::seeds::stream;

/// Profile degrees `1..=PROFILE_K` are reported by the giant experiment.
pub const PROFILE_K: u64 = 10;
/// Forward-degree comparison runs over `0..=TV_K`.
pub const TV_K: u64 = 30;
/// Window of the explosiveness check that guards the explosive experiment.
pub const CRITERION_EPS: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Percolation(#[from] PercolationError),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("n = {n}, seed = {seed}: {disconnected} of {attempts} sampled pairs disconnected")]
    CellAborted { n: usize, seed: u64, disconnected: usize, attempts: usize },
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub name: String,
    pub n_grid: Vec<usize>,
    pub degree: DegreePmf,
    pub weight: WeightLaw,
    /// Pairs (or sampled vertices) per graph.
    pub pairs: usize,
    /// Seed groups, replicas or sources, depending on the experiment.
    pub replicas: usize,
    pub base_seed: u64,
    pub p_grid: Vec<f64>,
    /// Deaths per explosion-time estimate.
    pub m: usize,
    pub tol: f64,
    /// Largest neighbourhood radius of the coupling curve.
    pub k_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub cell: usize,
    pub replica: usize,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn new(name: &str, n_grid: Vec<usize>, degree: DegreePmf, weight: WeightLaw) -> Self {
        Self {
            name: name.into(),
            n_grid,
            degree,
            weight,
            pairs: 100,
            replicas: 1,
            base_seed: 1,
            p_grid: vec![0.5],
            m: 10_000,
            tol: 1e-3,
            k_max: 6,
        }
    }

    /// Cell-major job list.
    pub fn jobs(&self, cells: usize) -> Vec<Job> {
        (0..cells)
            .flat_map(|cell| (0..self.replicas).map(move |replica| (cell, replica)))
            .enumerate()
            .map(|(j, (cell, replica))| Job { cell, replica, seed: self.base_seed.wrapping_add(j as u64) })
            .collect()
    }

    fn largest_n(&self) -> Result<usize, ExperimentError> {
        self.n_grid.iter().copied().max().ok_or_else(|| ExperimentError::Plan("empty n grid".into()))
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if let Some(n) = self.n_grid.iter().find(|n| **n < 16) {
            return Err(ExperimentError::Plan(format!("n = {n} < 16")));
        }
        if self.replicas == 0 || self.pairs == 0 {
            return Err(ExperimentError::Plan("replicas and pairs must be positive".into()));
        }
        Ok(())
    }
}

/// `ln ln n`.
pub fn loglog(n: usize) -> f64 {
    (n as f64).ln().ln()
}

/// `2 / |ln(τ − 2)|`.
pub fn scaling_constant(tau: f64) -> f64 {
    2.0 / (tau - 2.0).ln().abs()
}

/// `2(τ − 2)/(τ − 1)`.
pub fn hopcount_alpha(tau: f64) -> f64 {
    2.0 * (tau - 2.0) / (tau - 1.0)
}

/// Degrees, pairing and weights drawn from the `degrees`, `pairing` and
/// `weights` streams of `seed`.
pub fn build_graph(degree: &DegreePmf, n: usize, weight: &WeightLaw, seed: u64) -> Result<MultiGraph, GraphError> {
    let degrees = degree.sample_many(n, &mut stream(seed, "degrees", 0));
    let g = MultiGraph::build_cm(&degrees, &mut stream(seed, "pairing", 0))?;
    Ok(g.with_weights(weight, &mut stream(seed, "weights", 0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairObs {
    pub u: u32,
    pub v: u32,
    pub w: f64,
    pub h: u32,
    /// Graph distance, when requested.
    pub d: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub pairs: Vec<PairObs>,
    /// Disconnected draws that were replaced.
    pub resampled: usize,
}

/// Uniform pairs of distinct vertices, redrawn while disconnected. Aborts once
/// more than half of all draws were disconnected.
pub fn sample_pairs<R: Rng + ?Sized>(
    g: &MultiGraph,
    count: usize,
    with_distance: bool,
    rng: &mut R,
    seed: u64,
) -> Result<PairSample, ExperimentError> {
    let n = g.vertex_count();
    let mut ws = PathWorkspace::new();
    let mut pairs = Vec::with_capacity(count);
    let mut resampled = 0;
    while pairs.len() < count {
        let u = rng.random_range(0..n as u32);
        let v = loop {
            let v = rng.random_range(0..n as u32);
            if v != u {
                break v;
            }
        };
        let path = ws.shortest_path(g, u, v);
        if !path.found {
            resampled += 1;
            let attempts = pairs.len() + resampled;
            if 2 * resampled > attempts && attempts >= 10 {
                return Err(ExperimentError::CellAborted { n, seed, disconnected: resampled, attempts });
            }
            continue;
        }
        let d = if with_distance { ws.graph_distance(g, u, v) } else { None };
        pairs.push(PairObs { u, v, w: path.weight, h: path.hops, d });
    }
    Ok(PairSample { pairs, resampled })
}

// ---------------------------------------------------------------- scaling

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Quartiles {
    pub fn of(xs: &[f64]) -> Self {
        Self { q25: stats::quantile(xs, 0.25), median: stats::median(xs), q75: stats::quantile(xs, 0.75) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCell {
    pub n: usize,
    pub group: usize,
    pub seed: u64,
    pub resampled: usize,
    pub w: Quartiles,
    pub h: Quartiles,
    pub d: Quartiles,
    pub sandwich_violations: usize,
    pub pairs: Vec<PairObs>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendRow {
    pub n: usize,
    /// Median over seed groups of the group medians of `X / ln ln n`.
    pub w: f64,
    pub h: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSummary {
    pub tau: f64,
    pub limit: f64,
    pub cells: Vec<ScalingCell>,
    pub trend: Vec<TrendRow>,
    pub sandwich_violations: usize,
}

fn nonincreasing(xs: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = xs.collect();
    v.windows(2).all(|w| w[1] <= w[0])
}

impl ScalingSummary {
    /// Gap `|median − limit|` per grid point, in grid order.
    pub fn gaps(&self, pick: impl Fn(&TrendRow) -> f64) -> Vec<f64> {
        self.trend.iter().map(|r| (pick(r) - self.limit).abs()).collect()
    }

    pub fn gap_nonincreasing(&self, pick: impl Fn(&TrendRow) -> f64) -> bool {
        nonincreasing(self.gaps(pick).into_iter())
    }

    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        let mut pairs = Table::new(&["n", "tau", "seed", "u", "v", "W", "H", "D"]);
        let mut cells = Table::new(&[
            "n", "group", "seed", "pairs", "resampled", "sandwich_violations", "W_q25", "W_median", "W_q75", "H_q25",
            "H_median", "H_q75", "D_q25", "D_median", "D_q75",
        ]);
        for c in &self.cells {
            for p in &c.pairs {
                pairs.push(vec![
                    c.n.to_string(),
                    float(self.tau),
                    c.seed.to_string(),
                    p.u.to_string(),
                    p.v.to_string(),
                    float(p.w),
                    p.h.to_string(),
                    p.d.map_or_else(String::new, |d| d.to_string()),
                ]);
            }
            let mut row = vec![
                c.n.to_string(),
                c.group.to_string(),
                c.seed.to_string(),
                c.pairs.len().to_string(),
                c.resampled.to_string(),
                c.sandwich_violations.to_string(),
            ];
            for q in [c.w, c.h, c.d] {
                row.extend([float(q.q25), float(q.median), float(q.q75)]);
            }
            cells.push(row);
        }
        let mut trend = Table::new(&["n", "loglog_n", "limit", "W_median", "H_median", "D_median", "W_gap", "H_gap", "D_gap"]);
        for r in &self.trend {
            trend.push(vec![
                r.n.to_string(),
                float(loglog(r.n)),
                float(self.limit),
                float(r.w),
                float(r.h),
                float(r.d),
                float((r.w - self.limit).abs()),
                float((r.h - self.limit).abs()),
                float((r.d - self.limit).abs()),
            ]);
        }
        vec![("pairs.csv", pairs), ("cells.csv", cells), ("trend.csv", trend)]
    }
}

/// Ratios `W, H, D / ln ln n` over uniform pairs; one graph per (n, seed group).
pub fn run_scaling(plan: &ExperimentPlan) -> Result<ScalingSummary, ExperimentError> {
    plan.check()?;
    if !plan.weight.is_shifted() {
        return Err(ExperimentError::Plan("scaling needs a shifted weight law Y = 1 + X".into()));
    }
    let tau = plan.degree.tau().ok_or_else(|| ExperimentError::Plan("degree law has no exponent".into()))?;
    let cells: Vec<ScalingCell> = plan
        .jobs(plan.n_grid.len())
        .into_par_iter()
        .map(|job| {
            let n = plan.n_grid[job.cell];
            let g = build_graph(&plan.degree, n, &plan.weight, job.seed)?;
            let sample = sample_pairs(&g, plan.pairs, true, &mut stream(job.seed, "pairs", 0), job.seed)?;
            let ll = loglog(n);
            let violations = sample
                .pairs
                .iter()
                .filter(|p| !(p.d.is_some_and(|d| d <= p.h) && p.h as f64 <= p.w))
                .count();
            let ratios = |f: &dyn Fn(&PairObs) -> f64| -> Quartiles {
                Quartiles::of(&sample.pairs.iter().map(|p| f(p) / ll).collect::<Vec<_>>())
            };
            Ok(ScalingCell {
                n,
                group: job.replica,
                seed: job.seed,
                resampled: sample.resampled,
                w: ratios(&|p| p.w),
                h: ratios(&|p| p.h as f64),
                d: ratios(&|p| p.d.unwrap_or(u32::MAX) as f64),
                sandwich_violations: violations,
                pairs: sample.pairs,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    let trend = plan
        .n_grid
        .iter()
        .map(|&n| {
            let group: Vec<&ScalingCell> = cells.iter().filter(|c| c.n == n).collect();
            let med = |f: &dyn Fn(&ScalingCell) -> f64| stats::median(&group.iter().map(|c| f(c)).collect::<Vec<_>>());
            TrendRow { n, w: med(&|c| c.w.median), h: med(&|c| c.h.median), d: med(&|c| c.d.median) }
        })
        .collect();
    let sandwich_violations = cells.iter().map(|c| c.sandwich_violations).sum();
    Ok(ScalingSummary { tau, limit: scaling_constant(tau), cells, trend, sandwich_violations })
}

// ---------------------------------------------------------------- explosive

#[derive(Debug, Clone, PartialEq)]
pub struct ExplosiveReport {
    pub n: usize,
    pub ks: f64,
    /// `W_n` over uniform pairs.
    pub w: Vec<f64>,
    /// `V¹ + V²`.
    pub v: Vec<f64>,
    pub resampled: usize,
    pub nonconverged: usize,
    pub extinct: usize,
    /// `(q, W quantile, V¹+V² quantile)`.
    pub quantiles: Vec<(f64, f64, f64)>,
}

impl ExplosiveReport {
    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        let mut samples = Table::new(&["index", "W", "V_sum"]);
        for i in 0..self.w.len().max(self.v.len()) {
            let cell = |xs: &[f64]| xs.get(i).map_or_else(String::new, |x| float(*x));
            samples.push(vec![i.to_string(), cell(&self.w), cell(&self.v)]);
        }
        let mut q = Table::new(&["q", "W", "V_sum"]);
        for &(p, a, b) in &self.quantiles {
            q.push(vec![float(p), float(a), float(b)]);
        }
        let mut s = Table::new(&["n", "ks", "pairs", "sums", "resampled", "nonconverged", "extinct"]);
        s.push(vec![
            self.n.to_string(),
            float(self.ks),
            self.w.len().to_string(),
            self.v.len().to_string(),
            self.resampled.to_string(),
            self.nonconverged.to_string(),
            self.extinct.to_string(),
        ]);
        vec![("samples.csv", samples), ("quantiles.csv", q), ("summary.csv", s)]
    }
}

/// Two-stage explosion-time law: the root has `D` children, everyone else `B`.
pub fn explosion_process(degree: &DegreePmf, weight: &WeightLaw) -> Result<AgeDependentBp<DegreePmf, SizeBiasedPmf>, ExperimentError> {
    let b = size_biased(degree).map_err(|e| ExperimentError::Plan(e.to_string()))?;
    Ok(AgeDependentBp::new(degree.clone(), b, weight.clone()))
}

/// Compares `W_n(u, v)` at the largest `n` (job 0) with sums of two
/// independent explosion times (job 1); `pairs` values of each.
pub fn run_explosive(plan: &ExperimentPlan) -> Result<ExplosiveReport, ExperimentError> {
    plan.check()?;
    let n = plan.largest_n()?;
    let bp = explosion_process(&plan.degree, &plan.weight)?;
    let verdict = bp
        .grey_verdict(CRITERION_EPS, &QuadratureConfig::default())
        .map_err(|e| ExperimentError::Plan(e.to_string()))?;
    if verdict.verdict != Verdict::Explosive {
        return Err(ExperimentError::Plan(format!("offspring/weight pair is not explosive ({:?})", verdict.verdict)));
    }
    let graph_seed = plan.base_seed;
    let bp_seed = plan.base_seed.wrapping_add(1);
    let g = build_graph(&plan.degree, n, &plan.weight, graph_seed)?;
    let sample = sample_pairs(&g, plan.pairs, false, &mut stream(graph_seed, "pairs", 0), graph_seed)?;
    drop(g);
    let estimates: Vec<_> = (0..plan.pairs as u64)
        .into_par_iter()
        .map(|i| {
            let a = bp.explosion_time(&mut stream(bp_seed, "explosion-1", i), plan.m, plan.tol);
            let b = bp.explosion_time(&mut stream(bp_seed, "explosion-2", i), plan.m, plan.tol);
            (a, b)
        })
        .collect();
    let w: Vec<f64> = sample.pairs.iter().map(|p| p.w).collect();
    let v: Vec<f64> = estimates.iter().map(|(a, b)| a.value + b.value).collect();
    let flagged = |f: &dyn Fn(&fpp_core::branching::ExplosionEstimate) -> bool| {
        estimates.iter().map(|(a, b)| f(a) as usize + f(b) as usize).sum()
    };
    let quantiles = [0.1, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|&q| (q, stats::quantile(&w, q), stats::quantile(&v, q)))
        .collect();
    Ok(ExplosiveReport {
        n,
        ks: stats::ks_two_sample(&w, &v),
        resampled: sample.resampled,
        nonconverged: flagged(&|e| !e.converged),
        extinct: flagged(&|e| e.extinct),
        w,
        v,
        quantiles,
    })
}

// ---------------------------------------------------------------- hopcount

#[derive(Debug, Clone, PartialEq)]
pub struct HopcountReport {
    pub n: usize,
    pub tau: f64,
    pub seed: u64,
    pub alpha: f64,
    pub pairs: Vec<PairObs>,
    /// `(H − α ln n)/√(α ln n)`.
    pub normalized: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub ks_normal: f64,
    pub resampled: usize,
}

impl HopcountReport {
    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        let mut rows = Table::new(&["n", "tau", "seed", "u", "v", "W", "H", "normalized"]);
        for (p, z) in self.pairs.iter().zip(&self.normalized) {
            rows.push(vec![
                self.n.to_string(),
                float(self.tau),
                self.seed.to_string(),
                p.u.to_string(),
                p.v.to_string(),
                float(p.w),
                p.h.to_string(),
                float(*z),
            ]);
        }
        let mut s = Table::new(&["n", "alpha", "mean", "sd", "ks_normal", "resampled"]);
        s.push(vec![
            self.n.to_string(),
            float(self.alpha),
            float(self.mean),
            float(self.sd),
            float(self.ks_normal),
            self.resampled.to_string(),
        ]);
        vec![("hopcount.csv", rows), ("summary.csv", s)]
    }
}

/// Hopcounts over `pairs` uniform pairs of one graph at the largest `n`.
pub fn run_hopcount_clt(plan: &ExperimentPlan) -> Result<HopcountReport, ExperimentError> {
    plan.check()?;
    if !matches!(plan.weight, WeightLaw::Exponential { .. }) {
        return Err(ExperimentError::Plan("hopcount needs exponential weights".into()));
    }
    let tau = plan.degree.tau().ok_or_else(|| ExperimentError::Plan("degree law has no exponent".into()))?;
    let n = plan.largest_n()?;
    let seed = plan.base_seed;
    let g = build_graph(&plan.degree, n, &plan.weight, seed)?;
    let sample = sample_pairs(&g, plan.pairs, false, &mut stream(seed, "pairs", 0), seed)?;
    let alpha = hopcount_alpha(tau);
    let centre = alpha * (n as f64).ln();
    let normalized: Vec<f64> = sample.pairs.iter().map(|p| (p.h as f64 - centre) / centre.sqrt()).collect();
    Ok(HopcountReport {
        n,
        tau,
        seed,
        alpha,
        mean: stats::mean(&normalized),
        sd: stats::std_dev(&normalized),
        ks_normal: stats::ks_one_sample(&normalized, stats::normal_cdf),
        normalized,
        pairs: sample.pairs,
        resampled: sample.resampled,
    })
}

// ---------------------------------------------------------------- giant

#[derive(Debug, Clone, PartialEq)]
pub struct GiantRow {
    pub p: f64,
    pub replica: usize,
    pub seed: u64,
    /// Largest-component share after deleting each edge with probability `1 − p`.
    pub empirical: f64,
    /// Same after thinning half-edges with `√p` and re-pairing.
    pub rebuilt: f64,
    /// `profile[k-1]`: share of vertices with thinned degree `k` in the
    /// rebuilt graph's largest component.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiantCell {
    pub p: f64,
    pub xi: f64,
    pub chi: f64,
    pub identity_residual: f64,
    pub predicted: f64,
    pub mean_empirical: f64,
    pub mean_rebuilt: f64,
    pub profile_predicted: Vec<f64>,
    pub profile_mean: Vec<f64>,
}

impl GiantCell {
    pub fn gap(&self) -> f64 {
        (self.mean_empirical - self.predicted).abs()
    }

    pub fn rebuild_gap(&self) -> f64 {
        (self.mean_empirical - self.mean_rebuilt).abs()
    }

    pub fn profile_sup_gap(&self) -> f64 {
        self.profile_mean.iter().zip(&self.profile_predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiantReport {
    pub n: usize,
    pub cells: Vec<GiantCell>,
    pub rows: Vec<GiantRow>,
}

impl GiantReport {
    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        let mut main = Table::new(&["p", "xi", "chi", "predicted_fraction", "empirical_fraction", "n", "seed", "rebuilt_fraction"]);
        let mut profile = Table::new(&["p", "seed", "k", "predicted", "empirical"]);
        for r in &self.rows {
            let c = self.cells.iter().find(|c| c.p == r.p).expect("row belongs to a cell");
            main.push(vec![
                float(r.p),
                float(c.xi),
                float(c.chi),
                float(c.predicted),
                float(r.empirical),
                self.n.to_string(),
                r.seed.to_string(),
                float(r.rebuilt),
            ]);
            for (k, e) in r.profile.iter().enumerate() {
                profile.push(vec![float(r.p), r.seed.to_string(), (k + 1).to_string(), float(c.profile_predicted[k]), float(*e)]);
            }
        }
        let mut summary = Table::new(&[
            "p", "xi", "chi", "identity_residual", "predicted_fraction", "mean_empirical", "mean_rebuilt", "gap",
            "rebuild_gap", "profile_sup_gap",
        ]);
        for c in &self.cells {
            summary.push(vec![
                float(c.p),
                float(c.xi),
                float(c.chi),
                float(c.identity_residual),
                float(c.predicted),
                float(c.mean_empirical),
                float(c.mean_rebuilt),
                float(c.gap()),
                float(c.rebuild_gap()),
                float(c.profile_sup_gap()),
            ]);
        }
        vec![("giant.csv", main), ("profile.csv", profile), ("summary.csv", summary)]
    }
}

/// Percolated giant fraction and degree profile at the largest `n`, for every
/// `p` of the grid and `replicas` graphs each.
pub fn run_giant(plan: &ExperimentPlan) -> Result<GiantReport, ExperimentError> {
    plan.check()?;
    let n = plan.largest_n()?;
    if let Some(p) = plan.p_grid.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(ExperimentError::Plan(format!("p = {p} outside (0, 1]")));
    }
    let rows: Vec<GiantRow> = plan
        .jobs(plan.p_grid.len())
        .into_par_iter()
        .map(|job| {
            let p = plan.p_grid[job.cell];
            let g = build_graph(&plan.degree, n, &plan.weight, job.seed)?;
            let empirical = g.bond_percolate(p, &mut stream(job.seed, "percolation", 0))?.components().giant_fraction();
            let thinned = half_edge_percolate(&g.degrees(), p, &mut stream(job.seed, "thinning", 0))?;
            drop(g);
            let rebuilt = rebuild_percolated(&thinned, &mut stream(job.seed, "rebuild", 0))?;
            let comps = rebuilt.graph.components();
            let counts = comps.giant_counts_by(|v| thinned.degrees[v as usize]);
            let profile = (1..=PROFILE_K).map(|k| counts.get(k as usize).copied().unwrap_or(0) as f64 / n as f64).collect();
            Ok(GiantRow { p, replica: job.replica, seed: job.seed, empirical, rebuilt: comps.giant_fraction(), profile })
        })
        .collect::<Result<_, ExperimentError>>()?;
    let cells = plan
        .p_grid
        .iter()
        .map(|&p| {
            let report = percolation::fixed_points(&plan.degree, p)?;
            let mine: Vec<&GiantRow> = rows.iter().filter(|r| r.p == p).collect();
            let mean = |f: &dyn Fn(&GiantRow) -> f64| mine.iter().map(|r| f(r)).sum::<f64>() / mine.len() as f64;
            Ok(GiantCell {
                p,
                xi: report.xi,
                chi: report.chi,
                identity_residual: report.identity_residual,
                predicted: percolation::giant_fraction_from(&plan.degree, &report)?,
                mean_empirical: mean(&|r| r.empirical),
                mean_rebuilt: mean(&|r| r.rebuilt),
                profile_predicted: (1..=PROFILE_K)
                    .map(|k| percolation::degree_profile_from(&plan.degree, &report, k))
                    .collect::<Result<_, _>>()?,
                profile_mean: (0..PROFILE_K as usize).map(|k| mean(&|r| r.profile[k])).collect(),
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(GiantReport { n, cells, rows })
}

// ---------------------------------------------------------------- coupling

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub n: usize,
    pub p: f64,
    pub sources: usize,
    /// Settlements grown per source.
    pub settlements: usize,
    /// Pooled histogram of forward degrees.
    pub forward_counts: Vec<u64>,
    pub forward_total: u64,
    /// `P(B = k)` for `k ≤ TV_K`.
    pub pmf: Vec<f64>,
    pub tv: f64,
    pub giant_fraction: f64,
    /// `curve[k]`: share of sampled `u` within graph distance `k` of the
    /// percolated giant.
    pub curve: Vec<f64>,
}

impl CouplingReport {
    pub fn tables(&self) -> Vec<(&'static str, Table)> {
        let mut fwd = Table::new(&["k", "count", "empirical", "size_biased"]);
        for k in 0..=TV_K as usize {
            let c = self.forward_counts.get(k).copied().unwrap_or(0);
            fwd.push(vec![k.to_string(), c.to_string(), float(c as f64 / self.forward_total as f64), float(self.pmf[k])]);
        }
        let mut curve = Table::new(&["k", "fraction"]);
        for (k, f) in self.curve.iter().enumerate() {
            curve.push(vec![k.to_string(), float(*f)]);
        }
        let mut s = Table::new(&["n", "p", "sources", "settlements", "forward_total", "tv", "giant_fraction"]);
        s.push(vec![
            self.n.to_string(),
            float(self.p),
            self.sources.to_string(),
            self.settlements.to_string(),
            self.forward_total.to_string(),
            float(self.tv),
            float(self.giant_fraction),
        ]);
        vec![("forward_degrees.csv", fwd), ("curve.csv", curve), ("summary.csv", s)]
    }
}

/// Graph distance from every vertex to `targets` (multi-source BFS).
fn distance_to_set(g: &MultiGraph, targets: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.vertex_count()];
    let mut queue = VecDeque::new();
    for t in targets {
        dist[t as usize] = 0;
        queue.push_back(t);
    }
    while let Some(v) = queue.pop_front() {
        let next = dist[v as usize] + 1;
        for a in g.arcs(v) {
            if dist[a.to as usize] == u32::MAX {
                dist[a.to as usize] = next;
                queue.push_back(a.to);
            }
        }
    }
    dist
}

/// On one graph at the largest `n`: (a) forward degrees of the first
/// `⌊n^0.3⌋` settlements from `replicas` uniform sources, pooled and compared
/// with `B`; (b) for `pairs` uniform vertices, whether their `k`-neighbourhood
/// meets the giant of the graph percolated at the first `p` of the grid.
pub fn run_coupling(plan: &ExperimentPlan) -> Result<CouplingReport, ExperimentError> {
    plan.check()?;
    let n = plan.largest_n()?;
    let p = *plan.p_grid.first().ok_or_else(|| ExperimentError::Plan("empty p grid".into()))?;
    let seed = plan.base_seed;
    let g = build_graph(&plan.degree, n, &plan.weight, seed)?;
    let settlements = (n as f64).powf(0.3).floor() as usize;
    let forward: Vec<Vec<u64>> = (0..plan.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let source = stream(seed, "sources", i).random_range(0..n as u32);
            let mut adj = &g;
            let mut trace = SwgTrace::new(&mut adj, source);
            trace.grow(&mut adj, Stop::Vertices(settlements));
            trace.forward_degrees()
        })
        .collect();
    let pooled: Vec<u64> = forward.into_iter().flatten().collect();
    // everything above TV_K shares one bucket
    let forward_counts = stats::histogram(&pooled.iter().map(|&k| k.min(TV_K + 1)).collect::<Vec<_>>());
    let b = size_biased(&plan.degree).map_err(|e| ExperimentError::Plan(e.to_string()))?;
    let tv = stats::total_variation(&forward_counts, pooled.len() as u64, |k| b.pmf(k), TV_K);

    let labels = g.bond_percolate(p, &mut stream(seed, "percolation", 0))?.components();
    let dist = distance_to_set(&g, (0..n as u32).filter(|&v| labels.in_giant(v)));
    let mut rng = stream(seed, "vertices", 0);
    let sampled: Vec<u32> = (0..plan.pairs).map(|_| dist[rng.random_range(0..n)]).collect();
    let curve = (0..=plan.k_max)
        .map(|k| sampled.iter().filter(|&&d| d <= k).count() as f64 / sampled.len() as f64)
        .collect();
    Ok(CouplingReport {
        n,
        p,
        sources: plan.replicas,
        settlements,
        forward_total: pooled.len() as u64,
        forward_counts,
        pmf: (0..=TV_K).map(|k| b.pmf(k)).collect(),
        tv,
        giant_fraction: labels.giant_fraction(),
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zipf() -> DegreePmf {
        DegreePmf::zipf(2.5, 2).unwrap()
    }

    #[test]
    fn constants() {
        assert!((scaling_constant(2.5) - 2.8854).abs() < 1e-4);
        assert!((scaling_constant(2.8) - 8.963).abs() < 1e-3);
        assert!((hopcount_alpha(2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert!((hopcount_alpha(2.2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn job_expansion() {
        let mut plan = ExperimentPlan::new("x", vec![100], zipf(), WeightLaw::exponential(1.0).unwrap());
        plan.replicas = 3;
        plan.base_seed = 10;
        let jobs = plan.jobs(2);
        assert_eq!(jobs.len(), 6);
        assert_eq!(jobs[4], Job { cell: 1, replica: 1, seed: 14 });
    }

    #[test]
    fn small_scaling_run_is_deterministic_and_sandwiched() {
        let mut plan = ExperimentPlan::new("scaling", vec![500, 2000], zipf(), WeightLaw::one_plus_uniform(1.0).unwrap());
        plan.replicas = 2;
        plan.pairs = 30;
        let a = run_scaling(&plan).unwrap();
        let b = run_scaling(&plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sandwich_violations, 0);
        assert_eq!(a.trend.len(), 2);
        plan.weight = WeightLaw::exponential(1.0).unwrap();
        assert!(run_scaling(&plan).is_err());
    }

    #[test]
    fn degenerate_degrees_abort() {
        // a perfect matching: almost every pair is disconnected
        let g = build_graph(&DegreePmf::point_mass(1), 1000, &WeightLaw::one_plus_uniform(1.0).unwrap(), 1).unwrap();
        assert!(matches!(
            sample_pairs(&g, 50, false, &mut stream(1, "pairs", 0), 1),
            Err(ExperimentError::CellAborted { .. })
        ));
    }

    #[test]
    fn coupling_curve_shape() {
        let mut plan = ExperimentPlan::new("coupling", vec![3000], zipf(), WeightLaw::exponential(1.0).unwrap());
        plan.replicas = 4;
        plan.pairs = 200;
        plan.k_max = 5;
        let r = run_coupling(&plan).unwrap();
        assert_eq!(r.curve.len(), 6);
        assert!(r.curve.windows(2).all(|w| w[0] <= w[1]));
        assert!((0.0..=1.0).contains(&r.tv));
    }

    #[test]
    fn giant_at_full_retention() {
        let mut plan = ExperimentPlan::new("giant", vec![5000], zipf(), WeightLaw::exponential(1.0).unwrap());
        plan.p_grid = vec![1.0];
        plan.replicas = 2;
        let r = run_giant(&plan).unwrap();
        assert_eq!(r.cells[0].predicted, 1.0);
        assert!(r.cells[0].mean_empirical > 0.98);
    }

    #[test]
    fn explosive_refuses_shifted_weights() {
        let mut plan = ExperimentPlan::new("explosive", vec![1000], zipf(), WeightLaw::one_plus_uniform(1.0).unwrap());
        plan.pairs = 5;
        assert!(matches!(run_explosive(&plan), Err(ExperimentError::Plan(_))));
    }
}
