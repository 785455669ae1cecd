//! Subcommand bodies. Each reads a resolved [`RunConfig`], writes its CSV
//! files plus `config.txt` into the output directory and returns a short
//! human-readable summary.

use std::path::Path;

use fpp_core::branching::{grey_criterion, ExplosivenessVerdict, QuadratureConfig};
use fpp_core::distributions::{size_biased, ClosedFormPgf, DegreePmf, Pgf};
use fpp_core::percolation::{self, build_layers, check_layer_connectivity, max_degree_bound, LayerParams};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::experiments::{self, build_graph, sample_pairs, ExperimentError, ExperimentPlan};
use crate::output::{float, opt_float, Table};
use crate::seeds::stream;

pub const SUBCOMMANDS: &[(&str, &str)] = &[
    ("generate", "sample a weighted configuration model and write its degrees and edges"),
    ("fpp", "passage time, hopcount and graph distance between uniform vertex pairs"),
    ("explosion", "explosion times of the age-dependent branching process"),
    ("criterion", "numerical explosiveness verdict for an offspring law"),
    ("percolate", "percolated giant fraction and degree profile against the fixed-point prediction"),
    ("layers", "degree-threshold layers of the percolated graph and their connectivity"),
    ("experiment", "run a named experiment (see --experiment)"),
];

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Runtime(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CommandError {
    /// 1 for failed assertions and runtime problems, 2 for configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Experiment(ExperimentError::Plan(_)) => 2,
            _ => 1,
        }
    }
}

fn runtime(e: impl ToString) -> CommandError {
    CommandError::Runtime(e.to_string())
}

fn write_all(out: &Path, cfg: &RunConfig, tables: &[(&str, Table)]) -> Result<(), CommandError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.txt"), cfg.echo())?;
    for (name, t) in tables {
        t.write(&out.join(name))?;
    }
    Ok(())
}

pub fn run(command: &str, cfg: &RunConfig) -> Result<String, CommandError> {
    match command {
        "generate" => generate(cfg),
        "fpp" => fpp(cfg),
        "explosion" => explosion(cfg),
        "criterion" => criterion(cfg),
        "percolate" => percolate(cfg),
        "layers" => layers(cfg),
        "experiment" => experiment(cfg),
        other => Err(ConfigError::invalid("subcommand", format!("unknown `{other}`")).into()),
    }
}

fn generate(cfg: &RunConfig) -> Result<String, CommandError> {
    let (n, degree, weight, seed) = (cfg.n()?, cfg.degree_law()?, cfg.weight_law()?, cfg.u64("seed")?);
    let g = build_graph(&degree, n, &weight, seed).map_err(runtime)?;
    let mut degrees = Table::new(&["vertex", "degree"]);
    for v in 0..n as u32 {
        degrees.push(vec![v.to_string(), g.degree(v).to_string()]);
    }
    let mut edges = Table::new(&["edge", "u", "v", "weight"]);
    for (e, u, v, w) in g.edges() {
        edges.push(vec![e.to_string(), u.to_string(), v.to_string(), float(w)]);
    }
    write_all(&cfg.out_dir()?, cfg, &[("degrees.csv", degrees), ("edges.csv", edges)])?;
    Ok(format!(
        "vertices={} edges={} parity_fixed={}",
        n,
        g.edge_count(),
        g.parity_fixed()
    ))
}

fn fpp(cfg: &RunConfig) -> Result<String, CommandError> {
    let (n, degree, weight, seed, pairs) = (cfg.n()?, cfg.degree_law()?, cfg.weight_law()?, cfg.u64("seed")?, cfg.usize("pairs")?);
    let tau = cfg.f64("tau")?;
    let g = build_graph(&degree, n, &weight, seed).map_err(runtime)?;
    let sample = sample_pairs(&g, pairs, true, &mut stream(seed, "pairs", 0), seed)?;
    let mut t = Table::new(&["n", "tau", "seed", "u", "v", "W", "H", "D"]);
    let mut violations = 0;
    for p in &sample.pairs {
        let d = p.d.expect("distance requested");
        if weight.is_shifted() && !(d <= p.h && p.h as f64 <= p.w) {
            violations += 1;
        }
        t.push(vec![
            n.to_string(),
            float(tau),
            seed.to_string(),
            p.u.to_string(),
            p.v.to_string(),
            float(p.w),
            p.h.to_string(),
            d.to_string(),
        ]);
    }
    write_all(&cfg.out_dir()?, cfg, &[("fpp.csv", t)])?;
    if violations > 0 {
        return Err(CommandError::Assertion(format!("D <= H <= W violated for {violations} pairs")));
    }
    Ok(format!("pairs={} resampled={}", sample.pairs.len(), sample.resampled))
}

fn explosion(cfg: &RunConfig) -> Result<String, CommandError> {
    let (degree, weight, seed) = (cfg.degree_law()?, cfg.weight_law()?, cfg.u64("seed")?);
    let (replicas, m, tol) = (cfg.usize("replicas")?, cfg.usize("M")?, cfg.f64("tol")?);
    if m < 2 {
        return Err(ConfigError::invalid("M", "need at least 2 deaths").into());
    }
    let bp = experiments::explosion_process(&degree, &weight)?;
    let sample = bp.explosion_sample(&mut stream(seed, "explosion", 0), replicas, m, tol);
    let mut t = Table::new(&["replica", "V_M", "V_half", "converged", "extinct"]);
    for (i, e) in sample.iter().enumerate() {
        t.push(vec![i.to_string(), float(e.value), float(e.half), e.converged.to_string(), e.extinct.to_string()]);
    }
    write_all(&cfg.out_dir()?, cfg, &[("explosion.csv", t)])?;
    let nonconverged = sample.iter().filter(|e| !e.converged).count();
    let extinct = sample.iter().filter(|e| e.extinct).count();
    Ok(format!("replicas={replicas} nonconverged={nonconverged} extinct={extinct}"))
}

/// `zipf-sb:τ`, `zipf:τ` (both with smallest degree 2), `identity`,
/// `poisson:λ`, `power:a`, `point:k`.
pub fn offspring_pgf(spec: &str) -> Result<Box<dyn Pgf>, ConfigError> {
    let bad = |reason: String| ConfigError::invalid("offspring", reason);
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = || arg.parse::<f64>().map_err(|e| bad(format!("`{arg}`: {e}")));
    Ok(match kind {
        "identity" => Box::new(ClosedFormPgf::Identity),
        "poisson" => Box::new(ClosedFormPgf::Poisson(num()?)),
        "power" => {
            let a = num()?;
            if !(a > 0.0 && a <= 1.0) {
                return Err(bad(format!("power exponent {a} outside (0, 1]")));
            }
            Box::new(ClosedFormPgf::PowerComplement(a))
        }
        "point" => Box::new(ClosedFormPgf::PointMass(arg.parse().map_err(|e| bad(format!("`{arg}`: {e}")))?)),
        "zipf" => Box::new(DegreePmf::zipf(num()?, 2).map_err(|e| bad(e.to_string()))?),
        "zipf-sb" => {
            let d = DegreePmf::zipf(num()?, 2).map_err(|e| bad(e.to_string()))?;
            Box::new(size_biased(&d).map_err(|e| bad(e.to_string()))?)
        }
        other => return Err(bad(format!("unknown law `{other}`"))),
    })
}

fn verdict_table(spec: &str, eps: f64, v: &ExplosivenessVerdict) -> Table {
    let mut t = Table::new(&[
        "offspring", "eps", "verdict", "derivative_diverges", "derivative_at_floor", "theta", "integral", "tail_share",
        "grid_points",
    ]);
    t.push(vec![
        spec.to_string(),
        float(eps),
        format!("{:?}", v.verdict).to_lowercase(),
        v.derivative_diverges.to_string(),
        float(v.derivative_at_floor),
        opt_float(v.theta),
        opt_float(v.integral),
        float(v.tail_share),
        v.grid_points.to_string(),
    ]);
    t
}

fn criterion(cfg: &RunConfig) -> Result<String, CommandError> {
    let spec = cfg.raw("offspring")?;
    let eps = cfg.f64("eps")?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ConfigError::invalid("eps", "must lie in (0, 1)").into());
    }
    let weight = cfg.weight_law()?;
    if weight.linear_sandwich(eps).is_none() {
        return Err(ConfigError::invalid("weight.kind", "lifetime cdf has no linear bounds near 0; the criterion does not apply").into());
    }
    let h = offspring_pgf(spec)?;
    let v = grey_criterion(h.as_ref(), eps, &QuadratureConfig::default()).map_err(runtime)?;
    write_all(&cfg.out_dir()?, cfg, &[("criterion.csv", verdict_table(spec, eps, &v))])?;
    Ok(format!(
        "verdict: {}\nderivative_diverges: {}\ntheta: {}\nintegral: {}\ntail_share: {}",
        format!("{:?}", v.verdict).to_lowercase(),
        v.derivative_diverges,
        v.theta.map_or("none".into(), |x| x.to_string()),
        v.integral.map_or("divergent".into(), |x| x.to_string()),
        v.tail_share
    ))
}

fn plan(cfg: &RunConfig, name: &str) -> Result<ExperimentPlan, ConfigError> {
    Ok(ExperimentPlan {
        name: name.to_string(),
        n_grid: cfg.n_grid()?,
        degree: cfg.degree_law()?,
        weight: cfg.weight_law()?,
        pairs: cfg.usize("pairs")?,
        replicas: cfg.usize("replicas")?,
        base_seed: cfg.u64("seed")?,
        p_grid: cfg.p_grid()?,
        m: cfg.usize("M")?,
        tol: cfg.f64("tol")?,
        k_max: cfg.list::<u32>("k_max")?.first().copied().unwrap_or(6),
    })
}

fn percolate(cfg: &RunConfig) -> Result<String, CommandError> {
    let plan = plan(cfg, "giant")?;
    let report = experiments::run_giant(&plan)?;
    write_all(&cfg.out_dir()?, cfg, &report.tables())?;
    let bad: Vec<String> =
        report.cells.iter().filter(|c| c.identity_residual > 1e-9).map(|c| c.p.to_string()).collect();
    if !bad.is_empty() {
        return Err(CommandError::Assertion(format!("fixed-point identity residual above 1e-9 at p = {}", bad.join(", "))));
    }
    Ok(report
        .cells
        .iter()
        .map(|c| format!("p={} predicted={:.4} empirical={:.4} rebuilt={:.4}", c.p, c.predicted, c.mean_empirical, c.mean_rebuilt))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn layers(cfg: &RunConfig) -> Result<String, CommandError> {
    let (n, degree, seed) = (cfg.n()?, cfg.degree_law()?, cfg.u64("seed")?);
    let p = *cfg.p_grid()?.first().expect("nonempty grid");
    let params = LayerParams { n, tau: cfg.f64("tau")?, rho0: cfg.f64("rho0")?, c: cfg.f64("C")?, rho: cfg.f64("rho")? };
    let b = cfg.f64("b")?;
    let g = build_graph(&degree, n, &fpp_core::weights::WeightLaw::exponential(1.0).expect("rate 1"), seed).map_err(runtime)?;
    let gp = g.bond_percolate(p, &mut stream(seed, "percolation", 0)).map_err(runtime)?;
    drop(g);
    let dec = build_layers(&gp.degrees(), params, &mut stream(seed, "layers", 0)).map_err(|e| match e {
        percolation::PercolationError::Rho0OutOfRange { .. } => CommandError::Config(ConfigError::invalid("rho0", e)),
        percolation::PercolationError::BadConstant(_) => CommandError::Config(ConfigError::invalid("C", e)),
        e => runtime(e),
    })?;
    let conn = check_layer_connectivity(&dec, &gp);
    let mut t = Table::new(&["layer", "log_threshold", "size", "linked", "fraction"]);
    for (i, l) in dec.layers.iter().enumerate() {
        let row = conn.rows.iter().find(|r| r.index == i);
        t.push(vec![
            i.to_string(),
            float(dec.log_thresholds[i]),
            l.len().to_string(),
            row.map_or_else(String::new, |r| r.linked.to_string()),
            row.map_or_else(String::new, |r| opt_float(r.fraction)),
        ]);
    }
    let bound = max_degree_bound(n, params.tau, b);
    let mut s = Table::new(&[
        "n", "p", "regime", "i_star", "depth_bound", "truncated", "v_star", "max_degree", "max_degree_bound", "two_hop_fraction",
    ]);
    s.push(vec![
        n.to_string(),
        float(p),
        format!("{:?}", dec.regime).to_lowercase(),
        dec.i_star.map_or_else(String::new, |i| i.to_string()),
        float(dec.depth_bound),
        dec.truncated.to_string(),
        dec.v_star.to_string(),
        dec.max_degree.to_string(),
        float(bound),
        opt_float(conn.two_hop_fraction),
    ]);
    write_all(&cfg.out_dir()?, cfg, &[("layers.csv", t), ("summary.csv", s)])?;
    Ok(format!(
        "layers={} i_star={:?} regime={:?} max_degree={} bound={:.1}",
        dec.layers.len(),
        dec.i_star,
        dec.regime,
        dec.max_degree,
        bound
    ))
}

fn experiment(cfg: &RunConfig) -> Result<String, CommandError> {
    let name = cfg.raw("experiment")?;
    let plan = plan(cfg, name)?;
    let out = cfg.out_dir()?;
    match name {
        "scaling" => {
            let r = experiments::run_scaling(&plan)?;
            write_all(&out, cfg, &r.tables())?;
            if r.sandwich_violations > 0 {
                return Err(CommandError::Assertion(format!("D <= H <= W violated for {} pairs", r.sandwich_violations)));
            }
            Ok(r.trend
                .iter()
                .map(|t| format!("n={} W={:.4} H={:.4} D={:.4} limit={:.4}", t.n, t.w, t.h, t.d, r.limit))
                .collect::<Vec<_>>()
                .join("\n"))
        }
        "explosive" => {
            let r = experiments::run_explosive(&plan)?;
            write_all(&out, cfg, &r.tables())?;
            Ok(format!("n={} ks={:.4} nonconverged={}", r.n, r.ks, r.nonconverged))
        }
        "hopcount" => {
            let r = experiments::run_hopcount_clt(&plan)?;
            write_all(&out, cfg, &r.tables())?;
            Ok(format!("n={} alpha={:.4} mean={:.4} sd={:.4} ks_normal={:.4}", r.n, r.alpha, r.mean, r.sd, r.ks_normal))
        }
        "giant" => percolate(cfg),
        "coupling" => {
            let r = experiments::run_coupling(&plan)?;
            write_all(&out, cfg, &r.tables())?;
            Ok(format!("n={} tv={:.4} curve={:?}", r.n, r.tv, r.curve))
        }
        other => Err(ConfigError::invalid("experiment", format!("unknown experiment `{other}`")).into()),
    }
}
