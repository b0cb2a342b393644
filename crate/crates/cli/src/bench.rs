//! Benchmark harness: generate, solve, verify and optionally compare with the
//! oracle, one CSV row per seed.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use ffactor_core::graph::DemandGraph;
use ffactor_core::oracle::{brute_force_optimum, gen_instance, verify_solution, GenParams, OracleLimits};
use ffactor_core::scaling::{solve, SolveConfig};
use ffactor_core::search::Tracer;
use ffactor_core::Error;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub seeds: Vec<u64>,
    pub n: usize,
    /// Edge probability beyond the spanning tree; `None` aims for `m ~ 4n`.
    pub p: Option<f64>,
    pub max_weight: i64,
    pub planted: f64,
    pub c: f64,
    pub oracle: bool,
    pub jobs: usize,
}

impl BenchConfig {
    pub fn new(seeds: Vec<u64>, n: usize) -> Self {
        BenchConfig {
            seeds,
            n,
            p: None,
            max_weight: 100,
            planted: 0.5,
            c: 2.0,
            oracle: false,
            jobs: 1,
        }
    }

    fn gen_params(&self) -> GenParams {
        let mut gp = GenParams::new(self.n, self.p.unwrap_or_else(|| density_for(self.n, 4.0)), self.max_weight);
        gp.planted = self.planted;
        gp
    }
}

/// Edge probability that puts about `ratio * n` edges on top of a spanning
/// tree of `n` vertices.
pub fn density_for(n: usize, ratio: f64) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let extra = ratio * n as f64 - (n - 1) as f64;
    let slots = (n * (n - 1) / 2 - (n - 1)) as f64;
    if slots <= 0.0 {
        1.0
    } else {
        (extra / slots).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub id: u64,
    pub n: usize,
    pub m: usize,
    pub f_v: i64,
    pub max_weight: i64,
    pub c: f64,
    pub t_scale_ms: f64,
    pub t_dissolve_ms: f64,
    pub t_small_blossom_ms: f64,
    pub t_deficiency_ms: f64,
    pub t_final_pq_ms: f64,
    pub t_total_ms: f64,
    pub edmonds_calls: usize,
    pub dual_adjustments: i64,
    pub weight: Option<i64>,
    pub status: String,
    /// Empty when the oracle was not run or the instance was out of range.
    pub opt_match: Option<bool>,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn run_one(cfg: &BenchConfig, seed: u64) -> BenchRecord {
    let mut rec = BenchRecord {
        id: seed,
        n: cfg.n,
        m: 0,
        f_v: 0,
        max_weight: cfg.max_weight,
        c: cfg.c,
        t_scale_ms: 0.0,
        t_dissolve_ms: 0.0,
        t_small_blossom_ms: 0.0,
        t_deficiency_ms: 0.0,
        t_final_pq_ms: 0.0,
        t_total_ms: 0.0,
        edmonds_calls: 0,
        dual_adjustments: 0,
        weight: None,
        status: String::new(),
        opt_match: None,
    };
    let inst = match gen_instance(seed, cfg.gen_params()) {
        Ok(i) => i,
        Err(e) => {
            rec.status = format!("error: {e}");
            return rec;
        }
    };
    let g = &inst.graph;
    rec.m = g.m();
    rec.f_v = g.total_demand();
    let solve_cfg = SolveConfig {
        c: cfg.c,
        ..SolveConfig::default()
    };
    let start = Instant::now();
    let res = solve(g, &solve_cfg, &mut Tracer::off());
    rec.t_total_ms = ms(start.elapsed());
    let solved = match res {
        Ok(sol) => {
            let t = &sol.stats.times;
            rec.t_scale_ms = ms(t.scale);
            rec.t_dissolve_ms = ms(t.dissolve);
            rec.t_small_blossom_ms = ms(t.small_blossom);
            rec.t_deficiency_ms = ms(t.deficiency);
            rec.t_final_pq_ms = ms(t.final_pq);
            rec.edmonds_calls = sol.stats.edmonds_calls;
            rec.dual_adjustments = sol.stats.dual_adjustments;
            rec.weight = Some(sol.weight);
            let edges: Vec<usize> = sol.factor.edges().collect();
            let report = verify_solution(g, &edges, Some(sol.weight));
            rec.status = if report.is_ok() {
                "ok".into()
            } else {
                format!("invalid: {}", report.issues[0])
            };
            Some(sol.weight)
        }
        Err(Error::Infeasible) => {
            rec.status = "infeasible".into();
            None
        }
        Err(e) => {
            rec.status = format!("error: {e}");
            return rec;
        }
    };
    if cfg.oracle {
        if let Ok(opt) = brute_force_optimum(g, OracleLimits::default()) {
            rec.opt_match = Some(opt.map(|o| o.0) == solved);
        }
    }
    rec
}

/// Runs every seed; rows come back in seed order whatever `jobs` is.
pub fn run(cfg: &BenchConfig) -> anyhow::Result<Vec<BenchRecord>> {
    if cfg.jobs <= 1 {
        return Ok(cfg.seeds.iter().map(|&s| run_one(cfg, s)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
    Ok(pool.install(|| cfg.seeds.par_iter().map(|&s| run_one(cfg, s)).collect()))
}

pub fn write_csv<W: std::io::Write>(out: W, rows: &[BenchRecord]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `a..b` (inclusive) or a single seed.
pub fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
            anyhow::ensure!(a <= b, "empty seed range {s}");
            Ok((a..=b).collect())
        }
        None => Ok(vec![s.trim().parse()?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("1..50").unwrap().len(), 50);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("x..2").is_err());
    }

    #[test]
    fn density_targets_four_n_edges() {
        let p = density_for(200, 4.0);
        let expected = 199.0 + p * (200.0 * 199.0 / 2.0 - 199.0);
        assert!((expected - 800.0).abs() < 1e-6);
        assert_eq!(density_for(2, 4.0), 1.0);
    }

    #[test]
    fn oracle_rows_match() {
        let mut cfg = BenchConfig::new(vec![1, 2, 3], 6);
        cfg.p = Some(0.4);
        cfg.max_weight = 16;
        cfg.oracle = true;
        let rows = run(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.status, "ok");
            assert_eq!(r.opt_match, Some(true));
        }
    }
}
