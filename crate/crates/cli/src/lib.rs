//! Command-line front end for the f-factor solver.

pub mod bench;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use ffactor_core::blowup::{lift_factor, BlowupGraph};
use ffactor_core::duals::{parse_certificate, SlackMode};
use ffactor_core::graph::{parse_factor, parse_graph, write_factor, write_graph, FFactor, OrigGraph};
use ffactor_core::oracle::{brute_force_optimum, gen_instance, verify_solution, GenParams, OracleLimits};
use ffactor_core::scaling::{solve, SolveConfig};
use ffactor_core::search::Tracer;
use ffactor_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_LIMITS: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ffactor", version, about = "Maximum-weight perfect f-factors by weight scaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print `s <weight>` plus one `m <u> <v>` line per edge.
    Solve {
        #[arg(long)]
        input: PathBuf,
        /// Multiplier of n^{2/3} in the number of bounded searches per scale.
        #[arg(long = "C", default_value_t = 2.0)]
        c: f64,
        /// Print a trace of the search to stderr.
        #[arg(long)]
        trace: bool,
        /// Write the final dual certificate to this file.
        #[arg(long)]
        emit_certificate: Option<PathBuf>,
    },
    /// Exhaustive optimum for small instances (at most 24 edges).
    Oracle {
        #[arg(long)]
        input: PathBuf,
    },
    /// Check that a factor file is a perfect f-factor with the claimed weight.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        factor: PathBuf,
    },
    /// Generate a random connected instance with a planted perfect f-factor.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        /// Probability of each extra (non-tree) edge.
        #[arg(long)]
        p: f64,
        /// Maximum edge weight; weights are uniform in 1..=W.
        #[arg(long = "W")]
        w: i64,
        /// Probability of an edge joining the planted factor.
        #[arg(long, default_value_t = 0.5)]
        planted: f64,
        #[arg(long)]
        max_edges: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the blowup graph with a comment block naming auxiliary vertices.
    Blowup {
        #[arg(long)]
        input: PathBuf,
    },
    /// Check a dual certificate against a graph and factor.
    CheckDuals {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        factor: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
    },
    /// Generate, solve and verify a range of seeds, writing one CSV row each.
    Bench {
        /// Seed range `a..b` (inclusive) or a single seed.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        n: usize,
        /// Extra-edge probability; by default chosen so that m is about 4n.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "W", default_value_t = 100)]
        w: i64,
        #[arg(long, default_value_t = 0.5)]
        planted: f64,
        #[arg(long = "C", default_value_t = 2.0)]
        c: f64,
        /// Also run the exhaustive oracle where the instance is small enough.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strict,
    Weak,
    Approx,
    WeakApprox,
}

impl From<Mode> for SlackMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Strict => SlackMode::Strict,
            Mode::Weak => SlackMode::Weak,
            Mode::Approx => SlackMode::Approx,
            Mode::WeakApprox => SlackMode::WeakApprox,
        }
    }
}

/// A check that ran to completion and found problems.
#[derive(Debug)]
pub struct VerificationFailed(pub Vec<String>);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0.join("; "))
    }
}

impl std::error::Error for VerificationFailed {}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return EXIT_VERIFY;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Infeasible) => EXIT_INFEASIBLE,
        Some(Error::LimitsExceeded(_) | Error::Overflow(_)) => EXIT_LIMITS,
        Some(Error::Invariant(_)) => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_graph(path: &Path) -> anyhow::Result<OrigGraph> {
    let text = read(path)?;
    parse_graph(&text).map_err(|e| anyhow::Error::new(e).context(format!("parsing {}", path.display())))
}

/// Runs one command. Results go to `out`; the trace goes to stderr.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve {
            input,
            c,
            trace,
            emit_certificate,
        } => {
            let g = read_graph(&input)?;
            let mut tr = if trace { Tracer::to(std::io::stderr()) } else { Tracer::off() };
            let cfg = SolveConfig {
                c,
                ..SolveConfig::default()
            };
            let sol = match solve(&g, &cfg, &mut tr) {
                Ok(s) => s,
                Err(Error::Infeasible) => {
                    writeln!(out, "s infeasible")?;
                    return Err(Error::Infeasible.into());
                }
                Err(e) => return Err(e.into()),
            };
            let edges: Vec<usize> = sol.factor.edges().collect();
            let report = verify_solution(&g, &edges, Some(sol.weight));
            if !report.is_ok() {
                return Err(VerificationFailed(report.issues).into());
            }
            if let Some(path) = emit_certificate {
                let cert = sol.duals.write_certificate(&sol.blowup, Some(&sol.certified_weights));
                fs::write(&path, cert).with_context(|| format!("writing {}", path.display()))?;
            }
            out.write_all(write_factor(&g, &sol.factor).as_bytes())?;
        }
        Command::Oracle { input } => {
            let g = read_graph(&input)?;
            match brute_force_optimum(&g, OracleLimits::default())? {
                Some((_, set)) => {
                    let f = FFactor::from_edges(&g, set)?;
                    out.write_all(write_factor(&g, &f).as_bytes())?;
                }
                None => {
                    writeln!(out, "s infeasible")?;
                    return Err(Error::Infeasible.into());
                }
            }
        }
        Command::Verify { input, factor } => {
            let g = read_graph(&input)?;
            let ff = parse_factor(&g, &read(&factor)?)?;
            let report = verify_solution(&g, &ff.edges, ff.claimed_weight);
            if !report.is_ok() {
                for issue in &report.issues {
                    writeln!(out, "{issue}")?;
                }
                return Err(VerificationFailed(report.issues).into());
            }
            writeln!(out, "ok")?;
        }
        Command::Gen {
            seed,
            n,
            p,
            w,
            planted,
            max_edges,
            out: path,
        } => {
            let mut gp = GenParams::new(n, p, w);
            gp.planted = planted;
            gp.max_edges = max_edges;
            let inst = gen_instance(seed, gp)?;
            let text = write_graph(&inst.graph);
            match path {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Blowup { input } => {
            let g = read_graph(&input)?;
            out.write_all(BlowupGraph::build(&g).to_text(&g).as_bytes())?;
        }
        Command::CheckDuals {
            input,
            factor,
            certificate,
            mode,
        } => {
            let g = read_graph(&input)?;
            let ff = parse_factor(&g, &read(&factor)?)?;
            let f = FFactor::from_edges(&g, ff.edges)?;
            let bg = BlowupGraph::build(&g);
            let lifted = lift_factor(&g, &bg, &f);
            let cert = parse_certificate(&bg, &read(&certificate)?)?;
            let weights = cert.weights.clone().unwrap_or_else(|| bg.mu().to_vec());
            let violations = cert.duals.check_slackness(&bg, &lifted, &weights, mode.into());
            if !violations.is_empty() {
                let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                for l in &lines {
                    writeln!(out, "{l}")?;
                }
                return Err(VerificationFailed(lines).into());
            }
            writeln!(out, "ok: {} blossoms, no violations", cert.duals.num_blossoms())?;
        }
        Command::Bench {
            seeds,
            n,
            p,
            w,
            planted,
            c,
            oracle,
            jobs,
            csv,
        } => {
            let mut cfg = bench::BenchConfig::new(bench::parse_seeds(&seeds)?, n);
            cfg.p = p;
            cfg.max_weight = w;
            cfg.planted = planted;
            cfg.c = c;
            cfg.oracle = oracle;
            cfg.jobs = jobs;
            let rows = bench::run(&cfg)?;
            match csv {
                Some(path) => {
                    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    bench::write_csv(file, &rows)?;
                }
                None => bench::write_csv(&mut *out, &rows)?,
            }
        }
    }
    Ok(())
}
