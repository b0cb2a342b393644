//! The scaling driver: bit-by-bit weight refinement with blossom
//! dissolution, augmentation inside surviving small blossoms, bounded
//! deficiency reduction, and a final unbounded phase on adjusted weights.

use std::time::{Duration, Instant};

use crate::blowup::{lift_factor, project_factor, BlowupGraph};
use crate::duals::{BlossomId, DualState, SlackMode};
use crate::error::{Error, Result};
use crate::graph::{deficiency, DemandGraph, FFactor, OrigGraph};
use crate::pq::{pq_edmonds, PqOutcome, PqParams, PqReport};
use crate::search::{edmonds_search, EdmondsReport, Tracer};

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Multiplier of `n^{2/3}` in the number of bounded searches per
    /// iteration.
    pub c: f64,
    /// Evaluate slackness and structural invariants at every checkpoint and
    /// record violations in [`InvariantLog`].
    pub check_invariants: bool,
    /// An optimal factor of the input, used for the optimality gap check.
    pub reference: Option<FFactor>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            c: 2.0,
            check_invariants: false,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseTimes {
    pub scale: Duration,
    pub dissolve: Duration,
    pub small_blossom: Duration,
    pub deficiency: Duration,
    pub final_pq: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: usize,
    pub edmonds_calls: usize,
    pub pq_calls: usize,
    pub dual_adjustments: i64,
    pub augmentations: usize,
    pub blossoms_formed: usize,
    pub max_scan_ratio_permille: usize,
    pub times: PhaseTimes,
}

/// Violation counters per checkpoint kind, filled when invariant checking
/// is enabled.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantLog {
    pub checkpoints: usize,
    pub scale_step: usize,
    pub edmonds_slackness: usize,
    pub edmonds_rescan: usize,
    /// Walks found only after zero-dual inner blossoms were taken apart;
    /// informational, not a violation.
    pub edmonds_late_walks: usize,
    pub edmonds_scan_bound: usize,
    pub pq_slackness: usize,
    pub pq_budget: usize,
    pub weight_adjustment: usize,
    pub structure: usize,
    pub gap: Option<i64>,
    pub gap_violations: usize,
    pub samples: Vec<String>,
}

impl InvariantLog {
    pub fn total(&self) -> usize {
        self.scale_step
            + self.edmonds_slackness
            + self.edmonds_rescan
            + self.edmonds_scan_bound
            + self.pq_slackness
            + self.pq_budget
            + self.weight_adjustment
            + self.structure
            + self.gap_violations
    }

    fn note(&mut self, msg: impl FnOnce() -> String) {
        if self.samples.len() < 20 {
            self.samples.push(msg());
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub factor: FFactor,
    pub weight: i64,
    pub blowup: BlowupGraph,
    pub blowup_factor: FFactor,
    pub duals: DualState,
    /// The weights the final duals certify (doubled adjusted weights).
    pub certified_weights: Vec<i64>,
    pub stats: SolveStats,
    pub invariants: InvariantLog,
}

/// Smallest `t` with `t^3 >= n`.
pub fn cube_root_ceil(n: usize) -> usize {
    let mut t = (n as f64).cbrt().round() as usize;
    while t * t * t < n {
        t += 1;
    }
    while t > 0 && (t - 1) * (t - 1) * (t - 1) >= n {
        t -= 1;
    }
    t
}

/// Number of bounded searches per iteration: `ceil(C n^{2/3}) + 6`.
pub fn search_rounds(n: usize, c: f64) -> usize {
    (c * (n as f64).powf(2.0 / 3.0)).ceil().max(0.0) as usize + 6
}

struct Snapshot {
    members: Vec<usize>,
    /// `delta_{F0}(B)` without `eta(B)`.
    added: Vec<usize>,
    eta: Option<usize>,
}

struct Solver<'a> {
    g: &'a BlowupGraph,
    cfg: &'a SolveConfig,
    mu_bar: Vec<i64>,
    f: FFactor,
    d: DualState,
    stats: SolveStats,
    log: InvariantLog,
    tr: &'a mut Tracer,
}

impl Solver<'_> {
    fn unsaturated(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.g.num_vertices()).filter(|&v| self.g.demand(v) > self.f.deg(v))
    }

    fn check_structure(&mut self, at: &str) {
        let errs = self.d.validate_structure(self.g, &self.f);
        if !errs.is_empty() {
            self.log.structure += errs.len();
            let msg = format!("{at}: {}", errs[0]);
            self.log.note(|| msg);
        }
    }

    fn record_edmonds(&mut self, rep: &EdmondsReport) {
        self.stats.edmonds_calls += 1;
        self.stats.augmentations += rep.augmentations + rep.rescan_augmentations + rep.late_augmentations;
        self.stats.blossoms_formed += rep.blossoms_formed;
        if rep.outer_vertices > 0 {
            self.stats.dual_adjustments += 1;
        }
        let ne = self.g.num_edges().max(1);
        self.stats.max_scan_ratio_permille = self.stats.max_scan_ratio_permille.max(rep.scanned_edges * 1000 / ne);
        if !self.cfg.check_invariants {
            return;
        }
        self.log.checkpoints += 1;
        self.log.edmonds_late_walks += rep.late_augmentations;
        if rep.rescan_augmentations > 0 {
            self.log.edmonds_rescan += rep.rescan_augmentations;
            let k = rep.rescan_augmentations;
            self.log.note(|| format!("edmonds: re-scan found {k} augmenting paths"));
        }
        if rep.scanned_edges > self.g.num_edges() {
            self.log.edmonds_scan_bound += 1;
        }
        let v = self.d.check_slackness(self.g, &self.f, &self.mu_bar, SlackMode::Approx);
        if !v.is_empty() {
            self.log.edmonds_slackness += v.len();
            let msg = format!("edmonds: {}", v[0]);
            self.log.note(|| msg);
        }
        self.check_structure("edmonds");
    }

    fn record_pq(&mut self, rep: &PqReport, budget: Option<i64>, weights: &[i64], at: &str) {
        self.stats.pq_calls += 1;
        self.stats.dual_adjustments += rep.adjustments;
        self.stats.blossoms_formed += rep.blossoms_formed;
        if rep.outcome == PqOutcome::Augmented {
            self.stats.augmentations += 1;
        }
        if !self.cfg.check_invariants {
            return;
        }
        self.log.checkpoints += 1;
        if budget.is_some_and(|b| rep.adjustments > b) {
            self.log.pq_budget += 1;
        }
        let v = self.d.check_slackness(self.g, &self.f, weights, SlackMode::Strict);
        if !v.is_empty() {
            self.log.pq_slackness += v.len();
            let msg = format!("{at}: {}", v[0]);
            self.log.note(|| msg);
        }
        self.check_structure(at);
    }

    fn scale_step(&mut self, target: &[i64], bit: u32) -> FFactor {
        let f0 = std::mem::replace(&mut self.f, FFactor::empty(self.g.num_vertices(), self.g.num_edges()));
        for (m, &t) in self.mu_bar.iter_mut().zip(target) {
            *m = 2 * (*m + (t >> bit & 1));
        }
        for y in self.d.y.iter_mut() {
            *y = 2 * *y + 3;
        }
        for b in self.d.blossom_ids() {
            self.d.blossom_mut(b).z *= 2;
        }
        if self.cfg.check_invariants {
            self.log.checkpoints += 1;
            for e in 0..self.g.num_edges() {
                let yz = self.d.yz(self.g, &f0, e);
                let bad = yz < self.mu_bar[e] || (f0.contains(e) && self.mu_bar[e] < yz - 6);
                if bad {
                    self.log.scale_step += 1;
                    let m = self.mu_bar[e];
                    self.log.note(|| format!("scale step: edge {e} yz {yz} mu {m}"));
                }
            }
        }
        f0
    }

    fn dissolution_phase(&mut self, f0: &FFactor, threshold: usize) -> Result<Vec<Snapshot>> {
        let g = self.g;
        loop {
            let victims: Vec<BlossomId> = self
                .d
                .root_blossoms()
                .into_iter()
                .filter(|&b| {
                    let bl = self.d.blossom(b);
                    bl.z <= 12 || bl.members.iter().filter(|&&u| g.is_original(u)).count() >= threshold
                })
                .collect();
            if victims.is_empty() {
                break;
            }
            for b in victims {
                self.d.dissolve(g, b, f0)?;
            }
        }
        for e in 0..g.num_edges() {
            let (a, b) = g.endpoints(e);
            self.mu_bar[e] -= self.d.y[a] + self.d.y[b];
        }
        self.d.y.iter_mut().for_each(|y| *y = 0);
        let mut snaps = Vec::new();
        for b in self.d.root_blossoms() {
            let bl = self.d.blossom(b);
            let mut added = Vec::new();
            for &u in &bl.members {
                for &e in g.incident(u) {
                    if !bl.contains(g.other(e, u)) && f0.contains(e) && bl.eta != Some(e) {
                        added.push(e);
                    }
                }
            }
            snaps.push(Snapshot {
                members: bl.members.clone(),
                added,
                eta: bl.eta,
            });
        }
        while !self.d.is_empty() {
            for b in self.d.root_blossoms() {
                self.d.dissolve(g, b, f0)?;
            }
        }
        self.tr.emit(|| format!("PHASE dissolve survivors={}", snaps.len()));
        Ok(snaps)
    }

    /// Repeats budgeted searches from the top `y` level among the unsaturated
    /// vertices of `pool`, each with budget equal to the drop to the next
    /// level (or to `floor`). Without a floor it stops once one level is left.
    fn level_rounds(&mut self, pool: &[usize], mask: Option<&[bool]>, floor: Option<i64>, at: &str) -> Result<()> {
        loop {
            let mut levels: Vec<i64> = pool
                .iter()
                .copied()
                .filter(|&v| self.g.demand(v) > self.f.deg(v))
                .map(|v| self.d.y[v])
                .collect();
            levels.sort_unstable();
            levels.dedup();
            let Some(&y1) = levels.last() else { return Ok(()) };
            let y2 = match floor {
                Some(fl) => {
                    if y1 <= fl {
                        return Ok(());
                    }
                    levels.iter().rev().nth(1).copied().unwrap_or(fl).max(fl)
                }
                None => match levels.iter().rev().nth(1) {
                    Some(&y2) => y2,
                    None => return Ok(()),
                },
            };
            let start: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&v| self.g.demand(v) > self.f.deg(v) && self.d.y[v] == y1)
                .collect();
            let params = PqParams {
                start,
                budget: Some(y1 - y2),
                mask,
            };
            let mu = self.mu_bar.clone();
            let rep = pq_edmonds(self.g, &mu, &mut self.f, &mut self.d, &params, self.tr)?;
            self.record_pq(&rep, params.budget, &mu, at);
        }
    }

    fn small_blossom_phase(&mut self, snaps: &[Snapshot]) -> Result<()> {
        let g = self.g;
        for s in snaps {
            for &e in &s.added {
                let (a, b) = g.endpoints(e);
                let (inside, outside) = if s.members.binary_search(&a).is_ok() { (a, b) } else { (b, a) };
                self.f.insert(g, e);
                self.d.y[outside] = self.mu_bar[e] - self.d.y[inside];
            }
        }
        for s in snaps {
            let mut mask = vec![false; g.num_edges()];
            for &u in &s.members {
                for &e in g.incident(u) {
                    if s.members.binary_search(&g.other(e, u)).is_ok() {
                        mask[e] = true;
                    }
                }
            }
            for &e in &s.added {
                mask[e] = true;
            }
            // eta(B) can carry a positive reweighted weight (when it is in
            // I(B)); keeping it in the subgraph makes the search stop at it
            // instead of pushing its far end's slack below zero.
            if let Some(e) = s.eta {
                mask[e] = true;
            }
            self.level_rounds(&s.members, Some(&mask), Some(6), "small-blossom pq")?;
        }
        Ok(())
    }

    fn parity_alignment(&mut self) -> Result<()> {
        let all: Vec<usize> = (0..self.g.num_vertices()).collect();
        self.level_rounds(&all, None, None, "alignment pq")
    }

    fn deficiency_reduction(&mut self, rounds: usize) -> Result<()> {
        for _ in 0..rounds {
            let mu = self.mu_bar.clone();
            let rep = edmonds_search(self.g, &mu, &mut self.f, &mut self.d, self.tr)?;
            self.record_edmonds(&rep);
        }
        Ok(())
    }
}

/// Computes a maximum-weight perfect f-factor of `g`.
pub fn solve(g: &OrigGraph, cfg: &SolveConfig, tr: &mut Tracer) -> Result<Solution> {
    if g.total_demand() % 2 != 0 || (0..g.n()).any(|v| g.demand(v) > g.degree(v) as i64) {
        return Err(Error::Infeasible);
    }
    let bg = BlowupGraph::build(g);
    let ne = bg.num_edges();
    let scale = bg.total_demand();
    let target: Vec<i64> = bg
        .mu()
        .iter()
        .map(|&m| m.checked_mul(2 * scale).ok_or_else(|| Error::Overflow("scaled weight".into())))
        .collect::<Result<_>>()?;
    let top = 2 * scale * g.max_weight();
    let iterations = (64 - top.leading_zeros()) as usize;
    let threshold = cube_root_ceil(g.n());
    let rounds = search_rounds(g.n(), cfg.c);

    let mut s = Solver {
        g: &bg,
        cfg,
        mu_bar: vec![0; ne],
        f: FFactor::empty(bg.num_vertices(), ne),
        d: DualState::new(bg.num_vertices(), ne),
        stats: SolveStats::default(),
        log: InvariantLog::default(),
        tr,
    };
    s.stats.iterations = iterations;
    for it in 0..iterations {
        s.tr.emit(|| format!("ITER {} of {}", it + 1, iterations));
        let t = Instant::now();
        let f0 = s.scale_step(&target, (iterations - 1 - it) as u32);
        s.stats.times.scale += t.elapsed();

        let t = Instant::now();
        let snaps = s.dissolution_phase(&f0, threshold)?;
        s.stats.times.dissolve += t.elapsed();

        let t = Instant::now();
        s.small_blossom_phase(&snaps)?;
        s.parity_alignment()?;
        s.stats.times.small_blossom += t.elapsed();

        let t = Instant::now();
        s.deficiency_reduction(rounds)?;
        s.stats.times.deficiency += t.elapsed();
    }

    let t = Instant::now();
    let pre_adjust = s.mu_bar.clone();
    let mut weights = vec![0i64; ne];
    for e in 0..ne {
        let yz = s.d.yz(&bg, &s.f, e);
        let adjusted = s.mu_bar[e].min(yz);
        let diff = s.mu_bar[e] - adjusted;
        if !(0..=2).contains(&diff) {
            if cfg.check_invariants {
                s.log.weight_adjustment += 1;
                s.log.note(|| format!("weight adjustment: edge {e} moved by {diff}"));
            } else {
                return Err(Error::Invariant(format!("weight adjustment moved edge {e} by {diff}")));
            }
        }
        weights[e] = 2 * adjusted;
    }
    for y in s.d.y.iter_mut() {
        *y *= 2;
    }
    for b in s.d.blossom_ids() {
        s.d.blossom_mut(b).z *= 2;
    }
    if cfg.check_invariants {
        s.log.checkpoints += 1;
        let v = s.d.check_slackness(&bg, &s.f, &weights, SlackMode::Strict);
        if !v.is_empty() {
            s.log.weight_adjustment += v.len();
            let msg = format!("weight adjustment: {}", v[0]);
            s.log.note(|| msg);
        }
    }
    while deficiency(&bg, &s.f)?.total > 0 {
        let params = PqParams {
            start: s.unsaturated().collect(),
            budget: None,
            mask: None,
        };
        let rep = pq_edmonds(&bg, &weights, &mut s.f, &mut s.d, &params, s.tr)?;
        s.record_pq(&rep, None, &weights, "final pq");
        if rep.outcome != PqOutcome::Augmented {
            return Err(Error::Invariant("unbounded search stopped without augmenting".into()));
        }
    }
    s.stats.times.final_pq += t.elapsed();

    let factor = project_factor(g, &bg, &s.f)?;
    let weight = crate::graph::factor_weight(g, &factor);
    if let Some(reference) = &cfg.reference {
        let lifted = lift_factor(g, &bg, reference);
        let opt: i64 = lifted.edges().map(|e| pre_adjust[e]).sum();
        let got: i64 = s.f.edges().map(|e| pre_adjust[e]).sum();
        let gap = scale - (opt - got);
        s.log.gap = Some(gap);
        if gap < 0 {
            s.log.gap_violations += 1;
            s.log.note(|| format!("optimality gap {gap}"));
        }
    }
    Ok(Solution {
        factor,
        weight,
        blowup_factor: s.f,
        duals: s.d,
        certified_weights: weights,
        stats: s.stats,
        invariants: s.log,
        blowup: bg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_roots() {
        assert_eq!(cube_root_ceil(1), 1);
        assert_eq!(cube_root_ceil(8), 2);
        assert_eq!(cube_root_ceil(9), 3);
        assert_eq!(cube_root_ceil(27), 3);
        assert_eq!(cube_root_ceil(28), 4);
        assert_eq!(cube_root_ceil(1000), 10);
    }

    #[test]
    fn round_counts() {
        assert_eq!(search_rounds(8, 2.0), 14);
        assert_eq!(search_rounds(1, 1.0), 7);
    }
}
