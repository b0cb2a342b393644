//! Multi-adjustment Edmonds search from a start set `U` under strict
//! eligibility, with an adjustment budget.
//!
//! Rather than one unit adjustment per round, each round computes the number
//! of unit adjustments until the next event (an edge becoming eligible, or an
//! inner blossom dual reaching zero) and applies them at once. Unsaturated
//! vertices outside `U` are never roots; reaching one through an unmatched
//! edge ends the search with an augmentation.

use crate::blowup::BlowupGraph;
use crate::duals::DualState;
use crate::error::{Error, Result};
use crate::graph::{DemandGraph, FFactor};
use crate::search::{
    adjust_duals, augment, check_parity, dissolve_zero, recover, unsaturated_nodes, Eligibility, Forest, Label,
    Tracer, View,
};

#[derive(Debug, Clone, Default)]
pub struct PqParams<'a> {
    /// Start vertices; saturated ones are ignored.
    pub start: Vec<usize>,
    /// Adjustment budget, `None` for unbounded.
    pub budget: Option<i64>,
    /// Working subgraph as an edge mask.
    pub mask: Option<&'a [bool]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqOutcome {
    Augmented,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqReport {
    pub outcome: PqOutcome,
    pub adjustments: i64,
    pub rounds: usize,
    pub blossoms_formed: usize,
    pub recovered: usize,
    pub dissolved: usize,
}

/// Number of unit adjustments after which edge `e` reaches `yz = mu`, if
/// the current forest moves it towards that value.
fn edge_event(view: View<'_>, f: &FFactor, d: &DualState, fr: &Forest, e: usize) -> Option<i64> {
    let g = view.g;
    let (a, b) = g.endpoints(e);
    let (ra, rb) = (fr.vroot[a], fr.vroot[b]);
    if ra == rb {
        return None;
    }
    let (la, lb) = (fr.label[ra], fr.label[rb]);
    if la == Label::Free && lb == Label::Free {
        return None;
    }
    if !fr.may_leave(d, f, ra, e) && !fr.may_leave(d, f, rb, e) {
        return None;
    }
    let rate = |r: usize, l: Label| -> i64 {
        let (dy, dz) = match l {
            Label::Outer => (-1, 2),
            Label::Inner => (1, -2),
            Label::Free => (0, 0),
        };
        let blossom = fr.is_blossom(r) && d.in_i(fr.bid(r), e, f);
        dy + if blossom { dz } else { 0 }
    };
    let delta = rate(ra, la) + rate(rb, lb);
    let gap = view.mu[e] - d.yz(g, f, e);
    if delta == 0 || gap == 0 || (gap > 0) != (delta > 0) {
        return None;
    }
    Some((gap.abs() + delta.abs() - 1) / delta.abs())
}

pub fn pq_edmonds(g: &BlowupGraph, mu: &[i64], f: &mut FFactor, d: &mut DualState, params: &PqParams<'_>, tr: &mut Tracer) -> Result<PqReport> {
    let view = View {
        g,
        mu,
        mask: params.mask,
        elig: Eligibility::Strict,
    };
    let in_start = {
        let mut s = vec![false; g.num_vertices()];
        for &v in &params.start {
            s[v] = true;
        }
        s
    };
    check_parity(d, params.start.iter().copied().filter(|&v| g.demand(v) > f.deg(v)))?;
    let max_mu = mu.iter().map(|x| x.abs()).max().unwrap_or(0);
    let guard = 4 * (max_mu + 1) * g.num_vertices() as i64 + 4;
    let mut rep = PqReport {
        outcome: PqOutcome::Exhausted,
        adjustments: 0,
        rounds: 0,
        blossoms_formed: 0,
        recovered: 0,
        dissolved: 0,
    };

    loop {
        rep.rounds += 1;
        let mut fr = Forest::new(g, d);
        let roots = unsaturated_nodes(g, f, &fr, |v| in_start[v]);
        if roots.is_empty() {
            break;
        }
        for n in roots {
            fr.add_root(n);
        }
        let mut augmented = false;
        for t in 0..fr.num_trees() {
            if let Some(p) = fr.grow(view, f, d, t, tr)? {
                augment(g, f, d, &fr, &p, tr)?;
                augmented = true;
                break;
            }
        }
        rep.blossoms_formed += fr.blossoms_formed;
        if augmented {
            rep.outcome = PqOutcome::Augmented;
            break;
        }
        let nodes = fr.labeled_nodes(d);
        let zero_inner: Vec<usize> = nodes
            .iter()
            .copied()
            .filter(|&n| fr.is_blossom(n) && fr.label[n] == Label::Inner && d.blossom(fr.bid(n)).z == 0)
            .collect();
        if !zero_inner.is_empty() {
            for n in zero_inner {
                d.remove_root(fr.bid(n));
                rep.dissolved += 1;
            }
            continue;
        }
        let left = params.budget.map(|b| b - rep.adjustments);
        if left.is_some_and(|l| l <= 0) {
            break;
        }

        let mut step: Option<i64> = None;
        let mut take = |s: i64| step = Some(step.map_or(s, |t: i64| t.min(s)));
        for e in 0..g.num_edges() {
            if view.allowed(e) {
                if let Some(s) = edge_event(view, f, d, &fr, e) {
                    take(s);
                }
            }
        }
        for &n in &nodes {
            if fr.is_blossom(n) && fr.label[n] == Label::Inner {
                take(d.blossom(fr.bid(n)).z / 2);
            }
        }
        let delta = match (step, left) {
            (Some(s), Some(l)) => s.min(l),
            (Some(s), None) => s,
            (None, Some(l)) => l,
            (None, None) => return Err(Error::Infeasible),
        };
        if rep.adjustments + delta > guard {
            return Err(Error::Infeasible);
        }
        adjust_duals(d, &fr, &nodes, delta)?;
        rep.adjustments += delta;
        tr.emit(|| format!("ADJUST delta={delta} nodes={} total={}", nodes.len(), rep.adjustments));
        rep.dissolved += dissolve_zero(d, tr);
    }
    rep.recovered = recover(g, mu, f, d, 0, tr);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::lift_factor;
    use crate::duals::SlackMode;
    use crate::graph::{deficiency, Edge, OrigGraph};

    fn run(bg: &BlowupGraph, mu: &[i64], f: &mut FFactor, d: &mut DualState, start: Vec<usize>, budget: Option<i64>) -> Result<PqReport> {
        let params = PqParams { start, budget, mask: None };
        pq_edmonds(bg, mu, f, d, &params, &mut Tracer::off())
    }

    #[test]
    fn empty_start_does_nothing() {
        let g = OrigGraph::new(2, vec![Edge { u: 0, v: 1, w: 5 }], vec![1, 1]).unwrap();
        let bg = BlowupGraph::build(&g);
        let mut f = FFactor::empty(4, 3);
        let mut d = DualState::new(4, 3);
        let rep = run(&bg, bg.mu(), &mut f, &mut d, vec![], Some(10)).unwrap();
        assert_eq!(rep.outcome, PqOutcome::Exhausted);
        assert_eq!(rep.adjustments, 0);
        assert!(f.is_empty());
        assert_eq!(d.y, vec![0; 4]);
    }

    #[test]
    fn single_edge_reaches_perfect_tight_factor() {
        let g = OrigGraph::new(2, vec![Edge { u: 0, v: 1, w: 5 }], vec![1, 1]).unwrap();
        let bg = BlowupGraph::build(&g);
        let mut f = FFactor::empty(4, 3);
        let mut d = DualState::new(4, 3);
        // Even weights so that equal-parity duals can become tight.
        let mu: Vec<i64> = bg.mu().iter().map(|m| 2 * m).collect();
        for v in 0..4 {
            d.y[v] = 6;
        }
        while deficiency(&bg, &f).unwrap().total > 0 {
            let start = (0..4).filter(|&v| bg.demand(v) > f.deg(v)).collect();
            let rep = run(&bg, &mu, &mut f, &mut d, start, None).unwrap();
            assert_eq!(rep.outcome, PqOutcome::Augmented);
        }
        assert_eq!(f.edges().collect::<Vec<_>>(), vec![0, 2]);
        assert!(d.check_slackness(&bg, &f, &mu, SlackMode::Strict).is_empty());
    }

    #[test]
    fn budget_caps_adjustments() {
        let g = OrigGraph::new(2, vec![Edge { u: 0, v: 1, w: 5 }], vec![1, 1]).unwrap();
        let bg = BlowupGraph::build(&g);
        let mut f = FFactor::empty(4, 3);
        let mut d = DualState::new(4, 3);
        for v in 0..4 {
            d.y[v] = 20;
        }
        let rep = run(&bg, bg.mu(), &mut f, &mut d, vec![0], Some(3)).unwrap();
        assert_eq!(rep.outcome, PqOutcome::Exhausted);
        assert_eq!(rep.adjustments, 3);
        assert_eq!(d.y[0], 17);
    }

    #[test]
    fn closed_walk_through_deficient_vertex() {
        // Triangle with f = (2, 1, 1). Only vertex 0 is short, by two, so
        // the augmenting walk leaves and re-enters it around the cycle.
        let edges = vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 1 }, Edge { u: 0, v: 2, w: 1 }];
        let g = OrigGraph::new(3, edges, vec![2, 1, 1]).unwrap();
        let bg = BlowupGraph::build(&g);
        let mu = vec![0; bg.num_edges()];
        // Middles of (0,1) and (0,2), outer parts of (1,2).
        let mut f = FFactor::from_edges(&bg, [1, 3, 5, 7]).unwrap();
        let mut d = DualState::new(bg.num_vertices(), bg.num_edges());
        let rep = run(&bg, &mu, &mut f, &mut d, vec![0], None).unwrap();
        assert_eq!(rep.outcome, PqOutcome::Augmented);
        assert_eq!(deficiency(&bg, &f).unwrap().total, 0);
        let want = FFactor::from_edges(&g, [0, 2]).unwrap();
        assert_eq!(f, lift_factor(&g, &bg, &want));
    }
}
