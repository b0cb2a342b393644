//! The blowup graph: every original edge `(u, v)` becomes the path
//! `u - e_u - e_v - v` with weights `(w, 0, w)` and unit demand on the two
//! auxiliary vertices.
//!
//! Numbering is fixed by the edge list order. Original edge `i` yields
//! auxiliary vertices `n + 2i` (u side) and `n + 2i + 1` (v side), and
//! blowup edges `3i = (u, e_u)`, `3i + 1 = (e_u, e_v)`, `3i + 2 = (e_v, v)`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{deficiency, DemandGraph, FFactor, OrigGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    U,
    V,
}

/// Which of the three blowup edges of an original edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    SideU,
    Middle,
    SideV,
}

#[derive(Debug, Clone)]
pub struct BlowupGraph {
    n_orig: usize,
    ends: Vec<(usize, usize)>,
    mu: Vec<i64>,
    demand: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl BlowupGraph {
    pub fn build(g: &OrigGraph) -> Self {
        let n = g.n();
        let m = g.m();
        let nv = n + 2 * m;
        let mut ends = Vec::with_capacity(3 * m);
        let mut mu = Vec::with_capacity(3 * m);
        let mut demand = g.demands().to_vec();
        demand.resize(nv, 1);
        for (i, e) in g.edges().iter().enumerate() {
            let (eu, ev) = (n + 2 * i, n + 2 * i + 1);
            ends.push((e.u, eu));
            ends.push((eu, ev));
            ends.push((ev, e.v));
            mu.extend([e.w, 0, e.w]);
        }
        let mut adj = vec![Vec::new(); nv];
        for (id, &(a, b)) in ends.iter().enumerate() {
            adj[a].push(id);
            adj[b].push(id);
        }
        BlowupGraph {
            n_orig: n,
            ends,
            mu,
            demand,
            adj,
        }
    }

    pub fn num_original(&self) -> usize {
        self.n_orig
    }

    #[inline]
    pub fn is_original(&self, v: usize) -> bool {
        v < self.n_orig
    }

    #[inline]
    pub fn is_auxiliary(&self, v: usize) -> bool {
        v >= self.n_orig
    }

    /// The original edge and endpoint side an auxiliary vertex stands for.
    pub fn orig_of(&self, v: usize) -> Option<(usize, Side)> {
        let k = v.checked_sub(self.n_orig)?;
        if k >= self.ends.len() / 3 * 2 {
            return None;
        }
        Some((k / 2, if k % 2 == 0 { Side::U } else { Side::V }))
    }

    /// The three blowup edges of original edge `e`: `(u, e_u)`, `(e_u, e_v)`, `(e_v, v)`.
    #[inline]
    pub fn triple_of(&self, e: usize) -> [usize; 3] {
        [3 * e, 3 * e + 1, 3 * e + 2]
    }

    #[inline]
    pub fn part_of(&self, be: usize) -> (usize, Part) {
        let part = match be % 3 {
            0 => Part::SideU,
            1 => Part::Middle,
            _ => Part::SideV,
        };
        (be / 3, part)
    }

    #[inline]
    pub fn middle_of(&self, be: usize) -> usize {
        be / 3 * 3 + 1
    }

    pub fn mu(&self) -> &[i64] {
        &self.mu
    }

    #[inline]
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn other(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.ends[e];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Renders the blowup graph in the graph file format, with a comment
    /// block naming the original edge behind each auxiliary vertex. Middle
    /// edges carry weight 0, so the output is descriptive and not meant to be
    /// fed back into the parser.
    pub fn to_text(&self, g: &OrigGraph) -> String {
        let mut out = String::new();
        writeln!(out, "c blowup of a graph with {} vertices and {} edges", g.n(), g.m()).unwrap();
        for (i, e) in g.edges().iter().enumerate() {
            writeln!(
                out,
                "c aux {} {} = edge {} ({}, {}) sides u v",
                self.n_orig + 2 * i + 1,
                self.n_orig + 2 * i + 2,
                i + 1,
                e.u + 1,
                e.v + 1
            )
            .unwrap();
        }
        out.push_str(&crate::graph::write_graph(self));
        out
    }
}

impl DemandGraph for BlowupGraph {
    fn num_vertices(&self) -> usize {
        self.demand.len()
    }
    fn num_edges(&self) -> usize {
        self.ends.len()
    }
    #[inline]
    fn endpoints(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }
    #[inline]
    fn demand(&self, v: usize) -> i64 {
        self.demand[v]
    }
    #[inline]
    fn weight(&self, e: usize) -> i64 {
        self.mu[e]
    }
}

/// Maps a factor of `G` into the blowup graph. Member edges take their two
/// side edges, non-members their middle edge, so `mu(F') = 2 w(F)` and the
/// deficiencies of original vertices carry over unchanged.
pub fn lift_factor(g: &OrigGraph, bg: &BlowupGraph, f: &FFactor) -> FFactor {
    let mut out = FFactor::empty(bg.num_vertices(), bg.num_edges());
    for e in 0..g.m() {
        let [a, mid, b] = bg.triple_of(e);
        if f.contains(e) {
            out.insert(bg, a);
            out.insert(bg, b);
        } else {
            out.insert(bg, mid);
        }
    }
    out
}

/// Inverse of [`lift_factor`] on perfect factors.
pub fn project_factor(g: &OrigGraph, bg: &BlowupGraph, fp: &FFactor) -> Result<FFactor> {
    let d = deficiency(bg, fp)?;
    if d.total != 0 {
        return Err(Error::Precondition(format!(
            "blowup factor is not perfect (total deficiency {})",
            d.total
        )));
    }
    let mut out = FFactor::empty(g.n(), g.m());
    for e in 0..g.m() {
        let [a, mid, b] = bg.triple_of(e);
        match (fp.contains(a), fp.contains(mid), fp.contains(b)) {
            (true, false, true) => out.insert(g, e),
            (false, true, false) => {}
            pattern => {
                return Err(Error::Structural(format!(
                    "edge {} lifted inconsistently: {:?}",
                    e + 1,
                    pattern
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{factor_weight, Edge};

    fn single() -> OrigGraph {
        OrigGraph::new(2, vec![Edge { u: 0, v: 1, w: 5 }], vec![1, 1]).unwrap()
    }

    #[test]
    fn single_edge_blowup() {
        let g = single();
        let bg = BlowupGraph::build(&g);
        assert_eq!(bg.num_vertices(), 4);
        assert_eq!(bg.num_edges(), 3);
        assert_eq!(bg.mu(), &[5, 0, 5]);
        assert_eq!(bg.endpoints(0), (0, 2));
        assert_eq!(bg.endpoints(1), (2, 3));
        assert_eq!(bg.endpoints(2), (3, 1));
        assert_eq!(bg.orig_of(2), Some((0, Side::U)));
        assert_eq!(bg.orig_of(3), Some((0, Side::V)));
        assert_eq!(bg.orig_of(1), None);
    }

    #[test]
    fn c4_sizes_and_aux_demands() {
        let g = OrigGraph::new(
            4,
            (0..4).map(|i| Edge { u: i, v: (i + 1) % 4, w: 1 + i as i64 }).collect(),
            vec![1; 4],
        )
        .unwrap();
        let bg = BlowupGraph::build(&g);
        assert_eq!(bg.num_vertices(), 12);
        assert_eq!(bg.num_edges(), 12);
        for v in 4..12 {
            assert_eq!(bg.demand(v), 1);
            assert_eq!(bg.incident(v).len(), 2);
        }
    }

    #[test]
    fn lift_single_edge() {
        let g = single();
        let bg = BlowupGraph::build(&g);
        let f = FFactor::from_edges(&g, [0]).unwrap();
        let l = lift_factor(&g, &bg, &f);
        assert_eq!(l.edges().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(factor_weight(&bg, &l), 10);
        let e = lift_factor(&g, &bg, &FFactor::empty(2, 1));
        assert_eq!(e.edges().collect::<Vec<_>>(), vec![1]);
        assert_eq!(project_factor(&g, &bg, &l).unwrap(), f);
    }

    #[test]
    fn lift_triangle_all_edges() {
        let g = OrigGraph::new(
            3,
            vec![
                Edge { u: 0, v: 1, w: 3 },
                Edge { u: 1, v: 2, w: 4 },
                Edge { u: 2, v: 0, w: 5 },
            ],
            vec![2; 3],
        )
        .unwrap();
        let bg = BlowupGraph::build(&g);
        let f = FFactor::from_edges(&g, [0, 1, 2]).unwrap();
        let l = lift_factor(&g, &bg, &f);
        assert_eq!(l.edges().collect::<Vec<_>>(), vec![0, 2, 3, 5, 6, 8]);
    }

    #[test]
    fn project_rejects_imperfect_and_inconsistent() {
        let g = single();
        let bg = BlowupGraph::build(&g);
        let mid_only = FFactor::from_edges(&bg, [1]).unwrap();
        assert!(matches!(
            project_factor(&g, &bg, &mid_only),
            Err(Error::Precondition(_))
        ));

        // Two original edges sharing vertex 1 with demand 2 there; a perfect
        // blowup factor cannot mix side and middle edges within one triple,
        // so check the pattern test on a hand-built inconsistent input.
        let g2 = OrigGraph::new(
            3,
            vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 1 }],
            vec![1, 1, 1],
        )
        .unwrap();
        let bg2 = BlowupGraph::build(&g2);
        // vertex 1 saturated by edge 0's side, vertex 0 by edge 0's side,
        // edge 1 lifted by middle: the projection is {edge 0}, but vertex 2
        // (demand 1) is left deficient, so this is not perfect.
        let f = FFactor::from_edges(&bg2, [0, 2, 4]).unwrap();
        assert!(project_factor(&g2, &bg2, &f).is_err());
    }
}
