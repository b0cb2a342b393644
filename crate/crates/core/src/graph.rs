//! Input graphs, demand functions and f-factors.
//!
//! Vertex ids are 0-based internally and 1-based in every text format; the
//! conversion happens only in [`parse_graph`], [`write_graph`] and the factor
//! readers/writers below.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Read access shared by the original graph and the blowup graph.
pub trait DemandGraph {
    fn num_vertices(&self) -> usize;
    fn num_edges(&self) -> usize;
    fn endpoints(&self, e: usize) -> (usize, usize);
    fn demand(&self, v: usize) -> i64;
    fn weight(&self, e: usize) -> i64;

    fn total_demand(&self) -> i64 {
        (0..self.num_vertices()).map(|v| self.demand(v)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: i64,
}

/// A simple undirected graph with positive integer weights and a positive
/// demand on every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrigGraph {
    n: usize,
    edges: Vec<Edge>,
    demand: Vec<i64>,
}

impl OrigGraph {
    /// Validates and builds a graph. Edge endpoints are 0-based.
    pub fn new(n: usize, edges: Vec<Edge>, demand: Vec<i64>) -> Result<Self> {
        if demand.len() != n {
            return Err(Error::Structural(format!(
                "demand vector has {} entries for {} vertices",
                demand.len(),
                n
            )));
        }
        if let Some(v) = demand.iter().position(|&d| d < 1) {
            return Err(Error::Structural(format!(
                "vertex {} has nonpositive demand",
                v + 1
            )));
        }
        let mut seen = BTreeSet::new();
        for (i, e) in edges.iter().enumerate() {
            check_edge(n, e).map_err(|m| Error::Structural(format!("edge {}: {m}", i + 1)))?;
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::Structural(format!(
                    "edge {}: duplicate edge ({}, {})",
                    i + 1,
                    e.u + 1,
                    e.v + 1
                )));
            }
        }
        let g = OrigGraph { n, edges, demand };
        g.overflow_guard()?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn demands(&self) -> &[i64] {
        &self.demand
    }

    pub fn max_weight(&self) -> i64 {
        self.edges.iter().map(|e| e.w).max().unwrap_or(0)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    /// Index of the edge joining `u` and `v`, if any.
    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.u == u && e.v == v) || (e.u == v && e.v == u))
    }

    /// Rejects instances whose scaled weights and duals could leave `i64`.
    ///
    /// The solver scales by the demand of the blowup graph, `f(V) + 2m`, so
    /// the bound is taken over that quantity.
    fn overflow_guard(&self) -> Result<()> {
        let fv: i64 = self.demand.iter().sum();
        let blow_demand = fv
            .checked_add(2 * self.m() as i64)
            .ok_or_else(|| Error::Overflow("total demand".into()))?;
        let size = (self.n + 2 * self.m()) as i64;
        4i64.checked_mul(blow_demand)
            .and_then(|x| x.checked_mul(self.max_weight().max(1)))
            .and_then(|x| x.checked_mul(size.max(1)))
            .and_then(|x| x.checked_mul(64))
            .map(|_| ())
            .ok_or_else(|| {
                Error::Overflow("4 f(V) W (n + 2m) does not fit in 64-bit integers".into())
            })
    }
}

fn check_edge(n: usize, e: &Edge) -> std::result::Result<(), String> {
    if e.u >= n || e.v >= n {
        return Err(format!("vertex id out of range 1..={n}"));
    }
    if e.u == e.v {
        return Err(format!("self-loop at vertex {}", e.u + 1));
    }
    if e.w < 1 {
        return Err(format!("nonpositive weight {}", e.w));
    }
    Ok(())
}

impl DemandGraph for OrigGraph {
    fn num_vertices(&self) -> usize {
        self.n
    }
    fn num_edges(&self) -> usize {
        self.edges.len()
    }
    fn endpoints(&self, e: usize) -> (usize, usize) {
        (self.edges[e].u, self.edges[e].v)
    }
    fn demand(&self, v: usize) -> i64 {
        self.demand[v]
    }
    fn weight(&self, e: usize) -> i64 {
        self.edges[e].w
    }
}

/// Parses the `p ffactor` text format.
pub fn parse_graph(text: &str) -> Result<OrigGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut demand: Vec<Option<i64>> = Vec::new();
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut tok = raw.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        let rest: Vec<&str> = tok.collect();
        match kind {
            "c" => continue,
            "p" => {
                if header.is_some() {
                    return Err(Error::parse(line, "duplicate problem line"));
                }
                if rest.len() != 3 || rest[0] != "ffactor" {
                    return Err(Error::parse(line, "expected `p ffactor <n> <m>`"));
                }
                let n = parse_num::<usize>(rest[1], line)?;
                let m = parse_num::<usize>(rest[2], line)?;
                demand = vec![None; n];
                header = Some((n, m));
            }
            "f" => {
                let (n, _) = header.ok_or_else(|| Error::parse(line, "`f` before problem line"))?;
                if rest.len() != 2 {
                    return Err(Error::parse(line, "expected `f <v> <demand>`"));
                }
                let v = parse_vertex(rest[0], n, line)?;
                let d = parse_num::<i64>(rest[1], line)?;
                if d < 1 {
                    return Err(Error::parse(line, format!("nonpositive demand {d}")));
                }
                if demand[v].replace(d).is_some() {
                    return Err(Error::parse(line, format!("demand of vertex {} given twice", v + 1)));
                }
            }
            "e" => {
                let (n, _) = header.ok_or_else(|| Error::parse(line, "`e` before problem line"))?;
                if rest.len() != 3 {
                    return Err(Error::parse(line, "expected `e <u> <v> <w>`"));
                }
                let u = parse_vertex(rest[0], n, line)?;
                let v = parse_vertex(rest[1], n, line)?;
                let w = parse_num::<i64>(rest[2], line)?;
                let e = Edge { u, v, w };
                check_edge(n, &e).map_err(|m| Error::parse(line, m))?;
                if !seen.insert((u.min(v), u.max(v))) {
                    return Err(Error::parse(
                        line,
                        format!("duplicate edge ({}, {})", u + 1, v + 1),
                    ));
                }
                edges.push(e);
            }
            other => return Err(Error::parse(line, format!("unknown line type `{other}`"))),
        }
    }

    let (n, m) = header.ok_or_else(|| Error::parse(0, "missing problem line"))?;
    if edges.len() != m {
        return Err(Error::parse(
            text.lines().count(),
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    let demand = demand
        .into_iter()
        .enumerate()
        .map(|(v, d)| d.ok_or_else(|| Error::parse(0, format!("missing demand for vertex {}", v + 1))))
        .collect::<Result<Vec<_>>>()?;
    OrigGraph::new(n, edges, demand).map_err(|e| match e {
        Error::Overflow(m) => Error::Overflow(m),
        other => Error::parse(0, other.to_string()),
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| Error::parse(line, format!("invalid number `{s}`")))
}

fn parse_vertex(s: &str, n: usize, line: usize) -> Result<usize> {
    let v = parse_num::<i64>(s, line)?;
    if v < 1 || v as usize > n {
        return Err(Error::parse(line, format!("vertex id {v} out of range 1..={n}")));
    }
    Ok(v as usize - 1)
}

/// Writes a graph in the same format [`parse_graph`] reads.
pub fn write_graph<G: DemandGraph>(g: &G) -> String {
    let mut out = String::new();
    writeln!(out, "p ffactor {} {}", g.num_vertices(), g.num_edges()).unwrap();
    for v in 0..g.num_vertices() {
        writeln!(out, "f {} {}", v + 1, g.demand(v)).unwrap();
    }
    for e in 0..g.num_edges() {
        let (u, v) = g.endpoints(e);
        writeln!(out, "e {} {} {}", u + 1, v + 1, g.weight(e)).unwrap();
    }
    out
}

/// An edge subset together with its degree accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FFactor {
    member: Vec<bool>,
    deg: Vec<i64>,
    size: usize,
}

impl FFactor {
    pub fn empty(num_vertices: usize, num_edges: usize) -> Self {
        FFactor {
            member: vec![false; num_edges],
            deg: vec![0; num_vertices],
            size: 0,
        }
    }

    pub fn from_edges<G: DemandGraph>(g: &G, edges: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut f = FFactor::empty(g.num_vertices(), g.num_edges());
        for e in edges {
            if e >= g.num_edges() {
                return Err(Error::Structural(format!("edge index {e} out of range")));
            }
            if f.member[e] {
                return Err(Error::Structural(format!("edge {e} listed twice")));
            }
            f.insert(g, e);
        }
        Ok(f)
    }

    #[inline]
    pub fn contains(&self, e: usize) -> bool {
        self.member[e]
    }

    #[inline]
    pub fn deg(&self, v: usize) -> i64 {
        self.deg[v]
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn insert<G: DemandGraph>(&mut self, g: &G, e: usize) {
        if !self.member[e] {
            self.member[e] = true;
            let (u, v) = g.endpoints(e);
            self.deg[u] += 1;
            self.deg[v] += 1;
            self.size += 1;
        }
    }

    pub fn remove<G: DemandGraph>(&mut self, g: &G, e: usize) {
        if self.member[e] {
            self.member[e] = false;
            let (u, v) = g.endpoints(e);
            self.deg[u] -= 1;
            self.deg[v] -= 1;
            self.size -= 1;
        }
    }

    pub fn flip<G: DemandGraph>(&mut self, g: &G, e: usize) {
        if self.member[e] {
            self.remove(g, e)
        } else {
            self.insert(g, e)
        }
    }

    /// Member edges in increasing index order.
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter_map(|(e, &m)| m.then_some(e))
    }

    /// Checks the cached degrees against a recount and the f-factor bound.
    pub fn validate<G: DemandGraph>(&self, g: &G) -> Result<()> {
        if self.member.len() != g.num_edges() || self.deg.len() != g.num_vertices() {
            return Err(Error::Structural("factor sized for a different graph".into()));
        }
        let mut recount = vec![0i64; g.num_vertices()];
        for e in self.edges() {
            let (u, v) = g.endpoints(e);
            recount[u] += 1;
            recount[v] += 1;
        }
        if recount != self.deg {
            return Err(Error::Structural("degree cache out of sync".into()));
        }
        for v in 0..g.num_vertices() {
            if self.deg[v] > g.demand(v) {
                return Err(Error::Structural(format!(
                    "vertex {} has degree {} above its demand {}",
                    v + 1,
                    self.deg[v],
                    g.demand(v)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deficiency {
    pub total: i64,
    pub per_vertex: Vec<i64>,
}

pub fn deficiency<G: DemandGraph>(g: &G, f: &FFactor) -> Result<Deficiency> {
    f.validate(g)?;
    let per_vertex: Vec<i64> = (0..g.num_vertices()).map(|v| g.demand(v) - f.deg(v)).collect();
    Ok(Deficiency {
        total: per_vertex.iter().sum(),
        per_vertex,
    })
}

pub fn factor_weight<G: DemandGraph>(g: &G, f: &FFactor) -> i64 {
    f.edges().map(|e| g.weight(e)).sum()
}

/// Renders a factor as `s <weight>` followed by sorted `m <u> <v>` lines.
pub fn write_factor(g: &OrigGraph, f: &FFactor) -> String {
    let mut pairs: Vec<(usize, usize)> = f
        .edges()
        .map(|e| {
            let Edge { u, v, .. } = g.edge(e);
            (u.min(v) + 1, u.max(v) + 1)
        })
        .collect();
    pairs.sort_unstable();
    let mut out = String::new();
    writeln!(out, "s {}", factor_weight(g, f)).unwrap();
    for (u, v) in pairs {
        writeln!(out, "m {u} {v}").unwrap();
    }
    out
}

/// A factor file as read back from disk: the claimed weight and edge indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorFile {
    pub claimed_weight: Option<i64>,
    pub edges: Vec<usize>,
}

pub fn parse_factor(g: &OrigGraph, text: &str) -> Result<FactorFile> {
    let mut claimed = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tok: Vec<&str> = raw.split_whitespace().collect();
        match tok.first().copied() {
            None | Some("c") => {}
            Some("s") if tok.len() == 2 => claimed = Some(parse_num::<i64>(tok[1], line)?),
            Some("m") if tok.len() == 3 => {
                let u = parse_vertex(tok[1], g.n(), line)?;
                let v = parse_vertex(tok[2], g.n(), line)?;
                let e = g
                    .find_edge(u, v)
                    .ok_or_else(|| Error::parse(line, format!("({}, {}) is not an edge", u + 1, v + 1)))?;
                edges.push(e);
            }
            Some(_) => return Err(Error::parse(line, "expected `s <w>` or `m <u> <v>`")),
        }
    }
    Ok(FactorFile {
        claimed_weight: claimed,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(f: i64, w: [i64; 3]) -> OrigGraph {
        OrigGraph::new(
            3,
            vec![
                Edge { u: 0, v: 1, w: w[0] },
                Edge { u: 1, v: 2, w: w[1] },
                Edge { u: 2, v: 0, w: w[2] },
            ],
            vec![f; 3],
        )
        .unwrap()
    }

    #[test]
    fn parses_single_edge() {
        let g = parse_graph("p ffactor 2 1\nf 1 1\nf 2 1\ne 1 2 5\n").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.m(), 1);
        assert_eq!(g.edge(0), Edge { u: 0, v: 1, w: 5 });
        assert_eq!(g.demands(), &[1, 1]);
    }

    #[test]
    fn rejects_self_loop_with_line_number() {
        let err = parse_graph("p ffactor 2 1\nf 1 1\nf 2 1\ne 1 1 3\n").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("self-loop"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = parse_graph("p ffactor 2 2\nf 1 1\nf 2 1\ne 1 2 3\ne 2 1 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, ref msg } if msg.contains("duplicate")));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse_graph("p ffactor 2 1\nf 1 1\nf 2 1\ne 1 2 0\n").is_err());
        assert!(parse_graph("p ffactor 2 1\nf 1 0\nf 2 1\ne 1 2 1\n").is_err());
        assert!(parse_graph("p ffactor 2 1\nf 1 1\nf 2 1\ne 1 3 1\n").is_err());
    }

    #[test]
    fn comments_are_ignored() {
        let g = parse_graph("c hello\np ffactor 2 1\nc x\nf 1 1\nf 2 1\ne 1 2 5\n").unwrap();
        assert_eq!(g.m(), 1);
    }

    #[test]
    fn deficiency_examples() {
        let g = OrigGraph::new(2, vec![Edge { u: 0, v: 1, w: 5 }], vec![1, 1]).unwrap();
        let full = FFactor::from_edges(&g, [0]).unwrap();
        assert_eq!(deficiency(&g, &full).unwrap().total, 0);
        let empty = FFactor::empty(2, 1);
        assert_eq!(deficiency(&g, &empty).unwrap().total, 2);

        let t = triangle(2, [3, 4, 5]);
        let two = FFactor::from_edges(&t, [0, 1]).unwrap();
        let d = deficiency(&t, &two).unwrap();
        assert_eq!(d.total, 2);
        assert_eq!(d.per_vertex, vec![1, 0, 1]);
    }

    #[test]
    fn deficiency_reports_degree_violation() {
        let t = triangle(1, [1, 1, 1]);
        let bad = FFactor::from_edges(&t, [0, 1]).unwrap();
        assert!(matches!(deficiency(&t, &bad), Err(Error::Structural(_))));
    }

    #[test]
    fn weights() {
        let t = triangle(2, [3, 4, 5]);
        assert_eq!(factor_weight(&t, &FFactor::empty(3, 3)), 0);
        assert_eq!(factor_weight(&t, &FFactor::from_edges(&t, [0, 1, 2]).unwrap()), 12);
        let c4 = OrigGraph::new(
            4,
            vec![
                Edge { u: 0, v: 1, w: 1 },
                Edge { u: 1, v: 2, w: 2 },
                Edge { u: 2, v: 3, w: 1 },
                Edge { u: 3, v: 0, w: 2 },
            ],
            vec![1; 4],
        )
        .unwrap();
        assert_eq!(factor_weight(&c4, &FFactor::from_edges(&c4, [1, 3]).unwrap()), 4);
    }

    #[test]
    fn factor_file_round_trip() {
        let t = triangle(2, [3, 4, 5]);
        let f = FFactor::from_edges(&t, [2, 0]).unwrap();
        let text = write_factor(&t, &f);
        assert_eq!(text, "s 8\nm 1 2\nm 1 3\n");
        let back = parse_factor(&t, &text).unwrap();
        assert_eq!(back.claimed_weight, Some(8));
        let mut edges = back.edges;
        edges.sort();
        assert_eq!(edges, vec![0, 2]);
    }
}
