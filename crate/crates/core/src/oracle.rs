//! Ground truth for small instances: exhaustive optimum, solution checks and
//! a planted-instance generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{DemandGraph, Edge, FFactor, OrigGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_edges: usize,
    pub max_states: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_edges: 24,
            max_states: 200_000_000,
        }
    }
}

/// Optimal weight and factor, lexicographically smallest edge set among ties.
pub type Optimum = Option<(i64, Vec<usize>)>;

fn better(w: i64, set: &[usize], best: &Optimum) -> bool {
    match best {
        None => true,
        Some((bw, bs)) => w > *bw || (w == *bw && set < bs.as_slice()),
    }
}

/// Branch and bound over edge inclusion. Edges are branched in order of
/// decreasing weight; a branch dies once some vertex can no longer reach its
/// demand with the undecided edges left.
pub fn brute_force_optimum(g: &OrigGraph, limits: OracleLimits) -> Result<Optimum> {
    if g.m() > limits.max_edges {
        return Err(Error::LimitsExceeded(format!(
            "oracle handles at most {} edges, got {}",
            limits.max_edges,
            g.m()
        )));
    }
    let mut order: Vec<usize> = (0..g.m()).collect();
    order.sort_by_key(|&e| (std::cmp::Reverse(g.edge(e).w), e));
    let mut need: Vec<i64> = g.demands().to_vec();
    let mut avail: Vec<i64> = (0..g.n()).map(|v| g.degree(v) as i64).collect();
    if need.iter().zip(&avail).any(|(n, a)| n > a) || g.total_demand() % 2 != 0 {
        return Ok(None);
    }
    struct Search<'a> {
        g: &'a OrigGraph,
        order: Vec<usize>,
        chosen: Vec<usize>,
        best: Optimum,
        states: u64,
        max_states: u64,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, weight: i64, need: &mut [i64], avail: &mut [i64], open: i64) -> Result<()> {
            self.states += 1;
            if self.states > self.max_states {
                return Err(Error::LimitsExceeded("oracle state budget exhausted".into()));
            }
            if open == 0 {
                let mut set = self.chosen.clone();
                set.sort_unstable();
                if better(weight, &set, &self.best) {
                    self.best = Some((weight, set));
                }
                return Ok(());
            }
            if i == self.order.len() {
                return Ok(());
            }
            let e = self.order[i];
            let Edge { u, v, w } = self.g.edge(e);
            // Every remaining unit of demand pairs with another through an
            // edge weighing at most `w`.
            if let Some((bw, _)) = &self.best {
                if weight + open / 2 * w < *bw {
                    return Ok(());
                }
            }
            avail[u] -= 1;
            avail[v] -= 1;
            if need[u] > 0 && need[v] > 0 {
                need[u] -= 1;
                need[v] -= 1;
                self.chosen.push(e);
                let r = self.go(i + 1, weight + w, need, avail, open - 2);
                self.chosen.pop();
                need[u] += 1;
                need[v] += 1;
                r?;
            }
            if need[u] <= avail[u] && need[v] <= avail[v] {
                self.go(i + 1, weight, need, avail, open)?;
            }
            avail[u] += 1;
            avail[v] += 1;
            Ok(())
        }
    }
    let open = g.total_demand();
    let mut s = Search {
        g,
        order,
        chosen: Vec::new(),
        best: None,
        states: 0,
        max_states: limits.max_states,
    };
    s.go(0, 0, &mut need, &mut avail, open)?;
    Ok(s.best)
}

/// Plain enumeration of all `2^m` edge subsets; the oracle's own oracle.
pub fn enumerate_all(g: &OrigGraph) -> Result<Optimum> {
    if g.m() > 20 {
        return Err(Error::LimitsExceeded("full enumeration is limited to 20 edges".into()));
    }
    let mut best: Optimum = None;
    for mask in 0u32..(1u32 << g.m()) {
        let mut deg = vec![0i64; g.n()];
        let mut w = 0;
        let mut set = Vec::new();
        for e in 0..g.m() {
            if mask >> e & 1 == 1 {
                let ed = g.edge(e);
                deg[ed.u] += 1;
                deg[ed.v] += 1;
                w += ed.w;
                set.push(e);
            }
        }
        if deg.as_slice() == g.demands() && better(w, &set, &best) {
            best = Some((w, set));
        }
    }
    Ok(best)
}

/// Problems found in a claimed solution; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub issues: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn verify_solution(g: &OrigGraph, edges: &[usize], claimed_weight: Option<i64>) -> VerifyReport {
    let mut issues = Vec::new();
    let mut used = vec![false; g.m()];
    let mut deg = vec![0i64; g.n()];
    let mut weight = 0i64;
    for &e in edges {
        if e >= g.m() {
            issues.push(format!("edge index {} is not in the graph", e + 1));
            continue;
        }
        if std::mem::replace(&mut used[e], true) {
            let ed = g.edge(e);
            issues.push(format!("edge ({}, {}) listed twice", ed.u + 1, ed.v + 1));
            continue;
        }
        let ed = g.edge(e);
        deg[ed.u] += 1;
        deg[ed.v] += 1;
        weight += ed.w;
    }
    for v in 0..g.n() {
        let d = g.demand(v) - deg[v];
        if d > 0 {
            issues.push(format!("vertex {} has deficiency {}", v + 1, d));
        } else if d < 0 {
            issues.push(format!("vertex {} exceeds its demand by {}", v + 1, -d));
        }
    }
    if let Some(c) = claimed_weight {
        if c != weight {
            issues.push(format!("claimed weight {c} but edges sum to {weight}"));
        }
    }
    VerifyReport { issues }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub n: usize,
    /// Probability of each non-tree pair becoming an edge.
    pub p: f64,
    pub max_weight: i64,
    /// Probability of each edge joining the planted factor.
    pub planted: f64,
    pub max_edges: Option<usize>,
}

impl GenParams {
    pub fn new(n: usize, p: f64, max_weight: i64) -> Self {
        GenParams {
            n,
            p,
            max_weight,
            planted: 0.5,
            max_edges: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: OrigGraph,
    /// A perfect f-factor planted by construction.
    pub witness: FFactor,
}

/// Random connected graph (spanning tree plus independent extra edges),
/// planted factor `F0` covering every vertex, and `f = deg_F0`. Vertices the
/// random draw leaves uncovered get one incident edge added to `F0`.
pub fn gen_instance(seed: u64, params: GenParams) -> Result<Instance> {
    let n = params.n;
    if n < 2 {
        return Err(Error::Precondition("generator needs at least 2 vertices".into()));
    }
    if params.max_weight < 1 || !(0.0..=1.0).contains(&params.p) || !(0.0..=1.0).contains(&params.planted) {
        return Err(Error::Precondition("generator parameters out of range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut pairs = Vec::new();
    let mut present = vec![false; n * n];
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
        present[a * n + b] = true;
        pairs.push((a, b));
    }
    let mut extra = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !present[a * n + b] && rng.gen_bool(params.p) {
                extra.push((a, b));
            }
        }
    }
    if let Some(cap) = params.max_edges {
        extra.shuffle(&mut rng);
        extra.truncate(cap.saturating_sub(pairs.len()));
        extra.sort_unstable();
    }
    pairs.extend(extra);
    let edges: Vec<Edge> = pairs
        .iter()
        .map(|&(u, v)| Edge {
            u,
            v,
            w: rng.gen_range(1..=params.max_weight),
        })
        .collect();
    let m = edges.len();
    let mut inf0: Vec<bool> = (0..m).map(|_| rng.gen_bool(params.planted)).collect();
    let mut covered = vec![false; n];
    for (e, ed) in edges.iter().enumerate() {
        if inf0[e] {
            covered[ed.u] = true;
            covered[ed.v] = true;
        }
    }
    for v in 0..n {
        if !covered[v] {
            let inc: Vec<usize> = (0..m).filter(|&e| edges[e].u == v || edges[e].v == v).collect();
            let e = *inc.choose(&mut rng).expect("spanning tree covers every vertex");
            inf0[e] = true;
            covered[edges[e].u] = true;
            covered[edges[e].v] = true;
        }
    }
    let mut demand = vec![0i64; n];
    for (e, ed) in edges.iter().enumerate() {
        if inf0[e] {
            demand[ed.u] += 1;
            demand[ed.v] += 1;
        }
    }
    let graph = OrigGraph::new(n, edges, demand)?;
    let witness = FFactor::from_edges(&graph, (0..m).filter(|&e| inf0[e]))?;
    Ok(Instance { graph, witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, e: &[(usize, usize, i64)], f: Vec<i64>) -> OrigGraph {
        OrigGraph::new(n, e.iter().map(|&(u, v, w)| Edge { u, v, w }).collect(), f).unwrap()
    }

    #[test]
    fn tiny_optima() {
        let single = g(2, &[(0, 1, 5)], vec![1, 1]);
        assert_eq!(brute_force_optimum(&single, OracleLimits::default()).unwrap(), Some((5, vec![0])));
        let c4 = g(4, &[(0, 1, 1), (1, 2, 2), (2, 3, 1), (3, 0, 2)], vec![1; 4]);
        assert_eq!(brute_force_optimum(&c4, OracleLimits::default()).unwrap(), Some((4, vec![1, 3])));
        let k3 = g(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)], vec![1; 3]);
        assert_eq!(brute_force_optimum(&k3, OracleLimits::default()).unwrap(), None);
    }

    #[test]
    fn limits_are_enforced() {
        let edges: Vec<_> = (0..25).map(|i| (i, i + 1, 1)).collect();
        let path = g(26, &edges, vec![1; 26]);
        assert!(matches!(
            brute_force_optimum(&path, OracleLimits::default()),
            Err(Error::LimitsExceeded(_))
        ));
    }

    #[test]
    fn verify_reports() {
        let single = g(2, &[(0, 1, 5)], vec![1, 1]);
        assert!(verify_solution(&single, &[0], Some(5)).is_ok());
        let r = verify_solution(&single, &[], Some(0));
        assert_eq!(r.issues.len(), 2);
        assert!(r.issues[0].contains("deficiency 1"));
        assert_eq!(verify_solution(&single, &[0], Some(4)).issues.len(), 1);
    }

    #[test]
    fn generator_is_deterministic_and_planted() {
        let p = GenParams::new(12, 0.3, 20);
        let a = gen_instance(7, p).unwrap();
        let b = gen_instance(7, p).unwrap();
        assert_eq!(a.graph, b.graph);
        assert!(a.graph.total_demand() % 2 == 0);
        let edges: Vec<usize> = a.witness.edges().collect();
        assert!(verify_solution(&a.graph, &edges, None).is_ok());
        assert!((0..12).all(|v| a.graph.demand(v) >= 1));
    }
}
