//! Search forests over the contracted eligible graph, augmentation along
//! blossom walks, and the bounded (one adjustment) Edmonds search.
//!
//! A node of the contracted graph is a vertex outside all blossoms (id `v`)
//! or a root blossom (id `nv + b`).

use std::io::Write;

use crate::blowup::BlowupGraph;
use crate::duals::{BlossomId, Child, DualState};
use crate::error::{Error, Result};
use crate::graph::{DemandGraph, FFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligibility {
    Strict,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Free,
    Outer,
    Inner,
}

/// Line-oriented event sink for `--trace`.
#[derive(Default)]
pub struct Tracer {
    sink: Option<Box<dyn Write + Send>>,
}

impl Tracer {
    pub fn off() -> Self {
        Tracer { sink: None }
    }

    pub fn to(w: impl Write + Send + 'static) -> Self {
        Tracer {
            sink: Some(Box::new(w)),
        }
    }

    pub fn enabled(&self) -> bool {
        self.sink.is_some()
    }

    pub fn emit(&mut self, line: impl FnOnce() -> String) {
        if let Some(w) = self.sink.as_mut() {
            let _ = writeln!(w, "{}", line());
        }
    }
}

/// Read-only inputs of one search.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub g: &'a BlowupGraph,
    pub mu: &'a [i64],
    pub mask: Option<&'a [bool]>,
    pub elig: Eligibility,
}

impl View<'_> {
    #[inline]
    pub fn allowed(&self, e: usize) -> bool {
        self.mask.map_or(true, |m| m[e])
    }

    pub fn eligible(&self, f: &FFactor, d: &DualState, e: usize) -> bool {
        match self.elig {
            Eligibility::Strict => d.is_eligible(self.g, self.mu, f, e),
            Eligibility::Approx => d.is_approx_eligible(self.g, self.mu, f, e),
        }
    }
}

/// An alternating path in the contracted graph; `edges[i]` joins
/// `nodes[i]` and `nodes[i + 1]`.
#[derive(Debug, Clone)]
pub(crate) struct CPath {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

/// An augmenting walk in the blowup graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub start: usize,
    pub edges: Vec<usize>,
}

impl Walk {
    pub fn vertices(&self, g: &BlowupGraph) -> Vec<usize> {
        let mut out = vec![self.start];
        let mut cur = self.start;
        for &e in &self.edges {
            cur = g.other(e, cur);
            out.push(cur);
        }
        out
    }
}

/// Checks that `w` is an augmenting walk with respect to `f`: consecutive
/// edges meet, types alternate, edges are distinct, both terminal edges are
/// unmatched and the terminals have enough deficiency.
pub fn validate_walk(g: &BlowupGraph, f: &FFactor, w: &Walk) -> Result<()> {
    if w.edges.is_empty() {
        return Err(Error::Structural("empty augmenting walk".into()));
    }
    let mut seen = std::collections::HashSet::new();
    let mut cur = w.start;
    for (i, &e) in w.edges.iter().enumerate() {
        let (a, b) = g.endpoints(e);
        if a != cur && b != cur {
            return Err(Error::Structural(format!("walk edge {i} does not continue the walk")));
        }
        if !seen.insert(e) {
            return Err(Error::Structural(format!("walk repeats edge {e}")));
        }
        if i > 0 && f.contains(e) == f.contains(w.edges[i - 1]) {
            return Err(Error::Structural(format!("walk does not alternate at step {i}")));
        }
        cur = g.other(e, cur);
    }
    if f.contains(w.edges[0]) || f.contains(*w.edges.last().unwrap()) {
        return Err(Error::Structural("walk has a matched terminal edge".into()));
    }
    let def = |v: usize| g.demand(v) - f.deg(v);
    let ok = if cur == w.start {
        def(cur) >= 2
    } else {
        def(cur) >= 1 && def(w.start) >= 1
    };
    if !ok {
        return Err(Error::Structural("walk terminal is saturated".into()));
    }
    Ok(())
}

pub(crate) enum Step {
    Continue,
    Absorbed,
    Augment(CPath),
}

pub(crate) struct Forest {
    nv: usize,
    pub vroot: Vec<usize>,
    pub label: Vec<Label>,
    pe: Vec<Option<usize>>,
    tree: Vec<usize>,
    dead: Vec<bool>,
    roots: Vec<usize>,
    grown: Vec<bool>,
    pub touched: Vec<usize>,
    examined: Vec<u8>,
    pub scanned: usize,
    pub blossoms_formed: usize,
    mark: Vec<u32>,
    stamp: u32,
}

impl Forest {
    pub fn new(g: &BlowupGraph, d: &DualState) -> Self {
        let nv = g.num_vertices();
        let vroot = (0..nv).map(|v| d.outermost(v).map_or(v, |b| nv + b)).collect();
        let cap = nv + d.arena_len();
        Forest {
            nv,
            vroot,
            label: vec![Label::Free; cap],
            pe: vec![None; cap],
            tree: vec![usize::MAX; cap],
            dead: Vec::new(),
            roots: Vec::new(),
            grown: Vec::new(),
            touched: Vec::new(),
            examined: vec![0; g.num_edges()],
            scanned: 0,
            blossoms_formed: 0,
            mark: vec![0; cap],
            stamp: 0,
        }
    }

    fn ensure(&mut self, n: usize) {
        if n >= self.label.len() {
            let cap = n + 1;
            self.label.resize(cap, Label::Free);
            self.pe.resize(cap, None);
            self.tree.resize(cap, usize::MAX);
            self.mark.resize(cap, 0);
        }
    }

    #[inline]
    pub fn is_blossom(&self, n: usize) -> bool {
        n >= self.nv
    }

    #[inline]
    pub fn bid(&self, n: usize) -> BlossomId {
        n - self.nv
    }

    pub(crate) fn child_of(&self, n: usize) -> Child {
        if self.is_blossom(n) {
            Child::Blossom(self.bid(n))
        } else {
            Child::Vertex(n)
        }
    }

    /// Whether `n` is still a node of the contracted graph.
    pub fn current(&self, d: &DualState, n: usize) -> bool {
        if self.is_blossom(n) {
            let b = self.bid(n);
            d.is_live(b) && self.vroot[d.blossom(b).base] == n
        } else {
            self.vroot[n] == n
        }
    }

    pub fn members<'d>(&self, d: &'d DualState, n: usize) -> std::borrow::Cow<'d, [usize]> {
        if self.is_blossom(n) {
            std::borrow::Cow::Borrowed(&d.blossom(self.bid(n)).members)
        } else {
            std::borrow::Cow::Owned(vec![n])
        }
    }

    pub fn base(&self, d: &DualState, n: usize) -> usize {
        if self.is_blossom(n) {
            d.blossom(self.bid(n)).base
        } else {
            n
        }
    }

    pub fn deficiency(&self, g: &BlowupGraph, f: &FFactor, d: &DualState, n: usize) -> i64 {
        let b = self.base(d, n);
        g.demand(b) - f.deg(b)
    }

    pub fn tree_of(&self, n: usize) -> Option<usize> {
        (self.label[n] != Label::Free).then(|| self.tree[n])
    }

    pub fn kill_tree(&mut self, t: usize) {
        self.dead[t] = true;
    }

    pub fn add_root(&mut self, n: usize) {
        self.ensure(n);
        self.label[n] = Label::Outer;
        self.pe[n] = None;
        self.tree[n] = self.roots.len();
        self.roots.push(n);
        self.dead.push(false);
        self.grown.push(false);
        self.touched.push(n);
    }

    pub fn num_trees(&self) -> usize {
        self.roots.len()
    }

    /// The endpoint of `e` that lies outside node `n`.
    fn far_end(&self, g: &BlowupGraph, n: usize, e: usize) -> usize {
        let (a, b) = g.endpoints(e);
        if self.vroot[a] == n {
            b
        } else {
            a
        }
    }

    /// Label-based leaving rule, ignoring eligibility.
    pub fn may_leave(&self, d: &DualState, f: &FFactor, n: usize, e: usize) -> bool {
        if self.pe[n] == Some(e) {
            return false;
        }
        match (self.label[n], self.is_blossom(n)) {
            (Label::Free, _) => false,
            (Label::Outer, false) => !f.contains(e),
            (Label::Inner, false) => f.contains(e),
            (Label::Outer, true) => true,
            (Label::Inner, true) => d.blossom(self.bid(n)).eta == Some(e),
        }
    }

    fn parent(&self, g: &BlowupGraph, n: usize) -> Option<usize> {
        self.pe[n].map(|e| self.vroot[self.far_end(g, n, e)])
    }

    /// `[n, parent(n), ..., root]`.
    fn up_chain(&self, g: &BlowupGraph, n: usize) -> Vec<usize> {
        let mut out = vec![n];
        let mut cur = n;
        while let Some(p) = self.parent(g, cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Path from the tree root down to `n`.
    fn root_path(&self, g: &BlowupGraph, n: usize) -> CPath {
        let mut nodes = self.up_chain(g, n);
        nodes.reverse();
        let edges = nodes[1..].iter().map(|&x| self.pe[x].unwrap()).collect();
        CPath { nodes, edges }
    }

    /// Grows the tree of `tree` by graph search. Returns an augmenting path
    /// as soon as one is found.
    pub fn grow(&mut self, view: View<'_>, f: &FFactor, d: &mut DualState, tree: usize, tr: &mut Tracer) -> Result<Option<CPath>> {
        if self.dead[tree] || self.grown[tree] {
            return Ok(None);
        }
        self.grown[tree] = true;
        let mut stack = vec![self.roots[tree]];
        while let Some(x) = stack.pop() {
            if !self.current(d, x) || self.dead[self.tree[x]] {
                continue;
            }
            if let Step::Augment(p) = self.scan(view, f, d, x, &mut stack, tr)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    fn scan(&mut self, view: View<'_>, f: &FFactor, d: &mut DualState, x: usize, stack: &mut Vec<usize>, tr: &mut Tracer) -> Result<Step> {
        let g = view.g;
        let edges: Vec<usize> = self
            .members(d, x)
            .iter()
            .flat_map(|&u| g.incident(u).iter().copied())
            .collect();
        for e in edges {
            if !view.allowed(e) || !self.may_leave(d, f, x, e) {
                continue;
            }
            let w = self.vroot[self.far_end(g, x, e)];
            if w == x {
                continue;
            }
            // Each edge is examined at most once from each endpoint.
            let side = if g.endpoints(e).0 == self.far_end(g, x, e) { 2 } else { 1 };
            if self.examined[e] & side != 0 {
                continue;
            }
            if self.examined[e] == 0 {
                self.scanned += 1;
            }
            self.examined[e] |= side;
            if !view.eligible(f, d, e) {
                continue;
            }
            if self.label[w] == Label::Free {
                if self.deficiency(g, f, d, w) > 0 && (self.is_blossom(w) || !f.contains(e)) {
                    let mut p = self.root_path(g, x);
                    p.nodes.push(w);
                    p.edges.push(e);
                    return Ok(Step::Augment(p));
                }
                let outer = if self.is_blossom(w) {
                    d.blossom(self.bid(w)).eta == Some(e)
                } else {
                    f.contains(e)
                };
                self.label[w] = if outer { Label::Outer } else { Label::Inner };
                self.pe[w] = Some(e);
                self.tree[w] = self.tree[x];
                self.touched.push(w);
                stack.push(w);
                continue;
            }
            if self.dead[self.tree[w]] || !self.may_leave(d, f, w, e) {
                continue;
            }
            if self.tree[w] != self.tree[x] {
                let mut p = self.root_path(g, x);
                let q = self.root_path(g, w);
                p.edges.push(e);
                p.edges.extend(q.edges.iter().rev());
                p.nodes.extend(q.nodes.iter().rev());
                return Ok(Step::Augment(p));
            }
            return self.conflict(view, f, d, x, w, e, stack, tr);
        }
        Ok(Step::Continue)
    }

    /// `x` and `w` lie in one tree and both may use `e`: either a blossom
    /// closes or the cycle exposes an augmenting walk.
    #[allow(clippy::too_many_arguments)]
    fn conflict(&mut self, view: View<'_>, f: &FFactor, d: &mut DualState, x: usize, w: usize, e: usize, stack: &mut Vec<usize>, tr: &mut Tracer) -> Result<Step> {
        let g = view.g;
        let cx = self.up_chain(g, x);
        let cw = self.up_chain(g, w);
        self.stamp += 1;
        for &n in &cx {
            self.mark[n] = self.stamp;
        }
        let iw = cw
            .iter()
            .position(|&n| self.mark[n] == self.stamp)
            .ok_or_else(|| Error::Invariant("same-tree nodes without common ancestor".into()))?;
        let a = cw[iw];
        let ia = cx.iter().position(|&n| n == a).unwrap();
        let chain_x = &cx[..ia];
        let chain_w = &cw[..iw];
        let pe = |n: usize| self.pe[n].unwrap();
        let unsat = |n: usize| !self.is_blossom(n) && self.deficiency(g, f, d, n) > 0;
        let is_root = self.pe[a].is_none();

        // Walk from the root to `a`, then around the cycle towards `v`.
        let around = |first: &[usize], second: &[usize], k: usize| -> CPath {
            let mut p = self.root_path(g, a);
            for &n in first.iter().rev() {
                p.edges.push(pe(n));
                p.nodes.push(n);
            }
            p.edges.push(e);
            for (i, &n) in second[..=k].iter().enumerate() {
                if i > 0 {
                    p.edges.push(pe(second[i - 1]));
                }
                p.nodes.push(n);
            }
            p
        };
        if let Some(k) = chain_x.iter().position(|&n| unsat(n)) {
            return Ok(Step::Augment(around(chain_w, chain_x, k)));
        }
        if let Some(k) = chain_w.iter().position(|&n| unsat(n)) {
            return Ok(Step::Augment(around(chain_x, chain_w, k)));
        }
        let closed = !self.is_blossom(a) && {
            let def = self.deficiency(g, f, d, a);
            (is_root && def >= 2) || (!is_root && def >= 1)
        };
        if closed {
            let mut p = self.root_path(g, a);
            for &n in chain_x.iter().rev() {
                p.edges.push(pe(n));
                p.nodes.push(n);
            }
            p.edges.push(e);
            for &n in chain_w {
                p.nodes.push(n);
                p.edges.push(pe(n));
            }
            p.nodes.push(a);
            return Ok(Step::Augment(p));
        }

        let mut children = vec![self.child_of(a)];
        let mut cycle = Vec::new();
        for &n in chain_x.iter().rev() {
            children.push(self.child_of(n));
            cycle.push(pe(n));
        }
        cycle.push(e);
        for &n in chain_w {
            children.push(self.child_of(n));
            cycle.push(pe(n));
        }
        let eta = if self.is_blossom(a) {
            d.blossom(self.bid(a)).eta
        } else if is_root {
            None
        } else {
            Some(pe(a))
        };
        let t = self.tree[a];
        let parent_edge = self.pe[a];
        let len = children.len();
        let b = d.add_blossom(children, cycle, eta);
        let n = self.nv + b;
        self.ensure(n);
        self.label[n] = Label::Outer;
        self.pe[n] = parent_edge;
        self.tree[n] = t;
        if is_root {
            self.roots[t] = n;
        }
        for &u in &d.blossom(b).members {
            self.vroot[u] = n;
        }
        self.touched.push(n);
        self.blossoms_formed += 1;
        stack.push(n);
        tr.emit(|| format!("BLOSSOM id={b} children={len} base={}", d.blossom(b).base + 1));
        Ok(Step::Absorbed)
    }

    /// Current labeled nodes, deduplicated.
    pub fn labeled_nodes(&self, d: &DualState) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .touched
            .iter()
            .copied()
            .filter(|&n| self.current(d, n) && self.label[n] != Label::Free)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Unsaturated nodes in order of their lowest vertex.
pub(crate) fn unsaturated_nodes(g: &BlowupGraph, f: &FFactor, forest: &Forest, filter: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in 0..g.num_vertices() {
        if g.demand(v) > f.deg(v) && filter(v) {
            let n = forest.vroot[v];
            if seen.insert(n) {
                out.push(n);
            }
        }
    }
    out
}

struct Expander<'a> {
    g: &'a BlowupGraph,
    f: &'a FFactor,
    d: &'a DualState,
    recs: Vec<(BlossomId, usize, Option<usize>)>,
}

impl Expander<'_> {
    fn attach(&self, c: Child, e: usize) -> usize {
        let (a, b) = self.g.endpoints(e);
        if self.d.child_contains(c, a) {
            a
        } else {
            b
        }
    }

    /// Walk through child `c` entering by `entry` and leaving by `exit`
    /// (`None` marks a terminal at the base).
    fn traverse(&mut self, c: Child, entry: Option<usize>, exit: Option<usize>) -> Result<Vec<usize>> {
        let Child::Blossom(b) = c else { return Ok(Vec::new()) };
        let eta = self.d.blossom(b).eta;
        if entry.is_none() || entry == eta {
            let x = exit.ok_or_else(|| Error::Structural("walk enters and leaves at a base".into()))?;
            self.from_base(b, self.attach(c, x), self.f.contains(x), x)
        } else if exit.is_none() || exit == eta {
            let x = entry.unwrap();
            let mut w = self.from_base(b, self.attach(c, x), self.f.contains(x), x)?;
            w.reverse();
            Ok(w)
        } else {
            Err(Error::Structural(format!("walk crosses blossom {b} without using its eta")))
        }
    }

    /// Alternating walk inside `b` from its base to `v`: the first edge
    /// differs in type from `eta(b)` (treated as matched when null) and the
    /// last edge differs in type from `ext`, of type `tv`.
    fn from_base(&mut self, b: BlossomId, v: usize, tv: bool, ext: usize) -> Result<Vec<usize>> {
        self.recs.push((b, v, Some(ext)));
        let bl = self.d.blossom(b);
        let tb = bl.eta.map_or(true, |e| self.f.contains(e));
        let l = bl.children.len();
        let j = bl
            .children
            .iter()
            .position(|&c| self.d.child_contains(c, v))
            .ok_or_else(|| Error::Structural("walk target outside blossom".into()))?;
        let ch = bl.children.clone();
        let cy = bl.cycle.clone();
        let mut out = Vec::new();
        if j == 0 {
            return match ch[0] {
                Child::Blossom(c0) => self.from_base(c0, v, tv, ext),
                Child::Vertex(_) if tb != tv => Ok(out),
                Child::Vertex(_) => {
                    out.push(cy[0]);
                    for i in 1..l {
                        out.extend(self.traverse(ch[i], Some(cy[i - 1]), Some(cy[i]))?);
                        out.push(cy[i]);
                    }
                    Ok(out)
                }
            };
        }
        let forward = match ch[j] {
            Child::Vertex(_) => self.f.contains(cy[j - 1]) != tv,
            Child::Blossom(cj) => self.d.blossom(cj).eta == Some(cy[j - 1]),
        };
        let first = if forward { cy[0] } else { cy[l - 1] };
        out.extend(self.traverse(ch[0], None, Some(first))?);
        out.push(first);
        if forward {
            for i in 1..j {
                out.extend(self.traverse(ch[i], Some(cy[i - 1]), Some(cy[i]))?);
                out.push(cy[i]);
            }
        } else {
            for i in (j + 1..l).rev() {
                out.extend(self.traverse(ch[i], Some(cy[i]), Some(cy[i - 1]))?);
                out.push(cy[i - 1]);
            }
        }
        if let Child::Blossom(cj) = ch[j] {
            out.extend(self.from_base(cj, v, tv, ext)?);
        }
        Ok(out)
    }
}

/// Expands a contracted path into a walk of the blowup graph, returning the
/// walk and the blossom rebase records to apply after the flip.
#[allow(clippy::type_complexity)]
pub(crate) fn expand(g: &BlowupGraph, f: &FFactor, d: &DualState, forest: &Forest, p: &CPath) -> Result<(Walk, Vec<(BlossomId, usize, Option<usize>)>)> {
    let mut ex = Expander { g, f, d, recs: Vec::new() };
    let mut edges = Vec::new();
    let k = p.nodes.len();
    for i in 0..k {
        let n = p.nodes[i];
        let entry = (i > 0).then(|| p.edges[i - 1]);
        let exit = (i + 1 < k).then(|| p.edges[i]);
        edges.extend(ex.traverse(forest.child_of(n), entry, exit)?);
        if let Some(x) = exit {
            edges.push(x);
        }
    }
    let start = forest.base(d, p.nodes[0]);
    Ok((Walk { start, edges }, ex.recs))
}

/// Expands, validates and applies an augmenting path.
pub(crate) fn augment(g: &BlowupGraph, f: &mut FFactor, d: &mut DualState, forest: &Forest, p: &CPath, tr: &mut Tracer) -> Result<Walk> {
    let (walk, recs) = expand(g, f, d, forest, p)?;
    validate_walk(g, f, &walk)?;
    for &e in &walk.edges {
        f.flip(g, e);
    }
    for (b, v, eta) in recs {
        d.rebase(b, v, eta);
    }
    tr.emit(|| {
        let vs = walk.vertices(g);
        format!("AUG len={} from={} to={} walk={:?}", walk.edges.len(), vs[0] + 1, vs[vs.len() - 1] + 1, vs)
    });
    Ok(walk)
}

/// One unit-size (times `delta`) dual adjustment over the labeled nodes.
pub(crate) fn adjust_duals(d: &mut DualState, forest: &Forest, nodes: &[usize], delta: i64) -> Result<usize> {
    let mut outer_vertices = 0;
    for &n in nodes {
        let sign = match forest.label[n] {
            Label::Outer => -1,
            Label::Inner => 1,
            Label::Free => continue,
        };
        let members = forest.members(d, n).into_owned();
        if sign < 0 {
            outer_vertices += members.len();
        }
        for u in members {
            d.y[u] += sign * delta;
        }
        if forest.is_blossom(n) {
            let b = forest.bid(n);
            let z = d.blossom(b).z - sign * 2 * delta;
            if z < 0 {
                return Err(Error::Invariant(format!("blossom {b} dual would become {z}")));
            }
            d.blossom_mut(b).z = z;
        }
    }
    Ok(outer_vertices)
}

/// Restores dominance on matched edges by raising one auxiliary endpoint.
/// `slack` is 2 under approximate slackness and 0 under strict slackness.
pub(crate) fn recover(g: &BlowupGraph, mu: &[i64], f: &FFactor, d: &mut DualState, slack: i64, tr: &mut Tracer) -> usize {
    let bad: Vec<usize> = f.edges().filter(|&e| d.yz(g, f, e) < mu[e] - slack).collect();
    for &e in &bad {
        let (a, b) = g.endpoints(e);
        let (u, v) = match (g.is_auxiliary(a), g.is_auxiliary(b)) {
            (true, true) => (a.min(b), a.max(b)),
            (true, false) => (a, b),
            _ => (b, a),
        };
        let new = mu[e] - d.y[v] - d.blossom_sum(g, f, e);
        tr.emit(|| format!("RECOVER edge={} vertex={} y={}->{}", e + 1, u + 1, d.y[u], new));
        d.y[u] = new;
    }
    bad.len()
}

pub(crate) fn dissolve_zero(d: &mut DualState, tr: &mut Tracer) -> usize {
    let removed = d.remove_zero_roots();
    if !removed.is_empty() {
        tr.emit(|| format!("DISSOLVE count={}", removed.len()));
    }
    removed.len()
}

/// The parity precondition: all unsaturated vertices in `set` carry duals
/// of one parity.
pub(crate) fn check_parity(d: &DualState, set: impl IntoIterator<Item = usize>) -> Result<()> {
    let mut parity = None;
    for v in set {
        let p = d.y[v].rem_euclid(2);
        match parity {
            None => parity = Some(p),
            Some(q) if q != p => {
                return Err(Error::Precondition(format!(
                    "unsaturated duals differ in parity (vertex {})",
                    v + 1
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdmondsReport {
    pub augmentations: usize,
    /// Augmenting paths found by the verification re-scan after the
    /// augmentation step; nonzero means the maximal set was not maximal.
    pub rescan_augmentations: usize,
    /// Walks that only appeared after inner blossoms with zero dual were
    /// taken apart ahead of the dual adjustment.
    pub late_augmentations: usize,
    pub blossoms_formed: usize,
    /// Distinct edges examined by one pass of the augmentation step, largest
    /// over the passes.
    pub scanned_edges: usize,
    pub passes: usize,
    pub outer_vertices: usize,
    pub recovered: usize,
    pub dissolved: usize,
}

/// Grows every live tree in order. With `kill`, each tree that augments is
/// dropped together with the tree at the far end and the sweep goes on;
/// otherwise the first walk ends it. Returns the last walk applied.
fn grow_all(view: View<'_>, f: &mut FFactor, d: &mut DualState, forest: &mut Forest, kill: bool, tr: &mut Tracer) -> Result<Option<Walk>> {
    let mut last_walk = None;
    for t in 0..forest.num_trees() {
        if let Some(p) = forest.grow(view, f, d, t, tr)? {
            let w = augment(view.g, f, d, forest, &p, tr)?;
            if !kill {
                return Ok(Some(w));
            }
            forest.kill_tree(t);
            let last = *p.nodes.last().unwrap();
            if let Some(t2) = forest.tree_of(last) {
                forest.kill_tree(t2);
            }
            last_walk = Some(w);
        }
    }
    Ok(last_walk)
}

/// One bounded Edmonds search under approximate eligibility.
pub fn edmonds_search(g: &BlowupGraph, mu: &[i64], f: &mut FFactor, d: &mut DualState, tr: &mut Tracer) -> Result<EdmondsReport> {
    let unsat: Vec<usize> = (0..g.num_vertices()).filter(|&v| g.demand(v) > f.deg(v)).collect();
    check_parity(d, unsat)?;
    let view = View {
        g,
        mu,
        mask: None,
        elig: Eligibility::Approx,
    };
    let mut rep = EdmondsReport::default();

    // Augmentation: passes over fresh forests until one finds nothing. Walks
    // within a pass are vertex-disjoint (a tree that augments is dropped as a
    // whole). A vertex with f >= 2 can still be unsaturated after ending one
    // walk, so later passes may start from it again.
    let before = crate::graph::deficiency(g, f)?.total;
    loop {
        let mut forest = Forest::new(g, d);
        for n in unsaturated_nodes(g, f, &forest, |_| true) {
            forest.add_root(n);
        }
        let found = grow_all(view, f, d, &mut forest, true, tr)?.is_some();
        rep.scanned_edges = rep.scanned_edges.max(forest.scanned);
        rep.blossoms_formed += forest.blossoms_formed;
        rep.passes += 1;
        if !found {
            break;
        }
    }
    let after = crate::graph::deficiency(g, f)?.total;
    rep.augmentations = ((before - after) / 2) as usize;

    // Re-scan. Until an inner blossom is taken apart, any walk found here
    // means the augmentation step missed one.
    let mut removed_any = false;
    let forest = loop {
        let mut fr = Forest::new(g, d);
        for n in unsaturated_nodes(g, f, &fr, |_| true) {
            fr.add_root(n);
        }
        if grow_all(view, f, d, &mut fr, false, tr)?.is_some() {
            if removed_any {
                rep.late_augmentations += 1;
            } else {
                tr.emit(|| "RESCAN found an augmenting walk".to_string());
                rep.rescan_augmentations += 1;
            }
            rep.blossoms_formed += fr.blossoms_formed;
            continue;
        }
        rep.blossoms_formed += fr.blossoms_formed;
        let zero_inner: Vec<usize> = fr
            .labeled_nodes(d)
            .into_iter()
            .filter(|&n| fr.is_blossom(n) && fr.label[n] == Label::Inner && d.blossom(fr.bid(n)).z == 0)
            .collect();
        if zero_inner.is_empty() {
            break fr;
        }
        for n in zero_inner {
            d.remove_root(fr.bid(n));
            rep.dissolved += 1;
        }
        removed_any = true;
    };

    let nodes = forest.labeled_nodes(d);
    rep.outer_vertices = adjust_duals(d, &forest, &nodes, 1)?;
    tr.emit(|| format!("ADJUST nodes={} outer_vertices={}", nodes.len(), rep.outer_vertices));
    rep.recovered = recover(g, mu, f, d, 2, tr);
    rep.dissolved += dissolve_zero(d, tr);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duals::SlackMode;
    use crate::graph::{Edge, OrigGraph};

    fn single_edge() -> BlowupGraph {
        BlowupGraph::build(&OrigGraph::new(2, vec![Edge { u: 0, v: 1, w: 5 }], vec![1, 1]).unwrap())
    }

    #[test]
    fn walk_validation() {
        let bg = single_edge();
        let f = FFactor::empty(4, 3);
        assert!(validate_walk(&bg, &f, &Walk { start: 0, edges: vec![0] }).is_ok());
        assert!(validate_walk(&bg, &f, &Walk { start: 0, edges: vec![] }).is_err());
        assert!(validate_walk(&bg, &f, &Walk { start: 0, edges: vec![0, 1] }).is_err());
        assert!(validate_walk(&bg, &f, &Walk { start: 0, edges: vec![2] }).is_err());
        let f = FFactor::from_edges(&bg, [1]).unwrap();
        assert!(validate_walk(&bg, &f, &Walk { start: 0, edges: vec![0, 1, 2] }).is_ok());
        assert!(validate_walk(&bg, &f, &Walk { start: 0, edges: vec![0, 1] }).is_err());
        let w = Walk { start: 0, edges: vec![0, 1, 2] };
        assert_eq!(w.vertices(&bg), vec![0, 2, 3, 1]);
    }

    #[test]
    fn parity_precondition() {
        let mut d = DualState::new(4, 3);
        assert!(check_parity(&d, [0, 1]).is_ok());
        d.y[1] = 1;
        assert!(matches!(check_parity(&d, [0, 1]), Err(Error::Precondition(_))));
    }

    #[test]
    fn edmonds_search_on_tight_single_edge() {
        // Zero duals and weights of 2 make every unmatched edge approx-eligible.
        let bg = single_edge();
        let mu = vec![2, 2, 2];
        let mut f = FFactor::empty(4, 3);
        let mut d = DualState::new(4, 3);
        let rep = edmonds_search(&bg, &mu, &mut f, &mut d, &mut Tracer::off()).unwrap();
        assert_eq!(rep.rescan_augmentations, 0);
        assert!(rep.augmentations >= 1);
        assert!(rep.scanned_edges <= bg.num_edges());
        assert!(d.check_slackness(&bg, &f, &mu, SlackMode::WeakApprox).is_empty());
    }
}
