//! Vertex duals, the laminar blossom family and everything derived from them.
//!
//! Blossoms live in an arena with parent links. Each blossom stores its
//! children in cycle order (`children[0]` holds the base) together with the
//! cycle edges, where `cycle[i]` joins `children[i]` and `children[i + 1]`.
//! `I(B)` is never stored: an edge of `delta(B)` is in `I(B)` exactly when
//! `(e in F) != (e == eta(B))`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::blowup::{BlowupGraph, Part};
use crate::error::{Error, Result};
use crate::graph::{DemandGraph, FFactor};

pub type BlossomId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Child {
    Vertex(usize),
    Blossom(BlossomId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blossom {
    pub children: Vec<Child>,
    pub cycle: Vec<usize>,
    pub base: usize,
    pub eta: Option<usize>,
    pub z: i64,
    pub parent: Option<BlossomId>,
    /// Sorted vertex set.
    pub members: Vec<usize>,
}

impl Blossom {
    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct DualState {
    pub y: Vec<i64>,
    arena: Vec<Option<Blossom>>,
    free: Vec<BlossomId>,
    vparent: Vec<Option<BlossomId>>,
    cycle_owner: Vec<Option<BlossomId>>,
}

/// The four slackness regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackMode {
    Strict,
    Weak,
    Approx,
    WeakApprox,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Dominance { edge: usize, yz: i64, mu: i64 },
    Tightness { edge: usize, yz: i64, mu: i64 },
    Maturity { blossom: BlossomId, have: i64, want: i64 },
    OddOrNegativeZ { blossom: BlossomId, z: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dominance { edge, yz, mu } => {
                write!(f, "dominance: edge {edge} has yz {yz} against mu {mu}")
            }
            Violation::Tightness { edge, yz, mu } => {
                write!(f, "tightness: edge {edge} has yz {yz} against mu {mu}")
            }
            Violation::Maturity { blossom, have, want } => {
                write!(f, "maturity: blossom {blossom} covers {have} factor edges, needs {want}")
            }
            Violation::OddOrNegativeZ { blossom, z } => write!(f, "blossom {blossom} has z = {z}"),
        }
    }
}

impl DualState {
    pub fn new(num_vertices: usize, num_edges: usize) -> Self {
        DualState {
            y: vec![0; num_vertices],
            arena: Vec::new(),
            free: Vec::new(),
            vparent: vec![None; num_vertices],
            cycle_owner: vec![None; num_edges],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn blossom(&self, b: BlossomId) -> &Blossom {
        self.arena[b].as_ref().expect("dangling blossom id")
    }

    #[inline]
    pub fn blossom_mut(&mut self, b: BlossomId) -> &mut Blossom {
        self.arena[b].as_mut().expect("dangling blossom id")
    }

    pub fn is_live(&self, b: BlossomId) -> bool {
        self.arena.get(b).is_some_and(|s| s.is_some())
    }

    /// Ids of all blossoms, in increasing id order.
    pub fn blossom_ids(&self) -> Vec<BlossomId> {
        (0..self.arena.len()).filter(|&b| self.arena[b].is_some()).collect()
    }

    pub fn root_blossoms(&self) -> Vec<BlossomId> {
        self.blossom_ids()
            .into_iter()
            .filter(|&b| self.blossom(b).parent.is_none())
            .collect()
    }

    /// Upper bound (exclusive) on blossom ids currently in use.
    pub fn arena_len(&self) -> usize {
        self.arena.len()
    }

    pub fn num_blossoms(&self) -> usize {
        self.arena.len() - self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.num_blossoms() == 0
    }

    #[inline]
    pub fn innermost(&self, v: usize) -> Option<BlossomId> {
        self.vparent[v]
    }

    /// Blossoms containing `v`, innermost first.
    pub fn ancestors(&self, v: usize) -> Ancestors<'_> {
        Ancestors {
            state: self,
            next: self.vparent[v],
        }
    }

    pub fn outermost(&self, v: usize) -> Option<BlossomId> {
        self.ancestors(v).last()
    }

    pub fn child_members(&self, c: Child) -> Vec<usize> {
        match c {
            Child::Vertex(v) => vec![v],
            Child::Blossom(b) => self.blossom(b).members.clone(),
        }
    }

    pub fn child_contains(&self, c: Child, v: usize) -> bool {
        match c {
            Child::Vertex(x) => x == v,
            Child::Blossom(b) => self.blossom(b).contains(v),
        }
    }

    pub fn child_base(&self, c: Child) -> usize {
        match c {
            Child::Vertex(v) => v,
            Child::Blossom(b) => self.blossom(b).base,
        }
    }

    /// Blossom owning `e` as a cycle edge, i.e. `e` lies in some `E_B`.
    #[inline]
    pub fn cycle_owner(&self, e: usize) -> Option<BlossomId> {
        self.cycle_owner[e]
    }

    /// Light when the base's cycle edges are unmatched (recursively through
    /// a nontrivial first child).
    pub fn is_light(&self, b: BlossomId, f: &FFactor) -> bool {
        let bl = self.blossom(b);
        match bl.children[0] {
            Child::Vertex(_) => !f.contains(bl.cycle[0]),
            Child::Blossom(c) => self.is_light(c, f),
        }
    }

    /// `e` in `delta(B)` belongs to `I(B) = delta_F(B) xor {eta(B)}`.
    #[inline]
    pub fn in_i(&self, b: BlossomId, e: usize, f: &FFactor) -> bool {
        f.contains(e) != (self.blossom(b).eta == Some(e))
    }

    /// Inserts a new root blossom built from current roots/vertices. `cycle`
    /// is empty for blossoms read back from a certificate.
    pub fn add_blossom(&mut self, children: Vec<Child>, cycle: Vec<usize>, eta: Option<usize>) -> BlossomId {
        debug_assert!(cycle.is_empty() || children.len() == cycle.len());
        let mut members = Vec::new();
        for &c in &children {
            members.extend(self.child_members(c));
        }
        members.sort_unstable();
        let base = self.child_base(children[0]);
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.arena.push(None);
                self.arena.len() - 1
            }
        };
        for &c in &children {
            match c {
                Child::Vertex(v) => self.vparent[v] = Some(id),
                Child::Blossom(cb) => self.blossom_mut(cb).parent = Some(id),
            }
        }
        for &e in &cycle {
            self.cycle_owner[e] = Some(id);
        }
        self.arena[id] = Some(Blossom {
            children,
            cycle,
            base,
            eta,
            z: 0,
            parent: None,
            members,
        });
        id
    }

    /// Removes a root blossom without touching duals; its children become roots.
    pub fn remove_root(&mut self, b: BlossomId) {
        let bl = self.arena[b].take().expect("dangling blossom id");
        assert!(bl.parent.is_none(), "only root blossoms can be removed");
        for c in bl.children {
            match c {
                Child::Vertex(v) => self.vparent[v] = None,
                Child::Blossom(cb) => self.blossom_mut(cb).parent = None,
            }
        }
        for e in bl.cycle {
            if self.cycle_owner[e] == Some(b) {
                self.cycle_owner[e] = None;
            }
        }
        self.free.push(b);
    }

    /// Dissolves root blossom `b`: every member and every outside endpoint of
    /// an `I(B)` edge gains `z(B)/2`, then `B` is removed. `I(B)` is taken
    /// with respect to `reference`.
    pub fn dissolve(&mut self, g: &BlowupGraph, b: BlossomId, reference: &FFactor) -> Result<()> {
        let z = self.blossom(b).z;
        if z < 0 || z % 2 != 0 {
            return Err(Error::Invariant(format!("dissolving blossom {b} with z = {z}")));
        }
        if z > 0 {
            let half = z / 2;
            let members = self.blossom(b).members.clone();
            let mut outside = Vec::new();
            for &u in &members {
                for &e in g.incident(u) {
                    let w = g.other(e, u);
                    if !self.blossom(b).contains(w) && self.in_i(b, e, reference) {
                        outside.push(w);
                    }
                }
            }
            for u in members {
                self.y[u] += half;
            }
            outside.sort_unstable();
            outside.dedup();
            for w in outside {
                self.y[w] += half;
            }
        }
        self.blossom_mut(b).z = 0;
        self.remove_root(b);
        Ok(())
    }

    /// Removes root blossoms with zero dual until none is left.
    pub fn remove_zero_roots(&mut self) -> Vec<BlossomId> {
        let mut removed = Vec::new();
        loop {
            let zero: Vec<_> = self
                .root_blossoms()
                .into_iter()
                .filter(|&b| self.blossom(b).z == 0)
                .collect();
            if zero.is_empty() {
                return removed;
            }
            for b in zero {
                self.remove_root(b);
                removed.push(b);
            }
        }
    }

    /// Rotates `b` so that its base becomes `new_base` with `new_eta`. The
    /// child containing `new_base` moves to the front of the cycle.
    pub fn rebase(&mut self, b: BlossomId, new_base: usize, new_eta: Option<usize>) {
        let bl = self.blossom(b);
        let j = bl
            .children
            .iter()
            .position(|&c| self.child_contains(c, new_base))
            .expect("new base outside blossom");
        let bl = self.blossom_mut(b);
        bl.children.rotate_left(j);
        bl.cycle.rotate_left(j);
        bl.base = new_base;
        bl.eta = new_eta;
    }

    /// `yz(e) = y(u) + y(v) + sum of z(B)` over blossoms with `e` in
    /// `gamma(B)` or `I(B)`.
    pub fn yz(&self, g: &BlowupGraph, f: &FFactor, e: usize) -> i64 {
        let (a, b) = g.endpoints(e);
        self.y[a] + self.y[b] + self.blossom_sum(g, f, e)
    }

    /// The blossom part of `yz(e)`.
    pub fn blossom_sum(&self, g: &BlowupGraph, f: &FFactor, e: usize) -> i64 {
        let (a, b) = g.endpoints(e);
        let mut sum = 0;
        for x in self.ancestors(a) {
            let bl = self.blossom(x);
            if bl.contains(b) || self.in_i(x, e, f) {
                sum += bl.z;
            }
        }
        for x in self.ancestors(b) {
            let bl = self.blossom(x);
            if !bl.contains(a) && self.in_i(x, e, f) {
                sum += bl.z;
            }
        }
        sum
    }

    /// Brute-force `yz` that scans every blossom instead of walking ancestor
    /// chains; used to cross-check [`DualState::yz`].
    pub fn yz_brute(&self, g: &BlowupGraph, f: &FFactor, e: usize) -> i64 {
        let (a, b) = g.endpoints(e);
        let mut s = self.y[a] + self.y[b];
        for x in self.blossom_ids() {
            let bl = self.blossom(x);
            let (ina, inb) = (bl.contains(a), bl.contains(b));
            let gamma = ina && inb;
            let delta = ina != inb;
            let in_i = delta && (f.contains(e) != (bl.eta == Some(e)));
            if gamma || in_i {
                s += bl.z;
            }
        }
        s
    }

    /// The middle blowup edge next to `eta(B) = (u, e_u)`.
    pub fn zeta_of(&self, g: &BlowupGraph, b: BlossomId) -> Result<Option<usize>> {
        let bl = self.blossom(b);
        let Some(eta) = bl.eta else { return Ok(None) };
        let (p, q) = g.endpoints(eta);
        let (inside, outside) = if bl.contains(p) { (p, q) } else { (q, p) };
        let (_, part) = g.part_of(eta);
        if part == Part::Middle || !g.is_original(inside) || bl.contains(outside) {
            return Err(Error::Structural(format!(
                "eta of blossom {b} is not of the form (u, e_u) with u inside"
            )));
        }
        Ok(Some(g.middle_of(eta)))
    }

    pub fn is_eligible(&self, g: &BlowupGraph, mu: &[i64], f: &FFactor, e: usize) -> bool {
        self.yz(g, f, e) == mu[e]
    }

    pub fn is_approx_eligible(&self, g: &BlowupGraph, mu: &[i64], f: &FFactor, e: usize) -> bool {
        if self.cycle_owner[e].is_some() {
            return true;
        }
        let yz = self.yz(g, f, e);
        if f.contains(e) {
            yz == mu[e]
        } else {
            yz == mu[e] - 2
        }
    }

    /// `|F cap (gamma(B) cup I(B))|` and `floor((f(B) + |I(B)|) / 2)`.
    pub fn maturity_counts(&self, g: &BlowupGraph, f: &FFactor, b: BlossomId) -> (i64, i64) {
        let bl = self.blossom(b);
        let mut in_f = 0i64;
        let mut i_size = 0i64;
        let mut demand = 0i64;
        for &u in &bl.members {
            demand += g.demand(u);
            for &e in g.incident(u) {
                let w = g.other(e, u);
                if bl.contains(w) {
                    if u < w && f.contains(e) {
                        in_f += 1;
                    }
                } else if self.in_i(b, e, f) {
                    i_size += 1;
                    if f.contains(e) {
                        in_f += 1;
                    }
                }
            }
        }
        (in_f, (demand + i_size) / 2)
    }

    /// Evaluates dominance, tightness and maturity in the requested regime.
    pub fn check_slackness(&self, g: &BlowupGraph, f: &FFactor, mu: &[i64], mode: SlackMode) -> Vec<Violation> {
        let mut out = Vec::new();
        let slack = match mode {
            SlackMode::Strict | SlackMode::Weak => 0,
            SlackMode::Approx | SlackMode::WeakApprox => 2,
        };
        let dominance_on_f = matches!(mode, SlackMode::Strict | SlackMode::Approx);
        for e in 0..g.num_edges() {
            let yz = self.yz(g, f, e);
            let in_f = f.contains(e);
            if (!in_f || dominance_on_f) && yz < mu[e] - slack {
                out.push(Violation::Dominance { edge: e, yz, mu: mu[e] });
            }
            if in_f {
                let bad = match mode {
                    SlackMode::Strict => yz != mu[e],
                    _ => yz > mu[e],
                };
                if bad {
                    out.push(Violation::Tightness { edge: e, yz, mu: mu[e] });
                }
            }
        }
        for b in self.blossom_ids() {
            let z = self.blossom(b).z;
            if z < 0 || z % 2 != 0 {
                out.push(Violation::OddOrNegativeZ { blossom: b, z });
            }
            let (have, want) = self.maturity_counts(g, f, b);
            if have != want {
                out.push(Violation::Maturity { blossom: b, have, want });
            }
        }
        out
    }

    /// Checks laminarity, the blossom definition and maturity against `f`.
    pub fn validate_structure(&self, g: &BlowupGraph, f: &FFactor) -> Vec<String> {
        let mut errs = Vec::new();
        for v in 0..self.num_vertices() {
            if let Some(b) = self.vparent[v] {
                if !self.is_live(b) || !self.blossom(b).children.contains(&Child::Vertex(v)) {
                    errs.push(format!("vertex {v} has a stale parent link"));
                }
            }
        }
        for b in self.blossom_ids() {
            let bl = self.blossom(b);
            let l = bl.children.len();
            if l < 2 || bl.cycle.len() != l {
                errs.push(format!("blossom {b}: {l} children, {} cycle edges", bl.cycle.len()));
                continue;
            }
            let mut union = Vec::new();
            for &c in &bl.children {
                if let Child::Blossom(cb) = c {
                    if self.blossom(cb).parent != Some(b) {
                        errs.push(format!("blossom {b}: child {cb} has wrong parent"));
                    }
                }
                union.extend(self.child_members(c));
            }
            union.sort_unstable();
            let n_union = union.len();
            union.dedup();
            if union.len() != n_union || union != bl.members {
                errs.push(format!("blossom {b}: children do not partition the vertex set"));
            }
            if let Some(p) = bl.parent {
                if !self.blossom(p).children.contains(&Child::Blossom(b)) {
                    errs.push(format!("blossom {b}: parent {p} does not list it"));
                }
            }
            for i in 0..l {
                let e = bl.cycle[i];
                let (p, q) = g.endpoints(e);
                let (ci, cj) = (bl.children[i], bl.children[(i + 1) % l]);
                let ok = (self.child_contains(ci, p) && self.child_contains(cj, q))
                    || (self.child_contains(ci, q) && self.child_contains(cj, p));
                if !ok {
                    errs.push(format!("blossom {b}: cycle edge {i} does not join children {i}, {}", (i + 1) % l));
                }
            }
            for i in 1..l {
                let (prev, next) = (bl.cycle[i - 1], bl.cycle[i]);
                match bl.children[i] {
                    Child::Vertex(v) => {
                        if f.contains(prev) == f.contains(next) {
                            errs.push(format!("blossom {b}: singleton {v} breaks alternation"));
                        }
                    }
                    Child::Blossom(cb) => {
                        let eta = self.blossom(cb).eta;
                        if eta != Some(prev) && eta != Some(next) {
                            errs.push(format!("blossom {b}: child {cb} not attached by its eta"));
                        }
                    }
                }
            }
            if bl.base != self.child_base(bl.children[0]) {
                errs.push(format!("blossom {b}: base mismatch"));
            }
            match bl.children[0] {
                Child::Vertex(v) => {
                    let t0 = f.contains(bl.cycle[0]);
                    if t0 != f.contains(bl.cycle[l - 1]) {
                        errs.push(format!("blossom {b}: base {v} cycle edges differ in type"));
                    }
                    if let Some(eta) = bl.eta {
                        let (p, q) = g.endpoints(eta);
                        let at_base = p == v || q == v;
                        let leaves = bl.contains(p) != bl.contains(q);
                        if !at_base || !leaves || f.contains(eta) == t0 {
                            errs.push(format!("blossom {b}: eta is not an opposite-type edge at the base"));
                        }
                    }
                }
                Child::Blossom(c0) => {
                    if bl.eta != self.blossom(c0).eta {
                        errs.push(format!("blossom {b}: eta differs from first child's"));
                    }
                }
            }
            for &u in &bl.members {
                if u != bl.base && f.deg(u) != g.demand(u) {
                    errs.push(format!("blossom {b}: non-base vertex {u} unsaturated"));
                }
            }
            let def = g.demand(bl.base) - f.deg(bl.base);
            match def {
                0 if bl.eta.is_none() => errs.push(format!("blossom {b}: saturated base without eta")),
                1 if bl.eta.is_some() || !self.is_light(b, f) => {
                    errs.push(format!("blossom {b}: deficient base needs a light blossom with null eta"))
                }
                0 | 1 => {}
                d => errs.push(format!("blossom {b}: base deficiency {d}")),
            }
        }
        errs
    }

    /// Writes the certificate text. Vertex ids are 1-based blowup ids and
    /// blossoms are renumbered `1..` in preorder. When `weights` is given,
    /// one `w <edge> <weight>` line per blowup edge records the weights the
    /// duals refer to.
    pub fn write_certificate(&self, g: &BlowupGraph, weights: Option<&[i64]>) -> String {
        let mut order = Vec::new();
        let mut roots = self.root_blossoms();
        roots.sort_by_key(|&b| self.blossom(b).members[0]);
        fn visit(s: &DualState, b: BlossomId, out: &mut Vec<BlossomId>) {
            out.push(b);
            for &c in &s.blossom(b).children {
                if let Child::Blossom(cb) = c {
                    visit(s, cb, out);
                }
            }
        }
        for r in roots {
            visit(self, r, &mut order);
        }
        let label: BTreeMap<BlossomId, usize> = order.iter().enumerate().map(|(i, &b)| (b, i + 1)).collect();
        let mut out = String::new();
        for (v, y) in self.y.iter().enumerate() {
            writeln!(out, "y {} {}", v + 1, y).unwrap();
        }
        for &b in &order {
            let bl = self.blossom(b);
            let parent = bl.parent.map_or("-".to_string(), |p| label[&p].to_string());
            let eta = match bl.eta {
                Some(e) => {
                    let (p, q) = g.endpoints(e);
                    let (inside, outside) = if bl.contains(p) { (p, q) } else { (q, p) };
                    format!("{} {}", inside + 1, outside + 1)
                }
                None => "- -".to_string(),
            };
            let children: Vec<String> = bl
                .children
                .iter()
                .map(|&c| match c {
                    Child::Vertex(v) => (v + 1).to_string(),
                    Child::Blossom(cb) => format!("B{}", label[&cb]),
                })
                .collect();
            writeln!(
                out,
                "B {} {} {} {} {} : {}",
                label[&b],
                parent,
                bl.base + 1,
                eta,
                bl.z,
                children.join(" ")
            )
            .unwrap();
        }
        if let Some(w) = weights {
            for (e, x) in w.iter().enumerate() {
                writeln!(out, "w {} {}", e + 1, x).unwrap();
            }
        }
        out
    }
}

pub struct Ancestors<'a> {
    state: &'a DualState,
    next: Option<BlossomId>,
}

impl Iterator for Ancestors<'_> {
    type Item = BlossomId;
    fn next(&mut self) -> Option<BlossomId> {
        let b = self.next?;
        self.next = self.state.blossom(b).parent;
        Some(b)
    }
}

/// A certificate read back from text.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub duals: DualState,
    pub weights: Option<Vec<i64>>,
}

/// Parses the certificate format. Cycle edges are not part of the format,
/// so the blossoms of the result carry vertex sets, bases, `eta` and `z`
/// only; that is all the slackness report needs.
pub fn parse_certificate(g: &BlowupGraph, text: &str) -> Result<Certificate> {
    let nv = g.num_vertices();
    let mut y = vec![0i64; nv];
    struct Raw {
        parent: Option<usize>,
        base: usize,
        eta: Option<(usize, usize)>,
        z: i64,
        children: Vec<Child>,
        line: usize,
    }
    let mut raws: BTreeMap<usize, Raw> = BTreeMap::new();
    let mut weights: Vec<Option<i64>> = Vec::new();
    let num = |s: &str, line: usize| -> Result<i64> {
        s.parse::<i64>().map_err(|_| Error::parse(line, format!("invalid number `{s}`")))
    };
    let vertex = |s: &str, line: usize| -> Result<usize> {
        let v = num(s, line)?;
        if v < 1 || v as usize > nv {
            return Err(Error::parse(line, format!("vertex {v} out of range")));
        }
        Ok(v as usize - 1)
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tok: Vec<&str> = raw.split_whitespace().collect();
        match tok.first().copied() {
            None | Some("c") => {}
            Some("y") if tok.len() == 3 => y[vertex(tok[1], line)?] = num(tok[2], line)?,
            Some("w") if tok.len() == 3 => {
                let e = num(tok[1], line)?;
                if e < 1 || e as usize > g.num_edges() {
                    return Err(Error::parse(line, "edge index out of range"));
                }
                weights.resize(g.num_edges(), None);
                weights[e as usize - 1] = Some(num(tok[2], line)?);
            }
            Some("B") => {
                // B <id> <parent|-> <base> <eta_u|-> <eta_v|-> <z> : <children...>
                if tok.len() < 9 || tok[7] != ":" {
                    return Err(Error::parse(line, "malformed blossom line"));
                }
                let id = num(tok[1], line)? as usize;
                let parent = if tok[2] == "-" { None } else { Some(num(tok[2], line)? as usize) };
                let base = vertex(tok[3], line)?;
                let eta = match (tok[4], tok[5]) {
                    ("-", "-") => None,
                    (a, b) => Some((vertex(a, line)?, vertex(b, line)?)),
                };
                let z = num(tok[6], line)?;
                let children = tok[8..]
                    .iter()
                    .map(|t| match t.strip_prefix('B') {
                        Some(rest) => num(rest, line).map(|x| Child::Blossom(x as usize)),
                        None => vertex(t, line).map(Child::Vertex),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if raws.insert(id, Raw { parent, base, eta, z, children, line }).is_some() {
                    return Err(Error::parse(line, format!("blossom {id} defined twice")));
                }
            }
            Some(_) => return Err(Error::parse(line, "unrecognised certificate line")),
        }
    }

    let mut duals = DualState::new(nv, g.num_edges());
    duals.y = y;
    // Build children before parents.
    let mut built: BTreeMap<usize, BlossomId> = BTreeMap::new();
    let mut pending: Vec<usize> = raws.keys().copied().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for id in pending {
            let r = &raws[&id];
            let ready = r.children.iter().all(|c| match c {
                Child::Blossom(x) => built.contains_key(x),
                Child::Vertex(_) => true,
            });
            if !ready {
                rest.push(id);
                continue;
            }
            let children: Vec<Child> = r
                .children
                .iter()
                .map(|&c| match c {
                    Child::Blossom(x) => Child::Blossom(built[&x]),
                    v => v,
                })
                .collect();
            for &c in &children {
                let taken = match c {
                    Child::Vertex(v) => duals.vparent[v].is_some(),
                    Child::Blossom(b) => duals.blossom(b).parent.is_some(),
                };
                if taken {
                    return Err(Error::parse(r.line, "blossom family is not laminar"));
                }
            }
            let b = duals.add_blossom(children, Vec::new(), None);
            let eta = match r.eta {
                None => None,
                Some((p, q)) => Some(
                    g.incident(p)
                        .iter()
                        .copied()
                        .find(|&e| g.other(e, p) == q)
                        .ok_or_else(|| Error::parse(r.line, "eta is not an edge"))?,
                ),
            };
            let bl = duals.blossom_mut(b);
            bl.eta = eta;
            bl.z = r.z;
            if !bl.contains(r.base) {
                return Err(Error::parse(r.line, "base outside blossom"));
            }
            bl.base = r.base;
            built.insert(id, b);
        }
        if rest.len() == before {
            return Err(Error::parse(0, "blossom children reference undefined or cyclic ids"));
        }
        pending = rest;
    }
    for (id, r) in &raws {
        let expected = r.parent.map(|p| built.get(&p).copied());
        let actual = duals.blossom(built[id]).parent;
        match expected {
            None if actual.is_some() => return Err(Error::parse(r.line, "blossom declared as root has a parent")),
            Some(None) => return Err(Error::parse(r.line, "unknown parent blossom")),
            Some(Some(p)) if actual != Some(p) => {
                return Err(Error::parse(r.line, "parent does not list this blossom as a child"))
            }
            _ => {}
        }
    }
    let weights = if weights.is_empty() {
        None
    } else {
        Some(
            weights
                .into_iter()
                .enumerate()
                .map(|(e, w)| w.ok_or_else(|| Error::parse(0, format!("missing weight for edge {}", e + 1))))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    Ok(Certificate { duals, weights })
}

/// Optimality gap `f(V) - (w* - mu(F))`, which is nonnegative
/// whenever `F` is perfect and approximate slackness holds.
///
/// The proof behind it uses the derived quantity `u(e) = mu(e) - yz(e)` on
/// factor edges and `0` elsewhere; it is never stored.
pub fn certificate_gap(g: &BlowupGraph, mu: &[i64], f: &FFactor, f_star_weight: i64) -> Result<i64> {
    let total_demand = g.total_demand();
    let mu_f: i64 = f.edges().map(|e| mu[e]).sum();
    let gap = total_demand - (f_star_weight - mu_f);
    if gap < 0 {
        return Err(Error::Invariant(format!(
            "factor weight {mu_f} is more than f(V) = {total_demand} below the optimum {f_star_weight}"
        )));
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, OrigGraph};
    use proptest::prelude::*;

    fn single_edge() -> (OrigGraph, BlowupGraph) {
        let g = OrigGraph::new(2, vec![Edge { u: 0, v: 1, w: 5 }], vec![1, 1]).unwrap();
        let bg = BlowupGraph::build(&g);
        (g, bg)
    }

    fn k4() -> BlowupGraph {
        let mut edges = Vec::new();
        for u in 0..4 {
            for v in u + 1..4 {
                edges.push(Edge { u, v, w: 1 });
            }
        }
        BlowupGraph::build(&OrigGraph::new(4, edges, vec![3; 4]).unwrap())
    }

    #[test]
    fn tight_single_edge_passes_strict() {
        let (_, bg) = single_edge();
        let f = FFactor::from_edges(&bg, [0, 2]).unwrap();
        let mut d = DualState::new(4, 3);
        d.y[0] = 5;
        d.y[1] = 5;
        assert!(d.check_slackness(&bg, &f, bg.mu(), SlackMode::Strict).is_empty());
        d.y[0] = 4;
        let v = d.check_slackness(&bg, &f, bg.mu(), SlackMode::Strict);
        assert!(v.contains(&Violation::Tightness { edge: 0, yz: 4, mu: 5 }));
        assert!(v.contains(&Violation::Dominance { edge: 0, yz: 4, mu: 5 }));
        assert!(d.check_slackness(&bg, &f, bg.mu(), SlackMode::Weak).is_empty());
        d.y[0] = 3;
        assert!(d.check_slackness(&bg, &f, bg.mu(), SlackMode::WeakApprox).is_empty());
        assert!(d.check_slackness(&bg, &f, bg.mu(), SlackMode::Approx).is_empty());
        d.y[0] = 2;
        assert_eq!(d.check_slackness(&bg, &f, bg.mu(), SlackMode::Approx).len(), 1);
    }

    #[test]
    fn dissolve_keeps_inside_and_i_edges() {
        // B = {u, e_u}; the middle edge leaves B and is in F, so it is in I(B).
        let (_, bg) = single_edge();
        let f = FFactor::from_edges(&bg, [1]).unwrap();
        let mut d = DualState::new(4, 3);
        let b = d.add_blossom(vec![Child::Vertex(0), Child::Vertex(2)], vec![0, 0], None);
        d.blossom_mut(b).z = 4;
        let before: Vec<i64> = (0..3).map(|e| d.yz(&bg, &f, e)).collect();
        assert_eq!(before, vec![4, 4, 0]);
        d.dissolve(&bg, b, &f).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.y, vec![2, 0, 2, 2]);
        assert_eq!(d.yz(&bg, &f, 0), 4);
        assert_eq!(d.yz(&bg, &f, 1), 4);
    }

    #[test]
    fn dissolve_rejects_odd_z() {
        let (_, bg) = single_edge();
        let f = FFactor::empty(4, 3);
        let mut d = DualState::new(4, 3);
        let b = d.add_blossom(vec![Child::Vertex(0), Child::Vertex(2)], vec![0, 0], None);
        d.blossom_mut(b).z = 3;
        assert!(matches!(d.dissolve(&bg, b, &f), Err(Error::Invariant(_))));
    }

    #[test]
    fn rebase_rotates_children() {
        let mut d = DualState::new(5, 13);
        let b = d.add_blossom(vec![Child::Vertex(0), Child::Vertex(1), Child::Vertex(2)], vec![10, 11, 12], None);
        d.rebase(b, 2, Some(4));
        let bl = d.blossom(b);
        assert_eq!(bl.children, vec![Child::Vertex(2), Child::Vertex(0), Child::Vertex(1)]);
        assert_eq!(bl.cycle, vec![12, 10, 11]);
        assert_eq!((bl.base, bl.eta), (2, Some(4)));
    }

    #[test]
    fn certificate_round_trip() {
        let bg = k4();
        let nv = bg.num_vertices();
        let mut d = DualState::new(nv, bg.num_edges());
        for (v, y) in d.y.iter_mut().enumerate() {
            *y = v as i64 - 7;
        }
        let inner = d.add_blossom(vec![Child::Vertex(0), Child::Vertex(4), Child::Vertex(5)], vec![0, 1, 2], None);
        d.blossom_mut(inner).z = 6;
        let outer = d.add_blossom(vec![Child::Blossom(inner), Child::Vertex(6), Child::Vertex(7)], vec![3, 4, 5], Some(6));
        d.blossom_mut(outer).z = 2;
        let text = d.write_certificate(&bg, Some(bg.mu()));
        let cert = parse_certificate(&bg, &text).unwrap();
        assert_eq!(cert.duals.y, d.y);
        assert_eq!(cert.weights.as_deref(), Some(bg.mu()));
        assert_eq!(cert.duals.num_blossoms(), 2);
        let f = FFactor::from_edges(&bg, [0, 6, 9]).unwrap();
        for e in 0..bg.num_edges() {
            assert_eq!(cert.duals.yz(&bg, &f, e), d.yz(&bg, &f, e), "edge {e}");
        }
        assert_eq!(cert.duals.write_certificate(&bg, Some(bg.mu())), text);
    }

    #[test]
    fn certificate_errors_carry_line_numbers() {
        let (_, bg) = single_edge();
        let e = parse_certificate(&bg, "y 1 0\ny 9 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_certificate(&bg, "B 1 - 1 - - 2 1 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    proptest! {
        #[test]
        fn yz_matches_brute_force(
            y in proptest::collection::vec(-6i64..6, 16),
            fmask in proptest::collection::vec(any::<bool>(), 18),
            z in (0i64..5, 0i64..5, 0i64..5),
            eta in (0usize..19, 0usize..19),
        ) {
            let bg = k4();
            let mut d = DualState::new(16, 18);
            d.y = y;
            let f = FFactor::from_edges(&bg, (0..18).filter(|&e| fmask[e])).unwrap_or_else(|_| FFactor::empty(16, 18));
            let pick = |x: usize| (x < 18).then_some(x);
            let a = d.add_blossom(vec![Child::Vertex(0), Child::Vertex(4), Child::Vertex(5)], vec![0, 1, 2], pick(eta.0));
            d.blossom_mut(a).z = 2 * z.0;
            let b = d.add_blossom(vec![Child::Vertex(1), Child::Vertex(10), Child::Vertex(11)], vec![3, 4, 5], None);
            d.blossom_mut(b).z = 2 * z.1;
            let c = d.add_blossom(vec![Child::Blossom(a), Child::Blossom(b), Child::Vertex(6)], vec![6, 7, 8], pick(eta.1));
            d.blossom_mut(c).z = 2 * z.2;
            for e in 0..18 {
                prop_assert_eq!(d.yz(&bg, &f, e), d.yz_brute(&bg, &f, e));
            }
        }
    }
}
