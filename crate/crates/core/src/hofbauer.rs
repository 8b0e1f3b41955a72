//! The canonical Markov extension (Hofbauer tower).
//!
//! Nodes are intervals `D`; for every branch `ξ` with `D ∩ ξ` of positive
//! length there is an edge `D → closure(f(D ∩ ξ))`. Construction is
//! breadth-first from the base `I`, so a node's depth is its distance from
//! the base. Endpoints remember which forward image of a turning or boundary
//! point they are, which lets eventually periodic critical orbits close up
//! exactly.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::{IntervalMap, MapSpec};

/// Default numeric tolerance for identifying two nodes.
pub const EPS_ID: f64 = 1e-10;
/// Default hard limit on the number of nodes.
pub const NODE_LIMIT: usize = 100_000;

/// Origin of a node endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Endpoint of the base interval.
    BaseBoundary,
    /// `f^iterate(p)` where `p` is special point number `point`: turning
    /// points first, then the two domain endpoints.
    Orbit { point: usize, iterate: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerNode {
    pub id: usize,
    pub interval: Interval,
    pub depth: usize,
    pub prov: [Provenance; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerEdge {
    pub from: usize,
    pub branch: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerConfig {
    pub depth_cap: usize,
    pub node_limit: usize,
    pub eps_id: f64,
    /// Visit branches from last to first when expanding a node.
    pub reverse_branches: bool,
}

impl TowerConfig {
    pub fn new(depth_cap: usize) -> Self {
        TowerConfig {
            depth_cap,
            node_limit: NODE_LIMIT,
            eps_id: EPS_ID,
            reverse_branches: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tower {
    pub spec: MapSpec,
    pub nodes: Vec<TowerNode>,
    pub edges: Vec<TowerEdge>,
    pub base: usize,
    pub config: TowerConfig,
    /// Construction stopped at the node limit.
    pub partial: bool,
    expanded: Vec<bool>,
    out: Vec<Vec<Option<usize>>>,
}

/// JSON shape of an exported tower.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerExport {
    pub map: MapSpec,
    pub depth_cap: usize,
    pub eps_id: f64,
    pub partial: bool,
    pub base: usize,
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<TowerEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeExport {
    pub id: usize,
    pub lo: f64,
    pub hi: f64,
    pub depth: usize,
    pub prov: [Provenance; 2],
}

struct Dedup {
    eps: f64,
    by_prov: HashMap<[Provenance; 2], usize>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Dedup {
    fn key(&self, iv: &Interval) -> (i64, i64) {
        ((iv.lo / self.eps).floor() as i64, (iv.hi / self.eps).floor() as i64)
    }

    fn find(&self, nodes: &[TowerNode], iv: &Interval, prov: &[Provenance; 2]) -> Option<usize> {
        if let Some(&id) = self.by_prov.get(prov) {
            return Some(id);
        }
        let (a, b) = self.key(iv);
        for da in -1..=1 {
            for db in -1..=1 {
                if let Some(ids) = self.buckets.get(&(a + da, b + db)) {
                    if let Some(&id) = ids.iter().find(|&&id| nodes[id].interval.approx_eq(iv, self.eps)) {
                        return Some(id);
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, node: &TowerNode) {
        self.by_prov.entry(node.prov).or_insert(node.id);
        let k = self.key(&node.interval);
        self.buckets.entry(k).or_default().push(node.id);
    }
}

fn special_points(map: &IntervalMap) -> Vec<f64> {
    let mut pts: Vec<f64> = map.critical_points().iter().map(|c| c.location).collect();
    pts.push(map.domain().lo);
    pts.push(map.domain().hi);
    pts
}

fn advance(p: Provenance, n_crit: usize, at_hi: bool) -> Provenance {
    match p {
        Provenance::BaseBoundary => Provenance::Orbit {
            point: n_crit + usize::from(at_hi),
            iterate: 1,
        },
        Provenance::Orbit { point, iterate } => Provenance::Orbit {
            point,
            iterate: iterate + 1,
        },
    }
}

/// Breadth-first construction up to `depth_cap`, default tolerances.
pub fn build_tower(map: &IntervalMap, depth_cap: usize) -> Tower {
    build_tower_with(map, &TowerConfig::new(depth_cap))
}

pub fn build_tower_with(map: &IntervalMap, config: &TowerConfig) -> Tower {
    let n_crit = map.critical_points().len();
    let nb = map.branches().len();
    let base = TowerNode {
        id: 0,
        interval: map.domain(),
        depth: 0,
        prov: [Provenance::BaseBoundary; 2],
    };
    let mut tower = Tower {
        spec: map.spec(),
        nodes: vec![base],
        edges: Vec::new(),
        base: 0,
        config: *config,
        partial: false,
        expanded: vec![false],
        out: vec![vec![None; nb]],
    };
    let mut dedup = Dedup {
        eps: config.eps_id,
        by_prov: HashMap::new(),
        buckets: HashMap::new(),
    };
    dedup.insert(&tower.nodes[0]);

    let mut queue = VecDeque::from([0usize]);
    'bfs: while let Some(id) = queue.pop_front() {
        let node = tower.nodes[id].clone();
        if node.depth >= config.depth_cap {
            continue;
        }
        let order: Vec<usize> = if config.reverse_branches {
            (0..nb).rev().collect()
        } else {
            (0..nb).collect()
        };
        for b in order {
            let br = &map.branches()[b];
            let lo = node.interval.lo.max(br.domain.lo);
            let hi = node.interval.hi.min(br.domain.hi);
            if !(lo < hi) {
                continue;
            }
            // Tags of the piece endpoints before mapping.
            let tag = |v: f64, own: f64, own_tag: Provenance| {
                if v == own {
                    own_tag
                } else {
                    // A branch boundary strictly inside D: a turning point.
                    let k = map
                        .critical_points()
                        .iter()
                        .position(|c| c.location == v)
                        .expect("interior branch boundary is a turning point");
                    Provenance::Orbit { point: k, iterate: 0 }
                }
            };
            let tlo = tag(lo, node.interval.lo, node.prov[0]);
            let thi = tag(hi, node.interval.hi, node.prov[1]);
            let ylo = map.clamp(br.forward(lo), node.depth + 1).unwrap_or(br.forward(lo));
            let yhi = map.clamp(br.forward(hi), node.depth + 1).unwrap_or(br.forward(hi));
            let plo = advance(tlo, n_crit, false);
            let phi = advance(thi, n_crit, true);
            let (interval, prov) = if ylo <= yhi {
                (Interval { lo: ylo, hi: yhi }, [plo, phi])
            } else {
                (Interval { lo: yhi, hi: ylo }, [phi, plo])
            };
            let target = match dedup.find(&tower.nodes, &interval, &prov) {
                Some(t) => t,
                None => {
                    if tower.nodes.len() >= config.node_limit {
                        tower.partial = true;
                        break 'bfs;
                    }
                    let t = tower.nodes.len();
                    let n = TowerNode {
                        id: t,
                        interval,
                        depth: node.depth + 1,
                        prov,
                    };
                    dedup.insert(&n);
                    tower.nodes.push(n);
                    tower.expanded.push(false);
                    tower.out.push(vec![None; nb]);
                    queue.push_back(t);
                    t
                }
            };
            tower.out[id][b] = Some(target);
            tower.edges.push(TowerEdge {
                from: id,
                branch: b,
                to: target,
            });
        }
        tower.expanded[id] = true;
    }
    tower
}

impl Tower {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Target of the edge leaving `node` along `branch`.
    pub fn edge(&self, node: usize, branch: usize) -> Option<usize> {
        self.out.get(node)?.get(branch).copied().flatten()
    }

    /// Nodes whose out-edges were never built (at the depth cap, or left
    /// over when the node limit was hit).
    pub fn is_frontier(&self, node: usize) -> bool {
        !self.expanded[node]
    }

    /// Node ids in `K_N`.
    pub fn compact_part(&self, n: usize) -> Vec<usize> {
        self.nodes.iter().filter(|d| d.depth <= n).map(|d| d.id).collect()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|d| d.depth).max().unwrap_or(0)
    }

    /// Shallowest expanded node containing `j` in its interior that lies on
    /// a cycle of the graph.
    pub fn recurrent_node_containing(&self, map: &IntervalMap, j: &Interval) -> Option<usize> {
        let mut ids: Vec<usize> = (0..self.len())
            .filter(|&id| {
                let d = &self.nodes[id].interval;
                !self.is_frontier(id) && d.lo < j.lo && j.hi < d.hi
            })
            .collect();
        ids.sort_by_key(|&id| (self.nodes[id].depth, id));
        ids.into_iter().find(|&id| {
            map.branches().iter().any(|br| {
                j.intersect(&br.domain).is_some_and(|h| h.width() > 0.0)
                    && self
                        .edge(id, br.index)
                        .is_some_and(|next| next == id || self.reaches(next, id))
            })
        })
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = self.out[from].iter().flatten().copied().collect();
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.out[v].iter().flatten().copied());
        }
        false
    }

    /// Violations of the Markov closure and edge-consistency invariants,
    /// checked on expanded nodes; `tol` bounds endpoint residuals.
    pub fn markov_violations(&self, map: &IntervalMap, tol: f64) -> Vec<String> {
        let mut bad = Vec::new();
        for node in &self.nodes {
            if self.is_frontier(node.id) {
                continue;
            }
            for br in map.branches() {
                let lo = node.interval.lo.max(br.domain.lo);
                let hi = node.interval.hi.min(br.domain.hi);
                if !(lo < hi) {
                    continue;
                }
                let img = Interval::new(br.forward(lo), br.forward(hi));
                match self.edge(node.id, br.index) {
                    None => bad.push(format!("node {} branch {}: missing edge", node.id, br.index)),
                    Some(t) => {
                        let e = &self.nodes[t];
                        let r = (e.interval.lo - img.lo).abs().max((e.interval.hi - img.hi).abs());
                        if r > tol {
                            bad.push(format!(
                                "node {} branch {}: target {} residual {r:e}",
                                node.id, br.index, t
                            ));
                        }
                        if e.depth > node.depth + 1 {
                            bad.push(format!("node {} -> {}: depth jumps", node.id, t));
                        }
                    }
                }
            }
        }
        bad
    }

    /// Largest distance between a node endpoint and the forward image of its
    /// tagged point, recomputed along the same `f64` path.
    pub fn provenance_residual(&self, map: &IntervalMap) -> f64 {
        let pts = special_points(map);
        let mut cache: HashMap<usize, Vec<f64>> = HashMap::new();
        let mut worst = 0.0f64;
        for node in &self.nodes {
            for (end, p) in [node.interval.lo, node.interval.hi].iter().zip(node.prov) {
                let expect = match p {
                    Provenance::BaseBoundary => continue,
                    Provenance::Orbit { point, iterate } => {
                        let orb = cache.entry(point).or_insert_with(|| vec![pts[point]]);
                        while orb.len() <= iterate {
                            let last = *orb.last().unwrap();
                            let y = map.clamp(map.eval(last), orb.len()).unwrap_or(map.eval(last));
                            orb.push(y);
                        }
                        orb[iterate]
                    }
                };
                worst = worst.max((end - expect).abs());
            }
        }
        worst
    }

    /// Pairs of distinct nodes whose endpoints both agree within `eps`.
    pub fn duplicate_pairs(&self, eps: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                if self.nodes[a].interval.approx_eq(&self.nodes[b].interval, eps) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn export(&self) -> TowerExport {
        TowerExport {
            map: self.spec,
            depth_cap: self.config.depth_cap,
            eps_id: self.config.eps_id,
            partial: self.partial,
            base: self.base,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeExport {
                    id: n.id,
                    lo: n.interval.lo,
                    hi: n.interval.hi,
                    depth: n.depth,
                    prov: n.prov,
                })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    /// Graphviz rendering, nodes labelled `[lo, hi] @depth`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph tower {\n  rankdir=TB;\n");
        for n in &self.nodes {
            let shape = if self.is_frontier(n.id) { "box" } else { "ellipse" };
            let _ = writeln!(
                s,
                "  n{} [label=\"[{:.6}, {:.6}] @{}\", shape={shape}];",
                n.id, n.interval.lo, n.interval.hi, n.depth
            );
        }
        for e in &self.edges {
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, e.branch);
        }
        s.push_str("}\n");
        s
    }
}

/// A point of the tower: `x` sitting in node `node`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerPoint {
    pub x: f64,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum LiftStop {
    /// The orbit reached a frontier node and needed one of its out-edges.
    DepthCap {
        index: usize,
    },
    CriticalHit {
        index: usize,
    },
    MissingEdge {
        index: usize,
    },
    Escaped {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub points: Vec<TowerPoint>,
    pub stop: Option<LiftStop>,
}

impl Lift {
    pub fn depths(&self, tower: &Tower) -> Vec<usize> {
        self.points.iter().map(|p| tower.nodes[p.node].depth).collect()
    }

    pub fn truncated(&self) -> bool {
        self.stop.is_some()
    }
}

/// Lift of `x, f(x), …, fⁿ(x)` starting at the base. The projection uses the
/// same arithmetic as [`IntervalMap::orbit`].
pub fn lift_orbit(tower: &Tower, map: &IntervalMap, x: f64, n: usize) -> Result<Lift> {
    if !map.domain().contains(x) {
        let d = map.domain();
        return Err(Error::OutsideDomain { x, lo: d.lo, hi: d.hi });
    }
    let orbit = map.orbit(x, n)?;
    let mut points = vec![TowerPoint { x, node: tower.base }];
    let mut cur = points[0];
    for i in 0..n {
        let stop = if map.critical_index(cur.x).is_some() {
            Some(LiftStop::CriticalHit { index: i })
        } else {
            match tower.edge(cur.node, map.branch_index(cur.x)) {
                Some(next) => {
                    cur = TowerPoint {
                        x: orbit[i + 1],
                        node: next,
                    };
                    points.push(cur);
                    None
                }
                None if tower.is_frontier(cur.node) => Some(LiftStop::DepthCap { index: i }),
                None => Some(LiftStop::MissingEdge { index: i }),
            }
        };
        if stop.is_some() {
            return Ok(Lift { points, stop });
        }
    }
    Ok(Lift { points, stop: None })
}

/// Lift of a known periodic orbit, cycling through its exact points instead
/// of iterating `f` (which would drift off a repelling cycle).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicLift {
    pub nodes: Vec<usize>,
    /// Index where the node/phase sequence starts repeating, if it does.
    pub preperiod: Option<usize>,
    /// Node-cycle length (a multiple of the orbit period).
    pub period: Option<usize>,
    pub stop: Option<LiftStop>,
}

impl PeriodicLift {
    /// Node ids on the detected cycle.
    pub fn cycle(&self) -> &[usize] {
        match (self.preperiod, self.period) {
            (Some(a), Some(p)) => &self.nodes[a..a + p],
            _ => &[],
        }
    }
}

pub fn periodic_lift(tower: &Tower, map: &IntervalMap, cycle: &[f64], n: usize) -> Result<PeriodicLift> {
    if cycle.is_empty() {
        return Err(Error::InvalidArgument("empty cycle".into()));
    }
    let q = cycle.len();
    let mut nodes = vec![tower.base];
    let mut seen: HashMap<(usize, usize), usize> = HashMap::from([((tower.base, 0), 0)]);
    for i in 0..n {
        let x = cycle[i % q];
        let node = nodes[i];
        let stop = if map.critical_index(x).is_some() {
            Some(LiftStop::CriticalHit { index: i })
        } else {
            match tower.edge(node, map.branch_index(x)) {
                Some(next) => {
                    nodes.push(next);
                    if let Some(&first) = seen.get(&(next, (i + 1) % q)) {
                        return Ok(PeriodicLift {
                            nodes,
                            preperiod: Some(first),
                            period: Some(i + 1 - first),
                            stop: None,
                        });
                    }
                    seen.insert((next, (i + 1) % q), i + 1);
                    None
                }
                None if tower.is_frontier(node) => Some(LiftStop::DepthCap { index: i }),
                None => Some(LiftStop::MissingEdge { index: i }),
            }
        };
        if stop.is_some() {
            return Ok(PeriodicLift {
                nodes,
                preperiod: None,
                period: None,
                stop,
            });
        }
    }
    Ok(PeriodicLift {
        nodes,
        preperiod: None,
        period: None,
        stop: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile {
    /// `m_j`: fraction of lift times `0..=j` spent in `K_N`.
    pub mass: Vec<f64>,
    pub n_compact: usize,
    pub stop: Option<LiftStop>,
}

impl MassProfile {
    pub fn last(&self) -> f64 {
        *self.mass.last().unwrap_or(&f64::NAN)
    }
}

pub fn mass_profile(tower: &Tower, map: &IntervalMap, x: f64, n: usize, n_compact: usize) -> Result<MassProfile> {
    let lift = lift_orbit(tower, map, x, n)?;
    Ok(mass_of_lift(tower, &lift, n_compact))
}

pub fn mass_of_lift(tower: &Tower, lift: &Lift, n_compact: usize) -> MassProfile {
    let mut inside = 0usize;
    let mass = lift
        .points
        .iter()
        .enumerate()
        .map(|(j, p)| {
            inside += usize::from(tower.nodes[p.node].depth <= n_compact);
            inside as f64 / (j + 1) as f64
        })
        .collect();
    MassProfile {
        mass,
        n_compact,
        stop: lift.stop.clone(),
    }
}

/// One branch of the first return map to `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnBranch {
    pub domain: Interval,
    pub time: usize,
    /// Image of the branch domain under `f^time`, intersected with `J`.
    pub image: Interval,
    /// The image is all of `J`.
    pub full: bool,
    /// Minimum of `|Df^time|` over the branch domain (sampled).
    pub min_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstReturn {
    pub j: Interval,
    pub node: usize,
    pub branches: Vec<ReturnBranch>,
    /// Total length of the discovered full branch domains over `|J|`.
    pub full_fraction: f64,
    /// Length (over `|J|`) lost to frontier nodes or the width floor.
    pub lost_fraction: f64,
    /// Length (over `|J|`) still unreturned when the budget ran out.
    pub pending_fraction: f64,
    /// No branch at all was found.
    pub exhausted: bool,
}

impl FirstReturn {
    pub fn full_branches(&self) -> impl Iterator<Item = &ReturnBranch> {
        self.branches.iter().filter(|b| b.full)
    }
}

/// Pieces narrower than this are dropped.
pub const MIN_PIECE_WIDTH: f64 = 1e-15;
/// Live pieces kept per step before the search stops early.
pub const MAX_PIECES: usize = 1 << 20;

struct Piece {
    dom: Interval,
    img: Interval,
    node: usize,
    word: Vec<usize>,
    increasing: bool,
}

fn min_multiplier(map: &IntervalMap, dom: &Interval, s: usize) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..=16 {
        let x = dom.lo + dom.width() * k as f64 / 16.0;
        if let Ok(l) = map.log_deriv_sum(x, s) {
            m = m.min(l.exp());
        }
    }
    m
}

/// First return map of `f̂` to `J` inside node `node`, discovered by pushing
/// `J` forward through the tower for at most `n_max` steps.
pub fn first_return(tower: &Tower, map: &IntervalMap, j: Interval, node: usize, n_max: usize) -> Result<FirstReturn> {
    let d = tower
        .nodes
        .get(node)
        .ok_or_else(|| Error::InvalidArgument(format!("no node {node}")))?;
    if !(d.interval.lo < j.lo && j.hi < d.interval.hi && j.lo < j.hi) {
        return Err(Error::InvalidArgument(format!(
            "J = {j} is not compactly inside node {node} = {}",
            d.interval
        )));
    }
    let jw = j.width();
    let mut live = vec![Piece {
        dom: j,
        img: j,
        node,
        word: Vec::new(),
        increasing: true,
    }];
    let mut branches = Vec::new();
    let mut lost = 0.0;
    for s in 1..=n_max {
        let mut next = Vec::new();
        for p in live {
            for br in map.branches() {
                let Some(part) = p.img.intersect(&br.domain) else {
                    continue;
                };
                if part.width() <= 0.0 {
                    continue;
                }
                // Sub-domain of p.dom mapped onto `part` by f^{s-1}.
                let pull = |y: f64, keep: f64| -> Result<f64> {
                    if y == p.img.lo || y == p.img.hi {
                        Ok(keep)
                    } else {
                        map.pullback_point(&p.word, y)
                    }
                };
                let (a, b) = if p.increasing {
                    (pull(part.lo, p.dom.lo)?, pull(part.hi, p.dom.hi)?)
                } else {
                    (pull(part.hi, p.dom.lo)?, pull(part.lo, p.dom.hi)?)
                };
                let dom = Interval::new(a, b);
                if dom.width() < MIN_PIECE_WIDTH {
                    lost += dom.width();
                    continue;
                }
                let Some(target) = tower.edge(p.node, br.index) else {
                    lost += dom.width();
                    continue;
                };
                let ya = map.clamp(br.forward(part.lo), s).unwrap_or(br.forward(part.lo));
                let yb = map.clamp(br.forward(part.hi), s).unwrap_or(br.forward(part.hi));
                let inc = p.increasing == (ya <= yb);
                let mut word = p.word.clone();
                word.push(br.index);
                next.push(Piece {
                    dom,
                    img: Interval::new(ya, yb),
                    node: target,
                    word,
                    increasing: inc,
                });
            }
        }
        // Split off the parts that land in J inside the target node.
        live = Vec::new();
        for p in next {
            let hit = if p.node == node { p.img.intersect(&j) } else { None };
            let Some(hit) = hit.filter(|h| h.width() > 0.0) else {
                live.push(p);
                continue;
            };
            let full = p.img.lo <= j.lo && j.hi <= p.img.hi;
            let pull = |y: f64, keep: f64| -> Result<f64> {
                if y == p.img.lo || y == p.img.hi {
                    Ok(keep)
                } else {
                    map.pullback_point(&p.word, y)
                }
            };
            let to_dom = |y: f64| -> Result<f64> {
                if p.increasing {
                    pull(y, if y == p.img.lo { p.dom.lo } else { p.dom.hi })
                } else {
                    pull(y, if y == p.img.lo { p.dom.hi } else { p.dom.lo })
                }
            };
            let dom = Interval::new(to_dom(hit.lo)?, to_dom(hit.hi)?);
            branches.push(ReturnBranch {
                domain: dom,
                time: s,
                image: hit,
                full,
                min_multiplier: min_multiplier(map, &dom, s),
            });
            // Leftover pieces on either side of J keep going.
            for rest in [Interval::new(p.img.lo, hit.lo), Interval::new(hit.hi, p.img.hi)] {
                if rest.width() <= 0.0 {
                    continue;
                }
                let rd = Interval::new(to_dom(rest.lo)?, to_dom(rest.hi)?);
                if rd.width() < MIN_PIECE_WIDTH {
                    lost += rd.width();
                    continue;
                }
                live.push(Piece {
                    dom: rd,
                    img: rest,
                    node: p.node,
                    word: p.word.clone(),
                    increasing: p.increasing,
                });
            }
        }
        if live.is_empty() || live.len() > MAX_PIECES {
            break;
        }
    }
    branches.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
    let full_len: f64 = branches.iter().filter(|b| b.full).map(|b| b.domain.width()).sum();
    let pending: f64 = live.iter().map(|p| p.dom.width()).sum();
    Ok(FirstReturn {
        j,
        node,
        exhausted: branches.is_empty(),
        branches,
        full_fraction: full_len / jw,
        lost_fraction: lost / jw,
        pending_fraction: pending / jw,
    })
}
