//! Network, demand, and flow data model.
//!
//! Flows come in three interchangeable shapes: per-arc totals ([`ArcFlow`]),
//! per-OD-class arc flows ([`ClassFlow`]), and explicit path flows
//! ([`PathFlow`]). Aggregation (paths -> classes -> arcs) is unique; the
//! inverse direction is not, so [`decompose_to_paths`] fixes one canonical,
//! deterministic decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed arc between two dense node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
}

/// Directed network with dense arc ids `0..num_arcs()` and external node labels.
#[derive(Debug, Clone)]
pub struct Network {
    node_labels: Vec<u64>,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
}

impl Network {
    /// Build a network from node labels and arcs given as `(tail_label, head_label)`.
    pub fn new(node_labels: Vec<u64>, arc_labels: &[(u64, u64)]) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &label in &node_labels {
            if !seen.insert(label) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate node label {label}"
                )));
            }
        }
        let index_of = |label: u64| -> Result<usize> {
            node_labels
                .iter()
                .position(|&l| l == label)
                .ok_or(Error::UnknownNode(label))
        };
        let mut arcs = Vec::with_capacity(arc_labels.len());
        for &(tail, head) in arc_labels {
            if tail == head {
                return Err(Error::InvalidNetwork(format!("self-loop at node {tail}")));
            }
            arcs.push(Arc {
                tail: index_of(tail)?,
                head: index_of(head)?,
            });
        }
        let mut net = Network {
            node_labels,
            arcs,
            out_arcs: Vec::new(),
            in_arcs: Vec::new(),
        };
        net.rebuild_adjacency();
        Ok(net)
    }

    pub(crate) fn rebuild_adjacency(&mut self) {
        let n = self.node_labels.len();
        let mut out_arcs = vec![Vec::new(); n];
        let mut in_arcs = vec![Vec::new(); n];
        for (id, arc) in self.arcs.iter().enumerate() {
            out_arcs[arc.tail].push(id);
            in_arcs[arc.head].push(id);
        }
        // adjacency in ascending arc-id order keeps every traversal deterministic
        self.out_arcs = out_arcs;
        self.in_arcs = in_arcs;
    }

    pub fn num_nodes(&self) -> usize {
        self.node_labels.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc(&self, id: usize) -> Arc {
        self.arcs[id]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn node_label(&self, index: usize) -> u64 {
        self.node_labels[index]
    }

    pub fn node_labels(&self) -> &[u64] {
        &self.node_labels
    }

    pub fn node_index(&self, label: u64) -> Result<usize> {
        self.node_labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::UnknownNode(label))
    }

    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.out_arcs[node]
    }

    pub fn incoming(&self, node: usize) -> &[usize] {
        &self.in_arcs[node]
    }

    /// Id of the opposite-direction arc (head->tail of `id`), if present.
    /// When several parallel reverse arcs exist the smallest id wins.
    pub fn reverse_arc(&self, id: usize) -> Option<usize> {
        let arc = self.arcs[id];
        self.out_arcs[arc.head]
            .iter()
            .copied()
            .find(|&r| self.arcs[r].head == arc.tail)
    }
}

/// One origin-destination pair with its fixed travel demand.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OdPair {
    /// Dense index of the origin node.
    pub origin: usize,
    /// Dense index of the destination node.
    pub dest: usize,
    /// Travel demand, in flow units. Always finite and positive.
    pub quantity: f64,
}

/// Validated list of OD pairs; index order defines the class index `w`.
#[derive(Debug, Clone)]
pub struct DemandTable {
    pairs: Vec<OdPair>,
}

impl DemandTable {
    pub fn new(net: &Network, entries: &[(u64, u64, f64)]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(entries.len());
        let mut seen = std::collections::HashSet::new();
        for &(origin, dest, q) in entries {
            if q <= 0.0 || !q.is_finite() {
                return Err(Error::NonpositiveDemand(q));
            }
            if origin == dest {
                return Err(Error::InvalidDemand(format!(
                    "origin equals destination ({origin})"
                )));
            }
            if !seen.insert((origin, dest)) {
                return Err(Error::InvalidDemand(format!(
                    "duplicate od pair {origin} -> {dest}"
                )));
            }
            pairs.push(OdPair {
                origin: net.node_index(origin)?,
                dest: net.node_index(dest)?,
                quantity: q,
            });
        }
        Ok(DemandTable { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, od: usize) -> OdPair {
        self.pairs[od]
    }

    pub fn pairs(&self) -> &[OdPair] {
        &self.pairs
    }

    pub fn total_demand(&self) -> f64 {
        self.pairs.iter().map(|p| p.quantity).sum()
    }

    /// Single-pair view used by per-class subproblems.
    pub(crate) fn single(&self, od: usize) -> DemandTable {
        DemandTable {
            pairs: vec![self.pairs[od]],
        }
    }

    pub(crate) fn scale(&self, factor: f64) -> DemandTable {
        let pairs = self
            .pairs
            .iter()
            .map(|p| OdPair {
                quantity: p.quantity * factor,
                ..*p
            })
            .collect();
        DemandTable { pairs }
    }

    /// Default per-node conservation tolerance: 1e-9 scaled by demand size.
    pub fn conservation_tol(&self, od: usize) -> f64 {
        1e-9 * self.pairs[od].quantity.max(1.0)
    }
}

/// Total flow per arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcFlow(pub Vec<f64>);

impl ArcFlow {
    pub fn zeros(num_arcs: usize) -> Self {
        ArcFlow(vec![0.0; num_arcs])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ArcFlow(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for ArcFlow {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-OD-class arc flows: a dense `(num_ods, num_arcs)` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFlow {
    num_arcs: usize,
    data: Vec<f64>,
}

impl ClassFlow {
    pub fn zeros(num_ods: usize, num_arcs: usize) -> Self {
        ClassFlow {
            num_arcs,
            data: vec![0.0; num_ods * num_arcs],
        }
    }

    pub fn num_ods(&self) -> usize {
        self.data.len().checked_div(self.num_arcs).unwrap_or(0)
    }

    pub fn num_arcs(&self) -> usize {
        self.num_arcs
    }

    pub fn get(&self, od: usize, arc: usize) -> f64 {
        self.data[od * self.num_arcs + arc]
    }

    pub fn set(&mut self, od: usize, arc: usize, value: f64) {
        self.data[od * self.num_arcs + arc] = value;
    }

    pub fn class(&self, od: usize) -> &[f64] {
        &self.data[od * self.num_arcs..(od + 1) * self.num_arcs]
    }

    pub fn class_mut(&mut self, od: usize) -> &mut [f64] {
        &mut self.data[od * self.num_arcs..(od + 1) * self.num_arcs]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ClassFlow {
            num_arcs: self.num_arcs,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Node-conservation residual of class `od` at `node` (net outflow minus
    /// the required +Q at the origin / -Q at the destination).
    pub fn conservation_residual(
        &self,
        net: &Network,
        demands: &DemandTable,
        od: usize,
        node: usize,
    ) -> f64 {
        let pair = demands.pair(od);
        let outflow: f64 = net.outgoing(node).iter().map(|&a| self.get(od, a)).sum();
        let inflow: f64 = net.incoming(node).iter().map(|&a| self.get(od, a)).sum();
        let required = if node == pair.origin {
            pair.quantity
        } else if node == pair.dest {
            -pair.quantity
        } else {
            0.0
        };
        outflow - inflow - required
    }

    /// Check membership in the class-flow feasible set within per-node tolerance.
    pub fn check_conservation(&self, net: &Network, demands: &DemandTable) -> Result<()> {
        for od in 0..demands.len() {
            let tol = demands.conservation_tol(od);
            for a in 0..self.num_arcs {
                let x = self.get(od, a);
                if x < -tol {
                    return Err(Error::ConservationViolated {
                        od,
                        node: net.arc(a).tail,
                        residual: x,
                    });
                }
            }
            for node in 0..net.num_nodes() {
                let r = self.conservation_residual(net, demands, od, node);
                if r.abs() > tol {
                    return Err(Error::ConservationViolated {
                        od,
                        node,
                        residual: r,
                    });
                }
            }
        }
        Ok(())
    }
}

/// One path with positive flow for an OD pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub od: usize,
    /// Arc ids in traversal order, head-to-tail contiguous.
    pub arcs: Vec<usize>,
    pub flow: f64,
}

/// Explicit path-flow representation of a traffic pattern.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathFlow {
    pub entries: Vec<PathEntry>,
}

impl PathFlow {
    pub fn scaled(&self, factor: f64) -> Self {
        PathFlow {
            entries: self
                .entries
                .iter()
                .map(|e| PathEntry {
                    flow: e.flow * factor,
                    ..e.clone()
                })
                .collect(),
        }
    }
}

/// Sum class flows into total arc flows. Summation runs in ascending class
/// order so results are bit-reproducible.
pub fn aggregate_to_arcflow(x: &ClassFlow) -> ArcFlow {
    let mut v = vec![0.0; x.num_arcs()];
    for od in 0..x.num_ods() {
        let row = x.class(od);
        for (va, xa) in v.iter_mut().zip(row) {
            *va += xa;
        }
    }
    ArcFlow(v)
}

/// Sum path flows directly into total arc flows (no conservation checks).
pub fn paths_to_arcflow(net: &Network, f: &PathFlow) -> ArcFlow {
    let mut v = ArcFlow::zeros(net.num_arcs());
    for entry in &f.entries {
        for &a in &entry.arcs {
            v.0[a] += entry.flow;
        }
    }
    v
}

/// Load path flows onto per-class arc flows.
pub fn paths_to_classflow(net: &Network, demands: &DemandTable, f: &PathFlow) -> Result<ClassFlow> {
    let mut x = ClassFlow::zeros(demands.len(), net.num_arcs());
    for entry in &f.entries {
        let pair = demands.pair(entry.od);
        let mut at = pair.origin;
        for (pos, &a) in entry.arcs.iter().enumerate() {
            let arc = net.arc(a);
            if arc.tail != at {
                return Err(Error::PathNotConnected {
                    od: entry.od,
                    position: pos,
                });
            }
            at = arc.head;
            x.set(entry.od, a, x.get(entry.od, a) + entry.flow);
        }
        if at != pair.dest {
            return Err(Error::PathNotConnected {
                od: entry.od,
                position: entry.arcs.len(),
            });
        }
    }
    Ok(x)
}

/// Result of a flow decomposition. Cycle flow trapped in the residual cannot
/// appear in equilibria with positive costs; it is stripped and flagged
/// rather than treated as an error, since converged solver output may carry
/// tiny residual cycles.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub paths: PathFlow,
    /// Total flow discarded on residual cycles, per class.
    pub cycle_flow: Vec<f64>,
    pub cyclic_residual: bool,
}

/// Decompose class flows into path flows by repeated extraction.
///
/// Among the minimum-hop origin-destination paths in the used subgraph
/// (`x > tol`), the lexicographically smallest arc-id sequence is extracted
/// first, so the output is deterministic.
pub fn decompose_to_paths(
    net: &Network,
    demands: &DemandTable,
    x: &ClassFlow,
    tol: f64,
) -> Result<Decomposition> {
    let mut paths = PathFlow::default();
    let mut cycle_flow = vec![0.0; demands.len()];
    let mut cyclic = false;
    for od in 0..demands.len() {
        let pair = demands.pair(od);
        let mut residual: Vec<f64> = x.class(od).to_vec();
        let mut remaining = pair.quantity;
        loop {
            let path = if remaining > tol {
                min_hop_lexicographic_path(net, &residual, tol, pair.origin, pair.dest)
            } else {
                None
            };
            match path {
                Some(path) => {
                    // capping at the remaining demand keeps the residual a
                    // circulation instead of leaking cycle flow into paths
                    let bottleneck = path
                        .iter()
                        .map(|&a| residual[a])
                        .fold(f64::INFINITY, f64::min);
                    let theta = bottleneck.min(remaining);
                    for &a in &path {
                        residual[a] = (residual[a] - theta).max(0.0);
                    }
                    remaining -= theta;
                    paths.entries.push(PathEntry {
                        od,
                        arcs: path,
                        flow: theta,
                    });
                }
                None => {
                    // anything left above tolerance must sit on cycles
                    let stripped = strip_cycles(net, &mut residual, tol);
                    if stripped > 0.0 {
                        cycle_flow[od] += stripped;
                        cyclic = true;
                        continue;
                    }
                    break;
                }
            }
        }
    }
    Ok(Decomposition {
        paths,
        cycle_flow,
        cyclic_residual: cyclic,
    })
}

/// Shortest-hop path from `origin` to `dest` using only arcs with residual
/// flow above `tol`; among those, the lexicographically smallest arc-id
/// sequence. `None` when no such path exists.
fn min_hop_lexicographic_path(
    net: &Network,
    residual: &[f64],
    tol: f64,
    origin: usize,
    dest: usize,
) -> Option<Vec<usize>> {
    // backward BFS gives hops-to-destination levels
    let mut hops = vec![usize::MAX; net.num_nodes()];
    hops[dest] = 0;
    let mut queue = std::collections::VecDeque::from([dest]);
    while let Some(node) = queue.pop_front() {
        for &a in net.incoming(node) {
            if residual[a] > tol {
                let tail = net.arc(a).tail;
                if hops[tail] == usize::MAX {
                    hops[tail] = hops[node] + 1;
                    queue.push_back(tail);
                }
            }
        }
    }
    if hops[origin] == usize::MAX {
        return None;
    }
    // walk forward greedily: smallest arc id that stays on a min-hop path
    let mut path = Vec::with_capacity(hops[origin]);
    let mut at = origin;
    while at != dest {
        let next =
            net.outgoing(at).iter().copied().find(|&a| {
                residual[a] > tol && hops[net.arc(a).head] == hops[at].wrapping_sub(1)
            })?;
        path.push(next);
        at = net.arc(next).head;
    }
    Some(path)
}

/// Random feasible class flow: each OD's demand spread over a few random
/// simple paths with random convex weights. `None` when some OD has no path.
pub(crate) fn random_class_flow<R: rand::Rng>(
    net: &Network,
    demands: &DemandTable,
    rng: &mut R,
) -> Option<ClassFlow> {
    let mut x = ClassFlow::zeros(demands.len(), net.num_arcs());
    for od in 0..demands.len() {
        let pair = demands.pair(od);
        let mut paths = Vec::new();
        for _ in 0..6 {
            if let Some(p) = random_simple_path(net, pair.origin, pair.dest, rng) {
                if !paths.contains(&p) {
                    paths.push(p);
                }
            }
            if paths.len() == 3 {
                break;
            }
        }
        if paths.is_empty() {
            return None;
        }
        let mut weights: Vec<f64> = paths.iter().map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w *= pair.quantity / total;
        }
        for (p, w) in paths.iter().zip(&weights) {
            for &a in p {
                x.set(od, a, x.get(od, a) + w);
            }
        }
    }
    Some(x)
}

/// Randomized depth-first search for one simple path, with backtracking.
fn random_simple_path<R: rand::Rng>(
    net: &Network,
    origin: usize,
    dest: usize,
    rng: &mut R,
) -> Option<Vec<usize>> {
    if origin == dest {
        return Some(Vec::new());
    }
    let mut visited = vec![false; net.num_nodes()];
    visited[origin] = true;
    fn shuffled<R: rand::Rng>(net: &Network, node: usize, rng: &mut R) -> Vec<usize> {
        let mut arcs: Vec<usize> = net.outgoing(node).to_vec();
        for i in (1..arcs.len()).rev() {
            let j = rng.random_range(0..=i);
            arcs.swap(i, j);
        }
        arcs
    }
    let mut stack: Vec<(Vec<usize>, usize)> = vec![(shuffled(net, origin, rng), 0)];
    let mut path: Vec<usize> = Vec::new();
    while let Some(level) = stack.last_mut() {
        if let Some(&arc) = level.0.get(level.1) {
            level.1 += 1;
            let head = net.arc(arc).head;
            if visited[head] {
                continue;
            }
            path.push(arc);
            if head == dest {
                return Some(path);
            }
            visited[head] = true;
            stack.push((shuffled(net, head, rng), 0));
        } else {
            stack.pop();
            if let Some(arc) = path.pop() {
                visited[net.arc(arc).head] = false;
            }
        }
    }
    None
}

/// Remove one flow-carrying cycle from the residual, returning the flow stripped.
fn strip_cycles(net: &Network, residual: &mut [f64], tol: f64) -> f64 {
    // walk along used arcs from each candidate start until a node repeats
    let starts: Vec<usize> = (0..residual.len()).filter(|&a| residual[a] > tol).collect();
    'starts: for &start_arc in &starts {
        let mut visited_at = vec![usize::MAX; net.num_nodes()];
        let mut walk: Vec<usize> = Vec::new();
        let mut at = net.arc(start_arc).tail;
        loop {
            if visited_at[at] != usize::MAX {
                let cycle = &walk[visited_at[at]..];
                let theta = cycle
                    .iter()
                    .map(|&a| residual[a])
                    .fold(f64::INFINITY, f64::min);
                for &a in cycle {
                    residual[a] = (residual[a] - theta).max(0.0);
                }
                return theta;
            }
            visited_at[at] = walk.len();
            let next = net
                .outgoing(at)
                .iter()
                .copied()
                .find(|&a| residual[a] > tol);
            match next {
                Some(a) => {
                    walk.push(a);
                    at = net.arc(a).head;
                }
                // dead-ended walk: try the next start
                None => continue 'starts,
            }
        }
    }
    0.0
}
