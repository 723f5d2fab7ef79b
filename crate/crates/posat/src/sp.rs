//! One-to-all shortest paths and all-or-nothing loading.

use crate::error::{Error, Result};
use crate::net::{ClassFlow, DemandTable, Network};

/// Shortest distances from one origin, with a deterministic predecessor tree.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    /// Distance per node; unreachable nodes hold `f64::INFINITY`.
    pub dist: Vec<f64>,
    /// Predecessor arc per node (`None` at the origin and unreachable nodes).
    pub pred: Vec<Option<usize>>,
}

/// Label-correcting shortest paths with a deque (SLF order).
///
/// Arc times must be nonnegative. Ties are broken deterministically: among
/// all tight predecessor arcs the tree uses the fewest hops from the origin,
/// then the smallest arc id. The hop layering keeps the tree acyclic even
/// when zero-cost cycles are present.
pub fn shortest_paths(net: &Network, times: &[f64], origin: usize) -> Result<ShortestPaths> {
    for (arc, &t) in times.iter().enumerate() {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeArcTime { arc, time: t });
        }
    }
    let n = net.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut in_queue = vec![false; n];
    dist[origin] = 0.0;
    let mut queue = std::collections::VecDeque::with_capacity(n);
    queue.push_back(origin);
    in_queue[origin] = true;
    while let Some(node) = queue.pop_front() {
        in_queue[node] = false;
        let base = dist[node];
        for &a in net.outgoing(node) {
            let head = net.arc(a).head;
            let cand = base + times[a];
            if cand < dist[head] {
                dist[head] = cand;
                if !in_queue[head] {
                    // SLF: promising labels jump the queue
                    if queue.front().is_some_and(|&f| cand < dist[f]) {
                        queue.push_front(head);
                    } else {
                        queue.push_back(head);
                    }
                    in_queue[head] = true;
                }
            }
        }
    }

    // tight arcs: dist[tail] + t == dist[head] within rounding
    let tight = |a: usize| -> bool {
        let arc = net.arc(a);
        dist[arc.tail].is_finite()
            && dist[arc.tail] + times[a] <= dist[arc.head] + 1e-12 * (1.0 + dist[arc.head].abs())
    };
    // hop layering over tight arcs from the origin
    let mut hops = vec![usize::MAX; n];
    hops[origin] = 0;
    let mut bfs = std::collections::VecDeque::from([origin]);
    while let Some(node) = bfs.pop_front() {
        for &a in net.outgoing(node) {
            let head = net.arc(a).head;
            if hops[head] == usize::MAX && tight(a) {
                hops[head] = hops[node] + 1;
                bfs.push_back(head);
            }
        }
    }
    let mut pred = vec![None; n];
    for node in 0..n {
        if node == origin || !dist[node].is_finite() {
            continue;
        }
        pred[node] = net
            .incoming(node)
            .iter()
            .copied()
            .find(|&a| tight(a) && hops[net.arc(a).tail] == hops[node].wrapping_sub(1));
    }
    Ok(ShortestPaths { dist, pred })
}

/// All-or-nothing loading plus the per-OD shortest-path costs it used.
#[derive(Debug, Clone)]
pub struct Loading {
    pub flow: ClassFlow,
    pub od_costs: Vec<f64>,
}

/// Load each OD's full demand on one shortest path at the given arc times.
pub fn all_or_nothing(net: &Network, demands: &DemandTable, times: &[f64]) -> Result<Loading> {
    let mut flow = ClassFlow::zeros(demands.len(), net.num_arcs());
    let mut od_costs = vec![0.0; demands.len()];
    let mut trees: std::collections::HashMap<usize, ShortestPaths> =
        std::collections::HashMap::new();
    for od in 0..demands.len() {
        let pair = demands.pair(od);
        if let std::collections::hash_map::Entry::Vacant(slot) = trees.entry(pair.origin) {
            slot.insert(shortest_paths(net, times, pair.origin)?);
        }
        let tree = &trees[&pair.origin];
        load_od(net, tree, od, pair.dest, pair.quantity, &mut flow)?;
        od_costs[od] = tree.dist[pair.dest];
    }
    Ok(Loading { flow, od_costs })
}

/// Walk the predecessor tree from `dest` back to the origin, adding `q` to
/// class `od` on every arc.
pub(crate) fn load_od(
    net: &Network,
    tree: &ShortestPaths,
    od: usize,
    dest: usize,
    q: f64,
    flow: &mut ClassFlow,
) -> Result<()> {
    if !tree.dist[dest].is_finite() {
        let origin = tree.dist.iter().position(|&d| d == 0.0).unwrap_or(0);
        return Err(Error::DisconnectedOd {
            od,
            origin: net.node_label(origin),
            dest: net.node_label(dest),
        });
    }
    let mut at = dest;
    while let Some(a) = tree.pred[at] {
        flow.set(od, a, flow.get(od, a) + q);
        at = net.arc(a).tail;
    }
    Ok(())
}
