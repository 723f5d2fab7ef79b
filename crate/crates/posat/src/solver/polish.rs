//! Path-equalization polishing: drives the equilibrium gap to tolerances the
//! vertex-direction iteration cannot reach (its gap plateaus around 1e-7 on
//! multi-route instances). Flow is shifted between each OD's costliest used
//! path and its cheapest known path with an exact bisection, until every used
//! path's price is minimal.

use crate::error::{Error, Result};
use crate::net::{decompose_to_paths, ArcFlow, ClassFlow, DemandTable, Network};
use crate::solver::frank_wolfe::FwOutcome;
use crate::solver::model::ArcModel;
use crate::solver::SolverOptions;
use crate::sp::shortest_paths;

struct PathSet {
    arcs: Vec<Vec<usize>>,
    flow: Vec<f64>,
}

pub(crate) fn path_equilibrate(
    net: &Network,
    demands: &DemandTable,
    model: &impl ArcModel,
    x: ClassFlow,
    opts: SolverOptions,
    max_passes: usize,
) -> Result<FwOutcome> {
    let decomposition = decompose_to_paths(net, demands, &x, 1e-14)?;
    let mut sets: Vec<PathSet> = (0..demands.len())
        .map(|_| PathSet {
            arcs: Vec::new(),
            flow: Vec::new(),
        })
        .collect();
    for entry in decomposition.paths.entries {
        sets[entry.od].arcs.push(entry.arcs);
        sets[entry.od].flow.push(entry.flow);
    }

    let num_arcs = net.num_arcs();
    let mut v = rebuild_arcflow(&sets, num_arcs);
    let mut prices = vec![0.0; num_arcs];
    let mut od_costs = vec![0.0; demands.len()];
    let mut relative_gap = f64::INFINITY;
    let mut converged = false;
    let mut passes = 0;

    for pass in 1..=max_passes {
        passes = pass;
        for (a, p) in prices.iter_mut().enumerate() {
            *p = model.price(a, v[a]);
        }
        // convergence measure plus each OD's current cheapest route
        let mut value = 0.0;
        let mut lower = 0.0;
        let mut shortest: Vec<Vec<usize>> = Vec::with_capacity(demands.len());
        for od in 0..demands.len() {
            let pair = demands.pair(od);
            let tree = shortest_paths(net, &prices, pair.origin)?;
            if !tree.dist[pair.dest].is_finite() {
                return Err(Error::DisconnectedOd {
                    od,
                    origin: net.node_label(pair.origin),
                    dest: net.node_label(pair.dest),
                });
            }
            od_costs[od] = tree.dist[pair.dest];
            lower += pair.quantity * tree.dist[pair.dest];
            let mut path = Vec::new();
            let mut at = pair.dest;
            while let Some(a) = tree.pred[at] {
                path.push(a);
                at = net.arc(a).tail;
            }
            path.reverse();
            shortest.push(path);
        }
        value += prices.iter().zip(&v.0).map(|(p, va)| p * va).sum::<f64>();
        relative_gap = if value > 0.0 {
            (value - lower) / value
        } else {
            0.0
        };
        if relative_gap <= opts.tol {
            converged = true;
            break;
        }

        for od in 0..demands.len() {
            let set = &mut sets[od];
            let candidate = &shortest[od];
            if !set.arcs.iter().any(|p| p == candidate) {
                set.arcs.push(candidate.clone());
                set.flow.push(0.0);
            }
            equalize_od(model, set, &mut v);
        }
        v = rebuild_arcflow(&sets, num_arcs);
    }

    let mut x = ClassFlow::zeros(demands.len(), num_arcs);
    for (od, set) in sets.iter().enumerate() {
        for (path, &flow) in set.arcs.iter().zip(&set.flow) {
            for &a in path {
                x.set(od, a, x.get(od, a) + flow);
            }
        }
    }
    let v = crate::net::aggregate_to_arcflow(&x);
    Ok(FwOutcome {
        x,
        v,
        relative_gap,
        iterations: passes,
        converged,
        od_costs,
    })
}

fn rebuild_arcflow(sets: &[PathSet], num_arcs: usize) -> ArcFlow {
    let mut v = ArcFlow::zeros(num_arcs);
    for set in sets {
        for (path, &flow) in set.arcs.iter().zip(&set.flow) {
            for &a in path {
                v.0[a] += flow;
            }
        }
    }
    v
}

/// Repeatedly move flow from the OD's costliest loaded path to its cheapest
/// path until they agree to near machine precision.
fn equalize_od(model: &impl ArcModel, set: &mut PathSet, v: &mut ArcFlow) {
    for _ in 0..200 {
        let cost = |path: &[usize]| -> f64 { path.iter().map(|&a| model.price(a, v[a])).sum() };
        let mut max_i = usize::MAX;
        let mut max_c = f64::NEG_INFINITY;
        let mut min_i = usize::MAX;
        let mut min_c = f64::INFINITY;
        for (i, path) in set.arcs.iter().enumerate() {
            let c = cost(path);
            if set.flow[i] > 0.0 && c > max_c {
                max_c = c;
                max_i = i;
            }
            if c < min_c {
                min_c = c;
                min_i = i;
            }
        }
        if max_i == usize::MAX || max_i == min_i || max_c <= min_c * (1.0 + 1e-15) + 1e-300 {
            return;
        }
        // exclusive arcs: shared ones cancel out of the cost difference
        let donor = &set.arcs[max_i];
        let taker = &set.arcs[min_i];
        let ex_donor: Vec<usize> = donor
            .iter()
            .copied()
            .filter(|a| !taker.contains(a))
            .collect();
        let ex_taker: Vec<usize> = taker
            .iter()
            .copied()
            .filter(|a| !donor.contains(a))
            .collect();
        if ex_donor.is_empty() && ex_taker.is_empty() {
            return;
        }
        let h = |delta: f64| -> f64 {
            let from: f64 = ex_donor
                .iter()
                .map(|&a| model.price(a, (v[a] - delta).max(0.0)))
                .sum();
            let to: f64 = ex_taker.iter().map(|&a| model.price(a, v[a] + delta)).sum();
            from - to
        };
        let full = set.flow[max_i];
        let delta = if h(full) >= 0.0 {
            full
        } else {
            let (mut lo, mut hi) = (0.0_f64, full);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let hm = h(mid);
                if hm.abs() <= 1e-15 * (1.0 + max_c.abs()) || hi - lo <= 1e-18 * full {
                    break;
                }
                if hm > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if delta <= 0.0 {
            return;
        }
        for &a in &ex_donor {
            v.0[a] = (v.0[a] - delta).max(0.0);
        }
        for &a in &ex_taker {
            v.0[a] += delta;
        }
        set.flow[max_i] -= delta;
        set.flow[min_i] += delta;
        if set.flow[max_i] <= 0.0 {
            set.flow[max_i] = 0.0;
        }
    }
}
