//! Random instance generation for property tests and diagnostics. Not part
//! of the supported API surface.

use rand::Rng;

use crate::cost::{CostTerm, PolynomialCost};
use crate::instance::{make_asymmetric_variant, Instance};
use crate::net::{ClassFlow, DemandTable, Network};

/// Random connected separable instance: at most `max_nodes` nodes (chain
/// backbone plus random extra arcs, at most 10 arcs total), degree in
/// `1..=4`, one to three OD pairs routed along the chain direction.
pub fn random_separable_instance<R: Rng>(rng: &mut R, max_nodes: usize) -> Instance {
    let n = rng.random_range(2..=max_nodes.max(2));
    let labels: Vec<u64> = (1..=n as u64).collect();
    let mut ends: Vec<(u64, u64)> = (1..n as u64).map(|i| (i, i + 1)).collect();
    let extra = rng.random_range(0..=(10 - ends.len()).min(5));
    for _ in 0..extra {
        let tail = rng.random_range(1..=n as u64);
        let head = rng.random_range(1..=n as u64);
        if tail != head {
            ends.push((tail, head));
        }
    }
    let network = Network::new(labels, &ends).unwrap();

    let degree = rng.random_range(1..=4u32);
    let terms = (0..network.num_arcs())
        .map(|a| {
            let mut t = vec![CostTerm::separable(a, 0, rng.random_range(0.05..1.0))];
            for m in 1..=degree {
                if rng.random_range(0.0..1.0) < 0.7 {
                    t.push(CostTerm::separable(a, m, rng.random_range(0.0..1.0)));
                }
            }
            t
        })
        .collect();
    let cost = PolynomialCost::new(terms, degree).unwrap();

    let num_ods = rng.random_range(1..=3usize);
    let mut entries: Vec<(u64, u64, f64)> = Vec::new();
    for _ in 0..num_ods {
        let origin = rng.random_range(1..n as u64);
        let dest = rng.random_range(origin + 1..=n as u64);
        if entries.iter().any(|&(o, d, _)| o == origin && d == dest) {
            continue;
        }
        entries.push((origin, dest, rng.random_range(0.5..3.0)));
    }
    let demands = DemandTable::new(&network, &entries).unwrap();
    Instance::new(network, demands, cost).unwrap()
}

/// Random connected instance with pure monomial costs `b v^n`, a single
/// degree shared by every arc.
pub fn random_monomial_instance<R: Rng>(rng: &mut R, max_nodes: usize) -> Instance {
    let n = rng.random_range(2..=max_nodes.max(2));
    let labels: Vec<u64> = (1..=n as u64).collect();
    let mut ends: Vec<(u64, u64)> = (1..n as u64).map(|i| (i, i + 1)).collect();
    for _ in 0..rng.random_range(0..=4usize) {
        let tail = rng.random_range(1..=n as u64);
        let head = rng.random_range(1..=n as u64);
        if tail != head {
            ends.push((tail, head));
        }
    }
    let network = Network::new(labels, &ends).unwrap();
    let degree = rng.random_range(1..=4u32);
    let terms = (0..network.num_arcs())
        .map(|a| vec![CostTerm::separable(a, degree, rng.random_range(0.1..1.0))])
        .collect();
    let cost = PolynomialCost::new(terms, degree).unwrap();
    let origin = rng.random_range(1..n as u64);
    let dest = rng.random_range(origin + 1..=n as u64);
    let demands =
        DemandTable::new(&network, &[(origin, dest, rng.random_range(0.5..2.0))]).unwrap();
    Instance::new(network, demands, cost).unwrap()
}

/// Random bidirectional-chain instance with opposite-arc cost coupling.
pub fn random_asymmetric_instance<R: Rng>(rng: &mut R, max_nodes: usize) -> Instance {
    let n = rng.random_range(2..=max_nodes.max(2)).min(5);
    let labels: Vec<u64> = (1..=n as u64).collect();
    let mut ends = Vec::new();
    for i in 1..n as u64 {
        ends.push((i, i + 1));
        ends.push((i + 1, i));
    }
    let network = Network::new(labels, &ends).unwrap();
    let degree = rng.random_range(1..=4u32);
    let terms = (0..network.num_arcs())
        .map(|a| {
            vec![
                CostTerm::separable(a, 0, rng.random_range(0.05..1.0)),
                CostTerm::separable(a, degree, rng.random_range(0.05..1.0)),
            ]
        })
        .collect();
    let cost = PolynomialCost::new(terms, degree).unwrap();
    let num_ods = rng.random_range(1..=2usize);
    let mut entries: Vec<(u64, u64, f64)> = Vec::new();
    for _ in 0..num_ods {
        let origin = rng.random_range(1..=n as u64);
        let dest = rng.random_range(1..=n as u64);
        if origin == dest || entries.iter().any(|&(o, d, _)| o == origin && d == dest) {
            continue;
        }
        entries.push((origin, dest, rng.random_range(0.5..2.0)));
    }
    if entries.is_empty() {
        entries.push((1, n as u64, 1.0));
    }
    let demands = DemandTable::new(&network, &entries).unwrap();
    let base = Instance::new(network, demands, cost).unwrap();
    make_asymmetric_variant(&base, rng.random_range(0.1..0.5))
        .unwrap()
        .instance
}

/// Random two-parallel-arc instance with monomial-plus-constant costs.
pub fn random_two_arc_instance<R: Rng>(rng: &mut R) -> Instance {
    let network = Network::new(vec![1, 2], &[(1, 2), (1, 2)]).unwrap();
    let degree = rng.random_range(1..=4u32);
    let terms = (0..2usize)
        .map(|a| {
            let mut t = vec![CostTerm::separable(a, 0, rng.random_range(0.5..2.0))];
            if rng.random_range(0.0..1.0) < 0.75 {
                t.push(CostTerm::separable(a, degree, rng.random_range(0.1..2.0)));
            }
            t
        })
        .collect();
    let cost = PolynomialCost::new(terms, degree).unwrap();
    let q = rng.random_range(0.5..2.0);
    let demands = DemandTable::new(&network, &[(1, 2, q)]).unwrap();
    Instance::new(network, demands, cost).unwrap()
}

/// Random feasible class flow (a few random simple paths per OD).
pub fn random_class_flow<R: Rng>(inst: &Instance, rng: &mut R) -> Option<ClassFlow> {
    crate::net::random_class_flow(&inst.network, &inst.demands, rng)
}
