//! Stationarity / complementarity / conservation certificate for
//! perception-error equilibria.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::Instance;
use crate::net::{aggregate_to_arcflow, ClassFlow};
use crate::solver::LambdaField;
use crate::sp::shortest_paths;

/// Residuals of the equilibrium optimality system at a candidate flow. The
/// node potentials are the perceived shortest-path distances per class, so
/// stationarity can only be violated by numerical noise; complementarity is
/// the informative residual: flow sitting on perceived-non-shortest arcs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KktReport {
    /// max over (class, arc) of `max(0, -(lambda t_a + pi_i - pi_j))`.
    pub stationarity: f64,
    /// max over (class, arc) of `|x_a^w (lambda t_a + pi_i - pi_j)|`.
    pub complementarity: f64,
    /// max over (class, node) of the conservation residual.
    pub conservation: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn kkt_certificate(
    inst: &Instance,
    lambda: &LambdaField,
    x: &ClassFlow,
    tol: f64,
) -> Result<KktReport> {
    let net = &inst.network;
    let demands = &inst.demands;
    if lambda.num_ods() != demands.len()
        || lambda.num_arcs() != net.num_arcs()
        || x.num_ods() != demands.len()
        || x.num_arcs() != net.num_arcs()
    {
        return Err(crate::error::Error::InvalidArgument(
            "flow or perception field does not match the instance".into(),
        ));
    }
    let v = aggregate_to_arcflow(x);
    let t = inst.cost.arc_times(&v);
    let mut stationarity = 0.0_f64;
    let mut complementarity = 0.0_f64;
    let mut conservation = 0.0_f64;
    let mut perceived = vec![0.0; net.num_arcs()];

    for od in 0..demands.len() {
        let pair = demands.pair(od);
        for ((p, ta), la) in perceived.iter_mut().zip(&t).zip(lambda.class(od)) {
            *p = ta * la;
        }
        let tree = shortest_paths(net, &perceived, pair.origin)?;
        for a in 0..net.num_arcs() {
            let arc = net.arc(a);
            let (pi_i, pi_j) = (tree.dist[arc.tail], tree.dist[arc.head]);
            let flow = x.get(od, a);
            if !pi_i.is_finite() || !pi_j.is_finite() {
                // arcs beyond the reachable part carry no admissible flow
                if flow.abs() > tol {
                    complementarity = f64::INFINITY;
                }
                continue;
            }
            let reduced = perceived[a] + pi_i - pi_j;
            stationarity = stationarity.max(-reduced);
            complementarity = complementarity.max((flow * reduced).abs());
        }
        for node in 0..net.num_nodes() {
            conservation = conservation.max(x.conservation_residual(net, demands, od, node).abs());
        }
    }
    stationarity = stationarity.max(0.0);
    let pass = stationarity <= tol && complementarity <= tol && conservation <= tol;
    Ok(KktReport {
        stationarity,
        complementarity,
        conservation,
        tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_circular, gen_example2, CircularRatio};
    use crate::solver::{solve_prue, SolverOptions};

    #[test]
    fn exact_equilibrium_passes() {
        let inst = gen_example2(1.0).unwrap();
        let report = solve_prue(&inst, SolverOptions::frank_wolfe().with_tol(1e-12)).unwrap();
        let lambda = LambdaField::all_ones(0.0, 1, 2).unwrap();
        let kkt = kkt_certificate(&inst, &lambda, &report.x, 1e-9).unwrap();
        assert!(kkt.pass, "{kkt:?}");
    }

    #[test]
    fn circular_clockwise_with_pattern_passes() {
        let inst = gen_circular(1.0, 4, CircularRatio::RatioIsKappa).unwrap();
        let meta = inst.meta.as_ref().unwrap().circular.unwrap();
        let lambda = LambdaField::new(
            meta.kappa,
            inst.num_ods(),
            inst.num_arcs(),
            meta.clockwise_lambda(&inst),
        )
        .unwrap();
        let kkt = kkt_certificate(&inst, &lambda, &meta.clockwise_flow(&inst), 1e-8).unwrap();
        assert!(kkt.pass, "{kkt:?}");
    }

    #[test]
    fn perturbed_flow_fails_complementarity() {
        let inst = gen_example2(1.0).unwrap();
        let report = solve_prue(&inst, SolverOptions::frank_wolfe().with_tol(1e-12)).unwrap();
        let mut x = report.x.clone();
        let shift = 0.01 * inst.demands.pair(0).quantity;
        x.set(0, 0, x.get(0, 0) - shift);
        x.set(0, 1, x.get(0, 1) + shift);
        let lambda = LambdaField::all_ones(0.0, 1, 2).unwrap();
        let kkt = kkt_certificate(&inst, &lambda, &x, 1e-8).unwrap();
        assert!(!kkt.pass);
        assert!(kkt.complementarity > 1e-8);
        assert!(kkt.conservation <= 1e-12);
    }
}
