//! Sufficient side-conditions under which a satisficing flow's total travel
//! time is dominated by the demand-scaled equilibrium's.
//!
//! Both checks compare a flow on the original demands against a flow on
//! demands scaled by `1+kappa`, over the union of their path sets. They are
//! reported diagnostics, never gates: the scaling bound can hold while the
//! condition fails. Values depend on the path decompositions supplied;
//! callers using arc flows should pass the canonical decomposition and treat
//! the result accordingly.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::Instance;
use crate::net::{paths_to_arcflow, PathFlow};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub holds: bool,
    /// Paired cost-difference inner product over the union of paths.
    pub lhs: f64,
    /// Threshold side the inner product must dominate.
    pub rhs: f64,
}

/// Separable-cost condition: the cost-difference inner product between the
/// scaled equilibrium flow and the satisficing flow must dominate
/// `kappa * sum_p c_p(satisficing) |delta_p|`.
pub fn check_scaling_condition_separable(
    inst: &Instance,
    scaled_equilibrium: &PathFlow,
    satisficing: &PathFlow,
    kappa: f64,
) -> Result<ConditionReport> {
    let rows = union_rows(inst, scaled_equilibrium, satisficing)?;
    let lhs: f64 = rows
        .iter()
        .map(|r| (r.cost_scaled - r.cost_plain) * (r.flow_scaled - r.flow_plain))
        .sum();
    let rhs: f64 = kappa
        * rows
            .iter()
            .map(|r| r.cost_plain * (r.flow_scaled - r.flow_plain).abs())
            .sum::<f64>();
    Ok(report(lhs, rhs))
}

/// General (asymmetric) condition: the comparison flow is a satisficing flow
/// at level `sigma = (1+kappa)^n - 1` on the scaled demands, the weight is
/// the larger of the two path costs, and the factor is `sigma`.
pub fn check_scaling_condition_general(
    inst: &Instance,
    scaled_satisficing: &PathFlow,
    satisficing: &PathFlow,
    kappa: f64,
) -> Result<ConditionReport> {
    let sigma = crate::cost::ipow(1.0 + kappa, inst.cost.degree()) - 1.0;
    let rows = union_rows(inst, scaled_satisficing, satisficing)?;
    let lhs: f64 = rows
        .iter()
        .map(|r| (r.cost_scaled - r.cost_plain) * (r.flow_scaled - r.flow_plain))
        .sum();
    let rhs: f64 = sigma
        * rows
            .iter()
            .map(|r| r.cost_scaled.max(r.cost_plain) * (r.flow_scaled - r.flow_plain).abs())
            .sum::<f64>();
    Ok(report(lhs, rhs))
}

fn report(lhs: f64, rhs: f64) -> ConditionReport {
    ConditionReport {
        holds: lhs >= rhs - 1e-12 * (1.0 + lhs.abs() + rhs.abs()),
        lhs,
        rhs,
    }
}

struct PathRow {
    flow_scaled: f64,
    flow_plain: f64,
    cost_scaled: f64,
    cost_plain: f64,
}

/// Merge two path flows over the union of their (od, path) keys; paths absent
/// from one flow enter with zero flow. Rows come out in sorted key order so
/// the floating-point sums are reproducible.
fn union_rows(inst: &Instance, scaled: &PathFlow, plain: &PathFlow) -> Result<Vec<PathRow>> {
    let v_scaled = paths_to_arcflow(&inst.network, scaled);
    let v_plain = paths_to_arcflow(&inst.network, plain);
    let t_scaled = inst.cost.arc_times(&v_scaled);
    let t_plain = inst.cost.arc_times(&v_plain);
    let mut merged: std::collections::BTreeMap<(usize, Vec<usize>), (f64, f64)> =
        std::collections::BTreeMap::new();
    for e in &scaled.entries {
        merged.entry((e.od, e.arcs.clone())).or_insert((0.0, 0.0)).0 += e.flow;
    }
    for e in &plain.entries {
        merged.entry((e.od, e.arcs.clone())).or_insert((0.0, 0.0)).1 += e.flow;
    }
    Ok(merged
        .into_iter()
        .map(|((_, arcs), (flow_scaled, flow_plain))| PathRow {
            flow_scaled,
            flow_plain,
            cost_scaled: arcs.iter().map(|&a| t_scaled[a]).sum(),
            cost_plain: arcs.iter().map(|&a| t_plain[a]).sum(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_example1, gen_example2};
    use crate::net::PathEntry;

    fn example1_flows(q: f64, kappa: f64) -> (PathFlow, PathFlow) {
        let scaled = PathFlow {
            entries: vec![PathEntry {
                od: 0,
                arcs: vec![0],
                flow: (1.0 + kappa) * q,
            }],
        };
        let plain = PathFlow {
            entries: vec![
                PathEntry {
                    od: 0,
                    arcs: vec![0],
                    flow: q - kappa,
                },
                PathEntry {
                    od: 0,
                    arcs: vec![1],
                    flow: kappa,
                },
            ],
        };
        (scaled, plain)
    }

    fn example2_flows(q: f64, kappa: f64) -> (PathFlow, PathFlow) {
        let scaled = PathFlow {
            entries: vec![
                PathEntry {
                    od: 0,
                    arcs: vec![0],
                    flow: (1.0 + kappa) * q / 2.0,
                },
                PathEntry {
                    od: 0,
                    arcs: vec![1],
                    flow: (1.0 + kappa) * q / 2.0,
                },
            ],
        };
        let plain = PathFlow {
            entries: vec![
                PathEntry {
                    od: 0,
                    arcs: vec![0],
                    flow: q / (2.0 + kappa),
                },
                PathEntry {
                    od: 0,
                    arcs: vec![1],
                    flow: (1.0 + kappa) * q / (2.0 + kappa),
                },
            ],
        };
        (scaled, plain)
    }

    #[test]
    fn identical_flows_hold_trivially() {
        let inst = gen_example2(1.0).unwrap();
        let (_, plain) = example2_flows(1.0, 0.0);
        let rep = check_scaling_condition_separable(&inst, &plain, &plain, 0.0).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
        let rep = check_scaling_condition_general(&inst, &plain, &plain, 0.0).unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn example1_never_satisfies_the_separable_condition() {
        let q = 1.0;
        let inst = gen_example1(q).unwrap();
        for kappa in [0.1, 0.5, 0.9] {
            let (scaled, plain) = example1_flows(q, kappa);
            let rep = check_scaling_condition_separable(&inst, &scaled, &plain, kappa).unwrap();
            assert!(!rep.holds, "kappa {kappa}: {rep:?}");
            // closed forms: lhs = kappa^2, rhs = kappa^2 (q + 2 + kappa)
            assert!((rep.lhs - kappa * kappa).abs() < 1e-12);
            assert!((rep.rhs - kappa * kappa * (q + 2.0 + kappa)).abs() < 1e-12);
        }
    }

    #[test]
    fn example2_separable_condition_holds() {
        let inst = gen_example2(1.0).unwrap();
        let (scaled, plain) = example2_flows(1.0, 0.1);
        let rep = check_scaling_condition_separable(&inst, &scaled, &plain, 0.1).unwrap();
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn example2_general_condition_boundary() {
        let inst = gen_example2(1.0).unwrap();
        // holds up to roughly 0.206, fails beyond
        let (scaled, plain) = example2_flows(1.0, 0.2);
        let rep = check_scaling_condition_general(&inst, &scaled, &plain, 0.2).unwrap();
        assert!(rep.holds, "{rep:?}");
        let (scaled, plain) = example2_flows(1.0, 0.3);
        let rep = check_scaling_condition_general(&inst, &scaled, &plain, 0.3).unwrap();
        assert!(!rep.holds, "{rep:?}");
    }
}
