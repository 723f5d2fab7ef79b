//! Frank-Wolfe with exact line search over separable arc models.

use crate::error::Result;
use crate::instance::Instance;
use crate::net::{aggregate_to_arcflow, ArcFlow, ClassFlow, DemandTable, Network};
use crate::solver::model::{ArcModel, SystemObjective, UePotential};
use crate::solver::{EquilibriumReport, SolverOptions};
use crate::sp::all_or_nothing;

pub(crate) struct FwOutcome {
    // fields shared with the polish phase
    pub x: ClassFlow,
    pub v: ArcFlow,
    pub relative_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub od_costs: Vec<f64>,
}

/// Core iteration: all-or-nothing direction at current prices, exact
/// bisection line search on the directional derivative, convex combination
/// update of the class flows.
pub(crate) fn frank_wolfe_engine(
    net: &Network,
    demands: &DemandTable,
    model: &impl ArcModel,
    warm: Option<(ClassFlow, ArcFlow)>,
    opts: SolverOptions,
) -> Result<FwOutcome> {
    let num_arcs = net.num_arcs();
    let mut prices = vec![0.0; num_arcs];
    let (mut x, mut v) = match warm {
        Some(pair) => pair,
        None => {
            for (a, p) in prices.iter_mut().enumerate() {
                *p = model.price(a, 0.0);
            }
            let loading = all_or_nothing(net, demands, &prices)?;
            let v = aggregate_to_arcflow(&loading.flow);
            (loading.flow, v)
        }
    };

    let mut relative_gap = f64::INFINITY;
    let mut od_costs = vec![0.0; demands.len()];
    let mut converged = false;
    let mut iterations = 0;
    let mut stalled = false;
    let mut gap_window = f64::INFINITY;
    #[cfg(debug_assertions)]
    let mut last_objective = f64::INFINITY;

    for iter in 1..=opts.max_iters {
        iterations = iter;
        for (a, p) in prices.iter_mut().enumerate() {
            *p = model.price(a, v[a]);
        }
        let loading = all_or_nothing(net, demands, &prices)?;
        od_costs.copy_from_slice(&loading.od_costs);
        let value: f64 = prices.iter().zip(&v.0).map(|(p, va)| p * va).sum();
        let lower: f64 = demands
            .pairs()
            .iter()
            .zip(&loading.od_costs)
            .map(|(p, mu)| p.quantity * mu)
            .sum();
        let gap_abs = value - lower;
        relative_gap = if value > 0.0 { gap_abs / value } else { 0.0 };
        // duality of the loading subproblem: nonnegative up to rounding
        debug_assert!(relative_gap >= -1e-12, "negative gap {relative_gap}");
        if relative_gap <= opts.tol {
            converged = true;
            break;
        }
        // the vertex-direction iteration zigzags once supports stabilize;
        // hand the tail over to path equalization
        if iter % 200 == 0 {
            if relative_gap > 0.5 * gap_window {
                stalled = true;
                break;
            }
            gap_window = relative_gap;
        }

        let y = aggregate_to_arcflow(&loading.flow);
        let direction: Vec<f64> = y.0.iter().zip(&v.0).map(|(ya, va)| ya - va).collect();
        let alpha = exact_line_search(model, &v, &direction, 1e-12 * value.max(1e-300));
        if alpha <= 0.0 {
            // no movement possible: accept the current point
            converged = relative_gap <= opts.tol;
            break;
        }
        for od in 0..demands.len() {
            let row = x.class_mut(od);
            let step = loading.flow.class(od);
            for (xa, ya) in row.iter_mut().zip(step) {
                *xa += alpha * (ya - *xa);
            }
        }
        if iter % 64 == 0 {
            // kill accumulated drift between x and v
            v = aggregate_to_arcflow(&x);
        } else {
            for (va, da) in v.0.iter_mut().zip(&direction) {
                *va = (*va + alpha * da).max(0.0);
            }
        }

        #[cfg(debug_assertions)]
        {
            let objective: f64 = (0..num_arcs).map(|a| model.objective(a, v[a])).sum();
            debug_assert!(
                objective <= last_objective * (1.0 + 1e-9) + 1e-12,
                "objective increased: {last_objective} -> {objective}"
            );
            last_objective = objective;
        }
    }

    if !converged && stalled {
        let budget = (opts.max_iters - iterations).clamp(200, 20_000);
        let polished =
            crate::solver::polish::path_equilibrate(net, demands, model, x, opts, budget)?;
        return Ok(FwOutcome {
            iterations: iterations + polished.iterations,
            ..polished
        });
    }
    // reported arc flows are exactly the aggregated class flows
    let v = aggregate_to_arcflow(&x);
    Ok(FwOutcome {
        x,
        v,
        relative_gap,
        iterations,
        converged,
        od_costs,
    })
}

/// Bisection on `g(alpha) = sum_a price_a(v + alpha d) d_a` over [0, 1].
/// `g(0) < 0` by construction; returns 1 when the whole step descends.
fn exact_line_search(model: &impl ArcModel, v: &ArcFlow, direction: &[f64], gtol: f64) -> f64 {
    let support: Vec<usize> = direction
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() > 0.0)
        .map(|(a, _)| a)
        .collect();
    if support.is_empty() {
        return 0.0;
    }
    let g = |alpha: f64| -> f64 {
        support
            .iter()
            .map(|&a| model.price(a, (v[a] + alpha * direction[a]).max(0.0)) * direction[a])
            .sum()
    };
    if g(1.0) <= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= gtol || hi - lo < 1e-16 {
            return mid;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Separable user equilibrium by Frank-Wolfe on the equilibrium potential.
pub fn solve_prue(inst: &Instance, opts: SolverOptions) -> Result<EquilibriumReport> {
    solve_prue_warm_start(inst, opts, None)
}

pub fn solve_prue_warm_start(
    inst: &Instance,
    opts: SolverOptions,
    warm: Option<(ClassFlow, ArcFlow)>,
) -> Result<EquilibriumReport> {
    inst.cost.require_separable()?;
    let model = UePotential { cost: &inst.cost };
    let out = frank_wolfe_engine(&inst.network, &inst.demands, &model, warm, opts)?;
    let z = inst.cost.total_travel_time(&out.v);
    Ok(EquilibriumReport {
        x: out.x,
        v: out.v,
        z,
        relative_gap: out.relative_gap,
        iterations: out.iterations,
        converged: out.converged,
        od_costs: out.od_costs,
    })
}

/// System optimum by Frank-Wolfe on the total travel time, using marginal
/// costs as direction-finding prices. Separable costs only: the asymmetric
/// total travel time need not be convex.
pub fn solve_so(inst: &Instance, opts: SolverOptions) -> Result<EquilibriumReport> {
    inst.cost.require_separable()?;
    let model = SystemObjective { cost: &inst.cost };
    let out = frank_wolfe_engine(&inst.network, &inst.demands, &model, None, opts)?;
    let z = inst.cost.total_travel_time(&out.v);
    Ok(EquilibriumReport {
        x: out.x,
        v: out.v,
        z,
        relative_gap: out.relative_gap,
        iterations: out.iterations,
        converged: out.converged,
        od_costs: out.od_costs,
    })
}
