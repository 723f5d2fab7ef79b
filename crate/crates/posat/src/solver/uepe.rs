//! Fixed-point solvers built on diagonalized subproblems: asymmetric user
//! equilibrium, and user equilibrium under per-class perception errors.
//!
//! Both follow the same scheme: freeze whatever makes the problem
//! non-separable, solve the separable rest by Frank-Wolfe, iterate. Progress
//! is measured by the true (respectively perceived) relative gap; when the
//! fixed-point pass stalls, the update falls back to averaged steps.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::net::{aggregate_to_arcflow, ArcFlow, ClassFlow};
use crate::solver::frank_wolfe::frank_wolfe_engine;
use crate::solver::model::FrozenModel;
use crate::solver::{EquilibriumReport, LambdaField, SolverOptions};
use crate::sp::{all_or_nothing, load_od, shortest_paths};

const STALL_PASSES: usize = 5;

/// Abort window: a fixed-point run that cannot cut its best gap by 30% over
/// this many passes is not going to reach the tolerance; report
/// nonconvergence early instead of burning the full iteration cap.
const ABORT_WINDOW: usize = 100;

struct StallAbort {
    window_gap: f64,
    countdown: usize,
}

impl StallAbort {
    fn new() -> Self {
        StallAbort {
            window_gap: f64::INFINITY,
            countdown: ABORT_WINDOW,
        }
    }

    fn hopeless(&mut self, gap: f64, tol: f64) -> bool {
        self.countdown -= 1;
        if self.countdown > 0 {
            return false;
        }
        self.countdown = ABORT_WINDOW;
        let stuck = gap > 0.7 * self.window_gap && gap > 10.0 * tol;
        self.window_gap = gap;
        stuck
    }
}

/// Asymmetric user equilibrium by diagonalization: freeze cross-arc
/// interactions at the current flows, solve the separable subproblem by
/// Frank-Wolfe, repeat until the true relative gap closes.
pub fn solve_prue_diagonalization(
    inst: &Instance,
    opts: SolverOptions,
) -> Result<EquilibriumReport> {
    let net = &inst.network;
    let demands = &inst.demands;
    let t0 = inst.cost.arc_times(&ArcFlow::zeros(net.num_arcs()));
    let loading = all_or_nothing(net, demands, &t0)?;
    let mut x = loading.flow;
    let mut v = aggregate_to_arcflow(&x);

    let mut relative_gap = f64::INFINITY;
    let mut od_costs = vec![0.0; demands.len()];
    let mut converged = false;
    let mut iterations = 0;
    let mut best_gap = f64::INFINITY;
    let mut stall = 0usize;
    let mut fallback_steps = 0usize;
    let mut abort = StallAbort::new();
    let inner = SolverOptions {
        tol: (opts.tol * 0.1).max(1e-14),
        max_iters: 20_000,
    };

    for pass in 1..=opts.max_iters {
        iterations = pass;
        let t = inst.cost.arc_times(&v);
        let loading = all_or_nothing(net, demands, &t)?;
        od_costs.copy_from_slice(&loading.od_costs);
        let value: f64 = t.iter().zip(&v.0).map(|(ta, va)| ta * va).sum();
        let lower: f64 = demands
            .pairs()
            .iter()
            .zip(&loading.od_costs)
            .map(|(p, mu)| p.quantity * mu)
            .sum();
        relative_gap = if value > 0.0 {
            (value - lower) / value
        } else {
            0.0
        };
        if relative_gap <= opts.tol {
            converged = true;
            break;
        }
        if abort.hopeless(relative_gap, opts.tol) {
            break;
        }
        if relative_gap < 0.999 * best_gap {
            best_gap = relative_gap;
            stall = 0;
        } else {
            stall += 1;
        }

        let model = FrozenModel::cross_frozen(&inst.cost, &v);
        let sub = frank_wolfe_engine(net, demands, &model, Some((x.clone(), v.clone())), inner)?;
        if stall < STALL_PASSES {
            x = sub.x;
        } else {
            // averaged step to break fixed-point cycling
            fallback_steps += 1;
            let alpha = 1.0 / (fallback_steps + 1) as f64;
            for od in 0..demands.len() {
                let row = x.class_mut(od);
                for (xa, za) in row.iter_mut().zip(sub.x.class(od)) {
                    *xa += alpha * (za - *xa);
                }
            }
        }
        v = aggregate_to_arcflow(&x);
    }

    let z = inst.cost.total_travel_time(&v);
    Ok(EquilibriumReport {
        x,
        v,
        z,
        relative_gap,
        iterations,
        converged,
        od_costs,
    })
}

/// Equilibrium under per-class perceived costs `lambda_a^w * t_a(v)`.
///
/// Gauss-Seidel over OD classes: each class solves its own congested
/// subproblem (others frozen) by Frank-Wolfe; convergence is declared on the
/// perceived relative gap.
pub fn solve_uepe(
    inst: &Instance,
    lambda: &LambdaField,
    opts: SolverOptions,
) -> Result<EquilibriumReport> {
    solve_uepe_warm(inst, lambda, opts, None)
}

/// [`solve_uepe`] with a caller-provided starting flow (must satisfy
/// conservation; typically a known equilibrium candidate).
pub fn solve_uepe_warm(
    inst: &Instance,
    lambda: &LambdaField,
    opts: SolverOptions,
    warm: Option<&ClassFlow>,
) -> Result<EquilibriumReport> {
    let net = &inst.network;
    let demands = &inst.demands;
    let (num_ods, num_arcs) = (demands.len(), net.num_arcs());
    if lambda.num_ods() != num_ods || lambda.num_arcs() != num_arcs {
        return Err(Error::InvalidNetwork(format!(
            "lambda field is {}x{}, instance needs {}x{}",
            lambda.num_ods(),
            lambda.num_arcs(),
            num_ods,
            num_arcs
        )));
    }

    let mut x = match warm {
        Some(flow) => {
            flow.check_conservation(net, demands)?;
            flow.clone()
        }
        None => {
            // per-class all-or-nothing at perceived free-flow costs
            let t0 = inst.cost.arc_times(&ArcFlow::zeros(num_arcs));
            let mut x = ClassFlow::zeros(num_ods, num_arcs);
            let mut perceived = vec![0.0; num_arcs];
            for od in 0..num_ods {
                scale_costs(&t0, lambda.class(od), &mut perceived);
                let pair = demands.pair(od);
                let tree = shortest_paths(net, &perceived, pair.origin)?;
                load_od(net, &tree, od, pair.dest, pair.quantity, &mut x)?;
            }
            x
        }
    };
    let mut v = aggregate_to_arcflow(&x);

    let mut relative_gap = f64::INFINITY;
    let mut od_costs = vec![0.0; num_ods];
    let mut class_gap = vec![0.0; num_ods];
    let mut perceived = vec![0.0; num_arcs];
    let mut converged = false;
    let mut iterations = 0;
    let mut best_gap = f64::INFINITY;
    let mut stall = 0usize;
    let mut fallback_steps = 0usize;
    let mut abort = StallAbort::new();
    let singles: Vec<_> = (0..num_ods).map(|od| demands.single(od)).collect();
    let inner = SolverOptions {
        tol: (opts.tol * 0.1).max(1e-14),
        max_iters: 20_000,
    };

    for pass in 1..=opts.max_iters {
        iterations = pass;
        let t = inst.cost.arc_times(&v);
        let mut perceived_value = 0.0;
        let mut lower = 0.0;
        for od in 0..num_ods {
            scale_costs(&t, lambda.class(od), &mut perceived);
            let pair = demands.pair(od);
            let tree = shortest_paths(net, &perceived, pair.origin)?;
            if !tree.dist[pair.dest].is_finite() {
                return Err(Error::DisconnectedOd {
                    od,
                    origin: net.node_label(pair.origin),
                    dest: net.node_label(pair.dest),
                });
            }
            od_costs[od] = tree.dist[pair.dest];
            let value: f64 = perceived
                .iter()
                .zip(x.class(od))
                .map(|(p, xa)| p * xa)
                .sum();
            class_gap[od] = value - pair.quantity * tree.dist[pair.dest];
            perceived_value += value;
            lower += pair.quantity * tree.dist[pair.dest];
        }
        relative_gap = if perceived_value > 0.0 {
            (perceived_value - lower) / perceived_value
        } else {
            0.0
        };
        if relative_gap <= opts.tol {
            converged = true;
            break;
        }
        if abort.hopeless(relative_gap, opts.tol) {
            break;
        }
        if relative_gap < 0.999 * best_gap {
            best_gap = relative_gap;
            stall = 0;
        } else {
            stall += 1;
        }

        if stall < STALL_PASSES {
            // Gauss-Seidel sweep; classes already at their perceived optimum
            // (relative to the pass-start flows) are skipped
            let skip_below = 0.25 * opts.tol * perceived_value.max(1e-300) / num_ods as f64;
            for od in 0..num_ods {
                if class_gap[od] <= skip_below {
                    continue;
                }
                let model =
                    FrozenModel::class_frozen(&inst.cost, &v, x.class(od), Some(lambda.class(od)));
                let mut row = ClassFlow::zeros(1, num_arcs);
                row.class_mut(0).copy_from_slice(x.class(od));
                let row_v = ArcFlow(x.class(od).to_vec());
                let sub = frank_wolfe_engine(net, &singles[od], &model, Some((row, row_v)), inner)?;
                for (a, (old, new)) in x.class(od).to_vec().iter().zip(sub.x.class(0)).enumerate() {
                    if old != new {
                        v.0[a] += new - old;
                        x.set(od, a, *new);
                    }
                }
            }
        } else {
            // averaged all-or-nothing step to escape Gauss-Seidel cycling
            fallback_steps += 1;
            let alpha = 1.0 / (fallback_steps + 1) as f64;
            for od in 0..num_ods {
                scale_costs(&t, lambda.class(od), &mut perceived);
                let pair = demands.pair(od);
                let tree = shortest_paths(net, &perceived, pair.origin)?;
                let mut target = ClassFlow::zeros(1, num_arcs);
                load_od(net, &tree, 0, pair.dest, pair.quantity, &mut target)?;
                let row = x.class_mut(od);
                for (xa, ya) in row.iter_mut().zip(target.class(0)) {
                    *xa += alpha * (ya - *xa);
                }
            }
            stall = 0;
        }
        v = aggregate_to_arcflow(&x);
    }

    let z = inst.cost.total_travel_time(&v);
    Ok(EquilibriumReport {
        x,
        v,
        z,
        relative_gap,
        iterations,
        converged,
        od_costs,
    })
}

fn scale_costs(t: &[f64], lambda_row: &[f64], out: &mut [f64]) {
    for ((o, ta), la) in out.iter_mut().zip(t).zip(lambda_row) {
        *o = ta * la;
    }
}
