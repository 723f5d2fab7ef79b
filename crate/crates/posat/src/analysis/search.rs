//! Worst-case price-of-satisficing search over the perception box.
//!
//! The exact worst case is a nonconvex equilibrium-constrained program, so
//! the search is a certified lower bound: multi-start perception fields
//! (deterministic corners plus seeded random draws), each solved to a
//! perception-error equilibrium, followed by greedy coordinate ascent that
//! snaps single multipliers to the box faces. Every counted candidate must
//! pass both the optimality certificate and the satisficing certificate.

use serde::{Deserialize, Serialize};

use crate::analysis::bounds::{simple_posat_bound, zeta_bound};
use crate::analysis::verify::{check_necessary_condition, verify_msatue};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::net::ClassFlow;
use crate::solver::{
    kkt_certificate, solve_prue_auto, solve_uepe_warm, EquilibriumReport, LambdaField,
    SolverOptions,
};

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Number of perception-field starts (the first is the all-lower-bound
    /// corner; on ring instances the second is the clockwise pattern).
    pub starts: usize,
    pub seed: u64,
    /// Coordinate-ascent budget in equilibrium solves. `None` means
    /// `50 * num_ods * num_arcs`.
    pub budget: Option<usize>,
    /// Concurrent start solves. The result does not depend on this.
    pub threads: usize,
    /// Perception-equilibrium solver controls.
    pub solver: SolverOptions,
    /// Baseline equilibrium solver controls.
    pub prue_solver: SolverOptions,
    /// Used-arc threshold for satisficing verification.
    pub used_tol: f64,
    /// Accepted excess of the certifying level over kappa.
    pub certify_slack: f64,
    /// Absolute tolerance for the optimality certificate.
    pub kkt_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            starts: 16,
            seed: 0,
            budget: None,
            threads: 1,
            solver: SolverOptions::fixed_point(),
            prue_solver: SolverOptions::frank_wolfe(),
            used_tol: 1e-9,
            certify_slack: 1e-6,
            kkt_tol: 1e-6,
        }
    }
}

/// One multi-start attempt in the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: usize,
    /// Seed of the random draw; `None` for deterministic or carried starts.
    pub seed: Option<u64>,
    pub z: Option<f64>,
    pub converged: bool,
    pub certified: bool,
}

/// Best certified worst case found for one kappa.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoSatResult {
    pub kappa: f64,
    pub z_prue: f64,
    pub z_worst: f64,
    /// `z_worst / z_prue`: a certified lower bound on the worst-case ratio.
    pub posat: f64,
    pub zeta: f64,
    pub simple_bound: f64,
    pub best_lambda: LambdaField,
    pub best_flow: ClassFlow,
    pub trace: Vec<StartOutcome>,
    pub converged_starts: usize,
    pub ascent_flips: usize,
    pub solver_calls: usize,
}

struct Candidate {
    lambda: LambdaField,
    flow: ClassFlow,
    z: f64,
}

/// Carried candidate (already an equilibrium for its lambda) and warm start
/// used by [`posat_curve`] to chain kappa levels.
pub(crate) struct Extras {
    pub carried: Vec<(LambdaField, ClassFlow, f64)>,
    pub warm_starts: Vec<(LambdaField, Option<ClassFlow>)>,
}

impl Extras {
    fn none() -> Self {
        Extras {
            carried: Vec::new(),
            warm_starts: Vec::new(),
        }
    }
}

pub fn search_worst_posat(
    inst: &Instance,
    kappa: f64,
    opts: &SearchOptions,
) -> Result<PoSatResult> {
    if kappa < 0.0 {
        return Err(Error::NegativeKappa(kappa));
    }
    if opts.starts < 1 {
        return Err(Error::InvalidArgument("starts must be at least 1".into()));
    }
    let prue = solve_baseline(inst, opts)?;
    search_from_baseline(inst, kappa, opts, &prue, Extras::none())
}

pub(crate) fn solve_baseline(inst: &Instance, opts: &SearchOptions) -> Result<EquilibriumReport> {
    let prue = solve_prue_auto(inst, opts.prue_solver)?;
    if !prue.converged {
        return Err(Error::PrueFailed {
            gap: prue.relative_gap,
            iterations: prue.iterations,
        });
    }
    Ok(prue)
}

pub(crate) fn search_from_baseline(
    inst: &Instance,
    kappa: f64,
    opts: &SearchOptions,
    prue: &EquilibriumReport,
    extras: Extras,
) -> Result<PoSatResult> {
    let (num_ods, num_arcs) = (inst.num_ods(), inst.num_arcs());
    let zeta = zeta_bound(kappa, inst.cost.degree())?;
    let simple = simple_posat_bound(kappa, inst.cost.degree())?;

    // the identity field is always feasible, so the baseline equilibrium
    // seeds the incumbent and the reported ratio can never fall below 1
    let mut best = Candidate {
        lambda: LambdaField::all_ones(kappa, num_ods, num_arcs)?,
        flow: prue.x.clone(),
        z: prue.z,
    };

    if kappa == 0.0 {
        // the box degenerates to the identity field
        return Ok(PoSatResult {
            kappa,
            z_prue: prue.z,
            z_worst: prue.z,
            posat: 1.0,
            zeta,
            simple_bound: simple,
            best_lambda: best.lambda,
            best_flow: best.flow,
            trace: Vec::new(),
            converged_starts: 0,
            ascent_flips: 0,
            solver_calls: 0,
        });
    }

    // ---- multi-start phase ----
    let mut specs: Vec<(Option<u64>, LambdaField, Option<ClassFlow>)> = Vec::new();
    specs.push((
        None,
        LambdaField::all_lower(kappa, num_ods, num_arcs)?,
        None,
    ));
    if let Some(circ) = inst.meta.as_ref().and_then(|m| m.circular) {
        let pattern = LambdaField::new(kappa, num_ods, num_arcs, circ.clockwise_lambda(inst))?;
        specs.push((None, pattern, Some(circ.clockwise_flow(inst))));
    }
    while specs.len() < opts.starts {
        let i = specs.len() as u64;
        let mut rng =
            <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(opts.seed.wrapping_add(i));
        specs.push((
            Some(opts.seed.wrapping_add(i)),
            LambdaField::random(kappa, num_ods, num_arcs, &mut rng)?,
            None,
        ));
    }
    for (lambda, warm) in extras.warm_starts {
        specs.push((None, lambda, warm));
    }

    let mut trace = Vec::with_capacity(specs.len());
    let outcomes = run_starts(inst, kappa, opts, &specs);
    let mut converged_starts = 0;
    let mut lower_corner: Option<Candidate> = None;
    for (start, outcome) in outcomes.into_iter().enumerate() {
        let (entry, candidate) = outcome;
        trace.push(StartOutcome { start, ..entry });
        if let Some(c) = candidate {
            converged_starts += 1;
            if start == 0 {
                lower_corner = Some(Candidate {
                    lambda: c.lambda.clone(),
                    flow: c.flow.clone(),
                    z: c.z,
                });
            }
            if c.z > best.z {
                best = c;
            }
        }
    }

    // carried candidates are equilibria for their own lambda; re-certify at
    // this kappa without re-solving
    for (lambda, flow, z) in extras.carried {
        if certify(inst, &lambda, &flow, kappa, opts).unwrap_or(false) && z > best.z {
            best = Candidate { lambda, flow, z };
        }
    }

    // ---- coordinate ascent over box faces ----
    //
    // Two climbs: one from the all-lower-bound corner (the known worst cases
    // flip single coordinates away from it) and one from the best start.
    // Greedy single-coordinate ascent has local optima, so every certified
    // trial solve counts toward the result, accepted or not.
    let budget = opts.budget.unwrap_or(50 * num_ods * num_arcs);
    let mut ascent = AscentState {
        best,
        solver_calls: 0,
        ascent_flips: 0,
    };
    if let Some(corner) = lower_corner {
        let corner_end = climb(inst, kappa, opts, corner, budget, &mut ascent);
        if ascent.solver_calls < budget && corner_end.lambda.values() != ascent.best.lambda.values()
        {
            let restart = Candidate {
                lambda: ascent.best.lambda.clone(),
                flow: ascent.best.flow.clone(),
                z: ascent.best.z,
            };
            climb(inst, kappa, opts, restart, budget, &mut ascent);
        }
    } else {
        let start = Candidate {
            lambda: ascent.best.lambda.clone(),
            flow: ascent.best.flow.clone(),
            z: ascent.best.z,
        };
        climb(inst, kappa, opts, start, budget, &mut ascent);
    }
    let AscentState {
        best,
        solver_calls,
        ascent_flips,
    } = ascent;

    Ok(PoSatResult {
        kappa,
        z_prue: prue.z,
        z_worst: best.z,
        posat: best.z / prue.z,
        zeta,
        simple_bound: simple,
        best_lambda: best.lambda,
        best_flow: best.flow,
        trace,
        converged_starts,
        ascent_flips,
        solver_calls,
    })
}

struct AscentState {
    /// Best certified candidate seen anywhere (starts, trials, accepted flips).
    best: Candidate,
    solver_calls: usize,
    ascent_flips: usize,
}

/// Greedy best-improvement coordinate ascent from `incumbent`, snapping one
/// multiplier per step to a box face. Returns the final incumbent; all
/// certified trials along the way are folded into `state.best`.
fn climb(
    inst: &Instance,
    kappa: f64,
    opts: &SearchOptions,
    mut incumbent: Candidate,
    budget: usize,
    state: &mut AscentState,
) -> Candidate {
    let lo = 1.0 / (1.0 + kappa);
    loop {
        let mut sweep_best: Option<Candidate> = None;
        'sweep: for od in 0..inst.num_ods() {
            for arc in 0..inst.num_arcs() {
                let current = incumbent.lambda.get(od, arc);
                for target in [lo, 1.0] {
                    if (current - target).abs() <= 1e-15 {
                        continue;
                    }
                    if state.solver_calls >= budget {
                        break 'sweep;
                    }
                    state.solver_calls += 1;
                    let mut lambda = incumbent.lambda.clone();
                    lambda.set(od, arc, target);
                    let Ok(report) =
                        solve_uepe_warm(inst, &lambda, opts.solver, Some(&incumbent.flow))
                    else {
                        continue;
                    };
                    if !report.converged
                        || !certify(inst, &lambda, &report.x, kappa, opts).unwrap_or(false)
                    {
                        continue;
                    }
                    if report.z > state.best.z {
                        state.best = Candidate {
                            lambda: lambda.clone(),
                            flow: report.x.clone(),
                            z: report.z,
                        };
                    }
                    let improves = report.z > incumbent.z * (1.0 + 1e-9);
                    let beats_sweep = sweep_best.as_ref().is_none_or(|c| report.z > c.z);
                    if improves && beats_sweep {
                        sweep_best = Some(Candidate {
                            lambda,
                            flow: report.x,
                            z: report.z,
                        });
                    }
                }
            }
        }
        match sweep_best {
            Some(c) => {
                incumbent = c;
                state.ascent_flips += 1;
                if state.solver_calls >= budget {
                    break;
                }
            }
            None => break,
        }
    }
    incumbent
}

type StartResult = (StartOutcome, Option<Candidate>);

fn run_starts(
    inst: &Instance,
    kappa: f64,
    opts: &SearchOptions,
    specs: &[(Option<u64>, LambdaField, Option<ClassFlow>)],
) -> Vec<StartResult> {
    let solve_one =
        |(seed, lambda, warm): &(Option<u64>, LambdaField, Option<ClassFlow>)| -> StartResult {
            match solve_uepe_warm(inst, lambda, opts.solver, warm.as_ref()) {
                Ok(report) => {
                    let certified = report.converged
                        && certify(inst, lambda, &report.x, kappa, opts).unwrap_or(false);
                    let entry = StartOutcome {
                        start: 0,
                        seed: *seed,
                        z: Some(report.z),
                        converged: report.converged,
                        certified,
                    };
                    let candidate = certified.then(|| Candidate {
                        lambda: lambda.clone(),
                        flow: report.x,
                        z: report.z,
                    });
                    (entry, candidate)
                }
                Err(_) => (
                    StartOutcome {
                        start: 0,
                        seed: *seed,
                        z: None,
                        converged: false,
                        certified: false,
                    },
                    None,
                ),
            }
        };

    if opts.threads <= 1 || specs.len() <= 1 {
        return specs.iter().map(solve_one).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<StartResult>>> =
        specs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..opts.threads.min(specs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= specs.len() {
                    break;
                }
                *results[i].lock().unwrap() = Some(solve_one(&specs[i]));
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().unwrap())
        .collect()
}

/// A candidate only counts when it passes the optimality certificate, the
/// satisficing certificate, and the necessary condition at the search level.
fn certify(
    inst: &Instance,
    lambda: &LambdaField,
    flow: &ClassFlow,
    kappa: f64,
    opts: &SearchOptions,
) -> Result<bool> {
    let kkt = kkt_certificate(inst, lambda, flow, opts.kkt_tol)?;
    if !kkt.pass {
        return Ok(false);
    }
    let cert = verify_msatue(inst, flow, kappa, opts.used_tol)?;
    if !(cert.certified() || cert.certifying <= kappa + opts.certify_slack) {
        return Ok(false);
    }
    let v = crate::net::aggregate_to_arcflow(flow);
    let z = inst.cost.total_travel_time(&v);
    let nc = check_necessary_condition(inst, &v, kappa, opts.certify_slack * z.max(1.0))?;
    Ok(nc.holds)
}

/// Worst-case search over an ascending kappa grid. Each level reuses the
/// previous level's best perception field twice: carried verbatim (the boxes
/// are nested, so the candidate stays feasible and the table stays
/// nondecreasing) and rescaled into the new box as a warm start.
pub fn posat_curve(
    inst: &Instance,
    grid: &[f64],
    opts: &SearchOptions,
) -> Result<Vec<(f64, Result<PoSatResult>)>> {
    for pair in grid.windows(2) {
        if pair[1] < pair[0] {
            return Err(Error::InvalidArgument(
                "kappa grid must be ascending".into(),
            ));
        }
    }
    if let Some(&k) = grid.first() {
        if k < 0.0 {
            return Err(Error::NegativeKappa(k));
        }
    }
    let prue = solve_baseline(inst, opts)?;
    let mut rows: Vec<(f64, Result<PoSatResult>)> = Vec::with_capacity(grid.len());
    let mut previous: Option<(LambdaField, ClassFlow, f64)> = None;
    for &kappa in grid {
        let extras = match &previous {
            Some((lambda, flow, z)) => Extras {
                carried: lambda
                    .widened(kappa)
                    .map(|l| vec![(l, flow.clone(), *z)])
                    .unwrap_or_default(),
                warm_starts: lambda
                    .rescaled(kappa)
                    .map(|l| vec![(l, Some(flow.clone()))])
                    .unwrap_or_default(),
            },
            None => Extras::none(),
        };
        let row = search_from_baseline(inst, kappa, opts, &prue, extras);
        if let Ok(result) = &row {
            previous = Some((
                result.best_lambda.clone(),
                result.best_flow.clone(),
                result.z_worst,
            ));
        }
        rows.push((kappa, row));
    }
    Ok(rows)
}
