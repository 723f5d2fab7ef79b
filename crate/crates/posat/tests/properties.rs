//! Cross-module invariants on randomized instances.

use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use posat::analysis::{check_necessary_condition, verify_msatue, zeta_bound};
use posat::cost::ipow;
use posat::instance::{gen_example2, Instance};
use posat::net::{aggregate_to_arcflow, decompose_to_paths, paths_to_classflow};
use posat::solver::{
    kkt_certificate, solve_prue, solve_uepe, solve_uepe_warm, LambdaField, SolverOptions,
};
use posat::testsupport::{random_class_flow, random_separable_instance};

fn arc_times_value(inst: &Instance, x: &posat::net::ClassFlow) -> f64 {
    inst.cost.total_travel_time(&aggregate_to_arcflow(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Decomposing a feasible class flow and re-aggregating reproduces it.
    #[test]
    fn decompose_round_trip(seed in 0u64..1_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_separable_instance(&mut rng, 6);
        if let Some(x) = random_class_flow(&inst, &mut rng) {
            let d = decompose_to_paths(&inst.network, &inst.demands, &x, 1e-12).unwrap();
            prop_assert!(!d.cyclic_residual);
            let back = paths_to_classflow(&inst.network, &inst.demands, &d.paths).unwrap();
            for od in 0..inst.num_ods() {
                for a in 0..inst.num_arcs() {
                    prop_assert!((back.get(od, a) - x.get(od, a)).abs() <= 1e-9 * (1.0 + x.get(od, a)));
                }
            }
        }
    }

    /// Path-based and arc-based total travel time agree.
    #[test]
    fn path_cost_identity(seed in 0u64..1_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_separable_instance(&mut rng, 6);
        if let Some(x) = random_class_flow(&inst, &mut rng) {
            let v = aggregate_to_arcflow(&x);
            let z = inst.cost.total_travel_time(&v);
            let d = decompose_to_paths(&inst.network, &inst.demands, &x, 1e-12).unwrap();
            let c: f64 = d
                .paths
                .entries
                .iter()
                .map(|e| inst.cost.path_cost(&v, &e.arcs) * e.flow)
                .sum();
            prop_assert!((c - z).abs() <= 1e-9 * (1.0 + z));
        }
    }

    /// Scaling a flow by 1+kappa scales its total travel time by at most
    /// (1+kappa)^(n+1).
    #[test]
    fn demand_scaling_bound(seed in 0u64..1_000, kappa in 0.0f64..2.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_separable_instance(&mut rng, 6);
        if let Some(x) = random_class_flow(&inst, &mut rng) {
            let z = arc_times_value(&inst, &x);
            let z_scaled = arc_times_value(&inst, &x.scaled(1.0 + kappa));
            let bound = ipow(1.0 + kappa, inst.cost.degree() + 1) * z;
            prop_assert!(z_scaled <= bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn beckmann_gradient_is_arc_times() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..20 {
        let inst = random_separable_instance(&mut rng, 6);
        let Some(x) = random_class_flow(&inst, &mut rng) else {
            continue;
        };
        let v = aggregate_to_arcflow(&x);
        let t = inst.cost.arc_times(&v);
        let h = 1e-5 * v.max_norm().max(1.0);
        for a in 0..inst.num_arcs() {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp.0[a] += h;
            vm.0[a] = (vm.0[a] - h).max(0.0);
            let fd = (inst.cost.beckmann_potential(&vp).unwrap()
                - inst.cost.beckmann_potential(&vm).unwrap())
                / (vp.0[a] - vm.0[a]);
            assert!(
                (fd - t[a]).abs() <= 1e-5 * (1.0 + t[a].abs()),
                "arc {a}: {fd} vs {}",
                t[a]
            );
        }
    }
}

/// Converged perception-error solves satisfy the whole implication chain:
/// satisficing certificate, necessary condition, and optimality certificate.
#[test]
fn perception_solutions_chain() {
    let mut rng = StdRng::seed_from_u64(11);
    let opts = SolverOptions::fixed_point().with_tol(1e-10);
    let mut solved = 0;
    for _ in 0..25 {
        let inst = random_separable_instance(&mut rng, 6);
        let kappa = rng.random_range(0.05..2.0);
        let lambda = LambdaField::random(kappa, inst.num_ods(), inst.num_arcs(), &mut rng).unwrap();
        let report = solve_uepe(&inst, &lambda, opts).unwrap();
        if !report.converged {
            continue;
        }
        solved += 1;
        let cert = verify_msatue(&inst, &report.x, kappa, 1e-9).unwrap();
        assert!(
            cert.certified() || cert.certifying <= kappa + 1e-6,
            "msatue failed: certifying {} vs kappa {kappa}",
            cert.certifying
        );
        let nc = check_necessary_condition(&inst, &report.v, kappa, 1e-6).unwrap();
        assert!(nc.holds, "necessary condition failed: slack {}", nc.slack);
        let kkt = kkt_certificate(&inst, &lambda, &report.x, 1e-6).unwrap();
        assert!(kkt.pass, "kkt failed: {kkt:?}");
    }
    assert!(
        solved >= 20,
        "only {solved} of 25 random perception solves converged"
    );
}

/// Equilibrium total travel time under scaled demands is within the
/// analytic factor of the unscaled one.
#[test]
fn scaled_equilibrium_dominance() {
    let mut rng = StdRng::seed_from_u64(23);
    let opts = SolverOptions::frank_wolfe().with_tol(1e-11);
    for _ in 0..15 {
        let inst = random_separable_instance(&mut rng, 6);
        let kappa = rng.random_range(0.0..2.0);
        let base = solve_prue(&inst, opts).unwrap();
        assert!(base.converged);
        let scaled_inst = inst.scale_demands(kappa).unwrap();
        let warm = (base.x.scaled(1.0 + kappa), base.v.scaled(1.0 + kappa));
        let scaled = posat::solver::solve_prue_warm_start(&scaled_inst, opts, Some(warm)).unwrap();
        assert!(scaled.converged);
        let bound = ipow(1.0 + kappa, inst.cost.degree() + 1) * base.z;
        assert!(
            scaled.z <= bound * (1.0 + 1e-6),
            "scaled z {} exceeds bound {bound} (kappa {kappa})",
            scaled.z
        );
    }
}

/// Uniqueness proxy: on strictly monotone costs two different starts agree.
#[test]
fn equilibrium_unique_on_strictly_monotone() {
    let inst = gen_example2(1.0).unwrap();
    let opts = SolverOptions::frank_wolfe().with_tol(1e-10);
    let a = solve_prue(&inst, opts).unwrap();
    // warm start from the opposite all-or-nothing corner
    let mut x = posat::net::ClassFlow::zeros(1, 2);
    x.set(0, 1, 1.0);
    let v = aggregate_to_arcflow(&x);
    let b = posat::solver::solve_prue_warm_start(&inst, opts, Some((x, v))).unwrap();
    for arc in 0..2 {
        assert!((a.v[arc] - b.v[arc]).abs() <= 1e-5 * (1.0 + a.v[arc]));
    }
}

/// The scaled baseline equilibrium certifies as satisficing at level
/// (1+kappa)^n - 1 on the scaled instance.
#[test]
fn scaled_prue_is_satisficing() {
    let mut rng = StdRng::seed_from_u64(31);
    let opts = SolverOptions::frank_wolfe().with_tol(1e-11);
    for _ in 0..15 {
        let inst = random_separable_instance(&mut rng, 6);
        let kappa = rng.random_range(0.0..1.5);
        let base = solve_prue(&inst, opts).unwrap();
        let scaled_inst = inst.scale_demands(kappa).unwrap();
        let sigma = ipow(1.0 + kappa, inst.cost.degree()) - 1.0;
        let cert = verify_msatue(&scaled_inst, &base.x.scaled(1.0 + kappa), sigma, 1e-9).unwrap();
        assert!(
            cert.certifying <= sigma + 1e-6,
            "certifying {} vs sigma {sigma} (kappa {kappa})",
            cert.certifying
        );
    }
}

/// Warm-started and cold perception solves land on the same equilibrium Z
/// for the identity field.
#[test]
fn uepe_identity_matches_prue_z() {
    let mut rng = StdRng::seed_from_u64(47);
    for _ in 0..10 {
        let inst = random_separable_instance(&mut rng, 5);
        let prue = solve_prue(&inst, SolverOptions::frank_wolfe().with_tol(1e-10)).unwrap();
        let lambda = LambdaField::all_ones(0.3, inst.num_ods(), inst.num_arcs()).unwrap();
        let pe = solve_uepe_warm(
            &inst,
            &lambda,
            SolverOptions::fixed_point().with_tol(1e-9),
            Some(&prue.x),
        )
        .unwrap();
        assert!(pe.converged);
        assert!((pe.z - prue.z).abs() <= 1e-5 * prue.z.max(1.0));
    }
}

/// On monomial-cost instances, a perception-error equilibrium whose per-arc
/// multipliers are shared by every class costs no more than the equilibrium
/// of the demand-scaled problem.
#[test]
fn shared_perception_dominated_by_scaled_equilibrium() {
    let mut rng = StdRng::seed_from_u64(77);
    let fw = SolverOptions::frank_wolfe().with_tol(1e-11);
    let pe_opts = SolverOptions::fixed_point().with_tol(1e-10);
    let mut solved = 0;
    for _ in 0..20 {
        let inst = posat::testsupport::random_monomial_instance(&mut rng, 6);
        let kappa = rng.random_range(0.05..1.5);
        let lo = 1.0 / (1.0 + kappa);
        // one multiplier per arc, replicated across classes
        let per_arc: Vec<f64> = (0..inst.num_arcs())
            .map(|_| rng.random_range(lo..=1.0))
            .collect();
        let values: Vec<f64> = (0..inst.num_ods())
            .flat_map(|_| per_arc.iter().copied())
            .collect();
        let lambda = LambdaField::new(kappa, inst.num_ods(), inst.num_arcs(), values).unwrap();
        let pe = solve_uepe(&inst, &lambda, pe_opts).unwrap();
        if !pe.converged {
            continue;
        }
        solved += 1;
        let scaled = solve_prue(&inst.scale_demands(kappa).unwrap(), fw).unwrap();
        assert!(scaled.converged);
        assert!(
            pe.z <= scaled.z * (1.0 + 1e-6),
            "perceived z {} above scaled equilibrium z {} (kappa {kappa})",
            pe.z,
            scaled.z
        );
    }
    assert!(
        solved >= 15,
        "only {solved} of 20 shared-perception solves converged"
    );
}

/// The flow-coupled nine-node network solves to its self-certifying gap.
#[test]
fn nine_node_diagonalization_converges() {
    let inst = posat::instance::gen_nine_node_asymmetric(&[
        (1, 3, 10.0),
        (1, 4, 20.0),
        (2, 3, 30.0),
        (2, 4, 40.0),
    ])
    .unwrap();
    let opts = SolverOptions::fixed_point().with_tol(1e-8);
    let report = posat::solver::solve_prue_diagonalization(&inst, opts).unwrap();
    assert!(report.converged, "gap {}", report.relative_gap);
    assert!(report.relative_gap <= 1e-8);
    assert!(report.z > 0.0);
    report
        .x
        .check_conservation(&inst.network, &inst.demands)
        .unwrap();
}

/// Benchmark fixture sanity: structure counts and free-flow loading.
#[test]
fn benchmark_fixture_structure_and_loading() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let (inst, meta) = posat::tntp::load_tntp(
        &root.join("data/siouxfalls_net.tntp"),
        &root.join("data/siouxfalls_trips.tntp"),
    )
    .unwrap();
    assert_eq!((meta.nodes, meta.links, meta.od_entries), (24, 76, 576));
    let free_flow = inst.cost.arc_times(&posat::net::ArcFlow::zeros(76));
    let loading = posat::sp::all_or_nothing(&inst.network, &inst.demands, &free_flow).unwrap();
    loading
        .flow
        .check_conservation(&inst.network, &inst.demands)
        .unwrap();
}

/// Worst-case search on flow-coupled instances: certified, bounded, and
/// independent of the thread count.
#[test]
fn asymmetric_search_certified_and_deterministic() {
    let mut rng = StdRng::seed_from_u64(301);
    let mut opts = posat::analysis::SearchOptions {
        starts: 4,
        seed: 9,
        budget: Some(40),
        solver: SolverOptions::fixed_point().with_tol(1e-9),
        ..Default::default()
    };
    for _ in 0..4 {
        let inst = posat::testsupport::random_asymmetric_instance(&mut rng, 4);
        let kappa = rng.random_range(0.2..1.0);
        let a = posat::analysis::search_worst_posat(&inst, kappa, &opts).unwrap();
        assert!(a.posat >= 1.0 - 1e-12);
        assert!(a.posat <= zeta_bound(kappa, inst.cost.degree()).unwrap() + 1e-6);
        opts.threads = 3;
        let b = posat::analysis::search_worst_posat(&inst, kappa, &opts).unwrap();
        assert_eq!(a.z_worst, b.z_worst);
        assert_eq!(a.best_lambda.values(), b.best_lambda.values());
        opts.threads = 1;
    }
}

/// The benchmark's flow-coupled variant pairs every arc with its reverse.
#[test]
fn benchmark_asymmetric_variant_couples_all_arcs() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let (inst, _) = posat::tntp::load_tntp(
        &root.join("data/siouxfalls_net.tntp"),
        &root.join("data/siouxfalls_trips.tntp"),
    )
    .unwrap();
    let variant = posat::instance::make_asymmetric_variant(&inst, 0.5).unwrap();
    assert!(variant.unpaired_arcs.is_empty());
    assert!(!variant.instance.cost.is_separable());
    // symmetric flow on an opposite pair scales the congestion term by 1.5^4
    let reverse = inst.network.reverse_arc(0).unwrap();
    let mut v = posat::net::ArcFlow::zeros(76);
    v.0[0] = 1000.0;
    v.0[reverse] = 1000.0;
    let t_sep = inst.cost.arc_times(&v);
    let t_var = variant.instance.cost.arc_times(&v);
    let free = inst.cost.arc_times(&posat::net::ArcFlow::zeros(76));
    let congestion_sep = t_sep[0] - free[0];
    let congestion_var = t_var[0] - free[0];
    assert!((congestion_var - congestion_sep * 1.5f64.powi(4)).abs() <= 1e-9 * congestion_var.max(1.0));
}

#[test]
fn posat_stays_under_zeta_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(61);
    let opts = posat::analysis::SearchOptions {
        starts: 4,
        seed: 3,
        solver: SolverOptions::fixed_point().with_tol(1e-9),
        ..Default::default()
    };
    for _ in 0..6 {
        let inst = random_separable_instance(&mut rng, 5);
        let kappa = rng.random_range(0.1..1.0);
        let result = posat::analysis::search_worst_posat(&inst, kappa, &opts).unwrap();
        assert!(result.posat >= 1.0 - 1e-12);
        assert!(result.posat <= zeta_bound(kappa, inst.cost.degree()).unwrap() + 1e-6);
    }
}
