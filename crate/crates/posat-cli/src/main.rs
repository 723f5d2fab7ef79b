//! `posat`: solve, verify, bound, and worst-case-search traffic equilibria
//! under satisficing route choice.
//!
//! Exit codes: 0 success (or certified), 1 input/validation error,
//! 2 numerical nonconvergence.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use posat::analysis::{
    check_necessary_condition, deviation_ratio_bound, posat_curve, search_worst_posat,
    simple_posat_bound, verify_asatue, verify_msatue, zeta_bound, SearchOptions,
};
use posat::instance::{
    gen_circular, gen_example1, gen_example2, gen_nine_node_asymmetric, CircularRatio, Instance,
};
use posat::net::aggregate_to_arcflow;
use posat::solver::{
    kkt_certificate, solve_prue_auto, solve_so, solve_uepe, EquilibriumReport, SolverOptions,
};

use output::{
    fmt_sig, read_class_flow_csv, read_lambda_json, write_class_flow_csv, write_lambda_json,
    write_report,
};

#[derive(Parser)]
#[command(name = "posat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Concurrent worst-case search starts (default: POSAT_THREADS or 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an equilibrium and write a report plus flow tables.
    Solve(SolveArgs),
    /// Search perception space for the worst certified satisficing flow.
    Search(SearchArgs),
    /// Evaluate the analytical worst-case bounds on a kappa grid.
    Bounds(BoundsArgs),
    /// Check satisficing and optimality certificates for a given flow.
    Verify(VerifyArgs),
    /// Generate a benchmark instance file.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(value_enum)]
    model: SolveModel,
    #[arg(long)]
    instance: PathBuf,
    /// Perception field JSON ({"kappa": .., "lambda": [[..]]}); required for uepe.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Output prefix: writes `<out>.report.json`, `<out>.flows.csv`,
    /// `<out>.class_flows.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveModel {
    Ue,
    So,
    Uepe,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, conflicts_with = "kappa_grid")]
    kappa: Option<f64>,
    /// Comma-separated ascending kappa values.
    #[arg(long)]
    kappa_grid: Option<String>,
    #[arg(long, default_value_t = 16)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinate-ascent solver-call budget (default 50 * ods * arcs).
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    prue_tol: Option<f64>,
    #[arg(long)]
    kkt_tol: Option<f64>,
    #[arg(long)]
    certify_slack: Option<f64>,
    #[arg(long)]
    used_tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, conflicts_with = "kappa_grid")]
    kappa: Option<f64>,
    #[arg(long)]
    kappa_grid: Option<String>,
    #[arg(long)]
    degree: u32,
    /// Single-origin instance: adds the deviation-ratio bound column.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Class-flow CSV with header od,arc,flow.
    #[arg(long)]
    flow: PathBuf,
    #[arg(long, conflicts_with = "epsilon_additive")]
    kappa: Option<f64>,
    #[arg(long)]
    epsilon_additive: Option<f64>,
    #[arg(long)]
    lambda: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long = "type", value_enum)]
    kind: GenKind,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, value_enum, default_value_t = Convention::Kappa)]
    convention: Convention,
    /// Demand CSV (origin,dest,q) for the nine-node network.
    #[arg(long)]
    demands: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Example1,
    Example2,
    Circular,
    NineNodeAsym,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    /// Long/short hop ratio equals 1 + kappa.
    Kappa,
    /// Hop ratio chosen so the worst/best travel-time ratio is (1+kappa)^5.
    Posat,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // treat usage problems as input errors
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("POSAT_THREADS")
                .ok()
                .and_then(|t| t.parse().ok())
        })
        .unwrap_or(1)
        .max(1);
    match run(cli.command, threads) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command, threads: usize) -> posat::Result<u8> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::Search(args) => cmd_search(args, threads),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn cmd_solve(args: SolveArgs) -> posat::Result<u8> {
    let inst = Instance::load(&args.instance)?;
    let report: EquilibriumReport = match args.model {
        SolveModel::Ue => {
            let opts = solver_opts(SolverOptions::frank_wolfe(), args.tol, args.max_iters);
            solve_prue_auto(&inst, opts)?
        }
        SolveModel::So => {
            let opts = solver_opts(SolverOptions::frank_wolfe(), args.tol, args.max_iters);
            solve_so(&inst, opts)?
        }
        SolveModel::Uepe => {
            let path = args.lambda.ok_or_else(|| {
                posat::Error::InvalidArgument("--lambda is required for uepe".into())
            })?;
            let lambda = read_lambda_json(&path, inst.num_ods(), inst.num_arcs())?;
            let opts = solver_opts(SolverOptions::fixed_point(), args.tol, args.max_iters);
            solve_uepe(&inst, &lambda, opts)?
        }
    };
    write_report(&args.out, &inst, &report)?;
    println!(
        "z = {}  relative_gap = {}  iterations = {}  converged = {}",
        fmt_sig(report.z),
        fmt_sig(report.relative_gap),
        report.iterations,
        report.converged
    );
    Ok(if report.converged { 0 } else { 2 })
}

fn cmd_search(args: SearchArgs, threads: usize) -> posat::Result<u8> {
    let inst = Instance::load(&args.instance)?;
    let grid = match (&args.kappa, &args.kappa_grid) {
        (Some(k), None) => vec![*k],
        (None, Some(text)) => parse_grid(text)?,
        _ => {
            return Err(posat::Error::InvalidArgument(
                "exactly one of --kappa or --kappa-grid is required".into(),
            ))
        }
    };
    let mut opts = SearchOptions {
        starts: args.starts,
        seed: args.seed,
        budget: args.budget,
        threads,
        ..SearchOptions::default()
    };
    if let Some(tol) = args.tol {
        opts.solver = opts.solver.with_tol(tol);
    }
    if let Some(m) = args.max_iters {
        opts.solver = opts.solver.with_max_iters(m);
    }
    if let Some(tol) = args.prue_tol {
        opts.prue_solver = opts.prue_solver.with_tol(tol);
    }
    if let Some(t) = args.kkt_tol {
        opts.kkt_tol = t;
    }
    if let Some(s) = args.certify_slack {
        opts.certify_slack = s;
    }
    if let Some(u) = args.used_tol {
        opts.used_tol = u;
    }

    let mut csv =
        String::from("kappa,z_prue,z_worst,posat,zeta_bound,simple_bound,converged_starts\n");
    let mut failures = 0usize;
    if grid.len() == 1 {
        match search_worst_posat(&inst, grid[0], &opts) {
            Ok(row) => {
                csv.push_str(&search_row(&row));
                // full result plus companions for the verify workflow
                std::fs::write(
                    args.out.with_extension("result.json"),
                    serde_json::to_string_pretty(&row)?,
                )?;
                write_lambda_json(&args.out.with_extension("lambda.json"), &row.best_lambda)?;
                write_class_flow_csv(&args.out.with_extension("flow.csv"), &row.best_flow)?;
            }
            Err(err) => {
                eprintln!("kappa {}: {err}", grid[0]);
                failures += 1;
            }
        }
    } else {
        for (kappa, row) in posat_curve(&inst, &grid, &opts)? {
            match row {
                Ok(row) => csv.push_str(&search_row(&row)),
                Err(err) => {
                    eprintln!("kappa {kappa}: {err}");
                    failures += 1;
                }
            }
        }
    }
    std::fs::write(&args.out, csv)?;
    Ok(if failures > 0 { 2 } else { 0 })
}

fn search_row(row: &posat::analysis::PoSatResult) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        fmt_sig(row.kappa),
        fmt_sig(row.z_prue),
        fmt_sig(row.z_worst),
        fmt_sig(row.posat),
        fmt_sig(row.zeta),
        fmt_sig(row.simple_bound),
        row.converged_starts
    )
}

fn cmd_bounds(args: BoundsArgs) -> posat::Result<u8> {
    let grid = match (&args.kappa, &args.kappa_grid) {
        (Some(k), None) => vec![*k],
        (None, Some(text)) => parse_grid(text)?,
        _ => {
            return Err(posat::Error::InvalidArgument(
                "exactly one of --kappa or --kappa-grid is required".into(),
            ))
        }
    };
    let inst = args.instance.as_deref().map(Instance::load).transpose()?;
    let mut csv = String::from("kappa,zeta_bound,simple_bound");
    if inst.is_some() {
        csv.push_str(",deviation_bound");
    }
    csv.push('\n');
    for &kappa in &grid {
        csv.push_str(&fmt_sig(kappa));
        csv.push(',');
        csv.push_str(&fmt_sig(zeta_bound(kappa, args.degree)?));
        csv.push(',');
        csv.push_str(&fmt_sig(simple_posat_bound(kappa, args.degree)?));
        if let Some(inst) = &inst {
            csv.push(',');
            csv.push_str(&fmt_sig(deviation_ratio_bound(inst, kappa)?));
        }
        csv.push('\n');
    }
    std::fs::write(&args.out, csv)?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> posat::Result<u8> {
    let inst = Instance::load(&args.instance)?;
    let flow = read_class_flow_csv(&args.flow, inst.num_ods(), inst.num_arcs())?;
    flow.check_conservation(&inst.network, &inst.demands)?;
    let report = match (args.kappa, args.epsilon_additive) {
        (Some(kappa), None) => verify_msatue(&inst, &flow, kappa, 1e-9)?,
        (None, Some(eps)) => verify_asatue(&inst, &flow, eps, 1e-9)?,
        _ => {
            return Err(posat::Error::InvalidArgument(
                "exactly one of --kappa or --epsilon-additive is required".into(),
            ))
        }
    };
    println!("status: {:?}", report.status);
    println!("threshold: {}", fmt_sig(report.threshold));
    println!("smallest_certifying: {}", fmt_sig(report.certifying));
    for od in &report.per_od {
        println!(
            "od {}: worst_used = {}  shortest = {}  excess = {}{}",
            od.od,
            fmt_sig(od.worst_used_cost),
            fmt_sig(od.shortest_cost),
            fmt_sig(if args.kappa.is_some() {
                od.ratio_excess
            } else {
                od.additive_excess
            }),
            if od.zero_shortest {
                "  (zero shortest path: ratio undefined)"
            } else {
                ""
            }
        );
    }
    if let Some(kappa) = args.kappa {
        let v = aggregate_to_arcflow(&flow);
        let nc = check_necessary_condition(&inst, &v, kappa, 1e-9)?;
        println!(
            "necessary_condition: holds = {}  slack = {}",
            nc.holds,
            fmt_sig(nc.slack)
        );
    }
    if let Some(path) = &args.lambda {
        let lambda = read_lambda_json(path, inst.num_ods(), inst.num_arcs())?;
        let kkt = kkt_certificate(&inst, &lambda, &flow, 1e-8)?;
        println!(
            "kkt: stationarity = {}  complementarity = {}  conservation = {}  pass = {}",
            fmt_sig(kkt.stationarity),
            fmt_sig(kkt.complementarity),
            fmt_sig(kkt.conservation),
            kkt.pass
        );
    }
    Ok(if report.certified() { 0 } else { 1 })
}

fn cmd_gen(args: GenArgs) -> posat::Result<u8> {
    let inst = match args.kind {
        GenKind::Example1 => gen_example1(require(args.q, "--q")?)?,
        GenKind::Example2 => gen_example2(require(args.q, "--q")?)?,
        GenKind::Circular => {
            let convention = match args.convention {
                Convention::Kappa => CircularRatio::RatioIsKappa,
                Convention::Posat => CircularRatio::RatioIsPosat,
            };
            gen_circular(
                require(args.kappa, "--kappa")?,
                require(args.degree, "--degree")?,
                convention,
            )?
        }
        GenKind::NineNodeAsym => {
            let path = require(args.demands, "--demands")?;
            let entries = output::read_demand_csv(&path)?;
            gen_nine_node_asymmetric(&entries)?
        }
    };
    inst.save(&args.out)?;
    println!(
        "wrote {} ({} nodes, {} arcs, {} od pairs)",
        args.out.display(),
        inst.network.num_nodes(),
        inst.num_arcs(),
        inst.num_ods()
    );
    Ok(0)
}

fn require<T>(value: Option<T>, flag: &str) -> posat::Result<T> {
    value.ok_or_else(|| posat::Error::InvalidArgument(format!("{flag} is required for this type")))
}

fn solver_opts(base: SolverOptions, tol: Option<f64>, max_iters: Option<usize>) -> SolverOptions {
    let mut opts = base;
    if let Some(tol) = tol {
        opts = opts.with_tol(tol);
    }
    if let Some(m) = max_iters {
        opts = opts.with_max_iters(m);
    }
    opts
}

fn parse_grid(text: &str) -> posat::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| posat::Error::InvalidArgument(format!("bad kappa value {s:?}")))
        })
        .collect()
}
